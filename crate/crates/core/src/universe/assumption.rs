use std::fmt;
use std::sync::Arc;

use super::polytope::{Independence, LinearConstraint};
use super::State;

/// Polytope-side description of an assumption.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearForm {
    Constraints(Vec<LinearConstraint>),
    /// Bilinear; linearized once one margin is pinned.
    Independence(Independence),
}

pub type ConstraintFn = Arc<dyn Fn(&State) -> f64 + Send + Sync>;

/// A real-valued function on states, satisfied where it vanishes.
#[derive(Clone)]
pub struct Assumption {
    name: String,
    constraint: ConstraintFn,
    linear_form: Option<LinearForm>,
}

impl Assumption {
    pub fn new<F>(name: impl Into<String>, constraint: F) -> Self
    where
        F: Fn(&State) -> f64 + Send + Sync + 'static,
    {
        Assumption {
            name: name.into(),
            constraint: Arc::new(constraint),
            linear_form: None,
        }
    }

    /// The assumption that holds everywhere.
    pub fn always() -> Self {
        Assumption::new("always", |_| 0.0)
    }

    pub fn with_linear_form(mut self, form: LinearForm) -> Self {
        self.linear_form = Some(form);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn linear_form(&self) -> Option<&LinearForm> {
        self.linear_form.as_ref()
    }

    pub fn evaluate(&self, state: &State) -> f64 {
        (self.constraint)(state)
    }

    /// `|A(S)| < tol`.
    pub fn holds(&self, state: &State, tol: f64) -> bool {
        self.evaluate(state).abs() < tol
    }
}

impl fmt::Debug for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Assumption")
            .field("name", &self.name)
            .field("linear_form", &self.linear_form.is_some())
            .finish()
    }
}
