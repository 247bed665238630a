//! Identified quantities carrying a record of why they are identified.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::universe::Universe;
use crate::value::Value;

use super::{linear, region_enumerate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// The region at the observation is a single point.
    SingletonRegion,
    /// The quantity is a known function of the observation itself.
    FunctionOfObservation,
    /// A known function of identified quantities.
    Composition,
}

/// Why a quantity is identified, and at which observation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub provenance: Provenance,
    pub at: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub certificate: Option<Certificate>,
}

impl Quantity {
    pub fn uncertified(value: f64) -> Self {
        Quantity {
            value,
            certificate: None,
        }
    }

    /// `g(l0)` for a known `g`: identified wherever it is defined.
    pub fn of_observation<G: FnOnce(&Value) -> f64>(l0: &Value, g: G) -> Self {
        Quantity {
            value: g(l0),
            certificate: Some(Certificate {
                provenance: Provenance::FunctionOfObservation,
                at: l0.clone(),
            }),
        }
    }

    pub fn is_certified(&self) -> bool {
        self.certificate.is_some()
    }
}

/// The estimand's value at `l0`, certified if its region there is a singleton.
pub fn certify(u: &Universe, l0: &Value) -> Result<Quantity> {
    let region = region_enumerate(u, l0)?;
    let set = region.as_set().expect("enumeration yields sets");
    let Some(v) = region.singleton() else {
        return Err(Error::NotIdentified { size: set.len() });
    };
    singleton(v, l0)
}

/// As [`certify`], for a polytope universe solved by linear programming.
pub fn certify_lp(u: &Universe, l0: &Value) -> Result<Quantity> {
    let bounds = linear::region_lp(u, l0)?;
    match bounds.region().singleton() {
        Some(v) => singleton(v, l0),
        None => Err(Error::NotIdentified { size: 2 }),
    }
}

fn singleton(v: Value, l0: &Value) -> Result<Quantity> {
    let value = v
        .as_f64()
        .ok_or_else(|| Error::InvalidPoint(format!("{v} is not a scalar")))?;
    Ok(Quantity {
        value,
        certificate: Some(Certificate {
            provenance: Provenance::SingletonRegion,
            at: l0.clone(),
        }),
    })
}

/// `f(parts)`, certified when every part is certified at the same observation.
pub fn compose_identifiable<F: FnOnce(&[f64]) -> f64>(parts: &[Quantity], f: F) -> Result<Quantity> {
    let mut at: Option<&Value> = None;
    for (i, p) in parts.iter().enumerate() {
        let Some(c) = &p.certificate else {
            return Err(Error::UncertifiedInput(format!("part {i} has no certificate")));
        };
        match at {
            None => at = Some(&c.at),
            Some(a) if *a != c.at => {
                return Err(Error::UncertifiedInput(format!(
                    "part {i} is certified at {}, not {a}",
                    c.at
                )))
            }
            Some(_) => {}
        }
    }
    let at = at.ok_or_else(|| Error::UncertifiedInput("nothing to compose".into()))?;
    let values: Vec<f64> = parts.iter().map(|p| p.value).collect();
    Ok(Quantity {
        value: f(&values),
        certificate: Some(Certificate {
            provenance: Provenance::Composition,
            at: at.clone(),
        }),
    })
}
