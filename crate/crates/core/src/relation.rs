//! Finite binary relations between an estimand space and an observation space.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::universe::Universe;
use crate::value::Value;

/// The four structural properties of a relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub injective: bool,
    pub surjective: bool,
    pub functional: bool,
    pub left_total: bool,
}

/// A relation `R ⊆ Θ × Λ` with both spaces made explicit.
///
/// Properties depend on the declared spaces, not only on the pairs: a
/// relation can fail surjectivity because `lambda_space` holds values no
/// pair reaches. The relation keeps an index from each observation to its
/// preimage, which is what identification queries hit.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryRelation {
    theta_space: BTreeSet<Value>,
    lambda_space: BTreeSet<Value>,
    pairs: BTreeSet<(Value, Value)>,
    by_observation: BTreeMap<Value, BTreeSet<Value>>,
    by_estimand: BTreeMap<Value, BTreeSet<Value>>,
}

impl BinaryRelation {
    /// Builds a relation, rejecting pairs whose components fall outside the
    /// declared spaces.
    pub fn new<T, L, P>(theta_space: T, lambda_space: L, pairs: P) -> Result<Self>
    where
        T: IntoIterator<Item = Value>,
        L: IntoIterator<Item = Value>,
        P: IntoIterator<Item = (Value, Value)>,
    {
        let theta_space: BTreeSet<Value> = theta_space.into_iter().collect();
        let lambda_space: BTreeSet<Value> = lambda_space.into_iter().collect();
        let pairs: BTreeSet<(Value, Value)> = pairs.into_iter().collect();
        for (t, l) in &pairs {
            if !theta_space.contains(t) {
                return Err(Error::MalformedRelation(format!("{t} is not in the estimand space")));
            }
            if !lambda_space.contains(l) {
                return Err(Error::MalformedRelation(format!("{l} is not in the observation space")));
            }
        }
        Ok(Self::from_parts(theta_space, lambda_space, pairs))
    }

    /// Relation whose spaces are exactly the images of the pairs.
    pub fn from_pairs<P: IntoIterator<Item = (Value, Value)>>(pairs: P) -> Self {
        let pairs: BTreeSet<(Value, Value)> = pairs.into_iter().collect();
        let theta_space = pairs.iter().map(|(t, _)| t.clone()).collect();
        let lambda_space = pairs.iter().map(|(_, l)| l.clone()).collect();
        Self::from_parts(theta_space, lambda_space, pairs)
    }

    fn from_parts(
        theta_space: BTreeSet<Value>,
        lambda_space: BTreeSet<Value>,
        pairs: BTreeSet<(Value, Value)>,
    ) -> Self {
        let mut by_observation: BTreeMap<Value, BTreeSet<Value>> = BTreeMap::new();
        let mut by_estimand: BTreeMap<Value, BTreeSet<Value>> = BTreeMap::new();
        for (t, l) in &pairs {
            by_observation.entry(l.clone()).or_default().insert(t.clone());
            by_estimand.entry(t.clone()).or_default().insert(l.clone());
        }
        BinaryRelation {
            theta_space,
            lambda_space,
            pairs,
            by_observation,
            by_estimand,
        }
    }

    pub fn theta_space(&self) -> &BTreeSet<Value> {
        &self.theta_space
    }

    pub fn lambda_space(&self) -> &BTreeSet<Value> {
        &self.lambda_space
    }

    pub fn pairs(&self) -> &BTreeSet<(Value, Value)> {
        &self.pairs
    }

    pub fn contains(&self, theta: &Value, lambda: &Value) -> bool {
        self.by_observation.get(lambda).is_some_and(|s| s.contains(theta))
    }

    pub fn check_properties(&self) -> PropertyReport {
        PropertyReport {
            injective: self.by_observation.values().all(|s| s.len() <= 1),
            surjective: self.lambda_space.iter().all(|l| self.by_observation.contains_key(l)),
            functional: self.by_estimand.values().all(|s| s.len() <= 1),
            left_total: self.theta_space.iter().all(|t| self.by_estimand.contains_key(t)),
        }
    }

    /// Estimand values related to `l0`.
    pub fn preimage(&self, l0: &Value) -> Result<&BTreeSet<Value>> {
        static EMPTY: BTreeSet<Value> = BTreeSet::new();
        if !self.lambda_space.contains(l0) {
            return Err(Error::UnreachableObservation(l0.to_string()));
        }
        Ok(self.by_observation.get(l0).unwrap_or(&EMPTY))
    }

    /// True iff exactly one estimand value is related to `l0`.
    pub fn identifiable_at(&self, l0: &Value) -> Result<bool> {
        Ok(self.preimage(l0)?.len() == 1)
    }

    pub fn identifiable_everywhere(&self) -> bool {
        self.check_properties().injective
    }
}

/// The relation `{(θ(S), λ(S)) : S ∈ u}` with both spaces set to the images.
///
/// States are scanned in parallel; the set union makes the result
/// independent of how the universe is partitioned.
pub fn induce(u: &Universe) -> Result<BinaryRelation> {
    let pairs = u.scan(
        BTreeSet::new,
        |acc, s| {
            acc.insert((u.estimate(s), u.observe(s)));
        },
        |acc, other| acc.extend(other),
    )?;
    Ok(BinaryRelation::from_pairs(pairs))
}
