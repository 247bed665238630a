//! Whether an assumption restricts what can be observed.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::universe::{Assumption, Universe};
use crate::value::Value;

use super::linear::feasible_at;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum APriori {
    Refutable,
    Irrefutable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RefutabilityVerdict {
    pub a_priori: APriori,
    /// Present only when an observation was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refuted_at_l0: Option<bool>,
}

/// Refutable iff the assumption shrinks `Img(λ)`; refuted at `l0` iff `l0`
/// leaves the restricted image.
///
/// Enumerable universes are decided exactly in one scan. Polytopes are
/// decided by linear feasibility: the restricted image is compared with the
/// images of the simplex vertices, which is conclusive for linear
/// observations on an unconstrained simplex and conclusive for "refutable"
/// in general.
pub fn refutability(u: &Universe, a: &Assumption, l0: Option<&Value>) -> Result<RefutabilityVerdict> {
    if u.as_polytope().is_some() {
        return polytope_refutability(u, a, l0);
    }
    #[derive(Default)]
    struct Acc {
        all: BTreeSet<Value>,
        kept: BTreeSet<Value>,
    }
    let tol = u.quantizer().step();
    let acc = u.scan(
        Acc::default,
        |acc, s| {
            let l = u.observe(s);
            if a.holds(s, tol) {
                acc.kept.insert(l.clone());
            }
            acc.all.insert(l);
        },
        |acc, other| {
            acc.all.extend(other.all);
            acc.kept.extend(other.kept);
        },
    )?;
    let a_priori = if acc.kept == acc.all {
        APriori::Irrefutable
    } else {
        APriori::Refutable
    };
    let refuted_at_l0 = match l0 {
        None => None,
        Some(l) if !acc.all.contains(l) => return Err(Error::UnreachableObservation(l.to_string())),
        Some(l) => Some(!acc.kept.contains(l)),
    };
    Ok(RefutabilityVerdict {
        a_priori,
        refuted_at_l0,
    })
}

fn polytope_refutability(u: &Universe, a: &Assumption, l0: Option<&Value>) -> Result<RefutabilityVerdict> {
    let poly = u.as_polytope().expect("checked by caller");
    let restricted = match u.restrict(a) {
        Ok(r) => Some(r),
        Err(Error::EmptyUniverse { .. }) => None,
        Err(e) => return Err(e),
    };
    let tol = u.quantizer().step();
    let q = u.quantizer();
    let mut refutable = false;
    for c in 0..poly.cells {
        let vertex: Vec<f64> = (0..poly.cells).map(|j| if j == c { 1.0 } else { 0.0 }).collect();
        if !poly.contains(&vertex, tol) {
            continue;
        }
        let l = poly.observe(&vertex, &q);
        let reachable = match &restricted {
            Some(r) => feasible_at(r, &l)?,
            None => false,
        };
        if !reachable {
            refutable = true;
            break;
        }
    }
    let conclusive = refutable
        || (poly.constraints.is_empty()
            && poly.independence.is_empty()
            && poly.observation.iter().all(|f| f.is_linear()));
    if !conclusive {
        return Err(Error::NotLinear(format!(
            "a-priori refutability of `{}` on this polytope needs an enumerable universe",
            a.name()
        )));
    }
    let refuted_at_l0 = match l0 {
        None => None,
        Some(l) => {
            if !feasible_at(u, l)? {
                return Err(Error::UnreachableObservation(l.to_string()));
            }
            Some(match &restricted {
                Some(r) => !feasible_at(r, l)?,
                None => true,
            })
        }
    };
    Ok(RefutabilityVerdict {
        a_priori: if refutable {
            APriori::Refutable
        } else {
            APriori::Irrefutable
        },
        refuted_at_l0,
    })
}
