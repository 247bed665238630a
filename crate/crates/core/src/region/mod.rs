//! Identification regions and the operations that compute them.

mod certify;
mod enumerate;
mod linear;
mod reduced;
mod refute;

use std::collections::BTreeSet;
use std::fmt;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::value::Value;

pub use certify::{certify, certify_lp, compose_identifiable, Certificate, Provenance, Quantity};
pub(crate) use enumerate::profile_of;
pub use enumerate::{
    identification_profile, is_strongly_nonidentifiable, region_enumerate, regions_by_observation, Profile,
};
pub use linear::{
    feasible_at, lp_constraints_at, region_lp, region_lp_with, LpBounds, LpMethod, LpOptions, EPS_LP,
    EXACT_VARIABLE_LIMIT,
};
pub use reduced::{reduced_form, Combiner, CombinerFn, Monotonicity, ReducedForm};
pub use refute::{refutability, APriori, RefutabilityVerdict};

/// Closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidPoint(format!("[{lo}, {hi}] is not an interval")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn contains_interval(&self, other: &Interval, tol: f64) -> bool {
        other.lo >= self.lo - tol && other.hi <= self.hi + tol
    }

    pub fn approx_eq(&self, other: &Interval, tol: f64) -> bool {
        (self.lo - other.lo).abs() <= tol && (self.hi - other.hi).abs() <= tol
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", Value::real(self.lo), Value::real(self.hi))
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("lo", &Value::real(self.lo))?;
        m.serialize_entry("hi", &Value::real(self.hi))?;
        m.end()
    }
}

#[derive(Debug, Clone)]
pub enum RegionKind {
    Set(BTreeSet<Value>),
    Interval(Interval),
    Reduced(ReducedForm),
}

/// An identification region. `strong` is set when the region is the whole
/// estimand image (and that image has more than one point).
#[derive(Debug, Clone)]
pub struct Region {
    pub kind: RegionKind,
    pub strong: bool,
}

impl Region {
    pub fn set<I: IntoIterator<Item = Value>>(values: I) -> Self {
        Region {
            kind: RegionKind::Set(values.into_iter().collect()),
            strong: false,
        }
    }

    pub fn interval(iv: Interval) -> Self {
        Region {
            kind: RegionKind::Interval(iv),
            strong: false,
        }
    }

    pub fn with_strong(mut self, strong: bool) -> Self {
        self.strong = strong;
        self
    }

    pub fn as_set(&self) -> Option<&BTreeSet<Value>> {
        match &self.kind {
            RegionKind::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_interval(&self) -> Option<Interval> {
        match &self.kind {
            RegionKind::Interval(iv) => Some(*iv),
            _ => None,
        }
    }

    /// Reduced forms are replaced by their materialization; other kinds are returned as is.
    pub fn materialize(&self) -> Result<Region> {
        match &self.kind {
            RegionKind::Reduced(r) => Ok(r.materialize()?.with_strong(self.strong)),
            _ => Ok(self.clone()),
        }
    }

    /// The single value, if the region has exactly one (intervals: `lo == hi`).
    pub fn singleton(&self) -> Option<Value> {
        match &self.kind {
            RegionKind::Set(s) if s.len() == 1 => s.iter().next().cloned(),
            RegionKind::Interval(iv) if Value::real(iv.lo) == Value::real(iv.hi) => Some(Value::real(iv.lo)),
            RegionKind::Reduced(r) => r.materialize().ok()?.singleton(),
            _ => None,
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.singleton().is_some()
    }

    /// Smallest interval containing the region (scalar regions only).
    pub fn hull(&self) -> Result<Interval> {
        match &self.kind {
            RegionKind::Interval(iv) => Ok(*iv),
            RegionKind::Set(s) => {
                let xs = scalars(s)?;
                let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Interval::new(lo, hi)
            }
            RegionKind::Reduced(r) => r.materialize()?.hull(),
        }
    }

    /// Inclusion with tolerance `tol` on interval endpoints.
    pub fn is_subset_of(&self, other: &Region, tol: f64) -> Result<bool> {
        let a = self.materialize()?;
        let b = other.materialize()?;
        Ok(match (&a.kind, &b.kind) {
            (RegionKind::Set(x), RegionKind::Set(y)) => x.is_subset(y),
            (RegionKind::Set(x), RegionKind::Interval(iv)) => scalars(x)?.iter().all(|&v| iv.contains(v, tol)),
            (RegionKind::Interval(x), RegionKind::Interval(y)) => y.contains_interval(x, tol),
            (RegionKind::Interval(x), RegionKind::Set(y)) => {
                x.width() <= tol && scalars(y)?.iter().any(|&v| (v - x.lo).abs() <= tol)
            }
            _ => unreachable!("materialized"),
        })
    }

    /// Same region: sets compare exactly, intervals by endpoints, and a set
    /// against an interval by its hull.
    pub fn agrees_with(&self, other: &Region, tol: f64) -> Result<bool> {
        let a = self.materialize()?;
        let b = other.materialize()?;
        Ok(match (&a.kind, &b.kind) {
            (RegionKind::Set(x), RegionKind::Set(y)) => x == y,
            _ => a.hull()?.approx_eq(&b.hull()?, tol),
        })
    }
}

fn scalars(s: &BTreeSet<Value>) -> Result<Vec<f64>> {
    s.iter()
        .map(|v| {
            v.as_f64()
                .ok_or_else(|| Error::InvalidPoint(format!("{v} is not a scalar")))
        })
        .collect()
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RegionKind::Set(s) => {
                write!(f, "{{")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
            RegionKind::Interval(iv) => write!(f, "{iv}"),
            RegionKind::Reduced(r) => write!(f, "{r}"),
        }
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.kind {
            RegionKind::Set(values) => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("kind", "set")?;
                m.serialize_entry("values", values)?;
                m.end()
            }
            RegionKind::Interval(iv) => {
                let mut m = s.serialize_map(Some(3))?;
                m.serialize_entry("kind", "interval")?;
                m.serialize_entry("lo", &Value::real(iv.lo))?;
                m.serialize_entry("hi", &Value::real(iv.hi))?;
                m.end()
            }
            RegionKind::Reduced(r) => {
                let mut m = s.serialize_map(Some(4))?;
                m.serialize_entry("kind", "reduced_form")?;
                m.serialize_entry("identified", &r.identified)?;
                m.serialize_entry("free", r.free.as_ref())?;
                m.serialize_entry("combiner", &r.combiner.label)?;
                m.end()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reals(xs: &[f64]) -> Region {
        Region::set(xs.iter().map(|&x| Value::real(x)))
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
        assert_eq!(Interval::new(0.45, 0.7).unwrap().to_string(), "[0.45, 0.7]");
    }

    #[test]
    fn inclusion_across_kinds() {
        let s = reals(&[0.2, 0.5]);
        let iv = Region::interval(Interval::new(0.0, 0.5).unwrap());
        assert!(s.is_subset_of(&iv, 1e-12).unwrap());
        assert!(!iv.is_subset_of(&s, 1e-12).unwrap());
        assert!(reals(&[0.5]).is_subset_of(&s, 0.0).unwrap());
        assert!(Region::interval(Interval::point(0.5)).is_subset_of(&s, 1e-12).unwrap());
    }

    #[test]
    fn agreement_uses_hull_for_mixed_kinds() {
        let s = reals(&[0.45, 0.5, 0.7]);
        let iv = Region::interval(Interval::new(0.45, 0.7).unwrap());
        assert!(s.agrees_with(&iv, 1e-12).unwrap());
        assert!(!reals(&[0.45]).agrees_with(&s, 1e-12).unwrap());
    }

    #[test]
    fn singletons() {
        assert_eq!(reals(&[0.4]).singleton(), Some(Value::real(0.4)));
        assert_eq!(
            Region::interval(Interval::new(0.4, 0.4 + 1e-12).unwrap()).singleton(),
            Some(Value::real(0.4))
        );
        assert!(!reals(&[0.0, 1.0]).is_singleton());
    }

    #[test]
    fn serialization_is_clean() {
        let json = serde_json::to_string(&reals(&[0.0, 0.5, 1.0])).unwrap();
        assert_eq!(json, r#"{"kind":"set","values":[0,0.5,1]}"#);
        let json = serde_json::to_string(&Region::interval(Interval::new(-0.3, 0.7).unwrap())).unwrap();
        assert_eq!(json, r#"{"kind":"interval","lo":-0.3,"hi":0.7}"#);
    }
}
