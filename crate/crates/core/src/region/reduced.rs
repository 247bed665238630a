//! Regions written as identified parts combined with one free part.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::value::Value;

use super::{Interval, Region, RegionKind};

pub type CombinerFn = Arc<dyn Fn(&BTreeMap<String, f64>, f64) -> f64 + Send + Sync>;

/// Behaviour of a combiner in its free argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Unknown,
}

#[derive(Clone)]
pub struct Combiner {
    pub label: String,
    pub f: CombinerFn,
    pub monotonicity: Monotonicity,
}

impl Combiner {
    pub fn new<F>(label: impl Into<String>, monotonicity: Monotonicity, f: F) -> Self
    where
        F: Fn(&BTreeMap<String, f64>, f64) -> f64 + Send + Sync + 'static,
    {
        Combiner {
            label: label.into(),
            f: Arc::new(f),
            monotonicity,
        }
    }

    pub fn apply(&self, identified: &BTreeMap<String, f64>, free: f64) -> f64 {
        (self.f)(identified, free)
    }
}

impl fmt::Debug for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Combiner")
            .field("label", &self.label)
            .field("monotonicity", &self.monotonicity)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct ReducedForm {
    pub identified: BTreeMap<String, Value>,
    pub free: Box<Region>,
    pub combiner: Combiner,
}

impl ReducedForm {
    fn identified_f64(&self) -> Result<BTreeMap<String, f64>> {
        self.identified
            .iter()
            .map(|(k, v)| {
                v.as_f64()
                    .map(|x| (k.clone(), x))
                    .ok_or_else(|| Error::InvalidPoint(format!("identified part {k} = {v} is not a scalar")))
            })
            .collect()
    }

    /// Interval free regions map by endpoint evaluation (monotone combiners
    /// only); set free regions map pointwise.
    pub fn materialize(&self) -> Result<Region> {
        let ids = self.identified_f64()?;
        let free = self.free.materialize()?;
        match &free.kind {
            RegionKind::Set(values) => {
                let mapped = values
                    .iter()
                    .map(|v| {
                        v.as_f64()
                            .map(|x| Value::real(self.combiner.apply(&ids, x)))
                            .ok_or_else(|| Error::InvalidPoint(format!("free value {v} is not a scalar")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Region::set(mapped))
            }
            RegionKind::Interval(iv) => {
                let at_lo = self.combiner.apply(&ids, iv.lo);
                let at_hi = self.combiner.apply(&ids, iv.hi);
                let iv = match self.combiner.monotonicity {
                    Monotonicity::Increasing => Interval::new(at_lo, at_hi)?,
                    Monotonicity::Decreasing => Interval::new(at_hi, at_lo)?,
                    Monotonicity::Unknown => return Err(Error::NonMonotoneCombiner(self.combiner.label.clone())),
                };
                Ok(Region::interval(iv))
            }
            RegionKind::Reduced(_) => unreachable!("materialized"),
        }
    }
}

impl fmt::Display for ReducedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} with ", self.combiner.label)?;
        for (k, v) in &self.identified {
            write!(f, "{k} = {v}, ")?;
        }
        write!(f, "free in {}", self.free)
    }
}

/// A region in reduced form; the free part must be a valid region.
pub fn reduced_form(identified: BTreeMap<String, Value>, free: Region, combiner: Combiner) -> Region {
    Region {
        kind: RegionKind::Reduced(ReducedForm {
            identified,
            free: Box::new(free),
            combiner,
        }),
        strong: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(pairs: &[(&str, f64)]) -> BTreeMap<String, Value> {
        pairs.iter().map(|&(k, v)| (k.to_string(), Value::real(v))).collect()
    }

    #[test]
    fn missing_data_bound_by_endpoints() {
        let c = Combiner::new("t2*t1 + t*(1-t1)", Monotonicity::Increasing, |m, t| {
            m["t2"] * m["t1"] + t * (1.0 - m["t1"])
        });
        let r = reduced_form(
            ids(&[("t1", 0.75), ("t2", 0.6)]),
            Region::interval(Interval::new(0.0, 1.0).unwrap()),
            c,
        );
        let iv = r.materialize().unwrap().as_interval().unwrap();
        assert!(iv.approx_eq(&Interval::new(0.45, 0.7).unwrap(), 1e-12));
    }

    #[test]
    fn decreasing_combiner_swaps_endpoints() {
        let c = Combiner::new("0.2 - t", Monotonicity::Decreasing, |_, t| 0.2 - t);
        let r = reduced_form(
            ids(&[("t1", 0.5), ("t2", 0.7), ("t3", 0.3)]),
            Region::interval(Interval::new(-0.5, 0.5).unwrap()),
            c,
        );
        let iv = r.materialize().unwrap().as_interval().unwrap();
        assert!(iv.approx_eq(&Interval::new(-0.3, 0.7).unwrap(), 1e-12));
    }

    #[test]
    fn singleton_free_region_gives_singleton() {
        let c = Combiner::new("t + 1", Monotonicity::Increasing, |_, t| t + 1.0);
        let r = reduced_form(BTreeMap::new(), Region::set([Value::real(0.5)]), c);
        assert_eq!(r.singleton(), Some(Value::real(1.5)));
    }

    #[test]
    fn non_monotone_needs_enumeration() {
        let c = Combiner::new("t^2", Monotonicity::Unknown, |_, t| t * t);
        let r = reduced_form(
            BTreeMap::new(),
            Region::interval(Interval::new(-1.0, 1.0).unwrap()),
            c.clone(),
        );
        assert_eq!(r.materialize().unwrap_err(), Error::NonMonotoneCombiner("t^2".into()));
        let set = reduced_form(BTreeMap::new(), Region::set([-1.0, 0.0, 1.0].map(Value::real)), c);
        assert_eq!(set.materialize().unwrap().as_set().unwrap().len(), 2);
    }
}
