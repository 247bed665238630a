//! Average treatment effect from `(P(Y* | Z), P(Z))`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::region::{reduced_form, Combiner, Interval, Monotonicity, Region};
use crate::universe::{
    Assumption, Factorization, Functional, Independence, LinearConstraint, LinearForm, Polytope, SimplexGrid, Universe,
};
use crate::value::{decimal_rational, Quantizer, Value};

/// `ϑ1 = P(Z=1)`, `ϑ2 = E[Y* | Z=1]`, `ϑ3 = E[Y* | Z=0]`, potential outcomes in `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalPoint {
    pub p_z1: f64,
    pub e_yobs_z1: f64,
    pub e_yobs_z0: f64,
    pub outcome_bounds: (f64, f64),
}

impl CausalPoint {
    pub fn new(p_z1: f64, e_yobs_z1: f64, e_yobs_z0: f64, outcome_bounds: (f64, f64)) -> Result<Self> {
        let c = CausalPoint {
            p_z1,
            e_yobs_z1,
            e_yobs_z0,
            outcome_bounds,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.outcome_bounds;
        let finite = [self.p_z1, self.e_yobs_z1, self.e_yobs_z0, a, b]
            .iter()
            .all(|x| x.is_finite());
        if !finite || !(0.0..=1.0).contains(&self.p_z1) || a > b {
            return Err(Error::InvalidPoint(format!("{self:?}")));
        }
        let arms = [
            (self.p_z1, self.e_yobs_z1, "E[Y*|Z=1]"),
            (1.0 - self.p_z1, self.e_yobs_z0, "E[Y*|Z=0]"),
        ];
        for (mass, mean, name) in arms {
            if mass > 0.0 && !(a..=b).contains(&mean) {
                return Err(Error::InvalidPoint(format!("{name} = {mean} lies outside [{a}, {b}]")));
            }
        }
        Ok(())
    }

    /// `ϑ2ϑ1 - ϑ3(1-ϑ1)`; an arm with no units contributes nothing.
    pub fn identified_part(&self) -> f64 {
        let treated = if self.p_z1 > 0.0 {
            self.e_yobs_z1 * self.p_z1
        } else {
            0.0
        };
        let control = if self.p_z1 < 1.0 {
            self.e_yobs_z0 * (1.0 - self.p_z1)
        } else {
            0.0
        };
        treated - control
    }

    /// Range of `ϑ = ϑ1 E[Y(0)|Z=1] - (1-ϑ1) E[Y(1)|Z=0]`, the part the data leave free.
    pub fn free_interval(&self) -> Interval {
        let (a, b) = self.outcome_bounds;
        let t = self.p_z1;
        Interval {
            lo: t * a - (1.0 - t) * b,
            hi: t * b - (1.0 - t) * a,
        }
    }
}

/// `[id + (1-ϑ1)a - ϑ1 b, id + (1-ϑ1)b - ϑ1 a]` with `id = ϑ2ϑ1 - ϑ3(1-ϑ1)`;
/// the width is `b - a` for every `ϑ1`.
pub fn causal_ate_bounds(c: &CausalPoint) -> Result<Interval> {
    c.validate()?;
    let id = c.identified_part();
    let free = c.free_interval();
    Interval::new(id - free.hi, id - free.lo)
}

/// Exact version over the decimal values of the inputs.
pub fn causal_ate_bounds_exact(c: &CausalPoint) -> Result<(BigRational, BigRational)> {
    c.validate()?;
    let t1 = decimal_rational(c.p_z1);
    let rest = BigRational::one() - &t1;
    let (a, b) = (
        decimal_rational(c.outcome_bounds.0),
        decimal_rational(c.outcome_bounds.1),
    );
    let treated = if t1.is_zero() {
        BigRational::zero()
    } else {
        decimal_rational(c.e_yobs_z1) * &t1
    };
    let control = if rest.is_zero() {
        BigRational::zero()
    } else {
        decimal_rational(c.e_yobs_z0) * &rest
    };
    let id = treated - control;
    Ok((&id + &rest * &a - &t1 * &b, &id + &rest * &b - &t1 * &a))
}

/// Region as `id - ϑ` with `ϑ` free in [`CausalPoint::free_interval`].
pub fn causal_ate_reduced_form(c: &CausalPoint) -> Result<Region> {
    c.validate()?;
    let identified = BTreeMap::from([
        ("p_z1".to_string(), Value::real(c.p_z1)),
        ("e_yobs_z1".to_string(), Value::real(c.e_yobs_z1)),
        ("e_yobs_z0".to_string(), Value::real(c.e_yobs_z0)),
    ]);
    let point = *c;
    let combiner = Combiner::new(
        "e_yobs_z1 * p_z1 - e_yobs_z0 * (1 - p_z1) - t",
        Monotonicity::Decreasing,
        move |_, t| point.identified_part() - t,
    );
    Ok(reduced_form(identified, Region::interval(c.free_interval()), combiner))
}

/// Under randomized assignment the effect is `ϑ2 - ϑ3`.
pub fn randomized_ate(c: &CausalPoint) -> Result<f64> {
    c.validate()?;
    if c.p_z1 <= 0.0 || c.p_z1 >= 1.0 {
        return Err(Error::InvalidPoint("randomized effect needs both arms observed".into()));
    }
    Ok(c.e_yobs_z1 - c.e_yobs_z0)
}

/// Union over `ϑ1 ∈ [lo, hi]` of the free interval: the spread of `ϑ`
/// before the assignment probability is observed.
pub fn pre_observation_envelope(p_z1_range: (f64, f64), outcome_bounds: (f64, f64)) -> Result<Interval> {
    let (lo, hi) = p_z1_range;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidPoint(format!("[{lo}, {hi}] is not a probability range")));
    }
    let at = |t: f64| {
        CausalPoint {
            p_z1: t,
            e_yobs_z1: outcome_bounds.0,
            e_yobs_z0: outcome_bounds.0,
            outcome_bounds,
        }
        .free_interval()
    };
    // Both endpoints are affine in ϑ1, so the extremes sit at the ends of the range.
    let (a, b) = (at(lo), at(hi));
    Interval::new(a.lo.min(b.lo), a.hi.max(b.hi))
}

/// Cell of `(Y(1) = support[i1], Y(0) = support[i0], Z = z)`.
pub fn causal_cell(k: usize, i1: usize, i0: usize, z: usize) -> usize {
    (i1 * k + i0) * 2 + z
}

/// Joint distributions of `(Y(1), Y(0), Z)` over `support² × {0, 1}`,
/// observing `(E[Y*|Z=1], E[Y*|Z=0], P(Z=1))` with the effect as estimand.
pub fn causal_polytope(support: &[f64]) -> Universe {
    let k = support.len();
    let n = 2 * k * k;
    let zero = || vec![BigRational::zero(); n];
    let (mut num1, mut den1, mut num0, mut den0, mut effect) = (zero(), zero(), zero(), zero(), zero());
    let ys: Vec<BigRational> = support.iter().map(|&y| decimal_rational(y)).collect();
    for i1 in 0..k {
        for i0 in 0..k {
            let c1 = causal_cell(k, i1, i0, 1);
            let c0 = causal_cell(k, i1, i0, 0);
            num1[c1] = ys[i1].clone();
            den1[c1] = BigRational::one();
            num0[c0] = ys[i0].clone();
            den0[c0] = BigRational::one();
            effect[c1] = &ys[i1] - &ys[i0];
            effect[c0] = &ys[i1] - &ys[i0];
        }
    }
    Universe::polytope(Polytope::new(
        n,
        vec![
            Functional::Ratio {
                num: num1,
                den: den1.clone(),
            },
            Functional::Ratio { num: num0, den: den0 },
            Functional::Linear(den1),
        ],
        Some(effect),
    ))
}

/// `P(Y*|Z=1)`, `P(Y*|Z=0)`, `P(Z=1)` over the factorized simplex grid;
/// estimand the effect.
pub fn causal_simplex(support: &[f64], step: f64) -> Result<Universe> {
    let k = support.len();
    let cell_of = (0..2)
        .map(|z| (0..k * k).map(|j| causal_cell(k, j / k, j % k, z)).collect())
        .collect();
    let grid = SimplexGrid::new(2 * k * k, step, Some(Factorization { cell_of }))?;
    let ys = support.to_vec();
    let ys_obs = ys.clone();
    let q = Quantizer::default();
    Ok(Universe::simplex(
        grid,
        move |s| {
            let p = s.as_distribution().expect("distribution state");
            let k = ys.len();
            let mut ate = 0.0;
            for i1 in 0..k {
                for i0 in 0..k {
                    let mass = p[causal_cell(k, i1, i0, 0)] + p[causal_cell(k, i1, i0, 1)];
                    ate += mass * (ys[i1] - ys[i0]);
                }
            }
            q.real(ate)
        },
        move |s| {
            let p = s.as_distribution().expect("distribution state");
            let k = ys_obs.len();
            let arm = |z: usize| {
                let mut dist = vec![0.0; k];
                for i1 in 0..k {
                    for i0 in 0..k {
                        dist[if z == 1 { i1 } else { i0 }] += p[causal_cell(k, i1, i0, z)];
                    }
                }
                let total: f64 = dist.iter().sum();
                let cond = if total <= q.step() {
                    Value::Missing
                } else {
                    q.tuple(dist.iter().map(|m| m / total))
                };
                (cond, total)
            };
            let (treated, pz1) = arm(1);
            let (control, _) = arm(0);
            Value::Tuple(vec![treated, control, q.real(pz1)])
        },
    ))
}

/// `Z` independent of `(Y(1), Y(0))`: total variation on distributions,
/// [`Independence`] on polytopes.
pub fn randomization(support: &[f64]) -> Assumption {
    let k = support.len();
    let n = 2 * k * k;
    let ind = Independence {
        left: (0..n).map(|c| c / 2).collect(),
        right: (0..n).map(|c| c % 2).collect(),
        n_left: k * k,
        n_right: 2,
    };
    let tv = ind.clone();
    Assumption::new("randomized(Z)", move |s| {
        tv.total_variation(s.as_distribution().expect("distribution state"))
    })
    .with_linear_form(LinearForm::Independence(ind))
}

/// `Y(1), Y(0) ∈ [a, b]`.
pub fn causal_bounded(support: &[f64], a: f64, b: f64) -> Assumption {
    let k = support.len();
    let n = 2 * k * k;
    let out = |y: f64| y < a || y > b;
    let outside: Vec<usize> = (0..n)
        .filter(|&c| {
            let j = c / 2;
            out(support[j / k]) || out(support[j % k])
        })
        .collect();
    let mut coeffs = vec![BigRational::zero(); n];
    for &c in &outside {
        coeffs[c] = BigRational::one();
    }
    Assumption::new(format!("bounded(Y, {a}, {b})"), move |s| {
        let p = s.as_distribution().expect("distribution state");
        outside.iter().map(|&c| p[c]).sum()
    })
    .with_linear_form(LinearForm::Constraints(vec![LinearConstraint::eq(
        coeffs,
        BigRational::zero(),
    )]))
}
