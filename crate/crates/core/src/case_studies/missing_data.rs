//! Mean of an outcome observed only when `Z = 1`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::region::{reduced_form, Combiner, Interval, Monotonicity, Region};
use crate::universe::{
    Assumption, Factorization, Functional, GridDim, LinearConstraint, LinearForm, ParamGrid, Polytope, SimplexGrid,
    State, Universe,
};
use crate::value::{decimal_rational, Quantizer, Value};

/// `ϑ1 = P(Z=1)`, `ϑ2 = E[Y | Z=1]`, outcomes in `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissingDataPoint {
    pub p_z1: f64,
    pub e_y_given_z1: f64,
    pub outcome_bounds: (f64, f64),
}

impl MissingDataPoint {
    pub fn new(p_z1: f64, e_y_given_z1: f64, outcome_bounds: (f64, f64)) -> Result<Self> {
        let p = MissingDataPoint {
            p_z1,
            e_y_given_z1,
            outcome_bounds,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.outcome_bounds;
        let finite = [self.p_z1, self.e_y_given_z1, a, b].iter().all(|x| x.is_finite());
        if !finite || !(0.0..=1.0).contains(&self.p_z1) || a > b {
            return Err(Error::InvalidPoint(format!("{self:?}")));
        }
        // E[Y | Z=1] is undefined (and unconstrained) when nobody is observed.
        if self.p_z1 > 0.0 && !(a..=b).contains(&self.e_y_given_z1) {
            return Err(Error::InvalidPoint(format!(
                "E[Y|Z=1] = {} lies outside [{a}, {b}]",
                self.e_y_given_z1
            )));
        }
        Ok(())
    }
}

/// `[ϑ2ϑ1 + a(1-ϑ1), ϑ2ϑ1 + b(1-ϑ1)]`.
pub fn manski_bounds(p: &MissingDataPoint) -> Result<Interval> {
    p.validate()?;
    let (a, b) = p.outcome_bounds;
    let seen = if p.p_z1 > 0.0 { p.e_y_given_z1 * p.p_z1 } else { 0.0 };
    Interval::new(seen + a * (1.0 - p.p_z1), seen + b * (1.0 - p.p_z1))
}

/// Exact version over the decimal values of the inputs.
pub fn manski_bounds_exact(p: &MissingDataPoint) -> Result<(BigRational, BigRational)> {
    p.validate()?;
    let t1 = decimal_rational(p.p_z1);
    let t2 = decimal_rational(p.e_y_given_z1);
    let a = decimal_rational(p.outcome_bounds.0);
    let b = decimal_rational(p.outcome_bounds.1);
    let rest = BigRational::one() - &t1;
    let seen = if t1.is_zero() { BigRational::zero() } else { &t2 * &t1 };
    Ok((&seen + &a * &rest, &seen + &b * &rest))
}

/// Region as `ϑ2ϑ1 + ϑ(1-ϑ1)` with the unobserved mean `ϑ` free in `[a, b]`.
pub fn manski_reduced_form(p: &MissingDataPoint) -> Result<Region> {
    p.validate()?;
    let (a, b) = p.outcome_bounds;
    let identified = BTreeMap::from([
        ("p_z1".to_string(), Value::real(p.p_z1)),
        ("e_y_given_z1".to_string(), Value::real(p.e_y_given_z1)),
    ]);
    let combiner = Combiner::new(
        "e_y_given_z1 * p_z1 + t * (1 - p_z1)",
        Monotonicity::Increasing,
        |m, t| m["e_y_given_z1"] * m["p_z1"] + t * (1.0 - m["p_z1"]),
    );
    Ok(reduced_form(
        identified,
        Region::interval(Interval::new(a, b)?),
        combiner,
    ))
}

/// Parameter grid `(α, β, γ) = (E[Y|Z=1], E[Y|Z=0], P(Z=1))` with α, β on
/// `[a, b]` and γ on `[0, 1]`, all with spacing `step`.
///
/// The estimand is `E[Y] = αγ + β(1-γ)`, the observation `(α, γ)`.
pub fn missing_data_grid(step: f64, outcome_bounds: (f64, f64)) -> Result<Universe> {
    let (a, b) = outcome_bounds;
    let y = GridDim::new(a, b, step)?;
    let g = GridDim::new(0.0, 1.0, step)?;
    Ok(Universe::grid(
        ParamGrid::new(vec![y, y, g]),
        mean_of_grid,
        observe_grid,
    ))
}

fn mean_of_grid(s: &State) -> Value {
    let x = s.as_point().expect("grid state");
    Value::real(x[0] * x[2] + x[1] * (1.0 - x[2]))
}

fn observe_grid(s: &State) -> Value {
    let x = s.as_point().expect("grid state");
    Value::tuple([x[0], x[2]])
}

/// Cell of `(support index k, z)`.
pub fn missing_data_cell(k: usize, z: usize) -> usize {
    2 * k + z
}

/// Joint distributions of `(Y, Z)` over `support × {0, 1}`, observing
/// `(E[Y | Z=1], P(Z=1))` with estimand `E[Y]`.
pub fn missing_data_polytope(support: &[f64]) -> Universe {
    let n = 2 * support.len();
    let mut num = vec![BigRational::zero(); n];
    let mut den = vec![BigRational::zero(); n];
    let mut mean = vec![BigRational::zero(); n];
    for (k, &y) in support.iter().enumerate() {
        let y = decimal_rational(y);
        num[missing_data_cell(k, 1)] = y.clone();
        den[missing_data_cell(k, 1)] = BigRational::one();
        mean[missing_data_cell(k, 0)] = y.clone();
        mean[missing_data_cell(k, 1)] = y;
    }
    Universe::polytope(Polytope::new(
        n,
        vec![Functional::Ratio { num, den: den.clone() }, Functional::Linear(den)],
        Some(mean),
    ))
}

/// The factorized simplex grid over `support × {0, 1}`, observing
/// `(P(Y | Z=1), P(Z=1))` with estimand `E[Y]`. Useful where the observed
/// distribution rather than its mean matters (refutability).
pub fn missing_data_simplex(support: &[f64], step: f64) -> Result<Universe> {
    let k = support.len();
    let cell_of = (0..2)
        .map(|z| (0..k).map(|i| missing_data_cell(i, z)).collect())
        .collect();
    let grid = SimplexGrid::new(2 * k, step, Some(Factorization { cell_of }))?;
    let ys = support.to_vec();
    let ys_obs = ys.clone();
    let q = Quantizer::default();
    Ok(Universe::simplex(
        grid,
        move |s| {
            let p = s.as_distribution().expect("distribution state");
            q.real((0..2 * ys.len()).map(|c| p[c] * ys[c / 2]).sum())
        },
        move |s| {
            let p = s.as_distribution().expect("distribution state");
            let pz1: f64 = (0..ys_obs.len()).map(|i| p[missing_data_cell(i, 1)]).sum();
            let cond = if pz1 <= q.step() {
                Value::Missing
            } else {
                q.tuple((0..ys_obs.len()).map(|i| p[missing_data_cell(i, 1)] / pz1))
            };
            Value::Tuple(vec![cond, q.real(pz1)])
        },
    ))
}

/// `Y ∈ [a, b]`: no mass on support points outside the interval. Carries
/// the equivalent linear form for polytopes.
pub fn bounded_outcome(support: &[f64], a: f64, b: f64) -> Assumption {
    let outside: Vec<usize> = support
        .iter()
        .enumerate()
        .filter(|(_, &y)| y < a || y > b)
        .flat_map(|(k, _)| [missing_data_cell(k, 0), missing_data_cell(k, 1)])
        .collect();
    let n = 2 * support.len();
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

/// `k + 1` equally spaced points on `[a, b]`.
pub fn uniform_support(a: f64, b: f64, k: usize) -> Vec<f64> {
    let q = Quantizer::default();
    (0..=k)
        .map(|i| q.real(a + (b - a) * i as f64 / k as f64).as_f64().expect("scalar"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{region_enumerate, region_lp};
    use num_bigint::BigInt;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn closed_form_examples() {
        let iv = manski_bounds(&MissingDataPoint::new(0.75, 0.6, (0.0, 1.0)).unwrap()).unwrap();
        assert!(iv.approx_eq(&Interval::new(0.45, 0.7).unwrap(), 1e-15));
        let all_seen = manski_bounds(&MissingDataPoint::new(1.0, 0.6, (0.0, 1.0)).unwrap()).unwrap();
        assert!(all_seen.approx_eq(&Interval::point(0.6), 1e-15));
        let none_seen = manski_bounds(&MissingDataPoint::new(0.0, 0.3, (0.0, 1.0)).unwrap()).unwrap();
        assert!(none_seen.approx_eq(&Interval::new(0.0, 1.0).unwrap(), 0.0));
        let exact = manski_bounds_exact(&MissingDataPoint::new(0.75, 0.6, (0.0, 1.0)).unwrap()).unwrap();
        assert_eq!(exact, (r(9, 20), r(7, 10)));
    }

    #[test]
    fn invalid_points() {
        assert!(MissingDataPoint::new(1.5, 0.5, (0.0, 1.0)).is_err());
        assert!(MissingDataPoint::new(0.5, 1.5, (0.0, 1.0)).is_err());
        assert!(MissingDataPoint::new(0.5, 0.5, (1.0, 0.0)).is_err());
        assert!(MissingDataPoint::new(0.0, 7.0, (0.0, 1.0)).is_ok());
    }

    #[test]
    fn reduced_form_matches_closed_form() {
        let p = MissingDataPoint::new(0.75, 0.6, (0.0, 1.0)).unwrap();
        let m = manski_reduced_form(&p).unwrap().materialize().unwrap();
        assert!(m.as_interval().unwrap().approx_eq(&manski_bounds(&p).unwrap(), 1e-15));
    }

    #[test]
    fn lp_oracle_on_binary_support() {
        let u = missing_data_polytope(&[0.0, 1.0]);
        let b = region_lp(&u, &Value::tuple([0.6, 0.75])).unwrap();
        assert_eq!((b.lo, b.hi), (r(9, 20), r(7, 10)));
    }

    #[test]
    fn enumeration_oracle_on_coarse_grid() {
        let u = missing_data_grid(0.05, (0.0, 1.0)).unwrap();
        let region = region_enumerate(&u, &Value::tuple([0.6, 0.75])).unwrap();
        assert!(region
            .hull()
            .unwrap()
            .approx_eq(&Interval::new(0.45, 0.7).unwrap(), 1e-9));
        assert_eq!(region.as_set().unwrap().len(), 21);
    }

    #[test]
    fn bounded_outcome_is_refutable_on_wider_support() {
        use crate::region::{refutability, APriori};
        let support = [-1.0, 0.0, 1.0];
        let u = missing_data_simplex(&support, 0.25).unwrap();
        let a = bounded_outcome(&support, 0.0, 1.0);
        let seen = Value::Tuple(vec![Value::tuple([0.0, 0.5, 0.5]), Value::real(0.5)]);
        let v = refutability(&u, &a, Some(&seen)).unwrap();
        assert_eq!(v.a_priori, APriori::Refutable);
        assert_eq!(v.refuted_at_l0, Some(false));
        let restricted = u.restrict(&a).unwrap();
        assert!(restricted
            .observation_image()
            .unwrap()
            .is_subset(&u.observation_image().unwrap()));
        assert!(restricted.observation_image().unwrap().len() < u.observation_image().unwrap().len());
    }

    #[test]
    fn support_grid() {
        let s = uniform_support(0.0, 1.0, 100);
        assert_eq!(s.len(), 101);
        assert_eq!(s[37], 0.37);
    }
}
