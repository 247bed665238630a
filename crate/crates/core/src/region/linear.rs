//! Regions of linear estimands over polytope universes, by extremization.

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{self, Constraint, LpError};
use crate::universe::{self, simplex_rows, Functional, Independence, LinearConstraint, Polytope, Universe};
use crate::value::{rational_to_f64, Value};

use super::{Interval, Region};

/// Tolerance reported for floating-point solves.
pub const EPS_LP: f64 = 1e-7;

/// Above this many cells the solver switches to floating point.
pub const EXACT_VARIABLE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpMethod {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    /// `None` picks exact arithmetic below [`EXACT_VARIABLE_LIMIT`] cells.
    pub method: Option<LpMethod>,
    /// Grid for independence margins that the other constraints leave free.
    pub margin_step: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            method: None,
            margin_step: 0.05,
        }
    }
}

/// Extremes of a linear estimand together with optimal distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LpBounds {
    pub lo: BigRational,
    pub hi: BigRational,
    pub argmin: Vec<BigRational>,
    pub argmax: Vec<BigRational>,
    pub method: LpMethod,
    /// 0 for exact solves, [`EPS_LP`] otherwise.
    pub eps: f64,
    /// Set when an independence constraint was handled on a margin grid.
    pub approximate: bool,
    /// The bounds coincide with the unconditional range of the estimand.
    pub strong: bool,
}

impl LpBounds {
    pub fn interval(&self) -> Interval {
        Interval {
            lo: rational_to_f64(&self.lo),
            hi: rational_to_f64(&self.hi),
        }
    }

    pub fn region(&self) -> Region {
        Region::interval(self.interval()).with_strong(self.strong)
    }
}

struct Extremes {
    lo: BigRational,
    hi: BigRational,
    argmin: Vec<BigRational>,
    argmax: Vec<BigRational>,
    approximate: bool,
}

impl Extremes {
    fn hull(self, other: Extremes) -> Extremes {
        let (lo, argmin) = if other.lo < self.lo {
            (other.lo, other.argmin)
        } else {
            (self.lo, self.argmin)
        };
        let (hi, argmax) = if other.hi > self.hi {
            (other.hi, other.argmax)
        } else {
            (self.hi, self.argmax)
        };
        Extremes {
            lo,
            hi,
            argmin,
            argmax,
            approximate: self.approximate || other.approximate,
        }
    }
}

fn flatten(v: &Value, out: &mut Vec<Value>) {
    match v {
        Value::Tuple(items) => items.iter().for_each(|i| flatten(i, out)),
        other => out.push(other.clone()),
    }
}

/// Linear constraints stating `λ(p) = l0`.
///
/// A ratio component observed at `v` becomes `(num - v den) · p = 0`; a
/// missing ratio component becomes `den · p = 0`. Nested tuples in `l0` are
/// flattened in order.
pub fn lp_constraints_at(poly: &Polytope, l0: &Value) -> Result<Vec<LinearConstraint>> {
    let mut leaves = Vec::new();
    flatten(l0, &mut leaves);
    if leaves.len() != poly.observation.len() {
        return Err(Error::InvalidPoint(format!(
            "observation {l0} has {} components, expected {}",
            leaves.len(),
            poly.observation.len()
        )));
    }
    let mut out = Vec::with_capacity(leaves.len());
    for (f, v) in poly.observation.iter().zip(&leaves) {
        match (f, v.to_big_rational()) {
            (Functional::Linear(c), Some(v)) => out.push(LinearConstraint::eq(c.clone(), v)),
            (Functional::Ratio { num, den }, Some(v)) => {
                let coeffs = num.iter().zip(den).map(|(n, d)| n - &v * d).collect();
                out.push(LinearConstraint::eq(coeffs, BigRational::zero()));
            }
            (Functional::Ratio { den, .. }, None) if v.is_missing() => {
                out.push(LinearConstraint::eq(den.clone(), BigRational::zero()))
            }
            _ => return Err(Error::InvalidPoint(format!("{v} is not a valid observation component"))),
        }
    }
    Ok(out)
}

fn to_rows(cs: &[LinearConstraint]) -> Vec<Constraint<BigRational>> {
    cs.iter()
        .map(|c| Constraint {
            coeffs: c.coeffs.clone(),
            relation: c.relation,
            rhs: c.rhs.clone(),
        })
        .collect()
}

fn method_for(poly: &Polytope, opts: &LpOptions) -> LpMethod {
    opts.method.unwrap_or(if poly.cells < EXACT_VARIABLE_LIMIT {
        LpMethod::Exact
    } else {
        LpMethod::Float
    })
}

fn lift(e: LpError) -> Error {
    match e {
        LpError::Infeasible => Error::Infeasible,
        LpError::Unbounded => Error::Unbounded,
    }
}

/// Extremes of `objective` over `{p >= 0 : rows}`; `None` when infeasible.
fn extremes(
    n: usize,
    rows: &[Constraint<BigRational>],
    objective: &[BigRational],
    method: LpMethod,
) -> Result<Option<Extremes>> {
    let solved = match method {
        LpMethod::Exact => {
            lp::extremize(n, rows, objective).map(|(min, max)| (min.value, max.value, min.point, max.point))
        }
        LpMethod::Float => {
            let f = |r: &BigRational| rational_to_f64(r);
            let rows: Vec<Constraint<f64>> = rows
                .iter()
                .map(|r| Constraint {
                    coeffs: r.coeffs.iter().map(f).collect(),
                    relation: r.relation,
                    rhs: f(&r.rhs),
                })
                .collect();
            let obj: Vec<f64> = objective.iter().map(f).collect();
            let back = |x: f64| BigRational::from_float(x).unwrap_or_else(BigRational::zero);
            lp::extremize(n, &rows, &obj).map(|(min, max)| {
                (
                    back(min.value),
                    back(max.value),
                    min.point.into_iter().map(back).collect(),
                    max.point.into_iter().map(back).collect(),
                )
            })
        }
    };
    match solved {
        Ok((lo, hi, argmin, argmax)) => Ok(Some(Extremes {
            lo,
            hi,
            argmin,
            argmax,
            approximate: false,
        })),
        Err(LpError::Infeasible) => Ok(None),
        Err(e) => Err(lift(e)),
    }
}

/// Margin values of `ind`'s right classes if the rows pin all of them.
fn pinned_margin(
    n: usize,
    rows: &[Constraint<BigRational>],
    ind: &Independence,
    method: LpMethod,
) -> Result<Option<Option<Vec<BigRational>>>> {
    let mut margin = Vec::with_capacity(ind.n_right);
    for r in 0..ind.n_right {
        match extremes(n, rows, &ind.right_margin(r), method)? {
            None => return Ok(None),
            Some(e) if close(&e.lo, &e.hi, method) => margin.push(e.lo),
            Some(_) => return Ok(Some(None)),
        }
    }
    Ok(Some(Some(margin)))
}

fn close(a: &BigRational, b: &BigRational, method: LpMethod) -> bool {
    match method {
        LpMethod::Exact => a == b,
        LpMethod::Float => (rational_to_f64(a) - rational_to_f64(b)).abs() <= EPS_LP,
    }
}

fn solve(
    n: usize,
    rows: Vec<Constraint<BigRational>>,
    inds: &[Independence],
    objective: &[BigRational],
    method: LpMethod,
    margin_step: f64,
) -> Result<Option<Extremes>> {
    let Some((ind, rest)) = inds.split_first() else {
        return extremes(n, &rows, objective, method);
    };
    for candidate in [ind.clone(), ind.transposed()] {
        match pinned_margin(n, &rows, &candidate, method)? {
            None => return Ok(None),
            Some(Some(margin)) => {
                let mut rows = rows;
                rows.extend(to_rows(&candidate.linearize(&margin)));
                return solve(n, rows, rest, objective, method, margin_step);
            }
            Some(None) => {}
        }
    }
    // Neither margin is pinned: sweep the right margin over a grid.
    let units = universe::units_for_step(margin_step)?;
    let unit = BigRational::new(1.into(), units.into());
    let mut best: Option<Extremes> = None;
    for composition in universe::compositions(units, ind.n_right) {
        let margin: Vec<BigRational> = composition
            .iter()
            .map(|&k| &unit * BigRational::from_integer(k.into()))
            .collect();
        let mut pinned = rows.clone();
        for (r, m) in margin.iter().enumerate() {
            pinned.push(Constraint {
                coeffs: ind.right_margin(r),
                relation: lp::Relation::Eq,
                rhs: m.clone(),
            });
        }
        pinned.extend(to_rows(&ind.linearize(&margin)));
        if let Some(e) = solve(n, pinned, rest, objective, method, margin_step)? {
            best = Some(match best {
                None => e,
                Some(b) => b.hull(e),
            });
        }
    }
    Ok(best.map(|mut e| {
        e.approximate = true;
        e
    }))
}

fn polytope_of(u: &Universe) -> Result<&Polytope> {
    u.as_polytope()
        .ok_or_else(|| Error::NotLinear("linear programming needs a polytope universe".into()))
}

/// Region of the linear estimand at `l0`: `[min θ(p), max θ(p)]` over the
/// polytope cut by `λ(p) = l0`. Errors with [`Error::Infeasible`] when `l0`
/// cannot be produced under the universe's assumptions.
pub fn region_lp(u: &Universe, l0: &Value) -> Result<LpBounds> {
    region_lp_with(u, l0, &LpOptions::default())
}

pub fn region_lp_with(u: &Universe, l0: &Value, opts: &LpOptions) -> Result<LpBounds> {
    let poly = polytope_of(u)?;
    let objective = poly
        .estimand
        .clone()
        .ok_or_else(|| Error::NotLinear("the estimand is not a linear functional".into()))?;
    let method = method_for(poly, opts);
    let base = simplex_rows(poly);
    let mut rows = base.clone();
    rows.extend(to_rows(&lp_constraints_at(poly, l0)?));
    let at = solve(
        poly.cells,
        rows,
        &poly.independence,
        &objective,
        method,
        opts.margin_step,
    )?
    .ok_or(Error::Infeasible)?;
    let range = solve(
        poly.cells,
        base,
        &poly.independence,
        &objective,
        method,
        opts.margin_step,
    )?
    .ok_or(Error::Infeasible)?;
    let strong = at.lo != at.hi && close(&at.lo, &range.lo, method) && close(&at.hi, &range.hi, method);
    Ok(LpBounds {
        lo: at.lo,
        hi: at.hi,
        argmin: at.argmin,
        argmax: at.argmax,
        method,
        eps: if method == LpMethod::Exact { 0.0 } else { EPS_LP },
        approximate: at.approximate,
        strong,
    })
}

/// Whether some distribution in the polytope produces `l0`.
pub fn feasible_at(u: &Universe, l0: &Value) -> Result<bool> {
    let poly = polytope_of(u)?;
    let method = method_for(poly, &LpOptions::default());
    let mut rows = simplex_rows(poly);
    rows.extend(to_rows(&lp_constraints_at(poly, l0)?));
    let zero = vec![BigRational::zero(); poly.cells];
    Ok(solve(
        poly.cells,
        rows,
        &poly.independence,
        &zero,
        method,
        LpOptions::default().margin_step,
    )?
    .is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::{Assumption, LinearForm};
    use num_bigint::BigInt;
    use num_traits::ToPrimitive;

    fn as_f64s(p: &[BigRational]) -> Vec<f64> {
        p.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn ints(xs: &[i64]) -> Vec<BigRational> {
        xs.iter().map(|&x| q(x, 1)).collect()
    }

    /// Cells `(y, z)` with index `2*y + z`, y, z ∈ {0, 1}; observe
    /// `P(Y=1 | Z=1)` and `P(Z=1)`; estimand `P(Y=1)`.
    fn missing_binary() -> Universe {
        let num = ints(&[0, 0, 0, 1]);
        let den = ints(&[0, 1, 0, 1]);
        Universe::polytope(Polytope::new(
            4,
            vec![Functional::Ratio { num, den: den.clone() }, Functional::Linear(den)],
            Some(ints(&[0, 0, 1, 1])),
        ))
    }

    #[test]
    fn missing_data_bounds_are_exact() {
        let b = region_lp(&missing_binary(), &Value::tuple([0.6, 0.75])).unwrap();
        assert_eq!(b.lo, q(9, 20));
        assert_eq!(b.hi, q(7, 10));
        assert_eq!(b.method, LpMethod::Exact);
        assert!(!b.approximate);
        assert!(!b.strong);
        assert_eq!(b.eps, 0.0);
    }

    #[test]
    fn float_solver_agrees() {
        let opts = LpOptions {
            method: Some(LpMethod::Float),
            ..LpOptions::default()
        };
        let b = region_lp_with(&missing_binary(), &Value::tuple([0.6, 0.75]), &opts).unwrap();
        assert!((rational_to_f64(&b.lo) - 0.45).abs() < 1e-9);
        assert!((rational_to_f64(&b.hi) - 0.7).abs() < 1e-9);
        assert_eq!(b.eps, EPS_LP);
    }

    #[test]
    fn argmin_reproduces_observation_and_bound() {
        let u = missing_binary();
        let l0 = Value::tuple([0.6, 0.75]);
        let b = region_lp(&u, &l0).unwrap();
        for (p, bound) in [(&b.argmin, &b.lo), (&b.argmax, &b.hi)] {
            let pf: Vec<f64> = as_f64s(p);
            assert_eq!(u.observe(&universe::State::Distribution(pf.clone())), l0);
            assert_eq!(
                u.estimate(&universe::State::Distribution(pf)),
                Value::real(rational_to_f64(bound))
            );
        }
    }

    #[test]
    fn nobody_observed_is_strong() {
        let l0 = Value::Tuple(vec![Value::Missing, Value::real(0.0)]);
        let b = region_lp(&missing_binary(), &l0).unwrap();
        assert_eq!((b.lo.clone(), b.hi.clone()), (q(0, 1), q(1, 1)));
        assert!(b.strong);
    }

    #[test]
    fn contradictions_are_infeasible() {
        let u = missing_binary();
        let pin = Assumption::new("no treated", |_| 0.0).with_linear_form(LinearForm::Constraints(vec![
            LinearConstraint::eq(ints(&[0, 1, 0, 1]), q(0, 1)),
        ]));
        let r = u.restrict(&pin).unwrap();
        assert_eq!(
            region_lp(&r, &Value::tuple([0.6, 0.75])).unwrap_err(),
            Error::Infeasible
        );
        assert!(!feasible_at(&r, &Value::tuple([0.6, 0.75])).unwrap());
        assert!(feasible_at(&u, &Value::tuple([0.6, 0.75])).unwrap());
    }

    #[test]
    fn independence_with_pinned_margin_is_linearized() {
        // Randomized assignment: Y independent of Z gives E[Y] = E[Y | Z=1].
        let u = missing_binary();
        let ind = Independence {
            left: vec![0, 0, 1, 1],
            right: vec![0, 1, 0, 1],
            n_left: 2,
            n_right: 2,
        };
        let r = u
            .restrict(&Assumption::new("Y indep Z", |_| 0.0).with_linear_form(LinearForm::Independence(ind)))
            .unwrap();
        let b = region_lp(&r, &Value::tuple([0.6, 0.75])).unwrap();
        assert_eq!((b.lo.clone(), b.hi.clone()), (q(3, 5), q(3, 5)));
        assert!(!b.approximate);
    }

    #[test]
    fn unpinned_independence_uses_margin_grid() {
        // Observe nothing relevant; Y independent of Z; estimand P(Y=1, Z=1) = P(Y=1) P(Z=1) ranges over [0, 1].
        let u = Universe::polytope(Polytope::new(4, vec![], Some(ints(&[0, 0, 0, 1]))));
        let ind = Independence {
            left: vec![0, 0, 1, 1],
            right: vec![0, 1, 0, 1],
            n_left: 2,
            n_right: 2,
        };
        let r = u
            .restrict(&Assumption::new("Y indep Z", |_| 0.0).with_linear_form(LinearForm::Independence(ind)))
            .unwrap();
        let b = region_lp(&r, &Value::Tuple(vec![])).unwrap();
        assert!(b.approximate);
        assert_eq!(b.lo, q(0, 1));
        assert_eq!(b.hi, q(1, 1));
    }

    #[test]
    fn wrong_shape_is_rejected() {
        assert!(matches!(
            region_lp(&missing_binary(), &Value::tuple([0.6])),
            Err(Error::InvalidPoint(_))
        ));
        let grid = Universe::explicit(vec![], |_| Value::Missing, |_| Value::Missing);
        assert!(matches!(region_lp(&grid, &Value::Missing), Err(Error::NotLinear(_))));
    }
}
