//! Two-phase dense simplex over an ordered field.
//!
//! The solver is generic over [`LpScalar`]: `BigRational` gives exact
//! answers for small programs, `f64` (with a tolerance) serves large ones.
//! Bland's rule is used for both entering and leaving variables, so the
//! method terminates without cycling. All decision variables are
//! non-negative.

use std::cmp::Ordering;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::value::rational_to_f64;

/// Arithmetic needed by the simplex method.
pub trait LpScalar: Clone + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn compare(&self, other: &Self) -> Ordering;
    fn from_rational(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
}

impl LpScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn compare(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
}

/// Pivot tolerance for the floating-point path.
const FLOAT_TOL: f64 = 1e-10;

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        self.abs() <= FLOAT_TOL
    }
    fn is_positive(&self) -> bool {
        *self > FLOAT_TOL
    }
    fn is_negative(&self) -> bool {
        *self < -FLOAT_TOL
    }
    fn compare(&self, other: &Self) -> Ordering {
        if (self - other).abs() <= FLOAT_TOL {
            Ordering::Equal
        } else {
            self.total_cmp(other)
        }
    }
    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

/// `coeffs · x (rel) rhs` over dense coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpError {
    Infeasible,
    Unbounded,
}

/// Optimal value together with an optimal vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum<T> {
    pub value: T,
    pub point: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    Original,
    Slack,
    Artificial,
}

/// A feasible basis for `{x >= 0 : constraints}`, reusable across objectives.
#[derive(Debug, Clone)]
pub struct FeasibleRegion<T> {
    n_vars: usize,
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    kinds: Vec<Column>,
}

impl<T: LpScalar> FeasibleRegion<T> {
    /// Runs phase one. Fails with [`LpError::Infeasible`] when no
    /// non-negative point satisfies the constraints.
    pub fn new(n_vars: usize, constraints: &[Constraint<T>]) -> Result<Self, LpError> {
        let m = constraints.len();
        let n_slack = constraints.iter().filter(|c| c.relation != Relation::Eq).count();
        let mut kinds = vec![Column::Original; n_vars];
        kinds.extend(std::iter::repeat_n(Column::Slack, n_slack));

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = vec![usize::MAX; m];
        let mut slack_at = n_vars;
        let mut needs_artificial = Vec::new();
        for (i, c) in constraints.iter().enumerate() {
            assert_eq!(c.coeffs.len(), n_vars, "constraint {i} has wrong width");
            let flip = c.rhs.is_negative();
            let mut row: Vec<T> = c
                .coeffs
                .iter()
                .map(|a| if flip { a.neg() } else { a.clone() })
                .collect();
            row.resize(n_vars + n_slack, T::zero());
            let relation = match (c.relation, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            };
            match relation {
                Relation::Le => {
                    row[slack_at] = T::one();
                    basis[i] = slack_at;
                    slack_at += 1;
                }
                Relation::Ge => {
                    row[slack_at] = T::one().neg();
                    slack_at += 1;
                    needs_artificial.push(i);
                }
                Relation::Eq => needs_artificial.push(i),
            }
            rows.push(row);
            rhs.push(if flip { c.rhs.neg() } else { c.rhs.clone() });
        }

        let width = n_vars + n_slack + needs_artificial.len();
        for row in rows.iter_mut() {
            row.resize(width, T::zero());
        }
        for (k, &i) in needs_artificial.iter().enumerate() {
            let col = n_vars + n_slack + k;
            rows[i][col] = T::one();
            basis[i] = col;
            kinds.push(Column::Artificial);
        }

        let mut region = FeasibleRegion {
            n_vars,
            rows,
            rhs,
            basis,
            kinds,
        };
        if !needs_artificial.is_empty() {
            let cost: Vec<T> = region
                .kinds
                .iter()
                .map(|k| if *k == Column::Artificial { T::one() } else { T::zero() })
                .collect();
            region.optimize(&cost, true).map_err(|_| LpError::Infeasible)?;
            if !region.objective_value(&cost).is_zero() {
                return Err(LpError::Infeasible);
            }
            region.drive_out_artificials();
        }
        Ok(region)
    }

    /// Minimizes `objective · x` from the current basis.
    pub fn minimize(&self, objective: &[T]) -> Result<Optimum<T>, LpError> {
        assert_eq!(objective.len(), self.n_vars, "objective has wrong width");
        let mut work = self.clone();
        let mut cost = objective.to_vec();
        cost.resize(work.kinds.len(), T::zero());
        work.optimize(&cost, false)?;
        let point = work.point();
        Ok(Optimum {
            value: work.objective_value(&cost),
            point,
        })
    }

    /// Maximizes `objective · x` from the current basis.
    pub fn maximize(&self, objective: &[T]) -> Result<Optimum<T>, LpError> {
        let negated: Vec<T> = objective.iter().map(|c| c.neg()).collect();
        let opt = self.minimize(&negated)?;
        Ok(Optimum {
            value: opt.value.neg(),
            point: opt.point,
        })
    }

    /// Current basic feasible point restricted to the original variables.
    pub fn point(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.n_vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_vars {
                x[b] = self.rhs[i].clone();
            }
        }
        x
    }

    fn objective_value(&self, cost: &[T]) -> T {
        self.basis
            .iter()
            .zip(&self.rhs)
            .fold(T::zero(), |acc, (&b, r)| acc.add(&cost[b].mul(r)))
    }

    fn reduced_cost(&self, cost: &[T], j: usize) -> T {
        self.basis
            .iter()
            .zip(&self.rows)
            .fold(cost[j].clone(), |acc, (&b, row)| {
                if row[j].is_zero() {
                    acc
                } else {
                    acc.sub(&cost[b].mul(&row[j]))
                }
            })
    }

    fn optimize(&mut self, cost: &[T], allow_artificial: bool) -> Result<(), LpError> {
        loop {
            let entering = (0..self.kinds.len()).find(|&j| {
                (allow_artificial || self.kinds[j] != Column::Artificial)
                    && !self.basis.contains(&j)
                    && self.reduced_cost(cost, j).is_negative()
            });
            let Some(j) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[j].is_positive() {
                    continue;
                }
                let ratio = self.rhs[i].div(&row[j]);
                let better = match &leaving {
                    None => true,
                    Some((best_i, best)) => match ratio.compare(best) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[i] < self.basis[*best_i],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
            let Some((i, _)) = leaving else {
                return Err(LpError::Unbounded);
            };
            self.pivot(i, j);
        }
    }

    fn pivot(&mut self, pivot_row: usize, col: usize) {
        let pivot = self.rows[pivot_row][col].clone();
        for a in self.rows[pivot_row].iter_mut() {
            *a = a.div(&pivot);
        }
        self.rhs[pivot_row] = self.rhs[pivot_row].div(&pivot);
        let prow = self.rows[pivot_row].clone();
        let prhs = self.rhs[pivot_row].clone();
        for i in 0..self.rows.len() {
            if i == pivot_row {
                continue;
            }
            let factor = self.rows[i][col].clone();
            if factor.is_zero() {
                continue;
            }
            for (a, p) in self.rows[i].iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *a = a.sub(&factor.mul(p));
                }
            }
            self.rhs[i] = self.rhs[i].sub(&factor.mul(&prhs));
        }
        self.basis[pivot_row] = col;
    }

    /// After a successful phase one every artificial basic sits at zero.
    /// Pivot each onto a real column, or drop its row when the row is a
    /// combination of the others.
    fn drive_out_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.kinds[self.basis[i]] != Column::Artificial {
                i += 1;
                continue;
            }
            let replacement =
                (0..self.kinds.len()).find(|&j| self.kinds[j] != Column::Artificial && !self.rows[i][j].is_zero());
            match replacement {
                Some(j) => {
                    self.pivot(i, j);
                    i += 1;
                }
                None => {
                    self.rows.remove(i);
                    self.rhs.remove(i);
                    self.basis.remove(i);
                }
            }
        }
    }
}

/// Minimum and maximum of `objective · x` over `{x >= 0 : constraints}`.
pub fn extremize<T: LpScalar>(
    n_vars: usize,
    constraints: &[Constraint<T>],
    objective: &[T],
) -> Result<(Optimum<T>, Optimum<T>), LpError> {
    let region = FeasibleRegion::new(n_vars, constraints)?;
    Ok((region.minimize(objective)?, region.maximize(objective)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn qi(n: i64) -> BigRational {
        q(n, 1)
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let cons = vec![
            Constraint {
                coeffs: vec![qi(1), qi(0)],
                relation: Relation::Le,
                rhs: qi(4),
            },
            Constraint {
                coeffs: vec![qi(0), qi(2)],
                relation: Relation::Le,
                rhs: qi(12),
            },
            Constraint {
                coeffs: vec![qi(3), qi(2)],
                relation: Relation::Le,
                rhs: qi(18),
            },
        ];
        let region = FeasibleRegion::new(2, &cons).unwrap();
        let opt = region.maximize(&[qi(3), qi(5)]).unwrap();
        assert_eq!(opt.value, qi(36));
        assert_eq!(opt.point, vec![qi(2), qi(6)]);
        let low = region.minimize(&[qi(3), qi(5)]).unwrap();
        assert_eq!(low.value, qi(0));
    }

    #[test]
    fn equality_and_ge_constraints() {
        // x + y + z = 1, x >= 1/3, z <= 1/4; min/max of y.
        let cons = vec![
            Constraint {
                coeffs: vec![qi(1), qi(1), qi(1)],
                relation: Relation::Eq,
                rhs: qi(1),
            },
            Constraint {
                coeffs: vec![qi(1), qi(0), qi(0)],
                relation: Relation::Ge,
                rhs: q(1, 3),
            },
            Constraint {
                coeffs: vec![qi(0), qi(0), qi(1)],
                relation: Relation::Le,
                rhs: q(1, 4),
            },
        ];
        let (lo, hi) = extremize(3, &cons, &[qi(0), qi(1), qi(0)]).unwrap();
        assert_eq!(lo.value, qi(0));
        assert_eq!(hi.value, q(2, 3));
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // -x <= -2  (x >= 2), x <= 5
        let cons = vec![
            Constraint {
                coeffs: vec![qi(-1)],
                relation: Relation::Le,
                rhs: qi(-2),
            },
            Constraint {
                coeffs: vec![qi(1)],
                relation: Relation::Le,
                rhs: qi(5),
            },
        ];
        let (lo, hi) = extremize(1, &cons, &[qi(1)]).unwrap();
        assert_eq!((lo.value, hi.value), (qi(2), qi(5)));
    }

    #[test]
    fn infeasible_is_reported() {
        let cons = vec![
            Constraint {
                coeffs: vec![qi(1), qi(1)],
                relation: Relation::Eq,
                rhs: qi(1),
            },
            Constraint {
                coeffs: vec![qi(1), qi(1)],
                relation: Relation::Ge,
                rhs: qi(2),
            },
        ];
        assert_eq!(FeasibleRegion::new(2, &cons).unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn unbounded_is_reported() {
        let cons = vec![Constraint {
            coeffs: vec![qi(1), qi(-1)],
            relation: Relation::Le,
            rhs: qi(1),
        }];
        let region = FeasibleRegion::new(2, &cons).unwrap();
        assert_eq!(region.maximize(&[qi(0), qi(1)]).unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        // 2x2 transportation polytope: row sums and column sums share one redundancy.
        let cons = vec![
            Constraint {
                coeffs: vec![qi(1), qi(1), qi(0), qi(0)],
                relation: Relation::Eq,
                rhs: q(1, 2),
            },
            Constraint {
                coeffs: vec![qi(0), qi(0), qi(1), qi(1)],
                relation: Relation::Eq,
                rhs: q(1, 2),
            },
            Constraint {
                coeffs: vec![qi(1), qi(0), qi(1), qi(0)],
                relation: Relation::Eq,
                rhs: q(3, 4),
            },
            Constraint {
                coeffs: vec![qi(0), qi(1), qi(0), qi(1)],
                relation: Relation::Eq,
                rhs: q(1, 4),
            },
        ];
        let (lo, hi) = extremize(4, &cons, &[qi(1), qi(0), qi(0), qi(0)]).unwrap();
        assert_eq!(lo.value, q(1, 4));
        assert_eq!(hi.value, q(1, 2));
    }

    #[test]
    fn degenerate_program_terminates() {
        // Klee-Minty style degeneracy: many constraints tight at the origin.
        let cons = vec![
            Constraint {
                coeffs: vec![qi(1), qi(1), qi(-1)],
                relation: Relation::Le,
                rhs: qi(0),
            },
            Constraint {
                coeffs: vec![qi(-1), qi(1), qi(0)],
                relation: Relation::Le,
                rhs: qi(0),
            },
            Constraint {
                coeffs: vec![qi(0), qi(0), qi(1)],
                relation: Relation::Le,
                rhs: qi(1),
            },
        ];
        let (_, hi) = extremize(3, &cons, &[qi(1), qi(1), qi(0)]).unwrap();
        assert_eq!(hi.value, qi(1));
    }

    #[test]
    fn float_path_agrees_with_exact() {
        let cons = vec![
            Constraint {
                coeffs: vec![1.0, 1.0, 1.0],
                relation: Relation::Eq,
                rhs: 1.0,
            },
            Constraint {
                coeffs: vec![1.0, 0.0, 0.0],
                relation: Relation::Ge,
                rhs: 1.0 / 3.0,
            },
            Constraint {
                coeffs: vec![0.0, 0.0, 1.0],
                relation: Relation::Le,
                rhs: 0.25,
            },
        ];
        let (lo, hi) = extremize(3, &cons, &[0.0, 1.0, 0.0]).unwrap();
        assert!(lo.value.abs() < 1e-12);
        assert!((hi.value - 2.0 / 3.0).abs() < 1e-12);
    }
}
