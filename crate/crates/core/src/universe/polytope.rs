//! Probability polytopes: the simplex over a finite set of cells cut by
//! linear constraints, with linear (or ratio-of-linear) observation
//! functionals and a linear estimand.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::lp::Relation;
use crate::value::{rational_to_f64, Quantizer, Value};

pub type Coeffs = Vec<BigRational>;

/// `coeffs · p (relation) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Coeffs,
    pub relation: Relation,
    pub rhs: BigRational,
}

impl LinearConstraint {
    pub fn eq(coeffs: Coeffs, rhs: BigRational) -> Self {
        LinearConstraint {
            coeffs,
            relation: Relation::Eq,
            rhs,
        }
    }

    pub fn holds(&self, p: &[f64], tol: f64) -> bool {
        let lhs = dot(&self.coeffs, p);
        let rhs = rational_to_f64(&self.rhs);
        match self.relation {
            Relation::Eq => (lhs - rhs).abs() <= tol,
            Relation::Le => lhs <= rhs + tol,
            Relation::Ge => lhs >= rhs - tol,
        }
    }
}

/// A scalar observation component.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    Linear(Coeffs),
    /// `num · p / den · p`, undefined when `den · p = 0`.
    Ratio {
        num: Coeffs,
        den: Coeffs,
    },
}

impl Functional {
    pub fn evaluate(&self, p: &[f64], q: &Quantizer) -> Value {
        match self {
            Functional::Linear(c) => q.real(dot(c, p)),
            Functional::Ratio { num, den } => {
                let d = dot(den, p);
                if d.abs() <= q.step() {
                    Value::Missing
                } else {
                    q.real(dot(num, p) / d)
                }
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Functional::Linear(_))
    }
}

/// `P(left, right) = P(left) P(right)` where every cell belongs to one
/// `left` class and one `right` class.
#[derive(Debug, Clone, PartialEq)]
pub struct Independence {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub n_left: usize,
    pub n_right: usize,
}

impl Independence {
    /// Total variation between the `(left, right)` joint and the product of its margins.
    pub fn total_variation(&self, p: &[f64]) -> f64 {
        let mut joint = vec![0.0; self.n_left * self.n_right];
        let mut pl = vec![0.0; self.n_left];
        let mut pr = vec![0.0; self.n_right];
        for (c, &mass) in p.iter().enumerate() {
            joint[self.left[c] * self.n_right + self.right[c]] += mass;
            pl[self.left[c]] += mass;
            pr[self.right[c]] += mass;
        }
        let mut tv = 0.0;
        for l in 0..self.n_left {
            for r in 0..self.n_right {
                tv += (joint[l * self.n_right + r] - pl[l] * pr[r]).abs();
            }
        }
        tv / 2.0
    }

    /// Indicator coefficients of `P(right = r)`.
    pub fn right_margin(&self, r: usize) -> Coeffs {
        self.right
            .iter()
            .map(|&rc| {
                if rc == r {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect()
    }

    pub fn left_margin(&self, l: usize) -> Coeffs {
        self.left
            .iter()
            .map(|&lc| {
                if lc == l {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect()
    }

    /// The roles swapped.
    pub fn transposed(&self) -> Independence {
        Independence {
            left: self.right.clone(),
            right: self.left.clone(),
            n_left: self.n_right,
            n_right: self.n_left,
        }
    }

    /// Linear equalities `P(l, r) - m_r P(l) = 0` valid once the right margin
    /// is fixed to `margin`.
    pub fn linearize(&self, margin: &[BigRational]) -> Vec<LinearConstraint> {
        let mut out = Vec::with_capacity(self.n_left * self.n_right);
        for l in 0..self.n_left {
            for (r, m) in margin.iter().enumerate() {
                let coeffs = (0..self.left.len())
                    .map(|c| {
                        if self.left[c] != l {
                            return BigRational::zero();
                        }
                        let own = if self.right[c] == r {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        };
                        own - m
                    })
                    .collect();
                out.push(LinearConstraint::eq(coeffs, BigRational::zero()));
            }
        }
        out
    }
}

/// The simplex over `cells`, cut by constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub cells: usize,
    pub constraints: Vec<LinearConstraint>,
    pub independence: Vec<Independence>,
    pub observation: Vec<Functional>,
    pub estimand: Option<Coeffs>,
}

impl Polytope {
    pub fn new(cells: usize, observation: Vec<Functional>, estimand: Option<Coeffs>) -> Self {
        Polytope {
            cells,
            constraints: Vec::new(),
            independence: Vec::new(),
            observation,
            estimand,
        }
    }

    pub fn observe(&self, p: &[f64], q: &Quantizer) -> Value {
        Value::Tuple(self.observation.iter().map(|f| f.evaluate(p, q)).collect())
    }

    pub fn estimate(&self, p: &[f64], q: &Quantizer) -> Value {
        match &self.estimand {
            Some(c) => q.real(dot(c, p)),
            None => Value::Missing,
        }
    }

    /// Membership test for a probability vector (tolerance `tol`).
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.cells
            && p.iter().all(|&x| x >= -tol)
            && (p.iter().sum::<f64>() - 1.0).abs() <= tol
            && self.constraints.iter().all(|c| c.holds(p, tol))
            && self.independence.iter().all(|ind| ind.total_variation(p) <= tol)
    }
}

pub(crate) fn dot(c: &[BigRational], p: &[f64]) -> f64 {
    c.iter()
        .zip(p)
        .filter(|(a, _)| !a.is_zero())
        .map(|(a, x)| rational_to_f64(a) * x)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn ratio_is_missing_on_null_denominator() {
        let f = Functional::Ratio {
            num: vec![q(1, 1), q(0, 1)],
            den: vec![q(1, 1), q(0, 1)],
        };
        let qz = Quantizer::default();
        assert_eq!(f.evaluate(&[0.0, 1.0], &qz), Value::Missing);
        assert_eq!(f.evaluate(&[0.5, 0.5], &qz), Value::real(1.0));
    }

    #[test]
    fn independence_linearization_holds_on_products() {
        // 2 x 2 cells, index = 2*l + r
        let ind = Independence {
            left: vec![0, 0, 1, 1],
            right: vec![0, 1, 0, 1],
            n_left: 2,
            n_right: 2,
        };
        let product = [0.3 * 0.4, 0.3 * 0.6, 0.7 * 0.4, 0.7 * 0.6];
        assert!(ind.total_variation(&product) < 1e-15);
        for c in ind.linearize(&[q(2, 5), q(3, 5)]) {
            assert!(c.holds(&product, 1e-12));
        }
        let skewed = [0.4, 0.0, 0.0, 0.6];
        assert!((ind.total_variation(&skewed) - 0.48).abs() < 1e-12);
        assert!(ind
            .linearize(&[q(2, 5), q(3, 5)])
            .iter()
            .any(|c| !c.holds(&skewed, 1e-12)));
    }
}
