//! Joint distribution functions with fixed margins.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::{Constraint, FeasibleRegion, LpError, Relation};
use crate::region::Interval;
use crate::universe::{GridDim, ParamGrid, Universe};
use crate::value::{decimal_rational, rational_to_f64, Value};

/// A distribution function on finitely many support points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCdf {
    support: Vec<f64>,
    cdf: Vec<BigRational>,
}

impl DiscreteCdf {
    pub fn new(support: Vec<f64>, cdf_values: Vec<f64>) -> Result<Self> {
        if cdf_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint(
                "distribution function values must be finite".into(),
            ));
        }
        Self::from_rationals(support, cdf_values.into_iter().map(decimal_rational).collect())
    }

    pub fn from_rationals(support: Vec<f64>, cdf: Vec<BigRational>) -> Result<Self> {
        if support.is_empty() || support.len() != cdf.len() {
            return Err(Error::InvalidPoint(
                "support and cdf values must have the same nonzero length".into(),
            ));
        }
        if support.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidPoint("support must be strictly increasing".into()));
        }
        if cdf.iter().any(|v| v.is_negative() || *v > BigRational::one()) || cdf.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidPoint("cdf values must be nondecreasing in [0, 1]".into()));
        }
        if !cdf.last().is_some_and(One::is_one) {
            return Err(Error::InvalidPoint("cdf must end at 1".into()));
        }
        Ok(DiscreteCdf { support, cdf })
    }

    /// Uniform on `{1, ..., n}`.
    pub fn uniform(n: usize) -> Self {
        let support = (1..=n).map(|i| i as f64).collect();
        let cdf = (1..=n).map(|i| BigRational::new(i.into(), n.into())).collect();
        DiscreteCdf { support, cdf }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn values(&self) -> &[BigRational] {
        &self.cdf
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Point masses.
    pub fn pmf(&self) -> Vec<BigRational> {
        let mut prev = BigRational::zero();
        self.cdf
            .iter()
            .map(|c| {
                let m = c - &prev;
                prev = c.clone();
                m
            })
            .collect()
    }

    /// Index of the largest support point `<= x`.
    pub fn index_at(&self, x: f64) -> Result<usize> {
        let last = *self.support.last().expect("nonempty");
        if !(x >= self.support[0] && x <= last) {
            return Err(Error::OutOfSupport(x));
        }
        Ok(self.support.partition_point(|&s| s <= x) - 1)
    }

    pub fn at(&self, x: f64) -> Result<BigRational> {
        Ok(self.cdf[self.index_at(x)?].clone())
    }
}

/// `(W, M) = (max(u + v - 1, 0), min(u, v))`.
pub fn frechet_bounds(u: f64, v: f64) -> Result<(f64, f64)> {
    for x in [u, v] {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfRange(x));
        }
    }
    Ok(((u + v - 1.0).max(0.0), u.min(v)))
}

pub fn frechet_bounds_exact(u: &BigRational, v: &BigRational) -> (BigRational, BigRational) {
    let w = (u + v - BigRational::one()).max(BigRational::zero());
    let m = u.min(v).clone();
    (w, m)
}

/// `[W(F_X(x), F_Y(y)), M(F_X(x), F_Y(y))]`.
pub fn joint_cdf_region(fx: &DiscreteCdf, fy: &DiscreteCdf, x: f64, y: f64) -> Result<Interval> {
    let (w, m) = frechet_bounds_exact(&fx.at(x)?, &fy.at(y)?);
    Interval::new(rational_to_f64(&w), rational_to_f64(&m))
}

/// Extremes of `P(X <= x, Y <= y)` with the attaining tables.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCdfBounds {
    pub lo: BigRational,
    pub hi: BigRational,
    /// `table[i][j] = P(X = x_i, Y = y_j)`.
    pub min_table: Vec<Vec<BigRational>>,
    pub max_table: Vec<Vec<BigRational>>,
}

/// Exact linear program over contingency tables with the two margins.
/// The feasible basis is shared by every query.
#[derive(Debug, Clone)]
pub struct JointCdfOracle {
    nx: usize,
    ny: usize,
    region: FeasibleRegion<BigRational>,
}

impl JointCdfOracle {
    pub fn new(fx: &DiscreteCdf, fy: &DiscreteCdf) -> Result<Self> {
        let (nx, ny) = (fx.len(), fy.len());
        let mut rows = Vec::with_capacity(nx + ny);
        for (i, m) in fx.pmf().into_iter().enumerate() {
            let coeffs = (0..nx * ny).map(|c| indicator(c / ny == i)).collect();
            rows.push(Constraint {
                coeffs,
                relation: Relation::Eq,
                rhs: m,
            });
        }
        for (j, m) in fy.pmf().into_iter().enumerate() {
            let coeffs = (0..nx * ny).map(|c| indicator(c % ny == j)).collect();
            rows.push(Constraint {
                coeffs,
                relation: Relation::Eq,
                rhs: m,
            });
        }
        let region = FeasibleRegion::new(nx * ny, &rows).map_err(|e| match e {
            LpError::Infeasible => Error::Infeasible,
            LpError::Unbounded => Error::Unbounded,
        })?;
        Ok(JointCdfOracle { nx, ny, region })
    }

    /// Bounds on the cumulative mass of cells `i <= ix`, `j <= iy`.
    pub fn bounds_at(&self, ix: usize, iy: usize) -> Result<JointCdfBounds> {
        let objective: Vec<BigRational> = (0..self.nx * self.ny)
            .map(|c| indicator(c / self.ny <= ix && c % self.ny <= iy))
            .collect();
        let lift = |e: LpError| match e {
            LpError::Infeasible => Error::Infeasible,
            LpError::Unbounded => Error::Unbounded,
        };
        let min = self.region.minimize(&objective).map_err(lift)?;
        let max = self.region.maximize(&objective).map_err(lift)?;
        Ok(JointCdfBounds {
            lo: min.value,
            hi: max.value,
            min_table: self.table(min.point),
            max_table: self.table(max.point),
        })
    }

    fn table(&self, flat: Vec<BigRational>) -> Vec<Vec<BigRational>> {
        flat.chunks(self.ny).map(<[BigRational]>::to_vec).collect()
    }
}

fn indicator(b: bool) -> BigRational {
    if b {
        BigRational::one()
    } else {
        BigRational::zero()
    }
}

/// LP bounds on `F_XY(x, y)`.
pub fn joint_cdf_lp(fx: &DiscreteCdf, fy: &DiscreteCdf, x: f64, y: f64) -> Result<JointCdfBounds> {
    let (ix, iy) = (fx.index_at(x)?, fy.index_at(y)?);
    JointCdfOracle::new(fx, fy)?.bounds_at(ix, iy)
}

/// Largest violation of nonnegativity or of either margin by `table`.
pub fn table_residual(table: &[Vec<BigRational>], fx: &DiscreteCdf, fy: &DiscreteCdf) -> BigRational {
    let mut worst = BigRational::zero();
    let mut bump = |r: BigRational| {
        if r > worst {
            worst = r;
        }
    };
    for row in table {
        for p in row {
            bump(-p.clone());
        }
    }
    for (i, m) in fx.pmf().iter().enumerate() {
        let s: BigRational = table[i].iter().sum();
        bump((s - m).abs());
    }
    for (j, m) in fy.pmf().iter().enumerate() {
        let s: BigRational = table.iter().map(|row| row[j].clone()).sum();
        bump((s - m).abs());
    }
    worst
}

/// Bivariate normal parameters `(μx, σx, μy, σy, ρ)` on a grid, observing
/// the margins `(μx, σx, μy, σy)`; the estimand is `ρ`.
pub fn gaussian_copula_grid(mus: &[f64], sigmas: &[f64], rho_step: f64) -> Result<Universe> {
    let pick = |xs: &[f64]| -> Result<GridDim> {
        match xs {
            [x] => Ok(GridDim::fixed(*x)),
            [lo, .., hi] => GridDim::new(*lo, *hi, (hi - lo) / (xs.len() - 1) as f64),
            [] => Err(Error::InvalidUniverse("empty parameter list".into())),
        }
    };
    let (mu, sigma) = (pick(mus)?, pick(sigmas)?);
    if sigma.points().iter().any(|&s| s <= 0.0) {
        return Err(Error::InvalidUniverse("scales must be positive".into()));
    }
    let rho = GridDim::new(-1.0, 1.0, rho_step)?;
    Ok(Universe::grid(
        ParamGrid::new(vec![mu, sigma, mu, sigma, rho]),
        |s| Value::real(s.as_point().expect("grid state")[4]),
        |s| Value::tuple(s.as_point().expect("grid state")[..4].iter().copied()),
    ))
}
