//! Finite grids: parameter boxes, discretized probability simplices and
//! per-unit cell tables.

use crate::error::{Error, Result};

/// Mixed-radix counter, last digit fastest.
#[derive(Debug, Clone)]
pub(crate) struct Odometer {
    radices: Vec<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl Odometer {
    pub(crate) fn new(radices: Vec<usize>) -> Self {
        let done = radices.contains(&0);
        let digits = vec![0; radices.len()];
        Odometer { radices, digits, done }
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.digits.clone();
        let mut i = self.radices.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < self.radices[i] {
                break;
            }
            self.digits[i] = 0;
        }
        Some(current)
    }
}

/// All ways to write `total` as an ordered sum of `parts` non-negative
/// integers, in lexicographically decreasing order of the first part.
pub(crate) fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            rec(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// One axis of a parameter box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridDim {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridDim {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidUniverse(format!(
                "grid step must be positive, got {step}"
            )));
        }
        if !(lo <= hi) {
            return Err(Error::InvalidUniverse(format!("grid bounds out of order: {lo} > {hi}")));
        }
        Ok(GridDim { lo, hi, step })
    }

    /// Single-point axis.
    pub fn fixed(x: f64) -> Self {
        GridDim {
            lo: x,
            hi: x,
            step: 1.0,
        }
    }

    /// Number of grid points `lo, lo + step, ...` not exceeding `hi`
    /// (up to a relative slack of 1e-9 steps).
    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }
}

/// Cartesian product of grid axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub dims: Vec<GridDim>,
}

impl ParamGrid {
    pub fn new(dims: Vec<GridDim>) -> Self {
        ParamGrid { dims }
    }

    pub fn cardinality(&self) -> u128 {
        self.dims
            .iter()
            .fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128))
    }

    pub(crate) fn points(&self) -> impl Iterator<Item = Vec<f64>> + Send + '_ {
        Odometer::new(self.dims.iter().map(GridDim::len).collect())
            .map(move |idx| idx.iter().zip(&self.dims).map(|(&k, d)| d.point(k)).collect())
    }
}

/// Conditional parametrization of a joint distribution over cells: a margin
/// over `margin` classes and, for each class, a conditional over `rest`
/// classes. Cell `cell_of[z][x]` carries mass `r_z * q_z(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub cell_of: Vec<Vec<usize>>,
}

impl Factorization {
    fn n_margin(&self) -> usize {
        self.cell_of.len()
    }

    fn n_rest(&self) -> usize {
        self.cell_of.first().map_or(0, Vec::len)
    }
}

/// Probability vectors over `cells` whose entries are multiples of `1/units`.
///
/// With a factorization, the grid is laid on the margin and on each
/// conditional instead of on the joint. Conditionals given a null margin
/// class are unidentified by construction and are not enumerated: such
/// states carry zero mass on that class and appear once.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexGrid {
    pub cells: usize,
    pub units: u32,
    pub factorization: Option<Factorization>,
}

impl SimplexGrid {
    /// `step` must divide 1.
    pub fn new(cells: usize, step: f64, factorization: Option<Factorization>) -> Result<Self> {
        let units = units_for_step(step)?;
        if cells == 0 {
            return Err(Error::InvalidUniverse("simplex grid needs at least one cell".into()));
        }
        if let Some(f) = &factorization {
            let mut seen = vec![false; cells];
            for row in &f.cell_of {
                if row.len() != f.n_rest() {
                    return Err(Error::InvalidUniverse("ragged factorization".into()));
                }
                for &c in row {
                    if c >= cells || seen[c] {
                        return Err(Error::InvalidUniverse(
                            "factorization is not a bijection onto cells".into(),
                        ));
                    }
                    seen[c] = true;
                }
            }
            if !seen.iter().all(|&s| s) {
                return Err(Error::InvalidUniverse("factorization does not cover every cell".into()));
            }
        }
        Ok(SimplexGrid {
            cells,
            units,
            factorization,
        })
    }

    pub fn step(&self) -> f64 {
        1.0 / self.units as f64
    }

    pub fn cardinality(&self) -> u128 {
        let u = self.units as u128;
        match &self.factorization {
            None => binomial(u + self.cells as u128 - 1, self.cells as u128 - 1),
            Some(f) => {
                let per_class = binomial(u + f.n_rest() as u128 - 1, f.n_rest() as u128 - 1);
                // Sum over margin compositions of per_class^(number of positive parts):
                // choose which j classes are positive, then split `units` among them.
                (1..=f.n_margin() as u128).fold(0u128, |acc, j| {
                    if j > u {
                        return acc;
                    }
                    let ways = binomial(f.n_margin() as u128, j).saturating_mul(binomial(u - 1, j - 1));
                    let conditionals = (0..j).fold(1u128, |a, _| a.saturating_mul(per_class));
                    acc.saturating_add(ways.saturating_mul(conditionals))
                })
            }
        }
    }

    pub(crate) fn distributions(&self) -> Box<dyn Iterator<Item = Vec<f64>> + Send + '_> {
        let scale = self.units as f64;
        match &self.factorization {
            None => Box::new(
                compositions(self.units, self.cells)
                    .into_iter()
                    .map(move |c| c.into_iter().map(|k| k as f64 / scale).collect()),
            ),
            Some(f) => {
                let rest = compositions(self.units, f.n_rest());
                let margins = compositions(self.units, f.n_margin());
                let cells = self.cells;
                Box::new(margins.into_iter().flat_map(move |margin| {
                    let active: Vec<usize> = (0..margin.len()).filter(|&z| margin[z] > 0).collect();
                    let rest = rest.clone();
                    let radices = vec![rest.len(); active.len()];
                    Odometer::new(radices).map(move |choice| {
                        let mut p = vec![0.0; cells];
                        for (&z, &k) in active.iter().zip(&choice) {
                            let r = margin[z] as f64 / scale;
                            for (x, &q) in rest[k].iter().enumerate() {
                                p[f.cell_of[z][x]] = r * (q as f64 / scale);
                            }
                        }
                        p
                    })
                }))
            }
        }
    }
}

pub(crate) fn units_for_step(step: f64) -> Result<u32> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidUniverse(format!(
            "probability grid step must lie in (0, 1], got {step}"
        )));
    }
    let units = (1.0 / step).round();
    if (units * step - 1.0).abs() > 1e-9 || units > u32::MAX as f64 {
        return Err(Error::InvalidUniverse(format!(
            "probability grid step {step} does not divide 1"
        )));
    }
    Ok(units as u32)
}

/// Every assignment of one of `cells` joint cells to each of `units` units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitTable {
    pub units: usize,
    pub cells: usize,
}

impl UnitTable {
    pub fn cardinality(&self) -> u128 {
        (0..self.units).fold(1u128, |acc, _| acc.saturating_mul(self.cells as u128))
    }

    pub(crate) fn tables(&self) -> Odometer {
        Odometer::new(vec![self.cells; self.units])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odometer_counts_lexicographically() {
        let all: Vec<_> = Odometer::new(vec![2, 3]).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 0]);
        assert_eq!(all[1], vec![0, 1]);
        assert_eq!(all[5], vec![1, 2]);
        assert_eq!(Odometer::new(vec![]).count(), 1);
        assert_eq!(Odometer::new(vec![3, 0]).count(), 0);
    }

    #[test]
    fn compositions_match_stars_and_bars() {
        for total in 0..6u32 {
            for parts in 1..5usize {
                let c = compositions(total, parts);
                assert_eq!(
                    c.len() as u128,
                    binomial(total as u128 + parts as u128 - 1, parts as u128 - 1)
                );
                assert!(c.iter().all(|v| v.iter().sum::<u32>() == total));
            }
        }
    }

    #[test]
    fn one_dimensional_grid() {
        let g = ParamGrid::new(vec![GridDim::new(0.0, 1.0, 0.5).unwrap()]);
        let pts: Vec<_> = g.points().collect();
        assert_eq!(pts, vec![vec![0.0], vec![0.5], vec![1.0]]);
        assert_eq!(g.cardinality(), 3);
    }

    #[test]
    fn grid_tolerates_float_steps() {
        assert_eq!(GridDim::new(0.0, 1.0, 0.1).unwrap().len(), 11);
        assert_eq!(GridDim::new(0.0, 1.0, 0.01).unwrap().len(), 101);
        assert_eq!(GridDim::new(-1.0, 1.0, 0.25).unwrap().len(), 9);
    }

    #[test]
    fn invalid_grid_dims() {
        assert!(GridDim::new(0.0, 1.0, 0.0).is_err());
        assert!(GridDim::new(1.0, 0.0, 0.1).is_err());
        assert!(GridDim::new(0.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn simplex_cardinality_matches_enumeration() {
        let joint = SimplexGrid::new(4, 0.25, None).unwrap();
        assert_eq!(joint.cardinality(), joint.distributions().count() as u128);

        let f = Factorization {
            cell_of: vec![vec![0, 2, 4], vec![1, 3, 5]],
        };
        let factored = SimplexGrid::new(6, 0.25, Some(f)).unwrap();
        let all: Vec<_> = factored.distributions().collect();
        assert_eq!(factored.cardinality(), all.len() as u128);
        for p in &all {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
        let mut keys: Vec<Vec<u64>> = all.iter().map(|p| p.iter().map(|x| x.to_bits()).collect()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), all.len(), "factored grid repeats a joint");
    }

    #[test]
    fn step_must_divide_one() {
        assert_eq!(units_for_step(0.05).unwrap(), 20);
        assert_eq!(units_for_step(0.1).unwrap(), 10);
        assert!(units_for_step(0.3).is_err());
        assert!(units_for_step(0.0).is_err());
        assert!(units_for_step(1.5).is_err());
    }

    #[test]
    fn unit_table_enumerates_all_assignments() {
        let t = UnitTable { units: 3, cells: 2 };
        assert_eq!(t.tables().count() as u128, t.cardinality());
        assert_eq!(t.cardinality(), 8);
    }
}
