//! Lowering of a [`ProblemSpec`] to universes over the joint distribution
//! of the declared variables.
//!
//! Cells are the product of the supports in declaration order, the last
//! variable varying fastest. Grid problems range over a simplex grid (laid
//! on `P(Z)` and `P(rest | Z)` when every conditional observation shares the
//! conditioning variable `Z`); population problems over assignments of
//! units to cells, read through their empirical distribution. Every grid
//! problem also has a polytope companion for linear programming.

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::ast::*;
use crate::case_studies::{
    causal_ate_bounds, causal_ate_reduced_form, manski_bounds, manski_reduced_form, randomized_ate, CausalPoint,
    MissingDataPoint,
};
use crate::error::{Error, Result};
use crate::region::{Interval, Region};
use crate::universe::{
    Assumption, Coeffs, Factorization, Functional, Independence, LinearConstraint, LinearForm, Polytope, SimplexGrid,
    State, UnitTable, Universe, DEFAULT_CAP,
};
use crate::value::{decimal_rational, Quantizer, Value, DEFAULT_EPS_EQ};

/// Probability grid used when neither the document nor the caller sets one.
pub const DEFAULT_GRID_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions {
    /// Overrides the document's `grid_step`.
    pub grid_step: Option<f64>,
    pub cap: u128,
    /// Equality tolerance (quantization step of every value).
    pub eps: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            grid_step: None,
            cap: DEFAULT_CAP,
            eps: DEFAULT_EPS_EQ,
        }
    }
}

/// `num · p / den · p`, or `num · p` without a denominator.
#[derive(Debug, Clone)]
struct Ratio {
    num: Vec<f64>,
    den: Option<Vec<f64>>,
}

fn dot(c: &[f64], p: &[f64]) -> f64 {
    c.iter().zip(p).map(|(a, b)| a * b).sum()
}

impl Ratio {
    fn functional(&self) -> Functional {
        let exact = |c: &[f64]| -> Coeffs { c.iter().map(|&x| decimal_rational(x)).collect() };
        match &self.den {
            None => Functional::Linear(exact(&self.num)),
            Some(den) => Functional::Ratio {
                num: exact(&self.num),
                den: exact(den),
            },
        }
    }
}

/// A compiled expression: a scalar, or a tuple sharing one denominator.
#[derive(Debug, Clone)]
enum Term {
    Scalar(Ratio),
    Tuple(Vec<Ratio>),
}

impl Term {
    fn eval(&self, p: &[f64], q: &Quantizer) -> Value {
        let undefined = |r: &Ratio| r.den.as_ref().map(|d| dot(d, p)).filter(|&d| d <= q.step());
        let value = |r: &Ratio| match &r.den {
            None => dot(&r.num, p),
            Some(d) => dot(&r.num, p) / dot(d, p),
        };
        match self {
            Term::Scalar(r) => {
                if undefined(r).is_some() {
                    Value::Missing
                } else {
                    q.real(value(r))
                }
            }
            Term::Tuple(rs) => {
                if rs.first().is_some_and(|r| undefined(r).is_some()) {
                    Value::Missing
                } else {
                    q.tuple(rs.iter().map(value))
                }
            }
        }
    }

    fn parts(&self) -> &[Ratio] {
        match self {
            Term::Scalar(r) => std::slice::from_ref(r),
            Term::Tuple(rs) => rs,
        }
    }

    fn linear(&self) -> Option<Coeffs> {
        match self {
            Term::Scalar(Ratio { num, den: None }) => Some(num.iter().map(|&x| decimal_rational(x)).collect()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Space {
    Grid,
    Units,
}

/// A compiled estimand.
#[derive(Debug, Clone)]
pub struct EstimandPlan {
    pub name: String,
    term: Arc<Term>,
    /// Coefficients when the estimand is linear in the joint distribution.
    pub linear: Option<Coeffs>,
}

/// A problem ready for analysis.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub quantizer: Quantizer,
    pub cap: u128,
    /// Probability grid step (grid problems only).
    pub grid_step: Option<f64>,
    pub cells: usize,
    /// The observation as seen by the enumerable universe.
    pub l0: Option<Value>,
    /// The observation flattened to scalar functionals for the polytope.
    pub l0_flat: Option<Value>,
    pub assumptions: Vec<Assumption>,
    pub estimands: Vec<EstimandPlan>,
    space: Space,
    grid: Option<SimplexGrid>,
    observe: Arc<Vec<Term>>,
    digits: Vec<Vec<usize>>,
}

/// Closed-form solutions the compiler recognizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recognized {
    /// Mean of an outcome seen only in one arm of a binary indicator.
    MissingData { point: MissingDataPoint, randomized: bool },
    /// Difference of potential-outcome means under a binary assignment.
    Causal { point: CausalPoint, randomized: bool },
}

impl Recognized {
    pub fn region(&self) -> Result<Region> {
        match self {
            Recognized::MissingData {
                point,
                randomized: true,
            } => Ok(Region::set(BTreeSet::from([Value::real(point.e_y_given_z1)]))),
            Recognized::MissingData {
                point,
                randomized: false,
            } => {
                let (a, b) = point.outcome_bounds;
                let iv = manski_bounds(point)?;
                Ok(Region::interval(iv).with_strong(a < b && iv.lo <= a && iv.hi >= b))
            }
            Recognized::Causal {
                point,
                randomized: true,
            } => Ok(Region::set(BTreeSet::from([Value::real(randomized_ate(point)?)]))),
            Recognized::Causal {
                point,
                randomized: false,
            } => {
                let (a, b) = point.outcome_bounds;
                let iv = causal_ate_bounds(point)?;
                Ok(Region::interval(iv).with_strong(a < b && iv.lo <= a - b && iv.hi >= b - a))
            }
        }
    }

    /// The identified/free decomposition, absent when the region is a point.
    pub fn reduced_form(&self) -> Result<Option<Region>> {
        match self {
            Recognized::MissingData {
                point,
                randomized: false,
            } => manski_reduced_form(point).map(Some),
            Recognized::Causal {
                point,
                randomized: false,
            } => causal_ate_reduced_form(point).map(Some),
            _ => Ok(None),
        }
    }
}

fn invalid(pos: Pos, msg: impl std::fmt::Display) -> Error {
    Error::InvalidProblem(format!("{pos}: {msg}"))
}

struct Layout<'a> {
    spec: &'a ProblemSpec,
    digits: Vec<Vec<usize>>,
}

impl Layout<'_> {
    fn var(&self, name: &str) -> usize {
        self.spec
            .universe
            .variables
            .iter()
            .position(|v| v.name == name)
            .expect("names are checked by the parser")
    }

    fn support(&self, name: &str) -> &[f64] {
        &self.spec.universe.variables[self.var(name)].support
    }

    fn index_of(&self, name: &str, value: f64, pos: Pos) -> Result<usize> {
        self.support(name)
            .iter()
            .position(|&x| x == value)
            .ok_or_else(|| invalid(pos, format!("{value} is not in the support of {name}")))
    }

    /// Indicator of `var = support[k]`, all cells.
    fn indicator(&self, var: usize, k: usize) -> Vec<f64> {
        self.digits
            .iter()
            .map(|d| if d[var] == k { 1.0 } else { 0.0 })
            .collect()
    }

    fn values(&self, var: usize) -> Vec<f64> {
        let support = &self.spec.universe.variables[var].support;
        self.digits.iter().map(|d| support[d[var]]).collect()
    }

    fn condition(&self, c: &Option<Condition>) -> Result<Option<Vec<f64>>> {
        match c {
            None => Ok(None),
            Some(c) => {
                let k = self.index_of(&c.var, c.value, c.pos)?;
                Ok(Some(self.indicator(self.var(&c.var), k)))
            }
        }
    }

    fn ratio(&self, num: Vec<f64>, den: Option<Vec<f64>>) -> Ratio {
        match den {
            None => Ratio { num, den: None },
            Some(d) => Ratio {
                num: num.iter().zip(&d).map(|(a, b)| a * b).collect(),
                den: Some(d),
            },
        }
    }

    fn term(&self, e: &Expr) -> Result<Term> {
        Ok(match &e.kind {
            ExprKind::Expect { var, given } => {
                Term::Scalar(self.ratio(self.values(self.var(var)), self.condition(given)?))
            }
            ExprKind::Prob { var, value, given } => {
                let k = self.index_of(var, *value, e.pos)?;
                Term::Scalar(self.ratio(self.indicator(self.var(var), k), self.condition(given)?))
            }
            ExprKind::Dist { var, given } => {
                let den = self.condition(given)?;
                let v = self.var(var);
                Term::Tuple(
                    (0..self.support(var).len())
                        .map(|k| self.ratio(self.indicator(v, k), den.clone()))
                        .collect(),
                )
            }
            ExprKind::MeanDiff { left, right } => {
                if left == right {
                    return Err(invalid(e.pos, "mean_diff needs two distinct variables"));
                }
                let (a, b) = (self.values(self.var(left)), self.values(self.var(right)));
                Term::Scalar(Ratio {
                    num: a.iter().zip(&b).map(|(x, y)| x - y).collect(),
                    den: None,
                })
            }
        })
    }

    /// Mixed-radix class index of every cell over the variables in `vars`.
    fn classes(&self, vars: &[usize]) -> (Vec<usize>, usize) {
        let radices: Vec<usize> = vars
            .iter()
            .map(|&v| self.spec.universe.variables[v].support.len())
            .collect();
        let n = radices.iter().product();
        let classes = self
            .digits
            .iter()
            .map(|d| vars.iter().zip(&radices).fold(0, |acc, (&v, &r)| acc * r + d[v]))
            .collect();
        (classes, n)
    }
}

fn empirical(s: &State, cells: usize) -> Cow<'_, [f64]> {
    match s {
        State::Distribution(p) => Cow::Borrowed(p),
        State::Units(units) => {
            let mut p = vec![0.0; cells];
            for &c in units {
                p[c] += 1.0;
            }
            let n = units.len() as f64;
            p.iter_mut().for_each(|x| *x /= n);
            Cow::Owned(p)
        }
        other => panic!("compiled problems range over distributions, got {other:?}"),
    }
}

fn ident_arg(a: &AssumeDecl, i: usize) -> Result<&str> {
    match a.args.get(i) {
        Some(Arg::Ident(s)) => Ok(s),
        _ => Err(invalid(
            a.pos,
            format!("argument {} of {} must be a variable", i + 1, a.name),
        )),
    }
}

fn num_arg(a: &AssumeDecl, i: usize) -> Result<f64> {
    match a.args.get(i) {
        Some(Arg::Num(x)) => Ok(*x),
        _ => Err(invalid(
            a.pos,
            format!("argument {} of {} must be a number", i + 1, a.name),
        )),
    }
}

fn arity(a: &AssumeDecl, n: usize) -> Result<()> {
    if a.args.len() != n {
        return Err(invalid(
            a.pos,
            format!("{} takes {n} arguments, got {}", a.name, a.args.len()),
        ));
    }
    Ok(())
}

fn independence_assumption(name: String, ind: Independence, cells: usize) -> Assumption {
    let tv = ind.clone();
    Assumption::new(name, move |s| tv.total_variation(&empirical(s, cells)))
        .with_linear_form(LinearForm::Independence(ind))
}

fn mass_assumption(name: String, weights: Vec<f64>, target: f64, cells: usize) -> Assumption {
    let coeffs = weights.iter().map(|&w| decimal_rational(w)).collect();
    let form = LinearForm::Constraints(vec![LinearConstraint::eq(coeffs, decimal_rational(target))]);
    Assumption::new(name, move |s| dot(&weights, &empirical(s, cells)) - target).with_linear_form(form)
}

fn assumption(layout: &Layout, a: &AssumeDecl, cells: usize) -> Result<Assumption> {
    let name = a.to_string();
    match a.name.as_str() {
        "bounded" => {
            arity(a, 3)?;
            let v = layout.var(ident_arg(a, 0)?);
            let (lo, hi) = (num_arg(a, 1)?, num_arg(a, 2)?);
            if lo > hi {
                return Err(invalid(a.pos, format!("empty bounds [{lo}, {hi}]")));
            }
            let outside = layout
                .values(v)
                .iter()
                .map(|&y| if y < lo || y > hi { 1.0 } else { 0.0 })
                .collect();
            Ok(mass_assumption(name, outside, 0.0, cells))
        }
        "fixed" => {
            arity(a, 3)?;
            let var = ident_arg(a, 0)?;
            let k = layout.index_of(var, num_arg(a, 1)?, a.pos)?;
            let p = num_arg(a, 2)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(a.pos, format!("probability {p} is outside [0, 1]")));
            }
            Ok(mass_assumption(name, layout.indicator(layout.var(var), k), p, cells))
        }
        "randomized" => {
            arity(a, 1)?;
            let z = layout.var(ident_arg(a, 0)?);
            let rest: Vec<usize> = (0..layout.spec.universe.variables.len()).filter(|&v| v != z).collect();
            if rest.is_empty() {
                return Err(invalid(a.pos, "randomized needs another variable"));
            }
            let (left, n_left) = layout.classes(&rest);
            let (right, n_right) = layout.classes(&[z]);
            let ind = Independence {
                left,
                right,
                n_left,
                n_right,
            };
            Ok(independence_assumption(name, ind, cells))
        }
        "independent" => {
            arity(a, 2)?;
            let (x, y) = (layout.var(ident_arg(a, 0)?), layout.var(ident_arg(a, 1)?));
            if x == y {
                return Err(invalid(a.pos, "independent needs two distinct variables"));
            }
            let (left, n_left) = layout.classes(&[x]);
            let (right, n_right) = layout.classes(&[y]);
            let ind = Independence {
                left,
                right,
                n_left,
                n_right,
            };
            Ok(independence_assumption(name, ind, cells))
        }
        other => Err(invalid(a.pos, format!("unknown assumption `{other}`"))),
    }
}

/// Common conditioning variable of the observations, when there is exactly one.
fn conditioning_variable(spec: &ProblemSpec) -> Option<&str> {
    let vars: BTreeSet<&str> = spec
        .observe
        .iter()
        .filter_map(|e| e.condition())
        .map(|c| c.var.as_str())
        .collect();
    if vars.len() == 1 {
        vars.into_iter().next()
    } else {
        None
    }
}

fn observation(spec: &ProblemSpec, terms: &[Term], q: &Quantizer) -> Result<Option<(Value, Value)>> {
    let Some(given) = &spec.given else {
        return Ok(None);
    };
    for b in given {
        if !spec.observe.contains(&b.expr) {
            return Err(invalid(b.expr.pos, format!("`{}` is bound but not observed", b.expr)));
        }
    }
    let mut parts = Vec::new();
    let mut flat = Vec::new();
    for (e, term) in spec.observe.iter().zip(terms) {
        let bound: Vec<&Binding> = given.iter().filter(|b| b.expr == *e).collect();
        let b = match bound.as_slice() {
            [b] => *b,
            [] => return Err(invalid(e.pos, format!("no value given for `{e}`"))),
            [_, b, ..] => return Err(invalid(b.expr.pos, format!("`{e}` is bound twice"))),
        };
        match (term, &b.value) {
            (Term::Scalar(_), GivenValue::Num(x)) => {
                parts.push(q.real(*x));
                flat.push(q.real(*x));
            }
            (Term::Tuple(rs), GivenValue::List(xs)) if rs.len() == xs.len() => {
                parts.push(q.tuple(xs.iter().copied()));
                flat.extend(xs.iter().map(|&x| q.real(x)));
            }
            (Term::Tuple(rs), _) => {
                return Err(invalid(
                    b.expr.pos,
                    format!("`{e}` takes a list of {} numbers", rs.len()),
                ));
            }
            (Term::Scalar(_), GivenValue::List(_)) => {
                return Err(invalid(b.expr.pos, format!("`{e}` takes a single number")));
            }
        }
    }
    Ok(Some((Value::Tuple(parts), Value::Tuple(flat))))
}

/// Builds the universes of `spec`.
pub fn compile(spec: &ProblemSpec, opts: &CompileOptions) -> Result<Problem> {
    if !(opts.eps.is_finite() && opts.eps > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "tolerance must be positive, got {}",
            opts.eps
        )));
    }
    let q = Quantizer::new(opts.eps);
    for v in &spec.universe.variables {
        let distinct: BTreeSet<u64> = v.support.iter().map(|x| x.to_bits()).collect();
        if distinct.len() != v.support.len() {
            return Err(invalid(v.pos, format!("support of {} repeats a value", v.name)));
        }
    }
    let radices: Vec<usize> = spec.universe.variables.iter().map(|v| v.support.len()).collect();
    let cells: usize = radices.iter().product();
    if spec.universe.variables.is_empty() {
        return Err(invalid(spec.universe.pos, "universe declares no variables"));
    }
    let digits: Vec<Vec<usize>> = (0..cells)
        .map(|mut c| {
            let mut d = vec![0; radices.len()];
            for (slot, &r) in d.iter_mut().zip(&radices).rev() {
                *slot = c % r;
                c /= r;
            }
            d
        })
        .collect();
    let layout = Layout { spec, digits };

    let observe: Vec<Term> = spec.observe.iter().map(|e| layout.term(e)).collect::<Result<_>>()?;
    let estimands = spec
        .estimands
        .iter()
        .map(|e| {
            let term = layout.term(&e.expr)?;
            Ok(EstimandPlan {
                name: e.name.clone(),
                linear: term.linear(),
                term: Arc::new(term),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let assumptions = spec
        .assumptions
        .iter()
        .map(|a| assumption(&layout, a, cells))
        .collect::<Result<Vec<_>>>()?;

    let (space, grid_step, grid) = match spec.universe.kind {
        UniverseKind::Grid => {
            if spec.universe.units.is_some() {
                return Err(invalid(spec.universe.pos, "`units` applies to population universes"));
            }
            let step = opts.grid_step.or(spec.universe.grid_step).unwrap_or(DEFAULT_GRID_STEP);
            let factorization = conditioning_variable(spec).map(|z| {
                let zi = layout.var(z);
                let rest: Vec<usize> = (0..radices.len()).filter(|&v| v != zi).collect();
                let (class, n_rest) = layout.classes(&rest);
                let mut cell_of = vec![vec![0; n_rest]; radices[zi]];
                for (c, d) in layout.digits.iter().enumerate() {
                    cell_of[d[zi]][class[c]] = c;
                }
                Factorization { cell_of }
            });
            let grid = SimplexGrid::new(cells, step, factorization)?;
            (Space::Grid, Some(step), Some(grid))
        }
        UniverseKind::Population => {
            if spec.universe.units.is_none() {
                return Err(invalid(spec.universe.pos, "population universe needs `units`"));
            }
            if spec.universe.grid_step.is_some() {
                return Err(invalid(spec.universe.pos, "`grid_step` applies to grid universes"));
            }
            (Space::Units, None, None)
        }
    };
    let (l0, l0_flat) = match observation(spec, &observe, &q)? {
        Some((l, f)) => (Some(l), Some(f)),
        None => (None, None),
    };
    Ok(Problem {
        spec: spec.clone(),
        quantizer: q,
        cap: opts.cap,
        grid_step,
        cells,
        l0,
        l0_flat,
        assumptions,
        estimands,
        space,
        grid,
        observe: Arc::new(observe),
        digits: layout.digits,
    })
}

impl Problem {
    fn layout(&self) -> Layout<'_> {
        Layout {
            spec: &self.spec,
            digits: self.digits.clone(),
        }
    }

    pub fn is_population(&self) -> bool {
        self.space == Space::Units
    }

    /// The enumerable universe for estimand `est`, restricted by the
    /// assumptions at `assumptions` (indices into [`Problem::assumptions`]).
    pub fn universe(&self, est: usize, assumptions: &[usize]) -> Result<Universe> {
        let cells = self.cells;
        let q = self.quantizer;
        let term = self.estimands[est].term.clone();
        let observe = self.observe.clone();
        let estimand = move |s: &State| term.eval(&empirical(s, cells), &q);
        let observation = move |s: &State| {
            let p = empirical(s, cells);
            Value::Tuple(observe.iter().map(|t| t.eval(&p, &q)).collect())
        };
        let base = match self.space {
            Space::Grid => Universe::simplex(self.grid.clone().expect("grid problem"), estimand, observation),
            Space::Units => Universe::unit_table(
                UnitTable {
                    units: self.spec.universe.units.expect("population problem") as usize,
                    cells,
                },
                estimand,
                observation,
            ),
        };
        self.restricted(base.with_cap(self.cap).with_quantizer(q), assumptions)
    }

    /// The polytope companion of [`Problem::universe`]; needs a linear estimand.
    pub fn polytope(&self, est: usize, assumptions: &[usize]) -> Result<Universe> {
        if self.is_population() {
            return Err(Error::NotLinear("population universes are not polytopes".into()));
        }
        let plan = &self.estimands[est];
        let coeffs = plan.linear.clone().ok_or_else(|| {
            Error::NotLinear(format!(
                "estimand `{}` is not linear in the joint distribution",
                plan.name
            ))
        })?;
        let functionals = self
            .observe
            .iter()
            .flat_map(|t| t.parts().iter().map(Ratio::functional))
            .collect();
        let base = Universe::polytope(Polytope::new(self.cells, functionals, None))
            .with_linear_estimand(coeffs)?
            .with_cap(self.cap)
            .with_quantizer(self.quantizer);
        self.restricted(base, assumptions)
    }

    fn restricted(&self, mut u: Universe, assumptions: &[usize]) -> Result<Universe> {
        for &i in assumptions {
            u = u.restrict(&self.assumptions[i])?;
        }
        Ok(u)
    }

    pub fn all_assumptions(&self) -> Vec<usize> {
        (0..self.assumptions.len()).collect()
    }

    /// True when every selected assumption has a linear form.
    pub fn linear_assumptions(&self, assumptions: &[usize]) -> bool {
        assumptions.iter().all(|&i| self.assumptions[i].linear_form().is_some())
    }

    /// Observed value of `expr`, by structural match against the bindings.
    fn bound(&self, pred: impl Fn(&ExprKind) -> bool) -> Option<(usize, &GivenValue)> {
        let given = self.spec.given.as_ref()?;
        let i = self.spec.observe.iter().position(|e| pred(&e.kind))?;
        let b = given.iter().find(|b| b.expr == self.spec.observe[i])?;
        Some((i, &b.value))
    }

    /// `E[var | z = zv]` from an `expect`, `dist` or binary `prob` observation,
    /// with the conditional distribution when the observation reveals it.
    fn observed_mean(&self, var: &str, z: &str, zv: f64) -> Option<(usize, f64, Vec<(f64, f64)>)> {
        let on = |g: &Option<Condition>| g.as_ref().is_some_and(|c| c.var == z && c.value == zv);
        let support = &self.spec.variable(var)?.support;
        if let Some((i, GivenValue::Num(x))) =
            self.bound(|k| matches!(k, ExprKind::Expect { var: v, given } if v == var && on(given)))
        {
            return Some((i, *x, Vec::new()));
        }
        if let Some((i, GivenValue::List(xs))) =
            self.bound(|k| matches!(k, ExprKind::Dist { var: v, given } if v == var && on(given)))
        {
            let dist: Vec<(f64, f64)> = support.iter().copied().zip(xs.iter().copied()).collect();
            return Some((i, dist.iter().map(|(y, p)| y * p).sum(), dist));
        }
        if support.len() == 2 {
            let found = self.bound(|k| matches!(k, ExprKind::Prob { var: v, given, .. } if v == var && on(given)));
            if let Some((i, GivenValue::Num(p))) = found {
                let ExprKind::Prob { value, .. } = self.spec.observe[i].kind else {
                    unreachable!()
                };
                let other = if support[0] == value { support[1] } else { support[0] };
                return Some((i, p * value + (1.0 - p) * other, vec![(value, *p), (other, 1.0 - p)]));
            }
        }
        None
    }

    /// Observed mass outside `range` (beyond the equality tolerance).
    fn leaks(&self, dist: &[(f64, f64)], range: (f64, f64)) -> bool {
        dist.iter()
            .any(|&(y, p)| p > self.quantizer.step() && !(range.0..=range.1).contains(&y))
    }

    /// `P(z = zv)` for a binary `z`.
    fn observed_prob(&self, z: &str, zv: f64) -> Option<(usize, f64)> {
        let support = &self.spec.variable(z)?.support;
        let found = self.bound(|k| matches!(k, ExprKind::Prob { var, given: None, .. } if var == z));
        if let Some((i, GivenValue::Num(p))) = found {
            let ExprKind::Prob { value, .. } = self.spec.observe[i].kind else {
                unreachable!()
            };
            return Some((i, if value == zv { *p } else { 1.0 - p }));
        }
        let found = self.bound(|k| matches!(k, ExprKind::Dist { var, given: None } if var == z));
        if let Some((i, GivenValue::List(ps))) = found {
            let k = support.iter().position(|&x| x == zv)?;
            return Some((i, ps[k]));
        }
        None
    }

    /// Hull of `var`'s support cut by the `bounded` assumptions among `assumptions`.
    fn effective_range(&self, var: &str, assumptions: &[usize]) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in assumptions {
            let a = &self.spec.assumptions[i];
            if a.name == "bounded" && matches!(&a.args[0], Arg::Ident(v) if v == var) {
                if let (Arg::Num(a_lo), Arg::Num(a_hi)) = (&a.args[1], &a.args[2]) {
                    lo = lo.max(*a_lo);
                    hi = hi.min(*a_hi);
                }
            }
        }
        let kept: Vec<f64> = self
            .spec
            .variable(var)?
            .support
            .iter()
            .copied()
            .filter(|y| (lo..=hi).contains(y))
            .collect();
        let min = kept.iter().copied().fold(f64::INFINITY, f64::min);
        let max = kept.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (!kept.is_empty()).then_some((min, max))
    }

    /// Matches estimand `est` under `assumptions` against the closed forms.
    /// `None` means the general solvers are needed.
    pub fn recognize(&self, est: usize, assumptions: &[usize]) -> Option<Recognized> {
        if self.is_population() || self.spec.given.is_none() {
            return None;
        }
        let vars = &self.spec.universe.variables;
        let names: Vec<&str> = vars.iter().map(|v| v.name.as_str()).collect();
        let mut randomized = None;
        for &i in assumptions {
            let a = &self.spec.assumptions[i];
            match a.name.as_str() {
                "bounded" => {}
                "randomized" => match &a.args[0] {
                    Arg::Ident(z) => randomized = Some(z.as_str()),
                    Arg::Num(_) => return None,
                },
                _ => return None,
            }
        }
        let covers = |used: &[usize]| {
            let used: BTreeSet<usize> = used.iter().copied().collect();
            used.len() == self.spec.observe.len()
        };
        match &self.spec.estimands[est].expr.kind {
            ExprKind::Expect { var: y, given: None } if vars.len() == 2 => {
                let z = *names.iter().find(|&&n| n != y)?;
                if randomized.is_some_and(|r| r != z) || self.spec.variable(z)?.support.len() != 2 {
                    return None;
                }
                for &zv in &self.spec.variable(z)?.support {
                    let (Some((i, mean, dist)), Some((j, p))) =
                        (self.observed_mean(y, z, zv), self.observed_prob(z, zv))
                    else {
                        continue;
                    };
                    if !covers(&[i, j]) || p <= 0.0 {
                        continue;
                    }
                    let bounds = self.effective_range(y, assumptions)?;
                    if self.leaks(&dist, bounds) {
                        return None;
                    }
                    let point = MissingDataPoint::new(p, mean, bounds).ok()?;
                    let r = Recognized::MissingData {
                        point,
                        randomized: randomized.is_some(),
                    };
                    return r.region().is_ok().then_some(r);
                }
                None
            }
            ExprKind::MeanDiff { left, right } if vars.len() == 3 => {
                let z = *names.iter().find(|&&n| n != left && n != right)?;
                let zs = &self.spec.variable(z)?.support;
                if randomized.is_some_and(|r| r != z) || zs.len() != 2 {
                    return None;
                }
                for (z1, z0) in [(zs[1], zs[0]), (zs[0], zs[1])] {
                    let found = (
                        self.observed_mean(left, z, z1),
                        self.observed_mean(right, z, z0),
                        self.observed_prob(z, z1),
                    );
                    let (Some((i, t2, d1)), Some((j, t3, d0)), Some((k, p))) = found else {
                        continue;
                    };
                    if !covers(&[i, j, k]) {
                        continue;
                    }
                    let bounds = self.effective_range(left, assumptions)?;
                    if self.effective_range(right, assumptions)? != bounds {
                        return None;
                    }
                    if (p > 0.0 && self.leaks(&d1, bounds)) || (p < 1.0 && self.leaks(&d0, bounds)) {
                        return None;
                    }
                    let point = CausalPoint::new(p, t2, t3, bounds).ok()?;
                    let r = Recognized::Causal {
                        point,
                        randomized: randomized.is_some(),
                    };
                    return r.region().is_ok().then_some(r);
                }
                None
            }
            _ => None,
        }
    }

    /// Range of a linear estimand over the unrestricted simplex.
    pub fn linear_range(&self, est: usize) -> Option<Interval> {
        let c = self.estimands[est].linear.as_ref()?;
        let xs: Vec<f64> = c.iter().map(crate::value::rational_to_f64).collect();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi).ok()
    }

    /// Indicator of cells where `var = value`, for tests and callers building
    /// their own constraints.
    pub fn indicator(&self, var: &str, value: f64) -> Result<Coeffs> {
        let layout = self.layout();
        let k = layout.index_of(var, value, Pos::default())?;
        Ok(layout
            .indicator(layout.var(var), k)
            .into_iter()
            .map(|x| {
                if x > 0.0 {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;
    use crate::region::{region_enumerate, region_lp};

    const MISSING: &str = "
universe grid {
  variable Y { support: [0, 1] }
  variable Z { support: [0, 1] }
  grid_step: 0.05
}
observe { prob(Y = 1 | Z = 1), prob(Z = 1) }
estimand mean { expect(Y) }
assume bounded(Y, 0, 1)
given { prob(Y = 1 | Z = 1) = 0.6  prob(Z = 1) = 0.75 }
";

    fn problem(text: &str) -> Problem {
        compile(&parse(text).unwrap(), &CompileOptions::default()).unwrap()
    }

    #[test]
    fn cells_in_declaration_order() {
        let p = problem(MISSING);
        assert_eq!(p.cells, 4);
        assert_eq!(p.digits, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let ind = p.indicator("Y", 1.0).unwrap();
        assert_eq!(ind, [0, 0, 1, 1].map(|x| BigRational::from_integer(x.into())));
    }

    #[test]
    fn three_solvers_agree_on_missing_data() {
        let p = problem(MISSING);
        let l0 = p.l0.clone().unwrap();
        let all = p.all_assumptions();
        let r = p.recognize(0, &all).unwrap().region().unwrap();
        let iv = r.as_interval().unwrap();
        assert!(iv.approx_eq(&Interval::new(0.45, 0.7).unwrap(), 1e-12));
        let lp = region_lp(&p.polytope(0, &all).unwrap(), p.l0_flat.as_ref().unwrap()).unwrap();
        assert!(lp.interval().approx_eq(&iv, 1e-9));
        let set = region_enumerate(&p.universe(0, &all).unwrap(), &l0).unwrap();
        assert!(set.agrees_with(&r, 1e-9).unwrap(), "{set}");
        assert_eq!(set.as_set().unwrap().len(), 21);
    }

    #[test]
    fn randomization_gives_a_point() {
        let doc = MISSING.replace("assume bounded(Y, 0, 1)", "assume randomized(Z)");
        let p = problem(&doc);
        let r = p.recognize(0, &[0]).unwrap().region().unwrap();
        assert_eq!(r.singleton(), Some(Value::real(0.6)));
        let set = region_enumerate(&p.universe(0, &[0]).unwrap(), p.l0.as_ref().unwrap()).unwrap();
        assert_eq!(set.singleton().map(|v| v.as_f64().unwrap()), Some(0.6));
    }

    #[test]
    fn population_uses_empirical_distribution() {
        let doc = "
universe population {
  variable Y1 { support: [0, 1] }
  variable Y0 { support: [0, 1] }
  variable Z { support: [0, 1] }
  units: 2
}
observe { dist(Y1 | Z = 1), dist(Y0 | Z = 0), prob(Z = 1) }
estimand ate { mean_diff(Y1, Y0) }
given { dist(Y1 | Z = 1) = [0, 1]  dist(Y0 | Z = 0) = [1, 0]  prob(Z = 1) = 0.5 }
";
        let p = problem(doc);
        assert!(p.recognize(0, &[]).is_none());
        let r = region_enumerate(&p.universe(0, &[]).unwrap(), p.l0.as_ref().unwrap()).unwrap();
        let got: Vec<f64> = r.as_set().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert_eq!(got, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn contradictory_assumptions_name_the_culprit() {
        let doc = MISSING.replace(
            "assume bounded(Y, 0, 1)",
            "assume fixed(Z, 1, 0.2)\nassume fixed(Z, 1, 0.8)",
        );
        let p = problem(&doc);
        let err = p.universe(0, &[0, 1]).unwrap_err();
        assert_eq!(
            err,
            Error::EmptyUniverse {
                assumption: "fixed(Z, 1, 0.8)".into()
            }
        );
        assert!(matches!(p.polytope(0, &[0, 1]), Err(Error::EmptyUniverse { .. })));
    }

    #[test]
    fn binding_errors() {
        let spec = parse(&MISSING.replace("prob(Z = 1) = 0.75", "")).unwrap();
        assert!(matches!(
            compile(&spec, &CompileOptions::default()),
            Err(Error::InvalidProblem(_))
        ));
        let spec = parse(&MISSING.replace("= 0.75", "= [0.25, 0.75]")).unwrap();
        assert!(matches!(
            compile(&spec, &CompileOptions::default()),
            Err(Error::InvalidProblem(_))
        ));
        let spec = parse(&MISSING.replace("bounded(Y, 0, 1)", "bounded(Y, 0)")).unwrap();
        assert!(matches!(
            compile(&spec, &CompileOptions::default()),
            Err(Error::InvalidProblem(_))
        ));
        let spec = parse(&MISSING.replace("prob(Z = 1) }\nestimand", "prob(Z = 2) }\nestimand")).unwrap();
        assert!(matches!(
            compile(&spec, &CompileOptions::default()),
            Err(Error::InvalidProblem(_))
        ));
    }
}
