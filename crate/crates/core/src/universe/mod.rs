//! Statistical universes: a set of states together with an estimand mapping
//! and an observation mapping.
//!
//! Enumerable universes (explicit lists, parameter grids, simplex grids, unit
//! tables and finite populations) are scanned exhaustively. Polytope
//! universes are never enumerated; they are extremized by linear
//! programming in [`crate::region`].

mod assumption;
mod grids;
mod polytope;
mod population;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp::{self, Relation};
use crate::value::{Quantizer, Value};

pub use assumption::{Assumption, ConstraintFn, LinearForm};
pub(crate) use grids::{compositions, units_for_step};
pub use grids::{Factorization, GridDim, ParamGrid, SimplexGrid, UnitTable};
pub use polytope::{Coeffs, Functional, Independence, LinearConstraint, Polytope};
pub use population::{FinitePopulation, ObservedUnit, PopulationDesign, PopulationState};

/// Default bound on the number of states an enumeration may visit.
pub const DEFAULT_CAP: u128 = 10_000_000;

/// States handed to workers per parallel batch.
const BATCH: usize = 1 << 14;

/// One element of a universe.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    /// Parameter tuple.
    Point(Vec<f64>),
    /// Probability vector over cells.
    Distribution(Vec<f64>),
    /// Joint cell index of each unit.
    Units(Vec<usize>),
    Population(PopulationState),
}

impl State {
    pub fn as_point(&self) -> Option<&[f64]> {
        match self {
            State::Point(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_distribution(&self) -> Option<&[f64]> {
        match self {
            State::Distribution(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_population(&self) -> Option<&PopulationState> {
        match self {
            State::Population(s) => Some(s),
            _ => None,
        }
    }
}

pub type Mapping = Arc<dyn Fn(&State) -> Value + Send + Sync>;

#[derive(Debug, Clone)]
pub enum Kind {
    Explicit(Arc<Vec<State>>),
    Grid(ParamGrid),
    Simplex(SimplexGrid),
    Units(UnitTable),
    Population(FinitePopulation),
    Polytope(Polytope),
}

/// A universe with its two mappings and any assumptions restricting it.
#[derive(Clone)]
pub struct Universe {
    kind: Kind,
    estimand: Mapping,
    observation: Mapping,
    assumptions: Vec<Assumption>,
    cap: u128,
    quantizer: Quantizer,
}

impl fmt::Debug for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Universe")
            .field("kind", &self.kind)
            .field("assumptions", &self.assumptions)
            .field("cap", &self.cap)
            .finish_non_exhaustive()
    }
}

fn mapping<F>(f: F) -> Mapping
where
    F: Fn(&State) -> Value + Send + Sync + 'static,
{
    Arc::new(f)
}

impl Universe {
    fn with_kind<E, O>(kind: Kind, estimand: E, observation: O) -> Self
    where
        E: Fn(&State) -> Value + Send + Sync + 'static,
        O: Fn(&State) -> Value + Send + Sync + 'static,
    {
        Universe {
            kind,
            estimand: mapping(estimand),
            observation: mapping(observation),
            assumptions: Vec::new(),
            cap: DEFAULT_CAP,
            quantizer: Quantizer::default(),
        }
    }

    pub fn explicit<E, O>(states: Vec<State>, estimand: E, observation: O) -> Self
    where
        E: Fn(&State) -> Value + Send + Sync + 'static,
        O: Fn(&State) -> Value + Send + Sync + 'static,
    {
        Self::with_kind(Kind::Explicit(Arc::new(states)), estimand, observation)
    }

    /// Parameter-grid universe; states are [`State::Point`]s.
    pub fn grid<E, O>(grid: ParamGrid, estimand: E, observation: O) -> Self
    where
        E: Fn(&State) -> Value + Send + Sync + 'static,
        O: Fn(&State) -> Value + Send + Sync + 'static,
    {
        Self::with_kind(Kind::Grid(grid), estimand, observation)
    }

    /// Discretized simplex; states are [`State::Distribution`]s.
    pub fn simplex<E, O>(grid: SimplexGrid, estimand: E, observation: O) -> Self
    where
        E: Fn(&State) -> Value + Send + Sync + 'static,
        O: Fn(&State) -> Value + Send + Sync + 'static,
    {
        Self::with_kind(Kind::Simplex(grid), estimand, observation)
    }

    /// Unit tables; states are [`State::Units`].
    pub fn unit_table<E, O>(table: UnitTable, estimand: E, observation: O) -> Self
    where
        E: Fn(&State) -> Value + Send + Sync + 'static,
        O: Fn(&State) -> Value + Send + Sync + 'static,
    {
        Self::with_kind(Kind::Units(table), estimand, observation)
    }

    /// Finite population with `λ(S) = (Y*, Z)` and, as estimand, the average
    /// effect (causal design) or the mean outcome (missing-data design).
    pub fn population(pop: FinitePopulation) -> Self {
        let q = Quantizer::default();
        let design = pop.design;
        Self::with_kind(
            Kind::Population(pop),
            move |s| match s.as_population() {
                Some(p) if design == PopulationDesign::Causal => q.real(p.average_effect()),
                Some(p) => q.real(p.mean_outcome()),
                None => Value::Missing,
            },
            move |s| match s.as_population() {
                Some(p) => p.observed(design, &q),
                None => Value::Missing,
            },
        )
    }

    /// Polytope universe with mappings read off its functionals.
    pub fn polytope(poly: Polytope) -> Self {
        let q = Quantizer::default();
        let est = Arc::new(poly.clone());
        let obs = Arc::clone(&est);
        Self::with_kind(
            Kind::Polytope(poly),
            move |s| s.as_distribution().map_or(Value::Missing, |p| est.estimate(p, &q)),
            move |s| s.as_distribution().map_or(Value::Missing, |p| obs.observe(p, &q)),
        )
    }

    /// Same states and observation, different estimand.
    pub fn with_estimand<E>(mut self, estimand: E) -> Self
    where
        E: Fn(&State) -> Value + Send + Sync + 'static,
    {
        self.estimand = mapping(estimand);
        self
    }

    pub fn with_observation<O>(mut self, observation: O) -> Self
    where
        O: Fn(&State) -> Value + Send + Sync + 'static,
    {
        self.observation = mapping(observation);
        self
    }

    /// Replaces the linear estimand of a polytope universe.
    pub fn with_linear_estimand(mut self, coeffs: Coeffs) -> Result<Self> {
        let Kind::Polytope(poly) = &mut self.kind else {
            return Err(Error::NotLinear("linear estimands apply to polytope universes".into()));
        };
        if coeffs.len() != poly.cells {
            return Err(Error::InvalidUniverse(format!(
                "estimand has {} coefficients for {} cells",
                coeffs.len(),
                poly.cells
            )));
        }
        poly.estimand = Some(coeffs);
        let q = self.quantizer;
        let poly = Arc::new(poly.clone());
        self.estimand = mapping(move |s| s.as_distribution().map_or(Value::Missing, |p| poly.estimate(p, &q)));
        Ok(self)
    }

    pub fn with_cap(mut self, cap: u128) -> Self {
        self.cap = cap;
        self
    }

    /// Tolerance grid used for assumption satisfaction.
    pub fn with_quantizer(mut self, q: Quantizer) -> Self {
        self.quantizer = q;
        self
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn cap(&self) -> u128 {
        self.cap
    }

    pub fn quantizer(&self) -> Quantizer {
        self.quantizer
    }

    pub fn assumptions(&self) -> &[Assumption] {
        &self.assumptions
    }

    pub fn as_polytope(&self) -> Option<&Polytope> {
        match &self.kind {
            Kind::Polytope(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_enumerable(&self) -> bool {
        !matches!(self.kind, Kind::Polytope(_))
    }

    /// Number of states before assumptions are applied.
    pub fn cardinality(&self) -> Result<u128> {
        Ok(match &self.kind {
            Kind::Explicit(states) => states.len() as u128,
            Kind::Grid(g) => g.cardinality(),
            Kind::Simplex(g) => g.cardinality(),
            Kind::Units(t) => t.cardinality(),
            Kind::Population(p) => p.cardinality(),
            Kind::Polytope(_) => return Err(not_enumerable()),
        })
    }

    pub fn estimate(&self, state: &State) -> Value {
        (self.estimand)(state)
    }

    pub fn observe(&self, state: &State) -> Value {
        (self.observation)(state)
    }

    pub fn satisfies(&self, state: &State) -> bool {
        let tol = self.quantizer.step();
        self.assumptions.iter().all(|a| a.holds(state, tol))
    }

    fn check_cap(&self) -> Result<()> {
        let count = self.cardinality()?;
        if count > self.cap {
            return Err(Error::EnumerationOverflow { count, cap: self.cap });
        }
        Ok(())
    }

    /// Every state, assumptions ignored, in deterministic order.
    fn raw_states(&self) -> Result<Box<dyn Iterator<Item = State> + Send + '_>> {
        self.check_cap()?;
        Ok(match &self.kind {
            Kind::Explicit(states) => Box::new(states.iter().cloned()),
            Kind::Grid(g) => Box::new(g.points().map(State::Point)),
            Kind::Simplex(g) => Box::new(g.distributions().map(State::Distribution)),
            Kind::Units(t) => Box::new(t.tables().map(State::Units)),
            Kind::Population(p) => Box::new(p.states().map(State::Population)),
            Kind::Polytope(_) => return Err(not_enumerable()),
        })
    }

    /// States satisfying every assumption, in deterministic lexicographic order.
    pub fn enumerate(&self) -> Result<impl Iterator<Item = State> + '_> {
        Ok(self.raw_states()?.filter(move |s| self.satisfies(s)))
    }

    /// Parallel fold over the states satisfying every assumption.
    ///
    /// The universe is streamed in batches; each batch is split across the
    /// rayon pool and partial accumulators are merged with `merge`. Callers
    /// must use order-independent accumulators (sets, counts).
    pub fn scan<A, I, F, M>(&self, init: I, fold: F, merge: M) -> Result<A>
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(&mut A, &State) + Sync + Send,
        M: Fn(&mut A, A) + Sync + Send,
    {
        let mut states = self.raw_states()?;
        let mut acc = init();
        loop {
            let batch: Vec<State> = states.by_ref().take(BATCH).collect();
            if batch.is_empty() {
                break;
            }
            let part = batch
                .par_chunks(512)
                .map(|chunk| {
                    let mut a = init();
                    for s in chunk.iter().filter(|s| self.satisfies(s)) {
                        fold(&mut a, s);
                    }
                    a
                })
                .reduce(&init, |mut a, b| {
                    merge(&mut a, b);
                    a
                });
            merge(&mut acc, part);
        }
        Ok(acc)
    }

    /// `{λ(S) : S ∈ universe}`.
    pub fn observation_image(&self) -> Result<BTreeSet<Value>> {
        self.scan(
            BTreeSet::new,
            |acc, s| {
                acc.insert(self.observe(s));
            },
            |acc, other| acc.extend(other),
        )
    }

    /// `{θ(S) : S ∈ universe}`.
    pub fn estimand_image(&self) -> Result<BTreeSet<Value>> {
        self.scan(
            BTreeSet::new,
            |acc, s| {
                acc.insert(self.estimate(s));
            },
            |acc, other| acc.extend(other),
        )
    }

    /// The sub-universe where `assumption` holds.
    ///
    /// Enumerable universes keep the assumption as a filter; polytopes take
    /// its linear form as extra constraints. Fails with
    /// [`Error::EmptyUniverse`] when nothing survives.
    pub fn restrict(&self, assumption: &Assumption) -> Result<Universe> {
        let mut out = self.clone();
        match &mut out.kind {
            Kind::Polytope(poly) => {
                match assumption.linear_form() {
                    Some(LinearForm::Constraints(cs)) => {
                        if cs.iter().any(|c| c.coeffs.len() != poly.cells) {
                            return Err(Error::InvalidUniverse(format!(
                                "assumption `{}` has the wrong width",
                                assumption.name()
                            )));
                        }
                        poly.constraints.extend(cs.iter().cloned());
                    }
                    Some(LinearForm::Independence(ind)) => poly.independence.push(ind.clone()),
                    None => {
                        return Err(Error::NotLinear(format!(
                            "assumption `{}` has no linear form",
                            assumption.name()
                        )))
                    }
                }
                if !polytope_feasible(poly) {
                    return Err(Error::EmptyUniverse {
                        assumption: assumption.name().to_string(),
                    });
                }
                out.assumptions.push(assumption.clone());
                // Mappings read from the functionals, which the constraints do not touch.
            }
            _ => {
                out.assumptions.push(assumption.clone());
                let survivor = out.raw_states()?.any(|s| out.satisfies(&s));
                if !survivor {
                    return Err(Error::EmptyUniverse {
                        assumption: assumption.name().to_string(),
                    });
                }
            }
        }
        Ok(out)
    }
}

fn not_enumerable() -> Error {
    Error::NotEnumerable("polytope universes are extremized, not enumerated".into())
}

/// Simplex plus linear constraints as LP rows (`Σ p = 1` first).
pub(crate) fn simplex_rows(poly: &Polytope) -> Vec<lp::Constraint<BigRational>> {
    let mut rows = vec![lp::Constraint {
        coeffs: vec![BigRational::one(); poly.cells],
        relation: Relation::Eq,
        rhs: BigRational::one(),
    }];
    rows.extend(poly.constraints.iter().map(|c| lp::Constraint {
        coeffs: c.coeffs.clone(),
        relation: c.relation,
        rhs: c.rhs.clone(),
    }));
    rows
}

/// Feasibility of the linear part of a polytope. Independence constraints
/// never empty a nonempty polytope on their own (point masses factor), but
/// their interaction with other constraints is checked only when regions are
/// computed.
fn polytope_feasible(poly: &Polytope) -> bool {
    let rows = simplex_rows(poly);
    lp::FeasibleRegion::new(poly.cells, &rows).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn point_universe() -> Universe {
        let grid = ParamGrid::new(vec![
            GridDim::new(0.0, 1.0, 0.5).unwrap(),
            GridDim::new(0.0, 1.0, 0.5).unwrap(),
        ]);
        Universe::grid(
            grid,
            |s| Value::real(s.as_point().unwrap()[0]),
            |s| Value::real(s.as_point().unwrap()[1]),
        )
    }

    #[test]
    fn grid_enumeration_is_lexicographic() {
        let u = point_universe();
        let states: Vec<_> = u.enumerate().unwrap().collect();
        assert_eq!(states.len(), 9);
        assert_eq!(states[0], State::Point(vec![0.0, 0.0]));
        assert_eq!(states[1], State::Point(vec![0.0, 0.5]));
        assert_eq!(states[8], State::Point(vec![1.0, 1.0]));
    }

    #[test]
    fn explicit_enumeration_preserves_order() {
        let states = vec![
            State::Point(vec![3.0]),
            State::Point(vec![1.0]),
            State::Point(vec![2.0]),
        ];
        let u = Universe::explicit(states.clone(), |_| Value::Missing, |_| Value::Missing);
        assert_eq!(u.enumerate().unwrap().collect::<Vec<_>>(), states);
    }

    #[test]
    fn cap_is_enforced() {
        let u = point_universe().with_cap(8);
        assert!(matches!(
            u.enumerate().err(),
            Some(Error::EnumerationOverflow { count: 9, cap: 8 })
        ));
        assert!(matches!(u.observation_image(), Err(Error::EnumerationOverflow { .. })));
    }

    #[test]
    fn population_with_fixed_assignment_has_four_completions() {
        let pop = FinitePopulation::completions(
            vec![0.0, 1.0],
            PopulationDesign::Causal,
            vec![ObservedUnit::treated(1.0), ObservedUnit::control(0.0)],
        )
        .unwrap();
        let u = Universe::population(pop);
        let states: Vec<_> = u.enumerate().unwrap().collect();
        assert_eq!(states.len(), 4);
        let images: BTreeSet<_> = states.iter().map(|s| u.observe(s)).collect();
        assert_eq!(images.len(), 1, "every completion reproduces the record");
    }

    #[test]
    fn restriction_filters_and_shrinks_images() {
        let u = point_universe();
        let a = Assumption::new("first<=second", |s| {
            let x = s.as_point().unwrap();
            (x[0] - x[1]).max(0.0)
        });
        let r = u.restrict(&a).unwrap();
        assert_eq!(r.enumerate().unwrap().count(), 6);
        assert!(r
            .observation_image()
            .unwrap()
            .is_subset(&u.observation_image().unwrap()));
        let identity = u.restrict(&Assumption::always()).unwrap();
        assert_eq!(
            identity.enumerate().unwrap().collect::<Vec<_>>(),
            u.enumerate().unwrap().collect::<Vec<_>>()
        );
    }

    #[test]
    fn contradictory_assumption_empties_universe() {
        let u = point_universe();
        let never = Assumption::new("never", |_| 1.0);
        assert_eq!(
            u.restrict(&never).unwrap_err(),
            Error::EmptyUniverse {
                assumption: "never".into()
            }
        );
    }

    #[test]
    fn polytope_is_not_enumerable() {
        let u = Universe::polytope(Polytope::new(2, vec![], None));
        assert!(matches!(u.enumerate().err(), Some(Error::NotEnumerable(_))));
        assert!(matches!(u.observation_image(), Err(Error::NotEnumerable(_))));
    }

    #[test]
    fn polytope_restriction_needs_linear_form() {
        let u = Universe::polytope(Polytope::new(2, vec![], None));
        assert!(matches!(u.restrict(&Assumption::always()), Err(Error::NotLinear(_))));
        let one = BigRational::one();
        let zero = BigRational::zero();
        let pin_first =
            Assumption::new("p0=1", |_| 0.0).with_linear_form(LinearForm::Constraints(vec![LinearConstraint::eq(
                vec![one.clone(), zero.clone()],
                one.clone(),
            )]));
        let r = u.restrict(&pin_first).unwrap();
        assert_eq!(r.as_polytope().unwrap().constraints.len(), 1);
        let pin_second =
            Assumption::new("p1=1", |_| 0.0).with_linear_form(LinearForm::Constraints(vec![LinearConstraint::eq(
                vec![zero, one.clone()],
                one,
            )]));
        assert!(matches!(r.restrict(&pin_second), Err(Error::EmptyUniverse { .. })));
    }

    #[test]
    fn parallel_scan_matches_sequential_enumeration() {
        let grid = ParamGrid::new(vec![GridDim::new(0.0, 1.0, 0.01).unwrap(); 3]);
        let u = Universe::grid(
            grid,
            |s| Value::real(s.as_point().unwrap().iter().sum()),
            |s| Value::real(s.as_point().unwrap()[0]),
        );
        let seq: BTreeSet<Value> = u.enumerate().unwrap().map(|s| u.estimate(&s)).collect();
        assert_eq!(u.estimand_image().unwrap(), seq);
        let count = u.scan(|| 0usize, |c, _| *c += 1, |c, d| *c += d).unwrap();
        assert_eq!(count, 101 * 101 * 101);
    }
}
