//! Average effect in a finite population.

use crate::error::Result;
use crate::region::{region_enumerate, Region};
use crate::universe::{FinitePopulation, ObservedUnit, PopulationDesign, Universe};

/// `{mean(Y(1)) - mean(Y(0))}` over every completion of the record.
pub fn finite_pop_ate_region(alphabet: Vec<f64>, observed: Vec<ObservedUnit>) -> Result<Region> {
    let pop = FinitePopulation::completions(alphabet, PopulationDesign::Causal, observed)?;
    let u = Universe::population(pop);
    let first = u.enumerate()?.next().expect("a completion always exists");
    let l0 = u.observe(&first);
    region_enumerate(&u, &l0)
}
