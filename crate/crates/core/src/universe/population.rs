//! Finite populations of units with potential outcomes.

use crate::error::{Error, Result};
use crate::value::{Quantizer, Value};

use super::grids::Odometer;

/// Which outcome table a population carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopulationDesign {
    /// One outcome per unit, observed iff `Z_i = 1`.
    MissingData,
    /// Two potential outcomes per unit; `Y*_i = Y_i(Z_i)` is always observed.
    Causal,
}

/// Observed record for one unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedUnit {
    /// `None` stands for the missing token.
    pub outcome: Option<f64>,
    pub treated: bool,
}

impl ObservedUnit {
    pub fn treated(y: f64) -> Self {
        ObservedUnit {
            outcome: Some(y),
            treated: true,
        }
    }

    pub fn control(y: f64) -> Self {
        ObservedUnit {
            outcome: Some(y),
            treated: false,
        }
    }

    pub fn missing() -> Self {
        ObservedUnit {
            outcome: None,
            treated: false,
        }
    }
}

/// Complete outcome and assignment table.
///
/// For [`PopulationDesign::MissingData`], `y1` holds the single outcome and
/// `y0` is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    pub y1: Vec<f64>,
    pub y0: Vec<f64>,
    pub z: Vec<bool>,
}

impl PopulationState {
    pub fn units(&self) -> usize {
        self.z.len()
    }

    /// `(Y*, Z)` with the missing token where the design hides the outcome.
    pub fn observed(&self, design: PopulationDesign, q: &Quantizer) -> Value {
        let y_star = (0..self.units())
            .map(|i| match (design, self.z[i]) {
                (_, true) => q.real(self.y1[i]),
                (PopulationDesign::MissingData, false) => Value::Missing,
                (PopulationDesign::Causal, false) => q.real(self.y0[i]),
            })
            .collect();
        let z = self.z.iter().map(|&t| Value::rational(t as i64, 1)).collect();
        Value::Tuple(vec![Value::Tuple(y_star), Value::Tuple(z)])
    }

    /// Population mean of `Y` (missing data) or `Y(1)`.
    pub fn mean_outcome(&self) -> f64 {
        self.y1.iter().sum::<f64>() / self.units() as f64
    }

    /// `mean(Y(1)) - mean(Y(0))`.
    pub fn average_effect(&self) -> f64 {
        let n = self.units() as f64;
        self.y1.iter().sum::<f64>() / n - self.y0.iter().sum::<f64>() / n
    }
}

/// A population universe: either every outcome/assignment table over the
/// alphabet, or only the completions of one observed record.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePopulation {
    pub units: usize,
    pub alphabet: Vec<f64>,
    pub design: PopulationDesign,
    pub observed: Option<Vec<ObservedUnit>>,
}

impl FinitePopulation {
    pub fn full(units: usize, alphabet: Vec<f64>, design: PopulationDesign) -> Result<Self> {
        check_alphabet(&alphabet)?;
        Ok(FinitePopulation {
            units,
            alphabet,
            design,
            observed: None,
        })
    }

    pub fn completions(alphabet: Vec<f64>, design: PopulationDesign, observed: Vec<ObservedUnit>) -> Result<Self> {
        check_alphabet(&alphabet)?;
        for (i, unit) in observed.iter().enumerate() {
            match (design, unit.treated, unit.outcome) {
                (PopulationDesign::MissingData, true, None) => {
                    return Err(Error::InconsistentObservation(format!(
                        "unit {i} is treated but its outcome is missing"
                    )))
                }
                (PopulationDesign::MissingData, false, Some(_)) => {
                    return Err(Error::InconsistentObservation(format!(
                        "unit {i} is untreated but its outcome is observed"
                    )))
                }
                (PopulationDesign::Causal, _, None) => {
                    return Err(Error::InconsistentObservation(format!(
                        "unit {i} has no observed outcome"
                    )))
                }
                _ => {}
            }
            if let Some(y) = unit.outcome {
                if !alphabet.contains(&y) {
                    return Err(Error::InconsistentObservation(format!(
                        "unit {i} outcome {y} is not in the alphabet"
                    )));
                }
            }
        }
        Ok(FinitePopulation {
            units: observed.len(),
            alphabet,
            design,
            observed: Some(observed),
        })
    }

    fn outcomes_per_unit(&self) -> usize {
        match self.design {
            PopulationDesign::MissingData => 1,
            PopulationDesign::Causal => 2,
        }
    }

    /// Number of free cells: every cell for the full universe, the hidden
    /// cells for a completion universe.
    pub fn free_cells(&self) -> usize {
        match &self.observed {
            None => self.units * self.outcomes_per_unit(),
            Some(obs) => match self.design {
                PopulationDesign::MissingData => obs.iter().filter(|u| !u.treated).count(),
                PopulationDesign::Causal => obs.len(),
            },
        }
    }

    pub fn cardinality(&self) -> u128 {
        let a = self.alphabet.len() as u128;
        let outcome_tables = (0..self.free_cells()).fold(1u128, |acc, _| acc.saturating_mul(a));
        match &self.observed {
            None => outcome_tables.saturating_mul(1u128.checked_shl(self.units as u32).unwrap_or(u128::MAX)),
            Some(_) => outcome_tables,
        }
    }

    pub(crate) fn states(&self) -> Box<dyn Iterator<Item = PopulationState> + Send + '_> {
        let a = self.alphabet.len();
        let n = self.units;
        match &self.observed {
            None => {
                let per_unit = 2 * a.pow(self.outcomes_per_unit() as u32);
                let design = self.design;
                Box::new(Odometer::new(vec![per_unit; n]).map(move |digits| {
                    let mut s = PopulationState {
                        y1: Vec::with_capacity(n),
                        y0: Vec::new(),
                        z: Vec::with_capacity(n),
                    };
                    for d in digits {
                        s.z.push(d % 2 == 1);
                        let rest = d / 2;
                        s.y1.push(self.alphabet[rest % a]);
                        if design == PopulationDesign::Causal {
                            s.y0.push(self.alphabet[rest / a]);
                        }
                    }
                    s
                }))
            }
            Some(obs) => {
                let design = self.design;
                Box::new(Odometer::new(vec![a; self.free_cells()]).map(move |digits| {
                    let mut free = digits.into_iter().map(|d| self.alphabet[d]);
                    let mut s = PopulationState {
                        y1: Vec::with_capacity(n),
                        y0: Vec::new(),
                        z: obs.iter().map(|u| u.treated).collect(),
                    };
                    for unit in obs {
                        match design {
                            PopulationDesign::MissingData => {
                                let y = unit.outcome.unwrap_or_else(|| free.next().expect("free cell"));
                                s.y1.push(y);
                            }
                            PopulationDesign::Causal => {
                                let seen = unit.outcome.expect("validated");
                                let other = free.next().expect("free cell");
                                if unit.treated {
                                    s.y1.push(seen);
                                    s.y0.push(other);
                                } else {
                                    s.y1.push(other);
                                    s.y0.push(seen);
                                }
                            }
                        }
                    }
                    s
                }))
            }
        }
    }
}

fn check_alphabet(alphabet: &[f64]) -> Result<()> {
    if alphabet.is_empty() {
        return Err(Error::InvalidUniverse("outcome alphabet is empty".into()));
    }
    if alphabet.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidUniverse("outcome alphabet must be finite reals".into()));
    }
    Ok(())
}
