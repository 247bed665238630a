//! Two-component mixtures observed through their first two moments.

use crate::error::Result;
use crate::region::{region_enumerate, Region};
use crate::universe::{GridDim, ParamGrid, State, Universe};
use crate::value::Value;

/// Parameter grid `(π, μ1, μ2)`, observing
/// `(πμ1 + (1-π)μ2, π² + (1-π)²)`; the estimand is `π`.
pub fn mixture_grid(pi_step: f64, mus: (f64, f64, f64)) -> Result<Universe> {
    let (lo, hi, step) = mus;
    let mu = GridDim::new(lo, hi, step)?;
    let pi = GridDim::new(0.0, 1.0, pi_step)?;
    Ok(Universe::grid(ParamGrid::new(vec![pi, mu, mu]), component(0), observe))
}

/// The default grid: `π ∈ {0, .25, .5, .75, 1}`, `μ ∈ {-1, 0, 1}²`.
pub fn default_mixture_grid() -> Universe {
    mixture_grid(0.25, (-1.0, 1.0, 1.0)).expect("valid grid")
}

fn component(i: usize) -> impl Fn(&State) -> Value + Send + Sync + 'static {
    move |s| Value::real(s.as_point().expect("grid state")[i])
}

fn observe(s: &State) -> Value {
    let x = s.as_point().expect("grid state");
    let (pi, m1, m2) = (x[0], x[1], x[2]);
    Value::tuple([pi * m1 + (1.0 - pi) * m2, pi * pi + (1.0 - pi) * (1.0 - pi)])
}

/// `(π, μ1, μ2) -> (1-π, μ2, μ1)`: the label swap that leaves the observation unchanged.
pub fn swap_labels(s: &State) -> State {
    let x = s.as_point().expect("grid state");
    State::Point(vec![1.0 - x[0], x[2], x[1]])
}

#[derive(Debug, Clone)]
pub struct MixtureRegions {
    pub pi: Region,
    pub mu1: Region,
    pub mu2: Region,
}

/// Regions of each parameter at `l0 = (mean, second moment term)`.
pub fn mixture_region(u: &Universe, l0: &Value) -> Result<MixtureRegions> {
    Ok(MixtureRegions {
        pi: region_enumerate(&u.clone().with_estimand(component(0)), l0)?,
        mu1: region_enumerate(&u.clone().with_estimand(component(1)), l0)?,
        mu2: region_enumerate(&u.clone().with_estimand(component(2)), l0)?,
    })
}
