use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::universe::Universe;
use crate::value::Value;

use super::Region;

/// `{θ(S) : S ∈ u, λ(S) = l0}` by exhaustive scan.
///
/// The same pass collects `Img(θ)`, so `strong` is exact relative to the
/// enumerated grid. `Missing` (an undefined conditional estimand) is left
/// out of that comparison, and a one-point `Img(θ)` is reported as not strong.
pub fn region_enumerate(u: &Universe, l0: &Value) -> Result<Region> {
    #[derive(Default)]
    struct Acc {
        region: BTreeSet<Value>,
        image: BTreeSet<Value>,
    }
    let acc = u.scan(
        Acc::default,
        |acc, s| {
            let theta = u.estimate(s);
            if u.observe(s) == *l0 {
                acc.region.insert(theta.clone());
            }
            acc.image.insert(theta);
        },
        |acc, other| {
            acc.region.extend(other.region);
            acc.image.extend(other.image);
        },
    )?;
    if acc.region.is_empty() {
        return Err(Error::UnreachableObservation(l0.to_string()));
    }
    let defined = |xs: &BTreeSet<Value>| xs.iter().filter(|v| !v.is_missing()).cloned().collect::<BTreeSet<_>>();
    let image = defined(&acc.image);
    let strong = image.len() > 1 && defined(&acc.region) == image;
    Ok(Region::set(acc.region).with_strong(strong))
}

/// The region at every reachable observation, built in one streaming pass.
pub fn regions_by_observation(u: &Universe) -> Result<BTreeMap<Value, BTreeSet<Value>>> {
    u.scan(
        BTreeMap::new,
        |acc: &mut BTreeMap<Value, BTreeSet<Value>>, s| {
            acc.entry(u.observe(s)).or_default().insert(u.estimate(s));
        },
        |acc, other| {
            for (l, thetas) in other {
                acc.entry(l).or_default().extend(thetas);
            }
        },
    )
}

/// Whole-universe identification verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Profile {
    /// Every region is a singleton.
    pub everywhere: bool,
    /// Every region equals `Img(θ)`, which has at least two points.
    /// Observations where `θ` is undefined (`Missing`) are left out.
    pub strong: bool,
}

pub fn identification_profile(u: &Universe) -> Result<Profile> {
    Ok(profile_of(&regions_by_observation(u)?))
}

pub(crate) fn profile_of(regions: &BTreeMap<Value, BTreeSet<Value>>) -> Profile {
    let defined = |r: &BTreeSet<Value>| r.iter().filter(|v| !v.is_missing()).count();
    let image: BTreeSet<&Value> = regions.values().flatten().filter(|v| !v.is_missing()).collect();
    Profile {
        everywhere: regions.values().all(|r| r.len() == 1),
        strong: image.len() > 1
            && regions
                .values()
                .all(|r| matches!(defined(r), 0) || defined(r) == image.len()),
    }
}

/// True iff the region equals `Img(θ)` at every `ℓ ∈ Img(λ)` and `Img(θ)`
/// has at least two points.
pub fn is_strongly_nonidentifiable(u: &Universe) -> Result<bool> {
    Ok(identification_profile(u)?.strong)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::{FinitePopulation, GridDim, ObservedUnit, ParamGrid, PopulationDesign, State};

    /// `(α, β, γ)` = `(E[Y|Z=1], E[Y|Z=0], P(Z=1))` on a grid, observing `(α, γ)`.
    fn missing_data(step: f64) -> Universe {
        let d = GridDim::new(0.0, 1.0, step).unwrap();
        Universe::grid(
            ParamGrid::new(vec![d; 3]),
            |s| {
                let x = s.as_point().unwrap();
                Value::real(x[0] * x[2] + x[1] * (1.0 - x[2]))
            },
            |s| {
                let x = s.as_point().unwrap();
                Value::tuple([x[0], x[2]])
            },
        )
    }

    fn beta(u: Universe) -> Universe {
        u.with_estimand(|s: &State| Value::real(s.as_point().unwrap()[1]))
    }

    #[test]
    fn causal_population_region() {
        let pop = FinitePopulation::completions(
            vec![0.0, 1.0],
            PopulationDesign::Causal,
            vec![ObservedUnit::treated(1.0), ObservedUnit::control(0.0)],
        )
        .unwrap();
        let u = Universe::population(pop);
        let l0 = u.enumerate().unwrap().next().map(|s| u.observe(&s)).unwrap();
        let r = region_enumerate(&u, &l0).unwrap();
        let expected: BTreeSet<_> = [0.0, 0.5, 1.0].into_iter().map(Value::real).collect();
        assert_eq!(r.as_set().unwrap(), &expected);
        assert!(r.strong, "every completion shares the record");
    }

    #[test]
    fn no_missingness_pins_the_mean() {
        let u = missing_data(0.5);
        let r = region_enumerate(&u, &Value::tuple([0.5, 1.0])).unwrap();
        assert_eq!(r.singleton(), Some(Value::real(0.5)));
        assert!(!r.strong);
    }

    #[test]
    fn unreachable_is_reported() {
        let u = missing_data(0.5);
        assert!(matches!(
            region_enumerate(&u, &Value::tuple([0.3, 1.0])),
            Err(Error::UnreachableObservation(_))
        ));
    }

    #[test]
    fn unobserved_conditional_mean_is_strongly_nonidentifiable() {
        // Restrict to γ < 1 so every observation leaves β free.
        let d = GridDim::new(0.0, 1.0, 0.25).unwrap();
        let g = GridDim::new(0.0, 0.75, 0.25).unwrap();
        let u = Universe::grid(
            ParamGrid::new(vec![d, d, g]),
            |s| Value::real(s.as_point().unwrap()[1]),
            |s| {
                let x = s.as_point().unwrap();
                Value::tuple([x[0], x[2]])
            },
        );
        assert!(is_strongly_nonidentifiable(&u).unwrap());
        let gamma = u
            .clone()
            .with_estimand(|s: &State| Value::real(s.as_point().unwrap()[2]));
        assert!(!is_strongly_nonidentifiable(&gamma).unwrap());
    }

    #[test]
    fn grid_parameters_stay_free() {
        // On a parameter grid β is never tied to the observation, even at γ = 1;
        // the mean E[Y] is not strongly non-identifiable there.
        assert!(is_strongly_nonidentifiable(&beta(missing_data(0.5))).unwrap());
        assert!(!is_strongly_nonidentifiable(&missing_data(0.5)).unwrap());
    }

    #[test]
    fn constant_estimand_is_not_strong() {
        let u = missing_data(0.5).with_estimand(|_: &State| Value::real(1.0));
        assert!(!is_strongly_nonidentifiable(&u).unwrap());
        let r = region_enumerate(&u, &Value::tuple([0.5, 0.5])).unwrap();
        assert!(r.is_singleton() && !r.strong);
    }

    #[test]
    fn regions_cover_every_observation() {
        let u = missing_data(0.5);
        let all = regions_by_observation(&u).unwrap();
        assert_eq!(all.len(), 9);
        for (l, set) in &all {
            assert_eq!(region_enumerate(&u, l).unwrap().as_set().unwrap(), set);
        }
    }
}
