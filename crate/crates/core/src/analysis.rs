//! Commands over compiled problems and the reports they produce.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::Serialize;

use crate::dsl::Problem;
use crate::error::{Error, Result};
use crate::region::{
    feasible_at, profile_of, refutability, region_enumerate, region_lp, APriori, LpMethod, Region, EPS_LP,
};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Identifiability of each estimand.
    Analyze,
    /// Regions (and reduced forms) at the given observation.
    Region,
    /// Assumption verdicts and the regions each assumption leaves.
    Refute,
    /// Regions by exhaustive enumeration only.
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Region => "region",
            Command::Refute => "refute",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    /// Closed form when recognized, then linear programming, then enumeration.
    #[default]
    Auto,
    Enumerate,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub method: MethodChoice,
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Enumeration,
    Lp,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// The observation is reachable but not under the assumptions.
    Refuted,
    /// The observation is outside the image of the observation mapping.
    Unreachable,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpInfo {
    pub arithmetic: LpMethod,
    pub eps: f64,
    pub approximate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimandReport {
    pub name: String,
    pub expression: String,
    pub identifiable_at_l0: Option<bool>,
    pub identifiable_everywhere: Option<bool>,
    pub strong: bool,
    pub region: Option<Region>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_form: Option<Region>,
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp: Option<LpInfo>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictedRegion {
    pub estimand: String,
    pub region: Option<Region>,
    pub method: Option<Method>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub name: String,
    pub a_priori: Option<APriori>,
    pub refuted_at_l0: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub restricted: Vec<RestrictedRegion>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub universe: &'static str,
    pub cells: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub units: Option<u64>,
    pub states: u128,
    pub admissible_states: Option<u128>,
    pub enumeration_cap: u128,
    pub eps_eq: f64,
    pub eps_lp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u128>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observation: Option<Value>,
    pub estimands: Vec<EstimandReport>,
    pub assumptions: Vec<AssumptionReport>,
    pub diagnostics: Diagnostics,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// A region and how it was obtained.
#[derive(Debug, Clone)]
pub struct Solved {
    pub region: Region,
    pub method: Method,
    pub reduced_form: Option<Region>,
    pub lp: Option<LpInfo>,
}

fn within_cap(p: &Problem, est: usize) -> Result<bool> {
    Ok(p.universe(est, &[])?.cardinality()? <= p.cap)
}

fn need_l0(p: &Problem) -> Result<&Value> {
    p.l0.as_ref()
        .ok_or_else(|| Error::InvalidProblem("this command needs a `given` block".into()))
}

fn enumerate(p: &Problem, est: usize, assumptions: &[usize]) -> Result<Solved> {
    let u = p.universe(est, assumptions)?;
    Ok(Solved {
        region: region_enumerate(&u, need_l0(p)?)?,
        method: Method::Enumeration,
        reduced_form: None,
        lp: None,
    })
}

fn linear_program(p: &Problem, est: usize, assumptions: &[usize]) -> Result<Solved> {
    let u = p.polytope(est, assumptions)?;
    need_l0(p)?;
    let b = region_lp(&u, p.l0_flat.as_ref().expect("set with l0"))?;
    Ok(Solved {
        region: b.region(),
        method: Method::Lp,
        reduced_form: None,
        lp: Some(LpInfo {
            arithmetic: b.method,
            eps: b.eps,
            approximate: b.approximate,
        }),
    })
}

/// Region of estimand `est` under the assumptions at `assumptions`.
pub fn solve(p: &Problem, est: usize, assumptions: &[usize], method: MethodChoice) -> Result<Solved> {
    match method {
        MethodChoice::Enumerate => enumerate(p, est, assumptions),
        MethodChoice::Lp => linear_program(p, est, assumptions),
        MethodChoice::Auto => {
            if let Some(r) = p.recognize(est, assumptions) {
                return Ok(Solved {
                    region: r.region()?,
                    method: Method::ClosedForm,
                    reduced_form: r.reduced_form()?,
                    lp: None,
                });
            }
            let linear = !p.is_population() && p.estimands[est].linear.is_some() && p.linear_assumptions(assumptions);
            if linear {
                let lp = linear_program(p, est, assumptions)?;
                let approximate = lp.lp.as_ref().is_some_and(|i| i.approximate);
                if !approximate || !within_cap(p, est)? {
                    return Ok(lp);
                }
            }
            enumerate(p, est, assumptions)
        }
    }
}

/// Whether `l0` is reachable with no assumptions, decided by `method`.
fn reachable(p: &Problem, est: usize, method: Method) -> Result<bool> {
    match method {
        Method::Lp => feasible_at(&p.polytope(est, &[])?, p.l0_flat.as_ref().expect("set with l0")),
        _ => match region_enumerate(&p.universe(est, &[])?, need_l0(p)?) {
            Ok(_) => Ok(true),
            Err(Error::UnreachableObservation(_)) => Ok(false),
            Err(e) => Err(e),
        },
    }
}

fn is_no_region(e: &Error) -> bool {
    matches!(e, Error::UnreachableObservation(_) | Error::Infeasible)
}

struct Profile {
    everywhere: bool,
    strong: bool,
    admissible: u128,
}

/// Definition-level verdicts from one pass over the enumerable universe.
fn profile(p: &Problem, est: usize) -> Result<Option<Profile>> {
    let u = p.universe(est, &p.all_assumptions())?;
    if u.cardinality()? > p.cap {
        return Ok(None);
    }
    type Acc = (BTreeMap<Value, BTreeSet<Value>>, u128);
    let (regions, admissible) = u.scan(
        || (BTreeMap::new(), 0u128),
        |acc: &mut Acc, s| {
            acc.0.entry(u.observe(s)).or_default().insert(u.estimate(s));
            acc.1 += 1;
        },
        |acc, other| {
            for (l, ts) in other.0 {
                acc.0.entry(l).or_default().extend(ts);
            }
            acc.1 += other.1;
        },
    )?;
    let verdict = profile_of(&regions);
    Ok(Some(Profile {
        everywhere: verdict.everywhere,
        strong: verdict.strong,
        admissible,
    }))
}

fn method_choice(command: Command, opts: &RunOptions) -> MethodChoice {
    match command {
        Command::Oracle => MethodChoice::Enumerate,
        _ => opts.method,
    }
}

/// Verdict for assumption `i` against the unrestricted universe.
fn verdict(p: &Problem, i: usize) -> Result<AssumptionReport> {
    let a = &p.assumptions[i];
    let base = if p.universe(0, &[])?.cardinality()? <= p.cap {
        p.universe(0, &[])?
    } else {
        match p.polytope(0, &[]) {
            Ok(u) => u,
            Err(Error::NotLinear(_)) => {
                return Ok(AssumptionReport {
                    name: a.name().to_string(),
                    a_priori: None,
                    refuted_at_l0: None,
                    note: Some("universe exceeds the enumeration cap and has no polytope form".into()),
                    restricted: Vec::new(),
                })
            }
            Err(e) => return Err(e),
        }
    };
    let l0 = if base.as_polytope().is_some() {
        p.l0_flat.as_ref()
    } else {
        p.l0.as_ref()
    };
    let (a_priori, refuted_at_l0, note) = match refutability(&base, a, l0) {
        Ok(v) => (Some(v.a_priori), v.refuted_at_l0, None),
        Err(Error::UnreachableObservation(_)) => {
            let v = refutability(&base, a, None)?;
            (Some(v.a_priori), None, Some("observation is unreachable".to_string()))
        }
        Err(Error::NotLinear(msg)) => (None, None, Some(msg)),
        Err(e) => return Err(e),
    };
    Ok(AssumptionReport {
        name: a.name().to_string(),
        a_priori,
        refuted_at_l0,
        note,
        restricted: Vec::new(),
    })
}

/// Runs `command` on a compiled problem.
pub fn run(p: &Problem, command: Command, opts: &RunOptions) -> Result<Report> {
    let started = Instant::now();
    if matches!(command, Command::Region | Command::Oracle) {
        need_l0(p)?;
    }
    let method = method_choice(command, opts);
    let all = p.all_assumptions();
    // Surfaces contradictory assumptions before any solver runs.
    p.universe(0, &all)?;
    let mut status = Status::Ok;
    let mut admissible = None;
    let mut estimands = Vec::new();
    for (est, plan) in p.estimands.iter().enumerate() {
        let prof = profile(p, est)?;
        if let Some(pr) = &prof {
            admissible.get_or_insert(pr.admissible);
        }
        let mut rep = EstimandReport {
            name: plan.name.clone(),
            expression: p.spec.estimands[est].expr.to_string(),
            identifiable_at_l0: None,
            identifiable_everywhere: prof.as_ref().map(|pr| pr.everywhere),
            strong: prof.as_ref().is_some_and(|pr| pr.strong),
            region: None,
            reduced_form: None,
            method: None,
            lp: None,
        };
        if p.l0.is_some() {
            match solve(p, est, &all, method) {
                Ok(s) => {
                    rep.identifiable_at_l0 = Some(s.region.is_singleton());
                    if prof.is_none() {
                        rep.strong = s.region.strong;
                    }
                    rep.region = Some(s.region);
                    rep.reduced_form = s.reduced_form;
                    rep.method = Some(s.method);
                    rep.lp = s.lp;
                }
                Err(e) if is_no_region(&e) => {
                    let m = if matches!(e, Error::Infeasible) {
                        Method::Lp
                    } else {
                        Method::Enumeration
                    };
                    rep.method = Some(m);
                    let here = if reachable(p, est, m)? {
                        Status::Refuted
                    } else {
                        Status::Unreachable
                    };
                    if status != Status::Unreachable {
                        status = here;
                    }
                }
                Err(e) => return Err(e),
            }
        }
        estimands.push(rep);
    }
    let mut assumptions = Vec::new();
    for i in 0..p.assumptions.len() {
        let mut rep = verdict(p, i)?;
        if command == Command::Refute && p.l0.is_some() {
            for (est, plan) in p.estimands.iter().enumerate() {
                let (region, m) = match solve(p, est, &[i], method) {
                    Ok(s) => (Some(s.region), Some(s.method)),
                    Err(e) if is_no_region(&e) => (None, None),
                    Err(e) => return Err(e),
                };
                rep.restricted.push(RestrictedRegion {
                    estimand: plan.name.clone(),
                    region,
                    method: m,
                });
            }
        }
        assumptions.push(rep);
    }
    let u = p.universe(0, &[])?;
    let diagnostics = Diagnostics {
        universe: if p.is_population() { "population" } else { "grid" },
        cells: p.cells,
        grid_step: p.grid_step,
        units: p.spec.universe.units,
        states: u.cardinality()?,
        admissible_states: admissible,
        enumeration_cap: p.cap,
        eps_eq: p.quantizer.step(),
        eps_lp: EPS_LP,
        runtime_ms: opts.timings.then(|| started.elapsed().as_millis()),
    };
    Ok(Report {
        command: command.name(),
        status,
        observation: p.l0.clone(),
        estimands,
        assumptions,
        diagnostics,
    })
}
