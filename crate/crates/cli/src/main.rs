use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use ident_core::analysis::{run, Command, MethodChoice, RunOptions, Status};
use ident_core::case_studies::{
    causal_ate_bounds_exact, causal_ate_reduced_form, default_mixture_grid, finite_pop_ate_region, frechet_bounds,
    manski_bounds_exact, manski_reduced_form, mixture_region, randomized_ate, CausalPoint, DiscreteCdf, JointCdfOracle,
    MissingDataPoint,
};
use ident_core::dsl::{compile, parse, print, CompileOptions, ProblemSpec};
use ident_core::universe::{ObservedUnit, DEFAULT_CAP};
use ident_core::value::{rational_to_f64, DEFAULT_EPS_EQ};
use ident_core::{Error, Value};

/// Identification analysis of problem files.
#[derive(Debug, Parser)]
#[command(name = "ident", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Decide identifiability of every estimand.
    Analyze(FileArgs),
    /// Identification regions at the given observation.
    Region(FileArgs),
    /// Refutability verdicts and the regions each assumption leaves.
    Refute(FileArgs),
    /// Regions by exhaustive enumeration, ignoring closed forms.
    Oracle(FileArgs),
    /// Print a problem file in canonical form.
    Print { file: PathBuf },
    /// Run a built-in worked example.
    #[command(subcommand)]
    Case(Case),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Enumerate,
    Lp,
}

#[derive(Debug, Args)]
struct FileArgs {
    file: PathBuf,
    /// Probability grid step; overrides the file.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Largest universe to enumerate.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u128,
    /// Equality tolerance.
    #[arg(long, default_value_t = DEFAULT_EPS_EQ)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Include wall-clock time in the report.
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Subcommand)]
enum Case {
    /// Mean of an outcome observed only when Z = 1.
    Manski {
        #[arg(long)]
        p_z1: f64,
        /// E[Y | Z = 1].
        #[arg(long)]
        mean: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        hi: f64,
    },
    /// Average treatment effect from observed outcomes and assignment.
    CausalAte {
        #[arg(long)]
        p_z1: f64,
        /// E[Y | Z = 1].
        #[arg(long, allow_negative_numbers = true)]
        treated_mean: f64,
        /// E[Y | Z = 0].
        #[arg(long, allow_negative_numbers = true)]
        control_mean: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        hi: f64,
        /// Assume random assignment.
        #[arg(long)]
        randomized: bool,
    },
    /// Bounds on a copula value C(u, v).
    Frechet {
        #[arg(long)]
        u: f64,
        #[arg(long)]
        v: f64,
    },
    /// Joint CDF bounds from two margins, LP against the closed form.
    JointCdf {
        /// Uniform margins on this many points.
        #[arg(long, default_value_t = 5)]
        n: usize,
        /// Comma-separated CDF values of X (overrides --n).
        #[arg(long, value_delimiter = ',')]
        fx: Option<Vec<f64>>,
        /// Comma-separated CDF values of Y (overrides --n).
        #[arg(long, value_delimiter = ',')]
        fy: Option<Vec<f64>>,
    },
    /// Two-component mixture observed through two moments.
    Mixture {
        #[arg(long, allow_negative_numbers = true)]
        mean: f64,
        /// π² + (1 - π)².
        #[arg(long)]
        moment: f64,
    },
    /// Average effect in a finite population.
    FinitePopAte {
        /// Units as `t<y>` (treated) or `c<y>` (control), comma-separated.
        #[arg(long, value_delimiter = ',')]
        record: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        alphabet: Vec<f64>,
    },
}

enum Failure {
    Usage(String),
    Infeasible(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptyUniverse { .. } | Error::Infeasible | Error::UnreachableObservation(_) => {
                Failure::Infeasible(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("IDENT_ENGINE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Failure::Usage(format!("IDENT_ENGINE_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Failure::Usage("IDENT_ENGINE_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn load(path: &Path) -> Result<ProblemSpec, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Failure::Usage(format!("{}:{e}", path.display())))
}

fn analyze(args: &FileArgs, command: Command) -> Result<(String, bool), Failure> {
    let spec = load(&args.file)?;
    let opts = CompileOptions {
        grid_step: args.grid_step,
        cap: args.cap,
        eps: args.eps,
    };
    let problem = compile(&spec, &opts)?;
    let run_opts = RunOptions {
        method: match args.method {
            MethodArg::Auto => MethodChoice::Auto,
            MethodArg::Enumerate => MethodChoice::Enumerate,
            MethodArg::Lp => MethodChoice::Lp,
        },
        timings: args.timings,
    };
    let report = run(&problem, command, &run_opts)?;
    Ok((report.to_json(), report.status == Status::Ok))
}

fn interval(lo: f64, hi: f64) -> Json {
    json!({ "lo": Value::real(lo), "hi": Value::real(hi) })
}

fn case(c: &Case) -> Result<Json, Failure> {
    Ok(match c {
        Case::Manski { p_z1, mean, lo, hi } => {
            let p = MissingDataPoint::new(*p_z1, *mean, (*lo, *hi))?;
            let (l, h) = manski_bounds_exact(&p)?;
            json!({
                "case": "manski",
                "region": interval(rational_to_f64(&l), rational_to_f64(&h)),
                "exact": { "lo": l.to_string(), "hi": h.to_string() },
                "width": rational_to_f64(&(&h - &l)),
                "reduced_form": manski_reduced_form(&p)?,
            })
        }
        Case::CausalAte {
            p_z1,
            treated_mean,
            control_mean,
            lo,
            hi,
            randomized,
        } => {
            let p = CausalPoint::new(*p_z1, *treated_mean, *control_mean, (*lo, *hi))?;
            if *randomized {
                json!({ "case": "causal-ate", "randomized": true, "region": { "kind": "set", "values": [Value::real(randomized_ate(&p)?)] } })
            } else {
                let (l, h) = causal_ate_bounds_exact(&p)?;
                json!({
                    "case": "causal-ate",
                    "randomized": false,
                    "region": interval(rational_to_f64(&l), rational_to_f64(&h)),
                    "exact": { "lo": l.to_string(), "hi": h.to_string() },
                    "width": rational_to_f64(&(&h - &l)),
                    "reduced_form": causal_ate_reduced_form(&p)?,
                })
            }
        }
        Case::Frechet { u, v } => {
            let (w, m) = frechet_bounds(*u, *v)?;
            json!({ "case": "frechet", "u": u, "v": v, "region": interval(w, m) })
        }
        Case::JointCdf { n, fx, fy } => {
            let margin = |given: &Option<Vec<f64>>| -> Result<DiscreteCdf, Failure> {
                Ok(match given {
                    Some(cdf) => DiscreteCdf::new((0..cdf.len()).map(|i| i as f64).collect(), cdf.clone())?,
                    None => DiscreteCdf::uniform(*n),
                })
            };
            let (fx, fy) = (margin(fx)?, margin(fy)?);
            let oracle = JointCdfOracle::new(&fx, &fy)?;
            let mut cells = Vec::new();
            let mut agree = true;
            for (i, u) in fx.values().iter().enumerate() {
                for (j, v) in fy.values().iter().enumerate() {
                    let b = oracle.bounds_at(i, j)?;
                    let (w, m) = ident_core::case_studies::frechet_bounds_exact(u, v);
                    agree &= b.lo == w && b.hi == m;
                    cells.push(json!({ "i": i, "j": j, "lp": [b.lo.to_string(), b.hi.to_string()], "frechet": [w.to_string(), m.to_string()] }));
                }
            }
            json!({ "case": "joint-cdf", "agree": agree, "cells": cells })
        }
        Case::Mixture { mean, moment } => {
            let l0 = Value::tuple([*mean, *moment]);
            let r = mixture_region(&default_mixture_grid(), &l0)?;
            json!({ "case": "mixture", "observation": l0, "pi": r.pi, "mu1": r.mu1, "mu2": r.mu2 })
        }
        Case::FinitePopAte { record, alphabet } => {
            let units = record
                .iter()
                .map(|u| {
                    let (arm, y) = u.split_at(1.min(u.len()));
                    let y: f64 = y.parse().map_err(|_| Failure::Usage(format!("bad unit `{u}`")))?;
                    match arm {
                        "t" => Ok(ObservedUnit::treated(y)),
                        "c" => Ok(ObservedUnit::control(y)),
                        _ => Err(Failure::Usage(format!("bad unit `{u}`: expected t<y> or c<y>"))),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            let r = finite_pop_ate_region(alphabet.clone(), units)?;
            json!({ "case": "finite-pop-ate", "units": record.len(), "region": r })
        }
    })
}

fn execute(cli: &Cli) -> Result<(String, bool), Failure> {
    configure_threads()?;
    match &cli.command {
        Cmd::Analyze(a) => analyze(a, Command::Analyze),
        Cmd::Region(a) => analyze(a, Command::Region),
        Cmd::Refute(a) => analyze(a, Command::Refute),
        Cmd::Oracle(a) => analyze(a, Command::Oracle),
        Cmd::Print { file } => Ok((print(&load(file)?).trim_end().to_string(), true)),
        Cmd::Case(c) => Ok((serde_json::to_string_pretty(&case(c)?).expect("json"), true)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok((out, ok)) => {
            // A closed pipe (`ident ... | head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{out}");
            ExitCode::from(if ok { 0 } else { 2 })
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Infeasible(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
