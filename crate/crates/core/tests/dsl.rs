//! Problem documents: printing, reparsing and solving the bundled specs.

use std::path::PathBuf;

use ident_core::analysis::{run, solve, Command, MethodChoice, RunOptions};
use ident_core::dsl::ast::*;
use ident_core::dsl::{compile, parse, print, CompileOptions, Problem};
use ident_core::{Error, Region};
use proptest::prelude::*;

fn bundled() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let mut out: Vec<(String, String)> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ident"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(out.len() >= 5);
    out
}

fn problem(text: &str) -> Problem {
    compile(&parse(text).unwrap(), &CompileOptions::default()).unwrap()
}

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-50i32..50).prop_map(f64::from),
        (-1000i32..1000).prop_map(|k| f64::from(k) / 100.0),
        Just(1e-3),
        Just(-2.5e7),
    ]
}

fn ident() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9_]{0,6}".prop_filter("keyword", |s| {
        !matches!(
            s.as_str(),
            "universe"
                | "grid"
                | "population"
                | "variable"
                | "support"
                | "grid_step"
                | "units"
                | "observe"
                | "estimand"
                | "assume"
                | "given"
                | "expect"
                | "prob"
                | "dist"
                | "mean_diff"
        )
    })
}

fn expr(vars: Vec<String>) -> impl Strategy<Value = Expr> {
    let pick = prop::sample::select(vars);
    let pick_c = pick.clone();
    let cond = || {
        prop::option::of((pick_c.clone(), number()).prop_map(|(var, value)| Condition {
            var,
            value,
            pos: Pos::default(),
        }))
    };
    prop_oneof![
        (pick.clone(), cond()).prop_map(|(var, given)| ExprKind::Expect { var, given }),
        (pick.clone(), number(), cond()).prop_map(|(var, value, given)| ExprKind::Prob { var, value, given }),
        (pick.clone(), cond()).prop_map(|(var, given)| ExprKind::Dist { var, given }),
        (pick.clone(), pick).prop_map(|(left, right)| ExprKind::MeanDiff { left, right }),
    ]
    .prop_map(|kind| Expr {
        kind,
        pos: Pos::default(),
    })
}

fn spec() -> impl Strategy<Value = ProblemSpec> {
    prop::collection::btree_set(ident(), 1..4).prop_flat_map(|names| {
        let names: Vec<String> = names.into_iter().collect();
        let variables = names
            .iter()
            .map(|n| {
                prop::collection::vec(number(), 1..4).prop_map({
                    let n = n.clone();
                    move |support| Variable {
                        name: n.clone(),
                        support,
                        pos: Pos::default(),
                    }
                })
            })
            .collect::<Vec<_>>();
        let arg = prop_oneof![
            prop::sample::select(names.clone()).prop_map(Arg::Ident),
            number().prop_map(Arg::Num)
        ];
        let assume = (
            prop::sample::select(vec!["bounded", "randomized", "independent", "fixed"]),
            prop::collection::vec(arg, 1..4),
        )
            .prop_map(|(name, args)| AssumeDecl {
                name: name.into(),
                args,
                pos: Pos::default(),
            });
        let value = prop_oneof![
            number().prop_map(GivenValue::Num),
            prop::collection::vec(number(), 1..4).prop_map(GivenValue::List)
        ];
        (
            variables,
            any::<bool>(),
            prop::option::of(number()),
            prop::option::of(1u64..100),
            prop::collection::vec(expr(names.clone()), 1..4),
            prop::collection::btree_set(ident(), 1..3),
            prop::collection::vec(expr(names.clone()), 3),
            prop::collection::vec(assume, 0..3),
            prop::option::of(prop::collection::vec((expr(names), value), 0..3)),
        )
            .prop_map(
                |(variables, grid, grid_step, units, observe, est_names, est_exprs, assumptions, given)| ProblemSpec {
                    universe: UniverseDecl {
                        kind: if grid {
                            UniverseKind::Grid
                        } else {
                            UniverseKind::Population
                        },
                        variables,
                        grid_step,
                        units,
                        pos: Pos::default(),
                    },
                    observe,
                    estimands: est_names
                        .into_iter()
                        .zip(est_exprs)
                        .map(|(name, expr)| Estimand {
                            name,
                            expr,
                            pos: Pos::default(),
                        })
                        .collect(),
                    assumptions,
                    given: given.map(|bs| bs.into_iter().map(|(expr, value)| Binding { expr, value }).collect()),
                },
            )
    })
}

proptest! {
    #[test]
    fn printed_specs_parse_back(s in spec()) {
        let text = print(&s);
        let again = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&again, &s);
        prop_assert_eq!(print(&again), text);
    }
}

#[test]
fn bundled_specs_round_trip() {
    for (name, text) in bundled() {
        let spec = parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = print(&spec);
        assert_eq!(parse(&printed).unwrap(), spec, "{name}");
        assert_eq!(print(&parse(&printed).unwrap()), printed, "{name}");
    }
}

#[test]
fn oracle_agrees_with_region_on_bundled_specs() {
    for (name, text) in bundled() {
        let p = problem(&text);
        let step = p.grid_step.unwrap_or(0.0);
        let region = run(&p, Command::Region, &RunOptions::default()).unwrap();
        let oracle = run(&p, Command::Oracle, &RunOptions::default()).unwrap();
        assert_eq!(region.status, oracle.status, "{name}");
        for (a, b) in region.estimands.iter().zip(&oracle.estimands) {
            let (ra, rb) = (a.region.as_ref().unwrap(), b.region.as_ref().unwrap());
            assert!(
                ra.agrees_with(rb, step + 1e-9).unwrap(),
                "{name}/{}: {ra} vs {rb}",
                a.name
            );
        }
    }
}

fn solved(p: &Problem, est: usize, assumptions: &[usize], method: MethodChoice) -> Option<Region> {
    match solve(p, est, assumptions, method) {
        Ok(s) => Some(s.region),
        Err(Error::UnreachableObservation(_) | Error::Infeasible | Error::EmptyUniverse { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn assumptions_shrink_bundled_regions() {
    for (name, text) in bundled() {
        let p = problem(&text);
        for est in 0..p.estimands.len() {
            for method in [MethodChoice::Enumerate, MethodChoice::Auto] {
                let base = solved(&p, est, &[], method).expect("reachable without assumptions");
                let mut subsets: Vec<Vec<usize>> = (0..p.assumptions.len()).map(|i| vec![i]).collect();
                subsets.push(p.all_assumptions());
                for a in subsets {
                    if let Some(r) = solved(&p, est, &a, method) {
                        assert!(
                            r.is_subset_of(&base, 1e-9).unwrap(),
                            "{name}/{est} under {a:?}: {r} vs {base}"
                        );
                    }
                }
            }
        }
    }
}
