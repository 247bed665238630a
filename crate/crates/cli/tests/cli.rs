use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value as Json;

fn ident(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ident")).args(args).output().unwrap()
}

fn specs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ident"))
        .collect();
    out.sort();
    out
}

fn spec(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name)
        .display()
        .to_string()
}

fn scratch(name: &str, text: &str) -> String {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn json(out: &Output) -> Json {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn region_report_for_missing_data() {
    let out = ident(&["region", &spec("missing_data.ident")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    assert_eq!(r["command"], "region");
    assert_eq!(r["status"], "ok");
    let mean = &r["estimands"][0];
    assert_eq!(mean["name"], "mean");
    assert_eq!(mean["method"], "closed_form");
    assert_eq!(mean["region"]["lo"].as_f64(), Some(0.45));
    assert_eq!(mean["region"]["hi"].as_f64(), Some(0.7));
    let text = String::from_utf8(out.stdout).unwrap();
    let at: Vec<usize> = [
        "command",
        "status",
        "observation",
        "estimands",
        "assumptions",
        "diagnostics",
    ]
    .iter()
    .map(|k| text.find(&format!("\n  \"{k}\":")).unwrap())
    .collect();
    assert!(at.windows(2).all(|w| w[0] < w[1]), "{text}");
}

#[test]
fn reports_are_byte_stable() {
    for path in specs() {
        let p = path.display().to_string();
        for cmd in ["analyze", "region", "refute"] {
            let a = ident(&[cmd, &p]);
            let b = ident(&[cmd, &p]);
            assert_eq!(a.stdout, b.stdout, "{cmd} {p}");
            assert_eq!(a.status.code(), b.status.code());
        }
    }
}

#[test]
fn thread_count_does_not_change_reports() {
    let p = spec("missing_data.ident");
    let many = ident(&["region", &p]);
    let one = Command::new(env!("CARGO_BIN_EXE_ident"))
        .args(["region", &p])
        .env("IDENT_ENGINE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(many.stdout, one.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_ident"))
        .args(["region", &p])
        .env("IDENT_ENGINE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn printed_specs_are_fixed_points() {
    for path in specs() {
        let out = ident(&["print", &path.display().to_string()]);
        assert_eq!(out.status.code(), Some(0));
        let name = format!("printed_{}", path.file_name().unwrap().to_string_lossy());
        let again = ident(&[
            "print",
            &scratch(&name, &String::from_utf8(out.stdout.clone()).unwrap()),
        ]);
        assert_eq!(out.stdout, again.stdout, "{}", path.display());
    }
}

#[test]
fn parse_errors_exit_one_with_a_position() {
    let p = scratch(
        "broken.ident",
        "universe grid { variable Y { support: [0, 1] } }\nobserve { expect(W) }\nestimand m { expect(Y) }\n",
    );
    let out = ident(&["analyze", &p]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("2:11: unknown identifier `W`"),
        "{}",
        stderr(&out)
    );
    assert!(out.stdout.is_empty());
    assert_eq!(ident(&["analyze", "/nonexistent.ident"]).status.code(), Some(1));
    assert_eq!(ident(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn contradictory_assumptions_exit_two_naming_the_culprit() {
    let text = std::fs::read_to_string(spec("missing_data.ident")).unwrap().replace(
        "assume bounded(Y, 0, 1)",
        "assume fixed(Z, 1, 0.2)\nassume fixed(Z, 1, 0.8)",
    );
    let out = ident(&["region", &scratch("contradiction.ident", &text)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("fixed(Z, 1, 0.8)"), "{}", stderr(&out));
}

#[test]
fn refuted_observations_exit_two_with_a_report() {
    let text = "
universe grid {
  variable Y { support: [-1, 0, 1] }
  variable Z { support: [0, 1] }
  grid_step: 0.25
}
observe { dist(Y | Z = 1), prob(Z = 1) }
estimand mean { expect(Y) }
assume bounded(Y, 0, 1)
given { dist(Y | Z = 1) = [0.5, 0.25, 0.25] prob(Z = 1) = 0.5 }
";
    let out = ident(&["refute", &scratch("refuted.ident", text)]);
    assert_eq!(out.status.code(), Some(2));
    let r = json(&out);
    assert_eq!(r["status"], "refuted");
    assert_eq!(r["assumptions"][0]["a_priori"], "refutable");
    assert_eq!(r["assumptions"][0]["refuted_at_l0"], true);
}

#[test]
fn lp_is_refused_for_nonlinear_estimands() {
    let out = ident(&["region", "--method", "lp", &spec("missing_data.ident")]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn case_studies() {
    let m = json(&ident(&[
        "case", "manski", "--p-z1", "0.75", "--mean", "0.6", "--lo", "0", "--hi", "1",
    ]));
    assert_eq!(
        (m["region"]["lo"].as_f64(), m["region"]["hi"].as_f64()),
        (Some(0.45), Some(0.7))
    );
    assert_eq!(m["exact"]["lo"], "9/20");
    let c = json(&ident(&[
        "case",
        "causal-ate",
        "--p-z1",
        "0.5",
        "--treated-mean",
        "0.7",
        "--control-mean",
        "0.3",
        "--lo",
        "0",
        "--hi",
        "1",
    ]));
    assert_eq!(c["exact"]["lo"], "-3/10");
    assert_eq!(c["exact"]["hi"], "7/10");
    let r = json(&ident(&[
        "case",
        "causal-ate",
        "--p-z1",
        "0.5",
        "--treated-mean",
        "0.7",
        "--control-mean",
        "0.3",
        "--lo",
        "0",
        "--hi",
        "1",
        "--randomized",
    ]));
    assert_eq!(r["region"]["values"][0].as_f64(), Some(0.4));
    let f = json(&ident(&["case", "frechet", "--u", "0.3", "--v", "0.8"]));
    assert!((f["region"]["lo"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert_eq!(f["region"]["hi"].as_f64(), Some(0.3));
    let j = json(&ident(&["case", "joint-cdf", "--n", "11"]));
    assert_eq!(j["agree"], true);
    assert_eq!(j["cells"].as_array().unwrap().len(), 121);
    let mix = ident(&["case", "mixture", "--mean", "-0.5", "--moment", "0.625"]);
    assert_eq!(mix.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&mix.stdout).contains("0.25"));
    let pop = ident(&["case", "finite-pop-ate", "--record", "t1,c0", "--alphabet", "0,1"]);
    assert_eq!(pop.status.code(), Some(0), "{}", stderr(&pop));
    assert!(String::from_utf8_lossy(&pop.stdout).contains("0.5"));
    let bad = ident(&[
        "case", "manski", "--p-z1", "1.5", "--mean", "0.6", "--lo", "0", "--hi", "1",
    ]);
    assert_ne!(bad.status.code(), Some(0));
}
