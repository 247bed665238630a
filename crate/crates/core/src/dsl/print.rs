//! Canonical text form of a [`ProblemSpec`].

use std::fmt::{self, Write};

use super::ast::*;

fn list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

fn cond(c: &Option<Condition>) -> String {
    match c {
        Some(c) => format!(" | {} = {}", c.var, c.value),
        None => String::new(),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Expect { var, given } => write!(f, "expect({var}{})", cond(given)),
            ExprKind::Prob { var, value, given } => write!(f, "prob({var} = {value}{})", cond(given)),
            ExprKind::Dist { var, given } => write!(f, "dist({var}{})", cond(given)),
            ExprKind::MeanDiff { left, right } => write!(f, "mean_diff({left}, {right})"),
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Ident(s) => f.write_str(s),
            Arg::Num(x) => write!(f, "{x}"),
        }
    }
}

impl fmt::Display for AssumeDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(Arg::to_string).collect();
        write!(f, "{}({})", self.name, args.join(", "))
    }
}

impl fmt::Display for GivenValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GivenValue::Num(x) => write!(f, "{x}"),
            GivenValue::List(xs) => f.write_str(&list(xs)),
        }
    }
}

/// Prints a document that parses back to an equal spec.
pub fn print(spec: &ProblemSpec) -> String {
    let mut out = String::new();
    let u = &spec.universe;
    let kind = match u.kind {
        UniverseKind::Grid => "grid",
        UniverseKind::Population => "population",
    };
    let _ = writeln!(out, "universe {kind} {{");
    for v in &u.variables {
        let _ = writeln!(out, "  variable {} {{ support: {} }}", v.name, list(&v.support));
    }
    if let Some(step) = u.grid_step {
        let _ = writeln!(out, "  grid_step: {step}");
    }
    if let Some(n) = u.units {
        let _ = writeln!(out, "  units: {n}");
    }
    out.push_str("}\n");
    let observed: Vec<String> = spec.observe.iter().map(Expr::to_string).collect();
    let _ = writeln!(out, "observe {{ {} }}", observed.join(", "));
    for e in &spec.estimands {
        let _ = writeln!(out, "estimand {} {{ {} }}", e.name, e.expr);
    }
    for a in &spec.assumptions {
        let _ = writeln!(out, "assume {a}");
    }
    if let Some(given) = &spec.given {
        out.push_str("given {\n");
        for b in given {
            let _ = writeln!(out, "  {} = {}", b.expr, b.value);
        }
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn round_trip() {
        let doc = "
universe population { variable Y1 { support: [0, 1] } variable Y0 { support: [0,1] }
  variable Z { support: [0, 1] } units: 2 }
observe { dist(Y1 | Z = 1), dist(Y0|Z=0), prob(Z = 1) }
estimand ate { mean_diff(Y1, Y0) }
estimand p { prob(Y1 = 1) }
assume bounded(Y1, -0.5, 1e-3)
assume randomized(Z)
given { dist(Y1 | Z = 1) = [0.25, 0.75] prob(Z = 1) = 0.5 dist(Y0 | Z = 0) = [1, 0] }
";
        let spec = parse(doc).unwrap();
        let text = print(&spec);
        let again = parse(&text).unwrap();
        assert_eq!(spec, again);
        assert_eq!(text, print(&again));
        assert!(text.contains("bounded(Y1, -0.5, 0.001)"), "{text}");
    }
}
