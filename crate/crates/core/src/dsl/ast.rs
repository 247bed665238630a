//! Syntax tree of problem documents.

use std::fmt;

/// Source position (1-based). Positions never take part in equality so
/// that reparsing printed documents gives equal trees.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniverseKind {
    Grid,
    Population,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub support: Vec<f64>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniverseDecl {
    pub kind: UniverseKind,
    pub variables: Vec<Variable>,
    pub grid_step: Option<f64>,
    pub units: Option<u64>,
    pub pos: Pos,
}

/// `| VAR = value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub var: String,
    pub value: f64,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Expect {
        var: String,
        given: Option<Condition>,
    },
    Prob {
        var: String,
        value: f64,
        given: Option<Condition>,
    },
    Dist {
        var: String,
        given: Option<Condition>,
    },
    MeanDiff {
        left: String,
        right: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl Expr {
    /// Variables referenced, in order of appearance.
    pub fn variables(&self) -> Vec<&str> {
        match &self.kind {
            ExprKind::Expect { var, given } | ExprKind::Dist { var, given } | ExprKind::Prob { var, given, .. } => {
                std::iter::once(var.as_str())
                    .chain(given.as_ref().map(|c| c.var.as_str()))
                    .collect()
            }
            ExprKind::MeanDiff { left, right } => vec![left, right],
        }
    }

    pub fn condition(&self) -> Option<&Condition> {
        match &self.kind {
            ExprKind::Expect { given, .. } | ExprKind::Dist { given, .. } | ExprKind::Prob { given, .. } => {
                given.as_ref()
            }
            ExprKind::MeanDiff { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimand {
    pub name: String,
    pub expr: Expr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Ident(String),
    Num(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumeDecl {
    pub name: String,
    pub args: Vec<Arg>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GivenValue {
    Num(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub expr: Expr,
    pub value: GivenValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub universe: UniverseDecl,
    pub observe: Vec<Expr>,
    pub estimands: Vec<Estimand>,
    pub assumptions: Vec<AssumeDecl>,
    pub given: Option<Vec<Binding>>,
}

impl ProblemSpec {
    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.universe.variables.iter().find(|v| v.name == name)
    }
}
