//! Lexer and recursive-descent parser.

use super::ast::*;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Sym(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(x) => format!("number {x}"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit))
            || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '.'));
        if starts_number {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exponent_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exponent_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let lexeme: String = chars[start..i].iter().collect();
            let x: f64 = lexeme.parse().map_err(|_| ParseError::Syntax {
                pos,
                message: format!("malformed number `{lexeme}`"),
            })?;
            col += i - start;
            out.push((Tok::Num(x), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        if "{}[](),:=|".contains(c) {
            out.push((Tok::Sym(c), pos));
            i += 1;
            col += 1;
            continue;
        }
        return Err(ParseError::Syntax {
            pos,
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            message: format!("expected {expected}, found {}", self.peek().describe()),
        })
    }

    fn sym(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.error(&format!("`{c}`"))
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => Ok(self.bump().1),
            _ => self.error(&format!("`{kw}`")),
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.bump().1;
                Ok((s, pos))
            }
            _ => self.error("an identifier"),
        }
    }

    fn num(&mut self) -> Result<f64, ParseError> {
        match *self.peek() {
            Tok::Num(x) => {
                self.bump();
                Ok(x)
            }
            _ => self.error("a number"),
        }
    }

    fn num_list(&mut self) -> Result<Vec<f64>, ParseError> {
        self.sym('[')?;
        let mut xs = vec![self.num()?];
        while self.eat_sym(',') {
            xs.push(self.num()?);
        }
        self.sym(']')?;
        Ok(xs)
    }

    fn universe(&mut self) -> Result<UniverseDecl, ParseError> {
        let pos = self.keyword("universe")?;
        let kind = match self.peek() {
            Tok::Ident(s) if s == "grid" => UniverseKind::Grid,
            Tok::Ident(s) if s == "population" => UniverseKind::Population,
            _ => return self.error("`grid` or `population`"),
        };
        self.bump();
        self.sym('{')?;
        let mut decl = UniverseDecl {
            kind,
            variables: Vec::new(),
            grid_step: None,
            units: None,
            pos,
        };
        while !self.eat_sym('}') {
            let (word, wpos) = self.ident()?;
            match word.as_str() {
                "variable" => {
                    let (name, pos) = self.ident()?;
                    if decl.variables.iter().any(|v| v.name == name) {
                        return Err(ParseError::DuplicateDeclaration { pos, name });
                    }
                    self.sym('{')?;
                    self.keyword("support")?;
                    self.sym(':')?;
                    let support = self.num_list()?;
                    self.sym('}')?;
                    decl.variables.push(Variable { name, support, pos });
                }
                "grid_step" => {
                    if decl.grid_step.is_some() {
                        return Err(ParseError::DuplicateDeclaration { pos: wpos, name: word });
                    }
                    self.sym(':')?;
                    decl.grid_step = Some(self.num()?);
                }
                "units" => {
                    if decl.units.is_some() {
                        return Err(ParseError::DuplicateDeclaration { pos: wpos, name: word });
                    }
                    self.sym(':')?;
                    let npos = self.pos();
                    let n = self.num()?;
                    if n < 1.0 || n.fract() != 0.0 {
                        return Err(ParseError::Syntax {
                            pos: npos,
                            message: format!("units must be a positive integer, found {n}"),
                        });
                    }
                    decl.units = Some(n as u64);
                }
                _ => {
                    return Err(ParseError::Syntax {
                        pos: wpos,
                        message: format!("expected `variable`, `grid_step` or `units`, found `{word}`"),
                    })
                }
            }
        }
        Ok(decl)
    }

    fn condition(&mut self) -> Result<Option<Condition>, ParseError> {
        if !self.eat_sym('|') {
            return Ok(None);
        }
        let (var, pos) = self.ident()?;
        self.sym('=')?;
        let value = self.num()?;
        Ok(Some(Condition { var, value, pos }))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let (head, pos) = self.ident()?;
        self.sym('(')?;
        let kind = match head.as_str() {
            "expect" => {
                let var = self.ident()?.0;
                ExprKind::Expect {
                    var,
                    given: self.condition()?,
                }
            }
            "prob" => {
                let var = self.ident()?.0;
                self.sym('=')?;
                let value = self.num()?;
                ExprKind::Prob {
                    var,
                    value,
                    given: self.condition()?,
                }
            }
            "dist" => {
                let var = self.ident()?.0;
                ExprKind::Dist {
                    var,
                    given: self.condition()?,
                }
            }
            "mean_diff" => {
                let left = self.ident()?.0;
                self.sym(',')?;
                let right = self.ident()?.0;
                ExprKind::MeanDiff { left, right }
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos,
                    message: format!("expected `expect`, `prob`, `dist` or `mean_diff`, found `{head}`"),
                })
            }
        };
        self.sym(')')?;
        Ok(Expr { kind, pos })
    }

    fn assume(&mut self) -> Result<AssumeDecl, ParseError> {
        self.keyword("assume")?;
        let (name, pos) = self.ident()?;
        self.sym('(')?;
        let mut args = Vec::new();
        loop {
            args.push(match self.peek().clone() {
                Tok::Ident(s) => {
                    self.bump();
                    Arg::Ident(s)
                }
                Tok::Num(x) => {
                    self.bump();
                    Arg::Num(x)
                }
                _ => return self.error("an identifier or a number"),
            });
            if !self.eat_sym(',') {
                break;
            }
        }
        self.sym(')')?;
        Ok(AssumeDecl { name, args, pos })
    }

    fn given(&mut self) -> Result<Vec<Binding>, ParseError> {
        self.keyword("given")?;
        self.sym('{')?;
        let mut out = Vec::new();
        while !self.eat_sym('}') {
            let expr = self.expr()?;
            self.sym('=')?;
            let value = if *self.peek() == Tok::Sym('[') {
                GivenValue::List(self.num_list()?)
            } else {
                GivenValue::Num(self.num()?)
            };
            out.push(Binding { expr, value });
        }
        Ok(out)
    }

    fn problem(&mut self) -> Result<ProblemSpec, ParseError> {
        let mut universe = None;
        let mut observe: Option<Vec<Expr>> = None;
        let mut estimands: Vec<Estimand> = Vec::new();
        let mut assumptions = Vec::new();
        let mut given = None;
        loop {
            let pos = self.pos();
            let word = match self.peek() {
                Tok::Eof => break,
                Tok::Ident(s) => s.clone(),
                _ => return self.error("a statement"),
            };
            match word.as_str() {
                "universe" => {
                    if universe.is_some() {
                        return Err(ParseError::DuplicateDeclaration { pos, name: word });
                    }
                    universe = Some(self.universe()?);
                }
                "observe" => {
                    if observe.is_some() {
                        return Err(ParseError::DuplicateDeclaration { pos, name: word });
                    }
                    self.bump();
                    self.sym('{')?;
                    let mut exprs = vec![self.expr()?];
                    while self.eat_sym(',') {
                        exprs.push(self.expr()?);
                    }
                    self.sym('}')?;
                    observe = Some(exprs);
                }
                "estimand" => {
                    self.bump();
                    let (name, npos) = self.ident()?;
                    if estimands.iter().any(|e| e.name == name) {
                        return Err(ParseError::DuplicateDeclaration { pos: npos, name });
                    }
                    self.sym('{')?;
                    let expr = self.expr()?;
                    self.sym('}')?;
                    estimands.push(Estimand { name, expr, pos: npos });
                }
                "assume" => assumptions.push(self.assume()?),
                "given" => {
                    if given.is_some() {
                        return Err(ParseError::DuplicateDeclaration { pos, name: word });
                    }
                    given = Some(self.given()?);
                }
                _ => {
                    return Err(ParseError::Syntax {
                        pos,
                        message: format!("expected a statement, found `{word}`"),
                    })
                }
            }
        }
        let end = self.pos();
        let universe = universe.ok_or(ParseError::Syntax {
            pos: end,
            message: "no universe declared".into(),
        })?;
        let observe = observe.ok_or(ParseError::Syntax {
            pos: end,
            message: "no observe block".into(),
        })?;
        if estimands.is_empty() {
            return Err(ParseError::Syntax {
                pos: end,
                message: "no estimand declared".into(),
            });
        }
        let spec = ProblemSpec {
            universe,
            observe,
            estimands,
            assumptions,
            given,
        };
        check_names(&spec)?;
        Ok(spec)
    }
}

const BUILTINS: [&str; 4] = ["bounded", "randomized", "independent", "fixed"];

fn check_names(spec: &ProblemSpec) -> Result<(), ParseError> {
    let declared = |name: &str| spec.variable(name).is_some();
    let exprs = spec
        .observe
        .iter()
        .chain(spec.estimands.iter().map(|e| &e.expr))
        .chain(spec.given.iter().flatten().map(|b| &b.expr));
    for e in exprs {
        for v in e.variables() {
            if !declared(v) {
                return Err(ParseError::UnknownIdentifier {
                    pos: e.pos,
                    name: v.to_string(),
                });
            }
        }
    }
    for a in &spec.assumptions {
        if !BUILTINS.contains(&a.name.as_str()) {
            return Err(ParseError::UnknownIdentifier {
                pos: a.pos,
                name: a.name.clone(),
            });
        }
        for arg in &a.args {
            if let Arg::Ident(v) = arg {
                if !declared(v) {
                    return Err(ParseError::UnknownIdentifier {
                        pos: a.pos,
                        name: v.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Parses a problem document.
pub fn parse(text: &str) -> Result<ProblemSpec, ParseError> {
    let toks = lex(text)?;
    Parser { toks, at: 0 }.problem()
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = "
# outcome observed only for Z = 1
universe grid {
  variable Y { support: [0, 1] }
  variable Z { support: [0, 1] }
  grid_step: 0.05
}
observe { prob(Y = 1 | Z = 1), prob(Z = 1) }
estimand mean { expect(Y) }
assume bounded(Y, 0, 1)
given { prob(Y = 1 | Z = 1) = 0.6  prob(Z = 1) = 0.75 }
";

    #[test]
    fn parses_missing_data_document() {
        let spec = parse(DOC).unwrap();
        assert_eq!(spec.universe.variables.len(), 2);
        assert_eq!(spec.observe.len(), 2);
        assert_eq!(spec.estimands.len(), 1);
        assert_eq!(spec.assumptions.len(), 1);
        assert_eq!(spec.universe.grid_step, Some(0.05));
        assert_eq!(spec.given.as_ref().unwrap().len(), 2);
        assert_eq!(spec.estimands[0].expr.pos.line, 9);
    }

    #[test]
    fn unknown_identifier() {
        let doc = DOC.replace("expect(Y)", "expect(W)");
        match parse(&doc) {
            Err(ParseError::UnknownIdentifier { name, pos }) => {
                assert_eq!(name, "W");
                assert_eq!((pos.line, pos.col), (9, 17));
            }
            other => panic!("{other:?}"),
        }
        let doc = DOC.replace("bounded", "monotone");
        assert!(matches!(parse(&doc), Err(ParseError::UnknownIdentifier { .. })));
    }

    #[test]
    fn duplicates() {
        let doc = DOC.replace("variable Z", "variable Y");
        assert!(matches!(parse(&doc), Err(ParseError::DuplicateDeclaration { name, .. }) if name == "Y"));
        let doc = format!("{DOC}\nestimand mean {{ expect(Z) }}");
        assert!(matches!(parse(&doc), Err(ParseError::DuplicateDeclaration { name, .. }) if name == "mean"));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse("universe grid {\n  variable Y { support: [0 1] }\n}") {
            Err(ParseError::Syntax { pos, message }) => {
                assert_eq!((pos.line, pos.col), (2, 28));
                assert!(message.contains("`]`"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse(""), Err(ParseError::Syntax { .. })));
        assert!(matches!(
            parse("universe grid { } observe { expect(Y) } estimand m { expect(Y) }"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse("universe grid { variable Y { support: [0] } } observe { expect(Y) }"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn numbers() {
        let toks = lex("-0.5 1e-3 .25 -.5 x-1").unwrap();
        let nums: Vec<_> = toks
            .iter()
            .filter_map(|(t, _)| match t {
                Tok::Num(x) => Some(*x),
                _ => None,
            })
            .collect();
        assert_eq!(nums, vec![-0.5, 1e-3, 0.25, -0.5, -1.0]);
    }
}
