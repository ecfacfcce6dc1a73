//! Expression trees over `u`, `v`, `s` and the germ DSL parser/printer.

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    U,
    V,
    S,
}

impl Var {
    pub fn index(self) -> usize {
        match self {
            Var::U => 0,
            Var::V => 1,
            Var::S => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::U => "u",
            Var::V => "v",
            Var::S => "s",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Nonnegative literal; negative constants are `Neg(Num)`.
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Sqrt(Box<Expr>),
}

impl Expr {
    /// Literal in canonical form (negative values wrapped in `Neg`).
    pub fn num(c: f64) -> Expr {
        if c < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-c)))
        } else {
            Expr::Num(c)
        }
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    /// `c * u^a * v^b * s^e`
    pub fn monomial(c: f64, e: [usize; 3]) -> Expr {
        let factors: Vec<Expr> = [Var::U, Var::V, Var::S]
            .into_iter()
            .zip(e)
            .filter(|&(_, p)| p > 0)
            .map(|(var, p)| match p {
                1 => Expr::Var(var),
                p => Expr::Pow(Box::new(Expr::Var(var)), p as i32),
            })
            .collect();
        let product = |init: Option<Expr>| {
            factors
                .iter()
                .cloned()
                .fold(init, |acc, f| Some(acc.map_or(f.clone(), |a| Expr::product(a, f))))
        };
        match c {
            _ if factors.is_empty() => Expr::num(c),
            1.0 => product(None).expect("nonempty"),
            -1.0 => Expr::Neg(Box::new(product(None).expect("nonempty"))),
            _ => product(Some(Expr::num(c))).expect("nonempty"),
        }
    }

    /// Polynomial with the coefficients of `jet`; terms below `drop_below`
    /// in magnitude are left out.
    pub fn from_jet(jet: &Jet, drop_below: f64) -> Expr {
        jet.terms()
            .filter(|(_, c)| c.abs() > drop_below)
            .fold(None, |acc: Option<Expr>, (e, c)| {
                Some(match acc {
                    None => Expr::monomial(c, e),
                    Some(a) if c < 0.0 => Expr::Sub(Box::new(a), Box::new(Expr::monomial(-c, e))),
                    Some(a) => Expr::sum(a, Expr::monomial(c, e)),
                })
            })
            .unwrap_or(Expr::Num(0.0))
    }

    pub fn sum(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn product(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn contains_var(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sqrt(a) => a.contains_var(v),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_var(v) || b.contains_var(v)
            }
        }
    }

    /// Simultaneous substitution of the three variables.
    pub fn substitute(&self, with: &[Expr; 3]) -> Expr {
        let rec = |a: &Expr| Box::new(a.substitute(with));
        match self {
            Expr::Num(c) => Expr::Num(*c),
            Expr::Var(v) => with[v.index()].clone(),
            Expr::Neg(a) => Expr::Neg(rec(a)),
            Expr::Add(a, b) => Expr::Add(rec(a), rec(b)),
            Expr::Sub(a, b) => Expr::Sub(rec(a), rec(b)),
            Expr::Mul(a, b) => Expr::Mul(rec(a), rec(b)),
            Expr::Div(a, b) => Expr::Div(rec(a), rec(b)),
            Expr::Pow(a, n) => Expr::Pow(rec(a), *n),
            Expr::Sqrt(a) => Expr::Sqrt(rec(a)),
        }
    }

    pub fn eval(&self, p: [f64; 3]) -> Result<f64> {
        Ok(match self {
            Expr::Num(c) => *c,
            Expr::Var(v) => p[v.index()],
            Expr::Neg(a) => -a.eval(p)?,
            Expr::Add(a, b) => a.eval(p)? + b.eval(p)?,
            Expr::Sub(a, b) => a.eval(p)? - b.eval(p)?,
            Expr::Mul(a, b) => a.eval(p)? * b.eval(p)?,
            Expr::Div(a, b) => {
                let d = b.eval(p)?;
                if d == 0.0 {
                    return Err(Error::Domain(format!("division by zero in '{b}'")));
                }
                a.eval(p)? / d
            }
            Expr::Pow(a, n) => {
                let x = a.eval(p)?;
                if x == 0.0 && *n < 0 {
                    return Err(Error::Domain(format!("negative power of zero in '{self}'")));
                }
                x.powi(*n)
            }
            Expr::Sqrt(a) => {
                let x = a.eval(p)?;
                if x < 0.0 {
                    return Err(Error::Domain(format!("square root of negative value {x}")));
                }
                x.sqrt()
            }
        })
    }

    /// Taylor jet about `center`. With `nvars == 2` the parameter `s` is held
    /// at `center[2]`; with `nvars == 3` it is the third jet variable.
    pub fn jet(&self, center: [f64; 3], nvars: usize, order: usize) -> Result<Jet> {
        let rec = |a: &Expr| a.jet(center, nvars, order);
        Ok(match self {
            Expr::Num(c) => Jet::constant(nvars, order, *c),
            Expr::Var(v) => {
                let i = v.index();
                let c = Jet::constant(nvars, order, center[i]);
                if i < nvars {
                    &c + &Jet::var(nvars, order, i)
                } else {
                    c
                }
            }
            Expr::Neg(a) => -rec(a)?,
            Expr::Add(a, b) => &rec(a)? + &rec(b)?,
            Expr::Sub(a, b) => &rec(a)? - &rec(b)?,
            Expr::Mul(a, b) => &rec(a)? * &rec(b)?,
            Expr::Div(a, b) => &rec(a)? * &rec(b)?.recip()?,
            Expr::Pow(a, n) => rec(a)?.powi(*n)?,
            Expr::Sqrt(a) => rec(a)?.sqrt()?,
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(_) | Expr::Var(_) | Expr::Sqrt(_) => 5,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(c) => write!(f, "{c}")?,
            Expr::Var(v) => write!(f, "{}", v.name())?,
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_prec(f, 3)?;
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write_prec(f, 1)?;
                write!(f, "{}", if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.write_prec(f, 2)?;
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write_prec(f, 2)?;
                write!(f, "{}", if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                b.write_prec(f, 3)?;
            }
            Expr::Pow(a, n) => {
                a.write_prec(f, 5)?;
                write!(f, "^{n}")?;
            }
            Expr::Sqrt(a) => {
                write!(f, "sqrt(")?;
                a.write_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if paren {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Sep,
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let mut depth = 0i32;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: tl,
                column: tc,
            })
        };
        match c {
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
                continue;
            }
            '\n' => {
                // newlines separate components only outside parentheses
                if depth == 0 {
                    push(&mut out, Tok::Sep);
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {}
            ';' => push(&mut out, Tok::Sep),
            '(' => {
                depth += 1;
                push(&mut out, Tok::LParen)
            }
            ')' => {
                depth -= 1;
                push(&mut out, Tok::RParen)
            }
            '+' | '-' | '*' | '/' | '^' => push(&mut out, Tok::Op(c)),
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit: String = chars[start..i].iter().collect();
                let value: f64 = lit
                    .parse()
                    .map_err(|_| parse_err(tl, tc, format!("malformed number '{lit}'")))?;
                push(&mut out, Tok::Num(value));
                col += i - start;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
                col += i - start;
                continue;
            }
            other => return Err(parse_err(tl, tc, format!("unexpected character '{other}'"))),
        }
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> Error {
        let t = self.peek();
        parse_err(t.line, t.column, message)
    }

    fn skip_separators(&mut self) {
        while self.peek().tok == Tok::Sep {
            self.bump();
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek().tok == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek().tok != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let parens = self.peek().tok == Tok::LParen;
        if parens {
            self.bump();
        }
        let negative = self.peek().tok == Tok::Op('-');
        if negative {
            self.bump();
        }
        let t = self.bump();
        let n = match t.tok {
            Tok::Num(x) if x.fract() == 0.0 && x <= i32::MAX as f64 => x as i32,
            _ => {
                return Err(parse_err(t.line, t.column, "exponent must be an integer literal"));
            }
        };
        if parens {
            self.expect_rparen()?;
        }
        Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }))
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if self.peek().tok == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here("expected ')'"))
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "u" => Ok(Expr::Var(Var::U)),
                "v" => Ok(Expr::Var(Var::V)),
                "s" => Ok(Expr::Var(Var::S)),
                "sqrt" => {
                    if self.peek().tok != Tok::LParen {
                        return Err(self.error_here("expected '(' after sqrt"));
                    }
                    self.bump();
                    let e = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Expr::Sqrt(Box::new(e)))
                }
                other => Err(parse_err(
                    t.line,
                    t.column,
                    format!("unknown identifier '{other}'"),
                )),
            },
            Tok::End => Err(parse_err(t.line, t.column, "unexpected end of input")),
            other => Err(parse_err(
                t.line,
                t.column,
                format!("unexpected token {}", describe(&other)),
            )),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(x) => format!("number {x}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Op(c) => format!("'{c}'"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Sep => "separator".into(),
        Tok::End => "end of input".into(),
    }
}

/// Parses a single expression.
pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    p.skip_separators();
    let e = p.expr()?;
    p.skip_separators();
    if p.peek().tok != Tok::End {
        return Err(p.error_here(format!("unexpected {}", describe(&p.peek().tok))));
    }
    Ok(e)
}

/// Parses a list of expressions separated by `;` or newlines.
pub fn parse_components(text: &str) -> Result<Vec<Expr>> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let mut out = Vec::new();
    loop {
        p.skip_separators();
        if p.peek().tok == Tok::End {
            return Ok(out);
        }
        out.push(p.expr()?);
        match p.peek().tok {
            Tok::Sep | Tok::End => {}
            ref other => {
                let msg = format!("expected ';' or newline, found {}", describe(other));
                return Err(p.error_here(msg));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn roundtrip(text: &str) {
        let e = parse_expr(text).unwrap();
        let printed = e.to_string();
        assert_eq!(parse_expr(&printed).unwrap(), e, "{text} -> {printed}");
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("1 - 2 - 3").unwrap();
        assert_eq!(e.eval([0.0; 3]).unwrap(), -4.0);
        let e = parse_expr("2*3^2").unwrap();
        assert_eq!(e.eval([0.0; 3]).unwrap(), 18.0);
        let e = parse_expr("-u^2").unwrap();
        assert_eq!(e.eval([3.0, 0.0, 0.0]).unwrap(), -9.0);
        let e = parse_expr("8/2/2").unwrap();
        assert_eq!(e.eval([0.0; 3]).unwrap(), 2.0);
        let e = parse_expr("u^-2").unwrap();
        assert_eq!(e.eval([2.0, 0.0, 0.0]).unwrap(), 0.25);
        let e = parse_expr("1/3").unwrap();
        assert_abs_diff_eq!(e.eval([0.0; 3]).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn printer_roundtrips() {
        for t in [
            "u",
            "v*(u^2+v^2)+s*v",
            "1 - (2 - u)",
            "-(u + v)^3",
            "(-u)^2",
            "u/(v*s)",
            "--u",
            "u - -v",
            "sqrt(1 + u)*v^-2",
            "(u^2)^3",
            "2.5e-3*u + 0.1",
            "1/3*u",
        ] {
            roundtrip(t);
        }
    }

    #[test]
    fn parse_errors_have_positions() {
        match parse_expr("u + * v") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (1, 5)),
            other => panic!("{other:?}"),
        }
        match parse_components("u;\nv + w;\nu") {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (2, 5));
                assert!(message.contains("'w'"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_expr("u^1.5").is_err());
        assert!(parse_expr("(u").is_err());
    }

    #[test]
    fn components_with_comments_and_newlines() {
        let c = parse_components("# umbrella\nu\nu*v  # second\n\nv^2\n").unwrap();
        assert_eq!(c.len(), 3);
        let c = parse_components("u; (u +\n v); v").unwrap();
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn eval_domain_errors() {
        assert!(matches!(parse_expr("1/u").unwrap().eval([0.0; 3]), Err(Error::Domain(_))));
        assert!(matches!(
            parse_expr("sqrt(u)").unwrap().eval([-1.0, 0.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn jet_matches_series_kernel() {
        let e = parse_expr("sqrt(1+u)").unwrap();
        let j = e.jet([0.0; 3], 2, 5).unwrap();
        let one = Jet::constant(2, 5, 1.0);
        let expected = (&one + &Jet::var(2, 5, 0)).sqrt().unwrap();
        assert!(j.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn jet_about_shifted_center() {
        let e = parse_expr("u^2*v + s").unwrap();
        let j = e.jet([1.0, 2.0, 3.0], 2, 3).unwrap();
        // (1+x)^2 (2+y) + 3
        assert_abs_diff_eq!(j.coeff(&[0, 0]), 5.0);
        assert_abs_diff_eq!(j.coeff(&[1, 0]), 4.0);
        assert_abs_diff_eq!(j.coeff(&[0, 1]), 1.0);
        assert_abs_diff_eq!(j.coeff(&[1, 1]), 2.0);
        assert_abs_diff_eq!(j.coeff(&[2, 0]), 2.0);
        assert_abs_diff_eq!(j.coeff(&[2, 1]), 1.0);
    }

    #[test]
    fn substitution_composes() {
        let e = parse_expr("u*v").unwrap();
        let r = e.substitute(&[
            parse_expr("u + v").unwrap(),
            parse_expr("2*s").unwrap(),
            Expr::var(Var::S),
        ]);
        assert_eq!(r.eval([1.0, 2.0, 3.0]).unwrap(), 18.0);
    }

    #[test]
    fn monomial_builder() {
        let m = Expr::monomial(-0.5, [2, 0, 1]);
        assert_eq!(m.eval([2.0, 7.0, 3.0]).unwrap(), -6.0);
        assert_eq!(parse_expr(&m.to_string()).unwrap(), m);
    }
}
