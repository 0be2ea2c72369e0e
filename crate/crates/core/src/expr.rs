//! A tiny expression language for immersion components and screen overrides.
//!
//! Grammar, loosely:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | primary ('^' exponent)?
//! primary:= number | name | name '(' expr ')' | '(' expr ')'
//! exponent := ['-'] integer ('^' exponent)?
//! ```
//!
//! `^` takes integer exponents only, chains right-associatively (`2^3^2`
//! is `2^512`... that is, `2^(3^2) = 512`), and binds tighter than unary
//! minus, so `-x^2` means `-(x^2)`.  Exponent chains are folded to a single
//! integer at parse time with overflow checked.  The name `pi` is reserved
//! for the circle constant; `sin`, `cos`, `tan`, `exp`, `log`, `sqrt` are
//! the callable functions.  Parsing never panics: every malformed input is
//! reported as a [`ParseError`] carrying the byte offset.

use crate::jets::{Jet3, JetError, JetTable};
use std::fmt::Write as _;
use std::sync::Arc;

const MAX_DEPTH: usize = 240;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// Expression tree.  Numeric literals are finite and non-negative; negative
/// quantities appear as explicit [`Expr::Neg`] nodes, which is what keeps the
/// print/parse round trip an identity.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Call(Func, Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("parse error at byte {offset}: {msg}")]
pub struct ParseError {
    pub offset: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unknown identifier '{0}'")]
    UnknownIdent(String),
    #[error("parameter list mismatch: {names} names, {values} values")]
    Arity { names: usize, values: usize },
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("{op} produced a non-finite value")]
    NonFinite { op: &'static str },
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    p.skip_ws();
    let e = p.expr(0)?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError { offset: self.pos, msg: msg.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self, depth: usize) -> Result<Expr, ParseError> {
        if depth > MAX_DEPTH {
            return Err(self.err("expression too deeply nested"));
        }
        let mut lhs = self.term(depth + 1)?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.term(depth + 1)?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.term(depth + 1)?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self, depth: usize) -> Result<Expr, ParseError> {
        if depth > MAX_DEPTH {
            return Err(self.err("expression too deeply nested"));
        }
        let mut lhs = self.factor(depth + 1)?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.factor(depth + 1)?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.factor(depth + 1)?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self, depth: usize) -> Result<Expr, ParseError> {
        if depth > MAX_DEPTH {
            return Err(self.err("expression too deeply nested"));
        }
        self.skip_ws();
        if self.eat(b'-') {
            self.skip_ws();
            let inner = self.factor(depth + 1)?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        let base = self.primary(depth + 1)?;
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            let e = self.exponent(depth + 1)?;
            let e32 = i32::try_from(e).map_err(|_| self.err("exponent overflows i32"))?;
            return Ok(Expr::Pow(Box::new(base), e32));
        }
        Ok(base)
    }

    /// Signed integer exponent; a further `^` folds right-associatively into
    /// a single integer with overflow checked.
    fn exponent(&mut self, depth: usize) -> Result<i64, ParseError> {
        if depth > MAX_DEPTH {
            return Err(self.err("expression too deeply nested"));
        }
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected an integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let mut v: i64 = digits
            .parse()
            .map_err(|_| ParseError { offset: start, msg: "integer exponent overflows".into() })?;
        if neg {
            v = -v;
        }
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            let rhs = self.exponent(depth + 1)?;
            let rhs_u = u32::try_from(rhs)
                .map_err(|_| self.err("negative or huge exponent inside an exponent chain"))?;
            v = v
                .checked_pow(rhs_u)
                .ok_or_else(|| self.err("exponent chain overflows"))?;
        }
        Ok(v)
    }

    fn primary(&mut self, depth: usize) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr(depth + 1)?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(inner)
            }
            Some(b'0'..=b'9') => self.number(),
            Some(c) if c == b'_' || c.is_ascii_alphabetic() => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c == b'_' || c.is_ascii_alphanumeric()) {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("ascii identifier")
                    .to_owned();
                self.skip_ws();
                if self.peek() == Some(b'(') {
                    let func = Func::lookup(&name).ok_or(ParseError {
                        offset: start,
                        msg: format!("unknown function '{name}'"),
                    })?;
                    self.pos += 1;
                    let arg = self.expr(depth + 1)?;
                    self.skip_ws();
                    if !self.eat(b')') {
                        return Err(self.err("expected ')' closing the call"));
                    }
                    Ok(Expr::Call(func, Box::new(arg)))
                } else if name == "pi" {
                    Ok(Expr::Num(std::f64::consts::PI))
                } else if Func::lookup(&name).is_some() {
                    Err(ParseError {
                        offset: start,
                        msg: format!("function '{name}' needs an argument list"),
                    })
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(c) => Err(self.err(format!("unexpected character '{}'", c as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.eat(b'.') {
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b'0'..=b'9')) {
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all ("2e" could begin a name in a
                // later grammar; here it is just malformed).
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let v: f64 = text.parse().map_err(|_| ParseError {
            offset: start,
            msg: format!("malformed number '{text}'"),
        })?;
        if !v.is_finite() {
            return Err(ParseError {
                offset: start,
                msg: format!("number literal '{text}' overflows f64"),
            });
        }
        Ok(Expr::Num(v))
    }
}

impl Expr {
    /// All variable names referenced, in first-appearance order.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk_vars(&mut out);
        out
    }

    fn walk_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) => {
                if !out.iter().any(|x| x == n) {
                    out.push(n.clone());
                }
            }
            Expr::Call(_, a) | Expr::Neg(a) | Expr::Pow(a, _) => a.walk_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.walk_vars(out);
                b.walk_vars(out);
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }

    /// Canonical text form; `parse(print(e)) == e` for every tree that obeys
    /// the literal invariant (finite, non-negative `Num` nodes).
    pub fn print(&self) -> String {
        let mut s = String::new();
        self.print_into(&mut s, 0);
        s
    }

    fn print_into(&self, out: &mut String, min_prec: u8) {
        let me = self.prec();
        let parens = me < min_prec;
        if parens {
            out.push('(');
        }
        match self {
            Expr::Num(v) => {
                let _ = write!(out, "{v}");
            }
            Expr::Var(n) => out.push_str(n),
            Expr::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.print_into(out, 0);
                out.push(')');
            }
            Expr::Neg(a) => {
                out.push('-');
                a.print_into(out, 3);
            }
            Expr::Add(a, b) => {
                a.print_into(out, 1);
                out.push_str(" + ");
                b.print_into(out, 2);
            }
            Expr::Sub(a, b) => {
                a.print_into(out, 1);
                out.push_str(" - ");
                b.print_into(out, 2);
            }
            Expr::Mul(a, b) => {
                a.print_into(out, 2);
                out.push_str(" * ");
                b.print_into(out, 3);
            }
            Expr::Div(a, b) => {
                a.print_into(out, 2);
                out.push_str(" / ");
                b.print_into(out, 3);
            }
            Expr::Pow(a, e) => {
                a.print_into(out, 5);
                let _ = write!(out, "^{e}");
            }
        }
        if parens {
            out.push(')');
        }
    }

    /// Plain tree-walking evaluation over `f64`.  This is deliberately
    /// independent of the jet path so the two can cross-check each other.
    pub fn eval_f64(&self, names: &[String], values: &[f64]) -> Result<f64, EvalError> {
        if names.len() != values.len() {
            return Err(EvalError::Arity { names: names.len(), values: values.len() });
        }
        self.eval_f64_inner(names, values)
    }

    fn eval_f64_inner(&self, names: &[String], values: &[f64]) -> Result<f64, EvalError> {
        let finite = |op: &'static str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(EvalError::NonFinite { op })
            }
        };
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(n) => names
                .iter()
                .position(|x| x == n)
                .map(|i| values[i])
                .ok_or_else(|| EvalError::UnknownIdent(n.clone())),
            Expr::Call(f, a) => {
                let x = a.eval_f64_inner(names, values)?;
                let v = match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sqrt => x.sqrt(),
                };
                if v.is_nan() || v.is_infinite() {
                    return Err(EvalError::NonFinite { op: f.name() });
                }
                Ok(v)
            }
            Expr::Neg(a) => Ok(-a.eval_f64_inner(names, values)?),
            Expr::Add(a, b) => finite(
                "add",
                a.eval_f64_inner(names, values)? + b.eval_f64_inner(names, values)?,
            ),
            Expr::Sub(a, b) => finite(
                "sub",
                a.eval_f64_inner(names, values)? - b.eval_f64_inner(names, values)?,
            ),
            Expr::Mul(a, b) => finite(
                "mul",
                a.eval_f64_inner(names, values)? * b.eval_f64_inner(names, values)?,
            ),
            Expr::Div(a, b) => {
                let d = b.eval_f64_inner(names, values)?;
                if d == 0.0 {
                    return Err(EvalError::NonFinite { op: "div" });
                }
                finite("div", a.eval_f64_inner(names, values)? / d)
            }
            Expr::Pow(a, e) => finite("pow", a.eval_f64_inner(names, values)?.powi(*e)),
        }
    }

    /// Jet evaluation: every parameter is a jet (normally a coordinate jet at
    /// the sample point) and the result carries derivatives through order 3.
    pub fn eval_jet(&self, names: &[String], args: &[Jet3]) -> Result<Jet3, EvalError> {
        if names.len() != args.len() {
            return Err(EvalError::Arity { names: names.len(), values: args.len() });
        }
        if args.is_empty() {
            return Err(EvalError::Arity { names: 0, values: 0 });
        }
        for a in &args[1..] {
            args[0].same_chart(a)?;
        }
        self.eval_jet_inner(names, args)
    }

    fn eval_jet_inner(&self, names: &[String], args: &[Jet3]) -> Result<Jet3, EvalError> {
        match self {
            Expr::Num(v) => Ok(args[0].constant_like(*v)),
            Expr::Var(n) => names
                .iter()
                .position(|x| x == n)
                .map(|i| args[i].clone())
                .ok_or_else(|| EvalError::UnknownIdent(n.clone())),
            Expr::Call(f, a) => {
                let x = a.eval_jet_inner(names, args)?;
                Ok(match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan()?,
                    Func::Exp => x.exp(),
                    Func::Log => x.log()?,
                    Func::Sqrt => x.sqrt()?,
                })
            }
            Expr::Neg(a) => Ok(-&a.eval_jet_inner(names, args)?),
            Expr::Add(a, b) => {
                Ok(&a.eval_jet_inner(names, args)? + &b.eval_jet_inner(names, args)?)
            }
            Expr::Sub(a, b) => {
                Ok(&a.eval_jet_inner(names, args)? - &b.eval_jet_inner(names, args)?)
            }
            Expr::Mul(a, b) => {
                Ok(&a.eval_jet_inner(names, args)? * &b.eval_jet_inner(names, args)?)
            }
            Expr::Div(a, b) => {
                Ok(a.eval_jet_inner(names, args)?.div(&b.eval_jet_inner(names, args)?)?)
            }
            Expr::Pow(a, e) => Ok(a.eval_jet_inner(names, args)?.powi(*e)?),
        }
    }

    /// Convenience: evaluate at a chart point, building coordinate jets over
    /// `table` (one variable per name, in order).
    pub fn eval_jet_at(
        &self,
        names: &[String],
        table: &Arc<JetTable>,
        point: &[f64],
    ) -> Result<Jet3, EvalError> {
        let args = coordinate_jets(table, point)?;
        self.eval_jet(names, &args)
    }
}

/// Coordinate jets for each entry of `point` over `table`.  The table may
/// have more variables than the point has entries (the extras are passive).
pub fn coordinate_jets(table: &Arc<JetTable>, point: &[f64]) -> Result<Vec<Jet3>, JetError> {
    point
        .iter()
        .enumerate()
        .map(|(k, &v)| Jet3::coordinate(table, k, v))
        .collect()
}
