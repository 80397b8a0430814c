//! Single-variable real expressions used in config files for `f`, `g`, `w`,
//! `V` and Lagrangian pieces.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          (right-associative)
//! primary := number | constant | variable | func '(' expr ')' | '(' expr ')'
//! func    := exp | log | sin | cos | sqrt | abs
//! constant:= pi | e
//! ```
//!
//! Numbers are decimal with an optional exponent (`1.5e-3`). Whitespace is
//! ignored. Any identifier that is not a function or constant is the free
//! variable; an expression may use at most one distinct variable name.
//! `u ^ v` with a non-constant exponent requires `u > 0` when evaluated.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Syntax tree node. `offset` is the byte offset of the construct in the
/// source text (synthesized nodes inherit the offset they were derived from).
#[derive(Debug, Clone, PartialEq)]
pub struct Ast {
    pub kind: AstKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AstKind {
    Num(f64),
    Const(Constant),
    Var,
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Call(Func, Box<Ast>),
}

/// A parsed expression in one free variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Ast,
    var: Option<String>,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text)?.parse_all()
    }

    /// Builds an expression from a tree; `var` names the variable for printing.
    pub fn from_ast(root: Ast, var: Option<String>) -> Self {
        Self { root, var }
    }

    pub fn ast(&self) -> &Ast {
        &self.root
    }

    pub fn variable(&self) -> Option<&str> {
        self.var.as_deref()
    }

    pub fn is_constant(&self) -> bool {
        !has_var(&self.root)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        eval(&self.root, x)
    }

    /// Symbolic derivative with respect to the free variable, simplified only
    /// by constant folding and 0/1 identities.
    pub fn differentiate(&self) -> Result<Expr> {
        Ok(Expr {
            root: diff(&self.root)?,
            var: self.var.clone(),
        })
    }

    /// Compact prefix rendering, e.g. `Mul(exp(x), Add(1, Pow(x, 2)))`.
    pub fn to_sexpr(&self) -> String {
        let mut s = String::new();
        sexpr(&self.root, self.var_name(), &mut s);
        s
    }

    fn var_name(&self) -> &str {
        self.var.as_deref().unwrap_or("x")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        print(&self.root, self.var_name(), 0, &mut s);
        f.write_str(&s)
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| Error::Parse {
                    offset: start,
                    expected: vec!["number".into()],
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                return Err(Error::Parse {
                    offset: start,
                    expected: primary_expected(),
                })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

fn primary_expected() -> Vec<String> {
    ["number", "identifier", "\"(\"", "\"-\""].iter().map(|s| s.to_string()).collect()
}

// ---------------------------------------------------------------- parser

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    var: Option<String>,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Parse {
                offset: 0,
                expected: primary_expected(),
            });
        }
        Ok(Self {
            toks: lex(text)?,
            pos: 0,
            var: None,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        Err(Error::Parse {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn parse_all(mut self) -> Result<Expr> {
        let root = self.expr()?;
        if *self.peek() != Tok::End {
            return self.fail(&["operator", "end of input"]);
        }
        Ok(Expr {
            root,
            var: self.var,
        })
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let (_, offset) = self.bump();
            let rhs = self.term()?;
            lhs = bin(op, lhs, rhs, offset);
        }
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            let (_, offset) = self.bump();
            let rhs = self.unary()?;
            lhs = bin(op, lhs, rhs, offset);
        }
    }

    fn unary(&mut self) -> Result<Ast> {
        if *self.peek() == Tok::Minus {
            let (_, offset) = self.bump();
            let inner = self.unary()?;
            return Ok(Ast {
                kind: AstKind::Neg(Box::new(inner)),
                offset,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            let (_, offset) = self.bump();
            let exponent = self.unary()?;
            return Ok(bin(BinOp::Pow, base, exponent, offset));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Ast> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(num(v, offset))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return self.fail(&["\")\"", "operator"]);
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return self.fail(&["\"(\""]);
                    }
                    self.bump();
                    let arg = self.expr()?;
                    if *self.peek() != Tok::RParen {
                        return self.fail(&["\")\"", "operator"]);
                    }
                    self.bump();
                    return Ok(Ast {
                        kind: AstKind::Call(func, Box::new(arg)),
                        offset,
                    });
                }
                let kind = match name.as_str() {
                    "pi" => AstKind::Const(Constant::Pi),
                    "e" => AstKind::Const(Constant::E),
                    _ => {
                        match &self.var {
                            None => self.var = Some(name),
                            Some(v) if *v == name => {}
                            Some(v) => {
                                return Err(Error::MultipleVariables {
                                    first: v.clone(),
                                    second: name,
                                })
                            }
                        }
                        AstKind::Var
                    }
                };
                Ok(Ast { kind, offset })
            }
            _ => self.fail(&["number", "identifier", "\"(\"", "\"-\""]),
        }
    }
}

// ---------------------------------------------------------------- evaluation

fn eval_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Eval {
        offset,
        message: message.into(),
    }
}

fn eval(node: &Ast, x: f64) -> Result<f64> {
    let v = match &node.kind {
        AstKind::Num(v) => *v,
        AstKind::Const(c) => c.value(),
        AstKind::Var => x,
        AstKind::Neg(u) => -eval(u, x)?,
        AstKind::Bin(op, l, r) => {
            let a = eval(l, x)?;
            let b = eval(r, x)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(eval_err(node.offset, "division by zero"));
                    }
                    a / b
                }
                BinOp::Pow => {
                    if has_var(r) && !(a > 0.0) {
                        return Err(eval_err(
                            node.offset,
                            format!("base {a} must be positive for a variable exponent"),
                        ));
                    }
                    if a == 0.0 && b < 0.0 {
                        return Err(eval_err(node.offset, "zero raised to a negative power"));
                    }
                    let p = a.powf(b);
                    if p.is_nan() {
                        return Err(eval_err(
                            node.offset,
                            format!("{a}^{b} is not a real number"),
                        ));
                    }
                    p
                }
            }
        }
        AstKind::Call(func, u) => {
            let a = eval(u, x)?;
            match func {
                Func::Exp => a.exp(),
                Func::Log => {
                    if !(a > 0.0) {
                        return Err(eval_err(node.offset, format!("log of non-positive value {a}")));
                    }
                    a.ln()
                }
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(eval_err(node.offset, format!("sqrt of negative value {a}")));
                    }
                    a.sqrt()
                }
                Func::Abs => a.abs(),
            }
        }
    };
    if !v.is_finite() {
        return Err(eval_err(node.offset, format!("non-finite result {v}")));
    }
    Ok(v)
}

fn has_var(node: &Ast) -> bool {
    match &node.kind {
        AstKind::Num(_) | AstKind::Const(_) => false,
        AstKind::Var => true,
        AstKind::Neg(u) | AstKind::Call(_, u) => has_var(u),
        AstKind::Bin(_, l, r) => has_var(l) || has_var(r),
    }
}

// ---------------------------------------------------------------- differentiation

fn num(v: f64, offset: usize) -> Ast {
    Ast {
        kind: AstKind::Num(v),
        offset,
    }
}

fn bin(op: BinOp, l: Ast, r: Ast, offset: usize) -> Ast {
    Ast {
        kind: AstKind::Bin(op, Box::new(l), Box::new(r)),
        offset,
    }
}

fn as_num(a: &Ast) -> Option<f64> {
    match a.kind {
        AstKind::Num(v) => Some(v),
        _ => None,
    }
}

fn folded(v: f64, offset: usize) -> Option<Ast> {
    v.is_finite().then(|| num(v, offset))
}

fn add(l: Ast, r: Ast, offset: usize) -> Ast {
    match (as_num(&l), as_num(&r)) {
        (Some(a), Some(b)) => folded(a + b, offset).unwrap_or_else(|| bin(BinOp::Add, l, r, offset)),
        (Some(a), _) if a == 0.0 => r,
        (_, Some(b)) if b == 0.0 => l,
        _ => bin(BinOp::Add, l, r, offset),
    }
}

fn sub(l: Ast, r: Ast, offset: usize) -> Ast {
    match (as_num(&l), as_num(&r)) {
        (Some(a), Some(b)) => folded(a - b, offset).unwrap_or_else(|| bin(BinOp::Sub, l, r, offset)),
        (_, Some(b)) if b == 0.0 => l,
        (Some(a), _) if a == 0.0 => neg(r, offset),
        _ => bin(BinOp::Sub, l, r, offset),
    }
}

fn mul(l: Ast, r: Ast, offset: usize) -> Ast {
    match (as_num(&l), as_num(&r)) {
        (Some(a), Some(b)) => folded(a * b, offset).unwrap_or_else(|| bin(BinOp::Mul, l, r, offset)),
        (Some(a), _) if a == 0.0 => num(0.0, offset),
        (_, Some(b)) if b == 0.0 => num(0.0, offset),
        (Some(a), _) if a == 1.0 => r,
        (_, Some(b)) if b == 1.0 => l,
        _ => bin(BinOp::Mul, l, r, offset),
    }
}

fn div(l: Ast, r: Ast, offset: usize) -> Ast {
    match (as_num(&l), as_num(&r)) {
        (Some(a), Some(b)) if b != 0.0 => {
            folded(a / b, offset).unwrap_or_else(|| bin(BinOp::Div, l, r, offset))
        }
        (Some(a), _) if a == 0.0 => num(0.0, offset),
        (_, Some(b)) if b == 1.0 => l,
        _ => bin(BinOp::Div, l, r, offset),
    }
}

fn pow(l: Ast, r: Ast, offset: usize) -> Ast {
    match (as_num(&l), as_num(&r)) {
        (Some(a), Some(b)) => match folded(a.powf(b), offset) {
            Some(v) if !(a == 0.0 && b < 0.0) => v,
            _ => bin(BinOp::Pow, l, r, offset),
        },
        (_, Some(b)) if b == 1.0 => l,
        (_, Some(b)) if b == 0.0 => num(1.0, offset),
        _ => bin(BinOp::Pow, l, r, offset),
    }
}

fn neg(u: Ast, offset: usize) -> Ast {
    match u.kind {
        AstKind::Num(v) => num(-v, offset),
        AstKind::Neg(inner) => *inner,
        kind => Ast {
            kind: AstKind::Neg(Box::new(Ast { kind, offset: u.offset })),
            offset,
        },
    }
}

fn call(func: Func, u: Ast, offset: usize) -> Ast {
    if let Some(a) = as_num(&u) {
        let v = match func {
            Func::Exp => Some(a.exp()),
            Func::Log if a > 0.0 => Some(a.ln()),
            Func::Sin => Some(a.sin()),
            Func::Cos => Some(a.cos()),
            Func::Sqrt if a >= 0.0 => Some(a.sqrt()),
            Func::Abs => Some(a.abs()),
            _ => None,
        };
        if let Some(node) = v.and_then(|v| folded(v, offset)) {
            return node;
        }
    }
    Ast {
        kind: AstKind::Call(func, Box::new(u)),
        offset,
    }
}

fn diff(node: &Ast) -> Result<Ast> {
    let o = node.offset;
    Ok(match &node.kind {
        AstKind::Num(_) | AstKind::Const(_) => num(0.0, o),
        AstKind::Var => num(1.0, o),
        AstKind::Neg(u) => neg(diff(u)?, o),
        AstKind::Bin(op, l, r) => {
            let (u, v) = (l.as_ref(), r.as_ref());
            match op {
                BinOp::Add => add(diff(u)?, diff(v)?, o),
                BinOp::Sub => sub(diff(u)?, diff(v)?, o),
                BinOp::Mul => {
                    if !has_var(u) {
                        mul(u.clone(), diff(v)?, o)
                    } else if !has_var(v) {
                        mul(v.clone(), diff(u)?, o)
                    } else {
                        add(
                            mul(diff(u)?, v.clone(), o),
                            mul(u.clone(), diff(v)?, o),
                            o,
                        )
                    }
                }
                BinOp::Div => {
                    if !has_var(v) {
                        div(diff(u)?, v.clone(), o)
                    } else {
                        let numer = sub(
                            mul(diff(u)?, v.clone(), o),
                            mul(u.clone(), diff(v)?, o),
                            o,
                        );
                        div(numer, pow(v.clone(), num(2.0, o), o), o)
                    }
                }
                BinOp::Pow => {
                    if !has_var(v) {
                        // d(u^c) = c·u^(c−1)·u'
                        let reduced = sub(v.clone(), num(1.0, o), o);
                        mul(mul(v.clone(), pow(u.clone(), reduced, o), o), diff(u)?, o)
                    } else if !has_var(u) {
                        // d(c^v) = v'·c^v·ln c
                        let lnc = call(Func::Log, u.clone(), o);
                        mul(diff(v)?, mul(node.clone(), lnc, o), o)
                    } else {
                        // d(u^v) = u^v·(v'·ln u + v·u'/u)
                        let lnu = call(Func::Log, u.clone(), o);
                        let inner = add(
                            mul(diff(v)?, lnu, o),
                            div(mul(v.clone(), diff(u)?, o), u.clone(), o),
                            o,
                        );
                        mul(node.clone(), inner, o)
                    }
                }
            }
        }
        AstKind::Call(func, u) => {
            let du = diff(u)?;
            let inner = u.as_ref().clone();
            match func {
                Func::Exp => mul(du, node.clone(), o),
                Func::Log => div(du, inner, o),
                Func::Sin => mul(du, call(Func::Cos, inner, o), o),
                Func::Cos => mul(du, neg(call(Func::Sin, inner, o), o), o),
                Func::Sqrt => div(du, mul(num(2.0, o), node.clone(), o), o),
                Func::Abs => {
                    return Err(Error::Unsupported(
                        "differentiation of abs(...) is not supported".into(),
                    ))
                }
            }
        }
    })
}

// ---------------------------------------------------------------- printing

fn precedence(node: &Ast) -> u8 {
    match &node.kind {
        AstKind::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        AstKind::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        AstKind::Neg(_) => 3,
        AstKind::Bin(BinOp::Pow, ..) => 4,
        AstKind::Num(v) if *v < 0.0 => 0,
        _ => 5,
    }
}

fn print(node: &Ast, var: &str, min_prec: u8, out: &mut String) {
    let p = precedence(node);
    let paren = p < min_prec;
    if paren {
        out.push('(');
    }
    match &node.kind {
        AstKind::Num(v) => out.push_str(&format!("{v}")),
        AstKind::Const(Constant::Pi) => out.push_str("pi"),
        AstKind::Const(Constant::E) => out.push_str("e"),
        AstKind::Var => out.push_str(var),
        AstKind::Neg(u) => {
            out.push('-');
            print(u, var, 3, out);
        }
        AstKind::Bin(op, l, r) => {
            let (sym, lp, rp) = match op {
                BinOp::Add => (" + ", 1, 2),
                BinOp::Sub => (" - ", 1, 2),
                BinOp::Mul => ("*", 2, 3),
                BinOp::Div => ("/", 2, 3),
                BinOp::Pow => ("^", 5, 3),
            };
            print(l, var, lp, out);
            out.push_str(sym);
            print(r, var, rp, out);
        }
        AstKind::Call(func, u) => {
            out.push_str(func.name());
            out.push('(');
            print(u, var, 0, out);
            out.push(')');
        }
    }
    if paren {
        out.push(')');
    }
}

fn sexpr(node: &Ast, var: &str, out: &mut String) {
    match &node.kind {
        AstKind::Num(v) => out.push_str(&format!("{v}")),
        AstKind::Const(Constant::Pi) => out.push_str("pi"),
        AstKind::Const(Constant::E) => out.push_str("e"),
        AstKind::Var => out.push_str(var),
        AstKind::Neg(u) => {
            out.push_str("Neg(");
            sexpr(u, var, out);
            out.push(')');
        }
        AstKind::Bin(op, l, r) => {
            out.push_str(match op {
                BinOp::Add => "Add(",
                BinOp::Sub => "Sub(",
                BinOp::Mul => "Mul(",
                BinOp::Div => "Div(",
                BinOp::Pow => "Pow(",
            });
            sexpr(l, var, out);
            out.push_str(", ");
            sexpr(r, var, out);
            out.push(')');
        }
        AstKind::Call(func, u) => {
            out.push_str(func.name());
            out.push('(');
            sexpr(u, var, out);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn parses_literal() {
        assert_eq!(p("1").ast().kind, AstKind::Num(1.0));
        assert_eq!(p(" 2.5e-1 ").eval(0.0).unwrap(), 0.25);
    }

    #[test]
    fn precedence_shapes() {
        assert_eq!(p("exp(x) * (1 + x^2)").to_sexpr(), "Mul(exp(x), Add(1, Pow(x, 2)))");
        assert_eq!(p("-x^2").to_sexpr(), "Neg(Pow(x, 2))");
        assert_eq!(p("2^3^2").eval(0.0).unwrap(), 512.0);
        assert_eq!(p("2^-1").eval(0.0).unwrap(), 0.5);
        assert_eq!(p("1 - 2 - 3").eval(0.0).unwrap(), -4.0);
        assert_eq!(p("8 / 4 / 2").eval(0.0).unwrap(), 1.0);
        assert_eq!(p("-2 * 3").eval(0.0).unwrap(), -6.0);
    }

    #[test]
    fn rejects_unary_plus_at_its_offset() {
        match Expr::parse("2*+x") {
            Err(Error::Parse { offset, expected }) => {
                assert_eq!(offset, 2);
                assert!(expected.iter().any(|e| e == "number"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn other_parse_errors() {
        assert!(matches!(Expr::parse(""), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(Expr::parse("(1 + x"), Err(Error::Parse { offset: 6, .. })));
        assert!(matches!(Expr::parse("sin x"), Err(Error::Parse { offset: 4, .. })));
        assert!(matches!(Expr::parse("1 $ 2"), Err(Error::Parse { offset: 2, .. })));
        assert!(matches!(Expr::parse("x y"), Err(Error::Parse { offset: 2, .. })));
        assert!(matches!(
            Expr::parse("x + t"),
            Err(Error::MultipleVariables { .. })
        ));
    }

    #[test]
    fn any_identifier_is_the_variable() {
        let e = p("t^2 + sin(t)");
        assert_eq!(e.variable(), Some("t"));
        assert_eq!(e.eval(2.0).unwrap(), 4.0 + 2f64.sin());
        assert!(p("pi * e").is_constant());
    }

    #[test]
    fn evaluation() {
        assert_eq!(p("x^2").eval(3.0).unwrap(), 9.0);
        assert!(p("sin(pi)").eval(7.0).unwrap().abs() <= 1e-15);
        assert!(matches!(p("1/x").eval(0.0), Err(Error::Eval { offset: 1, .. })));
        assert!(matches!(p("log(x)").eval(-1.0), Err(Error::Eval { .. })));
        assert!(matches!(p("sqrt(x)").eval(-1.0), Err(Error::Eval { .. })));
        assert!(matches!(p("x^x").eval(-2.0), Err(Error::Eval { .. })));
        assert!(matches!(p("x^0.5").eval(-2.0), Err(Error::Eval { .. })));
        assert_eq!(p("x^3").eval(-2.0).unwrap(), -8.0);
        assert_eq!(p("abs(x)").eval(-2.0).unwrap(), 2.0);
    }

    #[test]
    fn derivatives_fold_constants() {
        assert_eq!(p("x^2").differentiate().unwrap().to_string(), "2*x");
        assert_eq!(p("exp(2*x)").differentiate().unwrap().to_string(), "2*exp(2*x)");
        assert_eq!(p("3").differentiate().unwrap().to_string(), "0");
        assert_eq!(p("x").differentiate().unwrap().to_string(), "1");
        let d = p("x^x").differentiate().unwrap();
        let x: f64 = 1.3;
        assert!((d.eval(x).unwrap() - x.powf(x) * (x.ln() + 1.0)).abs() < 1e-12);
        assert!(matches!(p("abs(x)").differentiate(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn printing_round_trips() {
        for s in [
            "-(x + 1)^2",
            "(-x)^2",
            "x - (x - 1)",
            "x / (2 / x)",
            "2^-x",
            "-(-x)",
            "exp(-x^2) * cos(pi*x)",
        ] {
            let e = p(s);
            let back = p(&e.to_string());
            for x in [0.1, 0.7, 1.9] {
                assert_eq!(e.eval(x).unwrap(), back.eval(x).unwrap(), "{s} -> {e}");
            }
        }
    }
}
