//! Scalar expressions for scene files.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := primary ('^' unary)?
//! primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)`. The names `pi` and `e` are constants unless declared as
//! variables. Error offsets are 1-based byte positions.

use std::fmt;

use crate::error::{Error, Result};
use crate::jets::Jet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Atan2,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Abs,
}

const FUNCS: &[(&str, Func, usize)] = &[
    ("sin", Func::Sin, 1),
    ("cos", Func::Cos, 1),
    ("tan", Func::Tan, 1),
    ("atan", Func::Atan, 1),
    ("atan2", Func::Atan2, 2),
    ("exp", Func::Exp, 1),
    ("log", Func::Log, 1),
    ("sqrt", Func::Sqrt, 1),
    ("sinh", Func::Sinh, 1),
    ("cosh", Func::Cosh, 1),
    ("abs", Func::Abs, 1),
];

impl Func {
    fn name(self) -> &'static str {
        FUNCS.iter().find(|f| f.1 == self).unwrap().0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Num(f64),
    Var { index: usize, name: String },
    Neg(Box<Ast>),
    Bin { op: BinOp, lhs: Box<Ast>, rhs: Box<Ast>, at: usize },
    Call { func: Func, args: Vec<Ast>, at: usize },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn perr(message: impl Into<String>, offset: usize) -> Error {
    Error::Parse { message: message.into(), offset: offset + 1 }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == b'.' && b.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i < b.len() && b[i] == b'.' {
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    while j < b.len() && b[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let v: f64 = src[start..i].parse().map_err(|_| perr("malformed number", start))?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            _ => return Err(perr("unexpected character", start)),
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, b.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [&'a str],
    depth: usize,
}

const MAX_DEPTH: usize = 200;

impl<'a> Parser<'a> {
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

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(perr("expression nested too deeply", self.offset()));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Ast> {
        self.enter()?;
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            let (_, at) = self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Ast::Bin { op, lhs: Box::new(lhs), rhs: Box::new(rhs), at };
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            let (_, at) = self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Ast::Bin { op, lhs: Box::new(lhs), rhs: Box::new(rhs), at };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ast> {
        self.enter()?;
        let r = match *self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ast::Neg(Box::new(self.unary()?))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()?
            }
            _ => self.power()?,
        };
        self.depth -= 1;
        Ok(r)
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.primary()?;
        if let Tok::Op('^') = *self.peek() {
            let (_, at) = self.bump();
            let exp = self.unary()?;
            return Ok(Ast::Bin { op: BinOp::Pow, lhs: Box::new(base), rhs: Box::new(exp), at });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Ast> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Ast::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                match self.peek() {
                    Tok::RParen => {
                        self.bump();
                        Ok(e)
                    }
                    Tok::End => Err(perr("unbalanced parenthesis", self.offset())),
                    _ => Err(perr("expected ')'", self.offset())),
                }
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    return self.call(name, at);
                }
                if let Some(index) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Ast::Var { index, name });
                }
                match name.as_str() {
                    "pi" => Ok(Ast::Num(std::f64::consts::PI)),
                    "e" => Ok(Ast::Num(std::f64::consts::E)),
                    _ => Err(perr(format!("unknown identifier `{name}`"), at)),
                }
            }
            Tok::RParen => Err(perr("unbalanced parenthesis", at)),
            Tok::End => Err(perr("unexpected end of input", at)),
            Tok::Op(c) => Err(perr(format!("unexpected operator `{c}`"), at)),
            Tok::Comma => Err(perr("unexpected ','", at)),
        }
    }

    fn call(&mut self, name: String, at: usize) -> Result<Ast> {
        let Some(&(_, func, arity)) = FUNCS.iter().find(|f| f.0 == name) else {
            return Err(perr(format!("unknown function `{name}`"), at));
        };
        self.bump();
        let mut args = vec![self.expr()?];
        loop {
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                    args.push(self.expr()?);
                }
                Tok::RParen => {
                    self.bump();
                    break;
                }
                Tok::End => return Err(perr("unbalanced parenthesis", self.offset())),
                _ => return Err(perr("expected ',' or ')'", self.offset())),
            }
        }
        if args.len() != arity {
            return Err(perr(format!("`{name}` takes {arity} argument(s), got {}", args.len()), at));
        }
        Ok(Ast::Call { func, args, at })
    }
}

/// Parses `src`; identifiers resolve against `vars` by position.
pub fn parse(src: &str, vars: &[&str]) -> Result<Ast> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, vars, depth: 0 };
    let ast = p.expr()?;
    match p.peek() {
        Tok::End => Ok(ast),
        Tok::RParen => Err(perr("unbalanced parenthesis", p.offset())),
        _ => Err(perr("unexpected trailing input", p.offset())),
    }
}

impl Ast {
    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Ast::Num(_) => None,
            Ast::Var { index, .. } => Some(*index),
            Ast::Neg(a) => a.max_var(),
            Ast::Bin { lhs, rhs, .. } => lhs.max_var().max(rhs.max_var()),
            Ast::Call { args, .. } => args.iter().filter_map(Ast::max_var).max(),
        }
    }

    /// Evaluates with `env[i]` bound to the variable of index `i`. `nvars`
    /// and `order` shape the constants.
    pub fn eval(&self, env: &[Jet], nvars: usize, order: usize) -> Result<Jet> {
        match self {
            Ast::Num(v) => Ok(Jet::constant(*v, nvars, order)),
            Ast::Var { index, name } => env.get(*index).cloned().ok_or_else(|| Error::Unbound(name.clone())),
            Ast::Neg(a) => Ok(a.eval(env, nvars, order)?.scale(-1.0)),
            Ast::Bin { op, lhs, rhs, at } => {
                if let (BinOp::Pow, Some(p)) = (op, rhs.constant_value()) {
                    let l = lhs.eval(env, nvars, order)?;
                    return l.powf(p).map_err(|e| located(e, *at));
                }
                let l = lhs.eval(env, nvars, order)?;
                let r = rhs.eval(env, nvars, order)?;
                let res = match op {
                    BinOp::Add => Ok(&l + &r),
                    BinOp::Sub => Ok(&l - &r),
                    BinOp::Mul => Ok(&l * &r),
                    BinOp::Div => l.div(&r),
                    BinOp::Pow => l.pow(&r),
                };
                res.map_err(|e| located(e, *at))
            }
            Ast::Call { func, args, at } => {
                let a = args[0].eval(env, nvars, order)?;
                let res = match func {
                    Func::Sin => Ok(a.sin()),
                    Func::Cos => Ok(a.cos()),
                    Func::Tan => a.tan(),
                    Func::Atan => Ok(a.atan()),
                    Func::Atan2 => Jet::atan2(&a, &args[1].eval(env, nvars, order)?),
                    Func::Exp => Ok(a.exp()),
                    Func::Log => a.ln(),
                    Func::Sqrt => a.sqrt(),
                    Func::Sinh => Ok(a.sinh()),
                    Func::Cosh => Ok(a.cosh()),
                    Func::Abs => a.abs(),
                };
                res.map_err(|e| located(e, *at))
            }
        }
    }

    /// Plain real evaluation.
    pub fn eval_f64(&self, env: &[f64]) -> Result<f64> {
        let jets: Vec<Jet> = env.iter().map(|&v| Jet::constant(v, 0, 0)).collect();
        Ok(self.eval(&jets, 0, 0)?.value())
    }

    fn constant_value(&self) -> Option<f64> {
        match self {
            Ast::Num(v) => Some(*v),
            Ast::Neg(a) => a.constant_value().map(|v| -v),
            _ => None,
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Ast::Bin { op: BinOp::Add | BinOp::Sub, .. } => 1,
            Ast::Bin { op: BinOp::Mul | BinOp::Div, .. } => 2,
            Ast::Neg(_) => 3,
            Ast::Bin { op: BinOp::Pow, .. } => 4,
            _ => 5,
        }
    }
}

fn located(e: Error, at: usize) -> Error {
    match e {
        Error::AtExpr { .. } => e,
        e => Error::AtExpr { offset: at + 1, source: Box::new(e) },
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, a: &Ast, min: u8) -> fmt::Result {
    if a.prec() < min {
        write!(f, "({a})")
    } else {
        write!(f, "{a}")
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ast::Num(v) => write!(f, "{v:?}"),
            Ast::Var { name, .. } => write!(f, "{name}"),
            Ast::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 3)
            }
            Ast::Bin { op, lhs, rhs, .. } => {
                let (sym, l, r) = match op {
                    BinOp::Add => ("+", 1, 2),
                    BinOp::Sub => ("-", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                    BinOp::Pow => ("^", 5, 3),
                };
                write_child(f, lhs, l)?;
                write!(f, "{sym}")?;
                write_child(f, rhs, r)
            }
            Ast::Call { func, args, .. } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}
