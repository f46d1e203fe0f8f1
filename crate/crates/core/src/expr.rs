//! The one-variable expression language used by `plot` statements.
//!
//! Grammar, in precedence order from loosest to tightest:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'? power
//! power  := atom ('^' factor)?
//! atom   := number | 'x' | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)`. Evaluation never fails on math: division by zero, `log` of
//! a non-positive value and friends produce IEEE infinities or NaN, which
//! callers treat as missing samples.

use std::fmt;

use crate::numfmt::{canon_number, format_number};

pub const MAX_EXPR_CHARS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sqrt,
    Exp,
    Log,
    Abs,
    Floor,
    Ceil,
}

impl Func {
    fn parse(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "floor" => Func::Floor,
            "ceil" => Func::Ceil,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Floor => "floor",
            Func::Ceil => "ceil",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => libm::sin(v),
            Func::Cos => libm::cos(v),
            Func::Tan => libm::tan(v),
            Func::Sqrt => libm::sqrt(v),
            Func::Exp => libm::exp(v),
            Func::Log => libm::log(v),
            Func::Abs => libm::fabs(v),
            Func::Floor => libm::floor(v),
            Func::Ceil => libm::ceil(v),
        }
    }
}

/// Expression tree. Number literals are canonical (see [`crate::numfmt`])
/// and non-negative; a leading minus parses as [`Expr::Neg`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Height of the tree: a leaf is depth 1.
    pub fn depth(&self) -> u32 {
        match self {
            Expr::Num(_) | Expr::Var => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.depth(),
            Expr::Bin(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Evaluates at `x`. Non-finite results are ordinary values here;
    /// deciding what to do with them is the caller's business.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => x,
            Expr::Neg(a) => -a.eval(x),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => libm::pow(a, b),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(x)),
        }
    }
}

/// Where an expression appears in grammar terms. Printing asks whether a
/// node fits the slot it is about to be emitted into; if not, it gets
/// parentheses. Higher levels are tighter.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Slot {
    Expr = 0,
    Term = 1,
    Factor = 2,
    Power = 3,
    Atom = 4,
}

fn level(e: &Expr) -> Slot {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => Slot::Expr,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => Slot::Term,
        Expr::Neg(_) => Slot::Factor,
        Expr::Bin(BinOp::Pow, ..) => Slot::Power,
        Expr::Num(_) | Expr::Var | Expr::Call(..) => Slot::Atom,
    }
}

fn write_expr(e: &Expr, slot: Slot, out: &mut String) {
    let needs_parens = level(e) < slot;
    if needs_parens {
        out.push('(');
    }
    match e {
        Expr::Num(v) => out.push_str(&format_number(*v)),
        Expr::Var => out.push('x'),
        Expr::Neg(a) => {
            out.push('-');
            write_expr(a, Slot::Power, out);
        }
        Expr::Bin(op, a, b) => {
            let (sym, left, right) = match op {
                BinOp::Add => ('+', Slot::Expr, Slot::Term),
                BinOp::Sub => ('-', Slot::Expr, Slot::Term),
                BinOp::Mul => ('*', Slot::Term, Slot::Factor),
                BinOp::Div => ('/', Slot::Term, Slot::Factor),
                BinOp::Pow => ('^', Slot::Atom, Slot::Factor),
            };
            write_expr(a, left, out);
            out.push(sym);
            write_expr(b, right, out);
        }
        Expr::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(a, Slot::Expr, out);
            out.push(')');
        }
    }
    if needs_parens {
        out.push(')');
    }
}

impl fmt::Display for Expr {
    /// Canonical text: minimal parentheses, no spaces, canonical numbers.
    /// Parsing the output reproduces the tree exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(self, Slot::Expr, &mut s);
        f.write_str(&s)
    }
}

/// A parse failure, with a character offset into the expression string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.message, self.offset)
    }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c == ' ' || c == '\t') {
            self.pos += 1;
        }
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError {
            offset: self.pos,
            message: message.into(),
        }
    }
}

/// Parses an expression string. Inputs longer than [`MAX_EXPR_CHARS`]
/// characters are rejected up front, which also bounds parser recursion.
pub fn parse_expr(src: &str) -> Result<Expr, ExprError> {
    if src.chars().count() > MAX_EXPR_CHARS {
        return Err(ExprError {
            offset: 0,
            message: format!("expression longer than {MAX_EXPR_CHARS} characters"),
        });
    }
    let mut lx = Lexer {
        chars: src.chars().collect(),
        pos: 0,
    };
    let e = p_expr(&mut lx)?;
    lx.skip_ws();
    if lx.pos < lx.chars.len() {
        return Err(lx.err("unexpected trailing input"));
    }
    Ok(e)
}

fn p_expr(lx: &mut Lexer) -> Result<Expr, ExprError> {
    let mut acc = p_term(lx)?;
    loop {
        lx.skip_ws();
        let op = match lx.peek() {
            Some('+') => BinOp::Add,
            Some('-') => BinOp::Sub,
            _ => return Ok(acc),
        };
        lx.pos += 1;
        let rhs = p_term(lx)?;
        acc = Expr::Bin(op, Box::new(acc), Box::new(rhs));
    }
}

fn p_term(lx: &mut Lexer) -> Result<Expr, ExprError> {
    let mut acc = p_factor(lx)?;
    loop {
        lx.skip_ws();
        let op = match lx.peek() {
            Some('*') => BinOp::Mul,
            Some('/') => BinOp::Div,
            _ => return Ok(acc),
        };
        lx.pos += 1;
        let rhs = p_factor(lx)?;
        acc = Expr::Bin(op, Box::new(acc), Box::new(rhs));
    }
}

fn p_factor(lx: &mut Lexer) -> Result<Expr, ExprError> {
    lx.skip_ws();
    if lx.peek() == Some('-') {
        lx.pos += 1;
        let inner = p_power(lx)?;
        return Ok(Expr::Neg(Box::new(inner)));
    }
    p_power(lx)
}

fn p_power(lx: &mut Lexer) -> Result<Expr, ExprError> {
    let base = p_atom(lx)?;
    lx.skip_ws();
    if lx.peek() == Some('^') {
        lx.pos += 1;
        let exponent = p_factor(lx)?;
        return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
    }
    Ok(base)
}

fn p_atom(lx: &mut Lexer) -> Result<Expr, ExprError> {
    lx.skip_ws();
    match lx.peek() {
        None => Err(lx.err("expected a value")),
        Some('(') => {
            lx.pos += 1;
            let inner = p_expr(lx)?;
            lx.skip_ws();
            if lx.peek() != Some(')') {
                return Err(lx.err("expected ')'"));
            }
            lx.pos += 1;
            Ok(inner)
        }
        Some(c) if c.is_ascii_digit() || c == '.' => p_number(lx),
        Some(c) if c.is_ascii_alphabetic() => {
            let start = lx.pos;
            while matches!(lx.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                lx.pos += 1;
            }
            let name: String = lx.chars[start..lx.pos].iter().collect();
            if name == "x" {
                return Ok(Expr::Var);
            }
            let func = Func::parse(&name).ok_or_else(|| ExprError {
                offset: start,
                message: format!("unknown name '{name}'"),
            })?;
            lx.skip_ws();
            if lx.peek() != Some('(') {
                return Err(lx.err(format!("expected '(' after {}", func.name())));
            }
            lx.pos += 1;
            let arg = p_expr(lx)?;
            lx.skip_ws();
            if lx.peek() != Some(')') {
                return Err(lx.err("expected ')'"));
            }
            lx.pos += 1;
            Ok(Expr::Call(func, Box::new(arg)))
        }
        Some(c) => Err(lx.err(format!("unexpected character '{c}'"))),
    }
}

fn p_number(lx: &mut Lexer) -> Result<Expr, ExprError> {
    let start = lx.pos;
    while matches!(lx.peek(), Some(c) if c.is_ascii_digit()) {
        lx.pos += 1;
    }
    if lx.peek() == Some('.') {
        lx.pos += 1;
        while matches!(lx.peek(), Some(c) if c.is_ascii_digit()) {
            lx.pos += 1;
        }
    }
    let text: String = lx.chars[start..lx.pos].iter().collect();
    if text == "." || text.is_empty() {
        return Err(ExprError {
            offset: start,
            message: "malformed number".to_string(),
        });
    }
    let v: f64 = text.parse().map_err(|_| ExprError {
        offset: start,
        message: format!("malformed number '{text}'"),
    })?;
    if !v.is_finite() {
        return Err(ExprError {
            offset: start,
            message: "number out of range".to_string(),
        });
    }
    Ok(Expr::Num(canon_number(v)))
}
