//! Expression language for branch definitions.
//!
//! Branches are written over a single variable `x` using numeric literals,
//! `+ - * / ^`, and the functions `sin cos exp log sqrt abs spow`. The signed
//! power `spow(u, a)` is `sign(u) * |u|^a` and is the building block for
//! non-flat critical points of order `a >= 1`.
//!
//! Exponents of `^` and `spow` are literals, so the local order of every
//! critical point is known statically. Derivatives are produced symbolically
//! by [`differentiate`], so orbit derivative products never need finite
//! differences.

mod derivative;
mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use derivative::differentiate;
pub use parser::{parse, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
        }
    }
}

/// Expression tree over the variable `x`.
///
/// Trees are immutable once built and can be shared freely between threads.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// `base ^ exponent` with a literal exponent.
    Pow(Box<Expr>, f64),
    /// `sign(u) * |u|^alpha`. Parsed trees always have `alpha >= 1`.
    Spow(Box<Expr>, f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{node}` at x = {x}: {reason}")]
    Domain {
        node: String,
        x: f64,
        reason: &'static str,
    },
}

impl EvalError {
    fn domain(node: &Expr, x: f64, reason: &'static str) -> Self {
        EvalError::Domain {
            node: node.to_string(),
            x,
            reason,
        }
    }
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Expr {
        Expr::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn pow(base: Expr, exponent: f64) -> Expr {
        Expr::Pow(Box::new(base), exponent)
    }

    pub fn spow(base: Expr, exponent: f64) -> Expr {
        Expr::Spow(Box::new(base), exponent)
    }

    pub fn contains_var(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var => true,
            Expr::Unary(_, a) | Expr::Pow(a, _) | Expr::Spow(a, _) => a.contains_var(),
            Expr::Binary(_, a, b) => a.contains_var() || b.contains_var(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Unary(_, a) | Expr::Pow(a, _) | Expr::Spow(a, _) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Unary(_, a) | Expr::Pow(a, _) | Expr::Spow(a, _) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Evaluates the expression at `x` in binary64.
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Const(c) => return Ok(*c),
            Expr::Var => return Ok(x),
            Expr::Unary(op, a) => {
                let u = a.eval(x)?;
                match op {
                    UnaryOp::Neg => -u,
                    UnaryOp::Sin => u.sin(),
                    UnaryOp::Cos => u.cos(),
                    UnaryOp::Exp => u.exp(),
                    UnaryOp::Log => {
                        if u <= 0.0 {
                            return Err(EvalError::domain(self, x, "log of non-positive value"));
                        }
                        u.ln()
                    }
                    UnaryOp::Sqrt => {
                        if u < 0.0 {
                            return Err(EvalError::domain(self, x, "sqrt of negative value"));
                        }
                        u.sqrt()
                    }
                    UnaryOp::Abs => u.abs(),
                }
            }
            Expr::Binary(op, a, b) => {
                let u = a.eval(x)?;
                let v = b.eval(x)?;
                match op {
                    BinaryOp::Add => u + v,
                    BinaryOp::Sub => u - v,
                    BinaryOp::Mul => u * v,
                    BinaryOp::Div => {
                        if v == 0.0 {
                            return Err(EvalError::domain(self, x, "division by zero"));
                        }
                        u / v
                    }
                }
            }
            Expr::Pow(a, p) => {
                let u = a.eval(x)?;
                if u < 0.0 && p.fract() != 0.0 {
                    return Err(EvalError::domain(
                        self,
                        x,
                        "negative base with non-integer exponent",
                    ));
                }
                if u == 0.0 && *p < 0.0 {
                    return Err(EvalError::domain(self, x, "zero base with negative exponent"));
                }
                powf(u, *p)
            }
            Expr::Spow(a, alpha) => {
                let u = a.eval(x)?;
                if u == 0.0 {
                    if *alpha < 0.0 {
                        return Err(EvalError::domain(self, x, "zero base with negative exponent"));
                    }
                    0.0
                } else {
                    u.signum() * u.abs().powf(*alpha)
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::domain(self, x, "non-finite result"))
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, _, _) => op.precedence(),
            Expr::Pow(_, _) => 3,
            Expr::Unary(UnaryOp::Neg, _) => 4,
            _ => 5,
        }
    }
}

fn powf(u: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
        u.powi(p as i32)
    } else {
        u.powf(p)
    }
}

struct Literal(f64);

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // `{:?}` is the shortest representation that reparses to the same bits.
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{}", Literal(*c)),
            Expr::Var => write!(f, "x"),
            Expr::Unary(UnaryOp::Neg, a) => {
                // A bare literal after `-` would fold into a negative constant.
                if a.precedence() < 4 || matches!(**a, Expr::Const(_)) {
                    write!(f, "-({a})")
                } else {
                    write!(f, "-{a}")
                }
            }
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => {
                let prec = op.precedence();
                if a.precedence() < prec {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if b.precedence() <= prec {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Pow(a, p) => {
                if a.precedence() <= 3 {
                    write!(f, "({a})^{}", Literal(*p))
                } else {
                    write!(f, "{a}^{}", Literal(*p))
                }
            }
            Expr::Spow(a, alpha) => write!(f, "spow({a}, {})", Literal(*alpha)),
        }
    }
}
