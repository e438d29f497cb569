use super::{BinaryOp, Expr, UnaryOp};

// Smart constructors. Only the cheap identities (0*e, e+0, e^1, ...) and
// literal folding are applied, which keeps repeated derivatives bounded.

fn is_const(e: &Expr, value: f64) -> bool {
    matches!(e, Expr::Const(c) if *c == value)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        a => Expr::unary(UnaryOp::Neg, a),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (a, b) if is_const(&b, 0.0) => a,
        (a, b) if is_const(&a, 0.0) => b,
        (a, b) => Expr::binary(BinaryOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (a, b) if is_const(&b, 0.0) => a,
        (a, b) if is_const(&a, 0.0) => neg(b),
        (a, b) => Expr::binary(BinaryOp::Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (a, b) if is_const(&a, 0.0) || is_const(&b, 0.0) => Expr::Const(0.0),
        (a, b) if is_const(&a, 1.0) => b,
        (a, b) if is_const(&b, 1.0) => a,
        (a, b) => Expr::binary(BinaryOp::Mul, a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, b) if is_const(&a, 0.0) && !is_const(&b, 0.0) => Expr::Const(0.0),
        (a, b) if is_const(&b, 1.0) => a,
        (a, b) => Expr::binary(BinaryOp::Div, a, b),
    }
}

fn pow(a: Expr, p: f64) -> Expr {
    if p == 1.0 {
        a
    } else if p == 0.0 {
        Expr::Const(1.0)
    } else {
        Expr::pow(a, p)
    }
}

/// Symbolic derivative with respect to `x`.
///
/// `d/dx spow(u, a) = a * |u|^(a-1) * u'`, which vanishes at `u = 0` for
/// `a > 1`. `d/dx abs(u)` is `u' * u / abs(u)` and is undefined at `u = 0`.
pub fn differentiate(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var => Expr::Const(1.0),
        Expr::Unary(op, a) => {
            let u = a.as_ref();
            let du = differentiate(u);
            match op {
                UnaryOp::Neg => neg(du),
                UnaryOp::Sin => mul(Expr::unary(UnaryOp::Cos, u.clone()), du),
                UnaryOp::Cos => mul(neg(Expr::unary(UnaryOp::Sin, u.clone())), du),
                UnaryOp::Exp => mul(e.clone(), du),
                UnaryOp::Log => div(du, u.clone()),
                UnaryOp::Sqrt => div(du, mul(Expr::Const(2.0), e.clone())),
                UnaryOp::Abs => mul(du, div(u.clone(), e.clone())),
            }
        }
        Expr::Binary(op, a, b) => {
            let (u, v) = (a.as_ref(), b.as_ref());
            let (du, dv) = (differentiate(u), differentiate(v));
            match op {
                BinaryOp::Add => add(du, dv),
                BinaryOp::Sub => sub(du, dv),
                BinaryOp::Mul => add(mul(du, v.clone()), mul(u.clone(), dv)),
                BinaryOp::Div => {
                    if !v.contains_var() {
                        div(du, v.clone())
                    } else {
                        div(
                            sub(mul(du, v.clone()), mul(u.clone(), dv)),
                            pow(v.clone(), 2.0),
                        )
                    }
                }
            }
        }
        Expr::Pow(a, p) => {
            let du = differentiate(a);
            mul(mul(Expr::Const(*p), pow(a.as_ref().clone(), p - 1.0)), du)
        }
        Expr::Spow(a, alpha) => {
            let du = differentiate(a);
            let magnitude = pow(Expr::unary(UnaryOp::Abs, a.as_ref().clone()), alpha - 1.0);
            mul(mul(Expr::Const(*alpha), magnitude), du)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn d_at(src: &str, x: f64) -> f64 {
        differentiate(&parse(src).unwrap()).eval(x).unwrap()
    }

    #[test]
    fn linear_folds_to_constant() {
        assert_eq!(differentiate(&parse("2*x").unwrap()), Expr::Const(2.0));
    }

    #[test]
    fn power_rule() {
        assert_eq!(d_at("x^2", 3.0), 6.0);
    }

    #[test]
    fn spow_two_sided() {
        // central difference of sign(x)x^2 at -1 with h = 1e-6
        let f = |x: f64| x.signum() * x.abs().powi(2);
        let h = 1e-6;
        let fd = (f(-1.0 + h) - f(-1.0 - h)) / (2.0 * h);
        let sym = d_at("spow(x,2)", -1.0);
        assert!((sym - fd).abs() <= 1e-6 * fd.abs());
        assert_eq!(sym, 2.0);
        assert_eq!(d_at("spow(x,2)", 0.0), 0.0);
        assert_eq!(d_at("spow(x,1)", 0.0), 1.0);
    }

    #[test]
    fn quotient_and_chain_rules() {
        let x: f64 = 0.7;
        assert!((d_at("sin(x^2)", x) - 2.0 * x * (x * x).cos()).abs() < 1e-14);
        assert!((d_at("x/(1+x)", x) - 1.0 / (1.0 + x).powi(2)).abs() < 1e-14);
        assert!((d_at("log(x)*exp(x)", x) - (x.exp() / x + x.ln() * x.exp())).abs() < 1e-14);
        assert!((d_at("sqrt(x)", x) - 0.5 / x.sqrt()).abs() < 1e-14);
        assert!((d_at("abs(x-1)", x) + 1.0).abs() < 1e-14);
        assert!((d_at("cos(3*x)", x) + 3.0 * (3.0 * x).sin()).abs() < 1e-14);
    }

    #[test]
    fn logistic_second_derivative() {
        let e = parse("4*x*(1-x)").unwrap();
        let d2 = differentiate(&differentiate(&e));
        assert_eq!(d2.eval(0.3).unwrap(), -8.0);
    }
}
