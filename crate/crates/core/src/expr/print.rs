//! Printing in the input grammar, so `parse(e.to_string())` reproduces `e`.

use std::fmt::{self, Write};

use num_traits::{Signed, Zero};

use super::{Expr, Node, Number};

const P_SUM: u8 = 1;
const P_PRODUCT: u8 = 2;
const P_UNARY: u8 = 3;
const P_ATOM: u8 = 5;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self, 0)?;
        f.write_str(&s)
    }
}

fn is_negative_term(e: &Expr) -> bool {
    match e.node() {
        Node::Const(c) => c.is_negative(),
        Node::Product(cs) => matches!(cs.first().map(|c| c.node()), Some(Node::Const(c)) if c.is_negative()),
        _ => false,
    }
}

fn negated(e: &Expr) -> Expr {
    match e.node() {
        Node::Const(c) => Expr::num(c.neg()),
        Node::Product(cs) => {
            let mut cs = cs.clone();
            if let Node::Const(c) = cs[0].node() {
                let n = c.neg();
                if n.is_one() && cs.len() > 1 {
                    cs.remove(0);
                } else {
                    cs[0] = Expr::num(n);
                }
            }
            if cs.len() == 1 {
                cs.pop().unwrap()
            } else {
                Expr::from_node(Node::Product(cs))
            }
        }
        _ => e.clone(),
    }
}

fn write_expr(out: &mut String, e: &Expr, prec: u8) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write_const(out, c, prec),
        Node::Param(p) => out.write_str(p),
        Node::Jet(j) => write!(out, "{j}"),
        Node::Func { name, order } => {
            write!(out, "{name}(t)")?;
            for _ in 0..*order {
                out.push('\'');
            }
            Ok(())
        }
        Node::Apply(f, a) => {
            write!(out, "{}(", f.name())?;
            write_expr(out, a, 0)?;
            out.push(')');
            Ok(())
        }
        Node::Sum(cs) => {
            let paren = prec > P_SUM;
            if paren {
                out.push('(');
            }
            for (i, c) in cs.iter().enumerate() {
                if i == 0 {
                    write_expr(out, c, P_SUM)?;
                } else if is_negative_term(c) {
                    out.push_str(" - ");
                    write_expr(out, &negated(c), P_PRODUCT)?;
                } else {
                    out.push_str(" + ");
                    write_expr(out, c, P_SUM)?;
                }
            }
            if paren {
                out.push(')');
            }
            Ok(())
        }
        Node::Product(cs) => write_product(out, cs, prec),
        Node::Power(b, p) => {
            if p.is_negative() {
                return write_product(out, std::slice::from_ref(e), prec);
            }
            write_power(out, b, p)
        }
        Node::Quotient(a, b) => {
            let paren = prec > P_PRODUCT;
            if paren {
                out.push('(');
            }
            write_expr(out, a, P_PRODUCT)?;
            out.push('/');
            write_expr(out, b, P_UNARY + 1)?;
            if paren {
                out.push(')');
            }
            Ok(())
        }
    }
}

fn write_const(out: &mut String, c: &Number, prec: u8) -> fmt::Result {
    let s = c.to_string();
    let needs_paren = (c.is_negative() && prec > P_SUM)
        || (prec > P_UNARY && (s.contains('/') || s.contains('e') || s.contains('.')));
    if needs_paren {
        write!(out, "({s})")
    } else {
        out.write_str(&s)
    }
}

fn write_power(out: &mut String, b: &Expr, p: &num_rational::BigRational) -> fmt::Result {
    write_expr(out, b, P_ATOM)?;
    if p.is_integer() && !p.is_negative() {
        write!(out, "^{}", p.numer())
    } else if p.is_integer() {
        write!(out, "^({})", p.numer())
    } else {
        write!(out, "^({}/{})", p.numer(), p.denom())
    }
}

fn write_product(out: &mut String, cs: &[Expr], prec: u8) -> fmt::Result {
    let mut coeff: Option<Number> = None;
    let mut num: Vec<&Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for (i, c) in cs.iter().enumerate() {
        match c.node() {
            Node::Const(n) if i == 0 => coeff = Some(n.clone()),
            Node::Power(b, p) if p.is_negative() => {
                let q = -p.clone();
                if q == num_rational::BigRational::from_integer(1.into()) {
                    den.push(b.clone());
                } else {
                    den.push(Expr::from_node(Node::Power(b.clone(), q)));
                }
            }
            _ => num.push(c),
        }
    }
    let negative = coeff.as_ref().map(|c| c.is_negative()).unwrap_or(false);
    let mag = coeff.map(|c| c.abs()).filter(|c| !c.is_one());
    let paren = prec > P_PRODUCT || (negative && prec > P_SUM);
    if paren {
        out.push('(');
    }
    if negative {
        out.push('-');
    }
    let mut first = true;
    if let Some(m) = &mag {
        write_const(out, m, P_PRODUCT)?;
        first = false;
    }
    for f in &num {
        if !first {
            out.push('*');
        }
        write_expr(out, f, P_UNARY)?;
        first = false;
    }
    if first {
        out.push('1');
    }
    for d in &den {
        out.push('/');
        match d.node() {
            Node::Power(b, p) if !p.is_zero() => write_power(out, b, p)?,
            _ => write_expr(out, d, P_UNARY + 1)?,
        }
    }
    if paren {
        out.push(')');
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    fn round_trip(s: &str) {
        let e = parse(s).unwrap();
        let printed = e.to_string();
        let back = parse(&printed).unwrap_or_else(|err| panic!("{printed}: {err}"));
        assert_eq!(back, e, "printed as {printed}");
    }

    #[test]
    fn round_trips() {
        for s in [
            "x'*exp(a0*x)",
            "f1(t)*x + f2(t)*t + f3(t)",
            "1/(a1*x' + a2*t + a3)",
            "-x + 3/2*x^2 - 7",
            "a1*x'/(a2*x + a4)",
            "x^(1/2) + x^(-3/2)",
            "2^(1/2)*x",
            "f1(t)''*ln(x) - sin(x - t)*cos(2*x)",
            "exp(-b0*t/2)/(x' + b0*x/2)^2",
            "(-2)^(1/3)",
            "abs(x - 1)",
        ] {
            round_trip(s);
        }
    }

    #[test]
    fn readable_quotients() {
        assert_eq!(parse("a1*x'/(a2*x + a4)").unwrap().to_string(), "a1*x'/(a2*x + a4)");
        assert_eq!(parse("-x").unwrap().to_string(), "-x");
        assert_eq!(parse("1 - x").unwrap().to_string(), "1 - x");
    }
}
