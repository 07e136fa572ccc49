//! Antiderivatives over a closed, predictable class.
//!
//! Each monomial is split into a part free of the integration variable `s`
//! and a dependent part, which must be one of
//!
//! * `s^k` (`ln s` for `k = -1`), or `s^k * exp(c*ln s)` for symbolic `c`;
//! * `s^k * exp(a*s)`, `s^k * sin(a*s + b)`, `s^k * cos(a*s + b)` for integer `k >= 0`;
//! * `s^k * (a*s + b)^p` for integer `k >= 0` (`ln` when an exponent hits `-1`).
//!
//! When integrating in `t`, terms `f^(m)(t) * t^k` with `m >= 1` are handled
//! by parts; the leftover integrals are fed back so that pieces like
//! `f2'*t + f2` cancel to `f2*t`. Anything else is rejected.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::canon::{Monomial, Poly};
use super::number::rat_int;
use super::{Builtin, Expr, Node, Number, Var};
use crate::error::{Error, Result};

/// Antiderivative of `e` in `v`, with the integration constant set to zero.
///
/// Logarithms are produced as `ln(u)`; callers guard `u > 0`.
pub fn integrate(e: &Expr, v: &Var) -> Result<Expr> {
    integrate_poly(&Poly::from_expr(e), v).map(|p| p.to_expr())
}

pub(crate) fn integrate_poly(p: &Poly, v: &Var) -> Result<Poly> {
    let s = Expr::var(v);
    let mut pending = p.clone();
    let mut out = Poly::zero();
    for _ in 0..512 {
        let Some((m, c)) = pick(&pending, v) else {
            return Ok(out);
        };
        pending.terms.remove(&m);
        match by_parts_func(&m, &c, v, &s)? {
            Some((done, rest)) => {
                out = out.add(&done);
                pending = pending.add(&rest);
            }
            None => out = out.add(&integrate_term(&m, &c, v, &s)?),
        }
    }
    Err(unsupported(&pending.to_expr()))
}

fn unsupported(e: &Expr) -> Error {
    Error::AntiderivativeUnsupported(e.to_string())
}

/// Terms without opaque functions first, then highest derivative order.
fn pick(p: &Poly, v: &Var) -> Option<(Monomial, Number)> {
    p.terms
        .iter()
        .max_by_key(|(m, _)| {
            let ord = func_order(m, v);
            (ord.is_none(), ord.unwrap_or(0))
        })
        .map(|(m, c)| (m.clone(), c.clone()))
}

fn func_order(m: &Monomial, v: &Var) -> Option<u32> {
    m.factors
        .keys()
        .filter(|a| a.depends_on(v))
        .filter_map(|a| match a.node() {
            Node::Func { order, .. } => Some(*order),
            _ => None,
        })
        .max()
}

/// `∫ f^(m) * t^k` by parts: returns `f^(m-1)*t^k` and the leftover
/// integrand `-k*f^(m-1)*t^(k-1)`.
fn by_parts_func(m: &Monomial, c: &Number, v: &Var, s: &Expr) -> Result<Option<(Poly, Poly)>> {
    if func_order(m, v).is_none() {
        return Ok(None);
    }
    let mut func = None;
    let mut k = 0u32;
    let mut rest = Monomial::unit();
    rest.exp_arg = m.exp_arg.clone();
    if m.exp_arg.depends_on(v) {
        return Err(unsupported(&m.to_expr(c)));
    }
    for (a, p) in &m.factors {
        if !a.depends_on(v) {
            rest.factors.insert(a.clone(), p.clone());
            continue;
        }
        match a.node() {
            Node::Func { name, order } if p.is_one() && func.is_none() && *order > 0 => {
                func = Some((name.clone(), *order));
            }
            _ if a == s && p.is_integer() && p.is_positive() => {
                k = p.to_integer().to_u32().ok_or_else(|| unsupported(&m.to_expr(c)))?;
            }
            _ => return Err(unsupported(&m.to_expr(c))),
        }
    }
    let Some((name, order)) = func else {
        return Err(unsupported(&m.to_expr(c)));
    };
    let lower = Poly::atom(Expr::from_node(Node::Func {
        name,
        order: order - 1,
    }));
    let base = lower.mul_term(&rest, c);
    let done = base.mul(&Poly::atom(s.clone()).pow(&rat_int(k as i64)));
    let leftover = if k == 0 {
        Poly::zero()
    } else {
        base.mul(&Poly::atom(s.clone()).pow(&rat_int(k as i64 - 1)))
            .scale(&Number::int(-(k as i64)))
    };
    Ok(Some((done, leftover)))
}

enum Special {
    None,
    /// `(a*s + b)^p`.
    Linear { a: Poly, b: Poly, p: BigRational },
    /// `sin`/`cos` of `a*s + b`.
    Trig { f: Builtin, a: Poly, b: Poly },
}

/// Splits `p` as `a*s + b` with `a != 0` and `a, b` free of `s`.
fn linear_in(p: &Poly, v: &Var, s: &Expr) -> Option<(Poly, Poly)> {
    let mut a = Poly::zero();
    let mut b = Poly::zero();
    for (m, c) in &p.terms {
        let dep = m.factors.keys().any(|f| f.depends_on(v)) || m.exp_arg.depends_on(v);
        if !dep {
            b.add_term(m.clone(), c.clone());
            continue;
        }
        if m.exp_arg.depends_on(v) || m.factors.get(s) != Some(&BigRational::one()) {
            return None;
        }
        let mut rest = m.clone();
        rest.factors.remove(s);
        if rest.factors.keys().any(|f| f.depends_on(v)) {
            return None;
        }
        a.add_term(rest, c.clone());
    }
    (!a.is_zero()).then_some((a, b))
}

fn inverse(p: &Poly) -> Poly {
    p.pow(&rat_int(-1))
}

fn integrate_term(m: &Monomial, c: &Number, v: &Var, s: &Expr) -> Result<Poly> {
    let whole = || unsupported(&m.to_expr(c));
    let mut free = Monomial::unit();
    let mut k = BigRational::zero();
    let mut special = Special::None;

    for (a, p) in &m.factors {
        if !a.depends_on(v) {
            free.factors.insert(a.clone(), p.clone());
            continue;
        }
        if a == s {
            k = p.clone();
            continue;
        }
        if !matches!(special, Special::None) {
            return Err(whole());
        }
        special = match a.node() {
            Node::Sum(_) => {
                let (la, lb) = linear_in(&Poly::from_expr(a), v, s).ok_or_else(whole)?;
                Special::Linear { a: la, b: lb, p: p.clone() }
            }
            Node::Apply(f @ (Builtin::Sin | Builtin::Cos), arg) if p.is_one() => {
                let (la, lb) = linear_in(&Poly::from_expr(arg), v, s).ok_or_else(whole)?;
                Special::Trig { f: *f, a: la, b: lb }
            }
            _ => return Err(whole()),
        };
    }

    // Exponential: free part, linear part `lin*s`, and `logc*ln(s)`.
    let mut lin = Poly::zero();
    let mut logc = Poly::zero();
    let ln_s = Expr::from_node(Node::Apply(Builtin::Ln, s.clone()));
    for (em, ec) in &m.exp_arg.terms {
        let dep = em.factors.keys().any(|f| f.depends_on(v)) || em.exp_arg.depends_on(v);
        if !dep {
            free.exp_arg.add_term(em.clone(), ec.clone());
            continue;
        }
        let mut rest = em.clone();
        let target = if em.factors.get(s) == Some(&BigRational::one()) {
            rest.factors.remove(s);
            &mut lin
        } else if em.factors.get(&ln_s) == Some(&BigRational::one()) {
            rest.factors.remove(&ln_s);
            &mut logc
        } else {
            return Err(whole());
        };
        if rest.factors.keys().any(|f| f.depends_on(v)) || rest.exp_arg.depends_on(v) {
            return Err(whole());
        }
        target.add_term(rest, ec.clone());
    }

    let sp = |e: &BigRational| Poly::atom(s.clone()).pow(e);
    let core = match (&special, lin.is_zero(), logc.is_zero()) {
        (Special::None, true, true) => {
            if k == -BigRational::one() {
                Poly::atom(ln_s.clone())
            } else {
                let k1 = &k + BigRational::one();
                sp(&k1).scale(&Number::Rational(k1.recip()))
            }
        }
        (Special::None, true, false) => {
            // s^k * s^c integrates to s^(k+1) * s^c / (k+1+c).
            let k1 = &k + BigRational::one();
            let powc = Poly::exp(&logc.mul(&Poly::atom(ln_s.clone())));
            let den = logc.add(&Poly::constant(Number::Rational(k1.clone())));
            sp(&k1).mul(&powc).mul(&inverse(&den))
        }
        (Special::None, false, true) => {
            let n = nonneg_int(&k).ok_or_else(whole)?;
            exp_by_parts(n, &lin, s)
        }
        (Special::Trig { f, a, b }, true, true) => {
            let n = nonneg_int(&k).ok_or_else(whole)?;
            let arg = a.mul(&Poly::atom(s.clone())).add(b);
            trig_by_parts(n, *f, &arg, a, s)
        }
        (Special::Linear { a, b, p }, true, true) => {
            let n = nonneg_int(&k).ok_or_else(whole)?;
            linear_power(n, a, b, p, s)
        }
        _ => return Err(whole()),
    };
    Ok(core.mul_term(&free, c))
}

fn nonneg_int(k: &BigRational) -> Option<u32> {
    if k.is_integer() && !k.is_negative() {
        k.to_integer().to_u32()
    } else {
        None
    }
}

/// `∫ s^n exp(a s) = s^n exp(a s)/a - (n/a) ∫ s^(n-1) exp(a s)`.
fn exp_by_parts(n: u32, a: &Poly, s: &Expr) -> Poly {
    let e = Poly::exp(&a.mul(&Poly::atom(s.clone())));
    let inv_a = inverse(a);
    let mut out = Poly::zero();
    let mut sign_coeff = Poly::one();
    for j in (0..=n).rev() {
        let term = Poly::atom(s.clone())
            .pow(&rat_int(j as i64))
            .mul(&e)
            .mul(&inv_a)
            .mul(&sign_coeff);
        out = out.add(&term);
        sign_coeff = sign_coeff
            .mul(&inv_a)
            .scale(&Number::int(-(j as i64)));
    }
    out
}

/// Repeated integration by parts for `s^n sin(arg)` / `s^n cos(arg)`.
fn trig_by_parts(n: u32, f: Builtin, arg: &Poly, a: &Poly, s: &Expr) -> Poly {
    let sin = Poly::apply(Builtin::Sin, arg);
    let cos = Poly::apply(Builtin::Cos, arg);
    let inv_a = inverse(a);
    // ∫ s^j sin = -s^j cos/a + (j/a) ∫ s^(j-1) cos
    // ∫ s^j cos =  s^j sin/a - (j/a) ∫ s^(j-1) sin
    let mut out = Poly::zero();
    let mut factor = Poly::one();
    let mut cur = f;
    for j in (0..=n).rev() {
        let sj = Poly::atom(s.clone()).pow(&rat_int(j as i64));
        let (piece, next, sign) = match cur {
            Builtin::Sin => (cos.neg(), Builtin::Cos, 1),
            _ => (sin.clone(), Builtin::Sin, -1),
        };
        out = out.add(&sj.mul(&piece).mul(&inv_a).mul(&factor));
        factor = factor
            .mul(&inv_a)
            .scale(&Number::int(sign * j as i64));
        cur = next;
    }
    out
}

/// `∫ s^n (a s + b)^p` via `s = (S - b)/a`.
fn linear_power(n: u32, a: &Poly, b: &Poly, p: &BigRational, s: &Expr) -> Poly {
    let big_s = a.mul(&Poly::atom(s.clone())).add(b);
    let inv_a = inverse(a);
    let mut out = Poly::zero();
    let mut binom = BigRational::one();
    for j in 0..=n {
        // binom(n, j) * (-b)^(n-j) * S^(p+j)
        let coeff = b.neg().pow(&rat_int((n - j) as i64)).scale(&Number::Rational(binom.clone()));
        let q = p + rat_int(j as i64);
        let anti = if q == -BigRational::one() {
            Poly::apply(Builtin::Ln, &big_s)
        } else {
            let q1 = &q + BigRational::one();
            big_s.pow(&q1).scale(&Number::Rational(q1.recip()))
        };
        out = out.add(&coeff.mul(&anti));
        binom = binom * rat_int((n - j) as i64) / rat_int(j as i64 + 1);
    }
    out.mul(&inv_a.pow(&rat_int(n as i64 + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, partial};

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn check(src: &str, v: Var) {
        let e = p(src);
        let a = integrate(&e, &v).unwrap_or_else(|err| panic!("{src}: {err}"));
        let back = partial(&a, &v);
        let d = crate::expr::Domain::default();
        let r = crate::expr::equivalent(&back, &e, &d, &crate::Settings::default()).unwrap();
        assert!(r.verdict.holds(), "{src}: antiderivative {a}, derivative {back}");
    }

    #[test]
    fn powers() {
        assert_eq!(integrate(&p("x^2"), &Var::x()).unwrap(), p("x^3/3"));
        assert_eq!(integrate(&p("1/x"), &Var::x()).unwrap(), p("ln(x)"));
        assert_eq!(integrate(&p("f1(t)'"), &Var::x()).unwrap(), p("f1(t)'*x"));
        check("x^(1/2) + 3*x^(-2)", Var::x());
    }

    #[test]
    fn exponential_and_trig() {
        check("x^2*exp(2*x)", Var::x());
        check("f(t)*exp(a*x + t)", Var::x());
        check("x^3*sin(2*x + t)", Var::x());
        check("x*cos(x)", Var::x());
    }

    #[test]
    fn symbolic_power_via_exp_ln() {
        check("exp(a0*ln(x))", Var::x());
        check("x^2*exp(a0*ln(x))", Var::x());
    }

    #[test]
    fn linear_denominators() {
        check("1/(a*x + b)", Var::x());
        check("x/(f2(t)*x + f3(t)*t + f4(t))^2", Var::x());
        check("x^2*(2*x + 1)^(1/2)", Var::x());
    }

    #[test]
    fn opaque_functions_in_time() {
        assert_eq!(integrate(&p("f2(t)'*t + f2(t)"), &Var::t()).unwrap(), p("f2(t)*t"));
        assert_eq!(integrate(&p("2/t"), &Var::t()).unwrap(), p("2*ln(t)"));
        check("f(t)''*t^2 + 2*f(t)'*t", Var::t());
    }

    #[test]
    fn unsupported_class() {
        assert!(matches!(
            integrate(&p("exp(x^2)"), &Var::x()),
            Err(Error::AntiderivativeUnsupported(_))
        ));
        assert!(integrate(&p("f(t)"), &Var::t()).is_err());
        assert!(integrate(&p("1/(x^2 + 1)"), &Var::x()).is_err());
    }
}
