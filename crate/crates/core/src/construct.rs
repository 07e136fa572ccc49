//! Null Lagrangians from generating functions: `C` from `B`, binomially
//! weighted harmonics, and the family generated by `f1/(f2*x + f3*t + f4)`.

use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{
    equivalent, partial, total_dt, Builtin, Domain, Expr, Guard, Node, Number, Point, Var,
};
use crate::variational::{is_null, Lagrangian, NullPair};
use crate::Settings;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// `C` carries a `g(t)/x` term and the box for `x` contains zero.
    SingularAtOrigin { term: Expr },
}

#[derive(Clone, Debug, Serialize)]
pub struct CSolution {
    pub c: Expr,
    pub xc: Expr,
    /// Nonzero / positivity conditions needed by `C` (denominators, `ln`).
    pub guards: Vec<Guard>,
    pub warnings: Vec<Warning>,
}

/// Solves `d(x*C)/dx = dB/dt` with the free function of `t` set to zero.
pub fn solve_c(b: &Expr, domain: &Domain) -> Result<CSolution> {
    solve_c_with(b, &Expr::zero(), domain)
}

/// As [`solve_c`], with `free(t)` added to `x*C`.
pub fn solve_c_with(b: &Expr, free: &Expr, domain: &Domain) -> Result<CSolution> {
    if b.max_jet_order().is_some_and(|k| k >= 1) {
        return Err(Error::Input(format!("B = `{b}` must depend on x and t only")));
    }
    if free.depends_on(&Var::x()) {
        return Err(Error::Input(format!("free term `{free}` must depend on t only")));
    }
    let bt = partial(b, &Var::t());
    let xc = crate::expr::integrate(&bt, &Var::x())?.add(free);
    let c = xc.div(&Expr::x());
    let mut warnings = Vec::new();
    if domain.x.contains(0.0) {
        for term in terms(&c) {
            if has_inverse_x(&term) {
                warnings.push(Warning::SingularAtOrigin { term });
            }
        }
    }
    let mut guards = c.singular_guards();
    guards.extend(b.singular_guards());
    Ok(CSolution {
        c,
        xc,
        guards,
        warnings,
    })
}

fn has_inverse_x(term: &Expr) -> bool {
    let neg_x = |e: &Expr| {
        matches!(e.node(), Node::Power(b, p) if *b == Expr::x() && p.is_negative())
    };
    match term.node() {
        Node::Product(cs) => cs.iter().any(neg_x),
        _ => neg_x(term),
    }
}

fn terms(e: &Expr) -> Vec<Expr> {
    match e.node() {
        Node::Sum(cs) => cs.clone(),
        _ if e.is_zero() => Vec::new(),
        _ => vec![e.clone()],
    }
}

fn guarded(domain: &Domain, guards: &[Guard]) -> Domain {
    let mut d = domain.clone();
    for g in guards {
        d.push_guard(g.clone());
    }
    d
}

/// `(B, solve_c(B), f)`, certified through both the null condition and the
/// Euler-Lagrange residual of the assembled Lagrangian.
pub fn build_null(b: &Expr, f: &Expr, domain: &Domain, s: &Settings) -> Result<NullPair> {
    let sol = solve_c(b, domain)?;
    let d = guarded(domain, &sol.guards);
    let pair = NullPair::certify(b.clone(), sol.c, f.clone(), d, s)?;
    ensure_null(&pair.lagrangian(), s)?;
    Ok(pair)
}

fn ensure_null(l: &Lagrangian, s: &Settings) -> Result<()> {
    let r = is_null(l, s)?;
    if r.is_null() {
        Ok(())
    } else {
        Err(Error::NullCertificationFailed(format!(
            "Euler-Lagrange residual {} does not vanish",
            r.residual
        )))
    }
}

fn check_order(n: i64, cap: usize) -> Result<usize> {
    if n < 0 {
        return Err(Error::NegativeOrder(n));
    }
    let n = n as usize;
    if n > cap {
        return Err(Error::OrderCap { order: n, cap });
    }
    Ok(n)
}

/// `sum_i binom(n, i) d^i e / dx^i`.
fn weighted(e: &Expr, n: usize) -> Expr {
    let mut acc = Expr::zero();
    let mut d = e.clone();
    let mut binom = BigRational::one();
    for i in 0..=n {
        acc = acc.add(&d.scale(&Number::Rational(binom.clone())));
        binom = binom * BigRational::from_integer((n - i).into())
            / BigRational::from_integer((i + 1).into());
        if i < n {
            d = partial(&d, &Var::x());
            if d.is_zero() {
                break;
            }
        }
    }
    acc
}

/// `B_n = sum_i binom(n, n-i) d^i B / dx^i`.
pub fn weighted_b(b: &Expr, n: i64) -> Result<Expr> {
    let n = check_order(n, usize::MAX)?;
    Ok(weighted(b, n))
}

/// `[xC]_n`, the same weighting applied to `x*C`.
pub fn weighted_xc(xc: &Expr, n: i64) -> Result<Expr> {
    let n = check_order(n, usize::MAX)?;
    Ok(weighted(xc, n))
}

#[derive(Clone, Debug, Serialize)]
pub struct HarmonicLagrangian {
    pub base: NullPair,
    pub order: usize,
    pub b_n: Expr,
    pub xc_n: Expr,
    pub body: Expr,
}

impl HarmonicLagrangian {
    pub fn lagrangian(&self) -> Lagrangian {
        Lagrangian {
            body: self.body.clone(),
            domain: self.base.domain.clone(),
        }
    }

    /// `body(n) - body(n-1) - d/dt B_(n-1)`; zero for every order `n >= 1`.
    pub fn recursion_residual(&self) -> Expr {
        if self.order == 0 {
            return Expr::zero();
        }
        let prev = harmonic_body(&self.base, self.order - 1);
        let b_prev = weighted(&self.base.b, self.order - 1);
        self.body.sub(&prev).sub(&total_dt(&b_prev))
    }

    /// True when `d^n B / dx^n` vanishes, so higher orders add nothing new
    /// to the series.
    pub fn terminates(&self) -> bool {
        let mut d = self.base.b.clone();
        for _ in 0..self.order {
            d = partial(&d, &Var::x());
        }
        d.is_zero()
    }
}

fn harmonic_body(base: &NullPair, n: usize) -> Expr {
    let b_n = weighted(&base.b, n);
    let xc_n = weighted(&base.xc(), n);
    Expr::sum([&b_n.mul(&Expr::xdot()), &xc_n, &base.f])
}

/// The `n`-th harmonic `B_n*x' + [xC]_n + f` of a certified pair.
pub fn harmonic(base: &NullPair, n: i64, s: &Settings) -> Result<HarmonicLagrangian> {
    let n = check_order(n, s.harmonic_cap)?;
    let b_n = weighted(&base.b, n);
    let xc_n = weighted(&base.xc(), n);
    let body = Expr::sum([&b_n.mul(&Expr::xdot()), &xc_n, &base.f]);
    let h = HarmonicLagrangian {
        base: base.clone(),
        order: n,
        b_n,
        xc_n,
        body,
    };
    ensure_null(&h.lagrangian(), s)?;
    Ok(h)
}

/// `f1..f4` of the generating function `f1/(f2*x + f3*t + f4)`.
#[derive(Clone, Debug, Serialize)]
pub struct FractionSpec {
    pub f1: Expr,
    pub f2: Expr,
    pub f3: Expr,
    pub f4: Expr,
}

impl FractionSpec {
    /// Opaque `f1(t) .. f4(t)`.
    pub fn generic() -> Self {
        FractionSpec {
            f1: Expr::func("f1", 0),
            f2: Expr::func("f2", 0),
            f3: Expr::func("f3", 0),
            f4: Expr::func("f4", 0),
        }
    }

    pub fn new(f1: Expr, f2: Expr, f3: Expr, f4: Expr) -> Result<Self> {
        for e in [&f1, &f2, &f3, &f4] {
            if e.depends_on(&Var::x()) || e.max_jet_order().is_some() {
                return Err(Error::Input(format!("`{e}` must depend on t only")));
            }
        }
        Ok(FractionSpec { f1, f2, f3, f4 })
    }

    /// `f2*x + f3*t + f4`.
    pub fn denominator(&self) -> Expr {
        Expr::sum([
            &self.f2.mul(&Expr::x()),
            &self.f3.mul(&Expr::t()),
            &self.f4,
        ])
    }

    pub fn generating_function(&self) -> Expr {
        self.f1.div(&self.denominator())
    }

    /// `h2 = f1' f2 - f1 f2'`.
    pub fn h2(&self) -> Expr {
        let d = |e: &Expr| partial(e, &Var::t());
        d(&self.f1).mul(&self.f2).sub(&self.f1.mul(&d(&self.f2)))
    }
}

/// Samples the denominator on the domain and fails if it changes sign.
fn check_denominator(u: &Expr, domain: &Domain, s: &Settings) -> Result<()> {
    let vanishes = |w: Option<Point>| Error::DenominatorVanishes {
        witness: Box::new(w.unwrap_or_default()),
    };
    if u.is_zero() {
        return Err(vanishes(None));
    }
    let probe = Domain {
        guards: Vec::new(),
        ..domain.clone()
    };
    let abs_u = Expr::apply(Builtin::Abs, u);
    let pos = equivalent(u, &abs_u, &probe, s)?;
    if pos.verdict.holds() {
        return Ok(());
    }
    let neg = equivalent(&u.neg(), &abs_u, &probe, s)?;
    if neg.verdict.holds() {
        return Ok(());
    }
    Err(vanishes(pos.witness))
}

/// The pair generated by `f1/(f2*x + f3*t + f4)`, with `C` derived by
/// [`solve_c`]. Logarithms are taken of `u = f2*x + f3*t + f4` itself, with a
/// guard `u > 0` added to the domain.
pub fn build_nonstandard_null(
    spec: &FractionSpec,
    f: &Expr,
    domain: &Domain,
    s: &Settings,
) -> Result<NullPair> {
    let u = spec.denominator();
    check_denominator(&u, domain, s)?;
    let d = domain.clone().guard(Guard::positive(u));
    build_null(&spec.generating_function(), f, &d, s)
}

/// The recursion `L(n) = L(n-1) + d/dt B_(n-1)`, certified null at each
/// order.
pub fn nonstandard_harmonic(base: &NullPair, n: i64, s: &Settings) -> Result<HarmonicLagrangian> {
    let n = check_order(n, s.harmonic_cap)?;
    let mut body = base.assembled();
    for k in 0..n {
        body = body.add(&total_dt(&weighted(&base.b, k)));
    }
    let h = HarmonicLagrangian {
        base: base.clone(),
        order: n,
        b_n: weighted(&base.b, n),
        xc_n: weighted(&base.xc(), n),
        body,
    };
    ensure_null(&h.lagrangian(), s)?;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn settings() -> Settings {
        Settings::default()
    }

    fn eq9() -> NullPair {
        build_null(&p("f1(t)*x + f2(t)*t + f3(t)"), &p("f4(t)"), &Domain::default(), &settings()).unwrap()
    }

    #[test]
    fn c_from_linear_and_quadratic_b() {
        let d = Domain::default();
        let c = solve_c(&p("f1(t)*x + f2(t)*t + f3(t)"), &d).unwrap().c;
        assert_eq!(c, p("1/2*f1(t)'*x + f2(t)'*t + f2(t) + f3(t)'"));
        let c = solve_c(&p("f1(t)*x^2 + f2(t)*t + f3(t)"), &d).unwrap().c;
        assert_eq!(c, p("1/3*f1(t)'*x^2 + f2(t)'*t + f2(t) + f3(t)'"));
        assert!(solve_c(&p("c1"), &d).unwrap().c.is_zero());
    }

    #[test]
    fn c_from_trig_and_exponential_b() {
        let sol = solve_c(&p("f1(t)*sin(x) + f2(t)*exp(x)*t + f3(t)"), &Domain::default()).unwrap();
        assert_eq!(sol.xc, p("-f1(t)'*cos(x) + (f2(t)'*t + f2(t))*exp(x) + f3(t)'*x"));
        // The cos term divided by x is regular only away from the origin.
        let d = Domain::default().with_x(-1.0, 1.0);
        let sol = solve_c(&p("f1(t)*sin(x) + f2(t)*exp(x)*t + f3(t)"), &d).unwrap();
        assert!(matches!(sol.warnings[0], Warning::SingularAtOrigin { .. }));
        let sol = solve_c(&p("f1(t)*x + f2(t)*t"), &d).unwrap();
        assert!(sol.warnings.is_empty());
    }

    #[test]
    fn build_null_pairs() {
        let pair = eq9();
        let want = p("(f1(t)*x + f2(t)*t + f3(t))*x' + (1/2*f1(t)'*x + f2(t)'*t + f2(t) + f3(t)')*x + f4(t)");
        assert_eq!(pair.assembled(), want);
        let pair = build_null(&p("c1"), &p("c3"), &Domain::default(), &settings()).unwrap();
        assert_eq!(pair.assembled(), p("c1*x' + c3"));
        let pair = build_null(&p("B0*exp(a0*x)"), &Expr::zero(), &Domain::default(), &settings()).unwrap();
        assert_eq!(pair.assembled(), p("B0*x'*exp(a0*x)"));
    }

    #[test]
    fn certification_rejects_wrong_c() {
        let err = NullPair::certify(p("f1(t)*x"), p("f1(t)'"), Expr::zero(), Domain::default(), &settings());
        assert!(matches!(err, Err(Error::NullCertificationFailed(_))));
    }

    #[test]
    fn weighted_generating_functions() {
        let b = p("f1(t)*x + f2(t)*t + f3(t)");
        assert_eq!(weighted_b(&b, 1).unwrap(), p("f1(t)*(x + 1) + f2(t)*t + f3(t)"));
        assert_eq!(weighted_b(&b, 2).unwrap(), p("f1(t)*(x + 2) + f2(t)*t + f3(t)"));
        assert_eq!(weighted_b(&b, 0).unwrap(), b);
        assert!(matches!(weighted_b(&b, -1), Err(Error::NegativeOrder(-1))));
    }

    #[test]
    fn harmonics_of_linear_generating_function() {
        let base = eq9();
        let h1 = harmonic(&base, 1, &settings()).unwrap();
        let want = p("(f1(t)*(x + 1) + f2(t)*t + f3(t))*x' + f1(t)'*(x/2 + 1)*x + (f2(t)'*t + f2(t) + f3(t)')*(x + 1) + f4(t)");
        assert_eq!(h1.body, want);
        let h2 = harmonic(&base, 2, &settings()).unwrap();
        let want = p("(f1(t)*(x + 2) + f2(t)*t + f3(t))*x' + f1(t)'*(x^2/2 + 2*x + 1) + (f2(t)'*t + f2(t) + f3(t)')*(x + 2) + f4(t)");
        assert_eq!(h2.body, want);
        assert!(h2.terminates());
        for n in 1..=4 {
            assert!(harmonic(&base, n, &settings()).unwrap().recursion_residual().is_zero());
        }
    }

    #[test]
    fn harmonic_of_trig_exponential_generating_function() {
        let base = build_null(
            &p("f1(t)*sin(x) + f2(t)*exp(x)*t + f3(t)"),
            &p("f4(t)"),
            &Domain::default(),
            &settings(),
        )
        .unwrap();
        let h1 = harmonic(&base, 1, &settings()).unwrap();
        let want = p("(f1(t)*(sin(x) + cos(x)) + 2*f2(t)*exp(x)*t + f3(t))*x' + f1(t)'*(sin(x) - cos(x)) + 2*f2(t)'*exp(x)*t + 2*f2(t)*exp(x) + f3(t)'*(x + 1) + f4(t)");
        assert_eq!(h1.body, want);
    }

    #[test]
    fn constant_generating_function_harmonics_are_flat() {
        let base = build_null(&p("c1"), &Expr::zero(), &Domain::default(), &settings()).unwrap();
        assert_eq!(harmonic(&base, 5, &settings()).unwrap().body, base.assembled());
        assert!(matches!(harmonic(&base, 9, &settings()), Err(Error::OrderCap { order: 9, cap: 8 })));
    }

    #[test]
    fn nonstandard_constant_spec() {
        let spec = FractionSpec::new(p("a1"), p("a2"), Expr::zero(), p("a4")).unwrap();
        let pair = build_nonstandard_null(&spec, &Expr::zero(), &Domain::default(), &settings()).unwrap();
        assert!(pair.c.is_zero());
        assert_eq!(pair.assembled(), p("a1*x'/(a2*x + a4)"));
        let h1 = nonstandard_harmonic(&pair, 1, &settings()).unwrap();
        assert_eq!(h1.body, p("a1*x'/(a2*x + a4) - a1*a2*x'/(a2*x + a4)^2"));
    }

    #[test]
    fn nonstandard_generic_spec() {
        let spec = FractionSpec::generic();
        let s = settings();
        let pair = build_nonstandard_null(&spec, &p("f(t)"), &Domain::default(), &s).unwrap();
        // ln u enters xC with coefficient h2/f2^2
        let u = spec.denominator();
        let rest = pair.xc().sub(&spec.h2().div(&p("f2(t)^2")).mul(&u.ln()));
        assert!(!rest.to_string().contains("ln("), "{rest}");
        let h1 = nonstandard_harmonic(&pair, 1, &s).unwrap();
        let b1 = p("f1(t)/(f2(t)*x + f3(t)*t + f4(t)) - f1(t)*f2(t)/(f2(t)*x + f3(t)*t + f4(t))^2");
        assert_eq!(h1.b_n, b1);
        let via_solve = harmonic(&pair, 1, &s).unwrap();
        assert!(equivalent(&h1.body, &via_solve.body, &pair.domain, &s).unwrap().verdict.holds());
        assert!(is_null(&h1.lagrangian(), &s).unwrap().is_null());
    }

    #[test]
    fn nonstandard_same_function_spec() {
        let spec = FractionSpec::new(p("g(t)"), p("g(t)"), Expr::zero(), Expr::zero()).unwrap();
        assert!(spec.h2().is_zero());
        let pair = build_nonstandard_null(&spec, &Expr::zero(), &Domain::default(), &settings()).unwrap();
        assert_eq!(pair.assembled(), p("x'/x"));
    }

    #[test]
    fn vanishing_denominator() {
        let spec = FractionSpec::new(p("1"), p("1"), Expr::zero(), p("-1")).unwrap();
        let err = build_nonstandard_null(&spec, &Expr::zero(), &Domain::default(), &settings());
        assert!(matches!(err, Err(Error::DenominatorVanishes { .. })));
        let spec = FractionSpec::new(p("1"), Expr::zero(), Expr::zero(), Expr::zero()).unwrap();
        assert!(build_nonstandard_null(&spec, &Expr::zero(), &Domain::default(), &settings()).is_err());
    }
}
