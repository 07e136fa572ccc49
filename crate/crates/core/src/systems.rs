//! Damped one-dimensional systems `x'' + alpha x'^2 + beta x' + gamma x = 0`
//! with constant, time-dependent or displacement-dependent coefficients:
//! which of them admit a null Lagrangian, and the standard / non-standard /
//! null comparison triples.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::composer::{corollary1_eom, EquationOfMotion, Provenance};
use crate::error::{Error, Result};
use crate::expr::{
    equivalent, integrate, is_zero, partial, rational_from_f64, Domain, Expr, Number,
    Point, Var,
};
use crate::variational::{Lagrangian, NullPair};
use crate::Settings;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Inertia,
    DampedOscillatorTied,
    QuadraticDamping,
    TimeDependent,
    DisplacementDependent,
    NoNullLagrangian,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NullOutcome {
    Present { pair: Box<NullPair>, lagrangian: Expr },
    Absent { reason: String, witness: Option<Point> },
}

impl NullOutcome {
    pub fn pair(&self) -> Option<&NullPair> {
        match self {
            NullOutcome::Present { pair, .. } => Some(pair),
            NullOutcome::Absent { .. } => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemCase {
    pub classification: Classification,
    /// `x'' + alpha x'^2 + beta x' + gamma x`.
    pub ode: Expr,
    /// `x'' = g`.
    pub explicit: Expr,
    pub b: Option<Expr>,
    pub c: Option<Expr>,
    /// Closed forms of `I_beta` or `I_alpha`.
    pub integrals: BTreeMap<String, Expr>,
    /// Expressions that vanish for the case to hold.
    pub constraints: Vec<Expr>,
    pub null: NullOutcome,
    /// `dL/dt = 0` for the null Lagrangian, when present.
    pub eom: Option<EquationOfMotion>,
}

impl SystemCase {
    pub fn pair(&self) -> Option<&NullPair> {
        self.null.pair()
    }
}

fn ode(alpha: &Expr, beta: &Expr, gamma: &Expr) -> Expr {
    Expr::sum([
        &Expr::xddot(),
        &alpha.mul(&Expr::xdot().powi(2)),
        &beta.mul(&Expr::xdot()),
        &gamma.mul(&Expr::x()),
    ])
}

fn b0() -> Expr {
    Expr::param("B0")
}

fn quarter(e: &Expr) -> Expr {
    e.powi(2).scale(&Number::ratio(1, 4))
}

fn with_singular_guards(domain: &Domain, es: &[&Expr]) -> Domain {
    let mut d = domain.clone();
    for e in es {
        for g in e.singular_guards() {
            d.push_guard(g);
        }
    }
    d
}

fn unsupported(e: Error) -> Error {
    match e {
        Error::AntiderivativeUnsupported(m) => Error::IntegralUnsupported(m),
        e => e,
    }
}

/// Certifies `(B, C, 0)`, checks that its equation is `B * ode`, and
/// assembles the case.
#[allow(clippy::too_many_arguments)]
fn present(
    classification: Classification,
    ode: Expr,
    b: Expr,
    c: Expr,
    integrals: BTreeMap<String, Expr>,
    constraints: Vec<Expr>,
    domain: &Domain,
    s: &Settings,
) -> Result<SystemCase> {
    let domain = with_singular_guards(domain, &[&b, &c]);
    let pair = NullPair::certify(b.clone(), c.clone(), Expr::zero(), domain, s)?;
    let (eom, _) = corollary1_eom(&pair, s)?;
    let check = equivalent(&eom.residual, &b.mul(&ode), &pair.domain, s)?;
    if !check.verdict.holds() {
        return Err(Error::ConstraintViolated {
            reason: format!("d/dt of the null Lagrangian is not B*({ode})"),
            witness: check.witness.map(Box::new),
        });
    }
    Ok(SystemCase {
        classification,
        explicit: Expr::xddot().sub(&ode),
        ode,
        b: Some(pair.b.clone()),
        c: Some(pair.c.clone()),
        integrals,
        constraints,
        null: NullOutcome::Present { lagrangian: pair.assembled(), pair: Box::new(pair) },
        eom: Some(eom),
    })
}

/// Constant coefficients. A null Lagrangian `B0 e^(alpha x + beta t/2)
/// (x' + ...)` needs `(1 + alpha x) gamma = beta^2/4` for all `x`.
pub fn classify_constant(alpha: &Expr, beta: &Expr, gamma: &Expr, s: &Settings) -> Result<SystemCase> {
    for (name, e) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        if e.depends_on(&Var::t()) || e.depends_on(&Var::x()) || e.max_jet_order().is_some() || e.has_funcs() {
            return Err(Error::Input(format!("{name} = `{e}` must be constant")));
        }
    }
    let domain = Domain::default();
    let ode = ode(alpha, beta, gamma);
    let constraint = Expr::one().add(&alpha.mul(&Expr::x())).mul(gamma).sub(&quarter(beta));
    let (az, bz, gz) = (alpha.is_zero(), beta.is_zero(), gamma.is_zero());
    let tied = az && !gz && gamma.sub(&quarter(beta)).is_zero();
    let mk = |class, exponent: Expr, c: Expr| {
        let b = b0().mul(&exponent.exp());
        present(class, ode.clone(), b, c, BTreeMap::new(), vec![constraint.clone()], &domain, s)
    };
    if az && bz && gz {
        return mk(Classification::Inertia, Expr::zero(), Expr::zero());
    }
    if tied {
        let e = beta.mul(&Expr::t()).scale(&Number::ratio(1, 2));
        let c = b0().mul(&gamma.div(beta)).mul(&e.exp()).scale(&2.into());
        return mk(Classification::DampedOscillatorTied, e, c);
    }
    if !az && bz && gz {
        return mk(Classification::QuadraticDamping, alpha.mul(&Expr::x()), Expr::zero());
    }
    let check = is_zero(&constraint, &domain, s)?;
    Ok(SystemCase {
        classification: Classification::NoNullLagrangian,
        explicit: Expr::xddot().sub(&ode),
        ode,
        b: None,
        c: None,
        integrals: BTreeMap::new(),
        constraints: vec![constraint.clone()],
        null: NullOutcome::Absent {
            reason: format!("(1 + alpha*x)*gamma - beta^2/4 = {constraint} does not vanish"),
            witness: check.witness,
        },
        eom: None,
    })
}

/// `gamma1 = beta1'/2 + beta1^2/4`.
pub fn derive_gamma1(beta1: &Expr) -> Expr {
    partial(beta1, &Var::t()).scale(&Number::ratio(1, 2)).add(&quarter(beta1))
}

fn is_constant(e: &Expr) -> bool {
    !e.depends_on(&Var::t()) && !e.depends_on(&Var::x()) && !e.has_funcs() && e.max_jet_order().is_none()
}

fn only_in(e: &Expr, v: Var, name: &str) -> Result<()> {
    let other = if v == Var::t() { Var::x() } else { Var::t() };
    if e.depends_on(&other) || e.max_jet_order().is_some_and(|k| k >= 1) {
        return Err(Error::Input(format!("{name} = `{e}` must depend on {} only", Expr::var(&v))));
    }
    Ok(())
}

fn check_constraint(name: &str, residual: &Expr, domain: &Domain, s: &Settings) -> Result<()> {
    let r = is_zero(residual, domain, s)?;
    if r.verdict.holds() {
        Ok(())
    } else {
        Err(Error::ConstraintViolated {
            reason: format!("{name}: {residual} does not vanish"),
            witness: r.witness.map(Box::new),
        })
    }
}

/// Time-dependent coefficients. Only `alpha1 = 0` admits a null Lagrangian
/// with `beta1` free; a nonzero constant `alpha1` falls back to the
/// constant quadratic-damping case.
pub fn build_timedep(alpha1: &Expr, beta1: &Expr, gamma1: &Expr, domain: &Domain, s: &Settings) -> Result<SystemCase> {
    for (name, e) in [("alpha1", alpha1), ("beta1", beta1), ("gamma1", gamma1)] {
        only_in(e, Var::t(), name)?;
    }
    if !alpha1.is_zero() {
        if is_constant(alpha1) && beta1.is_zero() && gamma1.is_zero() {
            return classify_constant(alpha1, beta1, gamma1, s);
        }
        return Err(Error::ConstraintViolated {
            reason: "a null Lagrangian with x'^2 damping needs constant alpha1 and beta1 = gamma1 = 0".into(),
            witness: None,
        });
    }
    let constraint = gamma1.sub(&derive_gamma1(beta1));
    check_constraint("gamma1 - beta1'/2 - beta1^2/4", &constraint, domain, s)?;
    if is_constant(beta1) && is_constant(gamma1) {
        return classify_constant(alpha1, beta1, gamma1, s);
    }
    let i_beta = integrate(&beta1.scale(&Number::ratio(1, 2)), &Var::t()).map_err(unsupported)?;
    let b = b0().mul(&i_beta.exp());
    let c = b.mul(beta1).scale(&Number::ratio(1, 2));
    let integrals = BTreeMap::from([("I_beta".to_string(), i_beta)]);
    let mut case = present(
        Classification::TimeDependent,
        ode(alpha1, beta1, gamma1),
        b,
        c,
        integrals,
        vec![constraint],
        domain,
        s,
    )?;
    case.explicit = case.explicit.canonical();
    Ok(case)
}

/// Solves `x gamma2' + gamma2 (1 + alpha2 x) = beta0^2/4` for `gamma2`:
/// `gamma2 = e^(-I_alpha) (beta0^2/4 int e^(I_alpha) dx + c) / x`.
pub fn solve_gamma2(alpha2: &Expr, beta0: &Expr, c: &Expr) -> Result<Expr> {
    only_in(alpha2, Var::x(), "alpha2")?;
    if !is_constant(beta0) || !is_constant(c) {
        return Err(Error::Input("beta0 and the integration constant must be constant".into()));
    }
    let i_alpha = integrate(alpha2, &Var::x()).map_err(unsupported)?;
    let inner = if beta0.is_zero() {
        Expr::zero()
    } else {
        quarter(beta0).mul(&integrate(&i_alpha.exp(), &Var::x()).map_err(unsupported)?)
    };
    Ok(i_alpha.neg().exp().mul(&inner.add(c)).div(&Expr::x()))
}

/// `x gamma2' + gamma2 (1 + alpha2 x) - beta0^2/4`.
pub fn gamma2_residual(alpha2: &Expr, beta0: &Expr, gamma2: &Expr) -> Expr {
    let x = Expr::x();
    x.mul(&partial(gamma2, &Var::x()))
        .add(&gamma2.mul(&Expr::one().add(&alpha2.mul(&x))))
        .sub(&quarter(beta0))
}

/// Displacement-dependent coefficients with constant `beta0`.
pub fn build_displacement(alpha2: &Expr, beta0: &Expr, gamma2: &Expr, domain: &Domain, s: &Settings) -> Result<SystemCase> {
    only_in(alpha2, Var::x(), "alpha2")?;
    only_in(gamma2, Var::x(), "gamma2")?;
    if !is_constant(beta0) {
        return Err(Error::Input(format!("beta0 = `{beta0}` must be constant")));
    }
    if is_constant(alpha2) && is_constant(gamma2) {
        return classify_constant(alpha2, beta0, gamma2, s);
    }
    let constraint = gamma2_residual(alpha2, beta0, gamma2);
    let domain = with_singular_guards(domain, &[gamma2, alpha2]);
    check_constraint("x*gamma2' + gamma2*(1 + alpha2*x) - beta0^2/4", &constraint, &domain, s)?;
    let i_alpha = integrate(alpha2, &Var::x()).map_err(unsupported)?;
    let (b, c) = if beta0.is_zero() {
        let b = b0().mul(&i_alpha.exp());
        let c = b.mul(&Expr::t()).mul(gamma2);
        (b, c)
    } else {
        let b = b0().mul(&i_alpha.add(&beta0.mul(&Expr::t()).scale(&Number::ratio(1, 2))).exp());
        let c = b.mul(gamma2).div(beta0).scale(&2.into());
        (b, c)
    };
    let integrals = BTreeMap::from([("I_alpha".to_string(), i_alpha)]);
    present(
        Classification::DisplacementDependent,
        ode(alpha2, beta0, gamma2),
        b,
        c,
        integrals,
        vec![constraint],
        &domain,
        s,
    )
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparedSystem {
    Inertia,
    QuadraticDamping,
    DampedOscillatorTied,
}

impl std::str::FromStr for ComparedSystem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inertia" => Ok(ComparedSystem::Inertia),
            "quadratic" | "quadratic_damping" => Ok(ComparedSystem::QuadraticDamping),
            "oscillator" | "tied" | "damped_oscillator_tied" => Ok(ComparedSystem::DampedOscillatorTied),
            _ => Err(Error::Input(format!("unknown system `{s}`"))),
        }
    }
}

/// Numeric values used to instantiate the comparison triples.
#[derive(Clone, Debug, Serialize)]
pub struct TripleConstants {
    /// Scale of every null Lagrangian.
    pub c: f64,
    pub alpha0: f64,
    pub beta0: f64,
    /// `C1, C2, a0, v0` of the inertia non-standard Lagrangian.
    pub inertia: [f64; 4],
    /// `a1, a3` of `1/(a1 x' + a3)`.
    pub reciprocal_velocity: [f64; 2],
}

impl Default for TripleConstants {
    fn default() -> Self {
        TripleConstants {
            c: 1.0,
            alpha0: 1.0,
            beta0: 2.0,
            inertia: [1.0, 1.0, 1.0, 1.0],
            reciprocal_velocity: [1.0, 1.0],
        }
    }
}

fn exact(v: f64) -> Expr {
    match rational_from_f64(v) {
        Some(r) => Expr::num(Number::Rational(r)),
        None => Expr::float(v),
    }
}

/// A named Lagrangian and whether it feeds the Euler-Lagrange operator.
#[derive(Clone, Debug, Serialize)]
pub struct Route {
    pub name: String,
    pub lagrangian: Lagrangian,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Serialize)]
pub struct Triple {
    pub system: ComparedSystem,
    /// `x'' = g` of the system.
    pub explicit: Expr,
    pub routes: Vec<Route>,
    pub null: NullPair,
}

fn route(name: &str, body: Expr, provenance: Provenance) -> Result<Route> {
    let domain = with_singular_guards(&Domain::default(), &[&body]);
    Ok(Route { name: name.into(), lagrangian: Lagrangian::new(body, domain)?, provenance })
}

fn parsed(src: &str, consts: &[(&str, f64)]) -> Result<Expr> {
    let mut e = crate::expr::parse(src)?;
    for (n, v) in consts {
        e = e.substitute(&Var::param(n), &exact(*v));
    }
    Ok(e)
}

/// The oscillator's non-standard Lagrangian as printed, with `x` in the
/// exponent.
pub fn printed_oscillator_nonstandard(beta0: f64) -> Result<Expr> {
    parsed("exp(-b0*x/2)/(x' + b0*x/2)", &[("b0", beta0)])
}

/// Standard, non-standard and null Lagrangians of a system with the
/// constants of `k` substituted.
pub fn comparison_catalog(system: ComparedSystem, k: &TripleConstants, s: &Settings) -> Result<Triple> {
    use Provenance::{Corollary1, EulerLagrange};
    let [c1, c2, ai, vi] = k.inertia;
    let [r1, r3] = k.reciprocal_velocity;
    let (explicit, sd, nsd, b, c) = match system {
        ComparedSystem::Inertia => (
            "0",
            "1/2*x'^2",
            vec![
                ("nonstandard", parsed("1/(C1*(a*t + v)^2*((a*t + v)*x' - a*x + C2))", &[("C1", c1), ("C2", c2), ("a", ai), ("v", vi)])?),
                ("reciprocal_velocity", parsed("1/(a1*x' + a3)", &[("a1", r1), ("a3", r3)])?),
            ],
            "c",
            "0",
        ),
        ComparedSystem::QuadraticDamping => (
            "-a0*x'^2",
            "1/2*x'^2*exp(2*a0*x)",
            vec![("nonstandard", parsed("1/(x'*exp(a0*x) + 1)", &[("a0", k.alpha0)])?)],
            "c*exp(a0*x)",
            "0",
        ),
        ComparedSystem::DampedOscillatorTied => (
            "-b0*x' - b0^2/4*x",
            "1/2*(x'^2 - b0^2/4*x^2)*exp(b0*t)",
            vec![("nonstandard", parsed("exp(-b0*t/2)/(c*(x' + b0*x/2))", &[("b0", k.beta0), ("c", k.c)])?)],
            "c*exp(b0*t/2)",
            "c*b0/2*exp(b0*t/2)",
        ),
    };
    let consts = [("a0", k.alpha0), ("b0", k.beta0), ("c", k.c)];
    let b = parsed(b, &consts)?;
    let c = parsed(c, &consts)?;
    let null = NullPair::certify(b, c, Expr::zero(), Domain::default(), s)?;
    let mut routes = vec![route("standard", parsed(sd, &consts)?, EulerLagrange)?];
    for (name, body) in nsd {
        routes.push(route(name, body, EulerLagrange)?);
    }
    let mut null_route = route("null", null.assembled(), Corollary1)?;
    null_route.lagrangian.domain = null.domain.clone();
    routes.push(null_route);
    Ok(Triple { system, explicit: parsed(explicit, &consts)?, routes, null })
}
