//! Composed Lagrangians `F(L)`, their equations of motion, and the
//! `dL/dt = 0` rule for null Lagrangians and their harmonics.

use std::fmt;

use serde::Serialize;

use crate::construct::{weighted_b, HarmonicLagrangian};
use crate::error::{Error, Result};
use crate::expr::{
    equivalent, parse, partial, sample_values, total_dt, Domain, EquivReport, Expr, Guard,
    GuardKind, Var,
};
use crate::variational::{euler_lagrange_residual, momentum, Lagrangian, NullPair};
use crate::Settings;

/// Name of the scalar slot in a composer body.
pub const SLOT: &str = "lambda";

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "arg", rename_all = "snake_case")]
pub enum ComposerKind {
    Identity,
    Exp,
    Ln,
    Reciprocal,
    Power(i64),
    Custom(Expr),
}

/// `F(lambda)` with its first two derivatives.
#[derive(Clone, Debug, Serialize)]
pub struct Composer {
    pub kind: ComposerKind,
    pub f: Expr,
    pub df: Expr,
    pub d2f: Expr,
}

impl Composer {
    pub fn new(kind: ComposerKind) -> Result<Self> {
        let lam = Expr::param(SLOT);
        let f = match &kind {
            ComposerKind::Identity => lam,
            ComposerKind::Exp => lam.exp(),
            ComposerKind::Ln => lam.ln(),
            ComposerKind::Reciprocal => lam.powi(-1),
            ComposerKind::Power(k) => lam.powi(*k),
            ComposerKind::Custom(body) => {
                let mut others = body.params();
                others.remove(SLOT);
                if body.max_jet_order().is_some() || body.depends_on(&Var::t()) {
                    return Err(Error::Input(format!("composer `{body}` may only depend on `{SLOT}`")));
                }
                if !others.is_empty() {
                    let names: Vec<_> = others.iter().map(|n| n.to_string()).collect();
                    return Err(Error::Input(format!("composer has free constants {}", names.join(", "))));
                }
                body.canonical()
            }
        };
        let v = Var::param(SLOT);
        let df = partial(&f, &v);
        let d2f = partial(&df, &v);
        Ok(Composer { kind, f, df, d2f })
    }

    pub fn identity() -> Self {
        Self::new(ComposerKind::Identity).expect("catalog composer")
    }

    pub fn exp() -> Self {
        Self::new(ComposerKind::Exp).expect("catalog composer")
    }

    pub fn ln() -> Self {
        Self::new(ComposerKind::Ln).expect("catalog composer")
    }

    pub fn reciprocal() -> Self {
        Self::new(ComposerKind::Reciprocal).expect("catalog composer")
    }

    pub fn power(k: i64) -> Self {
        Self::new(ComposerKind::Power(k)).expect("catalog composer")
    }

    /// Parses a catalog name (`exp`, `power(3)`, ...) or an expression in `lambda`.
    pub fn parse(src: &str) -> Result<Self> {
        let s = src.trim();
        let kind = match s {
            "identity" | "id" => ComposerKind::Identity,
            "exp" => ComposerKind::Exp,
            "ln" => ComposerKind::Ln,
            "reciprocal" | "inv" => ComposerKind::Reciprocal,
            _ => match s.strip_prefix("power(").and_then(|r| r.strip_suffix(')')) {
                Some(k) => ComposerKind::Power(
                    k.trim().parse().map_err(|_| Error::Input(format!("bad power `{k}`")))?,
                ),
                None => ComposerKind::Custom(parse(s)?),
            },
        };
        Self::new(kind)
    }

    pub fn at(&self, e: &Expr, inner: &Expr) -> Expr {
        e.substitute(&Var::param(SLOT), inner)
    }

    /// Guards on the inner Lagrangian under which `F` is twice differentiable.
    pub fn range_guards(&self, inner: &Expr) -> Vec<Guard> {
        let mut out = Vec::new();
        for g in self.d2f.singular_guards().into_iter().chain(self.f.singular_guards()) {
            let g = Guard { expr: self.at(&g.expr, inner), kind: g.kind };
            if !out.contains(&g) {
                out.push(g);
            }
        }
        out
    }
}

/// `F(L)`; the domain gains the composer's range guards, which must hold on
/// every sampled point of `L`'s domain.
pub fn compose(f: &Composer, l: &Lagrangian, s: &Settings) -> Result<Lagrangian> {
    let guards = f.range_guards(&l.body);
    if !guards.is_empty() {
        let exprs: Vec<Expr> = guards.iter().map(|g| g.expr.clone()).collect();
        let mut bad = None;
        sample_values(&exprs, &l.domain, s, |pt, v| {
            if guards.iter().zip(v).all(|(g, &v)| g.admits(v, s.eps_guard)) {
                true
            } else {
                bad = Some(pt.clone());
                false
            }
        })?;
        if let Some(w) = bad {
            return Err(Error::RangeGuardViolated { witness: Box::new(w) });
        }
    }
    let mut domain = l.domain.clone();
    for g in guards {
        domain.push_guard(g);
    }
    Lagrangian::new(f.at(&f.f, &l.body), domain)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Corollary1,
    Prop3,
    EulerLagrange,
}

/// A residual whose zero set is the motion, kept undivided.
#[derive(Clone, Debug, Serialize)]
pub struct EquationOfMotion {
    pub residual: Expr,
    /// Coefficient of `x''` in `residual`.
    pub leading: Expr,
    pub provenance: Provenance,
    #[serde(skip)]
    pub domain: Domain,
}

impl EquationOfMotion {
    pub fn new(residual: Expr, provenance: Provenance, domain: Domain) -> Result<Self> {
        if residual.max_jet_order().is_some_and(|k| k > 2) {
            return Err(Error::NotLinearInAcceleration);
        }
        let leading = partial(&residual, &Var::xddot());
        if leading.depends_on(&Var::xddot()) {
            return Err(Error::NotLinearInAcceleration);
        }
        Ok(EquationOfMotion {
            residual: residual.canonical(),
            leading,
            provenance,
            domain,
        })
    }

    /// `residual - leading * x''`.
    pub fn remainder(&self) -> Expr {
        self.residual.sub(&self.leading.mul(&Expr::xddot()))
    }
}

impl fmt::Display for EquationOfMotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = 0", self.residual)?;
        if !self.leading.is_zero() {
            let g = self.remainder().neg().div(&self.leading);
            write!(f, "\nx'' = {g}")?;
        }
        Ok(())
    }
}

/// Euler-Lagrange equation of `L`.
pub fn euler_lagrange_eom(l: &Lagrangian) -> Result<EquationOfMotion> {
    EquationOfMotion::new(euler_lagrange_residual(l), Provenance::EulerLagrange, l.domain.clone())
}

/// Euler-Lagrange equation of `F(L)` written through `L`:
/// `p F''(L) dL/dt + (dp/dt - dL/dx) F'(L)`.
pub fn prop3_eom(f: &Composer, l: &Lagrangian) -> Result<EquationOfMotion> {
    let p = momentum(l);
    let first = p.mul(&f.at(&f.d2f, &l.body)).mul(&total_dt(&l.body));
    let second = euler_lagrange_residual(l).mul(&f.at(&f.df, &l.body));
    let mut domain = l.domain.clone();
    for g in f.range_guards(&l.body) {
        domain.push_guard(g);
    }
    EquationOfMotion::new(first.add(&second), Provenance::Prop3, domain)
}

/// `p F''(L)`, the factor in front of `dL/dt` when `L` is null.
pub fn prop3_factor(f: &Composer, l: &Lagrangian) -> Expr {
    momentum(l).mul(&f.at(&f.d2f, &l.body))
}

/// Whether `p F''(L)` stays away from zero on every sampled point.
pub fn permissible(f: &Composer, l: &Lagrangian, s: &Settings) -> Result<bool> {
    let factor = prop3_factor(f, l);
    if factor.is_zero() {
        return Ok(false);
    }
    let mut ok = true;
    let mut domain = l.domain.clone();
    for g in f.range_guards(&l.body) {
        domain.push_guard(g);
    }
    sample_values(&[factor], &domain, s, |_, v| {
        ok = GuardKind::NonZero.admits(v[0], s.eps_guard);
        ok
    })?;
    Ok(ok)
}

/// `B x'' + (B_x x' + 2 B_t) x' + C_t x + f'` for a certified pair, checked
/// against `d/dt (B x' + C x + f)`.
pub fn corollary1_eom(np: &NullPair, s: &Settings) -> Result<(EquationOfMotion, EquivReport)> {
    let b = &np.b;
    let bx = partial(b, &Var::x());
    let bt = partial(b, &Var::t());
    let inner = bx.mul(&Expr::xdot()).add(&bt.scale(&2.into()));
    let residual = Expr::sum([
        &b.mul(&Expr::xddot()),
        &inner.mul(&Expr::xdot()),
        &partial(&np.c, &Var::t()).mul(&Expr::x()),
        &partial(&np.f, &Var::t()),
    ]);
    let check = equivalent(&residual, &total_dt(&np.assembled()), &np.domain, s)?;
    if !check.verdict.holds() {
        return Err(Error::NullCertificationFailed(format!(
            "expanded equation differs from d/dt of `{}`",
            np.assembled()
        )));
    }
    Ok((EquationOfMotion::new(residual, Provenance::Corollary1, np.domain.clone())?, check))
}

/// Equation of motion of the order-`n` harmonic, built by adding
/// `d^2/dt^2` of the weighted generating functions to the base equation.
pub fn harmonic_eom(h: &HarmonicLagrangian, s: &Settings) -> Result<(EquationOfMotion, EquivReport)> {
    let (base, _) = corollary1_eom(&h.base, s)?;
    let mut residual = base.residual;
    for k in 0..h.order as i64 {
        residual = residual.add(&total_dt(&total_dt(&weighted_b(&h.base.b, k)?)));
    }
    let check = equivalent(&residual, &total_dt(&h.body), &h.base.domain, s)?;
    if !check.verdict.holds() {
        return Err(Error::NullCertificationFailed(format!(
            "harmonic equation of order {} differs from d/dt of its body",
            h.order
        )));
    }
    Ok((EquationOfMotion::new(residual, Provenance::Corollary1, h.base.domain.clone())?, check))
}

/// `x'' = g(x, x', t)` with the leading coefficient checked nonzero.
#[derive(Clone, Debug, Serialize)]
pub struct Explicit {
    pub g: Expr,
    pub leading: Expr,
    #[serde(skip)]
    pub domain: Domain,
}

pub fn solve_leading(eom: &EquationOfMotion, s: &Settings) -> Result<Explicit> {
    if eom.leading.is_zero() {
        return Err(Error::LeadingCoefficientVanishes { witness: Box::default() });
    }
    let mut bad = None;
    sample_values(std::slice::from_ref(&eom.leading), &eom.domain, s, |pt, v| {
        if GuardKind::NonZero.admits(v[0], s.eps_guard) {
            true
        } else {
            bad = Some(pt.clone());
            false
        }
    })?;
    if let Some(w) = bad {
        return Err(Error::LeadingCoefficientVanishes { witness: Box::new(w) });
    }
    let g = eom.remainder().neg().div(&eom.leading);
    let mut domain = eom.domain.clone();
    domain.push_guard(Guard::nonzero(eom.leading.clone()));
    Ok(Explicit { g, leading: eom.leading.clone(), domain })
}

impl Explicit {
    /// Substitutes `x'' = g` into `e`.
    pub fn on_shell(&self, e: &Expr) -> Expr {
        e.substitute(&Var::xddot(), &self.g)
    }
}
