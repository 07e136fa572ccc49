//! The Euler-Lagrange operator, gauge lifts, the null condition for
//! `B*x' + C*x + f`, and numeric action integrals.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{
    integrate, is_zero, partial, total_dt, Bindings, CompiledExpr, Domain, EquivReport,
    Equivalence, Expr, Instantiation, Point, SlotLayout, Var,
};
use crate::Settings;

/// `L(x, x', t)` with the domain its checks sample from.
#[derive(Clone, Debug, Serialize)]
pub struct Lagrangian {
    pub body: Expr,
    pub domain: Domain,
}

impl Lagrangian {
    pub fn new(body: Expr, domain: Domain) -> Result<Self> {
        if body.max_jet_order().is_some_and(|k| k >= 2) {
            return Err(Error::InvalidLagrangian(format!(
                "`{body}` depends on x'' or higher"
            )));
        }
        Ok(Lagrangian {
            body: body.canonical(),
            domain,
        })
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::new(crate::expr::parse(src)?, Domain::default())
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }
}

/// `Phi(x, t)`.
#[derive(Clone, Debug, Serialize)]
pub struct GaugeFunction {
    pub body: Expr,
    pub domain: Domain,
}

impl GaugeFunction {
    pub fn new(body: Expr, domain: Domain) -> Result<Self> {
        if body.max_jet_order().is_some_and(|k| k >= 1) {
            return Err(Error::InvalidGauge(format!("`{body}` depends on x'")));
        }
        Ok(GaugeFunction {
            body: body.canonical(),
            domain,
        })
    }
}

/// `d/dt (dL/dx') - dL/dx`.
pub fn euler_lagrange_residual(l: &Lagrangian) -> Expr {
    total_dt(&momentum(l)).sub(&partial(&l.body, &Var::x()))
}

/// `dL/dx'`.
pub fn momentum(l: &Lagrangian) -> Expr {
    partial(&l.body, &Var::xdot())
}

/// `dB/dt - d(x*C)/dx`.
pub fn null_condition_residual(b: &Expr, c: &Expr) -> Expr {
    partial(b, &Var::t()).sub(&partial(&Expr::x().mul(c), &Var::x()))
}

pub fn from_gauge(phi: &GaugeFunction) -> Lagrangian {
    Lagrangian {
        body: total_dt(&phi.body),
        domain: phi.domain.clone(),
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NullVerdict {
    ProvenNull,
    NumericallyNull,
    NotNull,
}

#[derive(Clone, Debug, Serialize)]
pub struct NullReport {
    pub verdict: NullVerdict,
    pub residual: Expr,
    pub check: EquivReport,
}

impl NullReport {
    pub fn is_null(&self) -> bool {
        self.verdict != NullVerdict::NotNull
    }

    pub fn witness(&self) -> Option<&Point> {
        self.check.witness.as_ref()
    }
}

fn verdict_of(e: Equivalence) -> NullVerdict {
    match e {
        Equivalence::ProvenEqual => NullVerdict::ProvenNull,
        Equivalence::NumericallyEqual => NullVerdict::NumericallyNull,
        Equivalence::Distinct => NullVerdict::NotNull,
    }
}

pub fn is_null(l: &Lagrangian, s: &Settings) -> Result<NullReport> {
    let residual = euler_lagrange_residual(l);
    let check = is_zero(&residual, &l.domain, s)?;
    Ok(NullReport {
        verdict: verdict_of(check.verdict),
        residual,
        check,
    })
}

/// `(B, C, f)` such that `B*x' + C*x + f` is null; only constructed through
/// [`NullPair::certify`].
#[derive(Clone, Debug, Serialize)]
pub struct NullPair {
    pub b: Expr,
    pub c: Expr,
    pub f: Expr,
    pub domain: Domain,
    pub certificate: EquivReport,
}

impl NullPair {
    pub fn certify(b: Expr, c: Expr, f: Expr, domain: Domain, s: &Settings) -> Result<Self> {
        for (name, e) in [("B", &b), ("C", &c)] {
            if e.max_jet_order().is_some_and(|k| k >= 1) {
                return Err(Error::Input(format!("{name} = `{e}` must depend on x and t only")));
            }
        }
        if f.depends_on(&Var::x()) || f.max_jet_order().is_some() {
            return Err(Error::Input(format!("f = `{f}` must depend on t only")));
        }
        let residual = null_condition_residual(&b, &c);
        let certificate = is_zero(&residual, &domain, s)?;
        if !certificate.verdict.holds() {
            let at = certificate
                .witness
                .as_ref()
                .map(|w| format!(" at x = {}, t = {}", w.x, w.t))
                .unwrap_or_default();
            return Err(Error::NullCertificationFailed(format!(
                "dB/dt - d(xC)/dx = {residual} does not vanish{at}"
            )));
        }
        Ok(NullPair {
            b: b.canonical(),
            c: c.canonical(),
            f: f.canonical(),
            domain,
            certificate,
        })
    }

    pub fn xc(&self) -> Expr {
        Expr::x().mul(&self.c)
    }

    /// `B*x' + C*x + f`.
    pub fn assembled(&self) -> Expr {
        Expr::sum([&self.b.mul(&Expr::xdot()), &self.xc(), &self.f])
    }

    pub fn lagrangian(&self) -> Lagrangian {
        Lagrangian {
            body: self.assembled(),
            domain: self.domain.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GaugeOutcome {
    Reconstructed { phi: Expr },
    NotReconstructed { reason: String },
}

/// Finds `Phi` with `dPhi/dt = L` when `L = B*x' + R(x, t)` and the needed
/// antiderivatives are in the supported class.
pub fn reconstruct_gauge(l: &Lagrangian) -> GaugeOutcome {
    let fail = |reason: String| GaugeOutcome::NotReconstructed { reason };
    let b = momentum(l);
    if b.depends_on(&Var::xdot()) {
        return fail("Lagrangian is not affine in x'".into());
    }
    let rest = l.body.sub(&b.mul(&Expr::xdot()));
    let phi0 = match integrate(&b, &Var::x()) {
        Ok(p) => p,
        Err(e) => return fail(format!("gauge not reconstructed: {e}")),
    };
    let r = rest.sub(&partial(&phi0, &Var::t()));
    if r.depends_on(&Var::x()) {
        return fail(format!("remainder `{r}` depends on x; Lagrangian is not null"));
    }
    let g = match integrate(&r, &Var::t()) {
        Ok(g) => g,
        Err(e) => return fail(format!("gauge not reconstructed: {e}")),
    };
    let phi = phi0.add(&g);
    if !total_dt(&phi).sub(&l.body).is_zero() {
        return fail("reconstructed gauge does not reproduce the Lagrangian".into());
    }
    GaugeOutcome::Reconstructed { phi }
}

/// A closed-form path `x(t)` on `[t0, t1]`.
#[derive(Clone, Debug, Serialize)]
pub struct Path {
    pub t0: f64,
    pub t1: f64,
    pub x: Expr,
    pub xdot: Expr,
}

impl Path {
    pub fn new(x: Expr, t0: f64, t1: f64) -> Result<Self> {
        if t0.partial_cmp(&t1) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Input(format!("path needs t0 < t1, got [{t0}, {t1}]")));
        }
        if x.max_jet_order().is_some() || !x.params().is_empty() || x.has_funcs() {
            return Err(Error::Input(format!("path `{x}` must be a concrete function of t")));
        }
        let xdot = partial(&x, &Var::t());
        Ok(Path { t0, t1, x, xdot })
    }

    /// Straight line through `(t0, x0)` and `(t1, x1)`.
    pub fn line(t0: f64, t1: f64, x0: f64, x1: f64) -> Result<Self> {
        let slope = (x1 - x0) / (t1 - t0);
        let x = Expr::float(x0).add(&Expr::float(slope).mul(&Expr::t().sub(&Expr::float(t0))));
        Self::new(x, t0, t1)
    }

    /// Adds `a*sin(pi*k*(t - t0)/(t1 - t0))`, which vanishes at both ends.
    pub fn bumped(&self, a: f64, k: u32) -> Result<Self> {
        let w = PI * f64::from(k) / (self.t1 - self.t0);
        let arg = Expr::float(w).mul(&Expr::t().sub(&Expr::float(self.t0)));
        Self::new(self.x.add(&Expr::float(a).mul(&arg.sin())), self.t0, self.t1)
    }

    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let b = Bindings::new().t(crate::expr::Number::from_f64(t));
        Ok((b.evaluate(&self.x)?, b.evaluate(&self.xdot)?))
    }
}

/// Seeded bump perturbations of `base`: amplitudes in `(0, a_max]`,
/// modes `k` cycling through 1, 2, 3.
pub fn bump_family(base: &Path, a_max: f64, count: usize, seed: u64) -> Result<Vec<Path>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let a = a_max * rng.gen_range(0.1..=1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            base.bumped(a, (i % 3) as u32 + 1)
        })
        .collect()
}

fn compile_bound(e: &Expr, b: &Bindings, s: &Settings) -> Result<CompiledExpr> {
    CompiledExpr::compile(&b.apply(e), &Instantiation::new(), &SlotLayout::default(), s.eps_guard)
}

/// `∫ L(x(t), x'(t), t) dt` by composite Simpson with `s.simpson_panels`
/// panels. Constants and functions in `L` are taken from `b`.
pub fn action(l: &Lagrangian, p: &Path, b: &Bindings, s: &Settings) -> Result<f64> {
    let body = compile_bound(&l.body, b, s)?;
    let guards = l
        .domain
        .guards
        .iter()
        .map(|g| Ok((compile_bound(&g.expr, b, s)?, g.kind)))
        .collect::<Result<Vec<_>>>()?;
    let xp = compile_bound(&p.x, b, s)?;
    let vp = compile_bound(&p.xdot, b, s)?;
    let m = s.simpson_panels.max(2) & !1;
    let h = (p.t1 - p.t0) / m as f64;
    let mut sum = 0.0;
    for i in 0..=m {
        let t = if i == m { p.t1 } else { p.t0 + i as f64 * h };
        let mut slots = [t, 0.0, 0.0, 0.0, 0.0];
        slots[1] = xp.eval(&slots)?;
        slots[2] = vp.eval(&slots)?;
        for (g, kind) in &guards {
            let ok = g.eval(&slots).is_ok_and(|v| kind.admits(v, s.eps_guard));
            if !ok {
                return Err(Error::PathExitsDomain { t });
            }
        }
        let v = body.eval(&slots).map_err(|_| Error::PathExitsDomain { t })?;
        let w = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * v;
    }
    let a = sum * h / 3.0;
    if a.is_finite() {
        Ok(a)
    } else {
        Err(Error::QuadratureNonFinite)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PathReport {
    pub action_1: f64,
    pub action_2: f64,
    pub difference: f64,
    pub eps_act: f64,
    pub panels: usize,
    pub passes: bool,
}

pub fn path_independence_check(
    l: &Lagrangian,
    p1: &Path,
    p2: &Path,
    b: &Bindings,
    s: &Settings,
) -> Result<PathReport> {
    let (a0, a1) = (p1.eval(p1.t0)?.0, p1.eval(p1.t1)?.0);
    let (b0, b1) = (p2.eval(p2.t0)?.0, p2.eval(p2.t1)?.0);
    let close = |u: f64, v: f64| (u - v).abs() <= 1e-12 * (1.0 + u.abs());
    if !(close(p1.t0, p2.t0) && close(p1.t1, p2.t1) && close(a0, b0) && close(a1, b1)) {
        return Err(Error::EndpointMismatch(format!(
            "({}, {}) -> ({}, {}) vs ({}, {}) -> ({}, {})",
            p1.t0, a0, p1.t1, a1, p2.t0, b0, p2.t1, b1
        )));
    }
    let action_1 = action(l, p1, b, s)?;
    let action_2 = action(l, p2, b, s)?;
    let difference = (action_1 - action_2).abs();
    Ok(PathReport {
        action_1,
        action_2,
        difference,
        eps_act: s.eps_act,
        panels: s.simpson_panels,
        passes: difference <= s.eps_act,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Guard};

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn lag(s: &str) -> Lagrangian {
        Lagrangian::parse(s).unwrap()
    }

    #[test]
    fn residuals() {
        assert_eq!(euler_lagrange_residual(&lag("x'^2/2")), p("x''"));
        assert!(euler_lagrange_residual(&lag("2*f1(t)*x*x' + f1(t)'*x^2 + f2(t)'")).is_zero());
        let r = euler_lagrange_residual(&lag("x'^2/2*exp(2*a0*x)"));
        assert_eq!(r, p("exp(2*a0*x)*(x'' + a0*x'^2)"));
    }

    #[test]
    fn rejects_acceleration() {
        assert!(matches!(Lagrangian::parse("x''*x"), Err(Error::InvalidLagrangian(_))));
        assert!(matches!(
            GaugeFunction::new(p("x'"), Domain::default()),
            Err(Error::InvalidGauge(_))
        ));
    }

    #[test]
    fn nullity_verdicts() {
        let s = Settings::default();
        let r = is_null(&lag("a1*x'/(a2*x + a4)"), &s).unwrap();
        assert_eq!(r.verdict, NullVerdict::ProvenNull);
        let r = is_null(&lag("x'^2/2"), &s).unwrap();
        assert_eq!(r.verdict, NullVerdict::NotNull);
        assert!(r.witness().unwrap().xddot.abs() > 0.0);
    }

    #[test]
    fn gauge_lifts() {
        let phi = GaugeFunction::new(p("f1(t)*x^2 + f2(t)"), Domain::default()).unwrap();
        assert_eq!(from_gauge(&phi).body, p("2*f1(t)*x*x' + f1(t)'*x^2 + f2(t)'"));
        let d = Domain::default().guard(Guard::positive(p("a2*x + a4")));
        let phi = GaugeFunction::new(p("a1/a2*ln(a2*x + a4)"), d).unwrap();
        assert_eq!(from_gauge(&phi).body, p("a1*x'/(a2*x + a4)"));
        let phi = GaugeFunction::new(p("7"), Domain::default()).unwrap();
        assert!(from_gauge(&phi).body.is_zero());
    }

    #[test]
    fn null_condition() {
        let b = p("f1(t)*x + f2(t)*t + f3(t)");
        let c = p("1/2*f1(t)'*x + f2(t)'*t + f2(t) + f3(t)'");
        assert!(null_condition_residual(&b, &c).is_zero());
        assert!(null_condition_residual(&p("c1"), &Expr::zero()).is_zero());
        let b = p("B0*exp(a0*x + b0*t/2)");
        let c = p("2*B0*g0/b0*exp(a0*x + b0*t/2)");
        let want = p("B0*exp(a0*x + b0*t/2)*(b0^2/4 - (1 + a0*x)*g0)/b0*2");
        assert_eq!(null_condition_residual(&b, &c), want);
    }

    #[test]
    fn momenta() {
        assert_eq!(momentum(&lag("x'^2/2")), p("x'"));
        assert_eq!(momentum(&lag("B*x' + C*x + f")), p("B"));
        assert_eq!(momentum(&lag("1/(a1*x' + a2*t + a3)")), p("-a1/(a1*x' + a2*t + a3)^2"));
    }

    #[test]
    fn actions() {
        let s = Settings::default();
        let line = Path::line(0.0, 1.0, 0.0, 2.0).unwrap();
        let b = Bindings::new().param("c1", 3);
        let a = action(&lag("c1*x'"), &line, &b, &s).unwrap();
        assert!((a - 6.0).abs() < 1e-12);
        let b = Bindings::new().func("f1", p("1")).func("f2", p("t"));
        let l = lag("2*f1(t)*x*x' + f1(t)'*x^2 + f2(t)'");
        let a = action(&l, &Path::line(0.0, 1.0, 0.0, 1.0).unwrap(), &b, &s).unwrap();
        assert!((a - 2.0).abs() < 1e-12);
        let a = action(&lag("x'^2/2"), &Path::line(0.0, 1.0, 0.0, 1.0).unwrap(), &Bindings::new(), &s).unwrap();
        assert!((a - 0.5).abs() < 1e-12);
    }

    #[test]
    fn path_independence_discriminates() {
        let s = Settings::default();
        let base = Path::line(0.0, 1.0, 0.5, 1.5).unwrap();
        let bumped = base.bumped(0.1, 2).unwrap();
        let b = Bindings::new()
            .func("f1", p("1"))
            .func("f2", p("0"))
            .func("f3", p("0"))
            .func("f4", p("0"));
        let l = lag("(f1(t)*x + f2(t)*t + f3(t))*x' + (1/2*f1(t)'*x + f2(t)'*t + f2(t) + f3(t)')*x + f4(t)");
        assert!(path_independence_check(&l, &base, &bumped, &b, &s).unwrap().passes);
        let r = path_independence_check(&lag("x'^2/2"), &base, &bumped, &Bindings::new(), &s).unwrap();
        assert!(!r.passes);
        let other = Path::line(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            path_independence_check(&l, &base, &other, &b, &s),
            Err(Error::EndpointMismatch(_))
        ));
    }

    #[test]
    fn path_leaving_domain() {
        let l = lag("x'/x").with_domain(Domain::default().guard(Guard::positive(Expr::x())));
        let p = Path::line(0.0, 1.0, -1.0, 1.0).unwrap();
        assert!(matches!(
            action(&l, &p, &Bindings::new(), &Settings::default()),
            Err(Error::PathExitsDomain { .. })
        ));
    }

    #[test]
    fn gauge_reconstruction() {
        let l = lag("(f1(t)*x + f2(t)*t + f3(t))*x' + (1/2*f1(t)'*x + f2(t)'*t + f2(t) + f3(t)')*x");
        match reconstruct_gauge(&l) {
            GaugeOutcome::Reconstructed { phi } => {
                assert_eq!(phi, p("1/2*f1(t)*x^2 + f2(t)*t*x + f3(t)*x"));
            }
            other => panic!("{other:?}"),
        }
        let l = lag("x'*x + f4(t)");
        assert!(matches!(reconstruct_gauge(&l), GaugeOutcome::NotReconstructed { .. }));
        let l = lag("x'^2");
        assert!(matches!(reconstruct_gauge(&l), GaugeOutcome::NotReconstructed { .. }));
    }
}
