//! Fixed-step RK4 for `x'' = g(x, x', t)`, conservation of a null
//! Lagrangian along the result, and trajectory comparison.

use std::io::Write;

use serde::Serialize;

use crate::composer::{corollary1_eom, solve_leading};
use crate::error::{Error, Result};
use crate::expr::{CompiledExpr, Expr, Guard, Instantiation, SlotLayout};
use crate::variational::NullPair;
use crate::Settings;

/// Initial value problem for `x'' = g`.
#[derive(Clone, Debug, Serialize)]
pub struct Ivp {
    pub g: Expr,
    pub t0: f64,
    pub x0: f64,
    pub v0: f64,
    pub t1: f64,
    pub h: f64,
    /// Checked after every step.
    pub guards: Vec<Guard>,
}

impl Ivp {
    /// `t1 < t0` integrates backwards with step `h`.
    pub fn new(g: Expr, (t0, x0, v0): (f64, f64, f64), t1: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidIvp(format!("step {h} must be positive")));
        }
        if [t0, x0, v0, t1].iter().any(|v| !v.is_finite()) || t0 == t1 {
            return Err(Error::InvalidIvp("need finite data and t1 != t0".into()));
        }
        if g.max_jet_order().is_some_and(|k| k >= 2) {
            return Err(Error::InvalidIvp(format!("right side `{g}` depends on x''")));
        }
        if let Some(n) = g.params().into_iter().next() {
            return Err(Error::InvalidIvp(format!("right side has unbound constant `{n}`")));
        }
        if g.has_funcs() {
            return Err(Error::InvalidIvp(format!("right side `{g}` has opaque functions")));
        }
        Ok(Ivp { g, t0, x0, v0, t1, h, guards: Vec::new() })
    }

    pub fn with_guards(mut self, guards: impl IntoIterator<Item = Guard>) -> Self {
        self.guards.extend(guards);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub integrator: &'static str,
    pub h: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> (f64, f64, f64) {
        let n = self.len() - 1;
        (self.t[n], self.x[n], self.v[n])
    }
}

fn compile(e: &Expr, s: &Settings) -> Result<CompiledExpr> {
    CompiledExpr::compile(e, &Instantiation::new(), &SlotLayout::new(&[]), s.eps_guard)
}

fn slots(t: f64, x: f64, v: f64) -> [f64; 5] {
    [t, x, v, 0.0, 0.0]
}

pub fn integrate(ivp: &Ivp, s: &Settings) -> Result<Trajectory> {
    let g = compile(&ivp.g, s)?;
    let guards = ivp
        .guards
        .iter()
        .map(|gd| Ok((compile(&gd.expr, s)?, gd.kind)))
        .collect::<Result<Vec<_>>>()?;
    let span = ivp.t1 - ivp.t0;
    let dir = span.signum();
    // Full steps, plus a final partial one when h does not divide the span.
    let full = (span.abs() / ivp.h * (1.0 - 1e-12)).floor() as usize;
    let n = if ivp.t0 + dir * full as f64 * ivp.h == ivp.t1 { full } else { full + 1 };
    let mut tr = Trajectory {
        t: Vec::with_capacity(n + 1),
        x: Vec::with_capacity(n + 1),
        v: Vec::with_capacity(n + 1),
        integrator: "rk4",
        h: ivp.h,
    };
    let acc = |t: f64, x: f64, v: f64| g.eval(&slots(t, x, v)).map_err(|_| Error::DomainExit { t });
    let admitted = |t: f64, x: f64, v: f64| -> Result<()> {
        for (c, kind) in &guards {
            let ok = c.eval(&slots(t, x, v)).is_ok_and(|val| kind.admits(val, s.eps_guard));
            if !ok {
                return Err(Error::DomainExit { t });
            }
        }
        Ok(())
    };
    let (mut t, mut x, mut v) = (ivp.t0, ivp.x0, ivp.v0);
    admitted(t, x, v)?;
    tr.t.push(t);
    tr.x.push(x);
    tr.v.push(v);
    for k in 1..=n {
        let t_next = if k == n { ivp.t1 } else { ivp.t0 + dir * k as f64 * ivp.h };
        let h = t_next - t;
        let a1 = acc(t, x, v)?;
        let (x2, v2) = (x + 0.5 * h * v, v + 0.5 * h * a1);
        let a2 = acc(t + 0.5 * h, x2, v2)?;
        let (x3, v3) = (x + 0.5 * h * v2, v + 0.5 * h * a2);
        let a3 = acc(t + 0.5 * h, x3, v3)?;
        let (x4, v4) = (x + h * v3, v + h * a3);
        let a4 = acc(t + h, x4, v4)?;
        x += h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4);
        v += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        t = t_next;
        if !x.is_finite() || !v.is_finite() {
            return Err(Error::NonFiniteState { t });
        }
        admitted(t, x, v)?;
        tr.t.push(t);
        tr.x.push(x);
        tr.v.push(v);
    }
    Ok(tr)
}

/// Values of a first integral along a trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    #[serde(skip)]
    pub values: Vec<f64>,
    pub initial: f64,
    pub max_abs_drift: f64,
    pub relative_drift: f64,
    pub eps_drift: f64,
    pub passes: bool,
}

/// Evaluates `l` (in `t, x, x'`) along `traj`.
pub fn evaluate_along(l: &Expr, traj: &Trajectory, s: &Settings) -> Result<Vec<f64>> {
    let c = compile(l, s)?;
    (0..traj.len())
        .map(|k| c.eval(&slots(traj.t[k], traj.x[k], traj.v[k])))
        .collect()
}

pub fn drift(l: &Expr, traj: &Trajectory, s: &Settings) -> Result<DriftReport> {
    let values = evaluate_along(l, traj, s)?;
    let initial = values[0];
    let max_abs_drift = values.iter().map(|v| (v - initial).abs()).fold(0.0, f64::max);
    let scale = 1.0 + initial.abs();
    Ok(DriftReport {
        values,
        initial,
        max_abs_drift,
        relative_drift: max_abs_drift / scale,
        eps_drift: s.eps_drift,
        passes: max_abs_drift <= s.eps_drift * scale,
    })
}

#[derive(Copy, Clone, Debug, Serialize)]
pub struct Deviation {
    pub max_x: f64,
    pub max_v: f64,
}

pub fn compare(a: &Trajectory, b: &Trajectory) -> Result<Deviation> {
    if a.len() != b.len() || a.h != b.h {
        return Err(Error::GridMismatch(format!(
            "{} points at h = {} vs {} points at h = {}",
            a.len(),
            a.h,
            b.len(),
            b.h
        )));
    }
    if let Some(k) = (0..a.len()).find(|&k| a.t[k] != b.t[k]) {
        return Err(Error::GridMismatch(format!("t differs at index {k}")));
    }
    let max = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, w)| (u - w).abs()).fold(0.0, f64::max);
    Ok(Deviation { max_x: max(&a.x, &b.x), max_v: max(&a.v, &b.v) })
}

/// Writes `t,x,xdot,L_null`; the last column is empty without `l`.
pub fn write_csv<W: Write>(w: W, traj: &Trajectory, l: Option<&[f64]>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.into());
    out.write_record(["t", "x", "xdot", "L_null"]).map_err(io)?;
    for k in 0..traj.len() {
        let lv = l.map(|l| l[k].to_string()).unwrap_or_default();
        out.write_record([traj.t[k].to_string(), traj.x[k].to_string(), traj.v[k].to_string(), lv])
            .map_err(io)?;
    }
    out.flush()?;
    Ok(())
}

/// Integrates `dL/dt = 0` for a pair with numeric constants and reports
/// the drift of `L` along the result.
pub fn simulate(
    np: &NullPair,
    ic: (f64, f64, f64),
    t1: f64,
    h: f64,
    s: &Settings,
) -> Result<(Trajectory, DriftReport)> {
    let (eom, _) = corollary1_eom(np, s)?;
    let ex = solve_leading(&eom, s)?;
    let guards = ex.domain.guards.iter().filter(|g| g.expr.params().is_empty() && !g.expr.has_funcs());
    let ivp = Ivp::new(ex.g.clone(), ic, t1, h)?.with_guards(guards.cloned());
    let traj = integrate(&ivp, s)?;
    let d = drift(&np.assembled(), &traj, s)?;
    Ok((traj, d))
}

/// Closed-form solutions used as oracles.
pub mod oracle {
    /// `x'' + beta x' + beta^2/4 x = 0`.
    pub fn tied_oscillator(beta: f64, x0: f64, v0: f64, t: f64) -> f64 {
        (x0 + (v0 + 0.5 * beta * x0) * t) * (-0.5 * beta * t).exp()
    }

    /// `x'' + alpha x'^2 = 0`.
    pub fn quadratic_damping(alpha: f64, x0: f64, v0: f64, t: f64) -> f64 {
        x0 + (alpha * v0 * t).ln_1p() / alpha
    }
}

/// `|x(t1) - exact|` at `h` over the same at `h/2`.
pub fn convergence_ratio(g: &Expr, ic: (f64, f64, f64), t1: f64, h: f64, exact: f64, s: &Settings) -> Result<f64> {
    let err = |h: f64| -> Result<f64> {
        let tr = integrate(&Ivp::new(g.clone(), ic, t1, h)?, s)?;
        Ok((tr.last().1 - exact).abs())
    };
    Ok(err(h)? / err(h / 2.0)?)
}
