//! Sampling boxes with guard expressions, and the witness points reported
//! when a check fails.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Expr, Name};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.hi > self.lo {
            rng.gen_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardKind {
    /// `|e| >= eps_guard`.
    NonZero,
    /// `e >= eps_guard`.
    Positive,
}

impl GuardKind {
    pub fn admits(self, value: f64, eps: f64) -> bool {
        match self {
            GuardKind::NonZero => value.abs() >= eps,
            GuardKind::Positive => value >= eps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Guard {
    pub expr: Expr,
    pub kind: GuardKind,
}

impl Guard {
    pub fn nonzero(expr: Expr) -> Self {
        Guard { expr, kind: GuardKind::NonZero }
    }

    pub fn positive(expr: Expr) -> Self {
        Guard { expr, kind: GuardKind::Positive }
    }

    pub fn admits(&self, value: f64, eps: f64) -> bool {
        self.kind.admits(value, eps)
    }
}

/// Sampling box for `t` and the jet coordinates, intervals for named
/// constants, and guards that must hold at every accepted point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Domain {
    pub t: Interval,
    pub x: Interval,
    pub xdot: Interval,
    pub xddot: Interval,
    pub xdddot: Interval,
    pub params: BTreeMap<Name, Interval>,
    /// Used for constants without an explicit interval.
    pub default_param: Interval,
    pub guards: Vec<Guard>,
}

impl Default for Domain {
    fn default() -> Self {
        Domain {
            t: Interval::new(0.5, 2.0),
            x: Interval::new(0.5, 2.0),
            xdot: Interval::new(-2.0, 2.0),
            xddot: Interval::new(-2.0, 2.0),
            xdddot: Interval::new(-2.0, 2.0),
            params: BTreeMap::new(),
            default_param: Interval::new(0.5, 1.5),
            guards: Vec::new(),
        }
    }
}

impl Domain {
    pub fn with_t(mut self, lo: f64, hi: f64) -> Self {
        self.t = Interval::new(lo, hi);
        self
    }

    pub fn with_x(mut self, lo: f64, hi: f64) -> Self {
        self.x = Interval::new(lo, hi);
        self
    }

    pub fn with_xdot(mut self, lo: f64, hi: f64) -> Self {
        self.xdot = Interval::new(lo, hi);
        self
    }

    pub fn with_param(mut self, name: &str, iv: Interval) -> Self {
        self.params.insert(Arc::from(name), iv);
        self
    }

    /// Pins a constant to one value.
    pub fn fix(self, name: &str, v: f64) -> Self {
        self.with_param(name, Interval::point(v))
    }

    pub fn guard(mut self, g: Guard) -> Self {
        self.push_guard(g);
        self
    }

    pub fn push_guard(&mut self, g: Guard) {
        if !self.guards.contains(&g) {
            self.guards.push(g);
        }
    }

    pub fn merge_guards(&mut self, other: &Domain) {
        for g in &other.guards {
            self.push_guard(g.clone());
        }
    }

    pub fn param_interval(&self, name: &str) -> Interval {
        self.params.get(name).copied().unwrap_or(self.default_param)
    }

    /// Values of the five jet slots and the given constants, drawn uniformly.
    pub(crate) fn draw<R: Rng>(&self, params: &[Name], rng: &mut R) -> Vec<f64> {
        let mut v = vec![
            self.t.sample(rng),
            self.x.sample(rng),
            self.xdot.sample(rng),
            self.xddot.sample(rng),
            self.xdddot.sample(rng),
        ];
        v.extend(params.iter().map(|p| self.param_interval(p).sample(rng)));
        v
    }
}

/// A concrete sample point, reported as evidence for a verdict.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub t: f64,
    pub x: f64,
    pub xdot: f64,
    pub xddot: f64,
    pub xdddot: f64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub functions: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rhs: Option<f64>,
}

impl Point {
    pub(crate) fn from_slots(slots: &[f64], params: &[Name]) -> Self {
        Point {
            t: slots[0],
            x: slots[1],
            xdot: slots[2],
            xddot: slots[3],
            xdddot: slots[4],
            params: params
                .iter()
                .zip(&slots[5..])
                .map(|(n, v)| (n.to_string(), *v))
                .collect(),
            ..Point::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn draws_stay_in_box() {
        let d = Domain::default().fix("b0", 2.0);
        let names: Vec<Name> = vec![Arc::from("a"), Arc::from("b0")];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let v = d.draw(&names, &mut rng);
            assert!(d.t.contains(v[0]) && d.x.contains(v[1]));
            assert!(d.default_param.contains(v[5]));
            assert_eq!(v[6], 2.0);
        }
    }

    #[test]
    fn guard_margins() {
        let g = Guard::positive(Expr::x());
        assert!(!g.admits(1e-7, 1e-6));
        assert!(g.admits(1e-3, 1e-6));
        assert!(Guard::nonzero(Expr::x()).admits(-1.0, 1e-6));
    }
}
