//! Numeric evaluation.
//!
//! [`Bindings::evaluate`] walks the tree and stays in exact rational
//! arithmetic while every input is rational and no transcendental node is
//! met. [`CompiledExpr`] is the fast `f64` path used for sampling and
//! integration.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{Signed, ToPrimitive};

use super::{partial, Builtin, Expr, Jet, Name, Node, Number, Var};
use crate::error::{Error, Result};

/// Concrete time functions substituted for opaque `f(t)` atoms.
#[derive(Clone, Debug, Default)]
pub struct Instantiation {
    funcs: BTreeMap<Name, Expr>,
}

impl Instantiation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, body: Expr) -> Self {
        self.insert(name, body);
        self
    }

    pub fn insert(&mut self, name: &str, body: Expr) {
        self.funcs.insert(Arc::from(name), body);
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Expr> {
        self.funcs.get(name)
    }

    /// `order`-th time derivative of the instantiation of `name`.
    pub fn derivative(&self, name: &str, order: u32) -> Option<Expr> {
        let mut e = self.funcs.get(name)?.clone();
        for _ in 0..order {
            e = partial(&e, &Var::t());
        }
        Some(e)
    }

    /// The fixed test set used for numeric checks of opaque functions.
    pub fn standard_set() -> Vec<Expr> {
        ["1", "t", "t^2", "exp(t/2)", "sin(t)", "1 + t^2"]
            .iter()
            .map(|s| super::parse(s).expect("standard set parses"))
            .collect()
    }

    /// Instantiation number `k` for the given function names: the `i`-th
    /// name (in sorted order) gets test function `(k + i) mod 6`, so
    /// distinct names receive distinct functions and every name meets every
    /// test function across `k = 0..6`.
    pub fn rotation<'a, I: IntoIterator<Item = &'a Name>>(names: I, k: usize) -> Instantiation {
        let set = Self::standard_set();
        let mut inst = Instantiation::new();
        for (i, n) in names.into_iter().enumerate() {
            inst.insert(n, set[(k + i) % set.len()].clone());
        }
        inst
    }

    pub fn describe(&self) -> BTreeMap<String, String> {
        self.funcs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }
}

/// Values for jets, named constants and opaque functions.
#[derive(Clone, Debug)]
pub struct Bindings {
    pub t: Option<Number>,
    pub x: [Option<Number>; 4],
    pub params: BTreeMap<Name, Number>,
    pub funcs: Instantiation,
    pub eps_guard: f64,
}

impl Default for Bindings {
    fn default() -> Self {
        Bindings {
            t: None,
            x: [None, None, None, None],
            params: BTreeMap::new(),
            funcs: Instantiation::new(),
            eps_guard: crate::Settings::default().eps_guard,
        }
    }
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn t(mut self, v: impl Into<Number>) -> Self {
        self.t = Some(v.into());
        self
    }

    pub fn jet(mut self, order: u8, v: impl Into<Number>) -> Self {
        self.x[order as usize] = Some(v.into());
        self
    }

    pub fn x(self, v: impl Into<Number>) -> Self {
        self.jet(0, v)
    }

    pub fn xdot(self, v: impl Into<Number>) -> Self {
        self.jet(1, v)
    }

    pub fn xddot(self, v: impl Into<Number>) -> Self {
        self.jet(2, v)
    }

    pub fn param(mut self, name: &str, v: impl Into<Number>) -> Self {
        self.params.insert(Arc::from(name), v.into());
        self
    }

    pub fn func(mut self, name: &str, body: Expr) -> Self {
        self.funcs.insert(name, body);
        self
    }

    /// Substitutes bound constants and instantiates bound functions,
    /// leaving jets symbolic.
    pub fn apply(&self, e: &Expr) -> Expr {
        let mut out = e.instantiate(&self.funcs);
        for (name, v) in &self.params {
            out = out.substitute(&Var::Param(name.clone()), &Expr::num(v.clone()));
        }
        out
    }

    pub fn evaluate(&self, e: &Expr) -> Result<f64> {
        let v = self.evaluate_number(e)?.to_f64();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Evaluation that returns an exact rational whenever possible.
    pub fn evaluate_number(&self, e: &Expr) -> Result<Number> {
        let v = match e.node() {
            Node::Const(c) => c.clone(),
            Node::Param(p) => self
                .params
                .get(p)
                .cloned()
                .ok_or_else(|| Error::Unbound(p.to_string()))?,
            Node::Jet(Jet::T) => self.t.clone().ok_or_else(|| Error::Unbound("t".into()))?,
            Node::Jet(j @ Jet::X(k)) => self.x[*k as usize]
                .clone()
                .ok_or_else(|| Error::Unbound(j.to_string()))?,
            Node::Func { name, order } => {
                let body = self
                    .funcs
                    .derivative(name, *order)
                    .ok_or_else(|| Error::Unbound(format!("{name}(t)")))?;
                self.evaluate_number(&body)?
            }
            Node::Sum(cs) => {
                let mut acc = Number::zero();
                for c in cs {
                    acc = acc.add(&self.evaluate_number(c)?);
                }
                acc
            }
            Node::Product(cs) => {
                let mut acc = Number::one();
                for c in cs {
                    acc = acc.mul(&self.evaluate_number(c)?);
                }
                acc
            }
            Node::Quotient(a, b) => {
                let num = self.evaluate_number(a)?;
                let den = self.evaluate_number(b)?;
                self.check_denominator(&den)?;
                num.div(&den).ok_or(Error::NearSingular { value: 0.0 })?
            }
            Node::Power(b, p) => {
                let base = self.evaluate_number(b)?;
                if p.is_negative() {
                    self.check_denominator(&base)?;
                }
                match base.pow_exact(p) {
                    Some(v) => v,
                    None => {
                        let pf = super::number::ratio_to_f64(p);
                        let v = base.to_f64().powf(pf);
                        if !v.is_finite() {
                            return Err(Error::NonFinite);
                        }
                        Number::from_f64(v)
                    }
                }
            }
            Node::Apply(f, a) => {
                let arg = self.evaluate_number(a)?;
                match f {
                    Builtin::Abs => arg.abs(),
                    Builtin::Exp => Number::from_f64(arg.to_f64().exp()),
                    Builtin::Sin => Number::from_f64(arg.to_f64().sin()),
                    Builtin::Cos => Number::from_f64(arg.to_f64().cos()),
                    Builtin::Ln => {
                        let v = arg.to_f64();
                        if v <= 0.0 {
                            return Err(Error::LogDomain { value: v });
                        }
                        Number::from_f64(v.ln())
                    }
                }
            }
        };
        if let Number::Float(f) = v {
            if !f.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(v)
    }

    fn check_denominator(&self, den: &Number) -> Result<()> {
        let d = den.to_f64();
        if den.is_zero() || d.abs() < self.eps_guard {
            return Err(Error::NearSingular { value: d });
        }
        Ok(())
    }
}

/// Slot order for compiled evaluation: `t, x, x', x'', x'''`, then named
/// constants in the listed order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SlotLayout {
    pub params: Vec<Name>,
}

impl SlotLayout {
    pub const JET_SLOTS: usize = 5;

    pub fn new<'a, I: IntoIterator<Item = &'a Name>>(params: I) -> Self {
        SlotLayout {
            params: params.into_iter().cloned().collect(),
        }
    }

    pub fn width(&self) -> usize {
        Self::JET_SLOTS + self.params.len()
    }

    fn slot_of_jet(j: Jet) -> usize {
        match j {
            Jet::T => 0,
            Jet::X(k) => 1 + k as usize,
        }
    }

    fn slot_of_param(&self, p: &str) -> Option<usize> {
        self.params
            .iter()
            .position(|q| &**q == p)
            .map(|i| Self::JET_SLOTS + i)
    }
}

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Slot(usize),
    Sum(Vec<Op>),
    Prod(Vec<Op>),
    Powi(Box<Op>, i32),
    Powf(Box<Op>, f64),
    Div(Box<Op>, Box<Op>),
    Exp(Box<Op>),
    Ln(Box<Op>),
    Sin(Box<Op>),
    Cos(Box<Op>),
    Abs(Box<Op>),
}

/// An expression lowered to `f64` operations over a [`SlotLayout`].
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    op: Op,
    eps_guard: f64,
}

impl CompiledExpr {
    pub fn compile(e: &Expr, inst: &Instantiation, layout: &SlotLayout, eps_guard: f64) -> Result<Self> {
        Ok(CompiledExpr {
            op: lower(e, inst, layout)?,
            eps_guard,
        })
    }

    pub fn eval(&self, slots: &[f64]) -> Result<f64> {
        let v = run(&self.op, slots, self.eps_guard)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }
}

fn lower(e: &Expr, inst: &Instantiation, layout: &SlotLayout) -> Result<Op> {
    Ok(match e.node() {
        Node::Const(c) => Op::Const(c.to_f64()),
        Node::Param(p) => Op::Slot(
            layout
                .slot_of_param(p)
                .ok_or_else(|| Error::Unbound(p.to_string()))?,
        ),
        Node::Jet(j) => Op::Slot(SlotLayout::slot_of_jet(*j)),
        Node::Func { name, order } => {
            let body = inst
                .derivative(name, *order)
                .ok_or_else(|| Error::Unbound(format!("{name}(t)")))?;
            lower(&body, inst, layout)?
        }
        Node::Sum(cs) => Op::Sum(cs.iter().map(|c| lower(c, inst, layout)).collect::<Result<_>>()?),
        Node::Product(cs) => {
            Op::Prod(cs.iter().map(|c| lower(c, inst, layout)).collect::<Result<_>>()?)
        }
        Node::Quotient(a, b) => Op::Div(
            Box::new(lower(a, inst, layout)?),
            Box::new(lower(b, inst, layout)?),
        ),
        Node::Power(b, p) => {
            let base = Box::new(lower(b, inst, layout)?);
            match p.is_integer().then(|| p.to_integer().to_i32()).flatten() {
                Some(k) => Op::Powi(base, k),
                None => Op::Powf(base, super::number::ratio_to_f64(p)),
            }
        }
        Node::Apply(f, a) => {
            let arg = Box::new(lower(a, inst, layout)?);
            match f {
                Builtin::Exp => Op::Exp(arg),
                Builtin::Ln => Op::Ln(arg),
                Builtin::Sin => Op::Sin(arg),
                Builtin::Cos => Op::Cos(arg),
                Builtin::Abs => Op::Abs(arg),
            }
        }
    })
}

fn run(op: &Op, s: &[f64], eps: f64) -> Result<f64> {
    Ok(match op {
        Op::Const(c) => *c,
        Op::Slot(i) => s[*i],
        Op::Sum(cs) => {
            let mut acc = 0.0;
            for c in cs {
                acc += run(c, s, eps)?;
            }
            acc
        }
        Op::Prod(cs) => {
            let mut acc = 1.0;
            for c in cs {
                acc *= run(c, s, eps)?;
            }
            acc
        }
        Op::Powi(b, k) => {
            let v = run(b, s, eps)?;
            if *k < 0 && v.abs() < eps {
                return Err(Error::NearSingular { value: v });
            }
            v.powi(*k)
        }
        Op::Powf(b, p) => {
            let v = run(b, s, eps)?;
            if *p < 0.0 && v.abs() < eps {
                return Err(Error::NearSingular { value: v });
            }
            let r = v.powf(*p);
            if r.is_nan() {
                return Err(Error::NonFinite);
            }
            r
        }
        Op::Div(a, b) => {
            let d = run(b, s, eps)?;
            if d.abs() < eps {
                return Err(Error::NearSingular { value: d });
            }
            run(a, s, eps)? / d
        }
        Op::Exp(a) => run(a, s, eps)?.exp(),
        Op::Ln(a) => {
            let v = run(a, s, eps)?;
            if v <= 0.0 {
                return Err(Error::LogDomain { value: v });
            }
            v.ln()
        }
        Op::Sin(a) => run(a, s, eps)?.sin(),
        Op::Cos(a) => run(a, s, eps)?.cos(),
        Op::Abs(a) => run(a, s, eps)?.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn simple_sum() {
        let b = Bindings::new().x(1).xdot(0);
        assert_eq!(b.evaluate(&parse("x' + x").unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn rational_evaluation_is_exact() {
        let e = parse("a1*x'/(a2*x + a4)").unwrap();
        let b = Bindings::new()
            .param("a1", 1)
            .param("a2", 1)
            .param("a4", 1)
            .x(1)
            .xdot(2);
        assert_eq!(b.evaluate_number(&e).unwrap(), Number::int(1));
    }

    #[test]
    fn conserved_level_of_tied_oscillator() {
        let e = parse("exp(b0*t/2)*(x' + b0*x/2)").unwrap();
        let b = Bindings::new().param("b0", 2).t(0).x(1).xdot(0);
        assert_eq!(b.evaluate(&e).unwrap(), 1.0);
    }

    #[test]
    fn evaluation_errors() {
        let b = Bindings::new().x(0);
        assert!(matches!(b.evaluate(&parse("1/x").unwrap()), Err(Error::NearSingular { .. })));
        assert!(matches!(
            Bindings::new().x(-1).evaluate(&parse("ln(x)").unwrap()),
            Err(Error::LogDomain { .. })
        ));
        assert!(matches!(
            Bindings::new().evaluate(&parse("x + q").unwrap()),
            Err(Error::Unbound(_))
        ));
        assert!(matches!(
            Bindings::new().t(1).evaluate(&parse("f1(t)").unwrap()),
            Err(Error::Unbound(_))
        ));
    }

    #[test]
    fn function_derivatives_are_symbolic() {
        let b = Bindings::new().t(0).func("f", parse("sin(t)").unwrap());
        assert_eq!(b.evaluate(&parse("f(t)'").unwrap()).unwrap(), 1.0);
        assert_eq!(b.evaluate(&parse("f(t)''").unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn compiled_matches_tree_walk() {
        let e = parse("exp(a*x)*x'^2/(1 + t) - ln(x + 2)*f(t)'").unwrap();
        let inst = Instantiation::new().with("f", parse("t^2").unwrap());
        let names: Vec<Name> = vec![Arc::from("a")];
        let layout = SlotLayout::new(&names);
        let c = CompiledExpr::compile(&e, &inst, &layout, 1e-6).unwrap();
        let slots = [0.3, 0.7, -1.1, 0.0, 0.0, 0.4];
        let b = Bindings {
            funcs: inst,
            ..Bindings::new().t(Number::from_f64(0.3)).x(Number::from_f64(0.7)).xdot(Number::from_f64(-1.1)).param("a", Number::from_f64(0.4))
        };
        let want = b.evaluate(&e).unwrap();
        assert!((c.eval(&slots).unwrap() - want).abs() < 1e-14);
    }
}
