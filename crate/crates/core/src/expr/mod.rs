//! Immutable expression trees over the jet variables `t, x, x', x'', x'''`,
//! named constants, and opaque time functions `f(t)` with derivative order.
//!
//! Every public operation returns a canonical tree: an expanded sum of
//! monomials over atoms with merged rational coefficients, atoms and
//! monomials in a fixed total order. Negative and fractional powers of sums
//! stay as atoms (with their leading coefficient normalised to one), and all
//! exponentials in a monomial are merged into a single `exp(..)`.

mod canon;
mod diff;
mod domain;
mod equiv;
mod eval;
mod integrate;
mod number;
mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Serialize, Serializer};

pub(crate) use canon::Poly;
pub use domain::{Domain, Guard, GuardKind, Interval, Point};
pub use equiv::{equivalent, is_zero, sample_values, EquivReport, Equivalence, SymbolicCheck};
pub use eval::{Bindings, CompiledExpr, Instantiation, SlotLayout};
pub use integrate::integrate;
pub use number::{rational_from_f64, Number};
pub use parse::parse;

pub(crate) use number::rat_int;

pub type Name = Arc<str>;

/// The independent variable and the jet coordinates `x^(k)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Jet {
    T,
    /// `X(0) = x`, `X(1) = x'`, `X(2) = x''`, `X(3) = x'''`.
    X(u8),
}

impl Jet {
    pub const MAX_ORDER: u8 = 3;

    pub fn x() -> Jet {
        Jet::X(0)
    }
    pub fn xdot() -> Jet {
        Jet::X(1)
    }
    pub fn xddot() -> Jet {
        Jet::X(2)
    }

    fn flag(self) -> u16 {
        match self {
            Jet::T => flags::T,
            Jet::X(k) => flags::X0 << k,
        }
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Jet::T => f.write_str("t"),
            Jet::X(k) => {
                f.write_str("x")?;
                for _ in 0..*k {
                    f.write_str("'")?;
                }
                Ok(())
            }
        }
    }
}

/// Differentiation / integration variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Jet(Jet),
    Param(Name),
}

impl Var {
    pub fn t() -> Var {
        Var::Jet(Jet::T)
    }
    pub fn x() -> Var {
        Var::Jet(Jet::X(0))
    }
    pub fn xdot() -> Var {
        Var::Jet(Jet::X(1))
    }
    pub fn xddot() -> Var {
        Var::Jet(Jet::X(2))
    }
    pub fn param(name: &str) -> Var {
        Var::Param(Arc::from(name))
    }
}

impl From<Jet> for Var {
    fn from(j: Jet) -> Var {
        Var::Jet(j)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Builtin {
    Exp,
    Ln,
    Sin,
    Cos,
    Abs,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Exp => "exp",
            Builtin::Ln => "ln",
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Abs => "abs",
        }
    }

    pub fn from_name(s: &str) -> Option<Builtin> {
        Some(match s {
            "exp" => Builtin::Exp,
            "ln" => Builtin::Ln,
            "sin" => Builtin::Sin,
            "cos" => Builtin::Cos,
            "abs" => Builtin::Abs,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Const(Number),
    /// Named constant (`a0`, `B0`, `beta0`, ...).
    Param(Name),
    Jet(Jet),
    /// `order`-th time derivative of the opaque function `name(t)`.
    Func {
        name: Name,
        order: u32,
    },
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Expr, BigRational),
    Quotient(Expr, Expr),
    Apply(Builtin, Expr),
}

mod flags {
    pub const T: u16 = 1;
    pub const X0: u16 = 2;
    pub const FUNC: u16 = 1 << 6;
    pub const PARAM: u16 = 1 << 7;
    pub const TRANSCENDENTAL: u16 = 1 << 8;
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Inner {
    node: Node,
    flags: u16,
}

/// Shared, immutable expression node.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Inner>);

impl Expr {
    /// Wraps a node without canonicalising it.
    pub fn from_node(node: Node) -> Expr {
        let flags = match &node {
            Node::Const(_) => 0,
            Node::Param(_) => flags::PARAM,
            Node::Jet(j) => j.flag(),
            Node::Func { .. } => flags::FUNC | flags::T,
            Node::Sum(cs) | Node::Product(cs) => cs.iter().fold(0, |acc, c| acc | c.flags()),
            Node::Power(b, _) => b.flags(),
            Node::Quotient(a, b) => a.flags() | b.flags(),
            Node::Apply(f, a) => {
                let extra = if *f == Builtin::Abs { 0 } else { flags::TRANSCENDENTAL };
                a.flags() | extra
            }
        };
        Expr(Arc::new(Inner { node, flags }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    fn flags(&self) -> u16 {
        self.0.flags
    }

    pub fn num(n: Number) -> Expr {
        Expr::from_node(Node::Const(n))
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(Number::int(n))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::num(Number::ratio(n, d))
    }

    pub fn float(v: f64) -> Expr {
        Expr::num(Number::from_f64(v))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn jet(j: Jet) -> Expr {
        Expr::from_node(Node::Jet(j))
    }

    pub fn t() -> Expr {
        Expr::jet(Jet::T)
    }

    pub fn x() -> Expr {
        Expr::jet(Jet::X(0))
    }

    pub fn xdot() -> Expr {
        Expr::jet(Jet::X(1))
    }

    pub fn xddot() -> Expr {
        Expr::jet(Jet::X(2))
    }

    pub fn param(name: &str) -> Expr {
        Expr::from_node(Node::Param(Arc::from(name)))
    }

    pub fn func(name: &str, order: u32) -> Expr {
        Expr::from_node(Node::Func {
            name: Arc::from(name),
            order,
        })
    }

    pub fn var(v: &Var) -> Expr {
        match v {
            Var::Jet(j) => Expr::jet(*j),
            Var::Param(p) => Expr::from_node(Node::Param(p.clone())),
        }
    }

    // Canonicalising constructors.

    pub fn add(&self, other: &Expr) -> Expr {
        Poly::from_expr(self).add(&Poly::from_expr(other)).to_expr()
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        Poly::from_expr(self).sub(&Poly::from_expr(other)).to_expr()
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        Poly::from_expr(self).mul(&Poly::from_expr(other)).to_expr()
    }

    pub fn div(&self, other: &Expr) -> Expr {
        Poly::from_expr(self)
            .mul(&Poly::from_expr(other).pow(&rat_int(-1)))
            .to_expr()
    }

    pub fn neg(&self) -> Expr {
        Poly::from_expr(self).neg().to_expr()
    }

    pub fn pow(&self, p: BigRational) -> Expr {
        Poly::from_expr(self).pow(&p).to_expr()
    }

    pub fn powi(&self, p: i64) -> Expr {
        self.pow(rat_int(p))
    }

    pub fn scale(&self, c: &Number) -> Expr {
        Poly::from_expr(self).scale(c).to_expr()
    }

    pub fn apply(f: Builtin, arg: &Expr) -> Expr {
        Poly::apply(f, &Poly::from_expr(arg)).to_expr()
    }

    pub fn exp(&self) -> Expr {
        Expr::apply(Builtin::Exp, self)
    }

    pub fn ln(&self) -> Expr {
        Expr::apply(Builtin::Ln, self)
    }

    pub fn sin(&self) -> Expr {
        Expr::apply(Builtin::Sin, self)
    }

    pub fn cos(&self) -> Expr {
        Expr::apply(Builtin::Cos, self)
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a Expr>>(items: I) -> Expr {
        let mut acc = Poly::zero();
        for e in items {
            acc = acc.add(&Poly::from_expr(e));
        }
        acc.to_expr()
    }

    pub fn product<'a, I: IntoIterator<Item = &'a Expr>>(items: I) -> Expr {
        let mut acc = Poly::one();
        for e in items {
            acc = acc.mul(&Poly::from_expr(e));
        }
        acc.to_expr()
    }

    /// Canonical form of an arbitrary tree. Idempotent.
    pub fn canonical(&self) -> Expr {
        Poly::from_expr(self).to_expr()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Const(n) if n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Const(n) if n.is_one())
    }

    pub fn as_number(&self) -> Option<&Number> {
        match self.node() {
            Node::Const(n) => Some(n),
            _ => None,
        }
    }

    /// Structural dependence on a variable (opaque functions depend on `t`).
    pub fn depends_on(&self, v: &Var) -> bool {
        match v {
            Var::Jet(j) => self.flags() & j.flag() != 0,
            Var::Param(p) => self.flags() & flags::PARAM != 0 && self.mentions_param(p),
        }
    }

    fn mentions_param(&self, p: &str) -> bool {
        match self.node() {
            Node::Param(q) => &**q == p,
            Node::Const(_) | Node::Jet(_) | Node::Func { .. } => false,
            Node::Sum(cs) | Node::Product(cs) => cs.iter().any(|c| c.depends_on(&Var::param(p))),
            Node::Power(b, _) => b.depends_on(&Var::param(p)),
            Node::Quotient(a, b) => {
                a.depends_on(&Var::param(p)) || b.depends_on(&Var::param(p))
            }
            Node::Apply(_, a) => a.depends_on(&Var::param(p)),
        }
    }

    pub fn has_funcs(&self) -> bool {
        self.flags() & flags::FUNC != 0
    }

    pub fn has_transcendental(&self) -> bool {
        self.flags() & flags::TRANSCENDENTAL != 0
    }

    /// Highest jet order `k` such that `x^(k)` occurs, if any.
    pub fn max_jet_order(&self) -> Option<u8> {
        (0..=Jet::MAX_ORDER)
            .rev()
            .find(|k| self.flags() & (flags::X0 << k) != 0)
    }

    pub fn params(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Node::Param(p) = e.node() {
                out.insert(p.clone());
            }
        });
        out
    }

    /// Names of opaque functions that occur (any derivative order).
    pub fn func_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        if !self.has_funcs() {
            return out;
        }
        self.visit(&mut |e| {
            if let Node::Func { name, .. } = e.node() {
                out.insert(name.clone());
            }
        });
        out
    }

    fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self.node() {
            Node::Const(_) | Node::Param(_) | Node::Jet(_) | Node::Func { .. } => {}
            Node::Sum(cs) | Node::Product(cs) => cs.iter().for_each(|c| c.visit(f)),
            Node::Power(b, _) => b.visit(f),
            Node::Quotient(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Node::Apply(_, a) => a.visit(f),
        }
    }

    /// Replaces every occurrence of `v` by `by`, canonicalising the result.
    pub fn substitute(&self, v: &Var, by: &Expr) -> Expr {
        self.substitute_raw(v, by).canonical()
    }

    fn substitute_raw(&self, v: &Var, by: &Expr) -> Expr {
        if !self.depends_on(v) {
            return self.clone();
        }
        match self.node() {
            Node::Jet(j) => {
                if Var::Jet(*j) == *v {
                    by.clone()
                } else {
                    self.clone()
                }
            }
            Node::Param(p) => {
                if Var::Param(p.clone()) == *v {
                    by.clone()
                } else {
                    self.clone()
                }
            }
            Node::Const(_) | Node::Func { .. } => self.clone(),
            Node::Sum(cs) => Expr::from_node(Node::Sum(
                cs.iter().map(|c| c.substitute_raw(v, by)).collect(),
            )),
            Node::Product(cs) => Expr::from_node(Node::Product(
                cs.iter().map(|c| c.substitute_raw(v, by)).collect(),
            )),
            Node::Power(b, p) => Expr::from_node(Node::Power(b.substitute_raw(v, by), p.clone())),
            Node::Quotient(a, b) => Expr::from_node(Node::Quotient(
                a.substitute_raw(v, by),
                b.substitute_raw(v, by),
            )),
            Node::Apply(f, a) => Expr::from_node(Node::Apply(*f, a.substitute_raw(v, by))),
        }
    }

    /// Replaces opaque functions by concrete expressions in `t`; derivative
    /// orders are resolved symbolically.
    pub fn instantiate(&self, inst: &Instantiation) -> Expr {
        self.instantiate_raw(inst).canonical()
    }

    fn instantiate_raw(&self, inst: &Instantiation) -> Expr {
        if !self.has_funcs() {
            return self.clone();
        }
        match self.node() {
            Node::Func { name, order } => match inst.derivative(name, *order) {
                Some(e) => e,
                None => self.clone(),
            },
            Node::Const(_) | Node::Param(_) | Node::Jet(_) => self.clone(),
            Node::Sum(cs) => Expr::from_node(Node::Sum(
                cs.iter().map(|c| c.instantiate_raw(inst)).collect(),
            )),
            Node::Product(cs) => Expr::from_node(Node::Product(
                cs.iter().map(|c| c.instantiate_raw(inst)).collect(),
            )),
            Node::Power(b, p) => Expr::from_node(Node::Power(b.instantiate_raw(inst), p.clone())),
            Node::Quotient(a, b) => {
                Expr::from_node(Node::Quotient(a.instantiate_raw(inst), b.instantiate_raw(inst)))
            }
            Node::Apply(f, a) => Expr::from_node(Node::Apply(*f, a.instantiate_raw(inst))),
        }
    }

    /// Guards under which `self` is finite: bases of negative powers must be
    /// nonzero; bases of fractional powers and arguments of `ln` positive.
    pub fn singular_guards(&self) -> Vec<Guard> {
        let mut out: Vec<Guard> = Vec::new();
        let mut push = |g: Guard| {
            if !out.contains(&g) {
                out.push(g);
            }
        };
        self.visit(&mut |e| match e.node() {
            Node::Power(b, p) if b.as_number().is_none() => {
                if !p.is_integer() {
                    push(Guard::positive(b.clone()));
                } else if num_traits::Signed::is_negative(p) {
                    push(Guard::nonzero(b.clone()));
                }
            }
            Node::Quotient(_, b) if b.as_number().is_none() => push(Guard::nonzero(b.clone())),
            Node::Apply(Builtin::Ln, a) if a.as_number().is_none() => push(Guard::positive(a.clone())),
            _ => {}
        });
        out
    }

    /// Count of nodes, used to bound expensive symbolic checks.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl std::str::FromStr for Expr {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Expr, crate::Error> {
        parse(s)
    }
}

pub use diff::{partial, total_dt};
