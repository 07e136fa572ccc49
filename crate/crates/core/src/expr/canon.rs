//! Polynomial-over-atoms normal form.
//!
//! A [`Poly`] is a sum of monomials with numeric coefficients. A
//! [`Monomial`] is a product of atom powers times one merged exponential.
//! Atoms are canonical trees of kind `Const` (only under a non-integer
//! power), `Param`, `Jet`, `Func`, `Sum` (only under a power that is not a
//! small positive integer) and `Apply` (never `exp`).

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::number::rat_int;
use super::{Builtin, Expr, Node, Number};

/// Positive integer powers of sums up to this exponent are expanded.
const EXPAND_LIMIT: i64 = 12;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Monomial {
    pub factors: BTreeMap<Expr, BigRational>,
    /// Argument of the merged exponential factor; zero means no factor.
    pub exp_arg: Poly,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Poly {
    pub terms: BTreeMap<Monomial, Number>,
}

impl Monomial {
    pub fn unit() -> Monomial {
        Monomial::default()
    }

    pub fn is_unit(&self) -> bool {
        self.factors.is_empty() && self.exp_arg.is_zero()
    }

    pub fn atom(base: Expr, p: BigRational) -> Monomial {
        let mut factors = BTreeMap::new();
        if !p.is_zero() {
            factors.insert(base, p);
        }
        Monomial {
            factors,
            exp_arg: Poly::zero(),
        }
    }

    /// Product of two monomials; constant-base atoms whose exponent turns
    /// integral are folded into the returned coefficient.
    fn mul(&self, other: &Monomial) -> (Monomial, Number) {
        let mut factors = self.factors.clone();
        for (b, p) in &other.factors {
            let e = factors.entry(b.clone()).or_insert_with(BigRational::zero);
            *e += p;
            if e.is_zero() {
                factors.remove(b);
            }
        }
        let exp_arg = self.exp_arg.add(&other.exp_arg);
        normalize_const_atoms(Monomial { factors, exp_arg })
    }

    fn pow(&self, p: &BigRational) -> (Monomial, Number) {
        let factors = self
            .factors
            .iter()
            .map(|(b, q)| (b.clone(), q * p))
            .filter(|(_, q)| !q.is_zero())
            .collect();
        let exp_arg = self.exp_arg.scale(&Number::Rational(p.clone()));
        normalize_const_atoms(Monomial { factors, exp_arg })
    }

    pub fn to_expr(&self, coeff: &Number) -> Expr {
        let mut parts: Vec<Expr> = Vec::with_capacity(self.factors.len() + 2);
        for (b, p) in &self.factors {
            if p.is_one() {
                parts.push(b.clone());
            } else {
                parts.push(Expr::from_node(Node::Power(b.clone(), p.clone())));
            }
        }
        if !self.exp_arg.is_zero() {
            parts.push(Expr::from_node(Node::Apply(
                Builtin::Exp,
                self.exp_arg.to_expr(),
            )));
        }
        if parts.is_empty() {
            return Expr::num(coeff.clone());
        }
        if coeff.is_one() && parts.len() == 1 {
            return parts.pop().unwrap();
        }
        if !coeff.is_one() {
            parts.insert(0, Expr::num(coeff.clone()));
        }
        Expr::from_node(Node::Product(parts))
    }
}

fn normalize_const_atoms(mut m: Monomial) -> (Monomial, Number) {
    let mut coeff = Number::one();
    let folds: Vec<Expr> = m
        .factors
        .iter()
        .filter(|(b, p)| matches!(b.node(), Node::Const(_)) && p.is_integer())
        .map(|(b, _)| b.clone())
        .collect();
    for b in folds {
        let p = m.factors.remove(&b).unwrap();
        if let Node::Const(c) = b.node() {
            match c.pow_exact(&p) {
                Some(v) => coeff = coeff.mul(&v),
                None => {
                    // 0^(-k): keep it visible as an atom.
                    m.factors.insert(b.clone(), p);
                }
            }
        }
    }
    (m, coeff)
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn one() -> Poly {
        Poly::constant(Number::one())
    }

    pub fn constant(c: Number) -> Poly {
        let mut p = Poly::zero();
        p.add_term(Monomial::unit(), c);
        p
    }

    pub fn atom(e: Expr) -> Poly {
        Poly::term(Monomial::atom(e, BigRational::one()), Number::one())
    }

    pub fn term(m: Monomial, c: Number) -> Poly {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Number> {
        match self.terms.len() {
            0 => Some(Number::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_unit().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Number) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let s = existing.add(&c);
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (mut big, small) = if self.terms.len() >= other.terms.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn scale(&self, k: &Number) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.mul(k));
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let (m, k) = ma.mul(mb);
                out.add_term(m, ca.mul(cb).mul(&k));
            }
        }
        out
    }

    pub fn mul_term(&self, m: &Monomial, c: &Number) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            let (mm, k) = ma.mul(m);
            out.add_term(mm, ca.mul(c).mul(&k));
        }
        out
    }

    pub fn pow(&self, p: &BigRational) -> Poly {
        if p.is_zero() {
            return Poly::one();
        }
        match self.terms.len() {
            0 => {
                if p.is_positive() {
                    Poly::zero()
                } else {
                    Poly::term(Monomial::atom(Expr::zero(), p.clone()), Number::one())
                }
            }
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                let (mp, k) = m.pow(p);
                let coeff = const_pow(c, p);
                coeff.mul_term(&mp, &k)
            }
            _ => {
                if p.is_integer() && p.is_positive() && p.to_integer() <= EXPAND_LIMIT.into() {
                    let n = p.to_integer().to_u32().unwrap();
                    return self.powu(n);
                }
                let lead = self.terms.values().next().unwrap().clone();
                let normalise = p.is_integer() || !lead.is_negative();
                if normalise && !lead.is_one() {
                    let inv = Number::one().div(&lead).unwrap();
                    let base = self.scale(&inv);
                    let atom = Monomial::atom(base.to_expr(), p.clone());
                    const_pow(&lead, p).mul_term(&atom, &Number::one())
                } else {
                    Poly::term(Monomial::atom(self.to_expr(), p.clone()), Number::one())
                }
            }
        }
    }

    fn powu(&self, n: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn exp(arg: &Poly) -> Poly {
        // exp(c*ln(u) + rest) = u^c * exp(rest) for rational c.
        let mut rest = Poly::zero();
        let mut pulled = Poly::one();
        for (m, c) in &arg.terms {
            let ln_arg = if m.exp_arg.is_zero() && m.factors.len() == 1 && c.is_rational() {
                let (b, q) = m.factors.iter().next().unwrap();
                match b.node() {
                    Node::Apply(Builtin::Ln, u) if q.is_one() => Some(u.clone()),
                    _ => None,
                }
            } else {
                None
            };
            match ln_arg {
                Some(u) => {
                    let r = c.as_rational().unwrap().clone();
                    pulled = pulled.mul(&Poly::from_expr(&u).pow(&r));
                }
                None => rest.add_term(m.clone(), c.clone()),
            }
        }
        if rest.is_zero() {
            return pulled;
        }
        let m = Monomial {
            factors: BTreeMap::new(),
            exp_arg: rest,
        };
        pulled.mul_term(&m, &Number::one())
    }

    pub fn apply(f: Builtin, arg: &Poly) -> Poly {
        match f {
            Builtin::Exp => Poly::exp(arg),
            Builtin::Ln => {
                if let Some(c) = arg.as_constant() {
                    if c.is_one() {
                        return Poly::zero();
                    }
                }
                if arg.terms.len() == 1 {
                    let (m, c) = arg.terms.iter().next().unwrap();
                    if m.factors.is_empty() && !m.exp_arg.is_zero() && !c.is_negative() {
                        let mut out = m.exp_arg.clone();
                        if !c.is_one() {
                            out = out.add(&Poly::atom(Expr::from_node(Node::Apply(
                                Builtin::Ln,
                                Expr::num(c.clone()),
                            ))));
                        }
                        return out;
                    }
                }
                Poly::atom(Expr::from_node(Node::Apply(Builtin::Ln, arg.to_expr())))
            }
            Builtin::Sin => {
                if arg.is_zero() {
                    return Poly::zero();
                }
                if arg.lead_negative() {
                    Poly::atom(Expr::from_node(Node::Apply(Builtin::Sin, arg.neg().to_expr())))
                        .neg()
                } else {
                    Poly::atom(Expr::from_node(Node::Apply(Builtin::Sin, arg.to_expr())))
                }
            }
            Builtin::Cos => {
                if arg.is_zero() {
                    return Poly::one();
                }
                let a = if arg.lead_negative() { arg.neg() } else { arg.clone() };
                Poly::atom(Expr::from_node(Node::Apply(Builtin::Cos, a.to_expr())))
            }
            Builtin::Abs => {
                if let Some(c) = arg.as_constant() {
                    return Poly::constant(c.abs());
                }
                let a = if arg.lead_negative() { arg.neg() } else { arg.clone() };
                Poly::atom(Expr::from_node(Node::Apply(Builtin::Abs, a.to_expr())))
            }
        }
    }

    fn lead_negative(&self) -> bool {
        self.terms
            .values()
            .next()
            .map(|c| c.is_negative())
            .unwrap_or(false)
    }

    pub fn from_expr(e: &Expr) -> Poly {
        match e.node() {
            Node::Const(c) => Poly::constant(c.clone()),
            Node::Param(_) | Node::Jet(_) | Node::Func { .. } => Poly::atom(e.clone()),
            Node::Sum(cs) => {
                let mut acc = Poly::zero();
                for c in cs {
                    acc = acc.add(&Poly::from_expr(c));
                }
                acc
            }
            Node::Product(cs) => {
                let mut acc = Poly::one();
                for c in cs {
                    acc = acc.mul(&Poly::from_expr(c));
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Node::Power(b, p) => Poly::power_of(b, p),
            Node::Quotient(a, b) => Poly::from_expr(a).mul(&Poly::power_of(b, &rat_int(-1))),
            Node::Apply(f, a) => Poly::apply(*f, &Poly::from_expr(a)),
        }
    }

    /// `e^p`. Negative integer powers distribute over products and nested
    /// powers first, so `1/(u)^2` becomes `u^(-2)` instead of the reciprocal
    /// of the expanded square.
    fn power_of(e: &Expr, p: &BigRational) -> Poly {
        if p.is_integer() && p.is_negative() {
            match e.node() {
                Node::Product(cs) => {
                    let mut acc = Poly::one();
                    for c in cs {
                        acc = acc.mul(&Poly::power_of(c, p));
                    }
                    return acc;
                }
                Node::Power(b, q) if q.is_integer() => return Poly::power_of(b, &(q * p)),
                Node::Quotient(a, b) => {
                    return Poly::power_of(a, p).mul(&Poly::power_of(b, &-p));
                }
                _ => {}
            }
        }
        Poly::from_expr(e).pow(p)
    }

    pub fn to_expr(&self) -> Expr {
        match self.terms.len() {
            0 => Expr::zero(),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.to_expr(c)
            }
            _ => Expr::from_node(Node::Sum(
                self.terms.iter().map(|(m, c)| m.to_expr(c)).collect(),
            )),
        }
    }

    /// Largest negative exponent of each sum atom, over all terms.
    pub fn sum_denominators(&self) -> BTreeMap<Expr, BigRational> {
        let mut out: BTreeMap<Expr, BigRational> = BTreeMap::new();
        for m in self.terms.keys() {
            for (b, p) in &m.factors {
                if matches!(b.node(), Node::Sum(_)) && p.is_negative() && p.is_integer() {
                    let e = out.entry(b.clone()).or_insert_with(BigRational::zero);
                    if -p > *e {
                        *e = -p;
                    }
                }
            }
        }
        out
    }
}

fn const_pow(c: &Number, p: &BigRational) -> Poly {
    match c.pow_exact(p) {
        Some(v) => Poly::constant(v),
        None => {
            // Irrational power of a rational: keep c^p as an atom, pulling
            // the sign out for integer-denominator cases we can't express.
            Poly::term(Monomial::atom(Expr::num(c.clone()), p.clone()), Number::one())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::number::rat;

    fn x() -> Poly {
        Poly::atom(Expr::x())
    }

    #[test]
    fn expansion_merges_coefficients() {
        let a = x().add(&Poly::one());
        let sq = a.mul(&a);
        let expected = x()
            .mul(&x())
            .add(&x().scale(&Number::int(2)))
            .add(&Poly::one());
        assert_eq!(sq, expected);
    }

    #[test]
    fn negative_power_of_sum_is_normalised_atom() {
        let s = x().scale(&Number::int(2)).add(&Poly::constant(Number::int(2)));
        let inv = s.pow(&rat_int(-1));
        let s1 = x().add(&Poly::one());
        assert_eq!(inv, s1.pow(&rat_int(-1)).scale(&Number::ratio(1, 2)));
        // Sign normalisation: (x - 1)^-1 == -(1 - x)^-1
        let a = x().sub(&Poly::one());
        let b = Poly::one().sub(&x());
        assert_eq!(a.pow(&rat_int(-1)), b.pow(&rat_int(-1)).neg());
    }

    #[test]
    fn exponentials_merge_and_cancel() {
        let e1 = Poly::exp(&x());
        let e2 = Poly::exp(&x().neg());
        assert_eq!(e1.mul(&e2), Poly::one());
    }

    #[test]
    fn exp_of_ln_pulls_powers() {
        let ln_x = Poly::apply(Builtin::Ln, &x());
        let e = Poly::exp(&ln_x.scale(&Number::int(2)));
        assert_eq!(e, x().mul(&x()));
        assert_eq!(Poly::apply(Builtin::Ln, &Poly::exp(&x())), x());
    }

    #[test]
    fn fractional_constant_powers_fold_when_integral() {
        let r = Poly::constant(Number::int(2)).pow(&rat(1, 2));
        assert_eq!(r.mul(&r), Poly::constant(Number::int(2)));
    }

    #[test]
    fn odd_even_trig_normalisation() {
        let s = Poly::apply(Builtin::Sin, &x().neg());
        assert_eq!(s, Poly::apply(Builtin::Sin, &x()).neg());
        let c = Poly::apply(Builtin::Cos, &x().neg());
        assert_eq!(c, Poly::apply(Builtin::Cos, &x()));
    }
}
