use num_traits::One;

use super::number::rat_int;
use super::{Builtin, Expr, Jet, Node, Number, Poly, Var};

/// Partial derivative with respect to `v`. Opaque functions depend on `t`
/// only: `d/dt f^(k) = f^(k+1)`, and they are constant for the jets.
pub fn partial(e: &Expr, v: &Var) -> Expr {
    if !e.depends_on(v) {
        return Expr::zero();
    }
    Poly::from_expr(e).diff(v).to_expr()
}

/// Total time derivative along the jet:
/// `d/dt = ∂t + x' ∂x + x'' ∂x' + x''' ∂x''`.
///
/// The expression must not contain `x'''` (its derivative has no jet slot).
pub fn total_dt(e: &Expr) -> Expr {
    Poly::from_expr(e).total_dt().to_expr()
}

impl Poly {
    pub(crate) fn diff(&self, v: &Var) -> Poly {
        let mut acc = Poly::zero();
        for (m, c) in &self.terms {
            for (a, k) in &m.factors {
                if !a.depends_on(v) {
                    continue;
                }
                let da = diff_atom(a, v);
                if da.is_zero() {
                    continue;
                }
                let mut rest = m.clone();
                let lowered = k - num_rational::BigRational::one();
                if num_traits::Zero::is_zero(&lowered) {
                    rest.factors.remove(a);
                } else {
                    rest.factors.insert(a.clone(), lowered);
                }
                let coeff = c.mul(&Number::Rational(k.clone()));
                acc = acc.add(&da.mul_term(&rest, &coeff));
            }
            if !m.exp_arg.is_zero() {
                let darg = m.exp_arg.diff(v);
                if !darg.is_zero() {
                    acc = acc.add(&darg.mul_term(m, c));
                }
            }
        }
        acc
    }

    pub(crate) fn depends_on(&self, v: &Var) -> bool {
        self.terms.keys().any(|m| {
            m.factors.keys().any(|a| a.depends_on(v)) || m.exp_arg.depends_on(v)
        })
    }

    pub(crate) fn total_dt(&self) -> Poly {
        let mut acc = self.diff(&Var::t());
        for k in 0..Jet::MAX_ORDER {
            let v = Var::Jet(Jet::X(k));
            if !self.depends_on(&v) {
                continue;
            }
            let d = self.diff(&v);
            let next = Poly::atom(Expr::jet(Jet::X(k + 1)));
            acc = acc.add(&d.mul(&next));
        }
        acc
    }
}

fn diff_atom(a: &Expr, v: &Var) -> Poly {
    match a.node() {
        Node::Const(_) => Poly::zero(),
        Node::Param(p) => {
            if *v == Var::Param(p.clone()) {
                Poly::one()
            } else {
                Poly::zero()
            }
        }
        Node::Jet(j) => {
            if *v == Var::Jet(*j) {
                Poly::one()
            } else {
                Poly::zero()
            }
        }
        Node::Func { name, order } => {
            if *v == Var::t() {
                Poly::atom(Expr::from_node(Node::Func {
                    name: name.clone(),
                    order: order + 1,
                }))
            } else {
                Poly::zero()
            }
        }
        Node::Apply(f, u) => {
            let up = Poly::from_expr(u);
            let du = up.diff(v);
            if du.is_zero() {
                return Poly::zero();
            }
            let outer = match f {
                Builtin::Exp => Poly::exp(&up),
                Builtin::Ln => up.pow(&rat_int(-1)),
                Builtin::Sin => Poly::apply(Builtin::Cos, &up),
                Builtin::Cos => Poly::apply(Builtin::Sin, &up).neg(),
                Builtin::Abs => up.mul(&Poly::apply(Builtin::Abs, &up).pow(&rat_int(-1))),
            };
            outer.mul(&du)
        }
        // Sums (and anything else reaching here) differentiate through
        // their expansion.
        _ => Poly::from_expr(a).diff(v),
    }
}
