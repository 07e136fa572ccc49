//! Tri-state equality: symbolic normal forms first, then seeded random
//! sampling on a guarded domain.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::canon::{Monomial, Poly};
use super::eval::{CompiledExpr, Instantiation, SlotLayout};
use super::{Domain, Expr, Name, Node, Number, Point};
use crate::error::{Error, Result};
use crate::Settings;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Equivalence {
    ProvenEqual,
    NumericallyEqual,
    Distinct,
}

impl Equivalence {
    pub fn holds(self) -> bool {
        self != Equivalence::Distinct
    }
}

/// How far the symbolic stage got.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolicCheck {
    /// Canonical forms coincide.
    Canonical,
    /// The difference vanishes after multiplying out its denominators.
    ClearedDenominators,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivReport {
    pub verdict: Equivalence,
    pub symbolic: SymbolicCheck,
    pub seed: u64,
    pub eps_eq: f64,
    pub eps_guard: f64,
    pub points_per_instantiation: usize,
    pub points_checked: usize,
    pub max_abs_diff: f64,
    pub instantiations: Vec<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Point>,
}

impl EquivReport {
    fn proven(symbolic: SymbolicCheck, s: &Settings) -> Self {
        EquivReport {
            verdict: Equivalence::ProvenEqual,
            symbolic,
            seed: s.seed,
            eps_eq: s.eps_eq,
            eps_guard: s.eps_guard,
            points_per_instantiation: 0,
            points_checked: 0,
            max_abs_diff: 0.0,
            instantiations: Vec::new(),
            witness: None,
        }
    }
}

/// Cap on intermediate term counts while clearing denominators.
const CLEAR_TERM_BUDGET: usize = 20_000;

/// Decides `e1 = e2` on `d`.
pub fn equivalent(e1: &Expr, e2: &Expr, d: &Domain, s: &Settings) -> Result<EquivReport> {
    let diff = Poly::from_expr(e1).sub(&Poly::from_expr(e2));
    if diff.is_zero() {
        return Ok(EquivReport::proven(SymbolicCheck::Canonical, s));
    }
    if clears_to_zero(&diff) {
        return Ok(EquivReport::proven(SymbolicCheck::ClearedDenominators, s));
    }
    numeric(e1, e2, d, s)
}

/// Decides `e = 0` on `d`; the numeric tolerance is absolute.
pub fn is_zero(e: &Expr, d: &Domain, s: &Settings) -> Result<EquivReport> {
    equivalent(&Expr::zero(), e, d, s)
}

fn clears_to_zero(diff: &Poly) -> bool {
    let mut p = diff.clone();
    for _ in 0..3 {
        let dens = p.sum_denominators();
        if dens.is_empty() {
            return false;
        }
        let mut m = Monomial::unit();
        for (s, k) in dens {
            m.factors.insert(s, k);
        }
        p = p.mul_term(&m, &Number::one());
        p = match expand_sum_powers(&p) {
            Some(q) => q,
            None => return false,
        };
        if p.is_zero() {
            return true;
        }
    }
    false
}

/// Multiplies out positive integer powers of sum atoms.
fn expand_sum_powers(p: &Poly) -> Option<Poly> {
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        let mut rest = m.clone();
        let mut acc = Poly::one();
        for (b, k) in &m.factors {
            if !matches!(b.node(), Node::Sum(_)) || !k.is_integer() || !k.is_positive() {
                continue;
            }
            let n = k.to_integer().to_u32()?;
            rest.factors.remove(b);
            let base = Poly::from_expr(b);
            for _ in 0..n {
                acc = acc.mul(&base);
            }
            if acc.terms.len() > CLEAR_TERM_BUDGET {
                return None;
            }
        }
        out = out.add(&acc.mul_term(&rest, c));
        if out.terms.len() > CLEAR_TERM_BUDGET {
            return None;
        }
    }
    Some(out)
}

fn numeric(e1: &Expr, e2: &Expr, d: &Domain, s: &Settings) -> Result<EquivReport> {
    let mut names: BTreeSet<Name> = e1.func_names();
    names.extend(e2.func_names());
    let mut params: BTreeSet<Name> = e1.params();
    params.extend(e2.params());
    for g in &d.guards {
        names.extend(g.expr.func_names());
        params.extend(g.expr.params());
    }
    let params: Vec<Name> = params.into_iter().collect();
    let layout = SlotLayout::new(&params);

    let rounds = if names.is_empty() {
        1
    } else {
        Instantiation::standard_set().len()
    };
    let mut report = EquivReport {
        verdict: Equivalence::NumericallyEqual,
        symbolic: SymbolicCheck::Undecided,
        seed: s.seed,
        eps_eq: s.eps_eq,
        eps_guard: s.eps_guard,
        points_per_instantiation: s.n_eq,
        points_checked: 0,
        max_abs_diff: 0.0,
        instantiations: Vec::new(),
        witness: None,
    };
    let max_attempts = s.n_eq * 200;
    let mut attempts_total = 0;

    for k in 0..rounds {
        let inst = Instantiation::rotation(&names, k);
        let c1 = CompiledExpr::compile(e1, &inst, &layout, s.eps_guard)?;
        let c2 = CompiledExpr::compile(e2, &inst, &layout, s.eps_guard)?;
        let guards = d
            .guards
            .iter()
            .map(|g| Ok((CompiledExpr::compile(&g.expr, &inst, &layout, s.eps_guard)?, g)))
            .collect::<Result<Vec<_>>>()?;
        report.instantiations.push(inst.describe());

        let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(k as u64));
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < s.n_eq && attempts < max_attempts {
            attempts += 1;
            let slots = d.draw(&params, &mut rng);
            let ok = guards.iter().all(|(c, g)| match c.eval(&slots) {
                Ok(v) => g.admits(v, s.eps_guard),
                Err(_) => false,
            });
            if !ok {
                continue;
            }
            let (v1, v2) = match (c1.eval(&slots), c2.eval(&slots)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue,
            };
            accepted += 1;
            let diff = (v1 - v2).abs();
            report.max_abs_diff = report.max_abs_diff.max(diff);
            if diff > s.eps_eq * (1.0 + v1.abs()) {
                let mut w = Point::from_slots(&slots, &params);
                w.functions = inst.describe();
                w.lhs = Some(v1);
                w.rhs = Some(v2);
                report.points_checked += accepted;
                report.verdict = Equivalence::Distinct;
                report.witness = Some(w);
                return Ok(report);
            }
        }
        attempts_total += attempts;
        report.points_checked += accepted;
    }
    if report.points_checked == 0 {
        return Err(Error::InfeasibleDomain {
            attempts: attempts_total,
        });
    }
    Ok(report)
}

/// Visits seeded guarded points of `d` under the standard instantiations with
/// the values of `exprs`, skipping points where any of them fails to evaluate.
/// Stops when `visit` returns `false`; returns the number of points visited.
pub fn sample_values(
    exprs: &[Expr],
    d: &Domain,
    s: &Settings,
    mut visit: impl FnMut(&Point, &[f64]) -> bool,
) -> Result<usize> {
    let mut names: BTreeSet<Name> = BTreeSet::new();
    let mut params: BTreeSet<Name> = BTreeSet::new();
    for e in exprs.iter().chain(d.guards.iter().map(|g| &g.expr)) {
        names.extend(e.func_names());
        params.extend(e.params());
    }
    let params: Vec<Name> = params.into_iter().collect();
    let layout = SlotLayout::new(&params);
    let rounds = if names.is_empty() { 1 } else { Instantiation::standard_set().len() };
    let mut visited = 0;
    let mut attempts_total = 0;
    for k in 0..rounds {
        let inst = Instantiation::rotation(&names, k);
        let compiled = exprs
            .iter()
            .map(|e| CompiledExpr::compile(e, &inst, &layout, s.eps_guard))
            .collect::<Result<Vec<_>>>()?;
        let guards = d
            .guards
            .iter()
            .map(|g| Ok((CompiledExpr::compile(&g.expr, &inst, &layout, s.eps_guard)?, g)))
            .collect::<Result<Vec<_>>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(k as u64));
        let mut accepted = 0;
        let mut attempts = 0;
        let mut values = Vec::with_capacity(exprs.len());
        while accepted < s.n_eq && attempts < s.n_eq * 200 {
            attempts += 1;
            let slots = d.draw(&params, &mut rng);
            let ok = guards.iter().all(|(c, g)| c.eval(&slots).is_ok_and(|v| g.admits(v, s.eps_guard)));
            if !ok {
                continue;
            }
            values.clear();
            for c in &compiled {
                match c.eval(&slots) {
                    Ok(v) => values.push(v),
                    Err(_) => break,
                }
            }
            if values.len() < compiled.len() {
                continue;
            }
            accepted += 1;
            visited += 1;
            let mut pt = Point::from_slots(&slots, &params);
            pt.functions = inst.describe();
            if !visit(&pt, &values) {
                return Ok(visited);
            }
        }
        attempts_total += attempts;
    }
    if visited == 0 {
        return Err(Error::InfeasibleDomain { attempts: attempts_total });
    }
    Ok(visited)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, total_dt, Guard};

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn expansion_is_proven() {
        let r = equivalent(&p("(x+1)^2"), &p("x^2 + 2*x + 1"), &Domain::default(), &Settings::default()).unwrap();
        assert_eq!(r.verdict, Equivalence::ProvenEqual);
        assert_eq!(r.symbolic, SymbolicCheck::Canonical);
    }

    #[test]
    fn log_gauge_lift_is_proven() {
        let phi = p("a1/a2*ln(a2*x + a4)");
        let d = Domain::default().guard(Guard::positive(p("a2*x + a4")));
        let r = equivalent(&total_dt(&phi), &p("a1*x'/(a2*x + a4)"), &d, &Settings::default()).unwrap();
        assert_eq!(r.verdict, Equivalence::ProvenEqual);
    }

    #[test]
    fn coefficient_mismatch_is_distinct() {
        let d = Domain::default().fix("b0", 2.0).fix("g0", 3.0);
        let r = equivalent(
            &p("x'' + b0*x' + b0^2/4*x"),
            &p("x'' + b0*x' + g0*x"),
            &d,
            &Settings::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Equivalence::Distinct);
        let w = r.witness.unwrap();
        assert!((w.lhs.unwrap() - w.rhs.unwrap()).abs() > 1e-3);
    }

    #[test]
    fn cleared_denominators() {
        // 1/(x+1) - 1/(x+2) = 1/((x+1)(x+2)); canonical forms differ.
        let lhs = p("1/(x + 1) - 1/(x + 2)");
        let rhs = p("1/(x^2 + 3*x + 2)");
        let r = equivalent(&lhs, &rhs, &Domain::default(), &Settings::default()).unwrap();
        assert_eq!(r.verdict, Equivalence::ProvenEqual);
        assert_eq!(r.symbolic, SymbolicCheck::ClearedDenominators);
    }

    #[test]
    fn numeric_fallback_for_identities() {
        let r = is_zero(&p("sin(x)^2 + cos(x)^2 - 1"), &Domain::default(), &Settings::default()).unwrap();
        assert_eq!(r.verdict, Equivalence::NumericallyEqual);
        assert!(r.points_checked >= 50);
    }

    #[test]
    fn functions_use_all_instantiations() {
        let r = is_zero(&p("f1(t)*sin(x)^2 + f1(t)*cos(x)^2 - f1(t)"), &Domain::default(), &Settings::default()).unwrap();
        assert_eq!(r.instantiations.len(), 6);
        assert_eq!(r.points_checked, 300);
    }

    #[test]
    fn infeasible_domain() {
        let d = Domain::default().guard(Guard::positive(p("-x")));
        let err = is_zero(&p("sin(x)^2 + cos(x)^2 - 1"), &d, &Settings::default()).unwrap_err();
        assert!(matches!(err, Error::InfeasibleDomain { .. }));
    }

    #[test]
    fn sampled_values_respect_guards() {
        let d = Domain::default().with_x(-1.0, 1.0).guard(Guard::positive(p("x")));
        let mut seen = 0;
        let n = sample_values(&[p("x^2"), p("t")], &d, &Settings::default(), |pt, v| {
            assert!(pt.x > 0.0 && (v[0] - pt.x * pt.x).abs() < 1e-15 && v[1] == pt.t);
            seen += 1;
            true
        })
        .unwrap();
        assert_eq!((n, seen), (50, 50));
    }

    #[test]
    fn reproducible_under_seed() {
        let d = Domain::default();
        let s = Settings::default();
        let a = equivalent(&p("sin(x)"), &p("x"), &d, &s).unwrap();
        let b = equivalent(&p("sin(x)"), &p("x"), &d, &s).unwrap();
        assert_eq!(a.witness, b.witness);
    }
}
