//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion, then
//! fails if any criterion failed. Lines go straight to stderr so they show
//! up without `--nocapture`.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nullag::audit;
use nullag::composer::{corollary1_eom, euler_lagrange_eom, prop3_eom, prop3_factor, solve_leading, permissible, Composer, Provenance};
use nullag::construct::{build_nonstandard_null, build_null, harmonic, nonstandard_harmonic, solve_c, FractionSpec};
use nullag::corpus::builtin;
use nullag::expr::{equivalent, is_zero, parse, total_dt, Bindings, Domain, Equivalence, Expr, Number};
use nullag::numint::{self, oracle, Ivp};
use nullag::systems::{
    classify_constant, comparison_catalog, derive_gamma1, gamma2_residual, solve_gamma2, Classification, ComparedSystem,
    TripleConstants,
};
use nullag::variational::{bump_family, is_null, null_condition_residual, path_independence_check, Lagrangian, NullPair, NullVerdict, Path};
use nullag::Settings;

// Pinned tolerances.
const RESIDUAL_TOL: f64 = 1e-9;
const CONSTRAINT_TOL: f64 = 1e-7;
const ENDPOINT_TOL: f64 = 1e-8;
const DRIFT_TOL: f64 = 1e-8;
const ROUTE_TOL: f64 = 1e-8;
const ACTION_TOL: f64 = 1e-7;
const ACTION_FAIL: f64 = 1e-3;
const RATIO_RANGE: (f64, f64) = (14.0, 18.0);
const NULLITY_BUDGET: Duration = Duration::from_secs(10);
const SIMULATION_BUDGET: Duration = Duration::from_secs(5);
const H_FINE: f64 = 1e-3;
const H_RATIO: f64 = 0.05;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&Settings) -> Outcome);

fn p(s: &str) -> Expr {
    parse(s).unwrap()
}

fn settings() -> Settings {
    Settings { eps_eq: RESIDUAL_TOL, eps_act: ACTION_TOL, eps_drift: DRIFT_TOL, ..Settings::default() }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn null_ok(l: &Lagrangian, what: &str, s: &Settings) -> Result<(), String> {
    let r = is_null(l, s).map_err(|e| format!("{what}: {e}"))?;
    ensure(r.is_null(), || format!("{what}: {:?}, residual {}", r.verdict, r.residual))?;
    if r.verdict == NullVerdict::NumericallyNull {
        ensure(r.check.points_per_instantiation >= 50 && r.check.instantiations.len() >= 6, || {
            format!("{what}: numeric verdict on too few samples")
        })?;
        ensure(r.check.max_abs_diff <= RESIDUAL_TOL, || format!("{what}: residual {}", r.check.max_abs_diff))?;
    }
    Ok(())
}

fn nullity_suite(s: &Settings) -> Outcome {
    let start = Instant::now();
    let mut count = 0;
    let d = Domain::default();
    for (name, b, f) in [
        ("constant", "c1", "c3"),
        ("linear", "f1(t)*x + f2(t)*t + f3(t)", "f4(t)"),
        ("quadratic", "f1(t)*x^2 + f2(t)*t + f3(t)", "f4(t)"),
        ("trig_exp", "f1(t)*sin(x) + f2(t)*exp(x)*t + f3(t)", "f4(t)"),
    ] {
        let base = build_null(&p(b), &p(f), &d, s).map_err(|e| format!("{name}: {e}"))?;
        null_ok(&base.lagrangian(), name, s)?;
        count += 1;
        for n in 1..=4 {
            match harmonic(&base, n, s) {
                Ok(h) => {
                    null_ok(&h.lagrangian(), &format!("{name} n={n}"), s)?;
                    count += 1;
                }
                // constant B has no spatial derivatives to feed higher orders
                Err(nullag::Error::OrderCap { .. }) if name == "constant" => {}
                Err(e) => return Err(format!("{name} n={n}: {e}")),
            }
        }
    }
    for (name, spec) in [
        ("fraction", FractionSpec::generic()),
        ("log_gauge", FractionSpec::new(p("a1"), p("a2"), p("0"), p("a4")).unwrap()),
    ] {
        let base = build_nonstandard_null(&spec, &p("f(t)"), &d, s).map_err(|e| format!("{name}: {e}"))?;
        null_ok(&base.lagrangian(), name, s)?;
        let h1 = nonstandard_harmonic(&base, 1, s).map_err(|e| format!("{name} n=1: {e}"))?;
        null_ok(&h1.lagrangian(), &format!("{name} n=1"), s)?;
        count += 2;
    }
    let took = start.elapsed();
    ensure(took < NULLITY_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("{count} Lagrangians null in {took:.1?}"))
}

/// Random generating function built from terms whose `x`-antiderivatives
/// stay in the supported class.
fn random_b(rng: &mut ChaCha8Rng) -> Expr {
    const TERMS: [&str; 10] = [
        "x", "x^2", "x^3", "t*x", "t^2", "sin(x)", "exp(x)", "t*exp(x)", "sin(t)*x", "exp(t/2)*x^2",
    ];
    let n = rng.gen_range(1..=4);
    let mut b = Expr::num(Number::from(rng.gen_range(-3i64..=3)));
    for _ in 0..n {
        let k: i64 = rng.gen_range(1..=5) * if rng.gen_bool(0.5) { 1 } else { -1 };
        b = b.add(&Expr::num(Number::from(k)).mul(&p(TERMS[rng.gen_range(0..TERMS.len())])));
    }
    b
}

fn null_condition(s: &Settings) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let d = Domain::default();
    let mut pairs = Vec::new();
    while pairs.len() < 100 {
        let b = random_b(&mut rng);
        if !b.depends_on(&nullag::expr::Var::x()) {
            continue;
        }
        let sol = solve_c(&b, &d).map_err(|e| format!("solve_c({b}): {e}"))?;
        let r = is_zero(&null_condition_residual(&b, &sol.c), &d, s).map_err(|e| e.to_string())?;
        ensure(r.verdict.holds(), || format!("null condition fails for B = {b}"))?;
        let mut dd = d.clone();
        for g in sol.guards {
            dd.push_guard(g);
        }
        let pair = NullPair::certify(b.clone(), sol.c, Expr::zero(), dd, s).map_err(|e| format!("{b}: {e}"))?;
        null_ok(&pair.lagrangian(), &format!("B = {b}"), s)?;
        pairs.push(pair);
    }
    const DELTAS: [&str; 4] = ["x", "1", "t", "sin(x)"];
    for (i, pair) in pairs.iter().take(20).enumerate() {
        let delta = Expr::num(Number::from(rng.gen_range(1i64..=4))).mul(&p(DELTAS[i % DELTAS.len()]));
        let c = pair.c.add(&delta);
        let r = is_zero(&null_condition_residual(&pair.b, &c), &pair.domain, s).map_err(|e| e.to_string())?;
        ensure(r.verdict == Equivalence::Distinct && r.witness.is_some(), || {
            format!("perturbed pair for B = {} not flagged", pair.b)
        })?;
        let body = pair.b.mul(&Expr::xdot()).add(&c.mul(&Expr::x()));
        let l = Lagrangian::new(body, pair.domain.clone()).unwrap();
        let v = is_null(&l, s).map_err(|e| e.to_string())?;
        ensure(v.verdict == NullVerdict::NotNull && v.witness().is_some(), || format!("perturbed B = {} passes", pair.b))?;
    }
    Ok("100 random B certified, 20 perturbed pairs rejected with witness".into())
}

fn corollary_expansion(s: &Settings) -> Outcome {
    let corpus = builtin();
    for r in &corpus {
        let pair = r.build(s).map_err(|e| format!("{}: {e}", r.name))?;
        let (_, check) = corollary1_eom(&pair, s).map_err(|e| format!("{}: {e}", r.name))?;
        ensure(check.verdict == Equivalence::ProvenEqual, || format!("{}: {:?}", r.name, check.verdict))?;
    }
    let d = Domain::default().with_x(0.5, 2.0).with_xdot(0.5, 2.0);
    let inputs = ["x'*exp(x)", "(x' + x)*exp(t)", "2*x*x' + 1", "x'/x"];
    let mut checked = 0;
    for src in inputs {
        let l = Lagrangian::new(p(src), d.clone()).unwrap();
        null_ok(&l, src, s)?;
        for f in [Composer::exp(), Composer::ln(), Composer::reciprocal(), Composer::power(3)] {
            let name = format!("{:?} of {src}", f.kind);
            ensure(permissible(&f, &l, s).map_err(|e| e.to_string())?, || format!("{name}: factor vanishes"))?;
            let eom = prop3_eom(&f, &l).map_err(|e| format!("{name}: {e}"))?;
            let factored = prop3_factor(&f, &l).mul(&total_dt(&l.body));
            let mut s50 = s.clone();
            s50.n_eq = 50;
            let r = equivalent(&eom.residual, &factored, &eom.domain, &s50).map_err(|e| format!("{name}: {e}"))?;
            ensure(r.verdict.holds(), || format!("{name}: {:?}", r.verdict))?;
            checked += 1;
        }
    }
    Ok(format!("{} corpus records expand exactly; {checked} compositions factor", corpus.len()))
}

fn catalog(s: &Settings) -> Outcome {
    use Classification::*;
    for ((a, b, g), want) in [
        (("0", "0", "0"), Inertia),
        (("0", "2", "1"), DampedOscillatorTied),
        (("0", "b0", "b0^2/4"), DampedOscillatorTied),
        (("a0", "0", "0"), QuadraticDamping),
        (("0", "0", "w^2"), NoNullLagrangian),
    ] {
        let case = classify_constant(&p(a), &p(b), &p(g), s).map_err(|e| e.to_string())?;
        ensure(case.classification == want, || format!("({a}, {b}, {g}) gave {:?}", case.classification))?;
    }
    let d = Domain::default().with_t(0.5, 3.0);
    for beta in ["b0", "2/t", "t", "sin(t)"] {
        let beta = p(beta);
        let gamma = derive_gamma1(&beta);
        let c = beta.mul(&beta).scale(&Number::ratio(1, 4)).add(&nullag::expr::partial(&beta, &nullag::expr::Var::t()).scale(&Number::ratio(1, 2))).sub(&gamma);
        let r = is_zero(&c, &d, s).map_err(|e| e.to_string())?;
        ensure(r.verdict.holds() && r.max_abs_diff <= CONSTRAINT_TOL, || format!("gamma1 constraint for {beta}"))?;
    }
    let dx = Domain::default().with_x(0.5, 3.0);
    for (a, b) in [("a0/x", "b0"), ("0", "b0"), ("a0", "0"), ("2/x", "3"), ("1/x", "2")] {
        let g = solve_gamma2(&p(a), &p(b), &p("c1")).map_err(|e| e.to_string())?;
        let r = is_zero(&gamma2_residual(&p(a), &p(b), &g), &dx, s).map_err(|e| e.to_string())?;
        ensure(r.verdict.holds() && r.max_abs_diff <= CONSTRAINT_TOL, || format!("gamma2 constraint for alpha2 = {a}"))?;
    }
    for (a, printed) in [("a0/x", "b0^2/(4*(1 + a0)) + c1*x^(-1 - a0)"), ("0", "c1/x + b0^2/4")] {
        let g = solve_gamma2(&p(a), &p("b0"), &p("c1")).map_err(|e| e.to_string())?;
        let r = equivalent(&g, &p(printed), &dx, s).map_err(|e| e.to_string())?;
        ensure(r.verdict == Equivalence::ProvenEqual, || format!("alpha2 = {a}: {:?}", r.verdict))?;
    }
    Ok("classification, constraint round trips and printed gamma2 cases match".into())
}

fn conservation(s: &Settings) -> Outcome {
    let mut lines = Vec::new();
    for (name, pair, ic, exact, level) in [
        ("tied oscillator", "oscillator", (0.0, 1.0, 0.0), 2.0 / 1f64.exp(), 1.0),
        ("quadratic damping", "quadratic", (0.0, 0.0, 2.0), 3f64.ln(), 2.0),
    ] {
        let start = Instant::now();
        let k = TripleConstants { c: 1.0, alpha0: 1.0, beta0: 2.0, ..TripleConstants::default() };
        let triple = comparison_catalog(pair.parse().unwrap(), &k, s).map_err(|e| e.to_string())?;
        let (traj, drift) = numint::simulate(&triple.null, ic, 5.0, H_FINE, s).map_err(|e| format!("{name}: {e}"))?;
        let i1 = traj.t.iter().position(|t| (t - 1.0).abs() < 1e-9).ok_or("no grid point at t = 1")?;
        let err = (traj.x[i1] - exact).abs();
        ensure(err <= ENDPOINT_TOL, || format!("{name}: x(1) off by {err:e}"))?;
        ensure((drift.initial - level).abs() <= 1e-12, || format!("{name}: L0 = {}", drift.initial))?;
        ensure(drift.max_abs_drift <= DRIFT_TOL, || format!("{name}: drift {:e}", drift.max_abs_drift))?;
        let took = start.elapsed();
        ensure(took < SIMULATION_BUDGET, || format!("{name}: took {took:?}"))?;
        lines.push(format!("{name} x(1) err {err:.1e} drift {:.1e}", drift.max_abs_drift));
    }
    Ok(lines.join("; "))
}

fn route_equivalence(s: &Settings) -> Outcome {
    let k = TripleConstants::default();
    let mut lines = Vec::new();
    for (sys, ic) in [
        (ComparedSystem::Inertia, (0.0, 0.0, 2.0)),
        (ComparedSystem::QuadraticDamping, (0.0, 0.0, 2.0)),
        (ComparedSystem::DampedOscillatorTied, (0.0, 1.0, 0.0)),
    ] {
        let triple = comparison_catalog(sys, &k, s).map_err(|e| e.to_string())?;
        let mut trajs = Vec::new();
        for r in &triple.routes {
            let eom = match r.provenance {
                Provenance::Corollary1 => corollary1_eom(&triple.null, s).map_err(|e| e.to_string())?.0,
                _ => euler_lagrange_eom(&r.lagrangian).map_err(|e| e.to_string())?,
            };
            let ex = solve_leading(&eom, s).map_err(|e| format!("{sys:?}/{}: {e}", r.name))?;
            let ivp = Ivp::new(ex.g, ic, 5.0, H_FINE).map_err(|e| e.to_string())?;
            trajs.push(numint::integrate(&ivp, s).map_err(|e| format!("{sys:?}/{}: {e}", r.name))?);
        }
        ensure(trajs.len() >= 3, || format!("{sys:?}: only {} routes", trajs.len()))?;
        let mut worst: f64 = 0.0;
        for a in &trajs {
            for b in &trajs {
                let d = numint::compare(a, b).map_err(|e| e.to_string())?;
                worst = worst.max(d.max_x).max(d.max_v);
            }
        }
        ensure(worst <= ROUTE_TOL, || format!("{sys:?}: deviation {worst:e}"))?;
        lines.push(format!("{sys:?} {worst:.1e}"));
    }
    Ok(lines.join(", "))
}

fn path_independence(s: &Settings) -> Outcome {
    let cases = [
        ("quadratic_damping", Bindings::new().param("B0", 1).param("a0", 1)),
        ("tied_oscillator", Bindings::new().param("B0", 1).param("b0", 2)),
        (
            "linear",
            Bindings::new().func("f1", p("sin(t)")).func("f2", p("1 + t^2")).func("f3", p("exp(t/2)")).func("f4", p("t")),
        ),
    ];
    let base = Path::line(0.0, 1.0, 0.2, 1.0).unwrap();
    let paths = bump_family(&base, 0.5, 10, s.seed).unwrap();
    let corpus = builtin();
    let mut worst: f64 = 0.0;
    for (name, b) in &cases {
        let rec = corpus.iter().find(|r| r.name == *name).unwrap();
        let l = rec.build(s).map_err(|e| e.to_string())?.lagrangian();
        for q in &paths {
            let r = path_independence_check(&l, &base, q, b, s).map_err(|e| format!("{name}: {e}"))?;
            ensure(r.passes && r.difference <= ACTION_TOL, || format!("{name}: action difference {:e}", r.difference))?;
            worst = worst.max(r.difference);
        }
    }
    let kinetic = Lagrangian::parse("x'^2/2").unwrap();
    let mut biggest: f64 = 0.0;
    for q in &paths {
        let r = path_independence_check(&kinetic, &base, q, &Bindings::new(), s).map_err(|e| e.to_string())?;
        biggest = biggest.max(r.difference);
    }
    ensure(biggest > ACTION_FAIL, || format!("kinetic term only differs by {biggest:e}"))?;
    Ok(format!("null max difference {worst:.1e}; kinetic term differs by {biggest:.2}"))
}

fn convergence(s: &Settings) -> Outcome {
    let (t1, ic) = (1.0, (0.0, 1.0, 0.0));
    let r_osc = numint::convergence_ratio(&p("-2*x' - x"), ic, t1, H_RATIO, oracle::tied_oscillator(2.0, 1.0, 0.0, t1), s)
        .map_err(|e| e.to_string())?;
    let ic = (0.0, 0.0, 2.0);
    let r_quad = numint::convergence_ratio(&p("-x'^2"), ic, t1, H_RATIO, oracle::quadratic_damping(1.0, 0.0, 2.0, t1), s)
        .map_err(|e| e.to_string())?;
    for (name, r) in [("oscillator", r_osc), ("quadratic", r_quad)] {
        ensure((RATIO_RANGE.0..=RATIO_RANGE.1).contains(&r), || format!("{name} ratio {r:.2}"))?;
    }
    Ok(format!("oscillator {r_osc:.2}, quadratic {r_quad:.2}"))
}

fn audit_report(s: &Settings) -> Outcome {
    let r = audit::run(s).map_err(|e| e.to_string())?;
    for id in ["oscillator_null_factor", "gamma2_exponent_sign", "fraction_denominator"] {
        let item = r.get(id).ok_or_else(|| format!("{id} missing"))?;
        ensure(item.detected(), || format!("{id} not detected"))?;
        ensure(item.corrected_passes, || format!("{id} correction fails"))?;
    }
    let extra = r.items.iter().filter(|i| i.detected()).count();
    Ok(format!("{extra} of {} printed forms flagged, corrections hold", r.items.len()))
}

#[test]
fn acceptance() {
    let s = settings();
    let criteria: [Criterion; 9] = [
        ("nullity suite", nullity_suite),
        ("null condition", null_condition),
        ("corollary expansion", corollary_expansion),
        ("system catalog", catalog),
        ("conservation", conservation),
        ("route equivalence", route_equivalence),
        ("path independence", path_independence),
        ("convergence order", convergence),
        ("audit", audit_report),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr().lock();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let line = match run(&s) {
            Ok(detail) => format!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed.push(i + 1);
                format!("criterion {}: FAIL  {name}: {why}", i + 1)
            }
        };
        writeln!(err, "{line}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
