use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use nullag::composer::{
    compose, corollary1_eom, euler_lagrange_eom, harmonic_eom, prop3_eom, solve_leading, Composer,
    EquationOfMotion, Provenance,
};
use nullag::construct::{build_null, harmonic, nonstandard_harmonic, FractionSpec};
use nullag::corpus::{parse_records, Record};
use nullag::expr::{parse, Domain, Expr, Interval};
use nullag::numint::{self, oracle, Ivp};
use nullag::systems::{self, ComparedSystem, TripleConstants};
use nullag::variational::{is_null, Lagrangian};
use nullag::{audit, Error, Settings};

mod report;

use report::{Outcome, Report};

#[derive(Parser)]
#[command(name = "nullag", version, about = "Null Lagrangian workbench")]
struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    eps_eq: Option<f64>,
    #[arg(long, global = true)]
    eps_act: Option<f64>,
    #[arg(long, global = true)]
    eps_drift: Option<f64>,
    /// Sample points per instantiation.
    #[arg(long, global = true)]
    n_eq: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the null Lagrangian generated by B.
    Derive {
        #[arg(long = "B")]
        b: String,
        #[arg(long, default_value = "0")]
        f: String,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Decide whether a Lagrangian is null.
    Verify {
        lagrangian: String,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Higher harmonic of the null Lagrangian generated by B.
    Harmonic {
        #[arg(long = "B", conflicts_with = "fraction")]
        b: Option<String>,
        /// f1,f2,f3,f4 of B = f1/(f2 x + f3 t + f4).
        #[arg(long, value_delimiter = ',')]
        fraction: Option<Vec<String>>,
        #[arg(long, default_value = "0")]
        f: String,
        #[arg(long, short, allow_hyphen_values = true)]
        n: i64,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Equation of motion from a Lagrangian, a composition F(L), or B.
    Eom {
        #[arg(long, conflicts_with = "b")]
        lagrangian: Option<String>,
        /// Composer: identity, exp, ln, reciprocal, power(k), or an expression in `lambda`.
        #[arg(long, requires = "lagrangian")]
        compose: Option<String>,
        #[arg(long = "B")]
        b: Option<String>,
        #[arg(long, default_value = "0")]
        f: String,
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Classify a damped system and build its null Lagrangian.
    System {
        #[command(subcommand)]
        kind: SystemKind,
    },
    /// Integrate dL/dt = 0 for a cataloged system and monitor L.
    Simulate {
        #[arg(long)]
        system: ComparedSystem,
        #[command(flatten)]
        constants: ConstantArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Trajectory CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Integrate every Lagrangian route of a system and compare trajectories.
    Compare {
        #[arg(long)]
        system: ComparedSystem,
        #[command(flatten)]
        constants: ConstantArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Check printed closed forms against derived ones.
    Audit,
    /// Build and verify every record of a spec file.
    Batch { file: PathBuf },
}

#[derive(Subcommand)]
enum SystemKind {
    Constant {
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        #[arg(long, allow_hyphen_values = true)]
        gamma: String,
    },
    Timedep {
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        /// Derived from beta when omitted.
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<String>,
    },
    Displacement {
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        /// Solved from the null condition with constant `--c` when omitted.
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<String>,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        c: String,
    },
}

#[derive(Args)]
struct DomainArgs {
    #[arg(long, value_parser = interval)]
    t_range: Option<Interval>,
    #[arg(long, value_parser = interval)]
    x_range: Option<Interval>,
    #[arg(long, value_parser = interval)]
    xdot_range: Option<Interval>,
    /// NAME=LO,HI or NAME=VALUE; repeatable.
    #[arg(long, value_parser = param_range)]
    param: Vec<(String, Interval)>,
}

impl DomainArgs {
    fn domain(&self) -> Domain {
        let mut d = Domain::default();
        if let Some(i) = self.t_range {
            d.t = i;
        }
        if let Some(i) = self.x_range {
            d.x = i;
        }
        if let Some(i) = self.xdot_range {
            d.xdot = i;
        }
        for (n, i) in &self.param {
            d = d.with_param(n, *i);
        }
        d
    }
}

#[derive(Args)]
struct ConstantArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a0: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    b0: f64,
    /// Scale of the null Lagrangian.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    c: f64,
}

impl ConstantArgs {
    fn constants(&self) -> TripleConstants {
        TripleConstants { c: self.c, alpha0: self.a0, beta0: self.b0, ..TripleConstants::default() }
    }
}

#[derive(Args)]
struct RunArgs {
    /// t0,x0,v0
    #[arg(long, value_parser = triple, allow_hyphen_values = true)]
    ic: (f64, f64, f64),
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    #[arg(long)]
    t1: f64,
}

fn interval(s: &str) -> Result<Interval, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a] => Ok(Interval::point(a)),
        [lo, hi] if lo <= hi => Ok(Interval::new(lo, hi)),
        _ => Err("expected LO,HI with LO <= HI".into()),
    }
}

fn param_range(s: &str) -> Result<(String, Interval), String> {
    let (n, r) = s.split_once('=').ok_or("expected NAME=LO,HI")?;
    Ok((n.trim().to_string(), interval(r)?))
}

fn triple(s: &str) -> Result<(f64, f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err("expected t0,x0,v0".into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage problems are input errors
            return ExitCode::from(if e.use_stderr() { report::EXIT_INPUT } else { report::EXIT_PASS });
        }
    };
    let mut s = Settings::default();
    if let Some(v) = cli.seed {
        s.seed = v;
    }
    if let Some(v) = cli.eps_eq {
        s.eps_eq = v;
    }
    if let Some(v) = cli.eps_act {
        s.eps_act = v;
    }
    if let Some(v) = cli.eps_drift {
        s.eps_drift = v;
    }
    if let Some(v) = cli.n_eq {
        s.n_eq = v;
    }
    let name = command_name(&cli.command);
    let outcome = s.validate().and_then(|_| run(&cli.command, &s));
    let report = Report::new(name, &s, outcome);
    report.print(cli.json);
    ExitCode::from(report.exit_code())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Derive { .. } => "derive",
        Command::Verify { .. } => "verify",
        Command::Harmonic { .. } => "harmonic",
        Command::Eom { .. } => "eom",
        Command::System { .. } => "system",
        Command::Simulate { .. } => "simulate",
        Command::Compare { .. } => "compare",
        Command::Audit => "audit",
        Command::Batch { .. } => "batch",
    }
}

fn run(c: &Command, s: &Settings) -> nullag::Result<Outcome> {
    match c {
        Command::Derive { b, f, domain } => {
            let pair = build_null(&parse(b)?, &parse(f)?, &domain.domain(), s)?;
            let nr = is_null(&pair.lagrangian(), s)?;
            let text = format!(
                "B = {}\nC = {}\nL = {}\nnull: {:?}",
                pair.b,
                pair.c,
                pair.assembled(),
                nr.verdict
            );
            Ok(Outcome::new(
                nr.is_null(),
                json!({"B": pair.b, "C": pair.c, "f": pair.f, "L": pair.assembled(), "null": nr}),
                text,
            ))
        }
        Command::Verify { lagrangian, domain } => {
            let l = Lagrangian::new(parse(lagrangian)?, domain.domain())?;
            let mut d = l.domain.clone();
            for g in l.body.singular_guards() {
                d.push_guard(g);
            }
            let r = is_null(&l.with_domain(d), s)?;
            let mut text = format!("{:?}\nresidual = {}", r.verdict, r.residual);
            if let Some(w) = r.witness() {
                text.push_str(&format!("\nwitness: {}", serde_json::to_string(w).unwrap_or_default()));
            }
            Ok(Outcome::new(r.is_null(), serde_json::to_value(&r).unwrap_or(Value::Null), text))
        }
        Command::Harmonic { b, fraction, f, n, domain } => {
            let (base, h) = match (b, fraction) {
                (Some(b), None) => {
                    let base = build_null(&parse(b)?, &parse(f)?, &domain.domain(), s)?;
                    let h = harmonic(&base, *n, s)?;
                    (base, h)
                }
                (None, Some(fs)) if fs.len() == 4 => {
                    let e: Vec<Expr> = fs.iter().map(|x| parse(x)).collect::<nullag::Result<_>>()?;
                    let spec = FractionSpec::new(e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone())?;
                    let base = nullag::construct::build_nonstandard_null(&spec, &parse(f)?, &domain.domain(), s)?;
                    let h = nonstandard_harmonic(&base, *n, s)?;
                    (base, h)
                }
                _ => return Err(Error::Input("give --B or --fraction f1,f2,f3,f4".into())),
            };
            let nr = is_null(&h.lagrangian(), s)?;
            let (eom, _) = harmonic_eom(&h, s)?;
            let text = format!(
                "L({n}) = {}\nB({n}) = {}\nnull: {:?}\nterminates: {}\n{}",
                h.body,
                h.b_n,
                nr.verdict,
                h.terminates(),
                eom
            );
            Ok(Outcome::new(
                nr.is_null(),
                json!({"base": base.assembled(), "order": n, "L": h.body, "B_n": h.b_n,
                       "terminates": h.terminates(), "null": nr, "eom": eom_json(&eom)}),
                text,
            ))
        }
        Command::Eom { lagrangian, compose: composer, b, f, domain } => {
            let eom = match (lagrangian, b) {
                (Some(l), None) => {
                    let l = Lagrangian::new(parse(l)?, domain.domain())?;
                    match composer {
                        Some(fs) => {
                            let fc = Composer::parse(fs)?;
                            // rejects F whose domain misses the range of L
                            compose(&fc, &l, s)?;
                            prop3_eom(&fc, &l)?
                        }
                        None => euler_lagrange_eom(&l)?,
                    }
                }
                (None, Some(b)) => {
                    let pair = build_null(&parse(b)?, &parse(f)?, &domain.domain(), s)?;
                    corollary1_eom(&pair, s)?.0
                }
                _ => return Err(Error::Input("give --lagrangian or --B".into())),
            };
            Ok(Outcome::new(true, eom_json(&eom), eom.to_string()))
        }
        Command::System { kind } => system(kind, s),
        Command::Simulate { system, constants, run, csv } => simulate(*system, constants, run, csv.as_ref(), s),
        Command::Compare { system, constants, run, tol } => compare(*system, constants, run, *tol, s),
        Command::Audit => {
            let r = audit::run(s)?;
            let pass = r.items.iter().all(|i| i.detected() && i.corrected_passes);
            let text = r
                .items
                .iter()
                .map(|i| {
                    format!(
                        "{:<24} printed {:?}, correction {}",
                        i.id,
                        i.verdict,
                        if i.corrected_passes { "holds" } else { "FAILS" }
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            Ok(Outcome::new(pass, serde_json::to_value(&r).unwrap_or(Value::Null), text))
        }
        Command::Batch { file } => batch(file, s),
    }
}

fn eom_json(eom: &EquationOfMotion) -> Value {
    let explicit = if eom.leading.is_zero() {
        Value::Null
    } else {
        json!(eom.remainder().neg().div(&eom.leading))
    };
    json!({"residual": eom.residual, "leading": eom.leading, "provenance": eom.provenance, "explicit": explicit})
}

fn system(kind: &SystemKind, s: &Settings) -> nullag::Result<Outcome> {
    let case = match kind {
        SystemKind::Constant { alpha, beta, gamma } => {
            systems::classify_constant(&parse(alpha)?, &parse(beta)?, &parse(gamma)?, s)?
        }
        SystemKind::Timedep { alpha, beta, gamma } => {
            let beta = parse(beta)?;
            let gamma = match gamma {
                Some(g) => parse(g)?,
                None => systems::derive_gamma1(&beta),
            };
            systems::build_timedep(&parse(alpha)?, &beta, &gamma, &Domain::default(), s)?
        }
        SystemKind::Displacement { alpha, beta, gamma, c } => {
            let (alpha, beta) = (parse(alpha)?, parse(beta)?);
            let gamma = match gamma {
                Some(g) => parse(g)?,
                None => systems::solve_gamma2(&alpha, &beta, &parse(c)?)?,
            };
            systems::build_displacement(&alpha, &beta, &gamma, &Domain::default(), s)?
        }
    };
    let mut text = format!("{:?}\n{} = 0", case.classification, case.ode);
    match &case.null {
        systems::NullOutcome::Present { lagrangian, .. } => {
            text.push_str(&format!("\nL_null = {lagrangian}"));
            text.push_str(&format!("\nB = {}\nC = {}", case.b.as_ref().unwrap(), case.c.as_ref().unwrap()));
        }
        systems::NullOutcome::Absent { reason, .. } => text.push_str(&format!("\nno null Lagrangian: {reason}")),
    }
    let mut value = serde_json::to_value(&case).unwrap_or(Value::Null);
    if let Some(eom) = &case.eom {
        value["eom"] = eom_json(eom);
    }
    // NoNullLagrangian is a result, not a failure.
    Ok(Outcome::new(true, value, text))
}

fn exact_solution(system: ComparedSystem, k: &TripleConstants, (t0, x0, v0): (f64, f64, f64), t: f64) -> f64 {
    let dt = t - t0;
    match system {
        ComparedSystem::Inertia => x0 + v0 * dt,
        ComparedSystem::QuadraticDamping => oracle::quadratic_damping(k.alpha0, x0, v0, dt),
        ComparedSystem::DampedOscillatorTied => oracle::tied_oscillator(k.beta0, x0, v0, dt),
    }
}

fn simulate(
    system: ComparedSystem,
    constants: &ConstantArgs,
    run: &RunArgs,
    csv: Option<&PathBuf>,
    s: &Settings,
) -> nullag::Result<Outcome> {
    let k = constants.constants();
    let triple = systems::comparison_catalog(system, &k, s)?;
    let (traj, drift) = numint::simulate(&triple.null, run.ic, run.t1, run.h, s)?;
    if let Some(path) = csv {
        let f = std::fs::File::create(path)?;
        numint::write_csv(f, &traj, Some(&drift.values))?;
    }
    let (t, x, v) = traj.last();
    let exact = exact_solution(system, &k, run.ic, t);
    let text = format!(
        "L_null = {}\nx({t}) = {x:.12}  (closed form {exact:.12}, error {:.3e})\nx'({t}) = {v:.12}\nL0 = {}  max drift {:.3e}  {}",
        triple.null.assembled(),
        (x - exact).abs(),
        drift.initial,
        drift.max_abs_drift,
        if drift.passes { "ok" } else { "EXCEEDS eps_drift" }
    );
    Ok(Outcome::new(
        drift.passes,
        json!({"system": system, "L_null": triple.null.assembled(), "explicit": triple.explicit,
               "h": run.h, "steps": traj.len() - 1, "t_end": t, "x_end": x, "v_end": v,
               "x_exact": exact, "error": (x - exact).abs(), "drift": drift,
               "csv": csv.map(|p| p.display().to_string())}),
        text,
    ))
}

fn compare(
    system: ComparedSystem,
    constants: &ConstantArgs,
    run: &RunArgs,
    tol: f64,
    s: &Settings,
) -> nullag::Result<Outcome> {
    let k = constants.constants();
    let triple = systems::comparison_catalog(system, &k, s)?;
    let mut trajs = Vec::new();
    for r in &triple.routes {
        let eom = match r.provenance {
            Provenance::Corollary1 => corollary1_eom(&triple.null, s)?.0,
            _ => euler_lagrange_eom(&r.lagrangian)?,
        };
        let ex = solve_leading(&eom, s)?;
        let guards = ex.domain.guards.iter().filter(|g| g.expr.params().is_empty()).cloned();
        let ivp = Ivp::new(ex.g.clone(), run.ic, run.t1, run.h)?.with_guards(guards);
        trajs.push((r.name.clone(), ex.g, numint::integrate(&ivp, s)?));
    }
    let mut pairs = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..trajs.len() {
        for j in i + 1..trajs.len() {
            let d = numint::compare(&trajs[i].2, &trajs[j].2)?;
            worst = worst.max(d.max_x).max(d.max_v);
            pairs.push(json!({"a": trajs[i].0, "b": trajs[j].0, "max_x": d.max_x, "max_v": d.max_v}));
        }
    }
    let mut text: Vec<String> = trajs.iter().map(|(n, g, _)| format!("{n:<20} x'' = {g}")).collect();
    text.push(format!("max deviation {worst:.3e} (tol {tol:e})"));
    let routes: Vec<Value> = trajs.iter().map(|(n, g, _)| json!({"name": n, "explicit": g})).collect();
    Ok(Outcome::new(
        worst <= tol,
        json!({"system": system, "routes": routes, "pairs": pairs, "max_deviation": worst, "tol": tol}),
        text.join("\n"),
    ))
}

fn batch_record(r: &Record, s: &Settings) -> Value {
    let res = r.build(s).and_then(|pair| {
        let nr = is_null(&pair.lagrangian(), s)?;
        let (eom, _) = corollary1_eom(&pair, s)?;
        Ok(json!({"name": r.name, "passed": nr.is_null(), "B": pair.b, "C": pair.c,
                  "L": pair.assembled(), "verdict": nr.verdict, "eom": eom_json(&eom)}))
    });
    res.unwrap_or_else(|e| json!({"name": r.name, "passed": false, "error": report::error_json(&e)}))
}

fn batch(file: &PathBuf, s: &Settings) -> nullag::Result<Outcome> {
    let text = std::fs::read_to_string(file)?;
    let records = parse_records(&text)?;
    let results: Vec<Value> = std::thread::scope(|scope| {
        let handles: Vec<_> = records.iter().map(|r| scope.spawn(move || batch_record(r, s))).collect();
        handles.into_iter().map(|h| h.join().expect("batch worker panicked")).collect()
    });
    let pass = results.iter().all(|v| v["passed"] == json!(true));
    let lines = results
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let name = v["name"].as_str().filter(|n| !n.is_empty()).map(str::to_string).unwrap_or(format!("#{}", i + 1));
            match v.get("error") {
                Some(e) => format!("{name:<20} error {}", e["message"].as_str().unwrap_or("")),
                None => format!("{name:<20} {}  L = {}", v["verdict"].as_str().unwrap_or(""), v["L"].as_str().unwrap_or("")),
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Outcome::new(pass, json!({"records": results}), lines))
}
