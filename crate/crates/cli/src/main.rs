//! `quadctrl`: classify, simulate and steer scalar-input polynomial control
//! systems.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use quadctrl::coercivity::{estimate_tstar, CoercivityError, CoercivityProblem, EndpointMode};
use quadctrl::exact::to_f64_vec;
use quadctrl::fixtures;
use quadctrl::io::{read_control_csv, SystemFile};
use quadctrl::lie::{classify, Verdict};
use quadctrl::linsynth::{steer, LinsynthError, DEFAULT_CELLS};
use quadctrl::manifold::build_m2;
use quadctrl::rational::{to_f64, vec_to_f64};
use quadctrl::report::{analyze, with_coercivity};
use quadctrl::simulate::{
    bump_family, dilation_control, experiments::drift_series, integrate, norms, sinusoid, BumpSpec, ControlSignal,
    DilationProfile, Provenance, SimError,
};
use quadctrl::system::ControlSystem;

const EXIT_CONTROLLABLE: u8 = 0;
const EXIT_INPUT: u8 = 2;
const EXIT_MANIFOLD: u8 = 10;
const EXIT_NOT_DRIFT: u8 = 11;
const EXIT_DRIFT: u8 = 20;
const EXIT_NOT_KALMAN: u8 = 21;
const EXIT_DIVERGENCE: u8 = 30;

#[derive(Parser)]
#[command(name = "quadctrl", version, about = "Quadratic controllability analysis of polynomial control systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct Source {
    /// JSON system file.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Built-in example, e.g. `competition` or `opt_affine_k:4`.
    #[arg(long)]
    example: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a system and print the analysis report.
    Classify {
        #[command(flatten)]
        source: Source,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also estimate the coercivity time up to this horizon (drift systems).
        #[arg(long = "Tmax")]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
    /// Simulate from the equilibrium under a control.
    Simulate {
        #[command(flatten)]
        source: Source,
        /// bump(a,b,amp[,deriv]) | sinusoid(freq,amp) | csv:PATH | dilation(k,lambda,mu) | random_bump(amp)
        #[arg(long)]
        control: String,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tolerance for the drift sign check; defaults to 10·sup|u|³.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Estimate the coercivity time T*.
    Coercivity {
        #[command(flatten)]
        source: Source,
        #[arg(long = "Tmax", default_value_t = 5.0)]
        t_max: f64,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Drop the vanishing-trace condition at the final time.
        #[arg(long)]
        free_endpoint: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steer between two states with the HUM control of the linearization.
    Steer {
        #[command(flatten)]
        source: Source,
        /// Start state, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List or dump the built-in examples.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Subcommand)]
enum ExamplesAction {
    List,
    Dump {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Self { code: EXIT_INPUT, message: message.to_string() }
    }
}

type Outcome = Result<u8, Failure>;

/// The system re-centred at its equilibrium, plus the equilibrium itself.
struct Loaded {
    sys: ControlSystem,
    x_e: Vec<f64>,
    u_e: f64,
}

fn load(source: &Source) -> Result<Loaded, Failure> {
    let file = match (&source.system, &source.example) {
        (Some(path), _) => SystemFile::read(&path.to_string_lossy()).map_err(Failure::input)?,
        (_, Some(name)) => fixtures::system_file(name).map_err(Failure::input)?,
        _ => return Err(Failure::input("one of --system or --example is required")),
    };
    let sys = file.to_system().map_err(Failure::input)?;
    let (x, u) = file.equilibrium_point().map_err(Failure::input)?;
    Ok(Loaded { sys, x_e: vec_to_f64(&x), u_e: to_f64(&u) })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_in(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
    emit(Some(&dir.join(name)), text)
}

fn verdict_code(v: &Verdict) -> u8 {
    match v {
        Verdict::LinearlyControllable => EXIT_CONTROLLABLE,
        Verdict::InvariantManifold => EXIT_MANIFOLD,
        Verdict::Drift { .. } | Verdict::DriftOrderZero { .. } => EXIT_DRIFT,
    }
}

fn coercivity_failure(e: CoercivityError) -> Failure {
    match e {
        CoercivityError::NotDrift { .. } => Failure { code: EXIT_NOT_DRIFT, message: e.to_string() },
        other => Failure::input(other),
    }
}

fn cmd_classify(source: &Source, out: Option<&Path>, t_max: Option<f64>, grid: usize) -> Outcome {
    let l = load(source)?;
    let (_, _, c) = classify(&l.sys);
    let mut report = analyze(&l.sys);
    if let Some(t_max) = t_max {
        if c.verdict.is_drift() {
            report = with_coercivity(report, &l.sys, t_max, grid, EndpointMode::Vanishing).map_err(coercivity_failure)?;
        }
    }
    emit(out, &report.to_json())?;
    Ok(verdict_code(&c.verdict))
}

fn numbers(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Failure::input(format!("`{s}` is not a number"))))
        .collect()
}

fn call<'a>(spec: &'a str, name: &str) -> Option<&'a str> {
    spec.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::Divergence { time } => Failure { code: EXIT_DIVERGENCE, message: format!("divergence: escape time {time}") },
        other => Failure::input(other),
    }
}

fn parse_control(spec: &str, horizon: f64, cells: usize, seed: u64) -> Result<ControlSignal, Failure> {
    let spec = spec.trim();
    if let Some(path) = spec.strip_prefix("csv:") {
        let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {path}: {e}")))?;
        let (t, u) = read_control_csv(&text).map_err(Failure::input)?;
        return Ok(ControlSignal::from_table(&t, &u, path).map_err(sim_failure)?.with_provenance(Provenance::File(path.into())));
    }
    if let Some(args) = call(spec, "bump") {
        let v = numbers(args)?;
        if !(3..=4).contains(&v.len()) {
            return Err(Failure::input("bump takes (a,b,amp[,deriv])"));
        }
        let deriv = v.get(3).map_or(0, |d| *d as usize);
        return bump_family(horizon, cells, &BumpSpec { a: v[0], b: v[1], amp: v[2], deriv }).map_err(sim_failure);
    }
    if let Some(args) = call(spec, "sinusoid") {
        let v = numbers(args)?;
        if v.len() != 2 {
            return Err(Failure::input("sinusoid takes (freq,amp)"));
        }
        return sinusoid(horizon, cells, v[0], v[1]).map_err(sim_failure);
    }
    if let Some(args) = call(spec, "dilation") {
        let v = numbers(args)?;
        if v.len() != 3 || v[0] < 1.0 {
            return Err(Failure::input("dilation takes (k,lambda,mu) with k >= 1"));
        }
        let profile = DilationProfile::new(v[0] as usize);
        return dilation_control(&profile, horizon, cells, v[1], v[2]).map_err(sim_failure);
    }
    if let Some(args) = call(spec, "random_bump") {
        let v = numbers(args)?;
        if v.len() != 1 {
            return Err(Failure::input("random_bump takes (amp)"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.gen_range(0.05..0.45) * horizon;
        let b = rng.gen_range(0.55..0.95) * horizon;
        let deriv = rng.gen_range(0..=2);
        return bump_family(horizon, cells, &BumpSpec { a, b, amp: v[0], deriv }).map_err(sim_failure);
    }
    Err(Failure::input(format!("unknown control `{spec}`")))
}

fn cmd_simulate(
    source: &Source,
    spec: &str,
    horizon: f64,
    dt: f64,
    out: &Path,
    seed: u64,
    tol: Option<f64>,
) -> Outcome {
    let l = load(source)?;
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(Failure::input("--T and --dt must be positive"));
    }
    let cells = (horizon / dt).round().max(1.0) as usize;
    let u = parse_control(spec, horizon, cells, seed)?;
    let n = l.sys.n();
    let traj = integrate(&l.sys, &vec![0.0; n], &u, dt).map_err(sim_failure)?;
    let mut shifted = traj.clone();
    for x in &mut shifted.x {
        for (xi, e) in x.iter_mut().zip(&l.x_e) {
            *xi += e;
        }
    }
    for v in &mut shifted.u {
        *v += l.u_e;
    }
    write_in(out, "trajectory.csv", &shifted.to_csv())?;

    let (_, report, c) = classify(&l.sys);
    let mut summary = json!({
        "system": l.sys.name(),
        "classification": c.verdict.label(),
        "T": u.horizon(),
        "dt": traj.dt,
        "final_state": shifted.final_state(),
    });
    if let Ok(m) = build_m2(&report) {
        match c.verdict.direction() {
            Some(dk) => {
                let series = drift_series(&traj, &m, &to_f64_vec(dk));
                let tol = tol.unwrap_or(10.0 * u.sup_norm().powi(3));
                write_in(out, "drift.csv", &series.to_csv())?;
                summary["drift_min"] = json!(series.min);
                summary["drift_final"] = json!(series.final_value);
                summary["drift_tol"] = json!(tol);
                summary["drift_nonnegative"] = json!(series.min >= -tol);
            }
            None if c.verdict != Verdict::LinearlyControllable => {
                let rows: Vec<Vec<f64>> = traj
                    .t
                    .iter()
                    .zip(&traj.x)
                    .map(|(t, x)| vec![*t, m.residual(x).iter().map(|v| v * v).sum::<f64>().sqrt()])
                    .collect();
                let sup = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
                write_in(out, "residual.csv", &quadctrl::io::write_csv(&["t", "residual"], rows))?;
                summary["residual_sup"] = json!(sup);
            }
            None => {}
        }
    }
    let k_max = report.d().max(1);
    let m_max = 2 * k_max;
    let nr = norms(&u, m_max.min((u.values().len() - 1) / 2), k_max).map_err(sim_failure)?;
    write_in(out, "norms.json", &(serde_json::to_string_pretty(&nr).expect("serializable") + "\n"))?;
    write_in(out, "summary.json", &(serde_json::to_string_pretty(&summary).expect("serializable") + "\n"))?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
    Ok(0)
}

fn cmd_coercivity(source: &Source, t_max: f64, grid: usize, free: bool, out: Option<&Path>) -> Outcome {
    let l = load(source)?;
    if !(t_max > 0.0) || grid < 2 {
        return Err(Failure::input("--Tmax must be positive and --grid at least 2"));
    }
    let mode = if free { EndpointMode::Free } else { EndpointMode::Vanishing };
    let p = CoercivityProblem::new(&l.sys, mode).map_err(coercivity_failure)?;
    let r = estimate_tstar(&p, t_max, grid).map_err(coercivity_failure)?;
    let summary = json!({
        "system": r.system,
        "k": r.k,
        "endpoint": r.endpoint,
        "status": r.status.as_str(),
        "tstar_est": r.tstar_est,
        "tstar_err": r.tstar_err,
        "grid_N": r.grid_n,
        "Tmax": r.t_max,
        "crossings": r.crossings,
        "notes": r.notes,
    });
    let text = serde_json::to_string_pretty(&summary).expect("serializable") + "\n";
    if let Some(dir) = out {
        write_in(dir, "coercivity.csv", &r.to_csv())?;
        write_in(dir, "coercivity.json", &text)?;
    }
    print!("{text}");
    Ok(0)
}

fn cmd_steer(source: &Source, from: &str, to: &str, horizon: f64, epsilon: f64, tol: f64, out: Option<&Path>) -> Outcome {
    let l = load(source)?;
    let n = l.sys.n();
    let centre = |v: Vec<f64>| -> Result<Vec<f64>, Failure> {
        if v.len() != n {
            return Err(Failure::input(format!("expected {n} coordinates, got {}", v.len())));
        }
        Ok(v.iter().zip(&l.x_e).map(|(a, e)| a - e).collect())
    };
    let x_star = centre(numbers(from)?)?;
    let x_dag = centre(numbers(to)?)?;
    let (u, report) = steer(&l.sys, &x_star, &x_dag, horizon, epsilon, DEFAULT_CELLS).map_err(|e| match e {
        LinsynthError::NotControllable { .. } => Failure { code: EXIT_NOT_KALMAN, message: e.to_string() },
        LinsynthError::Sim(s) => sim_failure(s),
        other => Failure::input(other),
    })?;
    let summary = json!({
        "system": l.sys.name(),
        "T": horizon,
        "epsilon": epsilon,
        "iterations": report.iterations,
        "steering_error": report.error,
        "within_tol": report.error <= tol,
        "tol": tol,
    });
    if let Some(dir) = out {
        let shifted = u.times().into_iter().zip(u.values()).map(|(t, v)| vec![t, v + l.u_e]);
        write_in(dir, "control.csv", &quadctrl::io::write_csv(&["t", "u"], shifted))?;
    }
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
    Ok(0)
}

fn cmd_examples(action: &ExamplesAction) -> Outcome {
    match action {
        ExamplesAction::List => {
            for name in fixtures::NAMES {
                println!("{name:<18} {}", fixtures::description(name).map_err(Failure::input)?);
            }
        }
        ExamplesAction::Dump { name, out } => {
            let file = fixtures::system_file(name).map_err(Failure::input)?;
            emit(out.as_deref(), &(file.to_json() + "\n"))?;
        }
    }
    Ok(0)
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Classify { source, out, t_max, grid } => cmd_classify(source, out.as_deref(), *t_max, *grid),
        Command::Simulate { source, control, horizon, dt, out, seed, tol } => {
            cmd_simulate(source, control, *horizon, *dt, out, *seed, *tol)
        }
        Command::Coercivity { source, t_max, grid, free_endpoint, out } => {
            cmd_coercivity(source, *t_max, *grid, *free_endpoint, out.as_deref())
        }
        Command::Steer { source, from, to, horizon, epsilon, tol, out } => {
            cmd_steer(source, from, to, *horizon, *epsilon, *tol, out.as_deref())
        }
        Command::Examples { action } => cmd_examples(action),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
