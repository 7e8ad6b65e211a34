//! `pressure-lab` command-line front end.
//!
//! Every JSON output carries a `meta` block with the tool version, the
//! command and its full configuration. `phase-scan` writes CSV with the same
//! information on its `#` header line. Exit status: 0 success, 1 domain or
//! input errors, 2 undecided or inconclusive verdicts.

use clap::{Args, Parser, Subcommand};
use pressure_lab::inducing;
use pressure_lab::instances::{self, ExampleName, ExampleParams};
use pressure_lab::pressure;
use pressure_lab::suspension::{self, Equilibrium, FlowSystem, PressureCurve, Regime, TransitionPoint};
use pressure_lab::{Error, ExtendedReal, Interval, SymbolicShift, TailPotential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug, Serialize)]
#[command(name = "pressure-lab", version, about = "Certified topological pressure for countable Markov shifts and suspension flows")]
struct Cli {
    /// Worker threads for grid scans.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Gurevich pressure of a depth-one potential.
    Pressure(PressureArgs),
    /// Abscissa of convergence of the roof series.
    SInf(SystemTol),
    /// Suspension pressure at one value of t.
    Suspension(PointArgs),
    /// Pressure curve over a t grid, as CSV.
    PhaseScan(ScanArgs),
    /// Transition point t0 of the flat branch.
    LocateT0(SystemTol),
    /// Existence of an equilibrium state at t.
    Equilibrium(PointArgs),
    /// Emit one of the built-in flow systems as JSON.
    Example(ExampleArgs),
    /// Suspension pressure through the first-return system on a symbol.
    Induce(InduceArgs),
    /// Enclosure of the geodesic flow entropy.
    GeodesicEntropy(GeodesicArgs),
    /// Variational lower bound from a Bernoulli measure.
    Variational(VariationalArgs),
}

#[derive(Args, Debug, Serialize)]
struct PressureArgs {
    /// Shift JSON; the full shift on {0, 1, ...} when absent.
    #[arg(long)]
    shift: Option<PathBuf>,
    /// Potential JSON.
    #[arg(long)]
    phi: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Report the truncated power-iteration value on symbols below N instead.
    #[arg(long = "truncate")]
    truncate: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct SystemTol {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, default_value_t = suspension::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct PointArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    t: f64,
    #[arg(long, default_value_t = suspension::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct ScanArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    t_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    t_max: f64,
    #[arg(long)]
    step: f64,
    #[arg(long, default_value_t = suspension::DEFAULT_TOL)]
    tol: f64,
    /// Also write the phase report JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ExampleArgs {
    /// nophase, onephase, count or geodesic.
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = 20.0)]
    k: f64,
    #[arg(long, default_value_t = 6)]
    levels: usize,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Comma-separated ln k_i for the count example; searched when absent.
    #[arg(long, value_delimiter = ',')]
    log_k: Option<Vec<f64>>,
    #[arg(long, default_value_t = 50)]
    max_symbol: u64,
    #[arg(long, default_value_t = 2)]
    depth: usize,
}

#[derive(Args, Debug, Serialize)]
struct InduceArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    return_symbol: u64,
    #[arg(long, default_value_t = inducing::DEFAULT_MAX_LEN)]
    max_len: usize,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = suspension::DEFAULT_TOL)]
    tol: f64,
    /// List the induced words over symbols up to this bound instead.
    #[arg(long)]
    list_words: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct GeodesicArgs {
    /// Largest explicitly enumerated leading digit.
    #[arg(long = "n", default_value_t = 50)]
    n: u64,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = suspension::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct VariationalArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    t: f64,
    /// Comma-separated weights on symbols offset, offset+1, ...
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Draw weights on `support` symbols from this seed instead.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 10)]
    support: usize,
}

enum Failure {
    Lib(Error),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Run<T> = std::result::Result<T, Failure>;

/// Output text and whether the verdict was undecided.
struct Outcome {
    text: String,
    undecided: bool,
}

fn read(path: &PathBuf) -> Run<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_system(path: &PathBuf) -> Run<FlowSystem> {
    Ok(FlowSystem::from_json(&read(path)?)?)
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x > 0.0 {
        json!("inf")
    } else if x < 0.0 {
        json!("-inf")
    } else {
        Value::Null
    }
}

fn interval(i: Interval) -> Value {
    json!({ "lo": num(i.lo), "hi": num(i.hi) })
}

fn meta(cli: &Cli) -> Value {
    json!({
        "tool": "pressure-lab",
        "version": pressure_lab::VERSION,
        "config": serde_json::to_value(cli).expect("config serializes"),
    })
}

fn document(cli: &Cli, result: Value) -> String {
    let mut s = serde_json::to_string_pretty(&json!({ "meta": meta(cli), "result": result })).expect("json");
    s.push('\n');
    s
}

fn header(cli: &Cli) -> String {
    serde_json::to_string(&meta(cli)).expect("json")
}

fn ok(text: String) -> Run<Outcome> {
    Ok(Outcome { text, undecided: false })
}

fn run(cli: &Cli) -> Run<Outcome> {
    match &cli.command {
        Command::Pressure(a) => {
            let shift = match &a.shift {
                Some(p) => SymbolicShift::from_json(&read(p)?)?,
                None => SymbolicShift::full(0),
            };
            let phi = TailPotential::from_json(&read(&a.phi)?)?;
            let result = match a.truncate {
                Some(n) => {
                    let v = pressure::pressure_truncated(&shift, &phi, n)?;
                    json!({ "lo": num(v), "hi": num(v), "infinite": false, "N_used": n, "truncated": true })
                }
                None => {
                    let r = pressure::pressure_report(&shift, &[(1.0, &phi)], a.tol)?;
                    match r.value {
                        ExtendedReal::Infinite => json!({ "lo": Value::Null, "hi": Value::Null, "infinite": true, "N_used": r.n_used }),
                        ExtendedReal::Interval(i) => {
                            json!({ "lo": num(i.lo), "hi": num(i.hi), "infinite": false, "N_used": r.n_used })
                        }
                    }
                }
            };
            ok(document(cli, result))
        }
        Command::SInf(a) => {
            let sys = load_system(&a.system)?;
            let s = suspension::s_infinity(&sys, a.tol)?;
            ok(document(cli, json!({ "s_inf": interval(s) })))
        }
        Command::Suspension(a) => {
            let sys = load_system(&a.system)?;
            let v = suspension::suspension_pressure(&sys, a.t, a.tol)?;
            Ok(Outcome {
                text: document(cli, json!({ "t": a.t, "value": interval(v.value), "regime": v.regime.as_str() })),
                undecided: v.regime == Regime::Boundary,
            })
        }
        Command::PhaseScan(a) => {
            let sys = load_system(&a.system)?;
            let curve = match &a.report {
                None => suspension::phase_scan(&sys, a.t_min, a.t_max, a.step, a.tol)?,
                Some(path) => {
                    let (curve, report) = suspension::phase_report(&sys, a.t_min, a.t_max, a.step, a.tol)?;
                    let body = document(cli, serde_json::to_value(&report).map_err(|e| Failure::Input(e.to_string()))?);
                    write_file(path, &body)?;
                    curve
                }
            };
            ok(curve.to_csv(&header(cli)))
        }
        Command::LocateT0(a) => {
            let sys = load_system(&a.system)?;
            let result = match suspension::locate_t0(&sys, a.tol)? {
                TransitionPoint::NoTransition => json!({ "transition": false }),
                TransitionPoint::Transition { t0 } => json!({ "transition": true, "t0": interval(t0) }),
            };
            ok(document(cli, result))
        }
        Command::Equilibrium(a) => {
            let sys = load_system(&a.system)?;
            let s_inf = suspension::s_infinity(&sys, a.tol)?;
            let v = suspension::suspension_pressure_with(&sys, a.t, a.tol, s_inf)?;
            let e = suspension::equilibrium_from(&sys, a.t, &v, s_inf)?;
            let name = match e {
                Equilibrium::Equilibrium => "equilibrium",
                Equilibrium::NoEquilibrium => "no_equilibrium",
                Equilibrium::Undecided => "undecided",
            };
            Ok(Outcome {
                text: document(cli, json!({ "t": a.t, "verdict": name, "value": interval(v.value), "regime": v.regime.as_str() })),
                undecided: e == Equilibrium::Undecided,
            })
        }
        Command::Example(a) => {
            let name: ExampleName = a.name.parse()?;
            let params = ExampleParams {
                k: a.k,
                levels: a.levels,
                delta: a.delta,
                log_k: a.log_k.clone(),
                max_symbol: a.max_symbol,
                depth: a.depth,
                observable: None,
            };
            let sys = instances::make_example(name, &params)?;
            let mut v = serde_json::to_value(&sys).expect("system serializes");
            v.as_object_mut().expect("object").insert("meta".into(), meta(cli));
            let mut s = serde_json::to_string_pretty(&v).expect("json");
            s.push('\n');
            ok(s)
        }
        Command::Induce(a) => induce(cli, a),
        Command::GeodesicEntropy(a) => {
            let h = instances::geodesic_entropy(a.n, a.depth, a.tol)?;
            ok(document(cli, json!({ "entropy": interval(h), "below_one": h.hi < 1.0 })))
        }
        Command::Variational(a) => {
            let sys = load_system(&a.system)?;
            let weights = match (&a.weights, a.seed) {
                (Some(w), _) => w.clone(),
                (None, Some(seed)) => random_weights(seed, a.support),
                (None, None) => return Err(Failure::Input("give --weights or --seed".into())),
            };
            let b = suspension::variational_lower_bound(&sys, &weights, a.t)?;
            ok(document(cli, json!({ "t": a.t, "bound": num(b), "weights": weights })))
        }
    }
}

/// Normalized exponential draws, so the weights are uniform on the simplex.
fn random_weights(seed: u64, support: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..support.max(1)).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // put the rounding residue on the largest weight so the sum is 1 to within 1e-12
    let residue = 1.0 - w.iter().sum::<f64>();
    let big = (0..w.len()).max_by(|&i, &j| w[i].total_cmp(&w[j])).expect("nonempty");
    w[big] += residue;
    w
}

fn induce(cli: &Cli, a: &InduceArgs) -> Run<Outcome> {
    let sys = load_system(&a.system)?;
    if let Some(max_symbol) = a.list_words {
        let words = inducing::induced_alphabet(&sys.shift, a.return_symbol, a.max_len, max_symbol)?;
        return ok(document(cli, json!({ "return_symbol": a.return_symbol, "words": words })));
    }
    match (a.t, a.t_min, a.t_max, a.step) {
        (Some(t), None, None, None) => {
            let v = inducing::suspension_pressure_induced(&sys, a.return_symbol, t, a.tol, a.max_len)?;
            Ok(Outcome {
                text: document(cli, json!({ "t": t, "value": interval(v.value), "regime": v.regime.as_str() })),
                undecided: v.regime == Regime::Boundary,
            })
        }
        (None, Some(t_min), Some(t_max), Some(step)) => {
            let grid = suspension::t_grid(t_min, t_max, step)?;
            let s_inf = suspension::s_infinity(&sys, a.tol)?;
            let mut samples = Vec::with_capacity(grid.len());
            for &t in &grid {
                let v = inducing::suspension_pressure_induced(&sys, a.return_symbol, t, a.tol, a.max_len)?;
                samples.push(suspension::PhaseSample { t, value: v.value, regime: v.regime, kink: false });
            }
            let mids: Vec<f64> = samples.iter().map(|p| p.value.mid()).collect();
            let flags = suspension::flag_kinks(&mids, step, a.tol);
            let flags = suspension::confirm_kinks(&grid, &mids, &flags, step, a.tol, |t| {
                inducing::suspension_pressure_induced(&sys, a.return_symbol, t, a.tol, a.max_len).map(|v| v.value.mid())
            })?;
            for (p, f) in samples.iter_mut().zip(flags) {
                p.kink = f;
            }
            let curve = PressureCurve { s_inf, tol: a.tol, step, samples, kinks: Vec::new() };
            ok(curve.to_csv(&header(cli)))
        }
        _ => Err(Failure::Input("give either --t or all of --t-min, --t-max, --step".into())),
    }
}

fn write_file(path: &PathBuf, body: &str) -> Run<()> {
    std::fs::write(path, body).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) => write_file(path, &out.text),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            match written {
                Err(Failure::Input(msg)) => {
                    eprintln!("error: {msg}");
                    ExitCode::from(1)
                }
                _ => ExitCode::from(if out.undecided { 2 } else { 0 }),
            }
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
