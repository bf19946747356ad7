#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wclt::evolution::{evolve, EvolveOptions};
use wclt::linalg::{from_pair_rows, to_pair_rows, CMatrix, DensityMatrix, HermitianOperator};
use wclt::model::ModelSpec;
use wclt::models::{transport_sweep, AkvModel, AkvParams, AkvRates, ChannelGammas, KvModel, KvParams};
use wclt::stationary::{
    annihilator_membership, detailed_balance_classify, interaction_free_subspace, is_subharmonic, stationary_kernel,
    WdRoute,
};
use wclt::verify::{verify_akv, verify_kv, VerifyReport};
use wclt::{bohr_frequencies, WcltGenerator};

const THREADS_ENV: &str = "WCLT_NUM_THREADS";

#[derive(Parser)]
#[command(name = "wclt", version, about = "Weak-coupling-limit-type Markov generators")]
struct Cli {
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Positive Bohr frequencies and the level pairs behind each.
    Frequencies { spec: PathBuf },
    /// Kraus blocks and rates of every channel.
    Kraus { spec: PathBuf },
    /// Interaction-free subspace.
    Wd {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = Route::KernelPairs)]
        route: Route,
    },
    /// Stationary states from the kernel of the superoperator.
    Stationary {
        spec: PathBuf,
        /// Include the canonical stationary state (limit of I/d).
        #[arg(long)]
        canonical: bool,
        /// Include the kernel dimension.
        #[arg(long)]
        kernel_dim: bool,
        /// Classify the canonical state.
        #[arg(long)]
        classify: bool,
    },
    /// Annihilator membership and balance classification of a state.
    Classify {
        spec: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Whether T_t(p) ≥ p for a projector p.
    Subharmonic {
        spec: PathBuf,
        #[arg(long)]
        projector: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 2.0])]
        times: Vec<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Integrate the master equation and write observables as CSV.
    Evolve(EvolveArgs),
    /// The modified AKV transport model.
    Akv {
        #[command(subcommand)]
        command: AkvCommand,
    },
    /// The KV photosynthesis model.
    Kv {
        #[command(subcommand)]
        command: KvCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    KernelPairs,
    Quadratic,
}

impl From<Route> for WdRoute {
    fn from(r: Route) -> Self {
        match r {
            Route::KernelPairs => WdRoute::KernelPairs,
            Route::Quadratic => WdRoute::Quadratic,
        }
    }
}

#[derive(Args)]
struct EvolveArgs {
    spec: PathBuf,
    /// Initial state as a JSON matrix, or `mixed` for I/d.
    #[arg(long)]
    initial: String,
    #[arg(long)]
    t: f64,
    /// `name=file.json` pairs; `H` alone uses the Hamiltonian.
    #[arg(long, value_delimiter = ',')]
    observables: Vec<String>,
    /// Fixed step; adaptive when omitted.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

#[derive(Args, Clone)]
struct AkvArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// ε1,ε2,ε3
    #[arg(long, value_delimiter = ',', default_values_t = [7.0, 3.0, 1.0])]
    eps: Vec<f64>,
    /// Twelve values: Γ_Re,−, Γ_Re,+, Γ_Im,−, Γ_Im,+ for ω1, ω2, ω3.
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
}

impl AkvArgs {
    fn params(&self) -> Result<AkvParams> {
        let eps: [f64; 3] = self.eps.as_slice().try_into().context("--eps takes three values")?;
        let rates = match &self.gammas {
            None => AkvRates::default(),
            Some(g) => {
                if g.len() != 12 {
                    bail!("--gammas takes twelve values, got {}", g.len());
                }
                let ch = |i: usize| ChannelGammas::new(g[4 * i], g[4 * i + 1], g[4 * i + 2], g[4 * i + 3]);
                AkvRates {
                    omega1: ch(0),
                    omega2: ch(1),
                    omega3: ch(2),
                }
            }
        };
        Ok(AkvParams {
            eps,
            rates,
            ..AkvParams::new(self.n, self.m)
        })
    }
}

#[derive(Subcommand)]
enum AkvCommand {
    /// Write the model as a JSON spec.
    Build(AkvArgs),
    /// Run every check; exits non-zero if one fails.
    Verify {
        #[command(flatten)]
        args: AkvArgs,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Long-time mass on P3 as the ω2 rate ratio varies.
    Sweep {
        #[command(flatten)]
        args: AkvArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.1, 0.01])]
        ratios: Vec<f64>,
    },
}

#[derive(Args, Clone)]
struct KvArgs {
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    eps1: f64,
    #[arg(long, default_value_t = 2.5)]
    eps2: f64,
    #[arg(long, default_value_t = 0.7)]
    theta: f64,
}

impl KvArgs {
    fn params(&self) -> KvParams {
        KvParams {
            n: self.n,
            eps1: self.eps1,
            eps2: self.eps2,
            theta: self.theta,
            ..KvParams::default()
        }
    }
}

#[derive(Subcommand)]
enum KvCommand {
    Build(KvArgs),
    Verify {
        #[command(flatten)]
        args: KvArgs,
        #[arg(long)]
        json: bool,
    },
}

fn load_spec(path: &Path) -> Result<WcltGenerator> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = ModelSpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(spec.build()?)
}

fn load_matrix(path: &Path) -> Result<CMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(from_pair_rows(&rows)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => write_stdout(&format!("{text}\n")),
    }
}

/// Writes to stdout, treating a closed pipe (`wclt ... | head`) as success.
fn write_stdout(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn emit_json(out: Option<&Path>, v: &Value) -> Result<()> {
    emit(out, &serde_json::to_string_pretty(v)?)
}

fn frequencies(gen: &WcltGenerator) -> Value {
    let sd = gen.spectral();
    let freqs = bohr_frequencies(sd, sd.cluster_tol());
    let list: Vec<Value> = freqs
        .iter()
        .map(|f| {
            json!({
                "omega": f.omega,
                "pairs": f.pairs,
                "energies": f.energy_pairs(sd),
            })
        })
        .collect();
    json!({ "levels": sd.eigenvalues(), "frequencies": list })
}

fn kraus(gen: &WcltGenerator) -> Value {
    let list: Vec<Value> = gen
        .channels()
        .iter()
        .map(|c| {
            json!({
                "omega": c.omega(),
                "trivial": c.is_trivial(),
                "rates": c.rates(),
                "kraus": to_pair_rows(c.kraus()),
            })
        })
        .collect();
    json!({ "channels": list })
}

fn wd(gen: &WcltGenerator, route: Route) -> Result<Value> {
    let s = interaction_free_subspace(gen, route.into())?;
    let other = interaction_free_subspace(
        gen,
        match route {
            Route::KernelPairs => WdRoute::Quadratic,
            Route::Quadratic => WdRoute::KernelPairs,
        },
    )?;
    Ok(json!({
        "dim": s.dim(),
        "basis": to_pair_rows(s.basis()),
        "projector": to_pair_rows(s.projector().matrix()),
        "route_deviation": s.span_distance(&other),
    }))
}

fn stationary(gen: &WcltGenerator, canonical: bool, kernel_dim: bool, classify: bool) -> Result<Value> {
    let st = stationary_kernel(gen)?;
    let mut v = json!({
        "kernel_residual": st.kernel_residual,
        "canonical_residual": st.canonical_residual,
    });
    if kernel_dim || !(canonical || classify) {
        v["kernel_dim"] = json!(st.dim());
    }
    if canonical {
        v["canonical"] = json!(to_pair_rows(st.canonical.matrix()));
    }
    if classify {
        v["classification"] = serde_json::to_value(detailed_balance_classify(gen, &st.canonical, 1e-9)?)?;
    }
    Ok(v)
}

fn parse_observables(gen: &WcltGenerator, specs: &[String]) -> Result<Vec<(String, HermitianOperator)>> {
    specs
        .iter()
        .map(|s| match s.split_once('=') {
            Some((name, path)) => Ok((name.to_string(), HermitianOperator::new(load_matrix(Path::new(path))?)?)),
            None if s == "H" => Ok(("H".to_string(), gen.spectral().hamiltonian())),
            None => bail!("observable `{s}` must be name=file.json or H"),
        })
        .collect()
}

fn run_evolve(a: &EvolveArgs, out: Option<&Path>) -> Result<()> {
    let gen = load_spec(&a.spec)?;
    let rho0 = if a.initial == "mixed" {
        DensityMatrix::maximally_mixed(gen.dim())
    } else {
        DensityMatrix::new(load_matrix(Path::new(&a.initial))?)?
    };
    let obs = parse_observables(&gen, &a.observables)?;
    if !(a.t > 0.0) {
        bail!("--t must be positive");
    }
    let samples = a.samples.max(1);
    let times: Vec<f64> = (1..=samples).map(|k| a.t * k as f64 / samples as f64).collect();
    let opts = match a.dt {
        Some(dt) => EvolveOptions::fixed(dt),
        None => EvolveOptions::adaptive(a.tol),
    }
    .with_samples(times);
    let traj = evolve(&gen, &rho0, a.t, &opts, &obs)?;
    let csv = traj.to_csv();
    match out {
        Some(p) => fs::write(p, csv).with_context(|| format!("writing {}", p.display())),
        None => write_stdout(&csv),
    }
}

fn emit_report(report: &VerifyReport, as_json: bool, out: Option<&Path>) -> Result<ExitCode> {
    if as_json {
        emit_json(out, &serde_json::to_value(report)?)?;
    } else {
        emit(out, report.to_string().trim_end())?;
    }
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_ENV} must be a positive integer"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Frequencies { spec } => emit_json(out, &frequencies(&load_spec(spec)?))?,
        Command::Kraus { spec } => emit_json(out, &kraus(&load_spec(spec)?))?,
        Command::Wd { spec, route } => emit_json(out, &wd(&load_spec(spec)?, *route)?)?,
        Command::Stationary {
            spec,
            canonical,
            kernel_dim,
            classify,
        } => emit_json(out, &stationary(&load_spec(spec)?, *canonical, *kernel_dim, *classify)?)?,
        Command::Classify { spec, state, tol } => {
            let gen = load_spec(spec)?;
            let rho = DensityMatrix::new(load_matrix(state)?)?;
            let residual = gen.apply_predual(rho.matrix())?;
            let v = json!({
                "stationary_residual": wclt::linalg::frobenius(&residual),
                "annihilator": annihilator_membership(&gen, &rho, *tol)?,
                "classification": detailed_balance_classify(&gen, &rho, *tol)?,
            });
            emit_json(out, &v)?;
        }
        Command::Subharmonic {
            spec,
            projector,
            times,
            tol,
        } => {
            let gen = load_spec(spec)?;
            let p = HermitianOperator::new(load_matrix(projector)?)?;
            emit_json(out, &serde_json::to_value(is_subharmonic(&gen, &p, times, *tol)?)?)?;
        }
        Command::Evolve(a) => run_evolve(a, out)?,
        Command::Akv { command } => match command {
            AkvCommand::Build(a) => {
                let model = AkvModel::build(a.params()?)?;
                emit(out, &ModelSpec::from_generator(model.generator()).to_json()?)?;
            }
            AkvCommand::Verify { args, json } => {
                return emit_report(&verify_akv(&args.params()?, cli.seed)?, *json, out);
            }
            AkvCommand::Sweep { args, ratios } => {
                let pts = transport_sweep(&args.params()?, ratios)?;
                let list: Vec<Value> = pts
                    .iter()
                    .map(|p| {
                        json!({
                            "ratio": p.ratio,
                            "p3_mass": p.p3_mass,
                            "predicted": p.predicted,
                            "residual": p.residual,
                        })
                    })
                    .collect();
                emit_json(out, &json!({ "points": list }))?;
            }
        },
        Command::Kv { command } => match command {
            KvCommand::Build(a) => {
                let model = KvModel::build(a.params())?;
                emit(out, &ModelSpec::from_generator(model.generator()).to_json()?)?;
            }
            KvCommand::Verify { args, json } => {
                return emit_report(&verify_kv(&args.params(), cli.seed)?, *json, out);
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
