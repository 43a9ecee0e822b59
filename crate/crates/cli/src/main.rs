mod commands;
mod output;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::PathBuf;

/// Kernels, interval spectra, boundary layers and regularity criteria.
#[derive(Parser, Debug)]
#[command(name = "reg-lab", version)]
struct Cli {
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config; its values override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Rescaled kernel samples against the fitted tail asymptotics.
    Kernel(KernelArgs),
    /// Top eigenvalue of the clamped interval problem.
    Spectrum(SpectrumArgs),
    /// Continuation of λ₀(l) with sign-change roots.
    Branch(BranchArgs),
    /// Wall boundary-layer profile.
    Blayer(BlayerArgs),
    /// Regularity verdict for a lateral boundary.
    Criterion(CriterionArgs),
    /// Rescaled PDE run.
    Simulate(SimulateArgs),
    /// Bundled sweeps: table1, branch-roots, petrovskii-heat, critical-constants.
    Reproduce(ReproduceArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Kernel(_) => "kernel",
            Command::Spectrum(_) => "spectrum",
            Command::Branch(_) => "branch",
            Command::Blayer(_) => "blayer",
            Command::Criterion(_) => "criterion",
            Command::Simulate(_) => "simulate",
            Command::Reproduce(_) => "reproduce",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelArgs {
    /// parabolic (with --m), heat, biharmonic, dispersion3 or beam4.
    #[arg(long, default_value = "parabolic")]
    pub family: String,
    #[arg(long, default_value_t = 2)]
    pub m: u32,
    /// start:end:step
    #[arg(long, default_value = "0:10:0.05", allow_hyphen_values = true)]
    pub range: String,
    /// lo:hi window of the asymptotic fit; the family default when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub fit_window: Option<String>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumArgs {
    /// Half-lengths, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub l: Vec<f64>,
    /// start:end:step grid of half-lengths.
    #[arg(long)]
    pub l_range: Option<String>,
    /// Bundled table (only `table1`).
    #[arg(long)]
    pub reproduce: Option<String>,
    /// start:end:step continuation of the top eigenvalue.
    #[arg(long)]
    pub branch: Option<String>,
    /// With --branch, list the refined roots instead of the samples.
    #[arg(long)]
    pub roots: bool,
    #[arg(long, default_value = "shooting")]
    pub method: String,
    /// Order of `u_t = −(−Δ)^m u`.
    #[arg(long, default_value_t = 2)]
    pub m: u32,
    /// Chebyshev intervals for collocation.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchArgs {
    /// start:end:step
    #[arg(default_value = "3.5:8:0.05")]
    pub range: String,
    #[arg(long)]
    pub roots: bool,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlayerArgs {
    /// biharmonic, heat, dispersion3 or pme4.
    #[arg(long, default_value = "biharmonic")]
    pub family: String,
    /// Truncation length of the ξ interval.
    #[arg(long, default_value_t = 30.0)]
    pub length: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionArgs {
    /// heat, biharmonic, polyharmonic:<m>, dispersion3 or beam4.
    #[arg(long, default_value = "biharmonic")]
    pub family: String,
    /// Wall side for dispersion3.
    #[arg(long, default_value = "right")]
    pub side: String,
    /// Boundary, e.g. const:4, powerlog:C=2.9,g=0.75, sqrtlog:C=2, power:C=1,g=1.5.
    #[arg(long)]
    pub phi: Option<String>,
    /// Apply the oscillatory cut-off.
    #[arg(long)]
    pub cutoff: bool,
    /// Smoothing width of the cut-off in phase.
    #[arg(long, default_value_t = reglab::criteria::DEFAULT_EPS_S)]
    pub eps_s: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    /// biharmonic or heat.
    #[arg(long, default_value = "biharmonic")]
    pub family: String,
    #[arg(long, default_value = "const:4")]
    pub phi: String,
    #[arg(long)]
    pub cutoff: bool,
    /// Defaults to 0 for constant boundaries and e otherwise.
    #[arg(long)]
    pub tau_start: Option<f64>,
    #[arg(long, default_value_t = 400.0)]
    pub tau_end: f64,
    /// Grid intervals on [−1, 1].
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Random smooth initial data from this seed; a centred bump otherwise.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 8)]
    pub modes: usize,
    /// lo:hi window of the rate fit; the second half of the run when absent.
    #[arg(long)]
    pub fit_window: Option<String>,
    /// Times at which the wall profile is compared with the layer.
    #[arg(long, value_delimiter = ',')]
    pub bl_check: Vec<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub rtol: f64,
    #[arg(long, default_value_t = 2_000_000)]
    pub max_steps: usize,
    /// Run the l = 4 / l = 5 sign suite over the given seeds.
    #[arg(long = "verify-P2")]
    pub verify_p2: bool,
    #[arg(long, value_delimiter = ',', default_values_t = reglab::pdesim::P2_SEEDS)]
    pub p2_seeds: Vec<u64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceArgs {
    /// table1, branch-roots, petrovskii-heat or critical-constants.
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    command: Option<String>,
    out: Option<PathBuf>,
    format: Option<Format>,
    seed: Option<u64>,
    #[serde(default)]
    params: Map<String, Value>,
}

fn merge<T: Serialize + DeserializeOwned>(args: &T, params: &Map<String, Value>) -> Result<T> {
    let mut v = serde_json::to_value(args)?;
    let obj = v.as_object_mut().expect("argument records are objects");
    for (k, val) in params {
        obj.insert(k.clone(), val.clone());
    }
    serde_json::from_value(v).context("config params")
}

fn apply_config(cmd: Command, cfg: &ConfigFile) -> Result<Command> {
    let p = &cfg.params;
    Ok(match cmd {
        Command::Kernel(a) => Command::Kernel(merge(&a, p)?),
        Command::Spectrum(a) => Command::Spectrum(merge(&a, p)?),
        Command::Branch(a) => Command::Branch(merge(&a, p)?),
        Command::Blayer(a) => Command::Blayer(merge(&a, p)?),
        Command::Criterion(a) => Command::Criterion(merge(&a, p)?),
        Command::Reproduce(a) => Command::Reproduce(merge(&a, p)?),
        Command::Simulate(a) => {
            let mut a: SimulateArgs = merge(&a, p)?;
            if cfg.seed.is_some() {
                a.seed = cfg.seed;
            }
            Command::Simulate(a)
        }
    })
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("REG_LAB_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).with_context(|| format!("REG_LAB_THREADS must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    let mut json = cli.json;
    let mut out = cli.out;
    let mut command = cli.command;
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: ConfigFile = serde_json::from_str(&text).with_context(|| format!("config {}", path.display()))?;
        if command.is_none() {
            let Some(name) = &cfg.command else { bail!("config names no command and none was given") };
            let parsed = Cli::try_parse_from(["reg-lab", name.as_str()]).map_err(|e| anyhow::anyhow!("config command '{name}': {}", first_line(&e.to_string())))?;
            command = parsed.command;
        }
        let cmd = command.take().expect("command resolved above");
        if let Some(name) = &cfg.command {
            if name != cmd.name() {
                bail!("config is for '{name}', command line asks for '{}'", cmd.name());
            }
        }
        if cfg.seed.is_some() && !matches!(cmd, Command::Simulate(_)) {
            bail!("seed applies only to simulate");
        }
        command = Some(apply_config(cmd, &cfg)?);
        if let Some(f) = cfg.format {
            json = f == Format::Json;
        }
        if cfg.out.is_some() {
            out = cfg.out;
        }
    }
    let Some(command) = command else { bail!("no command given; see --help") };
    let artifact = match &command {
        Command::Kernel(a) => commands::kernel(a)?,
        Command::Spectrum(a) => commands::spectrum(a)?,
        Command::Branch(a) => commands::spectrum(&SpectrumArgs {
            l: Vec::new(),
            l_range: None,
            reproduce: None,
            branch: Some(a.range.clone()),
            roots: a.roots,
            method: "shooting".into(),
            m: 2,
            grid: None,
            tol: a.tol,
        })?,
        Command::Blayer(a) => commands::blayer(a)?,
        Command::Criterion(a) => commands::criterion(a)?,
        Command::Simulate(a) => commands::simulate(a)?,
        Command::Reproduce(a) => commands::reproduce(a)?,
    };
    artifact.write(json, out.as_deref())
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("").trim()
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            eprintln!("reg-lab: {}", first_line(&e.to_string()).trim_start_matches("error: "));
            std::process::exit(2);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("reg-lab: {e:#}");
        std::process::exit(1);
    }
}
