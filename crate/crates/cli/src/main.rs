use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C64;
use qcavity::entanglement::{concurrence, QubitDensityMatrix};
use qcavity_cli::config::{FidelityEnvelope, FidelitySection, QuasistaticSection, SystemSection};
use qcavity_cli::output::write_report;
use qcavity_cli::{presets, ConfigError, RunError, ScenarioConfig, ScenarioKind};

/// Environment variable that fixes the worker thread count.
const THREADS_VAR: &str = "QCAVITY_THREADS";

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "qcavity", version, about = "Two qubits in a driven cavity: scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a TOML config.
    Run {
        config: PathBuf,
        /// CSV destination, overriding `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named preset, writing `<dir>/<name>.csv` or to standard output.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the TOML config of a preset.
    ShowPreset { name: String },
    /// List presets with their parameters and the figure each reproduces.
    ListPresets,
    /// Run the invariant suite.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Quench of the quasistatic ground state.
    Quasistatic {
        /// Squeezing values, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        #[arg(long)]
        no_rotation: bool,
        /// `g/ω`.
        #[arg(long, default_value_t = 0.01)]
        g: f64,
        /// End of the window in units of `1/g`.
        #[arg(long, default_value_t = 20.0)]
        gt_end: f64,
        #[arg(long, default_value_t = 2000)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Displacement fidelity against `gτ_d` with the fitted log–log slope.
    FidelitySweep {
        /// `hg0`, `mixed`, or `m:c` pairs such as `0:0.7071,1:0.7071`.
        #[arg(long, default_value = "hg0")]
        envelope: String,
        /// Target displacement `re,im`.
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, -0.05], allow_hyphen_values = true)]
        z0: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        min: f64,
        #[arg(long, default_value_t = 0.6)]
        max: f64,
        #[arg(long, default_value_t = 8)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Concurrence of a two-qubit state: 8 numbers (pure state, re/im pairs)
    /// or 32 (density matrix, row major, re/im pairs).
    Concurrence {
        #[arg(value_delimiter = ',', allow_hyphen_values = true, required = true)]
        values: Vec<f64>,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Io(_) => EXIT_IO,
            Self::Config(_) => EXIT_CONFIG,
            Self::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Numerical(m) | Self::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Self::Io(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => c.into(),
            RunError::Numerical(_) => Self::Numerical(e.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Numerical(format!("thread pool: {e}")))
}

/// Validates through the parser, runs and writes the report.
fn execute(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<(), Failure> {
    let text = cfg.to_toml();
    let cfg = ScenarioConfig::parse(&text)?;
    let start = Instant::now();
    let report = qcavity_cli::run(&cfg)?;
    let target = out.map(Path::to_path_buf).or_else(|| cfg.output.as_ref().map(PathBuf::from));
    let written = write_report(target.as_deref(), &text, &report).map_err(|e| Failure::Io(format!("writing output: {e}")))?;
    for (k, v) in &report.summary {
        eprintln!("{k} = {v}");
    }
    for path in &written {
        eprintln!("wrote {}", path.display());
    }
    log::info!("{} finished in {:.2} s", cfg.kind.name(), start.elapsed().as_secs_f64());
    Ok(())
}

fn parse_envelope(spec: &str) -> Result<(String, Vec<(usize, f64)>), Failure> {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    match spec {
        "hg0" => return Ok(("hg0".into(), vec![(0, 1.0)])),
        "hg1" => return Ok(("hg1".into(), vec![(1, 1.0)])),
        "mixed" => return Ok(("mixed".into(), vec![(0, c), (1, c)])),
        _ => {}
    }
    let terms = spec
        .split(',')
        .map(|pair| {
            let (m, c) = pair.split_once(':')?;
            Some((m.trim().parse().ok()?, c.trim().parse().ok()?))
        })
        .collect::<Option<Vec<(usize, f64)>>>()
        .ok_or_else(|| Failure::Config(format!("envelope: expected hg0, hg1, mixed or m:c pairs, got {spec:?}")))?;
    Ok(("custom".into(), terms))
}

fn concurrence_of(values: &[f64]) -> Result<(), Failure> {
    let c = |i: usize| C64::new(values[2 * i], values[2 * i + 1]);
    let rho = match values.len() {
        8 => {
            let psi = Vector4::from_fn(|i, _| c(i));
            let norm = psi.norm();
            if norm == 0.0 {
                return Err(Failure::Config("state vector is zero".into()));
            }
            QubitDensityMatrix::pure(&(psi / C64::new(norm, 0.0)))
        }
        32 => QubitDensityMatrix::new(Matrix4::from_fn(|i, j| c(4 * i + j))).map_err(|e| Failure::Config(e.to_string()))?,
        n => return Err(Failure::Config(format!("expected 8 or 32 numbers, got {n}"))),
    };
    let res = concurrence(&rho).map_err(|e| Failure::Numerical(e.to_string()))?;
    println!("naive_concurrence = {}", res.naive);
    println!("concurrence = {}", res.concurrence);
    println!("lambdas = {:?}", res.lambdas);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out } => execute(&ScenarioConfig::load(&config)?, out.as_deref()),
        Command::Preset { name, out } => {
            let preset = presets::find(&name).ok_or_else(|| Failure::Config(format!("unknown preset {name:?}; see list-presets")))?;
            let target = out.map(|dir| dir.join(format!("{name}.csv")));
            execute(&preset.config, target.as_deref())
        }
        Command::ShowPreset { name } => {
            let preset = presets::find(&name).ok_or_else(|| Failure::Config(format!("unknown preset {name:?}; see list-presets")))?;
            print!("{}", preset.config.to_toml());
            Ok(())
        }
        Command::ListPresets => {
            print!("{}", presets::table());
            Ok(())
        }
        Command::Selftest { seed } => {
            let outcomes = qcavity::validation::run_selftest(seed);
            for o in &outcomes {
                println!("{} [{}] ({:.2} s) {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.seconds, o.detail);
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
            if failed > 0 {
                return Err(Failure::Numerical(format!("{failed} invariant checks failed")));
            }
            Ok(())
        }
        Command::Quasistatic { r, no_rotation, g, gt_end, points, out } => {
            let mut cfg = ScenarioConfig::new(ScenarioKind::Quasistatic);
            cfg.system = Some(SystemSection { g_over_omega: Some(g), n_max: None });
            cfg.quasistatic = Some(QuasistaticSection { r, rotation: vec![!no_rotation], gt_end, points, summary_only: false });
            execute(&cfg, out.as_deref())
        }
        Command::FidelitySweep { envelope, z0, min, max, points, out } => {
            let (name, hg) = parse_envelope(&envelope)?;
            let mut cfg = ScenarioConfig::new(ScenarioKind::FidelitySweep);
            cfg.fidelity = Some(FidelitySection {
                z0: [z0[0], z0[1]],
                envelopes: vec![FidelityEnvelope { name, hg }],
                g_tau_min: min,
                g_tau_max: max,
                points,
                omega_tau_d: qcavity::magnus::FIDELITY_OMEGA_TAU,
            });
            execute(&cfg, out.as_deref())
        }
        Command::Concurrence { values } => concurrence_of(&values),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match configure_threads().and_then(|()| dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
