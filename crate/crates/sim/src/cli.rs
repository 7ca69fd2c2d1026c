//! `marelay` command line.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use marelay_core::SolverSettings;
use serde::Deserialize;

use crate::experiment::{db_to_linear, run_experiment, summarize, ExperimentKind, ExperimentSpec, Scheme};
use crate::output::{format_summary, write_outputs};
use crate::SimError;

#[derive(Debug, Parser)]
#[command(name = "marelay", version, about = "Movable-antenna AF relay experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One configuration, all schemes.
    Single(CommonArgs),
    /// Per-round rate traces of the alternating loop for several array sizes.
    Convergence(CommonArgs),
    /// Sweep the relay power budget (dB), source power held fixed.
    SweepPower(CommonArgs),
    SweepAntennas(CommonArgs),
    /// Sweep the region side length (wavelengths).
    SweepRegion(CommonArgs),
}

impl Command {
    fn split(&self) -> (ExperimentKind, &CommonArgs) {
        match self {
            Self::Single(a) => (ExperimentKind::Single, a),
            Self::Convergence(a) => (ExperimentKind::Convergence, a),
            Self::SweepPower(a) => (ExperimentKind::SweepPower, a),
            Self::SweepAntennas(a) => (ExperimentKind::SweepAntennas, a),
            Self::SweepRegion(a) => (ExperimentKind::SweepRegion, a),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Master seed; realization i uses a seed derived from (seed, i).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub realizations: Option<u64>,
    /// Number of relay antennas N.
    #[arg(long)]
    pub antennas: Option<usize>,
    /// Region side length A in wavelengths.
    #[arg(long)]
    pub region: Option<f64>,
    /// Source transmit power in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub ps_db: Option<f64>,
    /// Relay power budget in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub ptot_db: Option<f64>,
    /// Paths per hop (receive and transmit).
    #[arg(long)]
    pub paths: Option<usize>,
    /// Minimum inter-antenna distance in wavelengths.
    #[arg(long)]
    pub min_dist: Option<f64>,
    /// Comma-separated subset of proposed,otpa,fpa.
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<Scheme>>,
    /// Comma-separated sweep values overriding the defaults.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Option<Vec<f64>>,
    /// Output stem; writes <out>.csv, <out>.summary.csv and <out>.traces.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with any of the flag settings; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Record per-run wall time (makes the CSV non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

/// `--config` file contents. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub realizations: Option<u64>,
    pub antennas: Option<usize>,
    pub region: Option<f64>,
    pub ps_db: Option<f64>,
    pub ptot_db: Option<f64>,
    pub paths: Option<usize>,
    pub min_dist: Option<f64>,
    pub schemes: Option<Vec<Scheme>>,
    pub values: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub solver: Option<SolverSettings>,
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, SimError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| SimError::InvalidSpec(format!("{}: {e}", path.display())))
    }
}

/// Defaults, then the config file, then command-line flags.
pub fn build_spec(kind: ExperimentKind, args: &CommonArgs) -> Result<ExperimentSpec, SimError> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut spec = ExperimentSpec::new(kind);
    let base = &mut spec.base;

    if let Some(s) = file.solver {
        base.solver = s;
    }
    if let Some(n) = args.antennas.or(file.antennas) {
        base.n_antennas = n;
    }
    if let Some(a) = args.region.or(file.region) {
        base.region_size = a;
    }
    if let Some(d) = args.min_dist.or(file.min_dist) {
        base.min_distance = d;
    }
    if let Some(l) = args.paths.or(file.paths) {
        base.n_rx_paths = l;
        base.n_tx_paths = l;
    }
    if let Some(db) = args.ps_db.or(file.ps_db) {
        base.source_power = db_to_linear(db);
    }
    if let Some(db) = args.ptot_db.or(file.ptot_db) {
        base.relay_power_budget = db_to_linear(db);
    }

    spec.values = match args.values.clone().or(file.values) {
        Some(v) => v,
        None => kind.default_values(&spec.base),
    };
    if let Some(s) = args.schemes.clone().or(file.schemes) {
        spec.schemes = s;
    }
    if let Some(n) = args.realizations.or(file.realizations) {
        spec.n_realizations = n;
    }
    if let Some(seed) = args.seed.or(file.seed) {
        spec.master_seed = seed;
    }
    spec.output = Some(
        args.out
            .clone()
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from(kind.as_str())),
    );
    spec.record_wall_time = args.timing;
    spec.validate()?;
    Ok(spec)
}

pub fn run(cli: &Cli) -> Result<String, SimError> {
    let (kind, args) = cli.command.split();
    let spec = build_spec(kind, args)?;
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(SimError::InvalidSpec("--threads must be positive".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let output = run_experiment(&spec)?;
    let summary = summarize(&output.rows)?;
    let stem = spec.output.clone().expect("set by build_spec");
    let paths = write_outputs(&stem, &output, &summary)?;
    Ok(format!(
        "{}wrote {}, {}, {}\n",
        format_summary(&summary),
        paths.rows.display(),
        paths.summary.display(),
        paths.traces.display()
    ))
}

/// Parses `args`, runs, and maps failures onto exit codes: 0 success, 1 bad
/// arguments or spec, 2 IO or serialization.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
