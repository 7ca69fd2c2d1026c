//! Experiment specifications, the Monte Carlo runner and aggregation.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use marelay_core::{
    ao_solve, fpa_solve, otpa_solve, realization_seed, sample_channel, Position, SolutionState,
    SystemConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// One configuration; the sweep value is `N`.
    Single,
    /// Rate traces of the alternating loop; the sweep value is `N`.
    Convergence,
    /// Relay power budget in dB.
    SweepPower,
    SweepAntennas,
    /// Region side length in wavelengths.
    SweepRegion,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Single => "single",
            Self::Convergence => "convergence",
            Self::SweepPower => "sweep_power",
            Self::SweepAntennas => "sweep_antennas",
            Self::SweepRegion => "sweep_region",
        }
    }

    pub fn default_values(self, base: &SystemConfig) -> Vec<f64> {
        match self {
            Self::Single => vec![base.n_antennas as f64],
            Self::Convergence => vec![2.0, 4.0, 6.0],
            Self::SweepPower => vec![0.0, 5.0, 10.0, 15.0, 20.0],
            Self::SweepAntennas => (2..=8).map(f64::from).collect(),
            Self::SweepRegion => vec![1.0, 2.0, 3.0, 4.0, 5.0],
        }
    }

    pub fn default_schemes(self) -> Vec<Scheme> {
        match self {
            Self::Convergence => vec![Scheme::Proposed],
            _ => Scheme::ALL.to_vec(),
        }
    }

    fn counts_antennas(self) -> bool {
        matches!(self, Self::Single | Self::Convergence | Self::SweepAntennas)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Proposed,
    Otpa,
    Fpa,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::Otpa, Scheme::Fpa];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::Otpa => "otpa",
            Self::Fpa => "fpa",
        }
    }

    pub fn solve(
        self,
        cfg: &SystemConfig,
        ch: &marelay_core::ChannelRealization,
    ) -> marelay_core::Result<SolutionState> {
        match self {
            Self::Proposed => ao_solve(cfg, ch),
            Self::Otpa => otpa_solve(cfg, ch),
            Self::Fpa => fpa_solve(cfg, ch),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposed" => Ok(Self::Proposed),
            "otpa" => Ok(Self::Otpa),
            "fpa" => Ok(Self::Fpa),
            other => Err(format!("unknown scheme `{other}` (expected proposed, otpa or fpa)")),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub base: SystemConfig,
    /// Sorted ascending; meaning depends on `kind`.
    pub values: Vec<f64>,
    pub n_realizations: u64,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
    pub output: Option<PathBuf>,
    /// Fill `wall_time_s`; off by default so that output is byte-reproducible.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentSpec {
    /// Default base configuration and sweep for `kind`.
    pub fn new(kind: ExperimentKind) -> Self {
        let base = SystemConfig::default();
        Self {
            kind,
            values: kind.default_values(&base),
            base,
            n_realizations: 100,
            master_seed: 0,
            schemes: kind.default_schemes(),
            output: None,
            record_wall_time: false,
        }
    }

    /// The system configuration at one sweep value.
    pub fn config_at(&self, value: f64) -> Result<SystemConfig, SimError> {
        let mut cfg = self.base.clone();
        match self.kind {
            ExperimentKind::SweepPower => cfg.relay_power_budget = db_to_linear(value),
            ExperimentKind::SweepRegion => cfg.region_size = value,
            kind if kind.counts_antennas() => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(SimError::InvalidSpec(format!(
                        "{kind} values are antenna counts, got {value}"
                    )));
                }
                cfg.n_antennas = value as usize;
            }
            _ => unreachable!(),
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |msg: String| Err(SimError::InvalidSpec(msg));
        if self.values.is_empty() {
            return invalid("no sweep values".into());
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return invalid("sweep values must be finite".into());
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("sweep values must be strictly increasing".into());
        }
        if self.n_realizations == 0 {
            return invalid("at least one realization is required".into());
        }
        if self.schemes.is_empty() {
            return invalid("no schemes selected".into());
        }
        if self.kind == ExperimentKind::Single && self.values.len() != 1 {
            return invalid("a single experiment has exactly one value".into());
        }
        for &v in &self.values {
            self.config_at(v)?
                .validate()
                .map_err(|e| SimError::InvalidSpec(format!("at sweep value {v}: {e}")))?;
        }
        Ok(())
    }
}

/// One scheme on one realization at one sweep value. CSV column names are the
/// field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: ExperimentKind,
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub realization: u64,
    pub seed: u64,
    /// Fingerprint of the channel draw; equal across schemes of a realization.
    pub realization_hash: String,
    pub rate: Option<f64>,
    pub snr: Option<f64>,
    pub iterations: Option<usize>,
    pub rank_residual: Option<f64>,
    pub wall_time_s: Option<f64>,
    pub error: Option<String>,
}

/// Rate trace and final placements of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub realization: u64,
    pub trace: Vec<f64>,
    pub rx_positions: Vec<Position>,
    pub tx_positions: Vec<Position>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub traces: Vec<TraceRecord>,
}

/// Runs every (sweep value, realization) pair on the rayon pool. Each pair
/// draws its channel once from `realization_seed(master_seed, realization)`
/// and hands that same draw to every scheme. Rows come back ordered by sweep
/// value, then realization, then scheme, whatever the scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput, SimError> {
    spec.validate()?;
    let configs = spec
        .values
        .iter()
        .map(|&v| spec.config_at(v))
        .collect::<Result<Vec<_>, _>>()?;
    let work: Vec<(usize, u64)> = (0..spec.values.len())
        .flat_map(|vi| (0..spec.n_realizations).map(move |r| (vi, r)))
        .collect();

    let chunks: Vec<Vec<(ResultRow, Option<TraceRecord>)>> = work
        .par_iter()
        .map(|&(vi, realization)| {
            let cfg = &configs[vi];
            let value = spec.values[vi];
            let seed = realization_seed(spec.master_seed, realization);
            let ch = sample_channel(cfg, seed);
            let hash = format!("{:016x}", ch.fingerprint());
            spec.schemes
                .iter()
                .map(|&scheme| {
                    let start = Instant::now();
                    let result = scheme.solve(cfg, &ch);
                    let wall = spec.record_wall_time.then(|| start.elapsed().as_secs_f64());
                    let mut row = ResultRow {
                        experiment: spec.kind,
                        sweep_value: value,
                        scheme,
                        realization,
                        seed,
                        realization_hash: hash.clone(),
                        rate: None,
                        snr: None,
                        iterations: None,
                        rank_residual: None,
                        wall_time_s: wall,
                        error: None,
                    };
                    match result {
                        Ok(s) => {
                            row.rate = Some(s.rate);
                            row.snr = Some(s.snr);
                            row.iterations = Some(s.iterations);
                            row.rank_residual = s.rank_residual;
                            let trace = TraceRecord {
                                sweep_value: value,
                                scheme,
                                realization,
                                trace: s.trace,
                                rx_positions: s.rx_positions.iter().copied().collect(),
                                tx_positions: s.tx_positions.iter().copied().collect(),
                            };
                            (row, Some(trace))
                        }
                        Err(e) => {
                            row.error = Some(e.to_string());
                            (row, None)
                        }
                    }
                })
                .collect()
        })
        .collect();

    let mut out = ExperimentOutput::default();
    for (row, trace) in chunks.into_iter().flatten() {
        out.rows.push(row);
        out.traces.extend(trace);
    }
    Ok(out)
}

/// Mean rate per (sweep value, scheme) over the successful runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: ExperimentKind,
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub count: usize,
    pub failures: usize,
    pub mean_rate: f64,
    /// Standard error of the mean; zero for a single sample.
    pub stderr_rate: f64,
}

pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>, SimError> {
    if rows.is_empty() {
        return Err(SimError::InvalidSpec("cannot summarize an empty result set".into()));
    }
    let mut groups: Vec<(ExperimentKind, f64, Scheme, Vec<f64>, usize)> = Vec::new();
    for row in rows {
        let idx = match groups
            .iter()
            .position(|g| g.1.to_bits() == row.sweep_value.to_bits() && g.2 == row.scheme)
        {
            Some(i) => i,
            None => {
                groups.push((row.experiment, row.sweep_value, row.scheme, Vec::new(), 0));
                groups.len() - 1
            }
        };
        match row.rate {
            Some(r) => groups[idx].3.push(r),
            None => groups[idx].4 += 1,
        }
    }
    groups.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)));
    Ok(groups
        .into_iter()
        .map(|(experiment, sweep_value, scheme, rates, failures)| {
            let (mean_rate, stderr_rate) = mean_stderr(&rates);
            SummaryRow {
                experiment,
                sweep_value,
                scheme,
                count: rates.len(),
                failures,
                mean_rate,
                stderr_rate,
            }
        })
        .collect())
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
