//! System parameters and solver settings.
//!
//! Lengths are measured in wavelengths; `wavelength` is kept as a field so the
//! phase formulas read naturally but it is always 1.0 after validation.

use serde::{Deserialize, Serialize};

use crate::channel::PositionSet;
use crate::position_opt::GaParams;
use crate::{Error, Result};

/// Tolerances and iteration caps for every solver stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Target relative gap / residual for the interior-point SDP solver.
    pub sdp_tol: f64,
    /// Residual level at which a stalled SDP solve is still accepted.
    pub sdp_feasibility_tol: f64,
    pub sdp_max_iters: usize,
    /// Upper bound on `1 - lambda_max / trace` of the recovered covariance.
    pub rank_tol: f64,
    pub ga: GaParams,
    /// Relative rate change that ends the alternating loop.
    pub ao_tol: f64,
    pub max_ao_iters: usize,
    /// Central-difference step (wavelengths) of the OTPA baseline.
    pub otpa_fd_step: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            sdp_tol: 1e-11,
            sdp_feasibility_tol: 1e-8,
            sdp_max_iters: 100,
            rank_tol: 1e-5,
            ga: GaParams::default(),
            ao_tol: 1e-4,
            max_ao_iters: 30,
            otpa_fd_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_antennas: usize,
    /// Side length `A` of the square movement region.
    pub region_size: f64,
    /// Minimum inter-antenna distance `D`.
    pub min_distance: f64,
    pub wavelength: f64,
    pub n_rx_paths: usize,
    pub n_tx_paths: usize,
    pub source_power: f64,
    pub relay_power_budget: f64,
    pub relay_noise_power: f64,
    pub dest_noise_power: f64,
    #[serde(default)]
    pub solver: SolverSettings,
}

impl Default for SystemConfig {
    /// N = 6, A = 3, D = 1/2, L_r = L_t = 5, P_s = P_tot = 10 dB, unit noise.
    fn default() -> Self {
        Self {
            n_antennas: 6,
            region_size: 3.0,
            min_distance: 0.5,
            wavelength: 1.0,
            n_rx_paths: 5,
            n_tx_paths: 5,
            source_power: 10.0,
            relay_power_budget: 10.0,
            relay_noise_power: 1.0,
            dest_noise_power: 1.0,
            solver: SolverSettings::default(),
        }
    }
}

impl SystemConfig {
    /// Half side length; the region is `[-A/2, A/2]^2`.
    pub fn half_region(&self) -> f64 {
        0.5 * self.region_size
    }

    /// `2*pi / lambda`.
    pub fn wavenumber(&self) -> f64 {
        core::f64::consts::TAU / self.wavelength
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.n_antennas == 0 {
            return Err(Error::InvalidConfig("n_antennas must be at least 1"));
        }
        if self.n_rx_paths == 0 || self.n_tx_paths == 0 {
            return Err(Error::InvalidConfig("path counts must be at least 1"));
        }
        if !positive(self.region_size) || !positive(self.min_distance) {
            return Err(Error::InvalidConfig("region size and min distance must be positive"));
        }
        if self.min_distance > self.region_size {
            return Err(Error::InvalidConfig("min distance exceeds the region size"));
        }
        if self.wavelength != 1.0 {
            return Err(Error::InvalidConfig("lengths are expressed in wavelengths (wavelength = 1)"));
        }
        if !(positive(self.source_power)
            && positive(self.relay_power_budget)
            && positive(self.relay_noise_power)
            && positive(self.dest_noise_power))
        {
            return Err(Error::InvalidConfig("powers must be positive"));
        }
        let s = &self.solver;
        if !(positive(s.sdp_tol) && positive(s.sdp_feasibility_tol) && positive(s.rank_tol)) {
            return Err(Error::InvalidConfig("solver tolerances must be positive"));
        }
        if !(positive(s.ao_tol) && positive(s.otpa_fd_step)) || s.max_ao_iters == 0 {
            return Err(Error::InvalidConfig("invalid alternating-optimization settings"));
        }
        s.ga.validate()?;
        // a feasible placement must exist; the FPA grid is the witness
        PositionSet::centered_grid(self)?;
        Ok(())
    }
}
