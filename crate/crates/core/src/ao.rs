//! Alternating optimization over the receive placement, the transmit
//! placement and the weight matrix, in that order each round.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::{relay_dest_channel, source_relay_channel, ChannelRealization, PositionSet};
use crate::position_opt::{optimize_receive_positions, optimize_transmit_positions};
use crate::relay_weights::{
    end_to_end_snr, matched_filter_weights, optimize_weights, relay_power, AfWeights,
};
use crate::{Error, Result, SystemConfig};

/// Scale applied by the power-slack guard on top of the exact budget ratio.
const SLACK_GUARD_SCALE: f64 = 0.999;

/// `1/2 log2(1 + snr)`; the half accounts for the two-slot relay.
pub fn achievable_rate(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::NegativeSnr(snr));
    }
    Ok(0.5 * libm::log2(1.0 + snr))
}

fn rate_of(snr: f64) -> f64 {
    0.5 * libm::log2(1.0 + snr.max(0.0))
}

/// A full operating point plus its history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionState {
    pub weights: AfWeights,
    pub rx_positions: PositionSet,
    pub tx_positions: PositionSet,
    pub snr: f64,
    pub rate: f64,
    /// Rate after initialization followed by the rate after every round.
    pub trace: Vec<f64>,
    /// Completed rounds.
    pub iterations: usize,
    /// Rank-one residual of the most recent SDP, if one was solved.
    pub rank_residual: Option<f64>,
    pub sdp_iterations: usize,
}

impl SolutionState {
    pub(crate) fn new(
        weights: AfWeights,
        rx_positions: PositionSet,
        tx_positions: PositionSet,
        ch: &ChannelRealization,
        cfg: &SystemConfig,
    ) -> Result<Self> {
        let snr = snr_at(&weights, &rx_positions, &tx_positions, ch, cfg)?;
        let rate = rate_of(snr);
        Ok(Self {
            weights,
            rx_positions,
            tx_positions,
            snr,
            rate,
            trace: vec![rate],
            iterations: 0,
            rank_residual: None,
            sdp_iterations: 0,
        })
    }

    pub(crate) fn refresh(&mut self, ch: &ChannelRealization, cfg: &SystemConfig) -> Result<()> {
        self.snr = snr_at(&self.weights, &self.rx_positions, &self.tx_positions, ch, cfg)?;
        self.rate = rate_of(self.snr);
        Ok(())
    }

    /// Relay power of the stored weights at the stored receive placement.
    pub fn relay_power(&self, ch: &ChannelRealization, cfg: &SystemConfig) -> Result<f64> {
        let h1 = source_relay_channel(&self.rx_positions, ch, cfg)?;
        Ok(relay_power(&self.weights, &h1, cfg))
    }

    /// Region, spacing and power constraints, with additive slack `tol` on
    /// lengths and multiplicative slack `1 + power_tol` on the budget.
    pub fn is_feasible(
        &self,
        ch: &ChannelRealization,
        cfg: &SystemConfig,
        tol: f64,
        power_tol: f64,
    ) -> Result<bool> {
        Ok(self.rx_positions.is_feasible(cfg, tol)
            && self.tx_positions.is_feasible(cfg, tol)
            && self.relay_power(ch, cfg)? <= cfg.relay_power_budget * (1.0 + power_tol))
    }
}

pub(crate) fn snr_at(
    w: &AfWeights,
    rx: &PositionSet,
    tx: &PositionSet,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> Result<f64> {
    let h1 = source_relay_channel(rx, ch, cfg)?;
    let h2 = relay_dest_channel(tx, ch, cfg)?;
    Ok(end_to_end_snr(w, &h1, &h2, cfg))
}

/// Both placements on the half-wavelength grid, `W` the matched filter at
/// full power (or zero for a degenerate channel).
pub fn initialize(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<SolutionState> {
    cfg.validate()?;
    let grid = PositionSet::centered_grid(cfg)?;
    let h1 = source_relay_channel(&grid, ch, cfg)?;
    let h2 = relay_dest_channel(&grid, ch, cfg)?;
    let weights = match matched_filter_weights(&h1, &h2, cfg) {
        Ok(w) => w,
        Err(Error::ZeroChannel) => AfWeights::zeros(cfg.n_antennas),
        Err(e) => return Err(e),
    };
    SolutionState::new(weights, grid.clone(), grid, ch, cfg)
}

/// Rescales `W` if the relay noise alone would eat the whole budget, so the
/// receive stage has room to move.
pub(crate) fn restore_power_slack(w: &AfWeights, h1: &crate::CVector, cfg: &SystemConfig) -> Option<AfWeights> {
    if cfg.relay_noise_power * w.frobenius_sqr() < cfg.relay_power_budget {
        return None;
    }
    let p = relay_power(w, h1, cfg);
    Some(w.scaled(SLACK_GUARD_SCALE * libm::sqrt(cfg.relay_power_budget / p)))
}

/// Replaces `state.weights` by the SDP optimum for the current placements,
/// unless solver round-off would make it worse than what is already stored.
pub(crate) fn update_weights(
    state: &mut SolutionState,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> Result<()> {
    let h1 = source_relay_channel(&state.rx_positions, ch, cfg)?;
    let h2 = relay_dest_channel(&state.tx_positions, ch, cfg)?;
    let update = optimize_weights(&h1, &h2, cfg)?;
    if let Some(d) = update.diagnostics {
        state.rank_residual = Some(d.rank_residual);
        state.sdp_iterations += d.iterations;
    }
    if update.snr >= end_to_end_snr(&state.weights, &h1, &h2, cfg) {
        state.weights = update.weights;
    }
    state.refresh(ch, cfg)
}

fn relative_change(new: f64, old: f64) -> f64 {
    if new == old {
        0.0
    } else {
        (new - old).abs() / old.abs().max(f64::MIN_POSITIVE)
    }
}

/// Runs rounds of receive ascent, transmit ascent and SDP weight update until
/// the rate changes by less than `ao_tol` (relative) or `max_ao_iters` rounds
/// have run.
pub fn ao_solve(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<SolutionState> {
    let mut state = initialize(cfg, ch)?;
    let ga = cfg.solver.ga;
    for iteration in 1..=cfg.solver.max_ao_iters {
        let step = |e: Error| Error::AoStep {
            iteration,
            source: Box::new(e),
        };
        let before = state.rate;

        let h1 = source_relay_channel(&state.rx_positions, ch, cfg)?;
        if let Some(w) = restore_power_slack(&state.weights, &h1, cfg) {
            state.weights = w;
        }
        let rx = optimize_receive_positions(
            &state.rx_positions,
            &state.weights,
            &state.tx_positions,
            ch,
            cfg,
            &ga,
        )
        .map_err(step)?;
        state.rx_positions = rx.positions;

        let tx = optimize_transmit_positions(
            &state.tx_positions,
            &state.weights,
            &state.rx_positions,
            ch,
            cfg,
            &ga,
        )
        .map_err(step)?;
        state.tx_positions = tx.positions;

        update_weights(&mut state, ch, cfg).map_err(step)?;
        state.iterations = iteration;
        state.trace.push(state.rate);
        if relative_change(state.rate, before) < cfg.solver.ao_tol {
            break;
        }
    }
    Ok(state)
}
