//! Benchmark schemes: a fixed half-wavelength array (FPA) and a single
//! placement shared by both hops (one-time position adjustment, OTPA).


use crate::ao::{initialize, restore_power_slack, update_weights, SolutionState};
use crate::channel::{source_relay_channel, ChannelRealization, Position, PositionSet};
use crate::position_opt::{cyclic_ascent, AntennaSubproblem, GaOutcome, POWER_SLACK};
use crate::relay_weights::{relay_power, AfWeights};
use crate::{Error, Result, SystemConfig};

/// Grid placement for both hops and the SDP-optimal `W`; positions never move.
pub fn fpa_solve(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<SolutionState> {
    let mut state = initialize(cfg, ch)?;
    update_weights(&mut state, ch, cfg)?;
    state.iterations = 1;
    state.trace = alloc::vec![state.rate];
    Ok(state)
}

/// Rate as a function of the shared placement `u`, with `W` fixed; gradients
/// by central differences.
struct SharedPlacement<'a> {
    w: &'a AfWeights,
    ch: &'a ChannelRealization,
    cfg: &'a SystemConfig,
}

struct SharedContext {
    n: usize,
    positions: PositionSet,
}

impl SharedPlacement<'_> {
    fn rate_with(&self, ctx: &SharedContext, pos: &Position) -> f64 {
        let mut u = ctx.positions.clone();
        u[ctx.n] = *pos;
        crate::ao::snr_at(self.w, &u, &u, self.ch, self.cfg)
            .map(|snr| 0.5 * libm::log2(1.0 + snr))
            .unwrap_or(f64::NEG_INFINITY)
    }
}

impl AntennaSubproblem for SharedPlacement<'_> {
    type Context = SharedContext;

    fn context(&self, n: usize, positions: &PositionSet) -> Result<SharedContext> {
        Ok(SharedContext {
            n,
            positions: positions.clone(),
        })
    }

    fn objective(&self, pos: &Position, ctx: &SharedContext) -> f64 {
        self.rate_with(ctx, pos)
    }

    fn gradient(&self, pos: &Position, ctx: &SharedContext) -> [f64; 2] {
        let h = self.cfg.solver.otpa_fd_step;
        let dx = self.rate_with(ctx, &pos.offset(h, [1.0, 0.0]))
            - self.rate_with(ctx, &pos.offset(-h, [1.0, 0.0]));
        let dy = self.rate_with(ctx, &pos.offset(h, [0.0, 1.0]))
            - self.rate_with(ctx, &pos.offset(-h, [0.0, 1.0]));
        [dx / (2.0 * h), dy / (2.0 * h)]
    }

    fn feasible(&self, pos: &Position, n: usize, positions: &PositionSet, _: &SharedContext) -> bool {
        if !pos.in_region(self.cfg.half_region())
            || positions.distance_to_others(pos, n) < self.cfg.min_distance
        {
            return false;
        }
        let mut u = positions.clone();
        u[n] = *pos;
        source_relay_channel(&u, self.ch, self.cfg)
            .map(|h1| {
                relay_power(self.w, &h1, self.cfg)
                    <= self.cfg.relay_power_budget * (1.0 + POWER_SLACK)
            })
            .unwrap_or(false)
    }

    fn system_objective(&self, positions: &PositionSet) -> Result<f64> {
        let snr = crate::ao::snr_at(self.w, positions, positions, self.ch, self.cfg)?;
        Ok(0.5 * libm::log2(1.0 + snr))
    }
}

fn shared_ascent(state: &SolutionState, ch: &ChannelRealization, cfg: &SystemConfig) -> Result<GaOutcome> {
    let problem = SharedPlacement {
        w: &state.weights,
        ch,
        cfg,
    };
    cyclic_ascent(&problem, state.rx_positions.clone(), &cfg.solver.ga)
}

/// Alternates a shared-placement ascent (one placement for both hops, `W`
/// fixed) with the SDP weight update, starting from the grid.
pub fn otpa_solve(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<SolutionState> {
    let mut state = initialize(cfg, ch)?;
    for iteration in 1..=cfg.solver.max_ao_iters {
        let wrap = |e: Error| Error::AoStep {
            iteration,
            source: alloc::boxed::Box::new(e),
        };
        let before = state.rate;
        let h1 = source_relay_channel(&state.rx_positions, ch, cfg)?;
        if let Some(w) = restore_power_slack(&state.weights, &h1, cfg) {
            state.weights = w;
        }
        let moved = shared_ascent(&state, ch, cfg).map_err(wrap)?;
        state.rx_positions = moved.positions.clone();
        state.tx_positions = moved.positions;
        state.refresh(ch, cfg)?;
        update_weights(&mut state, ch, cfg).map_err(wrap)?;
        state.iterations = iteration;
        state.trace.push(state.rate);
        let change = (state.rate - before).abs();
        if change == 0.0 || change < cfg.solver.ao_tol * before.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(state)
}

