//! Per-antenna gradient ascent over the reception and transmission
//! placements.
//!
//! With `W` and all other antennas fixed, the contribution of antenna `n` is a
//! sum of cosines in its position: a Hermitian quadratic form of its
//! field-response vector plus a linear term. Both placements reuse the same
//! expansion ([`phase_form`]) and the same cyclic accept/halve engine
//! ([`cyclic_ascent`]); they differ only in the objective built on top and in
//! the feasible set (the receive side also carries the relay power budget).

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{
    antenna_gain, relay_dest_channel, source_relay_channel, ChannelRealization, PathDirection,
    Position, PositionSet,
};
use crate::linalg::{abs, arg, norm_sqr, CMatrix, CVector, Complex64};
use crate::relay_weights::{relay_power, AfWeights};
use crate::{Error, Result, SystemConfig};

/// Additive slack (wavelengths) when validating the placement handed in.
pub const INPUT_FEASIBILITY_TOL: f64 = 1e-9;
/// Relative slack on the relay power budget in candidate checks.
pub const POWER_SLACK: f64 = 1e-10;

/// Step-size and stopping parameters for one gradient-ascent call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    /// First trial step along the raw gradient, in wavelengths per unit gradient.
    pub initial_step: f64,
    pub max_outer_iters: usize,
    pub max_halvings: usize,
    /// Relative objective change per sweep below which the call stops.
    pub convergence_tol: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            max_outer_iters: 50,
            max_halvings: 30,
            convergence_tol: 1e-5,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return Err(Error::InvalidConfig("initial_step must be positive"));
        }
        if self.max_halvings < 1 || self.max_outer_iters < 1 {
            return Err(Error::InvalidConfig("iteration caps must be at least 1"));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::InvalidConfig("convergence_tol must be nonnegative"));
        }
        Ok(())
    }
}

/// Everything antenna `n` needs on the receive side; independent of `r_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveContext {
    pub n: usize,
    /// `a = W^H h2`.
    pub a: CVector,
    /// `sum_{k != n} conj(a_k) h1_k`.
    pub alpha_n: Complex64,
    /// `sum_{k != n} h1_k w_k`.
    pub b_n: CVector,
    /// `|a_n|^2 g1 g1^H`.
    pub big_b_n: CMatrix,
    /// `conj(a_n) conj(alpha_n) g1`.
    pub q_n: CVector,
    /// `P_tot - s_r^2 ||W||_F^2`.
    pub p_tilde_tot: f64,
    /// Column `n` of `W`.
    pub w_n: CVector,
}

/// Everything antenna `n` needs on the transmit side; independent of `t_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitContext {
    pub n: usize,
    /// `c = W h1`.
    pub c: CVector,
    /// `sum_{k != n} conj(c_k) h2_k`.
    pub beta_n: Complex64,
    /// `sum_{k != n} h2_k w~_k`.
    pub d_n: CVector,
    /// `P_s |c_n|^2 f2 f2^H`.
    pub e_n: CMatrix,
    /// `P_s conj(c_n) conj(beta_n) f2`.
    pub m_n: CVector,
    /// `s_r^2 ||w~_n||^2 f2 f2^H`.
    pub f_n: CMatrix,
    /// `f2 (d_n^H w~_n)`.
    pub s_n: CVector,
    /// Column `n` of `W^H`.
    pub w_tilde_n: CVector,
}

/// One sweep over all antennas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    /// System objective after the sweep.
    pub objective: f64,
    /// Antennas whose step was accepted.
    pub moved: usize,
    pub halvings: usize,
    /// Longest accepted displacement, in wavelengths.
    pub max_displacement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    pub positions: PositionSet,
    pub initial_objective: f64,
    pub trace: Vec<SweepRecord>,
}

impl GaOutcome {
    pub fn final_objective(&self) -> f64 {
        self.trace.last().map_or(self.initial_objective, |r| r.objective)
    }
}

/// `sum_ij |Q_ij| cos(k(rho_i - rho_j) - arg Q_ij) + 2 sum_p |v_p| cos(k rho_p - arg v_p)`,
/// which equals `f^H Q f + 2 Re{v^H f}` for the field-response vector `f`,
/// together with its exact gradient in `(x, y)`.
fn phase_form(
    pos: &Position,
    dirs: &[PathDirection],
    k: f64,
    quad: &CMatrix,
    lin: &CVector,
) -> (f64, [f64; 2]) {
    let rho: Vec<f64> = dirs.iter().map(|d| d.rho(pos)).collect();
    let mut value = 0.0;
    let mut grad = [0.0; 2];
    for i in 0..dirs.len() {
        for j in 0..dirs.len() {
            let b = quad[(i, j)];
            let mag = abs(b);
            if mag == 0.0 {
                continue;
            }
            let gamma = k * (rho[i] - rho[j]) - arg(b);
            value += mag * libm::cos(gamma);
            let s = mag * libm::sin(gamma);
            grad[0] -= k * (dirs[i].sx - dirs[j].sx) * s;
            grad[1] -= k * (dirs[i].sy - dirs[j].sy) * s;
        }
        let q = lin[i];
        let mag = abs(q);
        if mag == 0.0 {
            continue;
        }
        let kappa = k * rho[i] - arg(q);
        value += 2.0 * mag * libm::cos(kappa);
        let s = 2.0 * mag * libm::sin(kappa);
        grad[0] -= k * dirs[i].sx * s;
        grad[1] -= k * dirs[i].sy * s;
    }
    (value, grad)
}

fn check_index(n: usize, len: usize) -> Result<()> {
    if n >= len {
        return Err(Error::IndexOutOfRange { index: n, len });
    }
    Ok(())
}

fn receive_context_from(
    n: usize,
    w: &AfWeights,
    h1: &CVector,
    a: &CVector,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> ReceiveContext {
    let big_n = h1.len();
    let mut alpha_n = Complex64::new(0.0, 0.0);
    let mut b_n = CVector::zeros(big_n);
    for k in (0..big_n).filter(|&k| k != n) {
        alpha_n += a[k].conj() * h1[k];
        b_n += w.matrix.column(k) * h1[k];
    }
    let g1 = &ch.rx_prv;
    let big_b_n = (g1 * g1.adjoint()).map(|z| z * a[n].norm_sqr());
    let q_n = g1 * (a[n].conj() * alpha_n.conj());
    ReceiveContext {
        n,
        a: a.clone(),
        alpha_n,
        b_n,
        big_b_n,
        q_n,
        p_tilde_tot: cfg.relay_power_budget - cfg.relay_noise_power * w.frobenius_sqr(),
        w_n: w.matrix.column(n).into_owned(),
    }
}

pub fn build_receive_context(
    n: usize,
    w: &AfWeights,
    rx: &PositionSet,
    tx: &PositionSet,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> Result<ReceiveContext> {
    check_index(n, rx.len())?;
    let h1 = source_relay_channel(rx, ch, cfg)?;
    let h2 = relay_dest_channel(tx, ch, cfg)?;
    let a = w.matrix.adjoint() * h2;
    Ok(receive_context_from(n, w, &h1, &a, ch, cfg))
}

fn transmit_context_from(
    n: usize,
    w: &AfWeights,
    h2: &CVector,
    c: &CVector,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> TransmitContext {
    let big_n = h2.len();
    let w_tilde = |k: usize| -> CVector { w.matrix.row(k).adjoint() };
    let mut beta_n = Complex64::new(0.0, 0.0);
    let mut d_n = CVector::zeros(big_n);
    for k in (0..big_n).filter(|&k| k != n) {
        beta_n += c[k].conj() * h2[k];
        d_n += w_tilde(k) * h2[k];
    }
    let w_tilde_n = w_tilde(n);
    let f2 = &ch.tx_prv;
    let f2f2 = f2 * f2.adjoint();
    TransmitContext {
        n,
        c: c.clone(),
        beta_n,
        e_n: f2f2.map(|z| z * (cfg.source_power * c[n].norm_sqr())),
        m_n: f2 * (c[n].conj() * beta_n.conj() * cfg.source_power),
        f_n: f2f2.map(|z| z * (cfg.relay_noise_power * norm_sqr(&w_tilde_n))),
        s_n: f2 * d_n.dotc(&w_tilde_n),
        d_n,
        w_tilde_n,
    }
}

pub fn build_transmit_context(
    n: usize,
    w: &AfWeights,
    rx: &PositionSet,
    tx: &PositionSet,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> Result<TransmitContext> {
    check_index(n, tx.len())?;
    let h1 = source_relay_channel(rx, ch, cfg)?;
    let h2 = relay_dest_channel(tx, ch, cfg)?;
    let c = &w.matrix * h1;
    Ok(transmit_context_from(n, w, &h2, &c, ch, cfg))
}

/// `f(r_n) = f^H B_n f + 2 Re{q_n^H f}`, the part of `|h2^H W h1|^2` that
/// depends on `r_n`, through its cosine expansion.
pub fn receive_objective(
    r_n: &Position,
    ctx: &ReceiveContext,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> f64 {
    phase_form(r_n, &ch.rx_directions(), cfg.wavenumber(), &ctx.big_b_n, &ctx.q_n).0
}

pub fn receive_gradient(
    r_n: &Position,
    ctx: &ReceiveContext,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> [f64; 2] {
    phase_form(r_n, &ch.rx_directions(), cfg.wavenumber(), &ctx.big_b_n, &ctx.q_n).1
}

/// Region, spacing to every other antenna, and the relay power budget with
/// only `h1_n` varying.
pub fn receive_feasible(
    r_n: &Position,
    n: usize,
    rx: &PositionSet,
    ctx: &ReceiveContext,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> bool {
    if !r_n.in_region(cfg.half_region()) || rx.distance_to_others(r_n, n) < cfg.min_distance {
        return false;
    }
    let h = antenna_gain(r_n, &ch.rx_directions(), &ch.rx_prv, cfg.wavenumber());
    let wh1 = &ctx.w_n * h + &ctx.b_n;
    cfg.source_power * norm_sqr(&wh1) <= ctx.p_tilde_tot + POWER_SLACK * cfg.relay_power_budget
}

/// Numerator and denominator arguments of the transmit objective and their
/// gradients.
fn transmit_terms(
    t_n: &Position,
    ctx: &TransmitContext,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> ((f64, [f64; 2]), (f64, [f64; 2])) {
    let dirs = ch.tx_directions();
    let k = cfg.wavenumber();
    let (num, gnum) = phase_form(t_n, &dirs, k, &ctx.e_n, &ctx.m_n);
    let s_scaled = ctx.s_n.map(|z| z * cfg.relay_noise_power);
    let (den, gden) = phase_form(t_n, &dirs, k, &ctx.f_n, &s_scaled);
    let num = num + cfg.source_power * ctx.beta_n.norm_sqr();
    let den = den + cfg.relay_noise_power * norm_sqr(&ctx.d_n) + cfg.dest_noise_power;
    ((num, gnum), (den, gden))
}

/// `g(t_n) = log2(P_s |c_n^* h2_n + beta_n|^2) - log2(s_r^2 ||h2_n w~_n + d_n||^2 + s_d^2)`,
/// i.e. `log2` of the end-to-end SNR, through the cosine expansions.
pub fn transmit_objective(
    t_n: &Position,
    ctx: &TransmitContext,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> f64 {
    let ((num, _), (den, _)) = transmit_terms(t_n, ctx, ch, cfg);
    libm::log2(num.max(0.0)) - libm::log2(den)
}

/// Exact gradient of the `log2` objective:
/// `(grad num / num - grad den / den) / ln 2`.
pub fn transmit_gradient(
    t_n: &Position,
    ctx: &TransmitContext,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> [f64; 2] {
    let ((num, gnum), (den, gden)) = transmit_terms(t_n, ctx, ch, cfg);
    if !(num > 0.0) {
        return [0.0; 2];
    }
    [
        (gnum[0] / num - gden[0] / den) / LN_2,
        (gnum[1] / num - gden[1] / den) / LN_2,
    ]
}

pub fn transmit_feasible(t_n: &Position, n: usize, tx: &PositionSet, cfg: &SystemConfig) -> bool {
    t_n.in_region(cfg.half_region()) && tx.distance_to_others(t_n, n) >= cfg.min_distance
}

/// A per-antenna ascent problem: the engine only needs these five hooks.
pub(crate) trait AntennaSubproblem {
    type Context;
    fn context(&self, n: usize, positions: &PositionSet) -> Result<Self::Context>;
    fn objective(&self, pos: &Position, ctx: &Self::Context) -> f64;
    fn gradient(&self, pos: &Position, ctx: &Self::Context) -> [f64; 2];
    fn feasible(&self, pos: &Position, n: usize, positions: &PositionSet, ctx: &Self::Context) -> bool;
    fn system_objective(&self, positions: &PositionSet) -> Result<f64>;
}

/// Sweeps `n = 0..N`; each antenna takes one gradient step starting at
/// `initial_step` and halved until the candidate is feasible and not worse,
/// or stays put once `max_halvings` is exhausted. Stops when the system
/// objective changes by less than `convergence_tol` (relative) in a sweep.
pub(crate) fn cyclic_ascent<S: AntennaSubproblem>(
    problem: &S,
    start: PositionSet,
    ga: &GaParams,
) -> Result<GaOutcome> {
    let mut positions = start;
    let initial_objective = problem.system_objective(&positions)?;
    let mut prev = initial_objective;
    let mut trace = Vec::new();
    for sweep in 0..ga.max_outer_iters {
        let mut moved = 0;
        let mut halvings = 0;
        let mut max_displacement = 0.0_f64;
        for n in 0..positions.len() {
            let ctx = problem.context(n, &positions)?;
            let current = positions[n];
            let grad = problem.gradient(&current, &ctx);
            if !(grad[0].is_finite() && grad[1].is_finite()) || (grad[0] == 0.0 && grad[1] == 0.0) {
                continue;
            }
            let f0 = problem.objective(&current, &ctx);
            let mut step = ga.initial_step;
            for attempt in 0..=ga.max_halvings {
                let candidate = current.offset(step, grad);
                if problem.feasible(&candidate, n, &positions, &ctx)
                    && problem.objective(&candidate, &ctx) >= f0
                {
                    max_displacement = max_displacement.max(candidate.distance(&current));
                    positions[n] = candidate;
                    moved += 1;
                    break;
                }
                if attempt < ga.max_halvings {
                    step *= 0.5;
                    halvings += 1;
                }
            }
        }
        let objective = problem.system_objective(&positions)?;
        trace.push(SweepRecord {
            sweep,
            objective,
            moved,
            halvings,
            max_displacement,
        });
        let change = (objective - prev).abs();
        let converged = moved == 0 || change <= ga.convergence_tol * prev.abs().max(f64::MIN_POSITIVE);
        prev = objective;
        if converged {
            break;
        }
    }
    Ok(GaOutcome {
        positions,
        initial_objective,
        trace,
    })
}

struct ReceiveProblem<'a> {
    w: &'a AfWeights,
    a: CVector,
    ch: &'a ChannelRealization,
    cfg: &'a SystemConfig,
}

impl AntennaSubproblem for ReceiveProblem<'_> {
    type Context = ReceiveContext;

    fn context(&self, n: usize, positions: &PositionSet) -> Result<ReceiveContext> {
        let h1 = source_relay_channel(positions, self.ch, self.cfg)?;
        Ok(receive_context_from(n, self.w, &h1, &self.a, self.ch, self.cfg))
    }

    fn objective(&self, pos: &Position, ctx: &ReceiveContext) -> f64 {
        receive_objective(pos, ctx, self.ch, self.cfg)
    }

    fn gradient(&self, pos: &Position, ctx: &ReceiveContext) -> [f64; 2] {
        receive_gradient(pos, ctx, self.ch, self.cfg)
    }

    fn feasible(&self, pos: &Position, n: usize, positions: &PositionSet, ctx: &ReceiveContext) -> bool {
        receive_feasible(pos, n, positions, ctx, self.ch, self.cfg)
    }

    /// `|h2^H W h1|^2`; the SNR denominator does not depend on `h1`.
    fn system_objective(&self, positions: &PositionSet) -> Result<f64> {
        let h1 = source_relay_channel(positions, self.ch, self.cfg)?;
        Ok(self.a.dotc(&h1).norm_sqr())
    }
}

/// Receive-stage ascent with `W` and the transmit placement fixed. The
/// end-to-end SNR never decreases and the power budget keeps holding.
pub fn optimize_receive_positions(
    rx: &PositionSet,
    w: &AfWeights,
    tx: &PositionSet,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    ga: &GaParams,
) -> Result<GaOutcome> {
    ga.validate()?;
    let h1 = source_relay_channel(rx, ch, cfg)?;
    let h2 = relay_dest_channel(tx, ch, cfg)?;
    if !rx.is_feasible(cfg, INPUT_FEASIBILITY_TOL) {
        return Err(Error::InfeasiblePositions("receive placement violates region or spacing"));
    }
    if relay_power(w, &h1, cfg) > cfg.relay_power_budget * (1.0 + INPUT_FEASIBILITY_TOL) {
        return Err(Error::InfeasiblePositions("relay power exceeds the budget"));
    }
    let slack = cfg.relay_power_budget - cfg.relay_noise_power * w.frobenius_sqr();
    if !(slack > 0.0) {
        return Err(Error::NoPowerSlack(slack));
    }
    let problem = ReceiveProblem {
        w,
        a: w.matrix.adjoint() * h2,
        ch,
        cfg,
    };
    cyclic_ascent(&problem, rx.clone(), ga)
}

struct TransmitProblem<'a> {
    w: &'a AfWeights,
    c: CVector,
    ch: &'a ChannelRealization,
    cfg: &'a SystemConfig,
}

impl AntennaSubproblem for TransmitProblem<'_> {
    type Context = TransmitContext;

    fn context(&self, n: usize, positions: &PositionSet) -> Result<TransmitContext> {
        let h2 = relay_dest_channel(positions, self.ch, self.cfg)?;
        Ok(transmit_context_from(n, self.w, &h2, &self.c, self.ch, self.cfg))
    }

    fn objective(&self, pos: &Position, ctx: &TransmitContext) -> f64 {
        transmit_objective(pos, ctx, self.ch, self.cfg)
    }

    fn gradient(&self, pos: &Position, ctx: &TransmitContext) -> [f64; 2] {
        transmit_gradient(pos, ctx, self.ch, self.cfg)
    }

    fn feasible(&self, pos: &Position, n: usize, positions: &PositionSet, _: &TransmitContext) -> bool {
        transmit_feasible(pos, n, positions, self.cfg)
    }

    /// `log2` of the end-to-end SNR.
    fn system_objective(&self, positions: &PositionSet) -> Result<f64> {
        let h2 = relay_dest_channel(positions, self.ch, self.cfg)?;
        let h2w = h2.adjoint() * &self.w.matrix;
        let signal = self.cfg.source_power * h2.dotc(&self.c).norm_sqr();
        let noise = self.cfg.relay_noise_power * h2w.iter().map(|z| z.norm_sqr()).sum::<f64>()
            + self.cfg.dest_noise_power;
        Ok(libm::log2(signal) - libm::log2(noise))
    }
}

/// Transmit-stage ascent with `W` and the receive placement fixed.
pub fn optimize_transmit_positions(
    tx: &PositionSet,
    w: &AfWeights,
    rx: &PositionSet,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    ga: &GaParams,
) -> Result<GaOutcome> {
    ga.validate()?;
    let h1 = source_relay_channel(rx, ch, cfg)?;
    relay_dest_channel(tx, ch, cfg)?;
    if !tx.is_feasible(cfg, INPUT_FEASIBILITY_TOL) {
        return Err(Error::InfeasiblePositions("transmit placement violates region or spacing"));
    }
    let problem = TransmitProblem {
        w,
        c: &w.matrix * h1,
        ch,
        cfg,
    };
    cyclic_ascent(&problem, tx.clone(), ga)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_channel;
    use crate::linalg::cis;
    use crate::relay_weights::matched_filter_weights;
    use alloc::vec;

    fn cfg(n: usize, paths: usize) -> SystemConfig {
        SystemConfig {
            n_antennas: n,
            n_rx_paths: paths,
            n_tx_paths: paths,
            ..SystemConfig::default()
        }
    }

    fn random_w(n: usize, scale: f64) -> AfWeights {
        AfWeights::new(CMatrix::from_fn(n, n, |i, j| {
            cis(1.3 * i as f64 + 0.7 * j as f64 * j as f64) * (scale * (1.0 + 0.1 * (i + j) as f64))
        }))
    }

    fn zero_elevation_channel(paths: usize) -> ChannelRealization {
        let mut ch = sample_channel(&cfg(2, paths), 11);
        ch.rx_elevations.iter_mut().for_each(|t| *t = 0.0);
        ch.tx_elevations.iter_mut().for_each(|t| *t = 0.0);
        ch
    }

    #[test]
    fn ga_params_validation() {
        assert!(GaParams::default().validate().is_ok());
        assert!(GaParams { initial_step: 0.0, ..GaParams::default() }.validate().is_err());
        assert!(GaParams { max_halvings: 0, ..GaParams::default() }.validate().is_err());
    }

    #[test]
    fn single_antenna_contexts_have_empty_sums() {
        let cfg = cfg(1, 3);
        let ch = sample_channel(&cfg, 1);
        let p = PositionSet::centered_grid(&cfg).unwrap();
        let w = random_w(1, 0.5);
        let rc = build_receive_context(0, &w, &p, &p, &ch, &cfg).unwrap();
        assert_eq!(rc.alpha_n, Complex64::new(0.0, 0.0));
        assert_eq!(norm_sqr(&rc.b_n), 0.0);
        let tc = build_transmit_context(0, &w, &p, &p, &ch, &cfg).unwrap();
        assert_eq!(tc.beta_n, Complex64::new(0.0, 0.0));
        assert_eq!(norm_sqr(&tc.d_n), 0.0);
    }

    #[test]
    fn contexts_reject_bad_index() {
        let cfg = cfg(2, 3);
        let ch = sample_channel(&cfg, 1);
        let p = PositionSet::centered_grid(&cfg).unwrap();
        let w = random_w(2, 0.5);
        assert!(matches!(
            build_receive_context(2, &w, &p, &p, &ch, &cfg),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
        assert!(build_transmit_context(5, &w, &p, &p, &ch, &cfg).is_err());
    }

    #[test]
    fn context_a_is_w_adjoint_h2() {
        let cfg = cfg(3, 4);
        let ch = sample_channel(&cfg, 2);
        let p = PositionSet::centered_grid(&cfg).unwrap();
        let w = random_w(3, 0.3);
        let h2 = relay_dest_channel(&p, &ch, &cfg).unwrap();
        let rc = build_receive_context(1, &w, &p, &p, &ch, &cfg).unwrap();
        let direct = CVector::from_fn(3, |i, _| {
            (0..3).map(|k| w.matrix[(k, i)].conj() * h2[k]).sum::<Complex64>()
        });
        assert!(norm_sqr(&(rc.a - direct)) < 1e-28);
    }

    #[test]
    fn contexts_ignore_the_antenna_being_moved() {
        let cfg = cfg(3, 4);
        let ch = sample_channel(&cfg, 3);
        let p = PositionSet::centered_grid(&cfg).unwrap();
        let w = random_w(3, 0.3);
        let mut moved = p.clone();
        moved[1] = Position::new(0.9, -1.1);
        let r0 = build_receive_context(1, &w, &p, &p, &ch, &cfg).unwrap();
        let r1 = build_receive_context(1, &w, &moved, &p, &ch, &cfg).unwrap();
        assert_eq!((r0.alpha_n, &r0.b_n), (r1.alpha_n, &r1.b_n));
        let t0 = build_transmit_context(1, &w, &p, &p, &ch, &cfg).unwrap();
        let t1 = build_transmit_context(1, &w, &p, &moved, &ch, &cfg).unwrap();
        assert_eq!((t0.beta_n, &t0.d_n), (t1.beta_n, &t1.d_n));
    }

    #[test]
    fn receive_objective_vanishes_without_coefficients() {
        let cfg = cfg(2, 3);
        let ch = sample_channel(&cfg, 4);
        let p = PositionSet::centered_grid(&cfg).unwrap();
        let mut ctx = build_receive_context(0, &random_w(2, 1.0), &p, &p, &ch, &cfg).unwrap();
        ctx.big_b_n.fill(Complex64::new(0.0, 0.0));
        ctx.q_n.fill(Complex64::new(0.0, 0.0));
        for pos in [Position::new(0.0, 0.0), Position::new(1.2, -0.4)] {
            assert_eq!(receive_objective(&pos, &ctx, &ch, &cfg), 0.0);
            assert_eq!(receive_gradient(&pos, &ctx, &ch, &cfg), [0.0, 0.0]);
        }
    }

    #[test]
    fn receive_objective_matches_direct_form() {
        let cfg = cfg(3, 5);
        let ch = sample_channel(&cfg, 5);
        let p = PositionSet::centered_grid(&cfg).unwrap();
        let ctx = build_receive_context(2, &random_w(3, 0.4), &p, &p, &ch, &cfg).unwrap();
        let pos = Position::new(-0.37, 0.81);
        let h = antenna_gain(&pos, &ch.rx_directions(), &ch.rx_prv, cfg.wavenumber());
        let a = ctx.a[2];
        let direct = a.norm_sqr() * h.norm_sqr() + 2.0 * (a * ctx.alpha_n * h.conj()).re;
        assert!((receive_objective(&pos, &ctx, &ch, &cfg) - direct).abs() < 1e-10);
    }

    #[test]
    fn single_path_peak_is_stationary() {
        let cfg = cfg(2, 1);
        let ch = sample_channel(&cfg, 6);
        let p = PositionSet::centered_grid(&cfg).unwrap();
        let ctx = build_receive_context(0, &random_w(2, 0.5), &p, &p, &ch, &cfg).unwrap();
        let d = ch.rx_directions()[0];
        let t = arg(ctx.q_n[0]) / cfg.wavenumber();
        let s2 = d.sx * d.sx + d.sy * d.sy;
        let peak = Position::new(t * d.sx / s2, t * d.sy / s2);
        let g = receive_gradient(&peak, &ctx, &ch, &cfg);
        assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
        let best = abs(ctx.big_b_n[(0, 0)]) + 2.0 * abs(ctx.q_n[0]);
        assert!((receive_objective(&peak, &ctx, &ch, &cfg) - best).abs() < 1e-12);
    }

    #[test]
    fn zero_elevation_kills_x_gradient() {
        let cfg = cfg(2, 3);
        let ch = zero_elevation_channel(3);
        let p = PositionSet::centered_grid(&cfg).unwrap();
        let w = random_w(2, 0.5);
        let pos = Position::new(0.31, -0.77);
        let rc = build_receive_context(0, &w, &p, &p, &ch, &cfg).unwrap();
        assert_eq!(receive_gradient(&pos, &rc, &ch, &cfg)[0], 0.0);
        let tc = build_transmit_context(1, &w, &p, &p, &ch, &cfg).unwrap();
        assert_eq!(transmit_gradient(&pos, &tc, &ch, &cfg)[0], 0.0);
    }

    #[test]
    fn receive_feasibility_boundaries() {
        let cfg = cfg(2, 3);
        let ch = sample_channel(&cfg, 7);
        let p = PositionSet::new(vec![Position::new(0.0, 0.0), Position::new(1.0, 0.0)]);
        let ctx = build_receive_context(1, &AfWeights::zeros(2), &p, &p, &ch, &cfg).unwrap();
        let d = cfg.min_distance;
        assert!(!receive_feasible(&Position::new(1.6, 0.0), 1, &p, &ctx, &ch, &cfg));
        assert!(!receive_feasible(&Position::new(d - 1e-6, 0.0), 1, &p, &ctx, &ch, &cfg));
        assert!(receive_feasible(&Position::new(d + 1e-6, 0.0), 1, &p, &ctx, &ch, &cfg));
        assert!(transmit_feasible(&Position::new(1.5, -1.5), 1, &p, &cfg));
        assert!(!transmit_feasible(&Position::new(0.0, d - 1e-6), 1, &p, &cfg));
    }

    #[test]
    fn receive_feasibility_tracks_the_power_cap() {
        let cfg = cfg(2, 5);
        let ch = sample_channel(&cfg, 8);
        let p = PositionSet::centered_grid(&cfg).unwrap();
        let h1 = source_relay_channel(&p, &ch, &cfg).unwrap();
        let h2 = relay_dest_channel(&p, &ch, &cfg).unwrap();
        let w = matched_filter_weights(&h1, &h2, &cfg).unwrap();
        let ctx = build_receive_context(0, &w, &p, &p, &ch, &cfg).unwrap();
        let mut violations = 0;
        for i in 0..41 {
            for j in 0..41 {
                let cand = Position::new(-1.5 + 0.075 * i as f64, -1.5 + 0.075 * j as f64);
                if cand.distance(&p[1]) < cfg.min_distance {
                    continue;
                }
                let mut moved = p.clone();
                moved[0] = cand;
                let power = relay_power(&w, &source_relay_channel(&moved, &ch, &cfg).unwrap(), &cfg);
                let direct = power <= cfg.relay_power_budget * (1.0 + POWER_SLACK);
                assert_eq!(receive_feasible(&cand, 0, &p, &ctx, &ch, &cfg), direct);
                violations += usize::from(!direct);
            }
        }
        assert!(violations > 0);
    }

    #[test]
    fn transmit_objective_is_constant_without_own_terms() {
        let cfg = cfg(3, 4);
        let ch = sample_channel(&cfg, 9);
        let p = PositionSet::centered_grid(&cfg).unwrap();
        let mut w = random_w(3, 0.4);
        w.matrix.row_mut(1).fill(Complex64::new(0.0, 0.0));
        let ctx = build_transmit_context(1, &w, &p, &p, &ch, &cfg).unwrap();
        let expected = libm::log2(cfg.source_power * ctx.beta_n.norm_sqr())
            - libm::log2(cfg.relay_noise_power * norm_sqr(&ctx.d_n) + cfg.dest_noise_power);
        for pos in [Position::new(0.0, 0.0), Position::new(-1.1, 0.6)] {
            assert!((transmit_objective(&pos, &ctx, &ch, &cfg) - expected).abs() < 1e-12);
            assert_eq!(transmit_gradient(&pos, &ctx, &ch, &cfg), [0.0, 0.0]);
        }
    }

    #[test]
    fn zero_gradient_leaves_receive_placement_alone() {
        let cfg = cfg(4, 3);
        let ch = sample_channel(&cfg, 10);
        let p = PositionSet::centered_grid(&cfg).unwrap();
        let out = optimize_receive_positions(&p, &AfWeights::zeros(4), &p, &ch, &cfg, &GaParams::default())
            .unwrap();
        assert_eq!(out.positions, p);
    }

    #[test]
    fn infeasible_inputs_are_rejected() {
        let cfg = cfg(2, 3);
        let ch = sample_channel(&cfg, 12);
        let ok = PositionSet::centered_grid(&cfg).unwrap();
        let bad = PositionSet::new(vec![Position::new(0.0, 0.0), Position::new(0.1, 0.0)]);
        let ga = GaParams::default();
        let w = random_w(2, 0.01);
        assert!(matches!(
            optimize_receive_positions(&bad, &w, &ok, &ch, &cfg, &ga),
            Err(Error::InfeasiblePositions(_))
        ));
        assert!(matches!(
            optimize_transmit_positions(&bad, &w, &ok, &ch, &cfg, &ga),
            Err(Error::InfeasiblePositions(_))
        ));
        let loud = random_w(2, 10.0);
        assert!(optimize_receive_positions(&ok, &loud, &ok, &ch, &cfg, &ga).is_err());
    }

    #[test]
    fn noise_alone_exhausting_budget_is_reported() {
        let cfg = SystemConfig { source_power: 0.0, ..cfg(2, 3) };
        let ch = sample_channel(&cfg, 13);
        let p = PositionSet::centered_grid(&cfg).unwrap();
        let w = AfWeights::new(CMatrix::identity(2, 2).map(|z| z * libm::sqrt(5.0)));
        assert!(matches!(
            optimize_receive_positions(&p, &w, &p, &ch, &cfg, &GaParams::default()),
            Err(Error::NoPowerSlack(_))
        ));
    }
}
