//! AF weight design.
//!
//! With both placements fixed, the weight subproblem is a quadratic fractional
//! program in `w = vec(W)`. Lifting `Q = w w^H` and dropping the rank
//! constraint gives a fractional SDP; the Charnes-Cooper substitution
//! `Q = Q~ / tau` turns it into the linear SDP
//!
//! ```text
//! min  Tr(s_r^2 A A^H Q~) + tau s_d^2
//! s.t. Tr((P_s B B^H + s_r^2 I) Q~) <= tau P_tot
//!      Tr(P_s h h^H Q~) = 1,   Q~ >= 0,  tau >= 0
//! ```
//!
//! whose optimum is always rank one, so `w` is read off the principal
//! eigenpair of `Q~ / tau`.
//!
//! The complex Hermitian cone is handled through the real embedding
//! `M -> [[Re M, -Im M], [Im M, Re M]]`, for which
//! `Tr(M Q) = Tr(emb(M) emb(Q)) / 2`. Every matrix handed to the solver is
//! therefore half an embedding.

mod ipm;

use alloc::vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::linalg::{
    frobenius_sqr, hermitian_deviation, norm_sqr, unvec_col_major, vec_col_major, CMatrix, CVector,
    Complex64,
};
use crate::{Error, Result, SystemConfig};

/// Channel norms below this are treated as zero.
pub const DEGENERATE_CHANNEL_NORM: f64 = 1e-12;

/// Relay weight matrix `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfWeights {
    #[serde(with = "crate::serde_complex::matrix")]
    pub matrix: CMatrix,
}

impl AfWeights {
    pub fn new(matrix: CMatrix) -> Self {
        assert!(matrix.is_square(), "AF weight matrix must be square");
        Self { matrix }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(CMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Column-major `vec(W)`.
    pub fn to_vec(&self) -> CVector {
        vec_col_major(&self.matrix)
    }

    pub fn from_vec(w: &CVector) -> Self {
        let n = libm::sqrt(w.len() as f64) as usize;
        Self::new(unvec_col_major(w, n))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.matrix.map(|z| z * factor))
    }

    pub fn frobenius_sqr(&self) -> f64 {
        frobenius_sqr(&self.matrix)
    }
}

/// `P_s |h2^H W h1|^2 / (s_r^2 ||h2^H W||^2 + s_d^2)`.
pub fn end_to_end_snr(w: &AfWeights, h1: &CVector, h2: &CVector, cfg: &SystemConfig) -> f64 {
    let h2w = h2.adjoint() * &w.matrix;
    let signal = (&h2w * h1)[0].norm_sqr();
    let noise = cfg.relay_noise_power * h2w.iter().map(|z| z.norm_sqr()).sum::<f64>()
        + cfg.dest_noise_power;
    cfg.source_power * signal / noise
}

/// Relay transmit power `P_s ||W h1||^2 + s_r^2 ||W||_F^2`.
pub fn relay_power(w: &AfWeights, h1: &CVector, cfg: &SystemConfig) -> f64 {
    cfg.source_power * norm_sqr(&(&w.matrix * h1)) + cfg.relay_noise_power * w.frobenius_sqr()
}

/// Kronecker-lifted data: `h = conj(h1) (x) h2`, `A = I (x) h2`,
/// `B = conj(h1) (x) I`, so that with `w = vec(W)`
/// `h^H w = h2^H W h1`, `A^H w = (h2^H W)^T` and `B^H w = W h1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedProblem {
    pub h: CVector,
    pub a_mat: CMatrix,
    pub b_mat: CMatrix,
}

impl LiftedProblem {
    pub fn n(&self) -> usize {
        self.a_mat.ncols()
    }
}

pub fn lift_problem(h1: &CVector, h2: &CVector) -> Result<LiftedProblem> {
    if h1.len() != h2.len() {
        return Err(Error::DimensionMismatch {
            expected: h1.len(),
            found: h2.len(),
        });
    }
    let n = h1.len();
    let eye = CMatrix::identity(n, n);
    let h1c = h1.map(|z| z.conj());
    Ok(LiftedProblem {
        h: h1c.kronecker(h2),
        a_mat: eye.kronecker(h2),
        b_mat: h1c.kronecker(&eye),
    })
}

/// `[[Re M, -Im M], [Im M, Re M]]` for Hermitian `M`.
pub fn hermitian_to_real_embedding(m: &CMatrix) -> Result<DMatrix<f64>> {
    let dev = hermitian_deviation(m);
    if dev > 1e-10 {
        return Err(Error::NotHermitian(dev));
    }
    Ok(embed(m))
}

fn embed(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Hermitian matrix represented by a real symmetric `2n x 2n` matrix,
/// consistent with `Tr(M Q) = Tr(emb(M) X) / 2`.
fn unembed(x: &DMatrix<f64>) -> CMatrix {
    let n = x.nrows() / 2;
    CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(
            0.5 * (x[(i, j)] + x[(i + n, j + n)]),
            0.5 * (x[(i + n, j)] - x[(i, j + n)]),
        )
    })
}

fn real_trace_product(m: &CMatrix, q: &CMatrix) -> f64 {
    // Tr(M Q) for Hermitian M, Q is real
    m.iter().zip(q.transpose().iter()).map(|(a, b)| (a * b).re).sum()
}

/// Optimal point of the Charnes-Cooper SDP.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub q_tilde: CMatrix,
    pub tau: f64,
    /// `Tr(s_r^2 A A^H Q~) + tau s_d^2`; its reciprocal is the optimal SNR.
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
}

impl SdpSolution {
    pub fn snr(&self) -> f64 {
        1.0 / self.objective
    }
}

pub fn solve_charnes_cooper_sdp(lp: &LiftedProblem, cfg: &SystemConfig) -> Result<SdpSolution> {
    let h_norm = libm::sqrt(norm_sqr(&lp.h));
    if h_norm < DEGENERATE_CHANNEL_NORM * DEGENERATE_CHANNEL_NORM {
        return Err(Error::Infeasible("h is zero, Tr(P_s h h^H Q) = 1 cannot hold"));
    }
    let dim = lp.h.len();
    let aa = &lp.a_mat * lp.a_mat.adjoint();
    let bb = &lp.b_mat * lp.b_mat.adjoint();
    let hh = &lp.h * lp.h.adjoint();
    let signal = hh.map(|z| z * cfg.source_power);
    let power = bb.map(|z| z * cfg.source_power)
        + CMatrix::identity(dim, dim).map(|z| z * cfg.relay_noise_power);
    let noise = aa.map(|z| z * cfg.relay_noise_power);

    // Linear variables: (tau, power slack).
    let problem = ipm::BlockSdp {
        c: embed(&noise) * 0.5,
        c_lin: DVector::from_vec(vec![cfg.dest_noise_power, 0.0]),
        a: vec![embed(&signal) * 0.5, embed(&power) * 0.5],
        a_lin: vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![-cfg.relay_power_budget, 1.0]),
        ],
        b: DVector::from_vec(vec![1.0, 0.0]),
    };
    let settings = ipm::IpmSettings {
        tol: cfg.solver.sdp_tol,
        accept_tol: cfg.solver.sdp_feasibility_tol,
        max_iters: cfg.solver.sdp_max_iters,
    };
    let sol = ipm::solve(&problem, settings)?;
    let q_tilde = unembed(&sol.x);
    let tau = sol.x_lin[0];
    let objective = real_trace_product(&noise, &q_tilde) + tau * cfg.dest_noise_power;
    Ok(SdpSolution {
        q_tilde,
        tau,
        objective,
        iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        relative_gap: sol.relative_gap,
    })
}

fn principal_eigenpair(q: &CMatrix) -> (f64, CVector, f64) {
    let eig = SymmetricEigen::new(q.clone());
    let (imax, &lmax) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty matrix");
    let trace: f64 = eig.eigenvalues.iter().sum();
    (lmax, eig.eigenvectors.column(imax).into_owned(), trace)
}

/// `w = sqrt(lambda_max) x` from `Q = Q~ / tau`, reshaped column-major into
/// `W`. If solver round-off leaves the power a hair above budget, `W` is
/// scaled back onto it.
pub fn recover_weights(sol: &SdpSolution, lp: &LiftedProblem, cfg: &SystemConfig) -> Result<AfWeights> {
    if !(sol.tau > 1e-300) {
        return Err(Error::DegenerateTau(sol.tau));
    }
    let q = sol.q_tilde.map(|z| z / sol.tau);
    let (lmax, x, _) = principal_eigenpair(&q);
    let w = x * Complex64::new(libm::sqrt(lmax.max(0.0)), 0.0);
    let weights = AfWeights::from_vec(&w);
    let n = lp.n();
    debug_assert_eq!(weights.n(), n);
    let h1 = channel_from_lifted(lp);
    let p = relay_power(&weights, &h1, cfg);
    if p > cfg.relay_power_budget {
        return Ok(weights.scaled(libm::sqrt(cfg.relay_power_budget / p)));
    }
    Ok(weights)
}

/// `h1` read back out of `B = conj(h1) (x) I`.
fn channel_from_lifted(lp: &LiftedProblem) -> CVector {
    let n = lp.n();
    CVector::from_iterator(n, (0..n).map(|j| lp.b_mat[(j * n, 0)].conj()))
}

/// `1 - lambda_max(Q) / Tr(Q)`; zero exactly when `Q` is rank one.
pub fn rank_one_residual(q: &CMatrix) -> Result<f64> {
    let trace: f64 = q.diagonal().iter().map(|z| z.re).sum();
    if !(trace > 0.0) {
        return Err(Error::NonPositiveTrace(trace));
    }
    let (lmax, _, _) = principal_eigenpair(q);
    Ok((1.0 - lmax / trace).clamp(0.0, 1.0))
}

/// `W = alpha h2 h1^H` with `alpha` chosen so that the relay spends exactly
/// `P_tot`.
pub fn matched_filter_weights(h1: &CVector, h2: &CVector, cfg: &SystemConfig) -> Result<AfWeights> {
    if h1.len() != h2.len() {
        return Err(Error::DimensionMismatch {
            expected: h1.len(),
            found: h2.len(),
        });
    }
    let n1 = norm_sqr(h1);
    let n2 = norm_sqr(h2);
    if libm::sqrt(n1) < DEGENERATE_CHANNEL_NORM || libm::sqrt(n2) < DEGENERATE_CHANNEL_NORM {
        return Err(Error::ZeroChannel);
    }
    let alpha = libm::sqrt(
        cfg.relay_power_budget / (n1 * n2 * (cfg.source_power * n1 + cfg.relay_noise_power)),
    );
    Ok(AfWeights::new(h2 * h1.adjoint() * Complex64::new(alpha, 0.0)))
}

/// Solver diagnostics attached to a weight update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpDiagnostics {
    pub objective: f64,
    pub rank_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightUpdate {
    pub weights: AfWeights,
    pub snr: f64,
    /// `None` when the channel was degenerate and the SDP was skipped.
    pub diagnostics: Option<SdpDiagnostics>,
}

/// Lift, solve and recover in one call. A (numerically) zero channel skips the
/// solver and yields `W = 0`, since every feasible `W` then has SNR zero.
pub fn optimize_weights(h1: &CVector, h2: &CVector, cfg: &SystemConfig) -> Result<WeightUpdate> {
    let n = h1.len();
    if libm::sqrt(norm_sqr(h1)) < DEGENERATE_CHANNEL_NORM
        || libm::sqrt(norm_sqr(h2)) < DEGENERATE_CHANNEL_NORM
    {
        return Ok(WeightUpdate {
            weights: AfWeights::zeros(n),
            snr: 0.0,
            diagnostics: None,
        });
    }
    let lp = lift_problem(h1, h2)?;
    let sol = solve_charnes_cooper_sdp(&lp, cfg)?;
    let weights = recover_weights(&sol, &lp, cfg)?;
    let rank_residual = rank_one_residual(&sol.q_tilde.map(|z| z / sol.tau))?;
    let snr = end_to_end_snr(&weights, h1, h2, cfg);
    Ok(WeightUpdate {
        weights,
        snr,
        diagnostics: Some(SdpDiagnostics {
            objective: sol.objective,
            rank_residual,
            iterations: sol.iterations,
        }),
    })
}
