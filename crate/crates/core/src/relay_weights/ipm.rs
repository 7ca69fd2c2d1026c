//! Primal-dual interior-point method for small block SDPs.
//!
//! Solves
//!
//! ```text
//! min  <C, X> + c_lin . x
//! s.t. <A_i, X> + a_lin_i . x = b_i,   i = 1..m
//!      X in S^n_+,  x >= 0
//! ```
//!
//! with the HKM search direction and Mehrotra's predictor-corrector. The
//! Schur complement is `m x m`, so the cost per iteration is dominated by a
//! handful of dense `n x n` products. Data are scaled to unit norm before the
//! first iteration and unscaled on return.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::linalg::symmetrize;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct BlockSdp {
    pub c: DMatrix<f64>,
    pub c_lin: DVector<f64>,
    pub a: Vec<DMatrix<f64>>,
    pub a_lin: Vec<DVector<f64>>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmSettings {
    pub tol: f64,
    pub accept_tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmSolution {
    pub x: DMatrix<f64>,
    pub x_lin: DVector<f64>,
    pub iterations: usize,
    /// Residuals of the scaled problem at termination.
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
}

struct Direction {
    dy: DVector<f64>,
    dx: DMatrix<f64>,
    dx_lin: DVector<f64>,
    dz: DMatrix<f64>,
    dz_lin: DVector<f64>,
}

/// Largest `alpha` keeping `x + alpha * dx` positive semidefinite.
fn max_step_psd(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = chol.l();
    let mut t = dx.clone();
    if !l.solve_lower_triangular_mut(&mut t) {
        return 0.0;
    }
    let mut m = t.transpose();
    if !l.solve_lower_triangular_mut(&mut m) {
        return 0.0;
    }
    symmetrize(&mut m);
    let lmin = m.symmetric_eigenvalues().min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn max_step_lin(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn solve(problem: &BlockSdp, settings: IpmSettings) -> Result<IpmSolution> {
    let m = problem.b.len();
    let n = problem.c.nrows();
    let n_lin = problem.c_lin.len();
    assert_eq!(problem.a.len(), m);
    assert_eq!(problem.a_lin.len(), m);

    // Row scaling: every constraint gets unit norm.
    let mut a = problem.a.clone();
    let mut a_lin = problem.a_lin.clone();
    let mut b = problem.b.clone();
    for i in 0..m {
        let s = libm::sqrt(a[i].norm_squared() + a_lin[i].norm_squared());
        if s == 0.0 {
            return Err(Error::Infeasible("empty constraint row"));
        }
        a[i] /= s;
        a_lin[i] /= s;
        b[i] /= s;
    }
    // Objective and right-hand-side scaling.
    let c_scale = libm::sqrt(problem.c.norm_squared() + problem.c_lin.norm_squared()).max(1e-300);
    let c = &problem.c / c_scale;
    let c_lin = &problem.c_lin / c_scale;
    let b_scale = b.norm().max(1e-300);
    b /= b_scale;

    let nu = (n + n_lin) as f64;
    let xi = libm::sqrt(n as f64).max(10.0).max(
        (0..m)
            .map(|i| nu * (1.0 + b[i].abs()) / 2.0)
            .fold(0.0, f64::max),
    );
    let eta = libm::sqrt(n as f64).max(10.0);
    let mut x = DMatrix::<f64>::identity(n, n) * xi;
    let mut x_lin = DVector::<f64>::from_element(n_lin, xi);
    let mut z = DMatrix::<f64>::identity(n, n) * eta;
    let mut z_lin = DVector::<f64>::from_element(n_lin, eta);
    let mut y = DVector::<f64>::zeros(m);

    let b_norm = b.norm();
    let c_norm = libm::sqrt(c.norm_squared() + c_lin.norm_squared());
    let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);

    for iter in 0..settings.max_iters {
        // Residuals.
        let mut rp = b.clone();
        for i in 0..m {
            rp[i] -= a[i].dot(&x) + a_lin[i].dot(&x_lin);
        }
        let mut rd = &c - &z;
        let mut rd_lin = &c_lin - &z_lin;
        for i in 0..m {
            rd -= &a[i] * y[i];
            rd_lin -= &a_lin[i] * y[i];
        }
        let complementarity = x.dot(&z) + x_lin.dot(&z_lin);
        let mu = complementarity / nu;
        let pobj = c.dot(&x) + c_lin.dot(&x_lin);
        let dobj = b.dot(&y);
        let pres = rp.norm() / (1.0 + b_norm);
        let dres = libm::sqrt(rd.norm_squared() + rd_lin.norm_squared()) / (1.0 + c_norm);
        let gap = complementarity.max((pobj - dobj).abs()) / (1.0 + pobj.abs() + dobj.abs());
        last = (gap, pres, dres);
        if pres < settings.tol && dres < settings.tol && gap < settings.tol {
            return Ok(finish(x, x_lin, b_scale, iter, last));
        }

        let Some(z_chol) = Cholesky::new(z.clone()) else {
            break;
        };
        let z_inv = z_chol.inverse();
        let z_inv_lin = z_lin.map(|v| 1.0 / v);

        // G_j = X A_j Z^{-1}; Schur complement M_ij = <A_i, G_j>.
        let g: Vec<DMatrix<f64>> = a.iter().map(|aj| &x * aj * &z_inv).collect();
        let g_lin: Vec<DVector<f64>> = a_lin
            .iter()
            .map(|aj| x_lin.component_mul(aj).component_mul(&z_inv_lin))
            .collect();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                schur[(i, j)] = a[i].dot(&g[j]) + a_lin[i].dot(&g_lin[j]);
            }
        }
        symmetrize(&mut schur);
        let Some(schur_chol) = Cholesky::new(schur) else {
            break;
        };
        let x_rd_zinv = &x * &rd * &z_inv;
        let x_rd_zinv_lin = x_lin.component_mul(&rd_lin).component_mul(&z_inv_lin);

        // Newton direction for target sigma*mu with optional second-order term.
        let direction = |sigma: f64, corr: Option<(&DMatrix<f64>, &DVector<f64>)>| -> Direction {
            let mut rhs = DVector::<f64>::zeros(m);
            let corr_mat = corr.map(|(c, _)| c * &z_inv);
            let corr_lin = corr.map(|(_, c)| c.component_mul(&z_inv_lin));
            for i in 0..m {
                let mut r = rp[i] - sigma * mu * (a[i].dot(&z_inv) + a_lin[i].dot(&z_inv_lin))
                    + a[i].dot(&x)
                    + a_lin[i].dot(&x_lin)
                    + a[i].dot(&x_rd_zinv)
                    + a_lin[i].dot(&x_rd_zinv_lin);
                if let (Some(cm), Some(cl)) = (&corr_mat, &corr_lin) {
                    r += a[i].dot(cm) + a_lin[i].dot(cl);
                }
                rhs[i] = r;
            }
            let dy = schur_chol.solve(&rhs);
            let mut dz = rd.clone();
            let mut dz_lin = rd_lin.clone();
            // X dZ Z^{-1} = X Rd Z^{-1} - sum_j dy_j G_j
            let mut x_dz_zinv = x_rd_zinv.clone();
            let mut x_dz_zinv_lin = x_rd_zinv_lin.clone();
            for j in 0..m {
                dz -= &a[j] * dy[j];
                dz_lin -= &a_lin[j] * dy[j];
                x_dz_zinv -= &g[j] * dy[j];
                x_dz_zinv_lin -= &g_lin[j] * dy[j];
            }
            let mut dx = &z_inv * (sigma * mu) - &x - x_dz_zinv;
            let mut dx_lin = &z_inv_lin * (sigma * mu) - &x_lin - x_dz_zinv_lin;
            if let (Some(cm), Some(cl)) = (corr_mat, corr_lin) {
                dx -= cm;
                dx_lin -= cl;
            }
            symmetrize(&mut dx);
            Direction {
                dy,
                dx,
                dx_lin,
                dz,
                dz_lin,
            }
        };
        let steps = |d: &Direction| -> (f64, f64) {
            let ap = max_step_psd(&x, &d.dx).min(max_step_lin(&x_lin, &d.dx_lin));
            let ad = max_step_psd(&z, &d.dz).min(max_step_lin(&z_lin, &d.dz_lin));
            (ap, ad)
        };

        // Predictor.
        let pred = direction(0.0, None);
        let (ap, ad) = steps(&pred);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let x_aff = &x + &pred.dx * ap;
        let z_aff = &z + &pred.dz * ad;
        let mu_aff = (x_aff.dot(&z_aff)
            + (&x_lin + &pred.dx_lin * ap).dot(&(&z_lin + &pred.dz_lin * ad)))
            / nu;
        let ratio = (mu_aff / mu).clamp(0.0, 1.0);
        let sigma = ratio * ratio * ratio;

        // Corrector.
        let corr = &pred.dx * &pred.dz;
        let corr_lin = pred.dx_lin.component_mul(&pred.dz_lin);
        let d = direction(sigma, Some((&corr, &corr_lin)));
        let (ap_max, ad_max) = steps(&d);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * ap_max).min(1.0);
        let ad = (gamma * ad_max).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            break;
        }
        x += &d.dx * ap;
        x_lin += &d.dx_lin * ap;
        symmetrize(&mut x);
        y += &d.dy * ad;
        z += &d.dz * ad;
        z_lin += &d.dz_lin * ad;
        symmetrize(&mut z);
    }

    let (gap, pres, dres) = last;
    if gap < settings.accept_tol && pres < settings.accept_tol && dres < settings.accept_tol {
        return Ok(finish(x, x_lin, b_scale, settings.max_iters, last));
    }
    Err(Error::SolverNotConverged {
        iterations: settings.max_iters,
        gap,
        primal: pres,
        dual: dres,
    })
}

fn finish(
    x: DMatrix<f64>,
    x_lin: DVector<f64>,
    b_scale: f64,
    iterations: usize,
    (gap, pres, dres): (f64, f64, f64),
) -> IpmSolution {
    IpmSolution {
        x: x * b_scale,
        x_lin: x_lin * b_scale,
        iterations,
        primal_residual: pres,
        dual_residual: dres,
        relative_gap: gap,
    }
}
