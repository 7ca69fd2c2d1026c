#![allow(dead_code)]

use marelay_core::{CMatrix, CVector, ChannelRealization, Complex64, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mag(z: Complex64) -> f64 {
    z.re.hypot(z.im)
}

pub fn cn(rng: &mut impl Rng) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal))
}

pub fn cn_vector(rng: &mut impl Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| cn(rng))
}

pub fn cn_matrix(rng: &mut impl Rng, n: usize, m: usize) -> CMatrix {
    CMatrix::from_fn(n, m, |_, _| cn(rng))
}

pub fn config(n: usize, paths: usize) -> SystemConfig {
    SystemConfig {
        n_antennas: n,
        n_rx_paths: paths,
        n_tx_paths: paths,
        ..SystemConfig::default()
    }
}

/// `exp(j 2 pi (x sin(theta) cos(phi) + y cos(theta)))`, written out with std
/// trig and no library helpers.
pub fn frv_entry(x: f64, y: f64, theta: f64, phi: f64) -> Complex64 {
    let rho = x * theta.sin() * phi.cos() + y * theta.cos();
    let ph = 2.0 * std::f64::consts::PI * rho;
    Complex64::new(ph.cos(), ph.sin())
}

/// Single-path channel with unit path responses.
pub fn unit_single_path(ch: &mut ChannelRealization) {
    ch.rx_prv = CVector::from_element(1, Complex64::new(1.0, 0.0));
    ch.tx_prv = CVector::from_element(1, Complex64::new(1.0, 0.0));
}

/// `P_s |h2^H W h1|^2 / (s_r^2 ||h2^H W||^2 + s_d^2)` by explicit sums.
pub fn direct_snr(w: &CMatrix, h1: &CVector, h2: &CVector, cfg: &SystemConfig) -> f64 {
    let n = h1.len();
    let mut signal = Complex64::new(0.0, 0.0);
    let mut leak = 0.0;
    for j in 0..n {
        let mut col = Complex64::new(0.0, 0.0);
        for i in 0..n {
            col += h2[i].conj() * w[(i, j)];
        }
        signal += col * h1[j];
        leak += col.norm_sqr();
    }
    cfg.source_power * signal.norm_sqr() / (cfg.relay_noise_power * leak + cfg.dest_noise_power)
}

/// `P_s ||W h1||^2 + s_r^2 ||W||_F^2` by explicit sums.
pub fn direct_power(w: &CMatrix, h1: &CVector, cfg: &SystemConfig) -> f64 {
    let n = h1.len();
    let mut out = 0.0;
    let mut fro = 0.0;
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += w[(i, j)] * h1[j];
            fro += w[(i, j)].norm_sqr();
        }
        out += row.norm_sqr();
    }
    cfg.source_power * out + cfg.relay_noise_power * fro
}

/// Optimal SNR of the weight subproblem as a generalized Rayleigh quotient.
///
/// The power constraint is tight at the optimum, so `s_d^2` can be replaced by
/// `s_d^2 w^H C w / P_tot` with `C = P_s B B^H + s_r^2 I`; the ratio becomes
/// homogeneous and its maximum is `P_s h^H M^-1 h` with
/// `M = s_r^2 A A^H + (s_d^2 / P_tot) C`. All lifted matrices are built here
/// entry by entry from `w = vec(W)` (column-major).
pub fn rayleigh_optimal_snr(h1: &CVector, h2: &CVector, cfg: &SystemConfig) -> f64 {
    let n = h1.len();
    let idx = |i: usize, j: usize| j * n + i;
    let mut h = CVector::zeros(n * n);
    let mut m = CMatrix::zeros(n * n, n * n);
    let scale = cfg.dest_noise_power / cfg.relay_power_budget;
    for j in 0..n {
        for i in 0..n {
            h[idx(i, j)] = h2[i] * h1[j].conj();
            for jp in 0..n {
                for ip in 0..n {
                    let mut v = Complex64::new(0.0, 0.0);
                    if j == jp {
                        v += h2[i] * h2[ip].conj() * cfg.relay_noise_power;
                    }
                    if i == ip {
                        v += h1[j].conj() * h1[jp] * (cfg.source_power * scale);
                    }
                    if i == ip && j == jp {
                        v += Complex64::new(cfg.relay_noise_power * scale, 0.0);
                    }
                    m[(idx(i, j), idx(ip, jp))] = v;
                }
            }
        }
    }
    let x = m.cholesky().expect("M is positive definite").solve(&h);
    cfg.source_power * h.dotc(&x).re
}

/// Best SNR over `draws` random weight matrices, each scaled onto the power
/// budget (the SNR grows with the scale, so the budget is always spent).
pub fn random_search_snr(
    r: &mut impl Rng,
    h1: &CVector,
    h2: &CVector,
    cfg: &SystemConfig,
    draws: usize,
) -> f64 {
    let n = h1.len();
    (0..draws)
        .map(|_| {
            let w = cn_matrix(r, n, n);
            let w = &w * Complex64::new((cfg.relay_power_budget / direct_power(&w, h1, cfg)).sqrt(), 0.0);
            direct_snr(&w, h1, h2, cfg)
        })
        .fold(0.0, f64::max)
}

pub const FD_STEP: f64 = 1e-6;

/// Central finite-difference gradient of `f` at `(x, y)`.
pub fn fd_gradient(f: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> [f64; 2] {
    let h = FD_STEP;
    [
        (f(x + h, y) - f(x - h, y)) / (2.0 * h),
        (f(x, y + h) - f(x, y - h)) / (2.0 * h),
    ]
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn gradient_rel_error(a: [f64; 2], b: [f64; 2]) -> f64 {
    let diff = (a[0] - b[0]).hypot(a[1] - b[1]);
    let scale = a[0].hypot(a[1]).max(b[0].hypot(b[1]));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Worst receive and transmit relative gradient errors over one random
/// instance: random placements, random `W`, every antenna index, and a few
/// random probe positions each.
pub fn gradient_check_instance(n: usize, paths: usize, seed: u64) -> (f64, f64) {
    use marelay_core::position_opt::{
        build_receive_context, build_transmit_context, receive_gradient, receive_objective,
        transmit_gradient, transmit_objective,
    };
    use marelay_core::{sample_channel, AfWeights, Position, PositionSet};

    let cfg = config(n, paths);
    let ch = sample_channel(&cfg, seed);
    let mut r = rng(seed ^ 0x9e37_79b9);
    let mut set = || {
        PositionSet::new((0..n).map(|_| Position::new(r.random_range(-1.5..1.5), r.random_range(-1.5..1.5))).collect())
    };
    let (rx, tx) = (set(), set());
    let w = AfWeights::new(cn_matrix(&mut r, n, n));
    let (mut worst_rx, mut worst_tx) = (0.0_f64, 0.0_f64);
    for k in 0..n {
        let rc = build_receive_context(k, &w, &rx, &tx, &ch, &cfg).unwrap();
        let tc = build_transmit_context(k, &w, &rx, &tx, &ch, &cfg).unwrap();
        for _ in 0..3 {
            let p = Position::new(r.random_range(-1.5..1.5), r.random_range(-1.5..1.5));
            let fr = |x, y| receive_objective(&Position::new(x, y), &rc, &ch, &cfg);
            let ft = |x, y| transmit_objective(&Position::new(x, y), &tc, &ch, &cfg);
            let gr = receive_gradient(&p, &rc, &ch, &cfg);
            let gt = transmit_gradient(&p, &tc, &ch, &cfg);
            worst_rx = worst_rx.max(gradient_rel_error(gr, fd_gradient(fr, p.x, p.y)));
            worst_tx = worst_tx.max(gradient_rel_error(gt, fd_gradient(ft, p.x, p.y)));
        }
    }
    (worst_rx, worst_tx)
}
