//! Field-response channels between the relay's movable antennas and the two
//! single-antenna end nodes.
//!
//! Each antenna position `p = (x, y)` sees path `i` with phase
//! `2*pi/lambda * (x sin(theta_i) cos(phi_i) + y cos(theta_i))`. The channel of
//! antenna `n` is the conjugate field-response vector times the path-response
//! vector.

use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::ops::{Add, Index, IndexMut, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{cis, CVector, Complex64};
use crate::{Error, Result, SystemConfig};

/// Antenna position in wavelengths, measured from the region center.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    /// Inside the centered square `[-half, half]^2`.
    pub fn in_region(&self, half: f64) -> bool {
        self.x.abs() <= half && self.y.abs() <= half
    }

    pub fn offset(&self, step: f64, dir: [f64; 2]) -> Position {
        Position::new(self.x + step * dir[0], self.y + step * dir[1])
    }
}

impl Add for Position {
    type Output = Position;
    fn add(self, rhs: Position) -> Position {
        Position::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Position {
    type Output = Position;
    fn sub(self, rhs: Position) -> Position {
        Position::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Ordered placement of the relay's `N` antennas.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PositionSet {
    pub positions: Vec<Position>,
}

impl PositionSet {
    pub fn new(positions: Vec<Position>) -> Self {
        Self { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Position> {
        self.positions.iter()
    }

    /// Uniform planar array with half-wavelength spacing, centered on the
    /// origin. `N` is laid out as `rows x cols` with `rows >= cols` and
    /// `rows - cols` as small as possible (6 -> 3 x 2, 7 -> 7 x 1).
    pub fn centered_grid(cfg: &SystemConfig) -> Result<PositionSet> {
        let n = cfg.n_antennas;
        let spacing = 0.5 * cfg.wavelength;
        let cols = (1..=n)
            .filter(|c| n % c == 0 && c * c <= n)
            .max()
            .unwrap_or(1);
        let rows = n / cols;
        let half = cfg.half_region();
        let extent_x = 0.5 * (cols - 1) as f64 * spacing;
        let extent_y = 0.5 * (rows - 1) as f64 * spacing;
        if extent_x > half || extent_y > half || cfg.min_distance > spacing {
            return Err(Error::GridDoesNotFit {
                rows,
                cols,
                spacing,
                region: cfg.region_size,
            });
        }
        let positions = (0..rows)
            .flat_map(|r| {
                (0..cols).map(move |c| {
                    Position::new(
                        c as f64 * spacing - extent_x,
                        r as f64 * spacing - extent_y,
                    )
                })
            })
            .collect();
        Ok(PositionSet { positions })
    }

    /// Region and spacing constraints, each with additive slack `tol`.
    pub fn is_feasible(&self, cfg: &SystemConfig, tol: f64) -> bool {
        let half = cfg.half_region() + tol;
        self.positions.iter().all(|p| p.in_region(half))
            && min_pairwise_distance(self) >= cfg.min_distance - tol
    }

    /// Smallest distance from `candidate` to every antenna except `skip`.
    pub fn distance_to_others(&self, candidate: &Position, skip: usize) -> f64 {
        self.positions
            .iter()
            .enumerate()
            .filter(|(m, _)| *m != skip)
            .map(|(_, p)| p.distance(candidate))
            .fold(f64::INFINITY, f64::min)
    }
}

impl Index<usize> for PositionSet {
    type Output = Position;
    fn index(&self, n: usize) -> &Position {
        &self.positions[n]
    }
}

impl IndexMut<usize> for PositionSet {
    fn index_mut(&mut self, n: usize) -> &mut Position {
        &mut self.positions[n]
    }
}

/// Smallest Euclidean distance over distinct pairs; `+inf` for fewer than two.
pub fn min_pairwise_distance(p: &PositionSet) -> f64 {
    let pts = &p.positions;
    let mut best = f64::INFINITY;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            best = best.min(a.distance(b));
        }
    }
    best
}

/// Projection coefficients of one propagation path:
/// `rho(p) = x * sx + y * sy` with `sx = sin(theta) cos(phi)`, `sy = cos(theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathDirection {
    pub sx: f64,
    pub sy: f64,
}

impl PathDirection {
    pub fn new(elevation: f64, azimuth: f64) -> Self {
        Self {
            sx: libm::sin(elevation) * libm::cos(azimuth),
            sy: libm::cos(elevation),
        }
    }

    #[inline]
    pub fn rho(&self, p: &Position) -> f64 {
        p.x * self.sx + p.y * self.sy
    }
}

/// One random draw of path angles and path gains for both hops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub rx_elevations: Vec<f64>,
    pub rx_azimuths: Vec<f64>,
    pub tx_elevations: Vec<f64>,
    pub tx_azimuths: Vec<f64>,
    /// Source-to-relay path responses (`g_1`).
    #[serde(with = "crate::serde_complex::vector")]
    pub rx_prv: CVector,
    /// Relay-to-destination path responses (`f_2`).
    #[serde(with = "crate::serde_complex::vector")]
    pub tx_prv: CVector,
}

impl ChannelRealization {
    pub fn rx_directions(&self) -> Vec<PathDirection> {
        directions(&self.rx_elevations, &self.rx_azimuths)
    }

    pub fn tx_directions(&self) -> Vec<PathDirection> {
        directions(&self.tx_elevations, &self.tx_azimuths)
    }

    /// FNV-1a over the bit patterns of every field; used to prove that
    /// schemes compared side by side saw the same draw.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for v in self
            .rx_elevations
            .iter()
            .chain(&self.rx_azimuths)
            .chain(&self.tx_elevations)
            .chain(&self.tx_azimuths)
        {
            eat(*v);
        }
        for z in self.rx_prv.iter().chain(self.tx_prv.iter()) {
            eat(z.re);
            eat(z.im);
        }
        h
    }
}

fn directions(elevations: &[f64], azimuths: &[f64]) -> Vec<PathDirection> {
    elevations
        .iter()
        .zip(azimuths)
        .map(|(&t, &p)| PathDirection::new(t, p))
        .collect()
}

fn frv(pos: &Position, dirs: &[PathDirection], k: f64) -> CVector {
    CVector::from_iterator(dirs.len(), dirs.iter().map(|d| cis(k * d.rho(pos))))
}

/// Receive field-response vector `f_1(pos)`.
pub fn receive_frv(pos: &Position, ch: &ChannelRealization, cfg: &SystemConfig) -> CVector {
    frv(pos, &ch.rx_directions(), cfg.wavenumber())
}

/// Transmit field-response vector `g_2(pos)`.
pub fn transmit_frv(pos: &Position, ch: &ChannelRealization, cfg: &SystemConfig) -> CVector {
    frv(pos, &ch.tx_directions(), cfg.wavenumber())
}

/// `frv(pos)^H * prv` evaluated without materializing the FRV.
pub(crate) fn antenna_gain(pos: &Position, dirs: &[PathDirection], prv: &CVector, k: f64) -> Complex64 {
    dirs.iter()
        .zip(prv.iter())
        .map(|(d, g)| cis(-k * d.rho(pos)) * g)
        .sum()
}

fn stacked_channel(
    positions: &PositionSet,
    dirs: &[PathDirection],
    prv: &CVector,
    cfg: &SystemConfig,
) -> Result<CVector> {
    if positions.len() != cfg.n_antennas {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_antennas,
            found: positions.len(),
        });
    }
    if prv.len() != dirs.len() {
        return Err(Error::DimensionMismatch {
            expected: dirs.len(),
            found: prv.len(),
        });
    }
    let k = cfg.wavenumber();
    Ok(CVector::from_iterator(
        positions.len(),
        positions.iter().map(|p| antenna_gain(p, dirs, prv, k)),
    ))
}

/// Source-to-relay channel `h_1` for the reception placement.
pub fn source_relay_channel(
    rx: &PositionSet,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> Result<CVector> {
    stacked_channel(rx, &ch.rx_directions(), &ch.rx_prv, cfg)
}

/// Relay-to-destination channel `h_2` for the transmission placement.
pub fn relay_dest_channel(
    tx: &PositionSet,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> Result<CVector> {
    stacked_channel(tx, &ch.tx_directions(), &ch.tx_prv, cfg)
}

/// Draws all angles i.i.d. uniform on `[0, 2*pi)` (elevations included) and
/// path gains i.i.d. `CN(0, 1/L)` for each hop.
pub fn sample_channel(cfg: &SystemConfig, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut angles = |n: usize| -> Vec<f64> { (0..n).map(|_| TAU * rng.random::<f64>()).collect() };
    let rx_elevations = angles(cfg.n_rx_paths);
    let rx_azimuths = angles(cfg.n_rx_paths);
    let tx_elevations = angles(cfg.n_tx_paths);
    let tx_azimuths = angles(cfg.n_tx_paths);
    let mut gains = |n: usize| -> CVector {
        let sd = libm::sqrt(0.5 / n as f64);
        CVector::from_iterator(
            n,
            (0..n).map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(sd * re, sd * im)
            }),
        )
    };
    let rx_prv = gains(cfg.n_rx_paths);
    let tx_prv = gains(cfg.n_tx_paths);
    ChannelRealization {
        rx_elevations,
        rx_azimuths,
        tx_elevations,
        tx_azimuths,
        rx_prv,
        tx_prv,
    }
}

/// Seed of realization `index` under `master`. A pure function of both, so
/// realizations can be generated in any order or in parallel.
pub fn realization_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(master ^ mix(index))
}
