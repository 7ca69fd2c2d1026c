mod common;

use common::{config, frv_entry, mag, rng};
use marelay_core::channel::{receive_frv, relay_dest_channel, source_relay_channel, transmit_frv};
use marelay_core::{min_pairwise_distance, sample_channel, CMatrix, CVector, Complex64, Position, PositionSet};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::TAU;

fn random_set(r: &mut impl Rng, n: usize) -> PositionSet {
    PositionSet::new((0..n).map(|_| Position::new(r.random_range(-1.5..1.5), r.random_range(-1.5..1.5))).collect())
}

#[test]
fn frv_matches_scalar_recomputation() {
    let cfg = config(1, 5);
    let mut r = rng(1);
    for seed in 0..50 {
        let ch = sample_channel(&cfg, seed);
        let p = Position::new(r.random_range(-1.5..1.5), r.random_range(-1.5..1.5));
        let rx = receive_frv(&p, &ch, &cfg);
        let tx = transmit_frv(&p, &ch, &cfg);
        for i in 0..5 {
            let e = frv_entry(p.x, p.y, ch.rx_elevations[i], ch.rx_azimuths[i]);
            assert!(mag(rx[i] - e) <= 1e-12);
            let e = frv_entry(p.x, p.y, ch.tx_elevations[i], ch.tx_azimuths[i]);
            assert!(mag(tx[i] - e) <= 1e-12);
        }
    }
}

#[test]
fn zero_elevation_transmit_frv_sees_only_y() {
    let cfg = config(1, 4);
    let mut ch = sample_channel(&cfg, 3);
    ch.tx_elevations = vec![0.0; 4];
    let a = transmit_frv(&Position::new(-1.2, 0.37), &ch, &cfg);
    let b = transmit_frv(&Position::new(0.9, 0.37), &ch, &cfg);
    let want = Complex64::new((TAU * 0.37).cos(), (TAU * 0.37).sin());
    for i in 0..4 {
        assert_eq!(a[i], b[i]);
        assert!(mag(a[i] - want) < 1e-12);
    }
}

#[test]
fn channels_match_matrix_form() {
    let mut r = rng(2);
    for n in [1, 3, 6] {
        let cfg = config(n, 5);
        for seed in 0..20 {
            let ch = sample_channel(&cfg, 100 + seed);
            let rx = random_set(&mut r, n);
            let tx = random_set(&mut r, n);
            let f1 = CMatrix::from_fn(5, n, |i, k| frv_entry(rx[k].x, rx[k].y, ch.rx_elevations[i], ch.rx_azimuths[i]));
            let g2 = CMatrix::from_fn(5, n, |i, k| frv_entry(tx[k].x, tx[k].y, ch.tx_elevations[i], ch.tx_azimuths[i]));
            let h1 = f1.adjoint() * &ch.rx_prv;
            let h2 = g2.adjoint() * &ch.tx_prv;
            let got1 = source_relay_channel(&rx, &ch, &cfg).unwrap();
            let got2 = relay_dest_channel(&tx, &ch, &cfg).unwrap();
            for k in 0..n {
                assert!(mag(got1[k] - h1[k]) < 1e-12);
                assert!(mag(got2[k] - h2[k]) < 1e-12);
            }
        }
    }
}

#[test]
fn single_unit_path_at_origin_gives_unit_gain() {
    let cfg = config(1, 1);
    let mut ch = sample_channel(&cfg, 4);
    common::unit_single_path(&mut ch);
    let p = PositionSet::new(vec![Position::new(0.0, 0.0)]);
    assert_eq!(source_relay_channel(&p, &ch, &cfg).unwrap()[0], Complex64::new(1.0, 0.0));
    assert_eq!(relay_dest_channel(&p, &ch, &cfg).unwrap()[0], Complex64::new(1.0, 0.0));
    ch.rx_prv = CVector::zeros(1);
    assert_eq!(source_relay_channel(&p, &ch, &cfg).unwrap()[0], Complex64::new(0.0, 0.0));
}

#[test]
fn min_distance_matches_brute_force() {
    let mut r = rng(5);
    for _ in 0..200 {
        let p = random_set(&mut r, 6);
        let mut best = f64::INFINITY;
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    best = best.min(((p[i].x - p[j].x).powi(2) + (p[i].y - p[j].y).powi(2)).sqrt());
                }
            }
        }
        assert!((min_pairwise_distance(&p) - best).abs() < 1e-15);
    }
    let pair = PositionSet::new(vec![Position::new(0.0, 0.0), Position::new(0.0, 0.5)]);
    assert_eq!(min_pairwise_distance(&pair), 0.5);
    assert_eq!(min_pairwise_distance(&PositionSet::new(vec![Position::new(1.0, 1.0)])), f64::INFINITY);
}

#[test]
fn path_gain_power_is_one_over_l() {
    let cfg = config(1, 5);
    let mut sum = 0.0;
    let mut count = 0;
    for seed in 0..20_000 {
        let ch = sample_channel(&cfg, seed);
        for z in ch.rx_prv.iter().chain(ch.tx_prv.iter()) {
            sum += z.norm_sqr();
            count += 1;
        }
    }
    let mean = sum / count as f64;
    assert!((mean - 0.2).abs() < 0.02 * 0.2, "mean {mean}");
}

#[test]
fn angles_pass_uniformity_chi_square() {
    // 20 bins, 19 degrees of freedom; 1% critical value.
    const CRITICAL: f64 = 36.191;
    let cfg = config(1, 5);
    let mut bins = [[0usize; 20]; 4];
    let draws = 20_000;
    for seed in 0..draws {
        let ch = sample_channel(&cfg, seed);
        for (b, angles) in bins.iter_mut().zip([&ch.rx_elevations, &ch.rx_azimuths, &ch.tx_elevations, &ch.tx_azimuths]) {
            for &a in angles {
                assert!((0.0..TAU).contains(&a));
                b[((a / TAU) * 20.0) as usize] += 1;
            }
        }
    }
    let expected = (draws * 5) as f64 / 20.0;
    for b in bins {
        let chi2: f64 = b.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < CRITICAL, "chi2 {chi2}");
    }
}

#[test]
fn realizations_are_seed_deterministic_and_distinct() {
    let cfg = config(4, 5);
    assert_eq!(sample_channel(&cfg, 42), sample_channel(&cfg, 42));
    assert_ne!(sample_channel(&cfg, 42).fingerprint(), sample_channel(&cfg, 43).fingerprint());
}

fn coord() -> impl Strategy<Value = f64> {
    -5.0..5.0f64
}

proptest! {
    #[test]
    fn frv_entries_have_unit_modulus(seed in any::<u64>(), x in coord(), y in coord()) {
        let cfg = config(1, 5);
        let ch = sample_channel(&cfg, seed);
        let p = Position::new(x, y);
        for z in receive_frv(&p, &ch, &cfg).iter().chain(transmit_frv(&p, &ch, &cfg).iter()) {
            prop_assert!((mag(*z) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frv_at_origin_is_all_ones(seed in any::<u64>()) {
        let cfg = config(1, 5);
        let ch = sample_channel(&cfg, seed);
        let o = Position::new(0.0, 0.0);
        for z in receive_frv(&o, &ch, &cfg).iter().chain(transmit_frv(&o, &ch, &cfg).iter()) {
            prop_assert_eq!(*z, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn frv_phase_is_linear(seed in any::<u64>(), x in coord(), y in coord(), dx in coord(), dy in coord()) {
        let cfg = config(1, 5);
        let ch = sample_channel(&cfg, seed);
        let p = Position::new(x, y);
        let d = Position::new(dx, dy);
        let joint = receive_frv(&(p + d), &ch, &cfg);
        let split = receive_frv(&p, &ch, &cfg).component_mul(&receive_frv(&d, &ch, &cfg));
        for i in 0..5 {
            prop_assert!(mag(joint[i] - split[i]) < 1e-12);
        }
    }

    #[test]
    fn channel_gain_bounded_by_path_sum(seed in any::<u64>(), x in coord(), y in coord()) {
        let cfg = config(2, 5);
        let ch = sample_channel(&cfg, seed);
        let p = PositionSet::new(vec![Position::new(x, y), Position::new(-y, x)]);
        let l1 = |v: &CVector| v.iter().map(|z| mag(*z)).sum::<f64>();
        for z in source_relay_channel(&p, &ch, &cfg).unwrap().iter() {
            prop_assert!(mag(*z) <= l1(&ch.rx_prv) + 1e-12);
        }
        for z in relay_dest_channel(&p, &ch, &cfg).unwrap().iter() {
            prop_assert!(mag(*z) <= l1(&ch.tx_prv) + 1e-12);
        }
    }
}
