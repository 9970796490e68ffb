mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use vortexpacket::grid::mode_overlap;
use vortexpacket::modes::*;
use vortexpacket::units::UnitSystem;

use common::{gauss_legendre, golden_max};

fn units() -> UnitSystem {
    UnitSystem::default()
}

fn spec(l: i32, m: u32) -> ModeSpec {
    ModeSpec::new(l, m, 0, 1.0, 10.0, 1.0).unwrap()
}

fn sampled(l: i32, m: u32, n: usize, extent: f64) -> vortexpacket::grid::GridField {
    sample_mode(&spec(l, m), n, extent, 0.0, &units()).unwrap().field
}

#[test]
fn radial_norm_by_quadrature() {
    // 2 pi int |u|^2 r dr on [0, 12 w] with a composite GL rule
    let (x, w) = gauss_legendre(24);
    for (l, m) in [(0, 0), (1, 2), (-3, 1), (5, 0), (2, 3)] {
        let s = spec(l, m);
        let mut total = 0.0;
        let panels = 48;
        let h = 12.0 / panels as f64;
        for k in 0..panels {
            for (xi, wi) in x.iter().zip(&w) {
                let r = h * (k as f64 + 0.5 * (xi + 1.0));
                total += 0.5 * h * wi * r * eval_lg(&s, r, 0.3, 0.0, &units()).unwrap().norm_sqr();
            }
        }
        assert!((2.0 * PI * total - 1.0).abs() < 1e-12, "l={l} m={m}: {}", 2.0 * PI * total);
    }
}

#[test]
fn gram_matrix_is_identity() {
    let mut modes = Vec::new();
    for l in -3..=3 {
        for m in 0..=2 {
            modes.push(sampled(l, m, 256, 8.0));
        }
    }
    for (i, a) in modes.iter().enumerate() {
        for (j, b) in modes.iter().enumerate() {
            let o = mode_overlap(a, b).unwrap();
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((o - Complex64::new(expected, 0.0)).norm() < 1e-4, "({i}, {j}): {o}");
        }
    }
}

#[test]
fn oam_expectation_equals_l() {
    for l in -5..=5 {
        for m in [0, 1] {
            let g = sampled(l, m, 256, 9.0);
            let oam = oam_expectation(&g).unwrap();
            assert!((oam - l as f64).abs() < 1e-6, "l={l} m={m}: {oam}");
        }
    }
}

#[test]
fn rms_radius_follows_beam_width() {
    let s = spec(2, 1);
    let tau_r = s.rayleigh_time(&units());
    let g0 = sample_mode(&s, 256, 12.0, 0.0, &units()).unwrap().field;
    let r0 = g0.mean_square_radius().sqrt();
    for frac in [0.3, 0.7, 1.0] {
        let tau = frac * tau_r;
        let g = sample_mode(&s, 256, 12.0, tau, &units()).unwrap().field;
        let ratio = g.mean_square_radius().sqrt() / r0;
        let expected = (1.0 + frac * frac).sqrt();
        assert!((ratio / expected - 1.0).abs() < 1e-3, "tau/tau_R = {frac}: {ratio} vs {expected}");
    }
}

#[test]
fn radial_rings_count() {
    for m in 0..=2 {
        for l in [1, 2, -3] {
            assert_eq!(count_rings(&sampled(l, m, 256, 8.0)), m as usize + 1, "l={l} m={m}");
        }
    }
    assert_eq!(count_rings(&sampled(0, 0, 128, 6.0)), 1);
}

#[test]
fn vortex_core_and_phase_winding() {
    for l in [-3, -1, 1, 2, 4] {
        let s = spec(l, 1);
        assert_eq!(eval_lg(&s, 0.0, 0.0, 0.3, &units()).unwrap(), Complex64::new(0.0, 0.0));
        // accumulate the unwrapped phase around a circle
        let samples = 720;
        let mut winding = 0.0;
        let mut prev = eval_lg(&s, 0.4, 0.0, 0.2, &units()).unwrap().arg();
        for k in 1..=samples {
            let phi = 2.0 * PI * k as f64 / samples as f64;
            let cur = eval_lg(&s, 0.4, phi, 0.2, &units()).unwrap().arg();
            winding += common::wrap(cur - prev);
            prev = cur;
        }
        assert!((winding - 2.0 * PI * l as f64).abs() < 1e-10, "l={l}: {winding}");
    }
}

#[test]
fn ring_radius_matches_profile_maximum() {
    let s = spec(4, 0);
    let oracle = golden_max(|r| eval_lg(&s, r, 0.0, 0.0, &units()).unwrap().norm_sqr(), 0.1, 3.0, 1e-12);
    assert!((oracle - s.waist * 2f64.sqrt()).abs() < 1e-8);
    let measured = ring_peak_radius(&sampled(4, 0, 256, 6.0));
    assert!((measured / oracle - 1.0).abs() < 1e-2, "{measured} vs {oracle}");
}

#[test]
fn current_circulates_with_sign_of_l() {
    for l in [-2, 0, 1, 3] {
        let s = spec(l, 0);
        let g = sample_mode(&s, 128, 6.0, 0.0, &units()).unwrap().field;
        let j = probability_current(&s, &g, &units());
        let circ: f64 = g.nodes().enumerate().map(|(i, (x, y, _))| x * j.jy[i] - y * j.jx[i]).sum::<f64>()
            * g.cell_area();
        // sum (x j_y - y j_x) = hbar <L_z> / m for a unit-norm mode
        assert!((circ - l as f64).abs() < 1e-6, "l={l}: {circ}");
        let center = (g.grid_n() / 2) * g.grid_n() + g.grid_n() / 2;
        assert_eq!(j.approx_jx[center], 0.0);
        assert_eq!(j.approx_jy[center], 0.0);
    }
}

#[test]
fn approximate_current_matches_exact_at_waist() {
    // at tau = 0 the mode has flat phase fronts, so the azimuthal current is exact
    let s = spec(2, 0);
    let g = sample_mode(&s, 128, 6.0, 0.0, &units()).unwrap().field;
    let j = probability_current(&s, &g, &units());
    let peak = j.jy.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for i in 0..j.jx.len() {
        assert!((j.jx[i] - j.approx_jx[i]).abs() < 1e-8 * peak);
        assert!((j.jy[i] - j.approx_jy[i]).abs() < 1e-8 * peak);
    }
}

#[test]
fn truncated_grid_warns() {
    let s = sample_mode(&spec(3, 2), 64, 1.5, 0.0, &units()).unwrap();
    assert!(matches!(s.warning, Some(vortexpacket::Warning::NormDeficit { .. })));
}

#[test]
fn rejects_bad_grid_and_radius() {
    assert!(sample_mode(&spec(0, 0), 100, 5.0, 0.0, &units()).is_err());
    assert!(eval_lg(&spec(0, 0), -1.0, 0.0, 0.0, &units()).is_err());
}

#[test]
fn longitudinal_factor_is_normalized() {
    let (x, w) = gauss_legendre(64);
    for n in 0..4 {
        let s = ModeSpec::new(1, 0, n, 1.0, 2.5, 1.0).unwrap();
        let half = 10.0 * s.long_length;
        let total: f64 = x.iter().zip(&w).map(|(xi, wi)| half * wi * eval_hg(&s, half * xi).powi(2)).sum();
        assert!((total - 1.0).abs() < 1e-10, "n={n}: {total}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_norm_is_one(l in -4i32..=4, m in 0u32..=2) {
        let g = sampled(l, m, 128, 8.0);
        prop_assert!((g.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn density_is_azimuthally_symmetric(l in -4i32..=4, m in 0u32..=2, r in 0.05f64..3.0, phi in 0.0f64..6.28) {
        let s = spec(l, m);
        let a = eval_lg(&s, r, 0.0, 0.4, &units()).unwrap().norm_sqr();
        let b = eval_lg(&s, r, phi, 0.4, &units()).unwrap().norm_sqr();
        prop_assert!((a - b).abs() <= 1e-14 * a.max(1e-300));
    }
}
