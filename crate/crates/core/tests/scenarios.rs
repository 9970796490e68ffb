use std::path::Path;

use vortexpacket::config::RunConfig;
use vortexpacket::dynamics::{IntegratorConfig, Method};
use vortexpacket::modes::ModeSpec;
use vortexpacket::scenarios::*;
use vortexpacket::units::UnitSystem;

fn dopri() -> IntegratorConfig {
    IntegratorConfig { method: Method::DormandPrince, ..IntegratorConfig::default() }
}

#[test]
fn hall_fan_is_mirror_symmetric_and_linear_in_l() {
    let units = UnitSystem::default();
    let res = run_fig2(&[-2, -1, 1, 2], 0.02, 1.0, 5000.0, &units, &dopri()).unwrap();
    let shift = |l: i32| res.shifts.iter().find(|s| s.l == l).unwrap().shift;
    for l in [1, 2] {
        assert!((shift(l) + shift(-l)).abs() < 1e-8, "l={l}");
    }
    assert!((shift(2) / shift(1) - 2.0).abs() < 1e-3);
    for s in &res.shifts {
        assert!((s.shift - s.analytic).abs() < 1e-8, "l={}: {} vs {}", s.l, s.shift, s.analytic);
        // e = -1 and E0 > 0 push positive l toward -x
        assert_eq!(s.asymptote, -(s.l as f64));
    }
    // the l = 0 reference is not reported unless asked for
    assert!(res.trajectories.iter().all(|(l, _)| *l != 0));
}

#[test]
fn density_maps_show_rings_and_circulation() {
    let units = UnitSystem::default();
    let entries = run_fig1(&[0, 1, 2, 3, 4], 0, 256, 8.0, 1.0, &units).unwrap();
    for e in &entries {
        let l = e.spec.l;
        assert_eq!(e.rings, 1, "l={l}");
        assert!((e.oam - l as f64).abs() < 1e-6);
        if l == 0 {
            assert!(e.circulation.abs() < 1e-12);
            assert!(e.current.jx.iter().chain(&e.current.jy).all(|j| j.abs() < 1e-12));
        } else {
            assert_eq!(e.circulation.signum(), (l as f64).signum());
        }
    }
    let four = entries.iter().find(|e| e.spec.l == 4).unwrap();
    let expected = ModeSpec::with_defaults(4, 0, 0, 1.0, &units).unwrap().waist * 2f64.sqrt();
    assert!((four.ring_radius / expected - 1.0).abs() < 1e-2);
}

#[test]
fn drift_is_affine_in_g() {
    let units = UnitSystem::default();
    let rows = run_magnetic_drift(&[0.0, 1.0, 2.0, 3.0], &[1, 2], 1.0, 1.0, 2.0, &units, &dopri()).unwrap();
    let v = |g: f64, l: i32| rows.iter().find(|r| r.g == g && r.l == l).unwrap().measured;
    for l in [1, 2] {
        // equal steps in g give equal steps in velocity
        assert!(((v(1.0, l) - v(0.0, l)) - (v(3.0, l) - v(2.0, l))).abs() < 1e-8);
        assert!(v(2.0, l).abs() < 1e-10);
    }
    // (1 - g/2) l is 1 for both
    assert!((v(0.0, 1) - v(1.0, 2)).abs() < 1e-8);
    assert!(rows.iter().all(|r| r.energy_drift < 1e-8));
}

#[test]
fn berry_loop_table_scales_with_l() {
    let rows = run_berry_loops(&[1, 3], &[0.5, 1.2], 256, 1.0).unwrap();
    for th in [0.5, 1.2] {
        let ph = |l: i32| rows.iter().find(|r| r.l == l && r.colatitude == th).unwrap().phase;
        assert!((ph(3) - 3.0 * ph(1)).abs() < 1e-12);
    }
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.scenario.l_values = vec![-1, 0, 2];
    cfg.scenario.grid_n = 64;
    cfg.scenario.t_final = 50.0;
    cfg.scenario.periods = 2.0;
    cfg.scenario.g_values = vec![0.0, 2.0];
    cfg.packet.l = 1;
    cfg
}

fn read_all(dir: &Path, files: &[std::path::PathBuf]) -> Vec<Vec<u8>> {
    files.iter().map(|f| std::fs::read(dir.join(f)).unwrap()).collect()
}

#[test]
fn outputs_are_reproducible() {
    let cfg = small_config();
    for kind in ScenarioKind::ALL {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run_scenario(kind, &cfg, a.path()).unwrap();
        let rb = run_scenario(kind, &cfg, b.path()).unwrap();
        assert_eq!(ra.files, rb.files);
        assert!(ra.files.iter().any(|f| f == Path::new("manifest.txt")));
        assert_eq!(read_all(a.path(), &ra.files), read_all(b.path(), &rb.files), "{}", kind.name());
    }
}

#[test]
fn manifest_records_provenance() {
    let cfg = small_config();
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(ScenarioKind::Fig2HallFan, &cfg, dir.path()).unwrap();
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("scenario = fig2_hall_fan"));
    assert!(manifest.contains(&format!("config_sha256 = {}", config_hash(&cfg))));
    assert!(manifest.contains("berry_gauge = "));
    let csvs = report.files.iter().filter(|f| f.extension().is_some_and(|e| e == "csv")).count();
    assert!(csvs >= cfg.scenario.l_values.len());
}

#[test]
fn config_hash_tracks_content() {
    let a = small_config();
    let mut b = small_config();
    assert_eq!(config_hash(&a), config_hash(&b));
    b.scenario.e0 = 0.03;
    assert_ne!(config_hash(&a), config_hash(&b));
}
