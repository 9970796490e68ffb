//! Canned experiments: transverse densities and currents, the Hall fan in a
//! uniform electric field, the magnetic drift table, OAM precession checks,
//! and Berry phases of latitude loops.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Vector3;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::berry::{berry_phase_loop, MomentumPath, GAUGE_LABEL};
use crate::config::RunConfig;
use crate::dynamics::{IntegratorConfig, OamModel, PacketDynamics, PacketState, Trajectory};
use crate::error::{Error, Result, Warning};
use crate::fields::FieldConfig;
use crate::grid::GridField;
use crate::modes::{
    count_rings, oam_expectation, probability_current, ring_peak_radius, sample_mode, CurrentField, ModeSpec,
};
use crate::output::{fmt_f64, grid_csv, trajectory_csv, write_text};
use crate::svg::{heatmap, line_chart, Series};
use crate::units::UnitSystem;

pub const THREADS_ENV: &str = "VORTEXPACKET_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    Fig1Density,
    Fig2HallFan,
    MagneticDrift,
    HelicityWatch,
    BerryLoop,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Fig1Density,
        ScenarioKind::Fig2HallFan,
        ScenarioKind::MagneticDrift,
        ScenarioKind::HelicityWatch,
        ScenarioKind::BerryLoop,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Fig1Density => "fig1_density",
            ScenarioKind::Fig2HallFan => "fig2_hall_fan",
            ScenarioKind::MagneticDrift => "magnetic_drift",
            ScenarioKind::HelicityWatch => "helicity_watch",
            ScenarioKind::BerryLoop => "berry_loop",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ScenarioKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = ScenarioKind::ALL.iter().map(|k| k.name()).collect();
            format!("unknown scenario `{s}` (expected one of {})", names.join(", "))
        })
    }
}

/// Worker pool sized by `VORTEXPACKET_THREADS`, or machine parallelism.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::invalid("VORTEXPACKET_THREADS", format!("`{v}` is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::invalid("VORTEXPACKET_THREADS", e.to_string()))
}

pub struct Fig1Entry {
    pub spec: ModeSpec,
    pub field: GridField,
    pub current: CurrentField,
    pub rings: usize,
    pub ring_radius: f64,
    pub oam: f64,
    /// `sum (x j_y - y j_x) dA`; positive for counterclockwise flow.
    pub circulation: f64,
    pub warning: Option<Warning>,
}

/// Sample each `l` on an `extent_waists * w0` grid and attach its current.
pub fn run_fig1(
    l_values: &[i32],
    m_radial: u32,
    grid_n: usize,
    extent_waists: f64,
    p_central: f64,
    units: &UnitSystem,
) -> Result<Vec<Fig1Entry>> {
    l_values
        .par_iter()
        .map(|&l| {
            let spec = ModeSpec::with_defaults(l, m_radial, 0, p_central, units)?;
            let sampled = sample_mode(&spec, grid_n, extent_waists * spec.waist, 0.0, units)?;
            let field = sampled.field;
            let current = probability_current(&spec, &field, units);
            let circulation = field
                .nodes()
                .enumerate()
                .map(|(i, (x, y, _))| x * current.jy[i] - y * current.jx[i])
                .sum::<f64>()
                * field.cell_area();
            Ok(Fig1Entry {
                rings: count_rings(&field),
                ring_radius: ring_peak_radius(&field),
                oam: oam_expectation(&field)?,
                circulation,
                current,
                warning: sampled.warning,
                field,
                spec,
            })
        })
        .collect()
}

pub struct HallShift {
    pub l: i32,
    /// `x_l(t_final) - x_0(t_final)`.
    pub shift: f64,
    /// Exact finite-time value `hbar l a t / (p0 sqrt(p0^2 + a^2 t^2))`, `a = e E0`.
    pub analytic: f64,
    /// `t -> infinity` limit, `sign(e E0) hbar l / p0`.
    pub asymptote: f64,
}

pub struct Fig2Result {
    pub trajectories: Vec<(i32, Trajectory)>,
    pub shifts: Vec<HallShift>,
}

/// Packets start at the origin with `p = p0 z` in `E = e0 y`.
pub fn run_fig2(
    l_values: &[i32],
    e0: f64,
    p0: f64,
    t_final: f64,
    units: &UnitSystem,
    icfg: &IntegratorConfig,
) -> Result<Fig2Result> {
    if !(p0 > 0.0) {
        return Err(Error::invalid("p0", "must be positive"));
    }
    let field = FieldConfig::uniform_electric(Vector3::new(0.0, e0, 0.0));
    let icfg = IntegratorConfig { t_final, oam_model: OamModel::Slaved, ..*icfg };
    let mut ls: Vec<i32> = l_values.to_vec();
    if !ls.contains(&0) {
        ls.push(0);
    }
    let runs: Vec<(i32, Trajectory)> = ls
        .par_iter()
        .map(|&l| {
            let dynamics = PacketDynamics::new(*units, field.clone(), l);
            let s0 = PacketState::new(Vector3::zeros(), Vector3::new(0.0, 0.0, p0), l);
            Ok((l, dynamics.integrate(&s0, &icfg)?))
        })
        .collect::<Result<_>>()?;
    let x_final = |traj: &Trajectory| traj.last().map_or(0.0, |p| p.state.r.x);
    let reference = runs.iter().find(|(l, _)| *l == 0).map(|(_, t)| x_final(t)).unwrap_or(0.0);
    let a = units.charge * e0;
    let shifts = l_values
        .iter()
        .map(|&l| {
            let traj = &runs.iter().find(|(k, _)| *k == l).expect("run present").1;
            let t = traj.last().map_or(0.0, |p| p.state.t);
            let hl = units.hbar * l as f64;
            HallShift {
                l,
                shift: x_final(traj) - reference,
                analytic: hl * a * t / (p0 * (p0 * p0 + a * a * t * t).sqrt()),
                asymptote: a.signum() * hl / p0,
            }
        })
        .collect();
    let trajectories = runs.into_iter().filter(|(l, _)| l_values.contains(l)).collect();
    Ok(Fig2Result { trajectories, shifts })
}

pub struct DriftRow {
    pub g: f64,
    pub l: i32,
    /// Mean velocity along `B` over the run.
    pub measured: f64,
    /// `e hbar l (1 - g/2) B0 / (m p0)`.
    pub analytic: f64,
    pub energy_drift: f64,
}

/// `B = b0 z`, `p = p0 x`, integrated over `periods` cyclotron periods.
pub fn run_magnetic_drift(
    g_values: &[f64],
    l_values: &[i32],
    b0: f64,
    p0: f64,
    periods: f64,
    units: &UnitSystem,
    icfg: &IntegratorConfig,
) -> Result<Vec<DriftRow>> {
    if !(b0 > 0.0) {
        return Err(Error::invalid("b0", "must be positive"));
    }
    let t_final = periods * 2.0 * PI / units.cyclotron_frequency(b0);
    let icfg = IntegratorConfig { t_final, oam_model: OamModel::Slaved, ..*icfg };
    let jobs: Vec<(f64, i32)> = g_values.iter().flat_map(|&g| l_values.iter().map(move |&l| (g, l))).collect();
    jobs.par_iter()
        .map(|&(g, l)| {
            let field = FieldConfig::uniform_magnetic(Vector3::new(0.0, 0.0, b0)).with_g_factor(g);
            let dynamics = PacketDynamics::new(*units, field, l);
            let s0 = PacketState::new(Vector3::zeros(), Vector3::new(p0, 0.0, 0.0), l);
            let traj = dynamics.integrate(&s0, &icfg)?;
            let first = traj.points.first().expect("initial point");
            let last = traj.last().expect("final point");
            let elapsed = last.state.t - first.state.t;
            Ok(DriftRow {
                g,
                l,
                measured: (last.state.r.z - first.state.r.z) / elapsed,
                analytic: drift_velocity(units, g, l, b0, p0),
                energy_drift: energy_drift(&traj),
            })
        })
        .collect()
}

/// `e hbar l (1 - g/2) B / (m p)` for `p` perpendicular to `B`.
pub fn drift_velocity(units: &UnitSystem, g: f64, l: i32, b: f64, p: f64) -> f64 {
    units.charge * units.hbar * l as f64 * (1.0 - 0.5 * g) * b / (units.mass * p)
}

/// Largest `|H(t) - H(0)| / |H(0)|` along a trajectory.
pub fn energy_drift(traj: &Trajectory) -> f64 {
    let Some(first) = traj.points.first() else { return 0.0 };
    let h0 = first.energy;
    traj.points.iter().map(|p| (p.energy - h0).abs()).fold(0.0, f64::max) / h0.abs().max(f64::MIN_POSITIVE)
}

pub struct HelicityCase {
    pub label: String,
    pub g: f64,
    pub field: FieldConfig,
    pub trajectory: Trajectory,
}

/// Precessing-OAM runs: `g = 2` in `B`, `g = 1` in `B`, and `g = 1` in a
/// pure electric field, each with `p` tilted away from `B`.
pub fn run_helicity_watch(
    l: i32,
    b0: f64,
    e0: f64,
    p0: f64,
    periods: f64,
    units: &UnitSystem,
    icfg: &IntegratorConfig,
) -> Result<Vec<HelicityCase>> {
    let t_final = periods * 2.0 * PI / units.cyclotron_frequency(b0);
    let icfg = IntegratorConfig { t_final, oam_model: OamModel::Precessing, ..*icfg };
    let b = Vector3::new(0.0, 0.0, b0);
    let cases = vec![
        ("g2_magnetic", 2.0, FieldConfig::uniform_magnetic(b)),
        ("g1_magnetic", 1.0, FieldConfig::uniform_magnetic(b)),
        ("g1_electric", 1.0, FieldConfig::uniform_electric(Vector3::new(0.0, e0, 0.0))),
    ];
    let p_init = p0 * Vector3::new(1.0, 0.0, 0.5).normalize();
    cases
        .into_par_iter()
        .map(|(label, g, field)| {
            let field = field.with_g_factor(g);
            let dynamics = PacketDynamics::new(*units, field.clone(), l);
            let s0 = PacketState::new(Vector3::zeros(), p_init, l);
            let trajectory = dynamics.integrate(&s0, &icfg)?;
            Ok(HelicityCase { label: label.to_string(), g, field, trajectory })
        })
        .collect()
}

pub struct LoopRow {
    pub l: i32,
    pub colatitude: f64,
    pub solid_angle: f64,
    pub phase: f64,
    pub line_integral_phase: Option<f64>,
    /// `-l * 2 pi (1 - cos colatitude)` for the smooth latitude circle.
    pub circle_phase: f64,
}

pub fn run_berry_loops(l_values: &[i32], colatitudes: &[f64], samples: usize, p: f64) -> Result<Vec<LoopRow>> {
    let mut rows = Vec::new();
    for &theta in colatitudes {
        let path = MomentumPath::circle(p, theta, samples)?;
        for &l in l_values {
            let lp = berry_phase_loop(&path, l)?;
            rows.push(LoopRow {
                l,
                colatitude: theta,
                solid_angle: lp.solid_angle.unwrap_or(f64::NAN),
                phase: lp.phase,
                line_integral_phase: lp.line_integral_phase,
                circle_phase: -(l as f64) * 2.0 * PI * (1.0 - theta.cos()),
            });
        }
    }
    Ok(rows)
}

/// Files written by a scenario, relative to its output directory.
#[derive(Debug, Default)]
pub struct ScenarioReport {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, text: &str) -> Result<()> {
        write_text(&self.dir.join(name), text)?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }
}

fn l_tag(l: i32) -> String {
    if l < 0 {
        format!("m{}", -l)
    } else {
        format!("p{l}")
    }
}

fn csv_line(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}

/// Run `kind` with `cfg` and write its outputs and `manifest.txt` into `out`.
pub fn run_scenario(kind: ScenarioKind, cfg: &RunConfig, out: &Path) -> Result<ScenarioReport> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let pool = thread_pool()?;
    let mut w = Writer { dir: out, files: Vec::new() };
    let sc = &cfg.scenario;
    let units = cfg.units;
    let icfg = cfg.integrator;
    let mut summary = String::new();
    let mut field_gauges: Vec<String> = Vec::new();

    match kind {
        ScenarioKind::Fig1Density => {
            let entries = pool.install(|| run_fig1(&sc.l_values, sc.m_radial, sc.grid_n, sc.extent, sc.p0, &units))?;
            let mut table = csv_line(&["l", "m", "rings", "ring_radius", "oam", "circulation"].map(String::from));
            for e in &entries {
                let name = format!("fig1_l{}.csv", l_tag(e.spec.l));
                w.put(&name, &grid_csv(&e.field, Some(&e.current)))?;
                let rho: Vec<f64> = e.field.values().iter().map(|u| u.norm_sqr()).collect();
                let svg = heatmap(&format!("density, l = {}", e.spec.l), &rho, e.field.grid_n(), e.field.extent(), 64);
                w.put(&format!("fig1_l{}.svg", l_tag(e.spec.l)), &svg)?;
                table.push_str(&csv_line(&[
                    e.spec.l.to_string(),
                    e.spec.m_radial.to_string(),
                    e.rings.to_string(),
                    fmt_f64(e.ring_radius),
                    fmt_f64(e.oam),
                    fmt_f64(e.circulation),
                ]));
                if let Some(warn) = &e.warning {
                    let _ = writeln!(summary, "l = {}: {warn}", e.spec.l);
                }
            }
            w.put("fig1_summary.csv", &table)?;
            summary.push_str(&table);
        }
        ScenarioKind::Fig2HallFan => {
            let res = pool.install(|| run_fig2(&sc.l_values, sc.e0, sc.p0, sc.t_final, &units, &icfg))?;
            let mut series = Vec::new();
            for (l, traj) in &res.trajectories {
                w.put(&format!("fig2_l{}.csv", l_tag(*l)), &trajectory_csv(traj))?;
                series.push(Series {
                    label: format!("l = {l}"),
                    points: traj.points.iter().map(|p| (p.state.r.z, p.state.r.x)).collect(),
                });
                field_gauges.push(traj.field_gauge.clone());
            }
            w.put("fig2_fan.svg", &line_chart("Hall fan", "z", "x", &series))?;
            let mut table = csv_line(&["l", "shift", "analytic", "asymptote"].map(String::from));
            for s in &res.shifts {
                table.push_str(&csv_line(&[s.l.to_string(), fmt_f64(s.shift), fmt_f64(s.analytic), fmt_f64(s.asymptote)]));
            }
            w.put("fig2_shifts.csv", &table)?;
            summary.push_str(&table);
        }
        ScenarioKind::MagneticDrift => {
            let rows = pool.install(|| {
                run_magnetic_drift(&sc.g_values, &sc.l_values, sc.b0, sc.p0, sc.periods, &units, &icfg)
            })?;
            let mut table = csv_line(&["g", "l", "measured", "analytic", "energy_drift"].map(String::from));
            for r in &rows {
                table.push_str(&csv_line(&[
                    fmt_f64(r.g),
                    r.l.to_string(),
                    fmt_f64(r.measured),
                    fmt_f64(r.analytic),
                    fmt_f64(r.energy_drift),
                ]));
            }
            w.put("drift_table.csv", &table)?;
            let series: Vec<Series> = sc
                .l_values
                .iter()
                .map(|&l| Series {
                    label: format!("l = {l}"),
                    points: rows.iter().filter(|r| r.l == l).map(|r| (r.g, r.measured)).collect(),
                })
                .collect();
            w.put("drift_table.svg", &line_chart("Drift along B", "g", "v_drift", &series))?;
            field_gauges.push("symmetric".into());
            summary.push_str(&table);
        }
        ScenarioKind::HelicityWatch => {
            let l = cfg.packet.l;
            let cases = pool.install(|| run_helicity_watch(l, sc.b0, sc.e0, sc.p0, sc.periods, &units, &icfg))?;
            let mut table =
                csv_line(&["case", "g", "max_helicity_drift", "max_misalignment", "warning_t"].map(String::from));
            let mut series = Vec::new();
            for c in &cases {
                w.put(&format!("helicity_{}.csv", c.label), &trajectory_csv(&c.trajectory))?;
                let warn_t = c.trajectory.validity_warning().map_or("none".to_string(), |(t, _)| fmt_f64(t));
                table.push_str(&csv_line(&[
                    c.label.clone(),
                    fmt_f64(c.g),
                    fmt_f64(c.trajectory.max_helicity_drift),
                    fmt_f64(c.trajectory.max_misalignment),
                    warn_t,
                ]));
                series.push(Series {
                    label: c.label.clone(),
                    points: c.trajectory.points.iter().map(|p| (p.state.t, p.helicity)).collect(),
                });
                field_gauges.push(c.field.gauge_label().to_string());
            }
            w.put("helicity_summary.csv", &table)?;
            w.put("helicity.svg", &line_chart("Helicity", "t", "l . p_hat", &series))?;
            summary.push_str(&table);
        }
        ScenarioKind::BerryLoop => {
            let rows = run_berry_loops(&sc.l_values, &sc.colatitudes, sc.loop_samples, sc.p0)?;
            let mut table =
                csv_line(&["l", "colatitude", "solid_angle", "phase", "line_integral_phase", "circle_phase"].map(String::from));
            for r in &rows {
                table.push_str(&csv_line(&[
                    r.l.to_string(),
                    fmt_f64(r.colatitude),
                    fmt_f64(r.solid_angle),
                    fmt_f64(r.phase),
                    r.line_integral_phase.map_or("none".to_string(), fmt_f64),
                    fmt_f64(r.circle_phase),
                ]));
            }
            w.put("berry_loops.csv", &table)?;
            let series: Vec<Series> = sc
                .l_values
                .iter()
                .map(|&l| Series {
                    label: format!("l = {l}"),
                    points: rows.iter().filter(|r| r.l == l).map(|r| (r.colatitude, r.phase)).collect(),
                })
                .collect();
            w.put("berry_loops.svg", &line_chart("Loop Berry phase", "colatitude", "phase", &series))?;
            summary.push_str(&table);
        }
    }

    field_gauges.sort();
    field_gauges.dedup();
    let manifest = manifest_text(kind, cfg, &field_gauges, &w.files);
    w.put("manifest.txt", &manifest)?;
    Ok(ScenarioReport { files: w.files, summary })
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.serialize().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn manifest_text(kind: ScenarioKind, cfg: &RunConfig, field_gauges: &[String], files: &[PathBuf]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tool = {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "scenario = {}", kind.name());
    let _ = writeln!(s, "config_sha256 = {}", config_hash(cfg));
    let gauges = if field_gauges.is_empty() { "none".to_string() } else { field_gauges.join(", ") };
    let _ = writeln!(s, "field_gauge = {gauges}");
    let _ = writeln!(s, "berry_gauge = {GAUGE_LABEL}");
    for f in files {
        let _ = writeln!(s, "file = {}", f.display());
    }
    s
}
