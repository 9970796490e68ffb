//! Command-line front end. Exit codes: 0 success, 1 domain error, 2 usage error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::Vector3;

use crate::berry::{berry_phase_loop, MomentumPath};
use crate::config::{parse_config, FieldType, RunConfig};
use crate::error::{Error, Result};
use crate::modes::{count_rings, oam_expectation, probability_current, sample_mode, ModeSpec};
use crate::output::{
    aligned_csv, fmt_f64, parse_numeric_csv, read_grid_binary, write_grid_binary, write_grid_csv,
    write_trajectory_csv,
};
use crate::paraxial::{measure_centroid_and_oam, propagate};
use crate::scenarios::{run_scenario, ScenarioKind};
use crate::selftest;
use crate::symplectic::{build_frame, COORDINATE_NAMES};

#[derive(Parser, Debug)]
#[command(name = "vortexpacket", version, about = "Semiclassical dynamics of electron vortex wave packets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a transverse LG mode and report its norm, OAM and ring count.
    Modes {
        #[arg(long, allow_negative_numbers = true)]
        l: i32,
        #[arg(long, default_value_t = 0)]
        m: u32,
        #[arg(long, default_value_t = 1.0)]
        p0: f64,
        #[arg(long, default_value_t = 256)]
        grid_n: usize,
        /// Grid half-width in waists.
        #[arg(long, default_value_t = 8.0)]
        extent: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        tau: f64,
        /// Grid CSV with density and current.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// VPGRID01 binary dump.
        #[arg(long)]
        binary: Option<PathBuf>,
    },
    /// Propagate a VPGRID01 grid with the free paraxial equation.
    Propagate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        dtau: f64,
        #[arg(long, default_value_t = 1)]
        steps: usize,
    },
    /// Berry phase of a momentum path given as CSV rows `p_x,p_y,p_z`.
    /// The path is treated as closed when its last point repeats the first.
    Berry {
        #[arg(long)]
        path: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        l: i32,
    },
    /// Integrate the packet equations of motion and write the trajectory CSV.
    Trace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the Poisson bracket table and D at one phase-space point.
    Symplectic {
        /// Base configuration; packet.r0, packet.p0, packet.l and field.* are used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        r: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        p: Option<Vec<f64>>,
        #[arg(long, allow_negative_numbers = true)]
        l: Option<i32>,
        /// free, uniform_e or uniform_b
        #[arg(long)]
        field: Option<String>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        vector: Option<Vec<f64>>,
    },
    /// Run a canned scenario and write CSV, SVG and a manifest.
    Scenario {
        kind: ScenarioKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_config(&text)?)
}

fn vec3(name: &'static str, v: &[f64]) -> Result<[f64; 3]> {
    <[f64; 3]>::try_from(v).map_err(|_| Error::invalid(name, format!("expected 3 components, got {}", v.len())))
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Modes { l, m, p0, grid_n, extent, tau, csv, binary } => {
            let units = crate::units::UnitSystem::default();
            let spec = ModeSpec::with_defaults(l, m, 0, p0, &units)?;
            let sampled = sample_mode(&spec, grid_n, extent * spec.waist, tau, &units)?;
            if let Some(w) = &sampled.warning {
                eprintln!("warning: {w}");
            }
            let g = &sampled.field;
            println!("waist = {}", fmt_f64(spec.waist));
            println!("norm = {}", fmt_f64(g.norm()));
            println!("oam = {}", fmt_f64(oam_expectation(g)?));
            println!("rings = {}", count_rings(g));
            if let Some(path) = csv {
                write_grid_csv(g, Some(&probability_current(&spec, g, &units)), &path)?;
            }
            if let Some(path) = binary {
                write_grid_binary(g, &path)?;
            }
            Ok(0)
        }
        Command::Propagate { input, output, dtau, steps } => {
            let grid = read_grid_binary(&input)?;
            let res = propagate(&grid, dtau, steps, &crate::units::UnitSystem::default())?;
            if let Some(w) = &res.warning {
                eprintln!("warning: {w}");
            }
            write_grid_binary(&res.field, &output)?;
            let (c, oam) = measure_centroid_and_oam(&res.field)?;
            println!("tau = {}", fmt_f64(res.field.tau));
            println!("norm = {}", fmt_f64(res.field.norm()));
            println!("centroid = {}, {}", fmt_f64(c[0]), fmt_f64(c[1]));
            println!("oam = {}", fmt_f64(oam));
            Ok(0)
        }
        Command::Berry { path, l } => {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let body = if text.trim_start().starts_with(|c: char| c.is_ascii_alphabetic()) {
                text.clone()
            } else {
                format!("p_x,p_y,p_z\n{text}")
            };
            let rows = parse_numeric_csv(&body, &["p_x", "p_y", "p_z"], &path)?;
            let points: Vec<Vector3<f64>> = rows.iter().map(|r| Vector3::new(r[0], r[1], r[2])).collect();
            let closed = points.len() > 2 && points.first() == points.last();
            let lp = berry_phase_loop(&MomentumPath::new(points, closed)?, l)?;
            for w in &lp.warnings {
                eprintln!("warning: {w}");
            }
            let opt = |v: Option<f64>| v.map_or("none".to_string(), fmt_f64);
            println!("closed = {closed}");
            println!("phase = {}", fmt_f64(lp.phase));
            println!("solid_angle = {}", opt(lp.solid_angle));
            println!("solid_angle_phase = {}", opt(lp.solid_angle.map(|o| -(l as f64) * o)));
            println!("line_integral_phase = {}", opt(lp.line_integral_phase));
            println!("gauge = {}", lp.gauge);
            Ok(0)
        }
        Command::Trace { config, out } => {
            let cfg = load_config(&config)?;
            let dynamics = cfg.dynamics();
            match dynamics.integrate(&cfg.initial_state(), &cfg.integrator) {
                Ok(traj) => {
                    for w in &traj.warnings {
                        eprintln!("warning: {w}");
                    }
                    write_trajectory_csv(&traj, &out)?;
                    println!("points = {}", traj.points.len());
                    println!("field_gauge = {}", traj.field_gauge);
                    Ok(0)
                }
                Err(failure) => {
                    write_trajectory_csv(&failure.partial, &out)?;
                    Err(failure.into())
                }
            }
        }
        Command::Symplectic { config, r, p, l, field, vector } => {
            let mut cfg = match config {
                Some(path) => load_config(&path)?,
                None => RunConfig::default(),
            };
            if let Some(r) = r {
                cfg.packet.r0 = vec3("r", &r)?;
            }
            if let Some(p) = p {
                cfg.packet.p0 = vec3("p", &p)?;
            }
            if let Some(l) = l {
                cfg.packet.l = l;
            }
            if let Some(kind) = field {
                cfg.field.kind = match kind.as_str() {
                    "free" => FieldType::Free,
                    "uniform_e" => FieldType::UniformE,
                    "uniform_b" => FieldType::UniformB,
                    other => return Err(Error::invalid("field", format!("unknown field type `{other}`"))),
                };
            }
            if let Some(v) = vector {
                cfg.field.vector = vec3("vector", &v)?;
            }
            let frame = build_frame(
                &Vector3::from(cfg.packet.r0),
                &Vector3::from(cfg.packet.p0),
                cfg.packet.l,
                &cfg.field_config(),
                &cfg.units,
            )?;
            for w in &frame.warnings {
                eprintln!("warning: {w}");
            }
            let mut header = vec!["bracket"];
            header.extend(COORDINATE_NAMES);
            let rows: Vec<Vec<String>> = (0..6)
                .map(|i| {
                    let mut row = vec![COORDINATE_NAMES[i].to_string()];
                    row.extend((0..6).map(|j| fmt_f64(frame.brackets[(i, j)])));
                    row
                })
                .collect();
            print!("{}", aligned_csv(&header, &rows));
            let summary = vec![
                vec!["D".to_string(), fmt_f64(frame.d)],
                vec!["sqrt_det".to_string(), fmt_f64(frame.sqrt_det)],
                vec!["condition".to_string(), fmt_f64(frame.condition)],
            ];
            print!("{}", aligned_csv(&["quantity", "value"], &summary));
            Ok(0)
        }
        Command::Scenario { kind, config, out } => {
            let cfg = match config {
                Some(path) => load_config(&path)?,
                None => RunConfig::default(),
            };
            let report = run_scenario(kind, &cfg, &out)?;
            print!("{}", report.summary);
            for f in &report.files {
                println!("wrote {}", out.join(f).display());
            }
            Ok(0)
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            println!("{} of {} checks passed", checks.len() - failed, checks.len());
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}
