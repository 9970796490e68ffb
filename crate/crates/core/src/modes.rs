//! Laguerre-Gaussian x Hermite-Gaussian wave-packet modes.
//!
//! The transverse factor solves the free parabolic equation
//! `i hbar du/dtau + (hbar^2/2m) lap_perp u = 0` in the comoving frame:
//!
//! ```text
//! u = C/w (r sqrt2/w)^|l| L_m^|l|(2r^2/w^2) exp(-r^2/w^2)
//!       * exp(i l phi) * exp(i m_e r^2 / (2 hbar R)) * exp(-i (2m + |l| + 1) atan(tau/tau_R))
//! ```
//!
//! with `w(tau) = w0 sqrt(1 + (tau/tau_R)^2)`, `tau_R = m_e w0^2 / (2 hbar)`,
//! `R(tau) = tau (1 + (tau_R/tau)^2)` and `C = sqrt(2 m! / (pi (m + |l|)!))`
//! so that the transverse norm is one. The longitudinal factor is the
//! normalized Hermite function of `zeta / L`, which the parabolic equation
//! leaves frozen.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result, Warning};
use crate::grid::{check_grid_n, GridField};
use crate::special::{factorial_ratio, hermite_function, laguerre};
use crate::spectral::{self, Fft2};
use crate::units::UnitSystem;

/// Quantum numbers and envelope scales of one mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSpec {
    /// Vortex strength (OAM in units of hbar).
    pub l: i32,
    pub m_radial: u32,
    pub n_long: u32,
    pub waist: f64,
    pub long_length: f64,
    pub p_central: f64,
}

impl ModeSpec {
    pub fn new(
        l: i32,
        m_radial: u32,
        n_long: u32,
        waist: f64,
        long_length: f64,
        p_central: f64,
    ) -> Result<Self> {
        for (name, v) in [("waist", waist), ("long_length", long_length), ("p_central", p_central)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive and finite"));
            }
        }
        Ok(ModeSpec { l, m_radial, n_long, waist, long_length, p_central })
    }

    /// Defaults `w0 = 10 hbar / p_c` and `L = 10 w0`, which keep the
    /// momentum spread narrow compared to `p_c`.
    pub fn with_defaults(l: i32, m_radial: u32, n_long: u32, p_central: f64, units: &UnitSystem) -> Result<Self> {
        let waist = 10.0 * units.hbar / p_central;
        ModeSpec::new(l, m_radial, n_long, waist, 10.0 * waist, p_central)
    }

    pub fn abs_l(&self) -> u32 {
        self.l.unsigned_abs()
    }

    pub fn rayleigh_time(&self, units: &UnitSystem) -> f64 {
        units.rayleigh_time(self.waist)
    }

    pub fn width(&self, tau: f64, units: &UnitSystem) -> f64 {
        let s = tau / self.rayleigh_time(units);
        self.waist * (1.0 + s * s).sqrt()
    }

    /// Mode order `2m + |l|` entering the Gouy phase.
    pub fn order(&self) -> u32 {
        2 * self.m_radial + self.abs_l()
    }
}

/// Transverse LG amplitude at polar point `(r, phi)` and comoving time `tau`.
pub fn eval_lg(spec: &ModeSpec, r: f64, phi: f64, tau: f64, units: &UnitSystem) -> Result<Complex64> {
    if !(r >= 0.0) {
        return Err(Error::invalid("r", format!("radius {r} must be non-negative")));
    }
    if !phi.is_finite() || !tau.is_finite() {
        return Err(Error::NonFinite("phi/tau"));
    }
    Ok(lg_unchecked(spec, r, phi, tau, units))
}

fn lg_unchecked(spec: &ModeSpec, r: f64, phi: f64, tau: f64, units: &UnitSystem) -> Complex64 {
    let al = spec.abs_l();
    let tau_r = spec.rayleigh_time(units);
    let w = spec.width(tau, units);
    let c = (2.0 * factorial_ratio(spec.m_radial, al) / PI).sqrt();
    let s = 2.0 * r * r / (w * w);
    let radial = c / w
        * (r * std::f64::consts::SQRT_2 / w).powi(al as i32)
        * laguerre(spec.m_radial, al as f64, s)
        * (-r * r / (w * w)).exp();
    // 1/R written to stay finite at tau = 0
    let inv_curvature = tau / (tau * tau + tau_r * tau_r);
    let curvature = units.mass * r * r * inv_curvature / (2.0 * units.hbar);
    let gouy = (spec.order() + 1) as f64 * (tau / tau_r).atan();
    let phase = spec.l as f64 * phi + curvature - gouy;
    Complex64::from_polar(radial, phase)
}

/// Longitudinal HG amplitude, unit norm on the line.
pub fn eval_hg(spec: &ModeSpec, zeta: f64) -> f64 {
    hermite_function(spec.n_long, zeta / spec.long_length) / spec.long_length.sqrt()
}

/// Full product mode `u^LG(r, phi, tau) u^HG(zeta)`.
pub fn eval_mode(
    spec: &ModeSpec,
    r: f64,
    phi: f64,
    zeta: f64,
    tau: f64,
    units: &UnitSystem,
) -> Result<Complex64> {
    Ok(eval_lg(spec, r, phi, tau, units)? * eval_hg(spec, zeta))
}

/// A rasterized mode plus an optional truncation warning.
#[derive(Clone, Debug)]
pub struct SampledMode {
    pub field: GridField,
    pub warning: Option<Warning>,
}

pub fn sample_mode(
    spec: &ModeSpec,
    grid_n: usize,
    extent: f64,
    tau: f64,
    units: &UnitSystem,
) -> Result<SampledMode> {
    sample_mode_at(spec, grid_n, extent, tau, [0.0, 0.0], units)
}

/// Sample with the vortex axis displaced to `center`.
pub fn sample_mode_at(
    spec: &ModeSpec,
    grid_n: usize,
    extent: f64,
    tau: f64,
    center: [f64; 2],
    units: &UnitSystem,
) -> Result<SampledMode> {
    check_grid_n(grid_n)?;
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::invalid("extent", "must be positive and finite"));
    }
    let dx = 2.0 * extent / grid_n as f64;
    let values: Vec<Complex64> = (0..grid_n)
        .into_par_iter()
        .flat_map_iter(|iy| {
            let y = -extent + iy as f64 * dx - center[1];
            (0..grid_n).map(move |ix| {
                let x = -extent + ix as f64 * dx - center[0];
                lg_unchecked(spec, x.hypot(y), y.atan2(x), tau, units)
            })
        })
        .collect();
    let field = GridField::new(grid_n, extent, tau, values)?;
    let deficit = 1.0 - field.norm();
    let warning = (deficit > 1e-2).then_some(Warning::NormDeficit { deficit });
    Ok(SampledMode { field, warning })
}

/// Exact and vortex-approximated probability current on a grid.
#[derive(Clone, Debug)]
pub struct CurrentField {
    pub grid_n: usize,
    pub jx: Vec<f64>,
    pub jy: Vec<f64>,
    pub jz: Vec<f64>,
    /// `rho (p_c e_z + hbar l e_phi / r) / m`, zero on the axis sample.
    pub approx_jx: Vec<f64>,
    pub approx_jy: Vec<f64>,
    pub approx_jz: Vec<f64>,
}

/// `j = [rho p_c e_z + hbar Im(u* grad u)] / m` with spectral derivatives.
pub fn probability_current(spec: &ModeSpec, grid: &GridField, units: &UnitSystem) -> CurrentField {
    let n = grid.grid_n();
    let fft = Fft2::new(n);
    let (gx, gy) = spectral::gradient(&fft, grid.values(), grid.spacing());
    let scale = units.hbar / units.mass;
    let mut out = CurrentField {
        grid_n: n,
        jx: Vec::with_capacity(n * n),
        jy: Vec::with_capacity(n * n),
        jz: Vec::with_capacity(n * n),
        approx_jx: Vec::with_capacity(n * n),
        approx_jy: Vec::with_capacity(n * n),
        approx_jz: Vec::with_capacity(n * n),
    };
    for (i, (x, y, u)) in grid.nodes().enumerate() {
        let rho = u.norm_sqr();
        let jz = rho * spec.p_central / units.mass;
        out.jx.push(scale * (u.conj() * gx[i]).im);
        out.jy.push(scale * (u.conj() * gy[i]).im);
        out.jz.push(jz);
        let r2 = x * x + y * y;
        let (ax, ay) = if r2 == 0.0 {
            (0.0, 0.0)
        } else {
            // e_phi / r = (-y, x) / r^2
            let c = scale * rho * spec.l as f64 / r2;
            (-c * y, c * x)
        };
        out.approx_jx.push(ax);
        out.approx_jy.push(ay);
        out.approx_jz.push(jz);
    }
    out
}

/// `<L_z>/hbar` from `u* (-i)(x d_y - y d_x) u` with spectral derivatives.
pub fn oam_expectation(grid: &GridField) -> Result<f64> {
    let norm = grid.norm();
    if (norm - 1.0).abs() > 1e-2 {
        return Err(Error::Unnormalized { norm });
    }
    let fft = Fft2::new(grid.grid_n());
    let (gx, gy) = spectral::gradient(&fft, grid.values(), grid.spacing());
    let mut acc = 0.0;
    for (i, (x, y, u)) in grid.nodes().enumerate() {
        let lu = Complex64::new(0.0, -1.0) * (x * gy[i] - y * gx[i]);
        acc += (u.conj() * lu).re;
    }
    Ok(acc * grid.cell_area() / norm)
}

/// `|u|^2` along the +x half-axis through the grid center: `(r, rho)` pairs.
pub fn radial_profile(grid: &GridField) -> Vec<(f64, f64)> {
    let n = grid.grid_n();
    (n / 2..n).map(|ix| (grid.coord(ix), grid.at(ix, n / 2).norm_sqr())).collect()
}

/// Number of strict local maxima of the radial density profile.
///
/// Samples below `1e-10` of the peak are treated as numerically zero.
pub fn count_rings(grid: &GridField) -> usize {
    let profile = radial_profile(grid);
    let peak = profile.iter().map(|p| p.1).fold(0.0, f64::max);
    let floor = 1e-10 * peak;
    let mut count = 0;
    for k in 0..profile.len().saturating_sub(1) {
        let here = profile[k].1;
        if here <= floor {
            continue;
        }
        // the axis sample mirrors onto itself, so it is a maximum when it beats its neighbor
        let left = if k == 0 { f64::NEG_INFINITY } else { profile[k - 1].1 };
        if here > left && here > profile[k + 1].1 {
            count += 1;
        }
    }
    count
}

/// Radius of the brightest ring, refined by a parabola through the
/// three samples around the discrete maximum.
pub fn ring_peak_radius(grid: &GridField) -> f64 {
    let profile = radial_profile(grid);
    let (k, _) = profile
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, p)| if p.1 > best.1 { (k, p.1) } else { best });
    if k == 0 || k + 1 >= profile.len() {
        return profile[k].0;
    }
    let (y0, y1, y2) = (profile[k - 1].1, profile[k].1, profile[k + 1].1);
    let denom = y0 - 2.0 * y1 + y2;
    let shift = if denom == 0.0 { 0.0 } else { 0.5 * (y0 - y2) / denom };
    profile[k].0 + shift * grid.spacing()
}
