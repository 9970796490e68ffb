//! Monopole geometry in momentum space and the Zeeman coupling of the
//! intrinsic OAM.
//!
//! The unit-charge curvature is `-p/|p|^3`; a mode with vortex strength `l`
//! sees `l` times it. The connection is fixed in the gauge whose Dirac string
//! runs along the negative `p_z` axis:
//!
//! ```text
//! A(p) = -(1 - cos theta)/(p sin theta) e_phi = (p_y, -p_x, 0) / (p (p + p_z))
//! ```
//!
//! Closed-loop phases are also computed from the solid angle of the geodesic
//! polygon traced by `p/|p|`, which is gauge invariant and authoritative.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result, Warning};
use crate::fields::FieldConfig;
use crate::special::gauss_legendre;
use crate::units::UnitSystem;

pub const DEFAULT_P_MIN: f64 = 1e-9;

/// Label attached to every gauge-dependent output.
pub const GAUGE_LABEL: &str = "south-string";

/// Loops whose sampled points come closer than this to the string, measured
/// as `1 + p_z/|p|`, skip the line integral.
pub const STRING_MARGIN: f64 = 1e-4;

fn check_momentum(p: &Vector3<f64>, p_min: f64) -> Result<f64> {
    if !p.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("momentum"));
    }
    let magnitude = p.norm();
    if magnitude <= p_min {
        return Err(Error::MonopoleSingularity { magnitude, p_min });
    }
    Ok(magnitude)
}

/// Unit-charge Berry curvature `-p/|p|^3`.
pub fn berry_curvature(p: &Vector3<f64>) -> Result<Vector3<f64>> {
    berry_curvature_with(p, DEFAULT_P_MIN)
}

pub fn berry_curvature_with(p: &Vector3<f64>, p_min: f64) -> Result<Vector3<f64>> {
    let magnitude = check_momentum(p, p_min)?;
    Ok(-p / magnitude.powi(3))
}

/// Unit-charge Berry connection in the south-string gauge.
pub fn berry_connection(p: &Vector3<f64>) -> Result<Vector3<f64>> {
    berry_connection_with(p, DEFAULT_P_MIN)
}

pub fn berry_connection_with(p: &Vector3<f64>, p_min: f64) -> Result<Vector3<f64>> {
    let magnitude = check_momentum(p, p_min)?;
    let rho = p.x.hypot(p.y);
    if p.z < 0.0 && rho < p_min {
        return Err(Error::GaugeString { p: [p.x, p.y, p.z], distance: rho });
    }
    let denom = magnitude * (magnitude + p.z);
    if denom == 0.0 {
        return Err(Error::GaugeString { p: [p.x, p.y, p.z], distance: rho });
    }
    Ok(Vector3::new(p.y, -p.x, 0.0) / denom)
}

/// Ordered momentum samples; closed paths repeat their first point at the end.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumPath {
    points: Vec<Vector3<f64>>,
    closed: bool,
    p_min: f64,
}

impl MomentumPath {
    pub fn new(points: Vec<Vector3<f64>>, closed: bool) -> Result<Self> {
        Self::with_floor(points, closed, DEFAULT_P_MIN)
    }

    pub fn with_floor(points: Vec<Vector3<f64>>, closed: bool, p_min: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidPath("need at least two points".into()));
        }
        for p in &points {
            check_momentum(p, p_min)?;
        }
        if closed && points.first() != points.last() {
            return Err(Error::InvalidPath("closed path must end at its first point".into()));
        }
        for w in points.windows(2) {
            let (a, b) = (w[0].normalize(), w[1].normalize());
            if a.dot(&b) < -1.0 + 1e-12 {
                return Err(Error::InvalidPath("consecutive points are antipodal".into()));
            }
            if segment_closest_approach(&w[0], &w[1]) <= p_min {
                return Err(Error::InvalidPath("segment passes through p = 0".into()));
            }
        }
        Ok(MomentumPath { points, closed, p_min })
    }

    /// Close `points` by appending the first point.
    pub fn closed_loop(mut points: Vec<Vector3<f64>>) -> Result<Self> {
        if let Some(first) = points.first().copied() {
            if points.last() != Some(&first) {
                points.push(first);
            }
        }
        Self::new(points, true)
    }

    /// Circle of constant polar angle `colatitude` and radius `p`, traversed
    /// in +phi with `samples` distinct vertices.
    pub fn circle(p: f64, colatitude: f64, samples: usize) -> Result<Self> {
        let (st, ct) = colatitude.sin_cos();
        let pts = (0..samples)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / samples as f64;
                Vector3::new(p * st * phi.cos(), p * st * phi.sin(), p * ct)
            })
            .collect();
        Self::closed_loop(pts)
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        MomentumPath { points, closed: self.closed, p_min: self.p_min }
    }
}

fn segment_closest_approach(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let d = b - a;
    let dd = d.norm_squared();
    if dd == 0.0 {
        return a.norm();
    }
    let s = (-a.dot(&d) / dd).clamp(0.0, 1.0);
    (a + s * d).norm()
}

fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Signed solid angle of the spherical triangle `(a, b, c)` of unit vectors.
fn triangle_solid_angle(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

/// Signed solid angle swept by the edge `a -> b` (unit vectors) as seen from
/// the north pole; `-edge_solid_angle` is the south-string connection
/// integrated along the geodesic.
///
/// Near the south pole the fan from the north pole degenerates, so the
/// south fan is used with the lune correction `2 dphi`.
pub fn edge_solid_angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let north = Vector3::z();
    let south = -north;
    let score_north = (1.0 + a.z).min(1.0 + b.z);
    let score_south = (1.0 - a.z).min(1.0 - b.z);
    if score_north >= score_south {
        triangle_solid_angle(&north, a, b)
    } else {
        let dphi = wrap_angle(b.y.atan2(b.x) - a.y.atan2(a.x));
        triangle_solid_angle(&south, a, b) + 2.0 * dphi
    }
}

/// Solid angle of the closed geodesic polygon `p_k/|p_k|`, oriented so that
/// a loop traversed in +phi around the north pole is positive. Defined modulo 4 pi.
pub fn solid_angle(path: &MomentumPath) -> Result<f64> {
    if !path.closed {
        return Err(Error::InvalidPath("solid angle needs a closed path".into()));
    }
    let unit: Vec<Vector3<f64>> = path.points.iter().map(|p| p.normalize()).collect();
    Ok(unit.windows(2).map(|w| edge_solid_angle(&w[0], &w[1])).sum())
}

const GL_ORDER: usize = 16;

/// `int A . dp` along the straight segments of the path, by adaptive
/// Gauss-Legendre quadrature. `None` when the path approaches the string.
pub fn connection_line_integral(path: &MomentumPath) -> Option<f64> {
    let (nodes, weights) = gauss_legendre(GL_ORDER);
    let mut total = 0.0;
    for w in path.points.windows(2) {
        total += segment_integral(&w[0], &w[1], &nodes, &weights, path.p_min)?;
    }
    Some(total)
}

fn segment_integral(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    nodes: &[f64],
    weights: &[f64],
    p_min: f64,
) -> Option<f64> {
    let d = b - a;
    let rule = |s0: f64, s1: f64| -> Option<f64> {
        let half = 0.5 * (s1 - s0);
        let mid = 0.5 * (s1 + s0);
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            let p = a + (mid + half * x) * d;
            if 1.0 + p.z / p.norm() < STRING_MARGIN {
                return None;
            }
            acc += w * berry_connection_with(&p, p_min).ok()?.dot(&d);
        }
        Some(acc * half)
    };
    let mut stack = vec![(0.0, 1.0, rule(0.0, 1.0)?, 0u32)];
    let mut total = 0.0;
    while let Some((s0, s1, whole, depth)) = stack.pop() {
        let mid = 0.5 * (s0 + s1);
        let left = rule(s0, mid)?;
        let right = rule(mid, s1)?;
        if (left + right - whole).abs() <= 1e-14 * whole.abs().max(1e-2) || depth >= 16 {
            total += left + right;
        } else {
            stack.push((s0, mid, left, depth + 1));
            stack.push((mid, s1, right, depth + 1));
        }
    }
    Some(total)
}

/// Result of a Berry-phase evaluation on a momentum path.
#[derive(Clone, Debug)]
pub struct LoopPhase {
    /// The phase in radians; `-l * solid_angle` for closed loops.
    pub phase: f64,
    pub solid_angle: Option<f64>,
    /// `l * int A . dp` in the fixed gauge, when the path stays off the string.
    pub line_integral_phase: Option<f64>,
    pub gauge: &'static str,
    pub warnings: Vec<Warning>,
}

impl LoopPhase {
    /// Difference between the two routes, wrapped to (-pi, pi].
    pub fn method_discrepancy(&self) -> Option<f64> {
        self.line_integral_phase.map(|li| wrap_angle(li - self.phase))
    }
}

/// Berry phase `l int A . dp`. Closed loops use the solid angle as the
/// authoritative value and report the line integral alongside it.
pub fn berry_phase_loop(path: &MomentumPath, l: i32) -> Result<LoopPhase> {
    let lf = l as f64;
    let line = connection_line_integral(path).map(|v| lf * v);
    if path.closed {
        let omega = solid_angle(path)?;
        let mut warnings = Vec::new();
        if line.is_none() {
            warnings.push(Warning::SolidAngleOnly);
        }
        Ok(LoopPhase {
            phase: -lf * omega,
            solid_angle: Some(omega),
            line_integral_phase: line,
            gauge: GAUGE_LABEL,
            warnings,
        })
    } else {
        let phase = line.ok_or_else(|| {
            let p = path.points[0];
            Error::GaugeString { p: [p.x, p.y, p.z], distance: 0.0 }
        })?;
        Ok(LoopPhase {
            phase,
            solid_angle: None,
            line_integral_phase: line,
            gauge: GAUGE_LABEL,
            warnings: vec![Warning::GaugeDependent { gauge: GAUGE_LABEL }],
        })
    }
}

/// Zeeman coupling parameters of a mode with vortex strength `l`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeemanParams {
    pub l: i32,
    pub g_factor: f64,
    /// `e hbar / 2m` with the signed charge.
    pub mu_b: f64,
}

impl ZeemanParams {
    pub fn new(units: &UnitSystem, l: i32, g_factor: f64) -> Self {
        ZeemanParams { l, g_factor, mu_b: units.bohr_magneton() }
    }

    pub fn from_field(units: &UnitSystem, l: i32, cfg: &FieldConfig) -> Self {
        Self::new(units, l, cfg.g_factor)
    }

    /// Magnetic moment `g mu_B l_vec`.
    pub fn moment(&self, l_vec: &Vector3<f64>) -> Vector3<f64> {
        self.g_factor * self.mu_b * l_vec
    }
}

/// `Delta = -mu . B` with `mu = g mu_B l_vec`.
pub fn zeeman_energy(zp: &ZeemanParams, l_vec: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    -zp.moment(l_vec).dot(b)
}

/// Gradients of the slaved Zeeman energy `Delta(r, p) = -g mu_B l p_hat . B(r)`.
///
/// Returns `(dDelta/dr, dDelta/dp)`.
pub fn zeeman_gradients(
    zp: &ZeemanParams,
    r: &Vector3<f64>,
    p: &Vector3<f64>,
    cfg: &FieldConfig,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let magnitude = check_momentum(p, DEFAULT_P_MIN)?;
    let sample = cfg.eval(r)?;
    let p_hat = p / magnitude;
    let k = -zp.g_factor * zp.mu_b * zp.l as f64;
    let d_r = k * sample.jacobian_b.transpose() * p_hat;
    let b = sample.magnetic;
    let d_p = (k / magnitude) * (b - p_hat.dot(&b) * p_hat);
    Ok((d_r, d_p))
}
