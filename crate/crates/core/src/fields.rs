//! Static electromagnetic environments with explicit potentials and gauge.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type VectorMap = Arc<dyn Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync>;
pub type ScalarMap = Arc<dyn Fn(&Vector3<f64>) -> f64 + Send + Sync>;

/// Default g-factor: classical orbital motion.
pub const DEFAULT_G_FACTOR: f64 = 1.0;

#[derive(Clone)]
pub enum FieldKind {
    Free,
    UniformElectric(Vector3<f64>),
    UniformMagnetic(Vector3<f64>),
    Custom {
        electric: VectorMap,
        magnetic: VectorMap,
        scalar_potential: Option<ScalarMap>,
        vector_potential: Option<VectorMap>,
    },
}

impl fmt::Debug for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldKind::Free => f.write_str("Free"),
            FieldKind::UniformElectric(e) => f.debug_tuple("UniformElectric").field(e).finish(),
            FieldKind::UniformMagnetic(b) => f.debug_tuple("UniformMagnetic").field(b).finish(),
            FieldKind::Custom { .. } => f.write_str("Custom { .. }"),
        }
    }
}

/// Fields and their spatial Jacobian at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub electric: Vector3<f64>,
    pub magnetic: Vector3<f64>,
    /// `jacobian_b[(i, j)] = dB_i / dr_j`.
    pub jacobian_b: Matrix3<f64>,
}

#[derive(Clone, Debug)]
pub struct FieldConfig {
    kind: FieldKind,
    gauge_label: String,
    pub g_factor: f64,
}

impl FieldConfig {
    pub fn free() -> Self {
        FieldConfig { kind: FieldKind::Free, gauge_label: "none".into(), g_factor: DEFAULT_G_FACTOR }
    }

    /// Uniform E with `Phi = -E.r` and `A = 0`.
    pub fn uniform_electric(e: Vector3<f64>) -> Self {
        if e == Vector3::zeros() {
            return FieldConfig::free();
        }
        FieldConfig {
            kind: FieldKind::UniformElectric(e),
            gauge_label: "coulomb".into(),
            g_factor: DEFAULT_G_FACTOR,
        }
    }

    /// Uniform B in the symmetric gauge `A = (B x r)/2`.
    pub fn uniform_magnetic(b: Vector3<f64>) -> Self {
        if b == Vector3::zeros() {
            return FieldConfig::free();
        }
        FieldConfig {
            kind: FieldKind::UniformMagnetic(b),
            gauge_label: "symmetric".into(),
            g_factor: DEFAULT_G_FACTOR,
        }
    }

    /// User-supplied static maps. The caller guarantees smoothness; the
    /// Jacobian of B is taken by central differences.
    pub fn custom(electric: VectorMap, magnetic: VectorMap) -> Self {
        FieldConfig {
            kind: FieldKind::Custom {
                electric,
                magnetic,
                scalar_potential: None,
                vector_potential: None,
            },
            gauge_label: "user".into(),
            g_factor: DEFAULT_G_FACTOR,
        }
    }

    /// Attach potentials to a custom configuration. Ignored for presets.
    pub fn with_potentials(
        mut self,
        scalar: ScalarMap,
        vector: VectorMap,
        gauge_label: impl Into<String>,
    ) -> Self {
        if let FieldKind::Custom { scalar_potential, vector_potential, .. } = &mut self.kind {
            *scalar_potential = Some(scalar);
            *vector_potential = Some(vector);
            self.gauge_label = gauge_label.into();
        }
        self
    }

    pub fn with_g_factor(mut self, g: f64) -> Self {
        self.g_factor = g;
        self
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn gauge_label(&self) -> &str {
        &self.gauge_label
    }

    pub fn electric(&self, r: &Vector3<f64>) -> Vector3<f64> {
        match &self.kind {
            FieldKind::UniformElectric(e) => *e,
            FieldKind::Custom { electric, .. } => electric(r),
            _ => Vector3::zeros(),
        }
    }

    pub fn magnetic(&self, r: &Vector3<f64>) -> Vector3<f64> {
        match &self.kind {
            FieldKind::UniformMagnetic(b) => *b,
            FieldKind::Custom { magnetic, .. } => magnetic(r),
            _ => Vector3::zeros(),
        }
    }

    pub fn scalar_potential(&self, r: &Vector3<f64>) -> f64 {
        match &self.kind {
            FieldKind::UniformElectric(e) => -e.dot(r),
            FieldKind::Custom { scalar_potential: Some(phi), .. } => phi(r),
            _ => 0.0,
        }
    }

    pub fn vector_potential(&self, r: &Vector3<f64>) -> Vector3<f64> {
        match &self.kind {
            FieldKind::UniformMagnetic(b) => 0.5 * b.cross(r),
            FieldKind::Custom { vector_potential: Some(a), .. } => a(r),
            _ => Vector3::zeros(),
        }
    }

    /// True when B vanishes identically (presets only; custom maps are assumed magnetic).
    pub fn is_magnetic_free(&self) -> bool {
        matches!(self.kind, FieldKind::Free | FieldKind::UniformElectric(_))
    }

    /// Characteristic magnitudes (|E|, |B|) used for step-size defaults.
    pub fn scale_at(&self, r: &Vector3<f64>) -> (f64, f64) {
        (self.electric(r).norm(), self.magnetic(r).norm())
    }

    pub fn eval(&self, r: &Vector3<f64>) -> Result<FieldSample> {
        if !r.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("position"));
        }
        let jacobian_b = match &self.kind {
            FieldKind::Custom { magnetic, .. } => {
                let h = 1e-5 * r.norm().max(1.0);
                let mut jac = Matrix3::zeros();
                for j in 0..3 {
                    let mut step = Vector3::zeros();
                    step[j] = h;
                    let d = (magnetic(&(r + step)) - magnetic(&(r - step))) / (2.0 * h);
                    jac.set_column(j, &d);
                }
                jac
            }
            _ => Matrix3::zeros(),
        };
        let sample = FieldSample { electric: self.electric(r), magnetic: self.magnetic(r), jacobian_b };
        if !sample.electric.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("electric field"));
        }
        if !sample.magnetic.iter().chain(sample.jacobian_b.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("magnetic field"));
        }
        Ok(sample)
    }
}

/// Evaluate E, B and dB/dr at `r`.
pub fn eval_fields(cfg: &FieldConfig, r: &Vector3<f64>) -> Result<FieldSample> {
    cfg.eval(r)
}
