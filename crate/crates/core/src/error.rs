use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// |p| fell to or below the momentum floor, where the monopole curvature diverges.
    #[error("monopole singularity: |p| = {magnitude:e} is at or below p_min = {p_min:e}")]
    MonopoleSingularity { magnitude: f64, p_min: f64 },

    #[error(
        "momentum {p:?} lies on the Dirac string of the fixed gauge (distance {distance:e}); \
         use the loop-based solid-angle phase instead"
    )]
    GaugeString { p: [f64; 3], distance: f64 },

    /// D = 1 - e hbar l B.curv at or too close to zero.
    #[error("phase-space degeneracy: D = {d:e}")]
    Degenerate { d: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid is not normalized: norm = {norm}")]
    Unnormalized { norm: f64 },

    #[error("field is not negligible at the grid boundary: only {inside} of the norm lies inside the safe region")]
    BoundaryNotNegligible { inside: f64 },

    #[error("invalid momentum path: {0}")]
    InvalidPath(String),

    #[error("bracket index ({i}, {j}) out of range 0..6")]
    IndexOutOfRange { i: usize, j: usize },

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed data: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

/// Non-fatal conditions collected alongside results.
#[derive(Clone, Debug, PartialEq)]
pub enum Warning {
    /// Sampled grid lost more than 1e-2 of its norm to truncation.
    NormDeficit { deficit: f64 },
    /// Fraction of the norm found in the outer 10% frame after propagation.
    BoundaryLeakage { fraction: f64 },
    /// Open-path Berry phase; the value depends on the named gauge.
    GaugeDependent { gauge: &'static str },
    /// Loop too close to the Dirac string for the line integral; solid angle used alone.
    SolidAngleOnly,
    /// Precessing OAM drifted away from p-hat with g != 2 in a magnetic field.
    ModelValidity { t: f64, angle: f64 },
    /// Berry phase accumulated geometrically for steps near the gauge string.
    BerryGeometricFallback { steps: usize },
    /// D <= 0 at a sampled point.
    NonPositiveDensity { d: f64 },
    IllConditioned { condition: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::NormDeficit { deficit } => {
                write!(f, "W001 norm deficit {deficit:.3e}: extent too small for the mode")
            }
            Warning::BoundaryLeakage { fraction } => {
                write!(f, "W002 boundary leakage: {fraction:.3e} of the norm in the outer frame")
            }
            Warning::GaugeDependent { gauge } => {
                write!(f, "W003 open path: phase is gauge dependent ({gauge} gauge)")
            }
            Warning::SolidAngleOnly => {
                write!(f, "W004 loop near the gauge string: solid-angle phase only")
            }
            Warning::ModelValidity { t, angle } => write!(
                f,
                "W005 model validity: OAM no longer follows p (angle {angle:.3e} rad at t = {t:.6e}); \
                 g != 2 in a magnetic field"
            ),
            Warning::BerryGeometricFallback { steps } => write!(
                f,
                "W006 Berry phase accumulated by geodesic solid angle for {steps} step(s) near the gauge string"
            ),
            Warning::NonPositiveDensity { d } => {
                write!(f, "W007 density-of-states factor D = {d:.6e} is not positive")
            }
            Warning::IllConditioned { condition } => {
                write!(f, "W008 symplectic matrix condition number {condition:.3e}")
            }
        }
    }
}
