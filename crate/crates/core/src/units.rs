//! Unit system for the semiclassical model.
//!
//! The speed of light is fixed to one and never appears explicitly. The
//! charge is stored with its sign (electrons carry `e = -|e|`), so every
//! formula downstream uses the signed value directly.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitSystem {
    pub hbar: f64,
    pub mass: f64,
    /// Signed particle charge `e`.
    pub charge: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem::DIMENSIONLESS
    }
}

impl UnitSystem {
    /// hbar = m = |e| = 1 with a negative charge.
    pub const DIMENSIONLESS: UnitSystem = UnitSystem { hbar: 1.0, mass: 1.0, charge: -1.0 };

    pub const SPEED_OF_LIGHT: f64 = 1.0;

    pub fn new(hbar: f64, mass: f64, charge: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("mass", mass), ("charge", charge)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if hbar <= 0.0 {
            return Err(Error::invalid("hbar", "must be positive"));
        }
        if mass <= 0.0 {
            return Err(Error::invalid("mass", "must be positive"));
        }
        if charge == 0.0 {
            return Err(Error::invalid("charge", "must be nonzero"));
        }
        Ok(UnitSystem { hbar, mass, charge })
    }

    /// Bohr magneton `e hbar / 2m`, signed with the charge.
    pub fn bohr_magneton(&self) -> f64 {
        self.charge * self.hbar / (2.0 * self.mass)
    }

    /// Cyclotron angular frequency `|e| B / m`.
    pub fn cyclotron_frequency(&self, b: f64) -> f64 {
        self.charge.abs() * b.abs() / self.mass
    }

    /// Rayleigh time `m w0^2 / (2 hbar)` of a transverse mode with waist `w0`.
    pub fn rayleigh_time(&self, waist: f64) -> f64 {
        self.mass * waist * waist / (2.0 * self.hbar)
    }
}
