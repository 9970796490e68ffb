//! Spectral propagator for the free parabolic equation on a periodic grid.
//!
//! Each step multiplies the transverse spectrum by `exp(-i hbar k^2 dtau / 2m)`,
//! which is exact for the free equation, so the only errors are FFT round-off
//! and whatever reaches the periodic boundary.

use num_complex::Complex64;

use crate::error::{Error, Result, Warning};
use crate::grid::GridField;
use crate::modes::oam_expectation;
use crate::spectral::{wavenumbers, Fft2};
use crate::units::UnitSystem;

/// Width of the boundary frame monitored for leakage, as a fraction of the extent.
pub const FRAME_WIDTH: f64 = 0.1;
/// Input fields must keep less than this fraction of their norm in the frame.
pub const INPUT_FRAME_LIMIT: f64 = 1e-6;
/// Leakage warning threshold after propagation.
pub const LEAKAGE_LIMIT: f64 = 1e-3;

pub struct SpectralPlan {
    pub grid_n: usize,
    pub extent: f64,
    pub delta_tau: f64,
    kinetic_phase: Vec<Complex64>,
    fft: Fft2,
}

impl SpectralPlan {
    pub fn new(grid_n: usize, extent: f64, delta_tau: f64, units: &UnitSystem) -> Self {
        let dx = 2.0 * extent / grid_n as f64;
        let k = wavenumbers(grid_n, dx);
        let c = units.hbar * delta_tau / (2.0 * units.mass);
        let mut kinetic_phase = Vec::with_capacity(grid_n * grid_n);
        for ky in &k {
            for kx in &k {
                kinetic_phase.push(Complex64::from_polar(1.0, -c * (kx * kx + ky * ky)));
            }
        }
        SpectralPlan { grid_n, extent, delta_tau, kinetic_phase, fft: Fft2::new(grid_n) }
    }

    pub fn kinetic_phase(&self) -> &[Complex64] {
        &self.kinetic_phase
    }

    /// One transform round trip per step.
    pub fn step(&self, values: &mut [Complex64]) {
        self.fft.forward(values);
        values.iter_mut().zip(&self.kinetic_phase).for_each(|(v, p)| *v *= p);
        self.fft.inverse(values);
    }
}

#[derive(Clone, Debug)]
pub struct Propagated {
    pub field: GridField,
    pub warning: Option<Warning>,
}

/// Advance `grid` by `steps` steps of `delta_tau`.
pub fn propagate(grid: &GridField, delta_tau: f64, steps: usize, units: &UnitSystem) -> Result<Propagated> {
    if !delta_tau.is_finite() {
        return Err(Error::NonFinite("delta_tau"));
    }
    let inside = 1.0 - grid.frame_fraction(FRAME_WIDTH);
    if inside < 1.0 - INPUT_FRAME_LIMIT {
        return Err(Error::BoundaryNotNegligible { inside });
    }
    if delta_tau == 0.0 || steps == 0 {
        return Ok(Propagated { field: grid.clone(), warning: None });
    }
    let plan = SpectralPlan::new(grid.grid_n(), grid.extent(), delta_tau, units);
    let mut values = grid.values().to_vec();
    for _ in 0..steps {
        plan.step(&mut values);
    }
    let field = GridField::new(
        grid.grid_n(),
        grid.extent(),
        grid.tau + delta_tau * steps as f64,
        values,
    )?;
    let fraction = field.frame_fraction(FRAME_WIDTH);
    let warning = (fraction > LEAKAGE_LIMIT).then_some(Warning::BoundaryLeakage { fraction });
    Ok(Propagated { field, warning })
}

/// First moments of the density and `<L_z>/hbar`.
pub fn measure_centroid_and_oam(grid: &GridField) -> Result<([f64; 2], f64)> {
    let oam = oam_expectation(grid)?;
    Ok((grid.centroid(), oam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{sample_mode, sample_mode_at, ModeSpec};

    fn units() -> UnitSystem {
        UnitSystem::default()
    }

    #[test]
    fn phases_are_unit_modulus() {
        let plan = SpectralPlan::new(32, 5.0, 0.37, &units());
        assert!(plan.kinetic_phase().iter().all(|p| (p.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn zero_step_is_identity() {
        let spec = ModeSpec::new(1, 0, 0, 1.0, 1.0, 1.0).unwrap();
        let g = sample_mode(&spec, 64, 8.0, 0.0, &units()).unwrap().field;
        let out = propagate(&g, 0.0, 10, &units()).unwrap();
        assert_eq!(out.field, g);
    }

    #[test]
    fn boundary_precondition() {
        let spec = ModeSpec::new(0, 0, 0, 1.0, 1.0, 1.0).unwrap();
        let g = sample_mode(&spec, 64, 2.0, 0.0, &units()).unwrap().field;
        assert!(matches!(propagate(&g, 0.1, 1, &units()), Err(Error::BoundaryNotNegligible { .. })));
    }

    #[test]
    fn leakage_warning_when_spreading_hits_the_frame() {
        let spec = ModeSpec::new(0, 0, 0, 1.0, 1.0, 1.0).unwrap();
        let g = sample_mode(&spec, 64, 5.0, 0.0, &units()).unwrap().field;
        // w grows to ~5 w0 by tau = 5 tau_R
        let out = propagate(&g, 2.5, 1, &units()).unwrap();
        assert!(matches!(out.warning, Some(Warning::BoundaryLeakage { .. })));
    }

    #[test]
    fn centroid_of_centered_and_displaced_modes() {
        let spec = ModeSpec::new(2, 0, 0, 1.0, 1.0, 1.0).unwrap();
        let g = sample_mode(&spec, 64, 8.0, 0.0, &units()).unwrap().field;
        let (c, oam) = measure_centroid_and_oam(&g).unwrap();
        assert!(c[0].abs() < 1e-8 && c[1].abs() < 1e-8);
        assert!((oam - 2.0).abs() < 1e-6);

        let d = 1.3;
        let g = sample_mode_at(&spec, 64, 8.0, 0.0, [d, 0.0], &units()).unwrap().field;
        let c = g.centroid();
        assert!((c[0] - d).abs() < g.spacing());
        assert!(c[1].abs() < g.spacing());
    }
}
