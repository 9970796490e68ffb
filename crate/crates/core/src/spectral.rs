//! 2D FFT on square periodic grids.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.forward);
    }

    /// Inverse transform including the 1/N^2 normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inverse);
        let scale = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn apply(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        // rows are contiguous
        fft.process(data);
        let mut column = vec![Complex64::default(); n];
        for ix in 0..n {
            for iy in 0..n {
                column[iy] = data[iy * n + ix];
            }
            fft.process(&mut column);
            for iy in 0..n {
                data[iy * n + ix] = column[iy];
            }
        }
    }
}

/// Angular wavenumbers in FFT order for `n` samples spaced `dx`.
///
/// The Nyquist entry carries `-pi/dx`.
pub fn wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * dx);
    (0..n)
        .map(|j| if j < n / 2 { j as f64 * dk } else { (j as f64 - n as f64) * dk })
        .collect()
}

/// Spectral gradient `(du/dx, du/dy)` of a row-major field (x varies fastest).
///
/// The Nyquist mode is dropped for the odd-order derivative.
pub fn gradient(fft: &Fft2, values: &[Complex64], dx: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = fft.n;
    let k = wavenumbers(n, dx);
    let mut spectrum = values.to_vec();
    fft.forward(&mut spectrum);
    let mut gx = spectrum.clone();
    let mut gy = spectrum;
    for iy in 0..n {
        for ix in 0..n {
            let idx = iy * n + ix;
            let kx = if ix == n / 2 { 0.0 } else { k[ix] };
            let ky = if iy == n / 2 { 0.0 } else { k[iy] };
            gx[idx] *= Complex64::new(0.0, kx);
            gy[idx] *= Complex64::new(0.0, ky);
        }
    }
    fft.inverse(&mut gx);
    fft.inverse(&mut gy);
    (gx, gy)
}
