//! Complex scalar fields on uniform square transverse grids.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MIN_GRID_N: usize = 32;

/// Samples `u(x, y)` at `x_j = -extent + j * dx`, `dx = 2 extent / n`.
///
/// The grid is periodic: it contains `-extent` but not `+extent`, and the
/// sample `j = n/2` lies exactly on the axis. Storage is row-major with x
/// varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    values: Vec<Complex64>,
    extent: f64,
    grid_n: usize,
    pub tau: f64,
}

pub fn check_grid_n(grid_n: usize) -> Result<()> {
    if grid_n < MIN_GRID_N || !grid_n.is_power_of_two() {
        return Err(Error::invalid("grid_n", format!("{grid_n} is not a power of two >= {MIN_GRID_N}")));
    }
    Ok(())
}

impl GridField {
    pub fn new(grid_n: usize, extent: f64, tau: f64, values: Vec<Complex64>) -> Result<Self> {
        check_grid_n(grid_n)?;
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::invalid("extent", "must be positive and finite"));
        }
        if !tau.is_finite() {
            return Err(Error::NonFinite("tau"));
        }
        if values.len() != grid_n * grid_n {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid_n * grid_n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("grid values"));
        }
        Ok(GridField { values, extent, grid_n, tau })
    }

    /// Build by evaluating `f(x, y)` at every node.
    pub fn from_fn(
        grid_n: usize,
        extent: f64,
        tau: f64,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        check_grid_n(grid_n)?;
        let dx = 2.0 * extent / grid_n as f64;
        let values = (0..grid_n * grid_n)
            .map(|i| {
                let x = -extent + (i % grid_n) as f64 * dx;
                let y = -extent + (i / grid_n) as f64 * dx;
                f(x, y)
            })
            .collect();
        GridField::new(grid_n, extent, tau, values)
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.grid_n as f64
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.extent + j as f64 * self.spacing()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[iy * self.grid_n + ix]
    }

    /// Iterate `(x, y, u)` over all nodes.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, Complex64)> + '_ {
        let n = self.grid_n;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &u)| (self.coord(i % n), self.coord(i / n), u))
    }

    pub fn cell_area(&self) -> f64 {
        let dx = self.spacing();
        dx * dx
    }

    /// Discrete L2 norm `sum |u|^2 dx^2`.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|u| u.norm_sqr()).sum::<f64>() * self.cell_area()
    }

    pub fn same_layout(&self, other: &GridField) -> Result<()> {
        if self.grid_n != other.grid_n || self.extent != other.extent {
            return Err(Error::GridMismatch(format!(
                "({} x {}, extent {}) vs ({} x {}, extent {})",
                self.grid_n, self.grid_n, self.extent, other.grid_n, other.grid_n, other.extent
            )));
        }
        Ok(())
    }

    /// Norm fraction in the frame `max(|x|, |y|) > (1 - width) * extent`.
    pub fn frame_fraction(&self, width: f64) -> f64 {
        let cut = (1.0 - width) * self.extent;
        let outer: f64 = self
            .nodes()
            .filter(|(x, y, _)| x.abs().max(y.abs()) > cut)
            .map(|(_, _, u)| u.norm_sqr())
            .sum::<f64>()
            * self.cell_area();
        outer / self.norm()
    }

    /// Probability-weighted mean of `(x, y)`.
    pub fn centroid(&self) -> [f64; 2] {
        let (mut sx, mut sy, mut s) = (0.0, 0.0, 0.0);
        for (x, y, u) in self.nodes() {
            let rho = u.norm_sqr();
            sx += x * rho;
            sy += y * rho;
            s += rho;
        }
        [sx / s, sy / s]
    }

    /// `<r^2>` about the origin.
    pub fn mean_square_radius(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (x, y, u) in self.nodes() {
            let rho = u.norm_sqr();
            num += (x * x + y * y) * rho;
            den += rho;
        }
        num / den
    }
}

/// Discrete inner product `<a|b> = sum conj(a) b dx^2`.
pub fn mode_overlap(a: &GridField, b: &GridField) -> Result<Complex64> {
    a.same_layout(b)?;
    let s: Complex64 = a.values.iter().zip(&b.values).map(|(a, b)| a.conj() * b).sum();
    Ok(s * a.cell_area())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_validation() {
        assert!(GridField::from_fn(48, 1.0, 0.0, |_, _| Complex64::default()).is_err());
        assert!(GridField::from_fn(16, 1.0, 0.0, |_, _| Complex64::default()).is_err());
        assert!(GridField::from_fn(32, 0.0, 0.0, |_, _| Complex64::default()).is_err());
        let g = GridField::from_fn(32, 2.0, 0.0, |_, _| Complex64::default()).unwrap();
        assert_eq!(g.coord(0), -2.0);
        assert_eq!(g.coord(16), 0.0);
    }

    #[test]
    fn mismatched_overlap_rejected() {
        let a = GridField::from_fn(32, 2.0, 0.0, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let b = GridField::from_fn(64, 2.0, 0.0, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let c = GridField::from_fn(32, 3.0, 0.0, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(mode_overlap(&a, &b), Err(Error::GridMismatch(_))));
        assert!(matches!(mode_overlap(&a, &c), Err(Error::GridMismatch(_))));
        let s = mode_overlap(&a, &a).unwrap();
        assert!((s.re - 16.0).abs() < 1e-12);
    }
}
