//! Deformed symplectic structure on the `(r, p)` phase space and the
//! noncanonical Poisson brackets obtained by inverting it.
//!
//! With `X = (r, p)` the two-form matrix is
//!
//! ```text
//!        | e eps_ijk B_k        -delta_ij              |
//! g^ij = |                                            |
//!        | +delta_ij            hbar l eps_ijk curv_k  |
//! ```
//!
//! so that `g^ij X_dot_j = dH/dX_i` reproduces the equations of motion and
//! the canonical limit gives `{r_i, p_j} = delta_ij`. The bracket table is
//! the numerical inverse of `g^ij`.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::berry::berry_curvature_with;
use crate::dynamics::D_FLOOR;
use crate::error::{Error, Result, Warning};
use crate::fields::FieldConfig;
use crate::units::UnitSystem;

/// Condition numbers above this are reported with the frame.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Tolerance on `|D| - sqrt(det g)`.
pub const D_IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticFrame {
    pub omega: Matrix6<f64>,
    /// `brackets[(i, j)] = {X_i, X_j}`.
    pub brackets: Matrix6<f64>,
    /// `D = 1 - e hbar l B . curv`.
    pub d: f64,
    pub sqrt_det: f64,
    pub condition: f64,
    pub warnings: Vec<Warning>,
}

/// Matrix of `v -> v x a`, i.e. entries `eps_ijk a_k`.
fn cross_matrix(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, a.z, -a.y, -a.z, 0.0, a.x, a.y, -a.x, 0.0)
}

pub fn build_frame(
    r: &Vector3<f64>,
    p: &Vector3<f64>,
    l: i32,
    cfg: &FieldConfig,
    units: &UnitSystem,
) -> Result<SymplecticFrame> {
    let curv = berry_curvature_with(p, crate::berry::DEFAULT_P_MIN)?;
    let b = cfg.eval(r)?.magnetic;
    let e = units.charge;
    let hbar_l = units.hbar * l as f64;

    let mut omega = Matrix6::zeros();
    omega.fixed_view_mut::<3, 3>(0, 0).copy_from(&(e * cross_matrix(&b)));
    omega.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-Matrix3::identity()));
    omega.fixed_view_mut::<3, 3>(3, 0).copy_from(&Matrix3::identity());
    omega.fixed_view_mut::<3, 3>(3, 3).copy_from(&(hbar_l * cross_matrix(&curv)));

    let d = 1.0 - e * hbar_l * b.dot(&curv);
    if d.abs() <= D_FLOOR {
        return Err(Error::Degenerate { d });
    }
    let inverse = omega.lu().try_inverse().ok_or(Error::Degenerate { d })?;
    let brackets = 0.5 * (inverse - inverse.transpose());
    let sqrt_det = omega.determinant().max(0.0).sqrt();

    let sv = omega.singular_values();
    let condition = sv.max() / sv.min();
    let mut warnings = Vec::new();
    if d <= 0.0 {
        warnings.push(Warning::NonPositiveDensity { d });
    }
    if condition > CONDITION_LIMIT {
        warnings.push(Warning::IllConditioned { condition });
    }
    Ok(SymplecticFrame { omega, brackets, d, sqrt_det, condition, warnings })
}

impl SymplecticFrame {
    /// `|D| - sqrt(det g)`; zero up to round-off since `det g = D^2`.
    pub fn d_identity_residual(&self) -> f64 {
        self.d.abs() - self.sqrt_det
    }

    pub fn bracket(&self, i: usize, j: usize) -> Result<f64> {
        if i >= 6 || j >= 6 {
            return Err(Error::IndexOutOfRange { i, j });
        }
        Ok(self.brackets[(i, j)])
    }
}

/// Solve `g^ij X_dot_j = dH/dX_i`.
pub fn hamiltonian_flow(frame: &SymplecticFrame, grad_h: &Vector6<f64>) -> Result<Vector6<f64>> {
    frame.omega.lu().solve(grad_h).ok_or(Error::Degenerate { d: frame.d })
}

/// Shorthand for [`SymplecticFrame::bracket`].
pub fn bracket(frame: &SymplecticFrame, i: usize, j: usize) -> Result<f64> {
    frame.bracket(i, j)
}

/// Coordinate names in `X` order.
pub const COORDINATE_NAMES: [&str; 6] = ["r_x", "r_y", "r_z", "p_x", "p_y", "p_z"];
