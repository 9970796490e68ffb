//! Wave-packet center dynamics with Berry curvature and Zeeman coupling.
//!
//! The equations of motion
//!
//! ```text
//! p_dot = e E - dDelta/dr + e r_dot x B
//! r_dot = p/m + dDelta/dp - hbar l p_dot x curv,      curv = -p/|p|^3
//! ```
//!
//! are implicit in `(r_dot, p_dot)`. Substituting the first into the second
//! gives a 3x3 linear system for `r_dot` whose determinant is `D^2` with
//! `D = 1 - e hbar l B . curv`; it is solved exactly at every evaluation.
//!
//! The intrinsic OAM is either slaved to the momentum (`l_vec = l p_hat`) or
//! precesses as
//!
//! ```text
//! l_dot = -((g/2)(e/m) B + e E x p / p^2) x l_vec
//! ```
//!
//! which is the compatible precession at `g = 2` and Larmor precession of the
//! orbital moment otherwise. The center motion always uses the slaved Zeeman
//! energy; in precessing mode `l_vec` is evolved alongside and monitored.

use nalgebra::Vector3;

use crate::berry::{berry_connection, berry_curvature_with, edge_solid_angle, zeeman_energy, zeeman_gradients, ZeemanParams, DEFAULT_P_MIN};
use crate::error::{Error, Result, Warning};
use crate::fields::FieldConfig;
use crate::ode::{dopri5_step, error_norm, rk4_step, State};
use crate::units::UnitSystem;

/// Smallest |D| accepted before the phase space is considered degenerate.
pub const D_FLOOR: f64 = 1e-6;

/// Steps starting with `1 + p_z/|p|` below this accumulate the Berry phase
/// geometrically instead of through the gauge potential.
pub const STRING_MARGIN: f64 = 1e-2;

const DIM: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PacketState {
    pub r: Vector3<f64>,
    pub p: Vector3<f64>,
    /// Intrinsic OAM in units of hbar.
    pub l_vec: Vector3<f64>,
    pub theta_dyn: f64,
    pub theta_dirac: f64,
    pub theta_berry: f64,
    pub t: f64,
}

impl PacketState {
    /// State at `t = 0` with the OAM slaved to the momentum direction.
    pub fn new(r: Vector3<f64>, p: Vector3<f64>, l: i32) -> Self {
        let l_vec = if p.norm() > 0.0 { l as f64 * p.normalize() } else { Vector3::zeros() };
        PacketState { r, p, l_vec, theta_dyn: 0.0, theta_dirac: 0.0, theta_berry: 0.0, t: 0.0 }
    }

    fn to_vector(self) -> State<DIM> {
        let mut y = State::<DIM>::zeros();
        y.fixed_rows_mut::<3>(0).copy_from(&self.r);
        y.fixed_rows_mut::<3>(3).copy_from(&self.p);
        y.fixed_rows_mut::<3>(6).copy_from(&self.l_vec);
        y[9] = self.theta_dyn;
        y[10] = self.theta_dirac;
        y[11] = self.theta_berry;
        y
    }

    fn from_vector(y: &State<DIM>, t: f64) -> Self {
        PacketState {
            r: y.fixed_rows::<3>(0).into(),
            p: y.fixed_rows::<3>(3).into(),
            l_vec: y.fixed_rows::<3>(6).into(),
            theta_dyn: y[9],
            theta_dirac: y[10],
            theta_berry: y[11],
            t,
        }
    }
}

/// Projection `l_vec . p_hat`.
pub fn helicity(state: &PacketState) -> Result<f64> {
    let p = state.p.norm();
    if p <= DEFAULT_P_MIN {
        return Err(Error::MonopoleSingularity { magnitude: p, p_min: DEFAULT_P_MIN });
    }
    Ok(state.l_vec.dot(&state.p) / p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OamModel {
    Slaved,
    Precessing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Rk4,
    DormandPrince,
}

/// How the implicit velocity equations are closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquationForm {
    /// Exact linear solve.
    Exact,
    /// Substitute the zeroth-order velocity into the Berry and Lorentz terms.
    FirstOrder,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4 and initial step for the adaptive method.
    /// `None` picks 1/200 of the shortest field timescale.
    pub step: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub oam_model: OamModel,
    pub t_final: f64,
    pub output_stride: usize,
    pub equations: EquationForm,
    /// Misalignment angle (rad) between `l_vec` and `p_hat` that triggers the validity warning.
    pub validity_threshold: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk4,
            step: None,
            rtol: 1e-10,
            atol: 1e-12,
            oam_model: OamModel::Slaved,
            t_final: 100.0,
            output_stride: 1,
            equations: EquationForm::Exact,
            validity_threshold: 1e-3,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1e-12..=1e-3).contains(&self.rtol) {
            return Err(Error::invalid("rtol", format!("{} outside [1e-12, 1e-3]", self.rtol)));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(Error::invalid("atol", "must be positive"));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid("t_final", "must be non-negative and finite"));
        }
        if let Some(h) = self.step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid("step", "must be positive and finite"));
            }
        }
        if self.output_stride == 0 {
            return Err(Error::invalid("output_stride", "must be at least 1"));
        }
        if !(self.validity_threshold > 0.0) {
            return Err(Error::invalid("validity_threshold", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Velocities {
    pub r_dot: Vector3<f64>,
    pub p_dot: Vector3<f64>,
}

/// Phase accumulation rates in radians per unit time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseRates {
    pub dynamical: f64,
    pub dirac: f64,
    /// `None` when `p` sits on the gauge string.
    pub berry: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub state: PacketState,
    pub helicity: f64,
    pub energy: f64,
    pub d_factor: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub warnings: Vec<Warning>,
    /// Gauge of the Dirac phase column.
    pub field_gauge: String,
    /// Largest angle between `l_vec` and `sign(l) p_hat` seen at any step.
    pub max_misalignment: f64,
    /// Largest `|l_vec . p_hat - l|` seen at any step.
    pub max_helicity_drift: f64,
    pub geometric_berry_steps: usize,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }

    pub fn validity_warning(&self) -> Option<(f64, f64)> {
        self.warnings.iter().find_map(|w| match w {
            Warning::ModelValidity { t, angle } => Some((*t, *angle)),
            _ => None,
        })
    }
}

/// An aborted integration with everything computed before the failure.
#[derive(Debug, thiserror::Error)]
#[error("integration aborted at t = {t}: {error}")]
pub struct IntegrationFailure {
    pub t: f64,
    #[source]
    pub error: Error,
    pub partial: Trajectory,
}

impl From<IntegrationFailure> for Error {
    fn from(f: IntegrationFailure) -> Self {
        f.error
    }
}

/// A mode with vortex strength `l` moving in a static field.
#[derive(Clone, Debug)]
pub struct PacketDynamics {
    pub units: UnitSystem,
    pub field: FieldConfig,
    pub zeeman: ZeemanParams,
    pub p_min: f64,
}

impl PacketDynamics {
    pub fn new(units: UnitSystem, field: FieldConfig, l: i32) -> Self {
        let zeeman = ZeemanParams::from_field(&units, l, &field);
        PacketDynamics { units, field, zeeman, p_min: DEFAULT_P_MIN }
    }

    pub fn l(&self) -> i32 {
        self.zeeman.l
    }

    fn hbar_l(&self) -> f64 {
        self.units.hbar * self.zeeman.l as f64
    }

    fn check_p(&self, p: &Vector3<f64>) -> Result<f64> {
        let m = p.norm();
        if !(m > self.p_min) {
            return Err(Error::MonopoleSingularity { magnitude: m, p_min: self.p_min });
        }
        Ok(m)
    }

    /// `D = 1 - e hbar l B . curv`.
    pub fn d_factor(&self, r: &Vector3<f64>, p: &Vector3<f64>) -> Result<f64> {
        let curv = berry_curvature_with(p, self.p_min)?;
        let b = self.field.magnetic(r);
        Ok(1.0 - self.units.charge * self.hbar_l() * b.dot(&curv))
    }

    /// Slaved Zeeman energy at `(r, p)`.
    pub fn zeeman_energy(&self, r: &Vector3<f64>, p: &Vector3<f64>) -> Result<f64> {
        let m = self.check_p(p)?;
        let l_vec = self.zeeman.l as f64 * p / m;
        Ok(zeeman_energy(&self.zeeman, &l_vec, &self.field.magnetic(r)))
    }

    /// `H = p^2/2m + e Phi + Delta`.
    pub fn hamiltonian(&self, r: &Vector3<f64>, p: &Vector3<f64>) -> Result<f64> {
        Ok(p.norm_squared() / (2.0 * self.units.mass)
            + self.units.charge * self.field.scalar_potential(r)
            + self.zeeman_energy(r, p)?)
    }

    /// `(dH/dr, dH/dp)`.
    pub fn hamiltonian_gradient(
        &self,
        r: &Vector3<f64>,
        p: &Vector3<f64>,
    ) -> Result<(Vector3<f64>, Vector3<f64>)> {
        self.check_p(p)?;
        let (dd_r, dd_p) = zeeman_gradients(&self.zeeman, r, p, &self.field)?;
        let e = self.field.electric(r);
        Ok((-self.units.charge * e + dd_r, p / self.units.mass + dd_p))
    }

    /// Solve the coupled velocity equations exactly.
    pub fn rhs_solve(&self, state: &PacketState) -> Result<Velocities> {
        self.velocities(&state.r, &state.p, EquationForm::Exact)
    }

    pub fn velocities(&self, r: &Vector3<f64>, p: &Vector3<f64>, form: EquationForm) -> Result<Velocities> {
        self.check_p(p)?;
        let sample = self.field.eval(r)?;
        let (dd_r, dd_p) = zeeman_gradients(&self.zeeman, r, p, &self.field)?;
        let e = self.units.charge;
        let b = sample.magnetic;
        let curv = berry_curvature_with(p, self.p_min)?;
        let k = self.hbar_l();
        let force0 = e * sample.electric - dd_r;
        let vel0 = p / self.units.mass + dd_p;

        let r_dot = match form {
            EquationForm::Exact => {
                let d = 1.0 - e * k * b.dot(&curv);
                if d.abs() <= D_FLOOR {
                    return Err(Error::Degenerate { d });
                }
                // v + k e (v x B) x curv = V0 - k F0 x curv, i.e.
                // (D + k e B curv^T) v = rhs; since D + k e curv.B = 1 the
                // rank-one update inverts to v = (rhs - k e B (curv.rhs)) / D
                let rhs = vel0 - k * force0.cross(&curv);
                (rhs - (k * e * curv.dot(&rhs)) * b) / d
            }
            EquationForm::FirstOrder => {
                let p_dot0 = force0 + e * vel0.cross(&b);
                vel0 - k * p_dot0.cross(&curv)
            }
        };
        let p_dot = force0 + e * r_dot.cross(&b);
        Ok(Velocities { r_dot, p_dot })
    }

    /// Precession rate of the intrinsic OAM vector.
    pub fn precess_oam(&self, state: &PacketState) -> Result<Vector3<f64>> {
        let pm = self.check_p(&state.p)?;
        let e = self.units.charge;
        let b = self.field.magnetic(&state.r);
        let ef = self.field.electric(&state.r);
        let omega = 0.5 * self.zeeman.g_factor * e / self.units.mass * b
            + e * ef.cross(&state.p) / (pm * pm);
        Ok(-omega.cross(&state.l_vec))
    }

    pub fn phase_rates(&self, state: &PacketState, vel: &Velocities) -> Result<PhaseRates> {
        let hbar = self.units.hbar;
        let energy = self.hamiltonian(&state.r, &state.p)?;
        let dynamical = (state.p.dot(&vel.r_dot) - energy) / hbar;
        let dirac = self.units.charge * self.field.vector_potential(&state.r).dot(&vel.r_dot) / hbar;
        let berry = match berry_connection(&state.p) {
            Ok(a) => Some(self.zeeman.l as f64 * a.dot(&vel.p_dot)),
            Err(Error::GaugeString { .. }) => None,
            Err(err) => return Err(err),
        };
        Ok(PhaseRates { dynamical, dirac, berry })
    }

    /// Default step: 1/200 of the shortest of the cyclotron period and
    /// `|p|/(|e| |E|)` at the initial point.
    pub fn default_step(&self, state: &PacketState, t_final: f64) -> f64 {
        let (e_mag, b_mag) = self.field.scale_at(&state.r);
        let mut scale = f64::INFINITY;
        if b_mag > 0.0 {
            scale = scale.min(2.0 * std::f64::consts::PI / self.units.cyclotron_frequency(b_mag));
        }
        if e_mag > 0.0 {
            scale = scale.min(state.p.norm() / (self.units.charge.abs() * e_mag));
        }
        if scale.is_finite() {
            scale / 200.0
        } else {
            (t_final / 1000.0).max(f64::MIN_POSITIVE)
        }
    }

    fn ode_rhs(
        &self,
        y: &State<DIM>,
        form: EquationForm,
        model: OamModel,
        geometric_berry: bool,
    ) -> Result<State<DIM>> {
        let state = PacketState::from_vector(y, 0.0);
        let vel = self.velocities(&state.r, &state.p, form)?;
        let mut dy = State::<DIM>::zeros();
        dy.fixed_rows_mut::<3>(0).copy_from(&vel.r_dot);
        dy.fixed_rows_mut::<3>(3).copy_from(&vel.p_dot);
        if model == OamModel::Precessing {
            dy.fixed_rows_mut::<3>(6).copy_from(&self.precess_oam(&state)?);
        }
        let rates = self.phase_rates(&state, &vel)?;
        dy[9] = rates.dynamical;
        dy[10] = rates.dirac;
        dy[11] = if geometric_berry { 0.0 } else { rates.berry.unwrap_or(0.0) };
        Ok(dy)
    }

    fn point(&self, state: PacketState) -> Result<TrajectoryPoint> {
        Ok(TrajectoryPoint {
            helicity: helicity(&state)?,
            energy: self.hamiltonian(&state.r, &state.p)?,
            d_factor: self.d_factor(&state.r, &state.p)?,
            state,
        })
    }

    /// Integrate from `state0` over `icfg.t_final`.
    pub fn integrate(
        &self,
        state0: &PacketState,
        icfg: &IntegratorConfig,
    ) -> std::result::Result<Trajectory, IntegrationFailure> {
        let mut traj = Trajectory { field_gauge: self.field.gauge_label().to_string(), ..Default::default() };
        let fail = |t: f64, error: Error, traj: Trajectory| IntegrationFailure { t, error, partial: traj };
        if let Err(e) = icfg.validate() {
            return Err(fail(state0.t, e, traj));
        }
        let mut state = *state0;
        let l = self.zeeman.l as f64;
        let l_norm = state.l_vec.norm();
        if icfg.oam_model == OamModel::Slaved {
            match self.check_p(&state.p) {
                Ok(m) => state.l_vec = l * state.p / m,
                Err(e) => return Err(fail(state.t, e, traj)),
            }
        }
        match self.point(state) {
            Ok(pt) => traj.points.push(pt),
            Err(e) => return Err(fail(state.t, e, traj)),
        }

        let t0 = state.t;
        let t_end = t0 + icfg.t_final;
        let base_step = icfg.step.unwrap_or_else(|| self.default_step(&state, icfg.t_final));
        let fixed_steps = (icfg.t_final / base_step).ceil().max(1.0) as usize;
        let fixed_h = icfg.t_final / fixed_steps as f64;
        let check_validity = icfg.oam_model == OamModel::Precessing && self.zeeman.g_factor != 2.0;
        let mut y = state.to_vector();
        let mut t = t0;
        let mut h = base_step.min(icfg.t_final);
        let mut steps = 0usize;
        let mut d_flagged = false;

        while t < t_end && icfg.t_final > 0.0 {
            let p_old = state.p;
            let geometric = 1.0 + p_old.z / p_old.norm() < STRING_MARGIN;
            let mut rhs = |_t: f64, y: &State<DIM>| self.ode_rhs(y, icfg.equations, icfg.oam_model, geometric);

            let (y_new, t_new) = match icfg.method {
                Method::Rk4 => {
                    let t_new = if steps + 1 == fixed_steps { t_end } else { t0 + (steps + 1) as f64 * fixed_h };
                    match rk4_step(&mut rhs, t, &y, t_new - t) {
                        Ok(v) => (v, t_new),
                        Err(e) => return Err(fail(t, e, traj)),
                    }
                }
                Method::DormandPrince => loop {
                    let step = h.min(t_end - t);
                    let (y5, err) = match dopri5_step(&mut rhs, t, &y, step) {
                        Ok(v) => v,
                        Err(e) => return Err(fail(t, e, traj)),
                    };
                    let en = error_norm(&err, &y, &y5, icfg.rtol, icfg.atol);
                    let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                    if en <= 1.0 {
                        h = step * factor;
                        let t_new = if t_end - (t + step) <= 1e-14 * t_end.abs().max(1.0) { t_end } else { t + step };
                        break (y5, t_new);
                    }
                    h = step * factor;
                    if h < 1e-14 * t_end.abs().max(1.0) {
                        return Err(fail(t, Error::invalid("step", "adaptive step underflow"), traj));
                    }
                },
            };
            y = y_new;
            t = t_new;
            steps += 1;

            let mut new_state = PacketState::from_vector(&y, t);
            let pm = match self.check_p(&new_state.p) {
                Ok(m) => m,
                Err(e) => return Err(fail(t, e, traj)),
            };
            if geometric {
                let a = p_old.normalize();
                let b = new_state.p / pm;
                new_state.theta_berry -= l * edge_solid_angle(&a, &b);
                traj.geometric_berry_steps += 1;
            }
            match icfg.oam_model {
                OamModel::Slaved => new_state.l_vec = l * new_state.p / pm,
                OamModel::Precessing => {
                    let n = new_state.l_vec.norm();
                    if n > 0.0 {
                        new_state.l_vec *= l_norm / n;
                    }
                }
            }
            y = new_state.to_vector();
            state = new_state;

            let p_hat = state.p / pm;
            let reference = if l < 0.0 { -p_hat } else { p_hat };
            let misalignment = if l == 0.0 || state.l_vec.norm() == 0.0 {
                0.0
            } else {
                state.l_vec.cross(&reference).norm().atan2(state.l_vec.dot(&reference))
            };
            traj.max_misalignment = traj.max_misalignment.max(misalignment);
            traj.max_helicity_drift = traj.max_helicity_drift.max((state.l_vec.dot(&p_hat) - l).abs());
            if check_validity
                && misalignment > icfg.validity_threshold
                && traj.validity_warning().is_none()
                && self.field.magnetic(&state.r).norm() > 0.0
            {
                traj.warnings.push(Warning::ModelValidity { t, angle: misalignment });
            }

            if steps % icfg.output_stride == 0 || t >= t_end {
                let pt = match self.point(state) {
                    Ok(pt) => pt,
                    Err(e) => return Err(fail(t, e, traj)),
                };
                if pt.d_factor <= 0.0 && !d_flagged {
                    traj.warnings.push(Warning::NonPositiveDensity { d: pt.d_factor });
                    d_flagged = true;
                }
                traj.points.push(pt);
            }
        }
        traj.steps = steps;
        if traj.geometric_berry_steps > 0 {
            traj.warnings.push(Warning::BerryGeometricFallback { steps: traj.geometric_berry_steps });
        }
        Ok(traj)
    }
}
