//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::Vector3;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

/// Gauss-Legendre nodes and weights on [-1, 1] via Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Maximizer of a unimodal `f` on `[a, b]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a).abs() > tol {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    0.5 * (a + b)
}

/// Plain Lorentz-force tracer: `r' = p/m`, `p' = e (E + r' x B)`, RK4.
pub fn lorentz_rk4(
    r0: Vector3<f64>,
    p0: Vector3<f64>,
    e_field: Vector3<f64>,
    b_field: Vector3<f64>,
    charge: f64,
    mass: f64,
    h: f64,
    steps: usize,
) -> (Vector3<f64>, Vector3<f64>) {
    let f = |p: &Vector3<f64>| {
        let v = p / mass;
        (v, charge * (e_field + v.cross(&b_field)))
    };
    let (mut r, mut p) = (r0, p0);
    for _ in 0..steps {
        let (v1, f1) = f(&p);
        let (v2, f2) = f(&(p + 0.5 * h * f1));
        let (v3, f3) = f(&(p + 0.5 * h * f2));
        let (v4, f4) = f(&(p + h * f3));
        r += h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
        p += h / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
    }
    (r, p)
}

/// Central-difference gradient of a scalar function of a 3-vector.
pub fn fd_gradient(f: impl Fn(&Vector3<f64>) -> f64, x: &Vector3<f64>, h: f64) -> Vector3<f64> {
    let mut g = Vector3::zeros();
    for i in 0..3 {
        let mut e = Vector3::zeros();
        e[i] = h;
        g[i] = (f(&(x + e)) - f(&(x - e))) / (2.0 * h);
    }
    g
}

/// Central-difference Jacobian `J[(i, j)] = d f_i / d x_j`.
pub fn fd_jacobian(f: impl Fn(&Vector3<f64>) -> Vector3<f64>, x: &Vector3<f64>, h: f64) -> nalgebra::Matrix3<f64> {
    let mut j = nalgebra::Matrix3::zeros();
    for k in 0..3 {
        let mut e = Vector3::zeros();
        e[k] = h;
        let col = (f(&(x + e)) - f(&(x - e))) / (2.0 * h);
        j.set_column(k, &col);
    }
    j
}

/// Curl from a central-difference Jacobian.
pub fn fd_curl(f: impl Fn(&Vector3<f64>) -> Vector3<f64>, x: &Vector3<f64>, h: f64) -> Vector3<f64> {
    let j = fd_jacobian(f, x, h);
    Vector3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
}

/// Deterministic sampler of uniform floats.
pub struct Sampler {
    runner: TestRunner,
}

impl Sampler {
    pub fn new() -> Self {
        Sampler { runner: TestRunner::deterministic() }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (lo..hi).new_tree(&mut self.runner).expect("sample").current()
    }

    pub fn int(&mut self, lo: i32, hi_inclusive: i32) -> i32 {
        (lo..=hi_inclusive).new_tree(&mut self.runner).expect("sample").current()
    }

    pub fn vector(&mut self, scale: f64) -> Vector3<f64> {
        Vector3::new(self.uniform(-scale, scale), self.uniform(-scale, scale), self.uniform(-scale, scale))
    }

    pub fn unit(&mut self) -> Vector3<f64> {
        loop {
            let v = self.vector(1.0);
            let n = v.norm();
            if n > 0.1 && n <= 1.0 {
                return v / n;
            }
        }
    }
}

/// Wrap to (-pi, pi].
pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}
