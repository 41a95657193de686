//! One-dimensional Gaussian rules.
//!
//! The radial rule used by the polar tensor grids integrates against
//! `2 rho exp(-rho^2) d rho` on `[0, inf)`. In the variable `s = rho^2` this is the
//! Laguerre weight `exp(-s) ds`, but building the rule in `rho` makes odd powers of
//! `|w|` exact as well, which matters for phase-type symbols whose matrix entries
//! are half-integer Gamma values.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, FockError};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if order == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Three-term recurrence `x q_k = sqrt(b_{k+1}) q_{k+1} + a_k q_k + sqrt(b_k) q_{k-1}`
/// of the orthonormal polynomials of a measure with total mass `b_0`.
#[derive(Debug, Clone)]
pub struct Recurrence {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Recurrence coefficients of `2 rho exp(-rho^2) d rho` (total mass 1), by
/// Lanczos iteration with full reorthogonalization on a fine composite
/// Gauss–Legendre discretization of `[0, L]`.
pub fn radial_recurrence(order: usize) -> Recurrence {
    let upper = 2.0 * (order as f64).sqrt() + 12.0;
    let panels = (upper / 0.5).ceil() as usize;
    let width = upper / panels as f64;
    let (gl_x, gl_w) = gauss_legendre(20);

    let mut xs = Vec::with_capacity(panels * gl_x.len());
    let mut ws = Vec::with_capacity(panels * gl_x.len());
    for p in 0..panels {
        let a = p as f64 * width;
        for (x, w) in gl_x.iter().zip(&gl_w) {
            let rho = a + 0.5 * width * (x + 1.0);
            xs.push(rho);
            ws.push(0.5 * width * w * 2.0 * rho * (-rho * rho).exp());
        }
    }

    let mass: f64 = ws.iter().sum();
    let sqrt_w: Vec<f64> = ws.iter().map(|w| w.sqrt()).collect();
    // Orthonormal vectors q_k(x_i) * sqrt(w_i) in the discrete inner product.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
    basis.push(sqrt_w.iter().map(|s| s / mass.sqrt()).collect());

    let mut alpha = Vec::with_capacity(order);
    let mut beta = Vec::with_capacity(order);
    beta.push(mass);
    for k in 0..order {
        let q = &basis[k];
        let a: f64 = q.iter().zip(&xs).map(|(q, x)| q * q * x).sum();
        alpha.push(a);
        if k + 1 == order {
            break;
        }
        let mut r: Vec<f64> = q.iter().zip(&xs).map(|(q, x)| (x - a) * q).collect();
        if k > 0 {
            let b = beta[k].sqrt();
            for (ri, qi) in r.iter_mut().zip(&basis[k - 1]) {
                *ri -= b * qi;
            }
        }
        for _ in 0..2 {
            for prev in &basis {
                let c: f64 = r.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (ri, pi) in r.iter_mut().zip(prev) {
                    *ri -= c * pi;
                }
            }
        }
        let b: f64 = r.iter().map(|x| x * x).sum();
        beta.push(b);
        let norm = b.sqrt();
        basis.push(r.into_iter().map(|x| x / norm).collect());
    }
    Recurrence { alpha, beta }
}

/// Gauss rule for `2 rho exp(-rho^2) d rho` on `[0, inf)`; weights sum to 1 and the
/// rule is exact for `rho^k`, `k <= 2 order - 1`.
pub fn radial_gauss(order: usize) -> Result<(Vec<f64>, Vec<f64>), FockError> {
    if order == 0 {
        return Err(invalid("radial order must be at least 1"));
    }
    let rec = radial_recurrence(order);
    let jacobi = DMatrix::from_fn(order, order, |i, j| {
        if i == j {
            rec.alpha[i]
        } else if i + 1 == j {
            rec.beta[j].sqrt()
        } else if j + 1 == i {
            rec.beta[i].sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut weights = Vec::with_capacity(order);
    for x in nodes.iter_mut() {
        // Newton polish on the orthonormal q_order.
        for _ in 0..3 {
            let (q, dq, _) = orthonormal_eval(&rec, order, *x);
            if dq == 0.0 {
                break;
            }
            let step = q / dq;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs() {
                break;
            }
        }
        let (_, _, sum_sq) = orthonormal_eval(&rec, order, *x);
        weights.push(1.0 / sum_sq);
    }
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && (total - 1.0).abs() < 1e-10) {
        return Err(invalid("radial Gauss rule construction lost accuracy"));
    }
    Ok((nodes, weights))
}

/// Evaluates the orthonormal polynomial of degree `order` (scaled by the leading
/// recurrence coefficient, so only its zeros matter), its derivative, and
/// `sum_{k < order} q_k(x)^2` for the Christoffel weights.
fn orthonormal_eval(rec: &Recurrence, order: usize, x: f64) -> (f64, f64, f64) {
    let mut q_prev = 0.0;
    let mut q = 1.0 / rec.beta[0].sqrt();
    let mut dq_prev = 0.0;
    let mut dq = 0.0;
    let mut sum_sq = q * q;
    for k in 0..order {
        let b_next = if k + 1 < rec.beta.len() {
            rec.beta[k + 1].sqrt()
        } else {
            1.0
        };
        let b_k = if k > 0 { rec.beta[k].sqrt() } else { 0.0 };
        let q_next = ((x - rec.alpha[k]) * q - b_k * q_prev) / b_next;
        let dq_next = (q + (x - rec.alpha[k]) * dq - b_k * dq_prev) / b_next;
        q_prev = q;
        q = q_next;
        dq_prev = dq;
        dq = dq_next;
        if k + 1 < order {
            sum_sq += q * q;
        }
    }
    (q, dq, sum_sq)
}
