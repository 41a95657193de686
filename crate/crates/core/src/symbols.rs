//! Closed-form symbols used as references: constants, Gaussians, the phase of the
//! first coordinate, and a compactly supported bump.

use crate::operator::{SymbolFunction, SymbolShape};
use crate::{norm_sqr, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// `f(z) = exp(-a |z|^2)`, `a > 0`; tends to 0 in every direction.
pub fn gaussian(a: f64) -> SymbolFunction {
    SymbolFunction::new(move |z| C64::new((-a * norm_sqr(z)).exp(), 0.0), 1.0)
        .with_limits(|_| C64::new(0.0, 0.0))
        .with_shape(SymbolShape::Gaussian {
            amplitude: C64::new(1.0, 0.0),
            rate: a,
        })
}

/// `f(z) = z_1 / |z_1|` with `f = 0` where `z_1 = 0`. Along a direction `x` the
/// limit is `x_1 / |x_1|` (0 when `x_1 = 0`).
pub fn phase() -> SymbolFunction {
    SymbolFunction::new(|z| unit(z[0]), 1.0).with_limits(|x| unit(x[0]))
}

/// `f(z) = max(0, 1 - |z|^2 / r^2)`, supported in the ball of radius `r`.
pub fn bump(r: f64) -> SymbolFunction {
    SymbolFunction::new(
        move |z| C64::new((1.0 - norm_sqr(z) / (r * r)).max(0.0), 0.0),
        1.0,
    )
    .with_limits(|_| C64::new(0.0, 0.0))
}

fn unit(z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        z / r
    }
}
