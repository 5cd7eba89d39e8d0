//! Polynomial bump kernel used for every mollification in x and in ξ.

use crate::error::{invalid, Result};

const NORM: f64 = 315.0 / 256.0;

/// `ρ(z) = (315/256)(1 - z²)⁴` on `[-1, 1]`, zero outside.
pub fn kernel(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - z * z;
    NORM * (s * s) * (s * s)
}

/// `ρ'(z)`.
pub fn kernel_deriv(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - z * z;
    -8.0 * NORM * z * s * s * s
}

/// `ρ_ε(x) = ρ(x/ε)/ε`.
pub fn scaled(x: f64, eps: f64) -> f64 {
    kernel(x / eps) / eps
}

/// `ρ_ε'(x)`.
pub fn scaled_deriv(x: f64, eps: f64) -> f64 {
    kernel_deriv(x / eps) / (eps * eps)
}

/// Mollification scales in x and in ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    pub eps_x: f64,
    pub delta_xi: f64,
}

impl MollifierSpec {
    pub fn new(eps_x: f64, delta_xi: f64) -> Result<Self> {
        if !(eps_x > 0.0 && eps_x.is_finite()) || !(delta_xi > 0.0 && delta_xi.is_finite()) {
            return invalid(format!("mollifier scales must be positive, got ({eps_x}, {delta_xi})"));
        }
        Ok(MollifierSpec { eps_x, delta_xi })
    }
}

/// Discrete kernel weights `ρ_ε(k h) h` for `|k h| < ε`, index `k + radius`.
pub fn lattice_weights(eps: f64, h: f64) -> Vec<f64> {
    let r = (eps / h).floor() as i64;
    (-r..=r).map(|k| scaled(k as f64 * h, eps) * h).collect()
}

/// Discrete derivative weights `ρ_ε'(k h) h`, same layout as [`lattice_weights`].
pub fn lattice_deriv_weights(eps: f64, h: f64) -> Vec<f64> {
    let r = (eps / h).floor() as i64;
    (-r..=r).map(|k| scaled_deriv(k as f64 * h, eps) * h).collect()
}
