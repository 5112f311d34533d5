//! ReLU, its one-sided derivative convention, and the mollified variant.
//!
//! The smoothed ReLU convolves ReLU with the rescaled Epanechnikov kernel
//! `phi_s(u) = s * 0.75 (1 - (su)^2) 1{|su| <= 1}`. The convolution has a
//! closed polynomial form: with `t = su`,
//!
//! ```text
//! sigma_s(u) = u * (1/2 + 3t/4 - t^3/4) + (3/16 - 3t^2/8 + 3t^4/16) / s
//! ```
//!
//! on `|u| < 1/s`, equal to `u` for `u >= 1/s` and `0` for `u <= -1/s`.
//! The gap `sigma_s(u) - sigma(u)` is largest at the origin, where it equals
//! `3/(16 s)`.

use crate::error::{ensure_domain, Result};

/// `sigma(x) = max(x, 0)`. NaN propagates.
#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else if x.is_nan() {
        x
    } else {
        0.0
    }
}

/// One-sided derivative of ReLU with the convention `sigma'(0) := 0`.
#[inline]
pub fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Closed-form smoothed ReLU with the Epanechnikov mollifier at scale `s`.
///
/// Rejects `s = 0`.
pub fn smoothed_relu(u: f64, s: u32) -> Result<f64> {
    ensure_domain(s >= 1, "smoothed_relu requires s >= 1")?;
    Ok(smoothed_relu_unchecked(u, s))
}

#[inline]
pub(crate) fn smoothed_relu_unchecked(u: f64, s: u32) -> f64 {
    let s = f64::from(s);
    let t = s * u;
    if t >= 1.0 {
        u
    } else if t <= -1.0 {
        0.0
    } else {
        let t2 = t * t;
        u * (0.5 + 0.75 * t - 0.25 * t * t2) + (0.1875 - 0.375 * t2 + 0.1875 * t2 * t2) / s
    }
}

/// Derivative of [`smoothed_relu`] in `u`; smooth across the whole line.
#[inline]
pub(crate) fn smoothed_relu_grad(u: f64, s: u32) -> f64 {
    let t = f64::from(s) * u;
    if t >= 1.0 {
        1.0
    } else if t <= -1.0 {
        0.0
    } else {
        0.5 + 0.75 * t - 0.25 * t * t * t
    }
}

/// Activation used by network evaluation: exact ReLU or the mollified
/// `sigma_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Activation {
    Relu,
    /// Smoothed ReLU with the given scale `s >= 1`.
    Smoothed(u32),
}

impl Activation {
    #[inline]
    pub(crate) fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => relu(x),
            Activation::Smoothed(s) => smoothed_relu_unchecked(x, s),
        }
    }

    #[inline]
    pub(crate) fn grad(self, x: f64) -> f64 {
        match self {
            Activation::Relu => relu_grad(x),
            Activation::Smoothed(s) => smoothed_relu_grad(x, s),
        }
    }
}

impl Default for Activation {
    fn default() -> Self {
        Activation::Relu
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_clamps() {
        assert_eq!(relu(2.5), 2.5);
        assert_eq!(relu(-1.0), 0.0);
        assert_eq!(relu(0.0), 0.0);
        assert!(relu(f64::NAN).is_nan());
    }

    #[test]
    fn relu_grad_convention_at_zero() {
        assert_eq!(relu_grad(0.0), 0.0);
        assert_eq!(relu_grad(1e-300), 1.0);
        assert_eq!(relu_grad(-1e-300), 0.0);
    }

    #[test]
    fn smoothed_relu_matches_relu_outside_window() {
        assert_eq!(smoothed_relu(5.0, 32).unwrap(), 5.0);
        assert_eq!(smoothed_relu(-1.0, 4).unwrap(), 0.0);
        assert_eq!(smoothed_relu(1.0 / 8.0, 8).unwrap(), 1.0 / 8.0);
    }

    #[test]
    fn smoothed_relu_peak_at_origin() {
        // sigma_s(0) = 3/(16 s).
        assert_eq!(smoothed_relu(0.0, 32).unwrap(), 0.1875 / 32.0);
        assert_eq!(smoothed_relu(0.0, 1).unwrap(), 0.1875);
    }

    #[test]
    fn smoothed_relu_rejects_zero_scale() {
        assert!(smoothed_relu(1.0, 0).is_err());
    }

    #[test]
    fn smoothed_relu_grad_is_continuous_at_window_edges() {
        for s in [1u32, 4, 32] {
            let edge = 1.0 / f64::from(s);
            assert!((smoothed_relu_grad(edge, s) - 1.0).abs() < 1e-12);
            assert!(smoothed_relu_grad(-edge, s).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothed_relu_grad_matches_finite_differences() {
        let s = 8;
        for i in -20..=20 {
            let u = f64::from(i) * 0.02;
            let h = 1e-7;
            let fd = (smoothed_relu_unchecked(u + h, s) - smoothed_relu_unchecked(u - h, s))
                / (2.0 * h);
            assert!(
                (smoothed_relu_grad(u, s) - fd).abs() < 1e-6,
                "u={u}: grad {} vs fd {}",
                smoothed_relu_grad(u, s),
                fd
            );
        }
    }
}
