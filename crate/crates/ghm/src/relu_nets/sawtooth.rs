//! Tent-map compositions whose l1 norm approximates `g(x) = x(1-x)`.
//!
//! `T^k(x) = x/2 ∧ (2^{1-2k} - x/2)` maps `[0, 2^{2-2k}]` into
//! `[0, 2^{-2k}]`; the composition `R^k = T^k ∘ ... ∘ T^1` lives on `[0,1]`,
//! and `sum_{k<=m} R^k(x)` interpolates `g` exactly at every dyadic point
//! `j 2^{-m}` while staying within `2^{-m}` of it in between. The same map
//! is realized by a width-3 ReLU network; [`sawtooth_weights`] returns those
//! weights, and the closed-form iteration here mirrors the network's
//! arithmetic operation for operation so the two agree bit-for-bit.

use crate::error::{ensure_domain, Result};

use super::dnn::{DnnWeights, Layer};
use super::relu;

/// The 3x3 block shared by the sawtooth and product networks.
pub(crate) const W_TILDE: [[f64; 3]; 3] = [[0.5, -0.5, 0.0], [1.0, -1.0, 0.0], [1.0, -1.0, 1.0]];

/// Tent shift for level `k`: `2^{1-2k}`.
#[inline]
pub(crate) fn tent_shift(k: u32) -> f64 {
    f64::powi(2.0, 1 - 2 * k as i32)
}

/// `||R_m(x)||_1 = sum_{k=1}^m R^k(x)` on `[0,1]`, by direct tent iteration.
pub fn sawtooth_norm(x: f64, m: u32) -> Result<f64> {
    ensure_domain(
        (0.0..=1.0).contains(&x),
        format!("sawtooth_norm requires x in [0,1], got {x}"),
    )?;
    ensure_domain(m >= 1, "sawtooth_norm requires m >= 1")?;
    let mut t = x;
    let mut sum = 0.0;
    for k in 1..=m {
        // T^k(t) = sigma(t/2) - sigma(t - 2^{1-2k}); t >= 0 throughout.
        t = 0.5 * t - relu(t - tent_shift(k));
        sum += t;
    }
    Ok(sum)
}

/// Network input for [`sawtooth_weights`]: `w_in * x = (x/2, x, 0)`.
pub fn sawtooth_input(x: f64) -> [f64; 3] {
    [0.5 * x, x, 0.0]
}

/// The `m`-layer width-3 network computing `||R_m(x)||_1` from
/// [`sawtooth_input`].
///
/// Layers `1..m` carry the shared block [`W_TILDE`]; the output layer
/// collapses the state with `(1, -1, 1)`. The third state component
/// accumulates the running l1 norm.
pub fn sawtooth_weights(m: u32) -> DnnWeights {
    assert!(m >= 1, "sawtooth_weights requires m >= 1");
    let mut layers = Vec::with_capacity(m as usize);
    for k in 1..=m {
        let shift = vec![0.0, tent_shift(k), 0.0];
        let weight = if k < m {
            W_TILDE.iter().map(|row| row.to_vec()).collect()
        } else {
            vec![vec![1.0, -1.0, 1.0]]
        };
        layers.push(Layer { shift, weight });
    }
    DnnWeights::new(layers).expect("sawtooth layers are chain-compatible by construction")
}
