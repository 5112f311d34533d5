//! The exact-weight product network: `m+3` hidden layers computing a value
//! within `[xy, xy + 2^{-m}]` on `C_m = [0, 1-2^{-m}] x [0, 1]`.
//!
//! The construction runs two width-3 sawtooth stacks in parallel (block
//! structure `I_2 (x) w~`), collapses them with `(-1,1,-1,1,-1,1)`, and
//! clips the difference into `[0,1]` with two scalar layers. All weights
//! are fixed; nothing is trained. On `C_m` the value equals
//!
//! ```text
//! ||R_{m+1}((x-y+1)/2)||_1 - ||R_{m+1}((x+y)/2)||_1 + (x+y+2^{-m})/2 - 1/4,
//! ```
//!
//! which the tests use as an independent oracle. The value is symmetric in
//! `(x, y)` and attains exactly 1 at `(1, 1)`.

use crate::error::{ensure_domain, Result};

use super::activation::Activation;
use super::dnn::{dnn_forward, dnn_forward_dual, DnnWeights, DualOutput, Layer};
use super::sawtooth::{tent_shift, W_TILDE};

/// Lift `(x, y)` into the 6-vector fed to [`product_weights`].
pub fn product_lift(x: f64, y: f64, m: u32) -> [f64; 6] {
    let d = x - y + 1.0;
    let s = x + y;
    let eps = f64::powi(2.0, -(m as i32));
    [0.25 * d, 0.5 * d, 0.5 * (s + eps), 0.25 * s, 0.5 * s, 0.25]
}

/// Directional lift paired with [`product_lift`] for dual evaluation.
fn product_lift_dual(dx: f64, dy: f64) -> [f64; 6] {
    let dd = dx - dy;
    let ds = dx + dy;
    [0.25 * dd, 0.5 * dd, 0.5 * ds, 0.25 * ds, 0.5 * ds, 0.0]
}

/// The fixed weights of the product network with `m+3` hidden layers.
///
/// Layer k in `[m]`: shift `1_2 (x) (0, 2^{1-2k}, 0)`, weight `I_2 (x) w~`.
/// Layer m+1: same shift family, collapsing row `(-1, 1, -1, 1, -1, 1)`.
/// Layers m+2, m+3: scalar shifts `-1` with weights `-1` and `1`, clipping
/// the output into `[0, 1]`.
pub fn product_weights(m: u32) -> DnnWeights {
    assert!(m >= 1, "product_weights requires m >= 1");
    let block: Vec<Vec<f64>> = (0..6)
        .map(|i| {
            (0..6)
                .map(|j| {
                    if i / 3 == j / 3 {
                        W_TILDE[i % 3][j % 3]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mut layers = Vec::with_capacity(m as usize + 3);
    for k in 1..=m + 1 {
        let c = tent_shift(k);
        let shift = vec![0.0, c, 0.0, 0.0, c, 0.0];
        let weight = if k <= m {
            block.clone()
        } else {
            vec![vec![-1.0, 1.0, -1.0, 1.0, -1.0, 1.0]]
        };
        layers.push(Layer { shift, weight });
    }
    layers.push(Layer {
        shift: vec![-1.0],
        weight: vec![vec![-1.0]],
    });
    layers.push(Layer {
        shift: vec![-1.0],
        weight: vec![vec![1.0]],
    });
    DnnWeights::new(layers).expect("product layers are chain-compatible by construction")
}

/// A product network with its weights built once; immutable and shareable.
#[derive(Debug, Clone)]
pub struct ProductNet {
    m: u32,
    weights: DnnWeights,
}

impl ProductNet {
    pub fn new(m: u32) -> Self {
        Self {
            m,
            weights: product_weights(m),
        }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn weights(&self) -> &DnnWeights {
        &self.weights
    }

    /// Network value at `(x, y) in [0,1]^2`; the `[xy, xy + 2^{-m}]`
    /// guarantee holds on `C_m` only.
    pub fn eval(&self, x: f64, y: f64, activation: Activation) -> Result<f64> {
        ensure_domain(
            (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y),
            format!("product net requires (x, y) in [0,1]^2, got ({x}, {y})"),
        )?;
        dnn_forward(&product_lift(x, y, self.m), &self.weights, activation)
    }

    /// Value and directional derivative along `(dx, dy)`.
    pub fn eval_dual(
        &self,
        x: f64,
        y: f64,
        dx: f64,
        dy: f64,
        activation: Activation,
    ) -> Result<DualOutput> {
        ensure_domain(
            (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y),
            format!("product net requires (x, y) in [0,1]^2, got ({x}, {y})"),
        )?;
        dnn_forward_dual(
            &product_lift(x, y, self.m),
            &product_lift_dual(dx, dy),
            &self.weights,
            activation,
        )
    }

    /// Allocation-free forward pass exploiting the block-diagonal layer
    /// structure. Performs the same floating-point operations in the same
    /// order as [`dnn_forward`] on [`product_weights`] (zero-weight terms
    /// contribute exactly nothing), so outputs agree bit-for-bit; the
    /// equivalence is asserted by tests. Skips the domain check: callers
    /// guarantee `(x, y) in [0,1]^2`.
    #[inline]
    pub(crate) fn eval_fast(&self, x: f64, y: f64, activation: Activation) -> f64 {
        let mut s = product_lift(x, y, self.m);
        for k in 1..=self.m {
            let c = tent_shift(k);
            for half in [0usize, 3] {
                let a = activation.apply(s[half]);
                let b = activation.apply(s[half + 1] - c);
                let acc = activation.apply(s[half + 2]);
                s[half] = 0.5 * a - 0.5 * b;
                s[half + 1] = a - b;
                s[half + 2] = (a - b) + acc;
            }
        }
        let c = tent_shift(self.m + 1);
        let mut q = 0.0;
        for half in [0usize, 3] {
            let sign = if half == 0 { -1.0 } else { 1.0 };
            q += sign * activation.apply(s[half]);
            q += -sign * activation.apply(s[half + 1] - c);
            q += sign * activation.apply(s[half + 2]);
        }
        let u = -activation.apply(q + 1.0);
        activation.apply(u + 1.0)
    }
}

/// One-shot evaluation of the product network; builds the weights per call.
/// Hot paths should hold a [`ProductNet`] instead.
pub fn product_net(x: f64, y: f64, m: u32) -> Result<f64> {
    ProductNet::new(m).eval(x, y, Activation::Relu)
}

/// Analytic `d/dx` of the product network, with the `sigma'(0) := 0`
/// convention; `on_kink` reports when that convention was exercised.
pub fn product_net_dx(x: f64, y: f64, m: u32) -> Result<DualOutput> {
    ProductNet::new(m).eval_dual(x, y, 1.0, 0.0, Activation::Relu)
}
