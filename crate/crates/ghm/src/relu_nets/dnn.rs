//! Simple feed-forward networks with explicit weights.
//!
//! A network is an ordered list of layers; layer `k` maps an input vector
//! `u` to `w_k * sigma(u - v_k)` where `sigma` acts elementwise. The final
//! layer produces a scalar. Weights are immutable after construction and
//! safe to share across threads.

use crate::error::{ensure_dim, Result};

use super::activation::Activation;

/// One layer: shift vector applied inside the activation, then a linear map.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Shift `v_k`, same length as the layer input.
    pub shift: Vec<f64>,
    /// Weight matrix `w_k`, stored row-major; `weight[i].len() == shift.len()`.
    pub weight: Vec<Vec<f64>>,
}

/// Shift vectors and weight matrices of a simple DNN.
#[derive(Debug, Clone, PartialEq)]
pub struct DnnWeights {
    layers: Vec<Layer>,
}

impl DnnWeights {
    /// Validates chain compatibility and the scalar output requirement.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        ensure_dim(!layers.is_empty(), "network needs at least one layer")?;
        for (k, layer) in layers.iter().enumerate() {
            ensure_dim(
                !layer.weight.is_empty(),
                format!("layer {k} has an empty weight matrix"),
            )?;
            for row in &layer.weight {
                ensure_dim(
                    row.len() == layer.shift.len(),
                    format!(
                        "layer {k}: weight row length {} != shift length {}",
                        row.len(),
                        layer.shift.len()
                    ),
                )?;
            }
            if k + 1 < layers.len() {
                ensure_dim(
                    layers[k + 1].shift.len() == layer.weight.len(),
                    format!("layer {} input dim != layer {k} output dim", k + 1),
                )?;
            }
        }
        ensure_dim(
            layers.last().unwrap().weight.len() == 1,
            "final layer must produce a scalar",
        )?;
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Input dimension expected by the first layer.
    pub fn input_dim(&self) -> usize {
        self.layers[0].shift.len()
    }
}

/// Evaluate the network on `u` with the given activation.
pub fn dnn_forward(u: &[f64], weights: &DnnWeights, activation: Activation) -> Result<f64> {
    ensure_dim(
        u.len() == weights.input_dim(),
        format!(
            "input length {} != first-layer dimension {}",
            u.len(),
            weights.input_dim()
        ),
    )?;
    let mut state = u.to_vec();
    let mut next = Vec::new();
    for layer in &weights.layers {
        for (s, v) in state.iter_mut().zip(&layer.shift) {
            *s = activation.apply(*s - v);
        }
        next.clear();
        next.extend(layer.weight.iter().map(|row| {
            row.iter()
                .zip(&state)
                .fold(0.0, |acc, (w, s)| acc + w * s)
        }));
        std::mem::swap(&mut state, &mut next);
    }
    Ok(state[0])
}

/// Value and directional derivative of the network along the input
/// direction `du`, propagated with the piecewise chain rule.
///
/// `on_kink` is set when some ReLU pre-activation with a nonzero incoming
/// derivative sits exactly at 0, i.e. the `sigma'(0) := 0` convention was
/// actually exercised. Smoothed activations never set the flag.
pub fn dnn_forward_dual(
    u: &[f64],
    du: &[f64],
    weights: &DnnWeights,
    activation: Activation,
) -> Result<DualOutput> {
    ensure_dim(
        u.len() == weights.input_dim() && du.len() == u.len(),
        "input/direction length must match the first-layer dimension",
    )?;
    let mut val = u.to_vec();
    let mut der = du.to_vec();
    let mut next_val = Vec::new();
    let mut next_der = Vec::new();
    let mut on_kink = false;
    for layer in &weights.layers {
        for ((x, dx), v) in val.iter_mut().zip(der.iter_mut()).zip(&layer.shift) {
            let pre = *x - v;
            if activation == Activation::Relu && pre == 0.0 && *dx != 0.0 {
                on_kink = true;
            }
            *x = activation.apply(pre);
            *dx *= activation.grad(pre);
        }
        next_val.clear();
        next_der.clear();
        for row in &layer.weight {
            let mut a = 0.0;
            let mut b = 0.0;
            for ((w, x), dx) in row.iter().zip(&val).zip(&der) {
                a += w * x;
                b += w * dx;
            }
            next_val.push(a);
            next_der.push(b);
        }
        std::mem::swap(&mut val, &mut next_val);
        std::mem::swap(&mut der, &mut next_der);
    }
    Ok(DualOutput {
        value: val[0],
        derivative: der[0],
        on_kink,
    })
}

/// Result of a dual (value + derivative) forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualOutput {
    pub value: f64,
    pub derivative: f64,
    /// True when the derivative value relied on the `sigma'(0) := 0` choice.
    pub on_kink: bool,
}
