//! Constructive ReLU networks with exact, hard-coded weights.
//!
//! Everything here is a pure function of immutable inputs; weight structs
//! are safe to share across concurrent evaluators.

mod activation;
mod basis;
mod dnn;
mod monomial;
mod product;
mod sawtooth;

pub use activation::{relu, relu_grad, smoothed_relu, Activation};
pub use basis::{
    basis_len, enumerate_powers, local_net_basis, marginal_basis, poly_basis, LocalBasisSpec,
};
pub use dnn::{dnn_forward, dnn_forward_dual, DnnWeights, DualOutput, Layer};
pub use monomial::{
    h_max, hdnn_monomial, hdnn_monomial_partial, input_lift, monomial_error_bound, tree_levels,
    InputLift, PowerVector,
};
pub use product::{product_lift, product_net, product_net_dx, product_weights, ProductNet};
pub use sawtooth::{sawtooth_input, sawtooth_norm, sawtooth_weights};
