//! Hierarchical monomial networks: a power-of-two lift reduced through a
//! balanced binary tree of identical product networks.
//!
//! For `x in [0,h]^r` with `h <= 1 - L 2^{-m}` (`L` the tree depth), the
//! tree output stays within `[x^alpha, x^alpha + 3^{L-1} 2^{-m}]`.
//! Pairing is strictly left-to-right over the lifted vector; padding ones
//! sit at the tail, so every product node sees arguments inside the range
//! where the product-network bound applies (up to the exact `(x,y)`
//! symmetry of the net).

use crate::error::{ensure_dim, ensure_domain, Error, Result};

use super::activation::Activation;
use super::dnn::DualOutput;
use super::product::ProductNet;

/// Multi-index `alpha` in `N_0^r` naming the monomial `x^alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct PowerVector {
    exponents: Vec<u32>,
}

impl PowerVector {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        ensure_domain(!exponents.is_empty(), "power vector must be non-empty")?;
        Ok(Self { exponents })
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// `||alpha||_1`.
    pub fn norm1(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// Exponents shifted down by a 0/1 vector `delta`, clamped at zero.
    pub(crate) fn shifted_down(&self, delta: &[u32]) -> Self {
        Self {
            exponents: self
                .exponents
                .iter()
                .zip(delta)
                .map(|(&a, &d)| a.saturating_sub(d))
                .collect(),
        }
    }
}

/// Number of pairing levels: `ceil(log2 r)` for `r >= 2`, and 1 for `r = 1`
/// (the single entry is still paired with a padding one).
pub fn tree_levels(r: usize) -> u32 {
    if r <= 2 {
        1
    } else {
        (usize::BITS - (r - 1).leading_zeros()) as u32
    }
}

/// Largest admissible cube side for the monomial bound: `1 - L 2^{-m}`.
pub fn h_max(r: usize, m: u32) -> f64 {
    1.0 - f64::from(tree_levels(r)) * f64::powi(2.0, -(m as i32))
}

/// Uniform error bound of the monomial network: `3^{L-1} 2^{-m}`.
pub fn monomial_error_bound(r: usize, m: u32) -> f64 {
    f64::powi(3.0, tree_levels(r) as i32 - 1) * f64::powi(2.0, -(m as i32))
}

/// The lifted vector `(x_1^{a_1}, ..., x_r^{a_r}, 1, ..., 1)` padded to a
/// power-of-two length.
#[derive(Debug, Clone, PartialEq)]
pub struct InputLift {
    lifted: Vec<f64>,
}

impl InputLift {
    pub fn lifted(&self) -> &[f64] {
        &self.lifted
    }

    pub fn pad_count(&self, r: usize) -> usize {
        self.lifted.len() - r
    }
}

/// Lift `x` by `alpha`, padding with exact ones.
pub fn input_lift(x: &[f64], alpha: &PowerVector) -> Result<InputLift> {
    ensure_dim(
        x.len() == alpha.len(),
        format!("x has length {}, alpha has length {}", x.len(), alpha.len()),
    )?;
    let r = x.len();
    let total = if r == 1 { 2 } else { r.next_power_of_two() };
    let mut lifted = Vec::with_capacity(total);
    for (xi, &ai) in x.iter().zip(alpha.exponents()) {
        lifted.push(xi.powi(ai as i32));
    }
    lifted.resize(total, 1.0);
    Ok(InputLift { lifted })
}

fn check_admissible(x: &[f64], m: u32) -> Result<()> {
    let hm = h_max(x.len(), m);
    ensure_domain(
        hm >= 0.0,
        format!("no admissible inputs: 1 - L*2^-m = {hm} < 0 for r={}, m={m}", x.len()),
    )?;
    for (i, &xi) in x.iter().enumerate() {
        if !(0.0..=hm).contains(&xi) {
            return Err(Error::Domain(format!(
                "x[{i}] = {xi} outside the admissible range [0, {hm}] for r={}, m={m}",
                x.len()
            )));
        }
    }
    Ok(())
}

impl ProductNet {
    /// Tree-reduced network value approximating `x^alpha` from above.
    ///
    /// Interior tree values stay in `[0, 1]`, so the pairwise reductions
    /// run the unchecked fast forward; leaves are validated up front. An
    /// all-ones lift reduces to exactly 1 at every node (the network is
    /// exact at `(1, 1)`), so it short-circuits.
    pub fn monomial(&self, x: &[f64], alpha: &PowerVector, activation: Activation) -> Result<f64> {
        check_admissible(x, self.m())?;
        ensure_dim(
            x.len() == alpha.len(),
            format!("x has length {}, alpha has length {}", x.len(), alpha.len()),
        )?;
        const STACK: usize = 32;
        let r = x.len();
        let total = if r == 1 { 2 } else { r.next_power_of_two() };
        if total <= STACK {
            let mut buf = [1.0f64; STACK];
            for ((slot, xi), &ai) in buf.iter_mut().zip(x).zip(alpha.exponents()) {
                *slot = xi.powi(ai as i32);
            }
            if activation == Activation::Relu && buf[..total].iter().all(|&v| v == 1.0) {
                return Ok(1.0);
            }
            let mut len = total;
            while len > 1 {
                for i in 0..len / 2 {
                    buf[i] = self.eval_fast(buf[2 * i], buf[2 * i + 1], activation);
                }
                len /= 2;
            }
            return Ok(buf[0]);
        }
        let mut values = input_lift(x, alpha)?.lifted;
        while values.len() > 1 {
            let mut next = Vec::with_capacity(values.len() / 2);
            for pair in values.chunks_exact(2) {
                next.push(self.eval(pair[0], pair[1], activation)?);
            }
            values = next;
        }
        Ok(values[0])
    }

    /// Analytic `d/dx_i` of the monomial network via the chain rule through
    /// the tree; leaves differentiate to `a_i x_i^{a_i - 1}`.
    pub fn monomial_partial(
        &self,
        x: &[f64],
        alpha: &PowerVector,
        axis: usize,
        activation: Activation,
    ) -> Result<DualOutput> {
        check_admissible(x, self.m())?;
        ensure_dim(
            axis < x.len(),
            format!("axis {axis} out of range for r={}", x.len()),
        )?;
        let lift = input_lift(x, alpha)?;
        let mut values = lift.lifted;
        let mut derivs = vec![0.0; values.len()];
        let a = alpha.exponents()[axis];
        if a > 0 {
            derivs[axis] = f64::from(a) * x[axis].powi(a as i32 - 1);
        }
        let mut on_kink = false;
        while values.len() > 1 {
            let mut next_v = Vec::with_capacity(values.len() / 2);
            let mut next_d = Vec::with_capacity(values.len() / 2);
            for (pair, dpair) in values.chunks_exact(2).zip(derivs.chunks_exact(2)) {
                let out = if dpair[0] == 0.0 && dpair[1] == 0.0 {
                    // Constant subtree: skip the dual pass.
                    DualOutput {
                        value: self.eval(pair[0], pair[1], activation)?,
                        derivative: 0.0,
                        on_kink: false,
                    }
                } else {
                    self.eval_dual(pair[0], pair[1], dpair[0], dpair[1], activation)?
                };
                on_kink |= out.on_kink;
                next_v.push(out.value);
                next_d.push(out.derivative);
            }
            values = next_v;
            derivs = next_d;
        }
        Ok(DualOutput {
            value: values[0],
            derivative: derivs[0],
            on_kink,
        })
    }
}

/// One-shot monomial network evaluation; builds the product weights per
/// call. Hot paths should hold a [`ProductNet`].
pub fn hdnn_monomial(x: &[f64], alpha: &PowerVector, m: u32) -> Result<f64> {
    ProductNet::new(m).monomial(x, alpha, Activation::Relu)
}

/// One-shot analytic partial derivative of the monomial network.
pub fn hdnn_monomial_partial(
    x: &[f64],
    alpha: &PowerVector,
    m: u32,
    axis: usize,
) -> Result<DualOutput> {
    ProductNet::new(m).monomial_partial(x, alpha, axis, Activation::Relu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_levels_and_padding() {
        assert_eq!(tree_levels(1), 1);
        assert_eq!(tree_levels(2), 1);
        assert_eq!(tree_levels(3), 2);
        assert_eq!(tree_levels(4), 2);
        assert_eq!(tree_levels(5), 3);
        assert_eq!(tree_levels(8), 3);

        let alpha = PowerVector::new(vec![1, 1, 1]).unwrap();
        let lift = input_lift(&[0.1, 0.2, 0.3], &alpha).unwrap();
        assert_eq!(lift.lifted(), &[0.1, 0.2, 0.3, 1.0]);
        assert_eq!(lift.pad_count(3), 1);

        let alpha1 = PowerVector::new(vec![2]).unwrap();
        let lift1 = input_lift(&[0.5], &alpha1).unwrap();
        assert_eq!(lift1.lifted(), &[0.25, 1.0]);
        assert_eq!(lift1.pad_count(1), 1);
    }

    #[test]
    fn zero_alpha_gives_exact_one() {
        for r in [1usize, 2, 3, 5] {
            let alpha = PowerVector::new(vec![0; r]).unwrap();
            let x = vec![0.37_f64.min(h_max(r, 4)); r];
            assert_eq!(hdnn_monomial(&x, &alpha, 4).unwrap(), 1.0);
        }
    }

    #[test]
    fn single_pair_matches_product_net() {
        // r=2, alpha=(1,1) at (0.5,0.5), m=1 is one product node and the
        // admissible boundary h = 1 - 2^{-1} = 0.5.
        let alpha = PowerVector::new(vec![1, 1]).unwrap();
        assert_eq!(hdnn_monomial(&[0.5, 0.5], &alpha, 1).unwrap(), 0.5);
    }

    #[test]
    fn linear_monomial_in_three_dims_stays_in_band() {
        let alpha = PowerVector::new(vec![1, 0, 0]).unwrap();
        let m = 5;
        let bound = monomial_error_bound(3, m);
        assert_eq!(bound, 3.0 * f64::powi(2.0, -5));
        let v = hdnn_monomial(&[0.2, 0.1, 0.0], &alpha, m).unwrap();
        assert!(v >= 0.2 && v <= 0.2 + bound, "{v}");
    }

    #[test]
    fn value_ignores_coordinates_with_zero_exponent() {
        let alpha = PowerVector::new(vec![2, 0, 1]).unwrap();
        let m = 6;
        let a = hdnn_monomial(&[0.3, 0.0, 0.4], &alpha, m).unwrap();
        let b = hdnn_monomial(&[0.3, 0.7, 0.4], &alpha, m).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn admissibility_is_enforced() {
        let alpha = PowerVector::new(vec![1, 1, 1]).unwrap();
        // h_max(3, 2) = 1 - 2/4 = 0.5.
        assert!(hdnn_monomial(&[0.6, 0.1, 0.1], &alpha, 2).is_err());
        assert!(hdnn_monomial(&[-0.1, 0.1, 0.1], &alpha, 2).is_err());
        assert!(hdnn_monomial(&[0.4, 0.1, 0.1], &alpha, 2).is_ok());
    }

    #[test]
    fn partial_of_constant_is_zero() {
        let alpha = PowerVector::new(vec![0, 0]).unwrap();
        let out = hdnn_monomial_partial(&[0.3, 0.4], &alpha, 5, 0).unwrap();
        assert_eq!(out.derivative, 0.0);
    }

    #[test]
    fn partial_of_linear_tracks_one() {
        let alpha = PowerVector::new(vec![1, 0]).unwrap();
        let out = hdnn_monomial_partial(&[0.3, 0.4], &alpha, 5, 0).unwrap();
        assert!(
            (out.derivative - 1.0).abs() <= f64::powi(2.0, -5),
            "{}",
            out.derivative
        );
    }

    #[test]
    fn partial_matches_central_differences_off_kinks() {
        let alpha = PowerVector::new(vec![2, 1]).unwrap();
        let m = 4;
        let net = ProductNet::new(m);
        let h = 1e-6;
        for &(x1, x2) in &[(0.123, 0.321), (0.41, 0.17), (0.051, 0.44)] {
            let out = net
                .monomial_partial(&[x1, x2], &alpha, 0, Activation::Relu)
                .unwrap();
            let up = net
                .monomial(&[x1 + h, x2], &alpha, Activation::Relu)
                .unwrap();
            let dn = net
                .monomial(&[x1 - h, x2], &alpha, Activation::Relu)
                .unwrap();
            let fd = (up - dn) / (2.0 * h);
            assert!(!out.on_kink);
            assert!(
                (out.derivative - fd).abs() <= 1e-4,
                "({x1},{x2}): {} vs {fd}",
                out.derivative
            );
        }
    }

    #[test]
    fn partial_within_lemma_bound_against_true_derivative() {
        let alpha = PowerVector::new(vec![2, 1, 0]).unwrap();
        let m = 5;
        let bound = monomial_error_bound(3, m) * f64::from(alpha.norm1());
        for &(x1, x2, x3) in &[(0.3, 0.2, 0.1), (0.05, 0.4, 0.0), (0.25, 0.25, 0.25)] {
            let out = hdnn_monomial_partial(&[x1, x2, x3], &alpha, m, 0).unwrap();
            let truth = 2.0 * x1 * x2;
            assert!(
                (out.derivative - truth).abs() <= bound,
                "({x1},{x2},{x3}): {} vs {truth}",
                out.derivative
            );
        }
    }
}
