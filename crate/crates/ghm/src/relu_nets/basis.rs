//! Local polynomial bases: exact re-centred monomials, their network
//! counterparts, and the differentiated basis for marginal effects.
//!
//! Basis entries are ordered by total degree, then lexicographically with
//! the first coordinate dominant (graded lex). The constant monomial is
//! always entry 0. Coefficients fitted against one ordering are meaningless
//! under another, so the ordering is fixed here and nowhere else.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_domain, Result};

use super::activation::Activation;
use super::monomial::{input_lift, PowerVector};
use super::product::ProductNet;

/// Enumerate all multi-indices with `|alpha| <= vartheta` in graded lex
/// order: `(0,..,0); (1,0,..), (0,1,..), ...; (2,0,..), (1,1,..), ...`.
pub fn enumerate_powers(r: usize, vartheta: u32) -> Vec<PowerVector> {
    fn rec(prefix: &mut Vec<u32>, coords_left: usize, degree_left: u32, out: &mut Vec<Vec<u32>>) {
        if coords_left == 1 {
            prefix.push(degree_left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=degree_left).rev() {
            prefix.push(e);
            rec(prefix, coords_left - 1, degree_left - e, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    for degree in 0..=vartheta {
        rec(&mut Vec::new(), r, degree, &mut raw);
    }
    raw.into_iter()
        .map(|e| PowerVector::new(e).expect("non-empty by construction"))
        .collect()
}

/// `binomial(r + vartheta, r)`, the number of basis monomials.
pub fn basis_len(r: usize, vartheta: u32) -> usize {
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 1..=r as u128 {
        num *= vartheta as u128 + i;
        den *= i;
    }
    (num / den) as usize
}

/// Dimension, degree, depth parameter, and the fixed monomial enumeration
/// of a local basis, with the product network it evaluates through.
#[derive(Debug, Clone)]
pub struct LocalBasisSpec {
    r: usize,
    vartheta: u32,
    m: u32,
    power_list: Vec<PowerVector>,
    net: ProductNet,
}

impl LocalBasisSpec {
    pub fn new(r: usize, vartheta: u32, m: u32) -> Result<Self> {
        ensure_domain(r >= 1, "basis dimension r must be >= 1")?;
        ensure_domain(m >= 1, "depth parameter m must be >= 1")?;
        let power_list = enumerate_powers(r, vartheta);
        debug_assert_eq!(power_list.len(), basis_len(r, vartheta));
        Ok(Self {
            r,
            vartheta,
            m,
            power_list,
            net: ProductNet::new(m),
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn vartheta(&self) -> u32 {
        self.vartheta
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn power_list(&self) -> &[PowerVector] {
        &self.power_list
    }

    /// `r_vartheta`, the basis length.
    pub fn len(&self) -> usize {
        self.power_list.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn net(&self) -> &ProductNet {
        &self.net
    }

    fn offsets(&self, x: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(
            x.len() == self.r && x0.len() == self.r,
            format!("basis expects points of dimension {}", self.r),
        )?;
        Ok(x.iter().zip(x0).map(|(a, b)| a - b).collect())
    }

    /// Exact monomials `(x - x0)^{alpha_j}` in spec order; no network.
    pub fn poly_basis(&self, x: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        let off = self.offsets(x, x0)?;
        Ok(self
            .power_list
            .iter()
            .map(|alpha| {
                off.iter()
                    .zip(alpha.exponents())
                    .map(|(o, &e)| o.powi(e as i32))
                    .product()
            })
            .collect())
    }

    /// Network basis: entry j is the monomial network at `x - x0` with
    /// power `alpha_j`. Offsets must lie in the admissible cube.
    pub fn local_net_basis(&self, x: &[f64], x0: &[f64], activation: Activation) -> Result<Vec<f64>> {
        let off = self.offsets(x, x0)?;
        self.net_basis_at_offsets(&off, activation)
    }

    /// Same as [`Self::local_net_basis`] but taking the offsets directly.
    pub fn net_basis_at_offsets(&self, off: &[f64], activation: Activation) -> Result<Vec<f64>> {
        self.power_list
            .iter()
            .map(|alpha| self.net.monomial(off, alpha, activation))
            .collect()
    }

    /// Differentiated basis of Corollary-style marginal effects: entry j is
    /// `alpha_j^delta * N(x - x0 | alpha_j - delta)` with `0^0 := 1`, where
    /// `delta in {0,1}^r` marks the coordinates differentiated once.
    ///
    /// The underlying approximation argument assumes `p > r`; that is
    /// documented, not enforced.
    pub fn marginal_basis(
        &self,
        x: &[f64],
        x0: &[f64],
        delta: &PowerVector,
        activation: Activation,
    ) -> Result<Vec<f64>> {
        let off = self.offsets(x, x0)?;
        self.marginal_basis_at_offsets(&off, delta, activation)
    }

    /// Same as [`Self::marginal_basis`] but taking the offsets directly.
    pub fn marginal_basis_at_offsets(
        &self,
        off: &[f64],
        delta: &PowerVector,
        activation: Activation,
    ) -> Result<Vec<f64>> {
        ensure_dim(
            delta.len() == self.r,
            format!("delta has length {}, expected {}", delta.len(), self.r),
        )?;
        ensure_domain(
            delta.exponents().iter().all(|&d| d <= 1),
            "delta entries must be 0 or 1",
        )?;
        self.power_list
            .iter()
            .map(|alpha| {
                let mut coeff = 1.0;
                for (&a, &d) in alpha.exponents().iter().zip(delta.exponents()) {
                    if d == 1 {
                        coeff *= f64::from(a);
                    }
                }
                if coeff == 0.0 {
                    // Still validate the evaluation point.
                    input_lift(off, alpha).map(|_| ())?;
                    return Ok(0.0);
                }
                let shifted = alpha.shifted_down(delta.exponents());
                Ok(coeff * self.net.monomial(off, &shifted, activation)?)
            })
            .collect()
    }
}

impl Serialize for LocalBasisSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BasisSpecRepr {
            r: self.r,
            vartheta: self.vartheta,
            m: self.m,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LocalBasisSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = BasisSpecRepr::deserialize(d)?;
        LocalBasisSpec::new(repr.r, repr.vartheta, repr.m).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct BasisSpecRepr {
    r: usize,
    vartheta: u32,
    m: u32,
}

/// Free-function forms of the basis evaluations (spec order fixed by
/// [`LocalBasisSpec`]).
pub fn poly_basis(x: &[f64], x0: &[f64], spec: &LocalBasisSpec) -> Result<Vec<f64>> {
    spec.poly_basis(x, x0)
}

pub fn local_net_basis(x: &[f64], x0: &[f64], spec: &LocalBasisSpec) -> Result<Vec<f64>> {
    spec.local_net_basis(x, x0, Activation::Relu)
}

pub fn marginal_basis(
    x: &[f64],
    x0: &[f64],
    spec: &LocalBasisSpec,
    delta: &PowerVector,
) -> Result<Vec<f64>> {
    spec.marginal_basis(x, x0, delta, Activation::Relu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relu_nets::monomial::monomial_error_bound;

    #[test]
    fn enumeration_is_graded_lex() {
        let powers = enumerate_powers(2, 2);
        let got: Vec<Vec<u32>> = powers.iter().map(|p| p.exponents().to_vec()).collect();
        assert_eq!(
            got,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
    }

    #[test]
    fn basis_length_is_binomial() {
        assert_eq!(basis_len(2, 2), 6);
        assert_eq!(basis_len(3, 2), 10);
        assert_eq!(basis_len(4, 3), 35);
        for (r, v) in [(1usize, 0u32), (1, 3), (2, 1), (3, 3), (5, 2)] {
            assert_eq!(enumerate_powers(r, v).len(), basis_len(r, v));
        }
    }

    #[test]
    fn poly_basis_at_center_is_unit_vector() {
        let spec = LocalBasisSpec::new(3, 2, 5).unwrap();
        let x0 = [0.1, -0.2, 0.4];
        let b = spec.poly_basis(&x0, &x0).unwrap();
        assert_eq!(b[0], 1.0);
        assert!(b[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn poly_basis_degree_one_example() {
        let spec = LocalBasisSpec::new(2, 1, 5).unwrap();
        let b = spec.poly_basis(&[0.1, 0.2], &[0.0, 0.0]).unwrap();
        assert_eq!(b.len(), 3);
        assert!((b[0] - 1.0).abs() < 1e-15);
        assert!((b[1] - 0.1).abs() < 1e-15);
        assert!((b[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn net_basis_dominates_poly_basis_within_bound() {
        let spec = LocalBasisSpec::new(2, 2, 5).unwrap();
        let bound = monomial_error_bound(2, 5);
        let x0 = [0.0, 0.0];
        for &(x1, x2) in &[(0.5, 0.5), (0.0, 0.0), (0.25, 0.4)] {
            let net = spec.local_net_basis(&[x1, x2], &x0, Activation::Relu).unwrap();
            let poly = spec.poly_basis(&[x1, x2], &x0).unwrap();
            for (j, (n, p)) in net.iter().zip(&poly).enumerate() {
                let gap = n - p;
                assert!(
                    (-1e-12..=bound + 1e-12).contains(&gap),
                    "entry {j} at ({x1},{x2}): gap {gap}"
                );
                assert!((-1e-12..=1.0 + 1e-12).contains(n));
            }
        }
    }

    #[test]
    fn net_basis_at_center_starts_with_exact_one() {
        let spec = LocalBasisSpec::new(2, 2, 4).unwrap();
        let x0 = [0.3, -0.5];
        let b = spec.local_net_basis(&x0, &x0, Activation::Relu).unwrap();
        assert_eq!(b[0], 1.0);
        let bound = monomial_error_bound(2, 4);
        for v in &b[1..] {
            assert!((0.0..=bound).contains(v), "{v}");
        }
    }

    #[test]
    fn marginal_basis_with_zero_delta_equals_net_basis() {
        let spec = LocalBasisSpec::new(2, 2, 5).unwrap();
        let delta = PowerVector::new(vec![0, 0]).unwrap();
        let x = [0.2, 0.3];
        let x0 = [0.0, 0.0];
        let a = spec.marginal_basis(&x, &x0, &delta, Activation::Relu).unwrap();
        let b = spec.local_net_basis(&x, &x0, Activation::Relu).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn marginal_basis_shifts_and_scales_exponents() {
        // d(x1^2 x2)/dx1 = 2 x1 x2: coefficient 2, shifted power (1,1).
        let spec = LocalBasisSpec::new(2, 3, 6).unwrap();
        let delta = PowerVector::new(vec![1, 0]).unwrap();
        let x = [0.2, 0.3];
        let x0 = [0.0, 0.0];
        let vals = spec.marginal_basis(&x, &x0, &delta, Activation::Relu).unwrap();
        let j = spec
            .power_list()
            .iter()
            .position(|p| p.exponents() == [2, 1])
            .unwrap();
        let bound = 2.0 * monomial_error_bound(2, 6);
        let truth = 2.0 * x[0] * x[1];
        assert!((vals[j] - truth).abs() <= bound, "{} vs {truth}", vals[j]);

        // d(x2)/dx1 = 0: coefficient zero, no network evaluation.
        let k = spec
            .power_list()
            .iter()
            .position(|p| p.exponents() == [0, 1])
            .unwrap();
        assert_eq!(vals[k], 0.0);
    }

    #[test]
    fn marginal_basis_rejects_non_binary_delta() {
        let spec = LocalBasisSpec::new(2, 2, 5).unwrap();
        let delta = PowerVector::new(vec![2, 0]).unwrap();
        assert!(spec
            .marginal_basis(&[0.1, 0.1], &[0.0, 0.0], &delta, Activation::Relu)
            .is_err());
    }
}
