//! The cube partition of `[-a, a]^r`.
//!
//! Cubes are half-open on their upper faces except along the top boundary,
//! where the last cube per axis is closed; every point of `[-a, a]^r` then
//! belongs to exactly one cube. Indices are 0-based internally and
//! displayed 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_domain, Result};

/// Multi-index of a cube, one coordinate per axis.
pub type CubeIndex = Vec<usize>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubePartition {
    a: f64,
    cubes_per_axis: usize,
    h: f64,
    r: usize,
}

impl CubePartition {
    pub fn new(a: f64, cubes_per_axis: usize, r: usize) -> Result<Self> {
        ensure_domain(a > 0.0 && a.is_finite(), "a must be positive")?;
        ensure_domain(cubes_per_axis >= 1, "need at least one cube per axis")?;
        ensure_domain(r >= 1, "r must be >= 1")?;
        // Linear cube indices must fit in u64.
        let mut total: u128 = 1;
        for _ in 0..r {
            total = total.saturating_mul(cubes_per_axis as u128);
        }
        ensure_domain(
            total <= u64::MAX as u128,
            "cube count M^r overflows the linear index space",
        )?;
        Ok(Self {
            a,
            cubes_per_axis,
            h: 2.0 * a / cubes_per_axis as f64,
            r,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn cubes_per_axis(&self) -> usize {
        self.cubes_per_axis
    }

    /// Cube side length `h = 2a / M`.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// The unique owning cube, or `None` for points outside `[-a, a]^r`
    /// (NaN counts as outside).
    pub fn cube_index(&self, x: &[f64]) -> Option<CubeIndex> {
        if x.len() != self.r {
            return None;
        }
        let mut idx = Vec::with_capacity(self.r);
        for &xi in x {
            if !(xi >= -self.a && xi <= self.a) {
                return None;
            }
            let k = ((xi + self.a) / self.h).floor() as isize;
            idx.push(k.clamp(0, self.cubes_per_axis as isize - 1) as usize);
        }
        Some(idx)
    }

    /// Bottom-left corner of the cube.
    pub fn corner(&self, idx: &[usize]) -> Result<Vec<f64>> {
        ensure_dim(idx.len() == self.r, "cube index has wrong dimension")?;
        ensure_domain(
            idx.iter().all(|&i| i < self.cubes_per_axis),
            "cube index out of range",
        )?;
        Ok(idx.iter().map(|&i| -self.a + i as f64 * self.h).collect())
    }

    /// Flattened index for dense/keyed storage.
    pub fn linear(&self, idx: &[usize]) -> u64 {
        let mut lin = 0u64;
        for &i in idx {
            lin = lin * self.cubes_per_axis as u64 + i as u64;
        }
        lin
    }

    pub fn from_linear(&self, mut lin: u64) -> CubeIndex {
        let mut idx = vec![0usize; self.r];
        for slot in idx.iter_mut().rev() {
            *slot = (lin % self.cubes_per_axis as u64) as usize;
            lin /= self.cubes_per_axis as u64;
        }
        idx
    }

    /// Offset `x - corner` of the owning cube, clamped into `[0, h]` to
    /// absorb the one-ulp noise of the floor arithmetic.
    pub fn offsets_in_cube(&self, x: &[f64], idx: &[usize]) -> Result<Vec<f64>> {
        let corner = self.corner(idx)?;
        Ok(x.iter()
            .zip(&corner)
            .map(|(xi, c)| (xi - c).clamp(0.0, self.h))
            .collect())
    }
}
