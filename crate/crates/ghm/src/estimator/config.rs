//! Model configuration, dataset container, and the constrained parameter.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_domain, Error, Result};
use crate::relu_nets::Activation;

/// Configuration of the hierarchical index model and its sieve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Number of indices.
    pub r: usize,
    /// Block dimensions `d_1, ..., d_r`, each at least 2.
    pub block_dims: Vec<usize>,
    /// Half-width of the estimation region `[-a, a]^r`.
    pub a: f64,
    /// Local polynomial degree.
    pub vartheta: u32,
    /// Network depth parameter.
    pub m: u32,
    /// Cubes per axis; `None` applies the `h ~ T^{-1/4}` rule
    /// `M = max(2, round(2a T^{1/4}))`.
    #[serde(default)]
    pub cubes_per_axis: Option<usize>,
    /// Activation used when evaluating the sieve.
    #[serde(default)]
    pub activation: Activation,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_domain(self.r >= 1, "r must be >= 1")?;
        ensure_dim(
            self.block_dims.len() == self.r,
            format!(
                "block_dims has {} entries, expected r = {}",
                self.block_dims.len(),
                self.r
            ),
        )?;
        ensure_domain(
            self.block_dims.iter().all(|&d| d >= 2),
            "every block dimension must be >= 2",
        )?;
        ensure_domain(self.a > 0.0 && self.a.is_finite(), "a must be positive")?;
        ensure_domain(self.m >= 1, "m must be >= 1")?;
        if let Some(m_cubes) = self.cubes_per_axis {
            ensure_domain(m_cubes >= 1, "cubes_per_axis must be >= 1")?;
        }
        if let Activation::Smoothed(s) = self.activation {
            ensure_domain(s >= 1, "smoothed activation scale must be >= 1")?;
        }
        Ok(())
    }

    /// Total parameter dimension `d = sum d_j`.
    pub fn d(&self) -> usize {
        self.block_dims.iter().sum()
    }

    /// Cubes per axis for a sample of length `t_len`.
    pub fn resolve_cubes(&self, t_len: usize) -> usize {
        self.cubes_per_axis.unwrap_or_else(|| {
            let m = (2.0 * self.a * (t_len as f64).powf(0.25)).round() as usize;
            m.max(2)
        })
    }
}

/// Observed series: responses and the block-ordered regressor matrix.
///
/// Row `t` of `z` is `(z_{1t}', ..., z_{rt}')` laid out block by block;
/// the block layout is carried by [`ModelConfig::block_dims`].
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Vec<f64>,
    z: Vec<f64>,
    d: usize,
}

impl Dataset {
    pub fn new(y: Vec<f64>, z_rows: Vec<Vec<f64>>) -> Result<Self> {
        ensure_dim(y.len() == z_rows.len(), "y and z must have equal length")?;
        ensure_domain(!y.is_empty(), "dataset must be non-empty")?;
        let d = z_rows[0].len();
        ensure_domain(d >= 1, "z must have at least one column")?;
        let mut z = Vec::with_capacity(y.len() * d);
        for (t, row) in z_rows.iter().enumerate() {
            ensure_dim(row.len() == d, format!("z row {t} has ragged length"))?;
            z.extend_from_slice(row);
        }
        let data = Self { y, z, d };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_domain(
            self.y.iter().all(|v| v.is_finite()) && self.z.iter().all(|v| v.is_finite()),
            "dataset contains NaN or infinite values",
        )?;
        ensure_domain(
            self.len() >= self.d,
            format!("need T >= d, got T = {}, d = {}", self.len(), self.d),
        )?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn width(&self) -> usize {
        self.d
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z_row(&self, t: usize) -> &[f64] {
        &self.z[t * self.d..(t + 1) * self.d]
    }

    /// Replace the response series, keeping regressors (bootstrap step 2).
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        ensure_dim(y.len() == self.len(), "replacement y has wrong length")?;
        let data = Self {
            y,
            z: self.z.clone(),
            d: self.d,
        };
        data.validate()?;
        Ok(data)
    }

    /// Contiguous window `[lo, hi)` of the series.
    pub fn window(&self, lo: usize, hi: usize) -> Result<Self> {
        ensure_domain(lo < hi && hi <= self.len(), "invalid window bounds")?;
        let data = Self {
            y: self.y[lo..hi].to_vec(),
            z: self.z[lo * self.d..hi * self.d].to_vec(),
            d: self.d,
        };
        data.validate()?;
        Ok(data)
    }
}

/// The constrained index parameter: `r` unit-norm blocks with positive
/// first entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaParam {
    blocks: Vec<Vec<f64>>,
}

impl ThetaParam {
    /// Accepts blocks already satisfying the constraints (norm within
    /// `1e-8` of one; strictly positive first entries).
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        ensure_domain(!blocks.is_empty(), "theta must have at least one block")?;
        for (j, b) in blocks.iter().enumerate() {
            ensure_dim(b.len() >= 2, format!("theta block {j} must have length >= 2"))?;
            let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            ensure_domain(
                (norm - 1.0).abs() <= 1e-8,
                format!("theta block {j} has norm {norm}, expected 1"),
            )?;
            ensure_domain(
                b[0] > 0.0,
                format!("theta block {j} first entry {} must be > 0", b[0]),
            )?;
        }
        Ok(Self { blocks })
    }

    /// Normalize arbitrary blocks onto the constraint set, flipping signs
    /// so first entries are positive. Zero blocks and blocks whose first
    /// entry lands exactly at 0 are rejected as unidentified.
    pub fn project(blocks: Vec<Vec<f64>>) -> Result<Self> {
        let mut out = Vec::with_capacity(blocks.len());
        for (j, b) in blocks.into_iter().enumerate() {
            let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::Domain(format!("theta block {j} has zero norm")));
            }
            let sign = if b[0] < 0.0 { -1.0 } else { 1.0 };
            let scaled: Vec<f64> = b.iter().map(|v| sign * v / norm).collect();
            if scaled[0] == 0.0 {
                return Err(Error::Domain(format!(
                    "theta block {j} has first entry 0: sign is unidentified"
                )));
            }
            out.push(scaled);
        }
        Self::new(out)
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn r(&self) -> usize {
        self.blocks.len()
    }

    pub fn d(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Concatenated `d`-vector.
    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub fn from_flat(flat: &[f64], block_dims: &[usize]) -> Result<Self> {
        ensure_dim(
            flat.len() == block_dims.iter().sum::<usize>(),
            "flat theta length does not match block dims",
        )?;
        let mut blocks = Vec::with_capacity(block_dims.len());
        let mut off = 0;
        for &dj in block_dims {
            blocks.push(flat[off..off + dj].to_vec());
            off += dj;
        }
        Self::new(blocks)
    }
}

/// The index vector `(z_1' theta_1, ..., z_r' theta_r)` for one
/// observation row.
pub fn index_values(z_row: &[f64], theta: &ThetaParam) -> Result<Vec<f64>> {
    ensure_dim(
        z_row.len() == theta.d(),
        format!("z row length {} != theta dimension {}", z_row.len(), theta.d()),
    )?;
    let mut out = Vec::with_capacity(theta.r());
    let mut off = 0;
    for block in theta.blocks() {
        let v = block
            .iter()
            .zip(&z_row[off..off + block.len()])
            .fold(0.0, |acc, (t, z)| acc + t * z);
        out.push(v);
        off += block.len();
    }
    Ok(out)
}
