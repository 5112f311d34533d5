//! Piecewise local-network regression on the cube partition.
//!
//! For fixed `theta` the sieve is linear in the per-cube coefficients, so
//! the inner problem is ordinary least squares cube by cube. Regressors
//! are rescaled by `H^{-1} = diag(h_eff^{-|alpha_j|})` before solving and
//! the coefficients rescaled back, which keeps the normal equations well
//! conditioned as `h` shrinks.
//!
//! When the cube side `h` exceeds the admissible range of the monomial
//! network, offsets are shrunk by `rho = h_max / h` before basis
//! evaluation; coefficients are then interpreted in the rescaled
//! coordinates, and marginal effects pick up a factor `rho^{|delta|}` per
//! differentiated coordinate.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_domain, Error, Result};
use crate::relu_nets::{h_max, Activation, LocalBasisSpec, PowerVector};

use super::config::{index_values, Dataset, ModelConfig, ThetaParam};
use super::partition::{CubeIndex, CubePartition};

/// Ridge weight for cubes with fewer observations than coefficients.
const THIN_CUBE_RIDGE: f64 = 1e-8;

/// Partition, basis, offset rescale, and activation bundled for evaluation.
#[derive(Debug, Clone)]
pub struct SieveContext {
    partition: CubePartition,
    spec: LocalBasisSpec,
    rho: f64,
    activation: Activation,
}

impl SieveContext {
    pub fn new(partition: CubePartition, spec: LocalBasisSpec, activation: Activation) -> Result<Self> {
        ensure_dim(
            partition.r() == spec.r(),
            "partition and basis dimension disagree",
        )?;
        let hm = h_max(spec.r(), spec.m());
        ensure_domain(
            hm > 0.0,
            format!(
                "no admissible cube side: 1 - L*2^-m <= 0 for r={}, m={}",
                spec.r(),
                spec.m()
            ),
        )?;
        let rho = offset_scale(&partition, &spec);
        Ok(Self {
            partition,
            spec,
            rho,
            activation,
        })
    }

    pub fn partition(&self) -> &CubePartition {
        &self.partition
    }

    pub fn spec(&self) -> &LocalBasisSpec {
        &self.spec
    }

    /// Offset rescale factor; 1 when `h` already satisfies the constraint.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Effective cube side seen by the basis: `rho * h`.
    pub fn h_eff(&self) -> f64 {
        if self.rho < 1.0 {
            h_max(self.spec.r(), self.spec.m())
        } else {
            self.partition.h()
        }
    }

    fn scaled_offsets(&self, x: &[f64], idx: &[usize]) -> Result<Vec<f64>> {
        let mut off = self.partition.offsets_in_cube(x, idx)?;
        if self.rho < 1.0 {
            let cap = self.h_eff();
            for o in &mut off {
                *o = (*o * self.rho).min(cap);
            }
        }
        Ok(off)
    }

    /// Network basis vector of `x` relative to its owning cube `idx`.
    pub fn basis_in_cube(&self, x: &[f64], idx: &[usize]) -> Result<Vec<f64>> {
        let off = self.scaled_offsets(x, idx)?;
        self.spec.net_basis_at_offsets(&off, self.activation)
    }

    /// Differentiated basis vector, including the `rho^{|delta|}` chain
    /// factor from the offset rescale.
    pub fn marginal_in_cube(&self, x: &[f64], idx: &[usize], delta: &PowerVector) -> Result<Vec<f64>> {
        let off = self.scaled_offsets(x, idx)?;
        let mut vals = self
            .spec
            .marginal_basis_at_offsets(&off, delta, self.activation)?;
        let chain = self.rho.powi(delta.norm1() as i32);
        if chain != 1.0 {
            for v in &mut vals {
                *v *= chain;
            }
        }
        Ok(vals)
    }
}

fn offset_scale(partition: &CubePartition, spec: &LocalBasisSpec) -> f64 {
    let hm = h_max(spec.r(), spec.m());
    if partition.h() > hm {
        hm / partition.h()
    } else {
        1.0
    }
}

/// Evaluate the piecewise approximant at `x` given per-cube coefficients.
///
/// Out-of-region points and points whose cube holds no coefficients are
/// distinct errors.
pub fn piecewise_eval(
    x: &[f64],
    betas: &BTreeMap<CubeIndex, Vec<f64>>,
    partition: &CubePartition,
    spec: &LocalBasisSpec,
) -> Result<f64> {
    let ctx = SieveContext::new(partition.clone(), spec.clone(), Activation::Relu)?;
    piecewise_eval_ctx(x, betas, &ctx)
}

pub(crate) fn piecewise_eval_ctx(
    x: &[f64],
    betas: &BTreeMap<CubeIndex, Vec<f64>>,
    ctx: &SieveContext,
) -> Result<f64> {
    let idx = ctx.partition.cube_index(x).ok_or(Error::OutOfRegion)?;
    let beta = betas.get(&idx).ok_or(Error::EmptyCube)?;
    let basis = ctx.basis_in_cube(x, &idx)?;
    ensure_dim(beta.len() == basis.len(), "beta length != basis length")?;
    Ok(dot(&basis, beta))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// Mean squared in-region residual and the in-region count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QLoss {
    pub value: f64,
    pub in_region: usize,
}

/// `Q_T(theta, B)`: mean squared residual over observations whose index
/// vector lies in `[-a, a]^r`; out-of-region observations are excluded.
pub fn q_loss(
    data: &Dataset,
    theta: &ThetaParam,
    betas: &BTreeMap<CubeIndex, Vec<f64>>,
    config: &ModelConfig,
) -> Result<QLoss> {
    let ctx = context_for(config, data.len())?;
    let mut sse = 0.0;
    let mut n = 0usize;
    for t in 0..data.len() {
        let x = index_values(data.z_row(t), theta)?;
        let Some(idx) = ctx.partition.cube_index(&x) else {
            continue;
        };
        let beta = betas.get(&idx).ok_or(Error::EmptyCube)?;
        let basis = ctx.basis_in_cube(&x, &idx)?;
        let resid = data.y()[t] - dot(&basis, beta);
        sse += resid * resid;
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoInRegionObservations);
    }
    Ok(QLoss {
        value: sse / n as f64,
        in_region: n,
    })
}

/// Build the evaluation context implied by a config and sample size.
pub fn context_for(config: &ModelConfig, t_len: usize) -> Result<SieveContext> {
    config.validate()?;
    let cubes = config.resolve_cubes(t_len);
    let partition = CubePartition::new(config.a, cubes, config.r)?;
    let spec = LocalBasisSpec::new(config.r, config.vartheta, config.m)?;
    SieveContext::new(partition, spec, config.activation)
}

/// Result of the profiling step: per-cube least squares at fixed `theta`.
#[derive(Debug, Clone)]
pub struct BetaFit {
    pub betas: BTreeMap<CubeIndex, Vec<f64>>,
    pub occupancy: BTreeMap<CubeIndex, usize>,
    /// Cubes solved with the ridge fallback (thin or singular).
    pub ridge_cubes: Vec<CubeIndex>,
    /// In-region sum of squared residuals implied by the solves.
    pub sse: f64,
    pub in_region: usize,
}

impl BetaFit {
    pub fn q_value(&self) -> f64 {
        self.sse / self.in_region as f64
    }
}

struct CubeAccum {
    gram: Vec<f64>,
    xty: Vec<f64>,
    sum_y2: f64,
    n: usize,
}

/// For each occupied cube, least squares of `y` on the `H^{-1}`-scaled
/// network basis, coefficients rescaled back; minimizes `Q_T` over the
/// coefficients exactly for fixed `theta`. Cubes with fewer observations
/// than coefficients (or a singular Gram matrix) get a small ridge and are
/// flagged.
pub fn fit_betas_given_theta(
    data: &Dataset,
    theta: &ThetaParam,
    config: &ModelConfig,
) -> Result<BetaFit> {
    let ctx = context_for(config, data.len())?;
    fit_betas_ctx(data, theta, &ctx)
}

pub(crate) fn fit_betas_ctx(data: &Dataset, theta: &ThetaParam, ctx: &SieveContext) -> Result<BetaFit> {
    let p = ctx.spec.len();
    let tri = p * (p + 1) / 2;
    let h_scale: Vec<f64> = ctx
        .spec
        .power_list()
        .iter()
        .map(|alpha| ctx.h_eff().powi(alpha.norm1() as i32))
        .collect();

    let mut accums: BTreeMap<u64, CubeAccum> = BTreeMap::new();
    let mut basis = Vec::with_capacity(p);
    for t in 0..data.len() {
        let x = index_values(data.z_row(t), theta)?;
        let Some(idx) = ctx.partition.cube_index(&x) else {
            continue;
        };
        basis.clear();
        basis.extend(ctx.basis_in_cube(&x, &idx)?);
        for (b, s) in basis.iter_mut().zip(&h_scale) {
            *b /= s;
        }
        let acc = accums.entry(ctx.partition.linear(&idx)).or_insert_with(|| CubeAccum {
            gram: vec![0.0; tri],
            xty: vec![0.0; p],
            sum_y2: 0.0,
            n: 0,
        });
        let y = data.y()[t];
        let mut k = 0;
        for i in 0..p {
            for j in i..p {
                acc.gram[k] += basis[i] * basis[j];
                k += 1;
            }
            acc.xty[i] += basis[i] * y;
        }
        acc.sum_y2 += y * y;
        acc.n += 1;
    }
    if accums.is_empty() {
        return Err(Error::NoInRegionObservations);
    }

    let mut betas = BTreeMap::new();
    let mut occupancy = BTreeMap::new();
    let mut ridge_cubes = Vec::new();
    let mut sse = 0.0;
    let mut in_region = 0usize;
    for (lin, acc) in &accums {
        let idx = ctx.partition.from_linear(*lin);
        let mut gram = DMatrix::zeros(p, p);
        let mut k = 0;
        for i in 0..p {
            for j in i..p {
                gram[(i, j)] = acc.gram[k];
                gram[(j, i)] = acc.gram[k];
                k += 1;
            }
        }
        let rhs = DVector::from_column_slice(&acc.xty);
        let thin = acc.n < p;
        let solved = if thin {
            None
        } else {
            Cholesky::new(gram.clone()).map(|ch| ch.solve(&rhs))
        };
        let scaled_beta = match solved {
            Some(b) => b,
            None => {
                ridge_cubes.push(idx.clone());
                let mut ridged = gram.clone();
                for i in 0..p {
                    ridged[(i, i)] += THIN_CUBE_RIDGE;
                }
                Cholesky::new(ridged)
                    .ok_or_else(|| {
                        Error::NotPositiveDefinite(format!("cube {idx:?} normal equations"))
                    })?
                    .solve(&rhs)
            }
        };
        // SSE via the quadratic form; exact cancellations clamp at zero.
        let gb = &gram * &scaled_beta;
        let cube_sse =
            (acc.sum_y2 - 2.0 * scaled_beta.dot(&rhs) + scaled_beta.dot(&gb)).max(0.0);
        sse += cube_sse;
        in_region += acc.n;
        let beta: Vec<f64> = scaled_beta
            .iter()
            .zip(&h_scale)
            .map(|(b, s)| b / s)
            .collect();
        ensure_domain(
            beta.iter().all(|v| v.is_finite()),
            format!("non-finite coefficients in cube {idx:?}"),
        )?;
        occupancy.insert(idx.clone(), acc.n);
        betas.insert(idx, beta);
    }
    Ok(BetaFit {
        betas,
        occupancy,
        ridge_cubes,
        sse,
        in_region,
    })
}

/// A fitted model: the index parameter, per-cube coefficients, and
/// diagnostics. Immutable and shareable after construction.
#[derive(Debug, Clone)]
pub struct HierarchicalFit {
    pub theta_hat: ThetaParam,
    pub betas: BTreeMap<CubeIndex, Vec<f64>>,
    pub sigma2_hat: f64,
    pub occupancy: BTreeMap<CubeIndex, usize>,
    pub ridge_cubes: Vec<CubeIndex>,
    /// Final `Q_T` at the estimate.
    pub loss: f64,
    pub in_region: usize,
    pub config: ModelConfig,
    /// Cubes per axis actually used.
    pub cubes_per_axis: usize,
    /// False when the outer search hit its iteration cap while still
    /// improving; the fit is then best-so-far.
    pub converged: bool,
    pub(crate) ctx: SieveContext,
}

impl HierarchicalFit {
    /// `f_hat(x0)`: the piecewise approximant at `x0`.
    pub fn predict(&self, x0: &[f64]) -> Result<f64> {
        piecewise_eval_ctx(x0, &self.betas, &self.ctx)
    }

    /// Marginal effect at `x0` for the 0/1 differentiation pattern `delta`.
    pub fn estimate_marginal(&self, x0: &[f64], delta: &PowerVector) -> Result<f64> {
        let idx = self.ctx.partition.cube_index(x0).ok_or(Error::OutOfRegion)?;
        let beta = self.betas.get(&idx).ok_or(Error::EmptyCube)?;
        let basis = self.ctx.marginal_in_cube(x0, &idx, delta)?;
        Ok(dot(&basis, beta))
    }

    /// Constant term of the nearest occupied cube, for out-of-region or
    /// empty-cube fallbacks in forecasting. The flag in the returned pair
    /// is true when the fallback was taken.
    pub fn predict_with_fallback(&self, x0: &[f64]) -> Result<(f64, bool)> {
        match self.predict(x0) {
            Ok(v) => Ok((v, false)),
            Err(Error::OutOfRegion) | Err(Error::EmptyCube) => {
                let clamped: Vec<f64> = x0
                    .iter()
                    .map(|&v| v.clamp(-self.ctx.partition.a(), self.ctx.partition.a()))
                    .collect();
                let mut best: Option<(f64, &CubeIndex)> = None;
                for idx in self.betas.keys() {
                    let corner = self.ctx.partition.corner(idx)?;
                    let dist: f64 = clamped
                        .iter()
                        .zip(&corner)
                        .map(|(x, c)| (x - c) * (x - c))
                        .sum();
                    if best.map_or(true, |(d, _)| dist < d) {
                        best = Some((dist, idx));
                    }
                }
                let (_, idx) = best.ok_or(Error::EmptyCube)?;
                Ok((self.betas[idx][0], true))
            }
            Err(e) => Err(e),
        }
    }

    pub fn context(&self) -> &SieveContext {
        &self.ctx
    }

    /// Serializable form.
    pub fn to_document(&self) -> FitDocument {
        FitDocument {
            theta: self.theta_hat.blocks().to_vec(),
            betas: self
                .betas
                .iter()
                .map(|(k, v)| (key_string(k), v.clone()))
                .collect(),
            occupancy: self
                .occupancy
                .iter()
                .map(|(k, v)| (key_string(k), *v))
                .collect(),
            ridge_cubes: self.ridge_cubes.iter().map(|k| key_string(k)).collect(),
            sigma2_hat: self.sigma2_hat,
            loss: self.loss,
            in_region: self.in_region,
            cubes_per_axis: self.cubes_per_axis,
            converged: self.converged,
            config: self.config.clone(),
        }
    }

    pub fn from_document(doc: FitDocument) -> Result<Self> {
        doc.config.validate()?;
        let theta = ThetaParam::new(doc.theta)?;
        let partition = CubePartition::new(doc.config.a, doc.cubes_per_axis, doc.config.r)?;
        let spec = LocalBasisSpec::new(doc.config.r, doc.config.vartheta, doc.config.m)?;
        let ctx = SieveContext::new(partition, spec, doc.config.activation)?;
        let betas = doc
            .betas
            .into_iter()
            .map(|(k, v)| Ok((parse_key(&k, doc.config.r)?, v)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let occupancy = doc
            .occupancy
            .into_iter()
            .map(|(k, v)| Ok((parse_key(&k, doc.config.r)?, v)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let ridge_cubes = doc
            .ridge_cubes
            .iter()
            .map(|k| parse_key(k, doc.config.r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            theta_hat: theta,
            betas,
            sigma2_hat: doc.sigma2_hat,
            occupancy,
            ridge_cubes,
            loss: doc.loss,
            in_region: doc.in_region,
            config: doc.config,
            cubes_per_axis: doc.cubes_per_axis,
            converged: doc.converged,
            ctx,
        })
    }
}

/// JSON form of a fit: theta blocks, per-cube coefficients keyed by
/// 1-based comma-joined multi-indices, and diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDocument {
    pub theta: Vec<Vec<f64>>,
    pub betas: BTreeMap<String, Vec<f64>>,
    pub occupancy: BTreeMap<String, usize>,
    pub ridge_cubes: Vec<String>,
    pub sigma2_hat: f64,
    pub loss: f64,
    pub in_region: usize,
    pub cubes_per_axis: usize,
    pub converged: bool,
    pub config: ModelConfig,
}

fn key_string(idx: &[usize]) -> String {
    idx.iter()
        .map(|i| (i + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_key(key: &str, r: usize) -> Result<CubeIndex> {
    let parts: Vec<&str> = key.split(',').collect();
    ensure_dim(parts.len() == r, format!("cube key '{key}' has wrong arity"))?;
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .ok()
                .and_then(|v| v.checked_sub(1))
                .ok_or_else(|| Error::InvalidConfig(format!("bad cube key '{key}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ModelConfig {
        ModelConfig {
            r: 2,
            block_dims: vec![2, 2],
            a: 0.9,
            vartheta: 1,
            m: 5,
            cubes_per_axis: Some(3),
            activation: Activation::Relu,
        }
    }

    fn theta_star() -> ThetaParam {
        ThetaParam::new(vec![vec![0.6, 0.8], vec![0.6, -0.8]]).unwrap()
    }

    fn grid_dataset(n_side: usize) -> Dataset {
        // Index values on a grid strictly inside [-0.9, 0.9]^2 (the exact
        // boundary can spill out under z-theta roundoff), inverted through
        // theta*.
        let theta = theta_star();
        let mut y = Vec::new();
        let mut z = Vec::new();
        for i in 0..n_side {
            for j in 0..n_side {
                let x1 = -0.89 + 1.78 * i as f64 / (n_side - 1) as f64;
                let x2 = -0.89 + 1.78 * j as f64 / (n_side - 1) as f64;
                // z rows chosen so z theta = (x1, x2): block k = x_k * theta_k.
                let b1: Vec<f64> = theta.blocks()[0].iter().map(|t| t * x1).collect();
                let b2: Vec<f64> = theta.blocks()[1].iter().map(|t| t * x2).collect();
                z.push([b1, b2].concat());
                y.push(x1 + x2);
            }
        }
        Dataset::new(y, z).unwrap()
    }

    #[test]
    fn constant_coefficients_evaluate_to_one_everywhere() {
        let cfg = small_config();
        let ctx = context_for(&cfg, 100).unwrap();
        let mut betas = BTreeMap::new();
        for i in 0..3 {
            for j in 0..3 {
                let mut e1 = vec![0.0; ctx.spec().len()];
                e1[0] = 1.0;
                betas.insert(vec![i, j], e1);
            }
        }
        // Corner and interior: the constant basis entry is exactly 1.
        for x in [[-0.9, -0.9], [0.0, 0.0], [0.17, -0.52], [0.9, 0.9]] {
            let v = piecewise_eval_ctx(&x, &betas, &ctx).unwrap();
            assert_eq!(v, 1.0, "at {x:?}");
        }
    }

    #[test]
    fn piecewise_eval_distinguishes_error_cases() {
        let cfg = small_config();
        let ctx = context_for(&cfg, 100).unwrap();
        let betas = BTreeMap::new();
        assert!(matches!(
            piecewise_eval_ctx(&[2.0, 0.0], &betas, &ctx),
            Err(Error::OutOfRegion)
        ));
        assert!(matches!(
            piecewise_eval_ctx(&[0.0, 0.0], &betas, &ctx),
            Err(Error::EmptyCube)
        ));
    }

    #[test]
    fn profiling_recovers_constants_exactly() {
        let cfg = small_config();
        let theta = theta_star();
        let data = {
            let base = grid_dataset(15);
            base.with_y(vec![1.0; base.len()]).unwrap()
        };
        let fitted = fit_betas_given_theta(&data, &theta, &cfg).unwrap();
        for beta in fitted.betas.values() {
            assert!((beta[0] - 1.0).abs() < 1e-6, "constant term {}", beta[0]);
            for c in &beta[1..] {
                assert!(c.abs() < 1e-5, "higher term {c}");
            }
        }
        assert!(fitted.q_value() < 1e-12);
    }

    #[test]
    fn single_observation_cube_with_degree_zero_is_the_point_mean() {
        let mut cfg = small_config();
        cfg.vartheta = 0;
        let theta = theta_star();
        // One observation per cube; vartheta = 0 means beta is the cube
        // mean, here the single point's response.
        let x_pts = [[-0.8, -0.8], [0.5, 0.5], [-0.8, 0.5], [0.5, -0.8]];
        let mut y = Vec::new();
        let mut z = Vec::new();
        for (k, x) in x_pts.iter().enumerate() {
            let b1: Vec<f64> = theta.blocks()[0].iter().map(|t| t * x[0]).collect();
            let b2: Vec<f64> = theta.blocks()[1].iter().map(|t| t * x[1]).collect();
            z.push([b1, b2].concat());
            y.push(k as f64 + 1.0);
        }
        let data = Dataset::new(y, z).unwrap();
        let fitted = fit_betas_given_theta(&data, &theta, &cfg).unwrap();
        assert_eq!(fitted.betas.len(), 4);
        assert!(fitted.ridge_cubes.is_empty());
        let mut seen: Vec<f64> = fitted.betas.values().map(|b| b[0]).collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, want) in seen.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((v - want).abs() < 1e-10, "{v} vs {want}");
        }
    }

    #[test]
    fn q_loss_zero_when_y_equals_fit_and_quadratic_in_perturbation() {
        let cfg = small_config();
        let theta = theta_star();
        let data = grid_dataset(12);
        let fitted = fit_betas_given_theta(&data, &theta, &cfg).unwrap();

        // Replace y by fitted values: loss becomes 0.
        let mut y_hat = Vec::with_capacity(data.len());
        for t in 0..data.len() {
            let x = index_values(data.z_row(t), &theta).unwrap();
            let ctx = context_for(&cfg, data.len()).unwrap();
            y_hat.push(piecewise_eval_ctx(&x, &fitted.betas, &ctx).unwrap());
        }
        let exact = data.with_y(y_hat.clone()).unwrap();
        let q0 = q_loss(&exact, &theta, &fitted.betas, &cfg).unwrap();
        assert!(q0.value < 1e-20);
        assert_eq!(q0.in_region, data.len());

        // Perturbing one response by eps changes Q by eps(2 resid + eps)/T.
        let eps = 0.1;
        let mut y_pert = y_hat;
        y_pert[5] += eps;
        let pert = data.with_y(y_pert).unwrap();
        let q1 = q_loss(&pert, &theta, &fitted.betas, &cfg).unwrap();
        let expected = eps * eps / q0.in_region as f64;
        assert!((q1.value - expected).abs() < 1e-12);
    }

    #[test]
    fn in_span_targets_interpolate_to_machine_precision() {
        // y equals the constant plus linear basis entries exactly; the
        // profiled residuals must vanish.
        let cfg = small_config();
        let theta = theta_star();
        let base = grid_dataset(12);
        let ctx = context_for(&cfg, base.len()).unwrap();
        let mut y = Vec::with_capacity(base.len());
        for t in 0..base.len() {
            let x = index_values(base.z_row(t), &theta).unwrap();
            let idx = ctx.partition().cube_index(&x).unwrap();
            let b = ctx.basis_in_cube(&x, &idx).unwrap();
            y.push(2.0 * b[0] - 0.7 * b[1] + 0.3 * b[2]);
        }
        let data = base.with_y(y).unwrap();
        let fitted = fit_betas_given_theta(&data, &theta, &cfg).unwrap();
        let q = q_loss(&data, &theta, &fitted.betas, &cfg).unwrap();
        assert!(q.value.sqrt() < 1e-8, "rmse {}", q.value.sqrt());
    }

    #[test]
    fn document_roundtrip_preserves_fit() {
        let cfg = small_config();
        let theta = theta_star();
        let data = grid_dataset(12);
        let fitted = fit_betas_given_theta(&data, &theta, &cfg).unwrap();
        let ctx = context_for(&cfg, data.len()).unwrap();
        let fit = HierarchicalFit {
            theta_hat: theta,
            betas: fitted.betas,
            sigma2_hat: 0.0,
            occupancy: fitted.occupancy,
            ridge_cubes: fitted.ridge_cubes,
            loss: fitted.sse / fitted.in_region as f64,
            in_region: fitted.in_region,
            config: cfg,
            cubes_per_axis: 3,
            converged: true,
            ctx,
        };
        let json = serde_json::to_string(&fit.to_document()).unwrap();
        let back = HierarchicalFit::from_document(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.betas, fit.betas);
        assert_eq!(back.theta_hat, fit.theta_hat);
        let x = [0.11, -0.37];
        assert_eq!(back.predict(&x).unwrap(), fit.predict(&x).unwrap());
    }
}
