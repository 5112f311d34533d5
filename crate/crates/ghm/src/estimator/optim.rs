//! Outer minimization over the product of unit half-spheres.
//!
//! Each block `theta_j` with `theta_{j,1} > 0` is charted by the ratio map
//! `w -> (1, w) / ||(1, w)||`, a smooth bijection onto the open half-sphere
//! with no boundary in the search space; the total chart dimension is
//! `d - r`. The profiled objective `theta -> min_B Q_T(theta, B)` is
//! piecewise smooth (cube membership jumps), so the search is a
//! derivative-free Nelder-Mead with restarts, run from several starts.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure_dim, Error, Result};

use super::config::{Dataset, ModelConfig, ThetaParam};
use super::sieve::{context_for, fit_betas_ctx, q_loss, HierarchicalFit, SieveContext};

/// Options for [`fit`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Number of starts: one least-squares-direction start plus random
    /// unit-vector starts. Zero is allowed when `extra_starts` is not
    /// empty.
    pub n_starts: usize,
    /// Outer iteration cap.
    pub max_outer: usize,
    /// Stop when the outer `Q_T` improvement falls below this.
    pub tol: f64,
    /// Nelder-Mead iteration cap per outer round.
    pub nm_max_iters: usize,
    /// Seed for the start generator.
    pub seed: u64,
    /// Explicit additional starts (e.g. warm starts), tried first.
    pub extra_starts: Vec<ThetaParam>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_starts: 8,
            max_outer: 50,
            tol: 1e-8,
            nm_max_iters: 120,
            seed: 0,
            extra_starts: Vec::new(),
        }
    }
}

impl FitOptions {
    /// Single warm start, as used by bootstrap refits.
    pub fn warm(theta: &ThetaParam) -> Self {
        Self {
            n_starts: 0,
            extra_starts: vec![theta.clone()],
            ..Self::default()
        }
    }
}

/// Ratio chart between constrained blocks and an unconstrained vector.
#[derive(Debug, Clone)]
pub(crate) struct ThetaChart {
    block_dims: Vec<usize>,
}

impl ThetaChart {
    pub fn new(block_dims: Vec<usize>) -> Self {
        Self { block_dims }
    }

    pub fn dim(&self) -> usize {
        self.block_dims.iter().map(|d| d - 1).sum()
    }

    pub fn to_chart(&self, theta: &ThetaParam) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.dim());
        for block in theta.blocks() {
            let lead = block[0];
            w.extend(block[1..].iter().map(|v| v / lead));
        }
        w
    }

    pub fn from_chart(&self, w: &[f64]) -> Result<ThetaParam> {
        ensure_dim(w.len() == self.dim(), "chart vector has wrong dimension")?;
        let mut blocks = Vec::with_capacity(self.block_dims.len());
        let mut off = 0;
        for &dj in &self.block_dims {
            let tail = &w[off..off + dj - 1];
            let norm = (1.0 + tail.iter().map(|v| v * v).sum::<f64>()).sqrt();
            let mut block = Vec::with_capacity(dj);
            block.push(1.0 / norm);
            block.extend(tail.iter().map(|v| v / norm));
            blocks.push(block);
            off += dj - 1;
        }
        ThetaParam::new(blocks)
    }
}

/// Nelder-Mead on `f`, minimizing from `x0` with initial step `step`.
/// Returns the best vertex and value. `f` maps failures to +inf upstream.
fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iters: usize,
) -> (Vec<f64>, f64) {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const BETA: f64 = 0.5; // contraction
    const SHRINK: f64 = 0.5;

    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        let fv = f(&v);
        simplex.push((v, fv));
    }

    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = simplex[n].1 - simplex[0].1;
        let size: f64 = (0..n)
            .map(|i| (simplex[n].0[i] - simplex[0].0[i]).abs())
            .fold(0.0, f64::max);
        let ftol = 1e-10 * (1.0 + simplex[0].1.abs());
        if (spread.is_finite() && spread <= ftol) || size <= 1e-10 {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(v, _)| v[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflect: Vec<f64> = (0..n)
            .map(|i| centroid[i] + ALPHA * (centroid[i] - worst.0[i]))
            .collect();
        let f_reflect = f(&reflect);

        if f_reflect < simplex[0].1 {
            let expand: Vec<f64> = (0..n)
                .map(|i| centroid[i] + GAMMA * (reflect[i] - centroid[i]))
                .collect();
            let f_expand = f(&expand);
            simplex[n] = if f_expand < f_reflect {
                (expand, f_expand)
            } else {
                (reflect, f_reflect)
            };
        } else if f_reflect < simplex[n - 1].1 {
            simplex[n] = (reflect, f_reflect);
        } else {
            let contract: Vec<f64> = if f_reflect < worst.1 {
                (0..n)
                    .map(|i| centroid[i] + BETA * (reflect[i] - centroid[i]))
                    .collect()
            } else {
                (0..n)
                    .map(|i| centroid[i] + BETA * (worst.0[i] - centroid[i]))
                    .collect()
            };
            let f_contract = f(&contract);
            if f_contract < worst.1.min(f_reflect) {
                simplex[n] = (contract, f_contract);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for (v, b) in entry.0.iter_mut().zip(&best) {
                        *v = b + SHRINK * (*v - b);
                    }
                    entry.1 = f(&entry.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    simplex.swap_remove(0)
}

/// Profiled objective value at `theta`; failures become +inf so the
/// search routes around them.
fn profile_q(data: &Dataset, theta: &ThetaParam, ctx: &SieveContext) -> f64 {
    match fit_betas_ctx(data, theta, ctx) {
        Ok(b) => b.q_value(),
        Err(_) => f64::INFINITY,
    }
}

struct StartOutcome {
    theta: ThetaParam,
    q: f64,
    converged: bool,
}

fn search_from(
    data: &Dataset,
    ctx: &SieveContext,
    chart: &ThetaChart,
    start: &ThetaParam,
    opts: &FitOptions,
) -> StartOutcome {
    let mut w = chart.to_chart(start);
    let mut evaluate = |w: &[f64]| -> f64 {
        match chart.from_chart(w) {
            Ok(theta) => profile_q(data, &theta, ctx),
            Err(_) => f64::INFINITY,
        }
    };
    let mut best_q = evaluate(&w);
    let mut step = 0.25;
    let mut converged = false;
    for _ in 0..opts.max_outer {
        let (w_new, q_new) = nelder_mead(&mut evaluate, &w, step, opts.nm_max_iters);
        let improvement = best_q - q_new;
        if q_new < best_q {
            best_q = q_new;
            w = w_new;
        }
        step = (step * 0.5).max(1e-6);
        if improvement < opts.tol {
            converged = true;
            break;
        }
    }
    match chart.from_chart(&w) {
        Ok(theta) => StartOutcome {
            theta,
            q: best_q,
            converged,
        },
        Err(_) => StartOutcome {
            theta: start.clone(),
            q: f64::INFINITY,
            converged: false,
        },
    }
}

/// Least-squares direction start: regress `y` on all of `z`, split the
/// slope vector into blocks, and project onto the constraint set. Falls
/// back to the first coordinate vector per block when degenerate.
fn ls_direction_start(data: &Dataset, config: &ModelConfig) -> ThetaParam {
    let d = config.d();
    let t_len = data.len();
    let mut gram = nalgebra::DMatrix::<f64>::zeros(d + 1, d + 1);
    let mut rhs = nalgebra::DVector::<f64>::zeros(d + 1);
    for t in 0..t_len {
        let row = data.z_row(t);
        let y = data.y()[t];
        gram[(0, 0)] += 1.0;
        rhs[0] += y;
        for i in 0..d {
            gram[(0, i + 1)] += row[i];
            gram[(i + 1, 0)] += row[i];
            rhs[i + 1] += row[i] * y;
            for j in 0..d {
                gram[(i + 1, j + 1)] += row[i] * row[j];
            }
        }
    }
    for i in 0..=d {
        gram[(i, i)] += 1e-10;
    }
    let slope: Vec<f64> = match nalgebra::Cholesky::new(gram) {
        Some(ch) => ch.solve(&rhs).iter().skip(1).copied().collect(),
        None => vec![0.0; d],
    };
    let mut blocks = Vec::with_capacity(config.r);
    let mut off = 0;
    for &dj in &config.block_dims {
        blocks.push(slope[off..off + dj].to_vec());
        off += dj;
    }
    ThetaParam::project(blocks).unwrap_or_else(|_| fallback_theta(&config.block_dims))
}

fn fallback_theta(block_dims: &[usize]) -> ThetaParam {
    let blocks = block_dims
        .iter()
        .map(|&dj| {
            let mut b = vec![0.0; dj];
            b[0] = 1.0;
            b
        })
        .collect();
    ThetaParam::new(blocks).expect("unit coordinate blocks are valid")
}

fn random_theta(block_dims: &[usize], rng: &mut ChaCha8Rng) -> ThetaParam {
    loop {
        let blocks: Vec<Vec<f64>> = block_dims
            .iter()
            .map(|&dj| (0..dj).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        if let Ok(theta) = ThetaParam::project(blocks) {
            return theta;
        }
    }
}

/// Joint sieve least squares: alternates exact profiling of the per-cube
/// coefficients with a derivative-free search over `theta`, from several
/// starts, keeping the best.
///
/// `Q_T` is non-increasing across outer iterations by construction. The
/// returned fit carries `converged = false` when every surviving start hit
/// the outer iteration cap while still improving.
pub fn fit(data: &Dataset, config: &ModelConfig, opts: &FitOptions) -> Result<HierarchicalFit> {
    config.validate()?;
    data.validate()?;
    ensure_dim(
        data.width() == config.d(),
        format!(
            "dataset width {} does not match config dimension {}",
            data.width(),
            config.d()
        ),
    )?;
    if opts.n_starts == 0 && opts.extra_starts.is_empty() {
        return Err(Error::InvalidConfig("fit needs at least one start".into()));
    }

    let ctx = context_for(config, data.len())?;
    let chart = ThetaChart::new(config.block_dims.clone());

    let mut starts: Vec<ThetaParam> = opts.extra_starts.clone();
    if opts.n_starts > 0 {
        starts.push(ls_direction_start(data, config));
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(opts.seed);
        while starts.len() < opts.extra_starts.len() + opts.n_starts {
            starts.push(random_theta(&config.block_dims, &mut rng));
        }
    }

    // Starts are independent; run them concurrently and pick the best by
    // (Q, start index) so ties resolve deterministically.
    use rayon::prelude::*;
    let outcomes: Vec<StartOutcome> = starts
        .par_iter()
        .map(|start| search_from(data, &ctx, &chart, start, opts))
        .collect();
    let best_idx = outcomes
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            a.q.partial_cmp(&b.q)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(j))
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Numerical("no start produced a fit".into()))?;
    let best = &outcomes[best_idx];
    if !best.q.is_finite() {
        return Err(Error::Numerical(
            "no start yielded a finite objective".into(),
        ));
    }

    let theta_hat = ThetaParam::project(best.theta.blocks().to_vec())?;
    let betas = fit_betas_ctx(data, &theta_hat, &ctx)?;
    let loss = q_loss(data, &theta_hat, &betas.betas, config)?;
    let eff_params = betas.betas.len() * ctx.spec().len() + (config.d() - config.r);
    let dof = betas.in_region.saturating_sub(eff_params).max(1);
    let sigma2_hat = betas.sse / dof as f64;
    Ok(HierarchicalFit {
        theta_hat,
        betas: betas.betas,
        sigma2_hat,
        occupancy: betas.occupancy,
        ridge_cubes: betas.ridge_cubes,
        loss: loss.value,
        in_region: loss.in_region,
        config: config.clone(),
        cubes_per_axis: ctx.partition().cubes_per_axis(),
        converged: best.converged,
        ctx,
    })
}

/// Profiled objective `min_B Q_T(theta, B)` exposed for oracle tests.
pub fn profile_objective(data: &Dataset, theta: &ThetaParam, config: &ModelConfig) -> Result<f64> {
    let ctx = context_for(config, data.len())?;
    Ok(fit_betas_ctx(data, theta, &ctx)?.q_value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relu_nets::Activation;

    #[test]
    fn chart_roundtrip() {
        let chart = ThetaChart::new(vec![2, 3]);
        assert_eq!(chart.dim(), 3);
        let theta = ThetaParam::project(vec![vec![0.6, 0.8], vec![1.0, -2.0, 0.5]]).unwrap();
        let w = chart.to_chart(&theta);
        let back = chart.from_chart(&w).unwrap();
        for (a, b) in theta.flatten().iter().zip(back.flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn chart_always_yields_positive_leads() {
        let chart = ThetaChart::new(vec![2]);
        for w in [-100.0, -1.0, 0.0, 3.0, 1e6] {
            let theta = chart.from_chart(&[w]).unwrap();
            assert!(theta.blocks()[0][0] > 0.0);
            let norm: f64 = theta.blocks()[0].iter().map(|v| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nelder_mead_minimizes_a_quadratic() {
        let mut f = |x: &[f64]| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let (x, v) = nelder_mead(&mut f, &[0.0, 0.0], 0.5, 300);
        assert!(v < 1e-9, "value {v}");
        assert!((x[0] - 1.5).abs() < 1e-4 && (x[1] + 0.5).abs() < 1e-4);
    }

    fn sim_linear(t_len: usize, seed: u64) -> (Dataset, ThetaParam) {
        use rand::SeedableRng;
        let theta = ThetaParam::new(vec![vec![0.6, 0.8], vec![0.6, -0.8]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = Vec::new();
        let mut z = Vec::new();
        for _ in 0..t_len {
            let row: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.714..0.714)).collect();
            let x = crate::estimator::index_values(&row, &theta).unwrap();
            y.push(x[0] + x[1]);
            z.push(row);
        }
        (Dataset::new(y, z).unwrap(), theta)
    }

    #[test]
    fn fit_recovers_theta_on_noiseless_linear_target() {
        let (data, theta_star) = sim_linear(2000, 7);
        let config = ModelConfig {
            r: 2,
            block_dims: vec![2, 2],
            a: 0.9,
            vartheta: 1,
            m: 6,
            cubes_per_axis: Some(6),
            activation: Activation::Relu,
        };
        let opts = FitOptions {
            n_starts: 4,
            ..FitOptions::default()
        };
        let fit = fit(&data, &config, &opts).unwrap();
        let err: f64 = fit
            .theta_hat
            .flatten()
            .iter()
            .zip(theta_star.flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err < 0.05, "theta error {err}, Q = {}", fit.loss);
    }

    #[test]
    fn fit_started_at_truth_never_worsens() {
        let (data, theta_star) = sim_linear(400, 3);
        let config = ModelConfig {
            r: 2,
            block_dims: vec![2, 2],
            a: 0.9,
            vartheta: 1,
            m: 5,
            cubes_per_axis: Some(4),
            activation: Activation::Relu,
        };
        let q_start = profile_objective(&data, &theta_star, &config).unwrap();
        let opts = FitOptions {
            n_starts: 0,
            extra_starts: vec![theta_star.clone()],
            ..FitOptions::default()
        };
        let fit = fit(&data, &config, &opts).unwrap();
        assert!(fit.loss <= q_start + 1e-12, "{} vs {q_start}", fit.loss);
    }

    #[test]
    fn degenerate_constant_data_returns_constant_fit() {
        let (base, _) = sim_linear(200, 11);
        let data = base.with_y(vec![4.2; base.len()]).unwrap();
        let config = ModelConfig {
            r: 2,
            block_dims: vec![2, 2],
            a: 0.9,
            vartheta: 1,
            m: 5,
            cubes_per_axis: Some(3),
            activation: Activation::Relu,
        };
        let opts = FitOptions {
            n_starts: 2,
            ..FitOptions::default()
        };
        let fit = fit(&data, &config, &opts).unwrap();
        assert!(fit.loss < 1e-12);
        for x in [[0.0, 0.0], [0.4, -0.2]] {
            match fit.predict(&x) {
                Ok(v) => assert!((v - 4.2).abs() < 1e-6),
                Err(Error::EmptyCube) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
}
