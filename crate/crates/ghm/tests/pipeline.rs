//! End-to-end integration: simulate, fit, bootstrap, predict.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ghm::estimator::{fit, index_values, FitOptions};
use ghm::inference::{bootstrap_theta, BootstrapConfig};
use ghm::sim::{simulate, true_f, true_theta, SimDesign};

#[test]
fn fit_recovers_benchmark_parameters() {
    let design = SimDesign {
        t_len: 1000,
        seed: 42,
        ..SimDesign::default()
    };
    let config = design.to_model_config();
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let data = simulate(&design, &mut rng).unwrap();

    let t0 = std::time::Instant::now();
    let fitted = fit(&data, &config, &FitOptions::default()).unwrap();
    let fit_time = t0.elapsed();

    let theta_star = true_theta(design.r, 2).unwrap();
    let err: f64 = fitted
        .theta_hat
        .flatten()
        .iter()
        .zip(theta_star.flatten())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    println!(
        "fit: {:.2?}, theta error {err:.5}, Q = {:.6}, in-region {} of {}",
        fit_time,
        fitted.loss,
        fitted.in_region,
        data.len()
    );
    assert!(err < 0.08, "theta error {err}");

    // Predictions near the target away from the boundary.
    for x in [[-0.3, -0.3], [0.0, 0.0], [0.4, 0.2]] {
        let pred = fitted.predict(&x).unwrap();
        let truth = true_f(&x, 2);
        assert!(
            (pred - truth).abs() < 0.5,
            "at {x:?}: {pred} vs {truth}"
        );
    }

    let t1 = std::time::Instant::now();
    let boot = bootstrap_theta(
        &data,
        &fitted,
        &BootstrapConfig {
            reps: 20,
            seed: 7,
            ..BootstrapConfig::default()
        },
    )
    .unwrap();
    println!(
        "bootstrap 20 reps: {:.2?}, failed {}",
        t1.elapsed(),
        boot.failed
    );
    assert_eq!(boot.failed, 0);
    assert!(boot.ci.iter().all(|(lo, hi)| lo <= hi));
    // Residual fitted values stay consistent: a draw near theta_hat.
    for (s, (lo, hi)) in boot.ci.iter().enumerate() {
        let width = hi - lo;
        assert!(width < 0.5, "coordinate {s} CI width {width}");
    }
}

#[test]
fn noiseless_bootstrap_collapses_to_point_mass() {
    let design = SimDesign {
        t_len: 300,
        noise_sd: 0.0,
        rho_eps: 0.0,
        seed: 5,
        m: 4,
        ..SimDesign::default()
    };
    let config = design.to_model_config();
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let data = simulate(&design, &mut rng).unwrap();
    let fitted = fit(&data, &config, &FitOptions::default()).unwrap();

    // With zero residuals every refit reproduces theta_hat exactly.
    let residual_max = (0..data.len())
        .map(|t| {
            let x = index_values(data.z_row(t), &fitted.theta_hat).unwrap();
            match fitted.predict(&x) {
                Ok(v) => (data.y()[t] - v).abs(),
                Err(_) => 0.0,
            }
        })
        .fold(0.0f64, f64::max);
    println!("noiseless max residual {residual_max:.2e}");

    let boot = bootstrap_theta(
        &data,
        &fitted,
        &BootstrapConfig {
            reps: 10,
            seed: 3,
            ..BootstrapConfig::default()
        },
    )
    .unwrap();
    let flat = fitted.theta_hat.flatten();
    for draw in &boot.theta_draws {
        for (a, b) in draw.iter().zip(&flat) {
            assert!((a - b).abs() <= 1e-6, "draw {a} vs {b}");
        }
    }
    for (s, (lo, hi)) in boot.ci.iter().enumerate() {
        assert!(hi - lo <= 1e-6, "coordinate {s} width {}", hi - lo);
    }
}
