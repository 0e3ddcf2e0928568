mod common;

use common::oracle::{grid_search, mme_profile};
use common::simulate;
use stereoleak_core::linalg::Matrix;
use stereoleak_core::mixedfx::{
    fit_lmm, fit_ols, profile_at, DesignMatrix, FitMethod, GlsSolver, LmmConfig,
};

fn reml() -> LmmConfig {
    LmmConfig::default()
}

fn ml() -> LmmConfig {
    LmmConfig { method: FitMethod::Ml, ..LmmConfig::default() }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn block_and_dense_solvers_agree() {
    let data = simulate(11, 8, 5, &[0.2, 0.5, -0.3], 0.8, 1.0);
    let d = data.design();
    for method in [FitMethod::Reml, FitMethod::Ml] {
        for lambda in [0.0, 1e-5, 0.3, 1.0, 7.5, 400.0] {
            let a = profile_at(&d, method, GlsSolver::Block, lambda).unwrap();
            let b = profile_at(&d, method, GlsSolver::Dense, lambda).unwrap();
            assert!((a.log_likelihood - b.log_likelihood).abs() < 1e-9, "{method:?} λ={lambda}");
            assert!(max_abs_diff(&a.beta, &b.beta) < 1e-9);
            assert!((a.sigma_e2 - b.sigma_e2).abs() < 1e-9);
        }
    }
    let fb = fit_lmm(&d, &reml()).unwrap();
    let fd = fit_lmm(&d, &LmmConfig { solver: GlsSolver::Dense, ..reml() }).unwrap();
    assert!(max_abs_diff(&fb.beta, &fd.beta) < 1e-9);
    assert!(max_abs_diff(&fb.se, &fd.se) < 1e-9);
}

#[test]
fn block_profile_matches_mixed_model_equations() {
    let data = simulate(5, 6, 7, &[1.0, -0.4, 0.25, 0.0], 1.2, 0.7);
    let d = data.design();
    for (method, reml) in [(FitMethod::Reml, true), (FitMethod::Ml, false)] {
        for lambda in [1e-4, 0.05, 1.0, 30.0] {
            let lib = profile_at(&d, method, GlsSolver::Block, lambda).unwrap();
            let ora = mme_profile(&data.y, &data.x, &data.groups, lambda, reml);
            assert!((lib.log_likelihood - ora.log_likelihood).abs() < 1e-8, "{method:?} λ={lambda}");
            assert!(max_abs_diff(&lib.beta, &ora.beta) < 1e-9);
        }
    }
}

#[test]
fn optimum_matches_grid_oracle_small() {
    // 40 rows, 8 groups
    for seed in [1, 2, 3] {
        let data = simulate(seed, 8, 5, &[0.0, 0.4, -0.2], 1.0, 1.0);
        let fit = fit_lmm(&data.design(), &reml()).unwrap();
        let (_, best) = grid_search(&data.y, &data.x, &data.groups, true);
        if fit.metadata.boundary_lower {
            assert!(fit.log_likelihood >= best.log_likelihood - 1e-6);
            continue;
        }
        assert!((fit.log_likelihood - best.log_likelihood).abs() < 1e-6, "seed {seed}");
        assert!(max_abs_diff(&fit.beta, &best.beta) < 1e-6);
    }
}

#[test]
fn zero_lambda_with_singleton_groups_is_ols() {
    let data = simulate(3, 40, 1, &[0.5, 1.0, -2.0], 0.0, 1.0);
    let d = data.design();
    let ols = fit_ols(&d).unwrap();
    for method in [FitMethod::Reml, FitMethod::Ml] {
        let fit = fit_lmm(&d, &LmmConfig { method, fixed_lambda: Some(0.0), ..LmmConfig::default() }).unwrap();
        assert!(max_abs_diff(&fit.beta, &ols.beta) < 1e-8);
        assert_eq!(fit.sigma_u2, 0.0);
    }
}

/// Predictors centred within equal-sized groups make the GLS estimate
/// independent of λ, so REML and ML must give the same beta.
#[test]
fn reml_and_ml_beta_agree_when_gls_is_lambda_free() {
    for seed in 0..5 {
        let mut data = simulate(100 + seed, 25, 10, &[0.3, 0.6, -0.1], 0.5, 1.0);
        for g in 0..25 {
            for j in 1..3 {
                let m: f64 = (0..10).map(|r| data.x[g * 10 + r][j]).sum::<f64>() / 10.0;
                (0..10).for_each(|r| data.x[g * 10 + r][j] -= m);
            }
        }
        let d = data.design();
        let a = fit_lmm(&d, &reml()).unwrap();
        let b = fit_lmm(&d, &ml()).unwrap();
        assert!(max_abs_diff(&a.beta, &b.beta) < 1e-6, "seed {seed}");
    }
}

/// In general designs the two criteria pick different λ, and beta moves by
/// O(p/n) of its standard error.
#[test]
fn reml_and_ml_beta_close_for_large_n() {
    for seed in 0..5 {
        let data = simulate(100 + seed, 25, 10, &[0.3, 0.6, -0.1], 0.5, 1.0);
        let d = data.design();
        let a = fit_lmm(&d, &reml()).unwrap();
        let b = fit_lmm(&d, &ml()).unwrap();
        for j in 0..d.p() {
            assert!((a.beta[j] - b.beta[j]).abs() < 0.05 * a.se[j], "seed {seed} j {j}");
        }
    }
}

#[test]
fn score_matches_finite_difference() {
    let data = simulate(8, 9, 6, &[0.0, 0.5, 0.2], 0.7, 1.0);
    let d = data.design();
    for method in [FitMethod::Reml, FitMethod::Ml] {
        let f = |t: f64| profile_at(&d, method, GlsSolver::Block, t.exp()).unwrap().log_likelihood;
        let fit = fit_lmm(&d, &LmmConfig { method, ..reml() }).unwrap();
        if fit.metadata.boundary_lower {
            continue;
        }
        // the refined optimum is a stationary point
        let t = fit.metadata.lambda.ln();
        let h = 1e-4;
        let slope = (f(t + h) - f(t - h)) / (2.0 * h);
        assert!(slope.abs() < 1e-6, "{method:?} slope {slope:e}");
    }
}

#[test]
fn optimum_dominates_interval_endpoints() {
    for seed in 0..10 {
        let su2 = [0.0, 0.2, 2.0][seed as usize % 3];
        let data = simulate(200 + seed, 10, 6, &[0.0, 0.5, 0.5], su2, 1.0);
        let d = data.design();
        for (cfg, method) in [(reml(), FitMethod::Reml), (ml(), FitMethod::Ml)] {
            let fit = fit_lmm(&d, &cfg).unwrap();
            let lo = profile_at(&d, method, GlsSolver::Block, (-12f64).exp()).unwrap();
            let hi = profile_at(&d, method, GlsSolver::Block, 12f64.exp()).unwrap();
            assert!(fit.log_likelihood >= lo.log_likelihood);
            assert!(fit.log_likelihood >= hi.log_likelihood);
        }
    }
}

#[test]
fn response_scaling_leaves_p_values() {
    let data = simulate(42, 12, 8, &[0.1, 0.4, 0.0, -0.3], 0.6, 1.0);
    let d = data.design();
    let base = fit_lmm(&d, &reml()).unwrap();
    for c in [0.01, 3.5, 250.0] {
        let scaled = DesignMatrix { y: d.y.iter().map(|v| v * c).collect(), ..d.clone() };
        let fit = fit_lmm(&scaled, &reml()).unwrap();
        for j in 0..d.p() {
            assert!((fit.beta[j] - c * base.beta[j]).abs() < 1e-7 * c.max(1.0));
            assert!((fit.se[j] - c * base.se[j]).abs() < 1e-7 * c.max(1.0));
            assert!((fit.p_values[j] - base.p_values[j]).abs() < 1e-9, "c={c} j={j}");
        }
    }
}

#[test]
fn row_permutation_leaves_fit() {
    let data = simulate(77, 12, 8, &[0.1, 0.4, 0.0, -0.3], 0.6, 1.0);
    let d = data.design();
    let base = fit_lmm(&d, &reml()).unwrap();
    let n = d.n();
    // deterministic scramble
    let perm: Vec<usize> = (0..n).map(|i| (i * 37 + 11) % n).collect();
    let permuted = DesignMatrix::new(
        perm.iter().map(|&i| d.y[i]).collect(),
        d.x.select_rows(&perm),
        d.column_names.clone(),
        perm.iter().map(|&i| d.groups[i].clone()).collect(),
        vec![],
    )
    .unwrap();
    let fit = fit_lmm(&permuted, &reml()).unwrap();
    assert!(max_abs_diff(&fit.beta, &base.beta) < 1e-10);
    assert!(max_abs_diff(&fit.se, &base.se) < 1e-10);
    assert!((fit.sigma_u2 - base.sigma_u2).abs() < 1e-10);
    assert!((fit.sigma_e2 - base.sigma_e2).abs() < 1e-10);
}

#[test]
fn no_group_variance_hits_lower_boundary() {
    let data = simulate(9, 30, 16, &[0.0, 0.5, 0.0, 0.3, 0.0], 0.0, 1.0);
    let d = data.design();
    // with u = 0 the estimate may still land slightly inside; the beta contract holds either way
    let fit = fit_lmm(&d, &reml()).unwrap();
    let ols = fit_ols(&d).unwrap();
    assert!(fit.sigma_u2 >= 0.0);
    assert!(max_abs_diff(&fit.beta, &ols.beta) < 1e-2);
    if fit.metadata.boundary_lower {
        assert_eq!(fit.sigma_u2, 0.0);
        assert!(fit.converged);
    }
}

#[test]
fn fit_invariants_hold() {
    for seed in 0..20 {
        let data = simulate(300 + seed, 10, 6, &[0.2, -0.1, 0.3], 0.5, 1.0);
        let fit = fit_lmm(&data.design(), &reml()).unwrap();
        assert!(fit.sigma_u2 >= 0.0 && fit.sigma_e2 > 0.0);
        assert!(fit.converged);
        assert!(fit.se.iter().all(|s| *s > 0.0));
        assert!(fit.p_values.iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(fit.n_groups, 10);
    }
}

#[test]
fn config_errors() {
    let d = simulate(1, 5, 5, &[0.0, 1.0], 1.0, 1.0).design();
    let bad = LmmConfig { log_lambda_bounds: (3.0, -3.0), ..reml() };
    assert!(fit_lmm(&d, &bad).is_err());
    assert!(profile_at(&d, FitMethod::Reml, GlsSolver::Block, -1.0).is_err());
    let tiny = DesignMatrix::new(
        vec![1.0, 2.0, 3.0],
        Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap(),
        vec!["intercept".into(), "x".into()],
        vec!["a".into(), "b".into(), "a".into()],
        vec![],
    );
    assert!(tiny.is_err());
}
