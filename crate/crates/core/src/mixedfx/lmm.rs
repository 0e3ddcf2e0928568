use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{wald_test, DesignMatrix, FitMetadata, FitMethod, MixedFit};
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// How `V(λ) = I + λZZᵀ` is handled when solving the GLS problem.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum GlsSolver {
    /// Closed-form inverse of each group's `I + λ11ᵀ` block.
    #[default]
    Block,
    /// Explicit n × n Cholesky of `V`. O(n³); a cross-check for `Block`.
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmmConfig {
    pub method: FitMethod,
    /// Search interval for log λ.
    pub log_lambda_bounds: (f64, f64),
    /// Interval width at which the search stops.
    pub tolerance: f64,
    pub max_iterations: u32,
    pub solver: GlsSolver,
    /// Skip the search and fit at this λ (may be 0).
    pub fixed_lambda: Option<f64>,
}

impl Default for LmmConfig {
    fn default() -> Self {
        Self {
            method: FitMethod::Reml,
            log_lambda_bounds: (-12.0, 12.0),
            tolerance: 1e-8,
            max_iterations: 200,
            solver: GlsSolver::Block,
            fixed_lambda: None,
        }
    }
}

/// Everything the profiled likelihood yields at one λ.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfilePoint {
    pub lambda: f64,
    pub log_likelihood: f64,
    pub beta: Vec<f64>,
    /// `(XᵀV⁻¹X)⁻¹`, to be scaled by σe².
    pub cov_unscaled: Matrix,
    pub rss: f64,
    pub sigma_e2: f64,
}

/// λ-independent sufficient statistics for the block solver.
struct BlockStats {
    xtx: Matrix,
    xty: Vec<f64>,
    group_of: Vec<usize>,
    sizes: Vec<f64>,
    col_sums: Vec<Vec<f64>>,
    y_sums: Vec<f64>,
}

impl BlockStats {
    fn new(d: &DesignMatrix) -> Self {
        let (group_of, q) = d.group_indices();
        let p = d.p();
        let mut sizes = vec![0.0; q];
        let mut col_sums = vec![vec![0.0; p]; q];
        let mut y_sums = vec![0.0; q];
        for (i, &g) in group_of.iter().enumerate() {
            sizes[g] += 1.0;
            y_sums[g] += d.y[i];
            for (s, x) in col_sums[g].iter_mut().zip(d.x.row(i)) {
                *s += x;
            }
        }
        Self { xtx: d.x.gram(), xty: d.x.t_mul_vec(&d.y), group_of, sizes, col_sums, y_sums }
    }
}

fn finish(
    d: &DesignMatrix,
    method: FitMethod,
    lambda: f64,
    a: Matrix,
    b: Vec<f64>,
    log_det_v: f64,
    rss_of: impl Fn(&[f64]) -> f64,
) -> Result<ProfilePoint> {
    let (n, p) = (d.n() as f64, d.p() as f64);
    let chol = Cholesky::new(&a)?;
    let beta = chol.solve(&b);
    let rss = rss_of(&beta);
    if !(rss > 0.0) || !rss.is_finite() {
        return Err(Error::Numerical(format!("non-positive weighted RSS {rss} at λ = {lambda}")));
    }
    let (log_likelihood, sigma_e2) = match method {
        FitMethod::Ml => {
            let s2 = rss / n;
            (-0.5 * (n * (LN_2PI + libm::log(s2)) + log_det_v + n), s2)
        }
        FitMethod::Reml => {
            let df = n - p;
            let s2 = rss / df;
            (-0.5 * (df * (LN_2PI + libm::log(s2)) + log_det_v + chol.log_det() + df), s2)
        }
        FitMethod::Ols => return Err(Error::InvalidParameter("OLS is not a profiled likelihood".into())),
    };
    Ok(ProfilePoint { lambda, log_likelihood, beta, cov_unscaled: chol.inverse(), rss, sigma_e2 })
}

fn profile_block(d: &DesignMatrix, s: &BlockStats, method: FitMethod, lambda: f64) -> Result<ProfilePoint> {
    let p = d.p();
    let weights: Vec<f64> = s.sizes.iter().map(|&m| lambda / (1.0 + lambda * m)).collect();
    let mut a = s.xtx.clone();
    let mut b = s.xty.clone();
    for (g, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let cs = &s.col_sums[g];
        for i in 0..p {
            b[i] -= w * cs[i] * s.y_sums[g];
            for j in 0..p {
                a[(i, j)] -= w * cs[i] * cs[j];
            }
        }
    }
    let log_det_v: f64 = s.sizes.iter().map(|&m| libm::log1p(lambda * m)).sum();
    finish(d, method, lambda, a, b, log_det_v, |beta| {
        // rᵀV⁻¹r with V⁻¹ = I − w_g 11ᵀ per group
        let mut ss = 0.0;
        let mut group_r = vec![0.0; weights.len()];
        for (i, &g) in s.group_of.iter().enumerate() {
            let r = d.y[i] - dot(d.x.row(i), beta);
            ss += r * r;
            group_r[g] += r;
        }
        ss - weights.iter().zip(&group_r).map(|(w, r)| w * r * r).sum::<f64>()
    })
}

fn profile_dense(d: &DesignMatrix, method: FitMethod, lambda: f64) -> Result<ProfilePoint> {
    let n = d.n();
    let (group_of, _) = d.group_indices();
    let mut v = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            if group_of[i] == group_of[j] {
                v[(i, j)] += lambda;
            }
        }
    }
    let chol = Cholesky::new(&v)?;
    let y_w = chol.forward(&d.y);
    let mut x_w = Matrix::zeros(n, d.p());
    for j in 0..d.p() {
        let col = chol.forward(&d.x.column(j));
        for i in 0..n {
            x_w[(i, j)] = col[i];
        }
    }
    let a = x_w.gram();
    let b = x_w.t_mul_vec(&y_w);
    finish(d, method, lambda, a, b, chol.log_det(), |beta| {
        let fitted = x_w.mul_vec(beta);
        y_w.iter().zip(&fitted).map(|(y, f)| (y - f) * (y - f)).sum()
    })
}

/// d ℓ / d log λ of the profiled criterion, from per-group sums.
fn score_block(d: &DesignMatrix, s: &BlockStats, method: FitMethod, lambda: f64) -> Result<f64> {
    let pt = profile_block(d, s, method, lambda)?;
    let p = d.p();
    let mut group_r = vec![0.0; s.sizes.len()];
    for (i, &g) in s.group_of.iter().enumerate() {
        group_r[g] += d.y[i] - dot(d.x.row(i), &pt.beta);
    }
    let mut d_rss = 0.0;
    let mut d_log_det_v = 0.0;
    let mut d_log_det_a = 0.0;
    for (g, &m) in s.sizes.iter().enumerate() {
        let k = 1.0 / (1.0 + lambda * m);
        d_rss -= (group_r[g] * k) * (group_r[g] * k);
        d_log_det_v += m * k;
        if method == FitMethod::Reml {
            let h: Vec<f64> = s.col_sums[g].iter().map(|c| c * k).collect();
            for i in 0..p {
                for j in 0..p {
                    d_log_det_a -= h[i] * pt.cov_unscaled[(i, j)] * h[j];
                }
            }
        }
    }
    let df = match method {
        FitMethod::Reml => (d.n() - p) as f64,
        _ => d.n() as f64,
    };
    Ok(-0.5 * lambda * (df * d_rss / pt.rss + d_log_det_v + d_log_det_a))
}

/// Refines an interior optimum by bisection on the sign of the score.
fn polish(d: &DesignMatrix, s: &BlockStats, method: FitMethod, theta: f64, bounds: (f64, f64)) -> Option<f64> {
    let score = |t: f64| score_block(d, s, method, libm::exp(t)).ok().filter(|v| v.is_finite());
    let mut step = 1e-6;
    let (mut a, mut b);
    loop {
        a = (theta - step).max(bounds.0);
        b = (theta + step).min(bounds.1);
        if score(a)? > 0.0 && score(b)? < 0.0 {
            break;
        }
        step *= 4.0;
        if step > 1.0 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if score(mid)? > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Profiled (RE)ML log-likelihood and GLS estimates at a fixed λ ≥ 0.
pub fn profile_at(design: &DesignMatrix, method: FitMethod, solver: GlsSolver, lambda: f64) -> Result<ProfilePoint> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("λ = {lambda} must be finite and >= 0")));
    }
    match solver {
        GlsSolver::Block => profile_block(design, &BlockStats::new(design), method, lambda),
        GlsSolver::Dense => profile_dense(design, method, lambda),
    }
}

/// Fits the random-intercept model by profiling over log λ.
pub fn fit_lmm(design: &DesignMatrix, config: &LmmConfig) -> Result<MixedFit> {
    design.validate()?;
    let method = match config.method {
        FitMethod::Ols => return super::fit_ols(design),
        m => m,
    };
    let (lo, hi) = config.log_lambda_bounds;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("invalid log λ bounds ({lo}, {hi})")));
    }
    let stats = BlockStats::new(design);
    let eval = |lambda: f64| -> Result<ProfilePoint> {
        match config.solver {
            GlsSolver::Block => profile_block(design, &stats, method, lambda),
            GlsSolver::Dense => profile_dense(design, method, lambda),
        }
    };
    // non-finite or failed evaluations rank below everything
    let score = |pt: &Result<ProfilePoint>| match pt {
        Ok(p) if p.log_likelihood.is_finite() => p.log_likelihood,
        _ => f64::NEG_INFINITY,
    };

    let mut meta = FitMetadata {
        solver: Some(config.solver),
        grouping: "random intercept".to_string(),
        df_method: "normal (z)".to_string(),
        ..Default::default()
    };

    let (best, converged) = if let Some(lambda) = config.fixed_lambda {
        (eval(lambda)?, true)
    } else {
        let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = score(&eval(libm::exp(c)));
        let mut fd = score(&eval(libm::exp(d)));
        let mut iterations = 0u32;
        while b - a > config.tolerance && iterations < config.max_iterations {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = score(&eval(libm::exp(c)));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = score(&eval(libm::exp(d)));
            }
            iterations += 1;
        }
        meta.iterations = iterations;
        let converged = b - a <= config.tolerance;
        let interior = 0.5 * (a + b);

        // the optimum is the best of the interior point and both endpoints
        let candidates = [
            (interior, eval(libm::exp(interior))),
            (lo, eval(libm::exp(lo))),
            (hi, eval(libm::exp(hi))),
        ];
        let best_idx = (0..3)
            .max_by(|&i, &j| score(&candidates[i].1).total_cmp(&score(&candidates[j].1)).then(j.cmp(&i)))
            .expect("three candidates");
        let best_score = score(&candidates[best_idx].1);
        if !best_score.is_finite() {
            return Err(Error::Numerical("profiled likelihood is non-finite at every probe point".into()));
        }
        let (theta, pt) = candidates.into_iter().nth(best_idx).expect("index in range");
        let mut pt = pt?;
        if theta - lo <= config.tolerance {
            meta.boundary_lower = true;
            if let Ok(zero) = eval(0.0) {
                if zero.log_likelihood >= pt.log_likelihood {
                    pt = zero;
                }
            }
        } else if hi - theta <= config.tolerance {
            meta.boundary_upper = true;
        } else if let Some(t) = polish(design, &stats, method, theta, (lo, hi)) {
            // golden section alone stalls near sqrt(eps) on the flat top
            if let Ok(refined) = eval(libm::exp(t)) {
                if refined.log_likelihood >= pt.log_likelihood - 1e-9 * (1.0 + pt.log_likelihood.abs()) {
                    pt = refined;
                }
            }
        }
        (pt, converged)
    };

    let mut lambda = best.lambda;
    if meta.boundary_lower {
        lambda = 0.0;
    }
    meta.lambda = best.lambda;
    let p = design.p();
    let se: Vec<f64> = (0..p).map(|j| libm::sqrt(best.cov_unscaled[(j, j)] * best.sigma_e2)).collect();
    let p_values = best.beta.iter().zip(&se).map(|(&b, &s)| wald_test(b, s)).collect::<Result<Vec<f64>>>()?;
    Ok(MixedFit {
        coefficient_names: design.column_names.clone(),
        beta: best.beta,
        se,
        p_values,
        sigma_u2: lambda * best.sigma_e2,
        sigma_e2: best.sigma_e2,
        log_likelihood: best.log_likelihood,
        method,
        converged,
        n: design.n(),
        p,
        n_groups: design.n_groups(),
        metadata: meta,
    })
}
