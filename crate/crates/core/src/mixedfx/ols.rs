use alloc::vec::Vec;

use super::design::RANK_TOLERANCE;
use super::{wald_test, DesignMatrix, FitMetadata, FitMethod, MixedFit};
use crate::error::{Error, Result};
use crate::linalg::PivotedQr;

/// Ordinary least squares with `σ̂² = RSS/(n−p)` standard errors.
pub fn fit_ols(design: &DesignMatrix) -> Result<MixedFit> {
    design.validate()?;
    let (n, p) = (design.n(), design.p());
    let qr = PivotedQr::new(&design.x, RANK_TOLERANCE);
    if qr.rank() < p {
        return Err(Error::RankDeficient {
            columns: qr.dependent_columns().into_iter().map(|j| design.column_names[j].clone()).collect(),
        });
    }
    let beta = qr.solve_least_squares(&design.y)?;
    let fitted = design.x.mul_vec(&beta);
    let rss: f64 = design.y.iter().zip(&fitted).map(|(y, f)| (y - f) * (y - f)).sum();
    let sigma2 = rss / (n - p) as f64;
    let cov = qr.gram_inverse()?;
    let se: Vec<f64> = (0..p).map(|j| libm::sqrt(cov[(j, j)] * sigma2)).collect();
    let p_values = beta
        .iter()
        .zip(&se)
        .map(|(&b, &s)| if s > 0.0 { wald_test(b, s) } else { Ok(if b == 0.0 { 1.0 } else { 0.0 }) })
        .collect::<Result<Vec<f64>>>()?;
    let log_likelihood = if rss > 0.0 {
        let nf = n as f64;
        -0.5 * nf * (libm::log(2.0 * core::f64::consts::PI * rss / nf) + 1.0)
    } else {
        f64::INFINITY
    };
    Ok(MixedFit {
        coefficient_names: design.column_names.clone(),
        beta,
        se,
        p_values,
        sigma_u2: 0.0,
        sigma_e2: sigma2,
        log_likelihood,
        method: FitMethod::Ols,
        converged: true,
        n,
        p,
        n_groups: design.n_groups(),
        metadata: FitMetadata { df_method: "normal (z)".into(), ..Default::default() },
    })
}
