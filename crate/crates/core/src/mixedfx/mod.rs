//! Random-intercept linear mixed models.
//!
//! `y = Xβ + Zu + ε` with `u ~ N(0, σu² I)` over the levels of one grouping
//! factor and `ε ~ N(0, σe² I)`. The variance ratio `λ = σu²/σe²` is found by
//! a bounded one-dimensional search over `log λ` on the profiled (RE)ML
//! log-likelihood; `β` and `σe²` are closed-form at each `λ`.

mod correlation;
mod design;
mod inference;
mod lmm;
mod ols;

pub use correlation::pearson;
pub use design::DesignMatrix;
pub use inference::{normal_cdf, wald_test};
pub use lmm::{fit_lmm, profile_at, GlsSolver, LmmConfig, ProfilePoint};
pub use ols::fit_ols;

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    #[default]
    #[serde(rename = "REML")]
    Reml,
    #[serde(rename = "ML")]
    Ml,
    #[serde(rename = "OLS")]
    Ols,
}

/// Diagnostics recorded alongside a fit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    /// Variance ratio σu²/σe² at the optimum (0 on the lower boundary).
    pub lambda: f64,
    /// True when the optimum sits on the lower bound of the search interval.
    pub boundary_lower: bool,
    /// True when the optimum sits on the upper bound of the search interval.
    pub boundary_upper: bool,
    pub iterations: u32,
    pub solver: Option<GlsSolver>,
    /// Label of the random-intercept grouping factor.
    pub grouping: String,
    /// Degrees-of-freedom treatment of the Wald tests.
    pub df_method: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedFit {
    pub coefficient_names: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub p_values: Vec<f64>,
    pub sigma_u2: f64,
    pub sigma_e2: f64,
    pub log_likelihood: f64,
    pub method: FitMethod,
    pub converged: bool,
    pub n: usize,
    pub p: usize,
    pub n_groups: usize,
    pub metadata: FitMetadata,
}

impl MixedFit {
    pub fn z_values(&self) -> Vec<f64> {
        self.beta.iter().zip(&self.se).map(|(b, s)| b / s).collect()
    }
}
