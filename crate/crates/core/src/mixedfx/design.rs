use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, PivotedQr};
use crate::profile::CellKey;

/// Relative tolerance of the rank check on the fixed-effects matrix.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Response, fixed effects and random-intercept labels for one fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub y: Vec<f64>,
    /// n × p, column 0 the intercept.
    pub x: Matrix,
    pub column_names: Vec<String>,
    /// Random-intercept level of each row.
    pub groups: Vec<String>,
    /// (group, pair) provenance of each row.
    pub row_meta: Vec<CellKey>,
}

impl DesignMatrix {
    /// Builds a design and checks its invariants.
    pub fn new(
        y: Vec<f64>,
        x: Matrix,
        column_names: Vec<String>,
        groups: Vec<String>,
        row_meta: Vec<CellKey>,
    ) -> Result<Self> {
        let d = Self { y, x, column_names, groups, row_meta };
        d.validate()?;
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Group labels mapped to 0..q in order of first appearance.
    pub fn group_indices(&self) -> (Vec<usize>, usize) {
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        let mut idx = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let next = seen.len();
            idx.push(*seen.entry(g.as_str()).or_insert(next));
        }
        (idx, seen.len())
    }

    pub fn n_groups(&self) -> usize {
        self.group_indices().1
    }

    pub fn validate(&self) -> Result<()> {
        let (n, p) = (self.n(), self.p());
        if self.x.rows() != n || self.groups.len() != n {
            return Err(Error::Validation(format!(
                "design arity mismatch: y {n}, X {}, groups {}",
                self.x.rows(),
                self.groups.len()
            )));
        }
        if !self.row_meta.is_empty() && self.row_meta.len() != n {
            return Err(Error::Validation("row_meta length differs from n".into()));
        }
        if self.column_names.len() != p {
            return Err(Error::Validation(format!("{} column names for {p} columns", self.column_names.len())));
        }
        if p == 0 {
            return Err(Error::Validation("design has no columns".into()));
        }
        if n < p + 2 {
            return Err(Error::Validation(format!("n = {n} rows is fewer than p + 2 = {}", p + 2)));
        }
        if self.y.iter().any(|v| !v.is_finite()) || (0..n).any(|i| self.x.row(i).iter().any(|v| !v.is_finite())) {
            return Err(Error::Validation("non-finite value in design".into()));
        }
        let qr = PivotedQr::new(&self.x, RANK_TOLERANCE);
        if qr.rank() < p {
            return Err(Error::RankDeficient {
                columns: qr.dependent_columns().into_iter().map(|j| self.column_names[j].clone()).collect(),
            });
        }
        Ok(())
    }
}
