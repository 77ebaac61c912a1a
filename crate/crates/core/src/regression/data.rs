use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::special::LinkFunction;
use crate::{Error, Result};

/// Design points, trials per point and the link: everything about a binary
/// regression experiment except the observed counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    /// Number of coefficients `k`.
    pub columns: usize,
    /// Row-major `m x k` matrix of predictor vectors.
    pub design: Vec<f64>,
    pub trials: Vec<u32>,
    pub link: LinkFunction,
}

impl Experiment {
    pub fn new(
        columns: usize,
        design: Vec<f64>,
        trials: Vec<u32>,
        link: LinkFunction,
    ) -> Result<Self> {
        let e = Self {
            columns,
            design,
            trials,
            link,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns == 0 {
            return Err(Error::InvalidData(
                "at least one coefficient is required".into(),
            ));
        }
        if self.design.len() != self.columns * self.trials.len() {
            return Err(Error::InvalidData(format!(
                "design has {} entries, expected {} rows of {} columns",
                self.design.len(),
                self.trials.len(),
                self.columns
            )));
        }
        if self.design.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("design has non-finite entries".into()));
        }
        if self.trials.contains(&0) {
            return Err(Error::InvalidData(
                "every design point needs at least one trial".into(),
            ));
        }
        self.link.validate()
    }

    pub fn points(&self) -> usize {
        self.trials.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.design[i * self.columns..(i + 1) * self.columns]
    }

    /// Linear predictor `x_i' beta` at design point `i`.
    pub fn eta(&self, i: usize, beta: &[f64]) -> f64 {
        self.row(i).iter().zip(beta).map(|(x, b)| x * b).sum()
    }

    /// Number of outcome tuples, `prod (n_i + 1)`.
    pub fn cell_count(&self) -> usize {
        self.trials.iter().map(|&n| n as usize + 1).product()
    }

    pub(crate) fn ln_choose_table(&self) -> Vec<Vec<f64>> {
        self.trials
            .iter()
            .map(|&n| (0..=n).map(|t| ln_binomial(n as u64, t as u64)).collect())
            .collect()
    }

    pub fn check_counts(&self, counts: &[u32]) -> Result<()> {
        if counts.len() != self.points() {
            return Err(Error::InvalidData(format!(
                "expected {} counts, got {}",
                self.points(),
                counts.len()
            )));
        }
        if let Some(i) = (0..counts.len()).find(|&i| counts[i] > self.trials[i]) {
            return Err(Error::InvalidData(format!(
                "count {} at point {} exceeds its {} trials",
                counts[i],
                i + 1,
                self.trials[i]
            )));
        }
        Ok(())
    }

    /// Log-likelihood of `counts` at `beta`: a product of binomials.
    pub fn log_likelihood(&self, beta: &[f64], counts: &[u32]) -> f64 {
        (0..self.points())
            .map(|i| {
                let n = self.trials[i];
                let t = counts[i];
                let eta = self.eta(i, beta);
                let mut ll = ln_binomial(n as u64, t as u64);
                if t > 0 {
                    ll += t as f64 * self.link.ln_cdf(eta);
                }
                if t < n {
                    ll += (n - t) as f64 * self.link.ln_ccdf(eta);
                }
                ll
            })
            .sum()
    }
}

/// An experiment together with its observed success counts, the minimal
/// sufficient statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryRegressionData {
    #[serde(flatten)]
    pub experiment: Experiment,
    pub counts: Vec<u32>,
}

impl BinaryRegressionData {
    pub fn new(experiment: Experiment, counts: Vec<u32>) -> Result<Self> {
        let d = Self { experiment, counts };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        self.experiment.check_counts(&self.counts)
    }

    pub fn log_likelihood(&self, beta: &[f64]) -> f64 {
        self.experiment.log_likelihood(beta, &self.counts)
    }
}
