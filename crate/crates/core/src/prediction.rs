//! Relative belief prediction of future Bernoulli outcomes.
//!
//! With a uniform prior on the success probability, having seen `sum_x`
//! successes in `n` trials, every future sequence of length `f` with the same
//! number of successes `sum_y` has the same posterior predictive mass. All
//! quantities are therefore indexed by `sum_y` and computed in log space.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::{Error, Result};

/// Log-space tolerance for declaring two predictive masses equal.
const LN_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionProblem {
    pub n: u64,
    pub sum_x: u64,
    pub f: u64,
}

impl PredictionProblem {
    pub fn new(n: u64, sum_x: u64, f: u64) -> Result<Self> {
        if sum_x > n {
            return Err(Error::Domain(format!(
                "observed successes {sum_x} exceed sample size {n}"
            )));
        }
        if f == 0 {
            return Err(Error::Domain("future sample size must be positive".into()));
        }
        Ok(Self { n, sum_x, f })
    }

    fn check(&self, sum_y: u64) -> Result<()> {
        if sum_y > self.f {
            return Err(Error::Domain(format!(
                "sum_y = {sum_y} exceeds the future sample size {}",
                self.f
            )));
        }
        Ok(())
    }

    fn ln_sequence_mass(&self, sum_y: u64) -> f64 {
        let (n, f) = (self.n, self.f);
        ((n + 1) as f64).ln() + ln_binomial(n, self.sum_x)
            - ((n + f + 1) as f64).ln()
            - ln_binomial(n + f, self.sum_x + sum_y)
    }

    fn ln_rb(&self, sum_y: u64) -> f64 {
        self.ln_sequence_mass(sum_y) + ((self.f + 1) as f64).ln() + ln_binomial(self.f, sum_y)
    }

    /// Posterior predictive mass of one future sequence with `sum_y`
    /// successes.
    pub fn posterior_predictive_mass(&self, sum_y: u64) -> Result<f64> {
        self.check(sum_y)?;
        Ok(self.ln_sequence_mass(sum_y).exp())
    }

    /// Posterior mass of the whole class of sequences with `sum_y`
    /// successes.
    pub fn class_posterior_mass(&self, sum_y: u64) -> Result<f64> {
        self.check(sum_y)?;
        Ok((self.ln_sequence_mass(sum_y) + ln_binomial(self.f, sum_y)).exp())
    }

    /// Relative belief ratio of a future sequence with `sum_y` successes.
    pub fn prediction_rb(&self, sum_y: u64) -> Result<f64> {
        self.check(sum_y)?;
        Ok(self.ln_rb(sum_y).exp())
    }

    pub fn predict(&self) -> PredictionReport {
        let sums = 0..=self.f;
        let ln_rb: Vec<f64> = sums.clone().map(|s| self.ln_rb(s)).collect();
        let ln_mass: Vec<f64> = sums.clone().map(|s| self.ln_sequence_mass(s)).collect();

        let rb_curve: Vec<f64> = ln_rb.iter().map(|v| v.exp()).collect();
        let class_posterior: Vec<f64> = sums
            .clone()
            .map(|s| (ln_mass[s as usize] + ln_binomial(self.f, s)).exp())
            .collect();

        let rb_best_sum_y = argmax_first(&ln_rb) as u64;
        let map_max = ln_mass.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let map_best_sum_y: Vec<u64> = sums
            .clone()
            .filter(|&s| map_max - ln_mass[s as usize] <= LN_TIE_TOL)
            .collect();

        let plausible_sums: Vec<u64> = sums.filter(|&s| ln_rb[s as usize] > 0.0).collect();
        let plausibility_content = plausible_sums
            .iter()
            .map(|&s| class_posterior[s as usize])
            .sum();

        PredictionReport {
            problem: *self,
            rb_curve,
            class_posterior,
            rb_best_sum_y,
            map_best_sum_y,
            plausible_sums,
            plausibility_content,
        }
    }
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub problem: PredictionProblem,
    /// Relative belief ratio indexed by `sum_y`.
    pub rb_curve: Vec<f64>,
    /// Posterior mass of each `sum_y` class.
    pub class_posterior: Vec<f64>,
    pub rb_best_sum_y: u64,
    /// Maximizers of the per-sequence posterior predictive mass.
    pub map_best_sum_y: Vec<u64>,
    pub plausible_sums: Vec<u64>,
    pub plausibility_content: f64,
}
