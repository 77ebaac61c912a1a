//! Prior elicitation from probability bounds at chosen predictor vectors.
//!
//! An expert states bounds `l_i <= p(w_i) <= u_i` that hold with prior
//! probability `gamma` for `k` linearly independent predictor vectors (the
//! rows of `W`). Taking the coordinates of `W beta` independent normal
//! `N(mu0_i, sigma_i^2)` with `mu0_i` the link quantile of the interval
//! midpoint, each `sigma_i` is chosen so that its marginal constraint holds
//! at level `gamma^(1/k)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::normal::{DiagonalForm, NormalPrior};
use crate::seeding::MonteCarlo;
use crate::solve::bisect;
use crate::special::{optimal_normal_scale, std_normal_cdf, std_normal_quantile, LinkFunction};
use crate::{Error, Result};

pub const MIN_COVERAGE_SAMPLES: usize = 10_000;

/// Bisection stops once the bracket on `sigma` is this narrow.
const SIGMA_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitationSpec {
    /// Elicitation matrix, row-major; row `i` is the predictor vector `w_i`.
    pub w: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Virtual-certainty level.
    pub gamma: f64,
    pub link: LinkFunction,
    /// Explicit centres on the `W beta` scale; defaults to the link
    /// quantile of the interval midpoints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<Vec<f64>>,
    /// When set, solved scales are rounded down to a multiple of this step.
    /// Rounding down keeps every marginal constraint satisfied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_resolution: Option<f64>,
}

/// Which form the marginal constraint takes for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCase {
    /// Both link quantiles finite; largest root found by bisection.
    TwoSided,
    /// `u = 1`, `l` in (0, 1).
    LowerOnly,
    /// `l = 0`, `u` in (0, 1).
    UpperOnly,
    /// `[0, 1]`: the normal-scale approximation of the link.
    Uninformative,
}

impl ElicitationSpec {
    pub fn k(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::Domain("elicitation needs at least one bound".into()));
        }
        if self.upper.len() != k || self.w.len() != k * k {
            return Err(Error::Domain(format!(
                "expected {k} upper bounds and a {k}x{k} matrix (got {} and {} entries)",
                self.upper.len(),
                self.w.len()
            )));
        }
        self.link.validate()?;
        for i in 0..k {
            let (l, u) = (self.lower[i], self.upper[i]);
            if !(0.0..=1.0).contains(&l) || !(0.0..=1.0).contains(&u) || !(l < u) {
                return Err(Error::Domain(format!(
                    "bounds for w_{} must satisfy 0 <= l < u <= 1, got [{l}, {u}]",
                    i + 1
                )));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Domain(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if let Some(mu0) = &self.mu0 {
            if mu0.len() != k || mu0.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("mu0 must hold {k} finite values")));
            }
        }
        if let Some(step) = self.sigma_resolution {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::Domain("sigma_resolution must be positive".into()));
            }
        }
        self.check_matrix()
    }

    fn check_matrix(&self) -> Result<()> {
        let k = self.k();
        let mut scaled = DMatrix::from_row_slice(k, k, &self.w);
        for i in 0..k {
            let norm = scaled.row(i).amax();
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::Matrix(format!("row {} of W is degenerate", i + 1)));
            }
            scaled.row_mut(i).scale_mut(1.0 / norm);
        }
        let det = scaled.determinant();
        if det.abs() <= 1e-10 {
            return Err(Error::Matrix(format!(
                "W is singular (row-scaled determinant {det:e})"
            )));
        }
        Ok(())
    }

    /// Per-coordinate level `gamma^(1/k)`.
    pub fn marginal_level(&self) -> f64 {
        self.gamma.powf(1.0 / self.k() as f64)
    }

    pub fn bound_case(&self, i: usize) -> BoundCase {
        match (self.lower[i] == 0.0, self.upper[i] == 1.0) {
            (true, true) => BoundCase::Uninformative,
            (true, false) => BoundCase::UpperOnly,
            (false, true) => BoundCase::LowerOnly,
            (false, false) => BoundCase::TwoSided,
        }
    }

    /// `mu0_i = G^-1((l_i + u_i) / 2)` unless overridden.
    pub fn centroid_mean(&self) -> Result<Vec<f64>> {
        if let Some(mu0) = &self.mu0 {
            return Ok(mu0.clone());
        }
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| self.link.quantile(0.5 * (l + u)))
            .collect()
    }

    /// Left side of the marginal constraint for coordinate `i` at scale
    /// `sigma`.
    pub fn marginal_probability(&self, i: usize, mu0_i: f64, sigma: f64) -> Result<f64> {
        let hi = self.link.quantile(self.upper[i])? - mu0_i;
        let lo = self.link.quantile(self.lower[i])? - mu0_i;
        Ok(std_normal_cdf(hi / sigma) - std_normal_cdf(lo / sigma))
    }

    /// Prior scale of coordinate `i` of `W beta`.
    pub fn solve_sigma(&self, i: usize) -> Result<f64> {
        self.validate()?;
        if i >= self.k() {
            return Err(Error::Domain(format!("coordinate {i} out of range")));
        }
        let mu0 = self.centroid_mean()?[i];
        let level = self.marginal_level();
        let g_lo = self.link.quantile(self.lower[i])?;
        let g_hi = self.link.quantile(self.upper[i])?;
        let case = self.bound_case(i);

        let sigma = match case {
            BoundCase::Uninformative => return Ok(optimal_normal_scale(self.link).lambda),
            BoundCase::TwoSided => {
                let (a, b) = (g_hi - mu0, g_lo - mu0);
                if !(a > 0.0 && b < 0.0) {
                    return Err(Error::Infeasible(format!(
                        "mu0 = {mu0} lies outside the quantile interval [{g_lo}, {g_hi}] for w_{}",
                        i + 1
                    )));
                }
                let excess = |s: f64| std_normal_cdf(a / s) - std_normal_cdf(b / s) - level;
                let mut hi = 1.0;
                while excess(hi) >= 0.0 {
                    hi *= 2.0;
                    if hi > 1e12 {
                        return Err(Error::NoConvergence(
                            "could not bracket the marginal scale".into(),
                        ));
                    }
                }
                let lo = SIGMA_TOL.min(hi / 2.0);
                if excess(lo) < 0.0 {
                    return Err(Error::Infeasible(format!(
                        "level {level} unreachable for w_{}",
                        i + 1
                    )));
                }
                // lower end of the final bracket still satisfies the constraint
                bisect(excess, lo, hi, SIGMA_TOL)?.0
            }
            BoundCase::LowerOnly | BoundCase::UpperOnly => {
                if !(level > 0.5) {
                    return Err(Error::Infeasible(format!(
                        "one-sided bounds need gamma > (1/2)^k = {}, got gamma = {}",
                        0.5f64.powi(self.k() as i32),
                        self.gamma
                    )));
                }
                let (num, den) = if case == BoundCase::LowerOnly {
                    (g_lo - mu0, std_normal_quantile(1.0 - level)?)
                } else {
                    (g_hi - mu0, std_normal_quantile(level)?)
                };
                let s = num / den;
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::Infeasible(format!(
                        "mu0 = {mu0} is on the wrong side of the bound for w_{}",
                        i + 1
                    )));
                }
                s
            }
        };
        match self.sigma_resolution {
            Some(step) => {
                let rounded = (sigma / step).floor() * step;
                if rounded > 0.0 {
                    Ok(rounded)
                } else {
                    Err(Error::Infeasible(format!(
                        "sigma_{} = {sigma} is below the resolution {step}",
                        i + 1
                    )))
                }
            }
            None => Ok(sigma),
        }
    }

    pub fn solve_sigmas(&self) -> Result<Vec<f64>> {
        (0..self.k()).map(|i| self.solve_sigma(i)).collect()
    }

    /// The elicited `N_k(W^-1 mu0, W^-1 diag(sigma^2) W^-T)` prior.
    pub fn elicit_prior(&self) -> Result<NormalPrior> {
        self.validate()?;
        let form = DiagonalForm {
            w: self.w.clone(),
            mu0: self.centroid_mean()?,
            sigma: self.solve_sigmas()?,
        };
        NormalPrior::from_diagonal_form(form)
    }

    /// Monte Carlo estimate of the probability that every `p(w_i)` lies in
    /// its bounds under `prior`.
    pub fn prior_coverage_check(
        &self,
        prior: &NormalPrior,
        mc: MonteCarlo,
    ) -> Result<CoverageEstimate> {
        self.validate()?;
        mc.validate(MIN_COVERAGE_SAMPLES)?;
        let k = self.k();
        if prior.dim() != k {
            return Err(Error::Domain(format!(
                "prior has dimension {} but the elicitation has {k} bounds",
                prior.dim()
            )));
        }
        let sampler = prior.sampler()?;
        let hits: usize = mc
            .stage("elicitation/coverage")
            .map_chunks(|rng, n| {
                let mut z = Vec::with_capacity(k);
                let mut beta = vec![0.0; k];
                (0..n)
                    .filter(|_| {
                        sampler.sample_into(rng, &mut z, &mut beta);
                        (0..k).all(|i| {
                            let eta: f64 = self.w[i * k..(i + 1) * k]
                                .iter()
                                .zip(&beta)
                                .map(|(w, b)| w * b)
                                .sum();
                            let p = self.link.cdf(eta);
                            self.lower[i] <= p && p <= self.upper[i]
                        })
                    })
                    .count()
            })
            .into_iter()
            .sum();
        let n = mc.n_samples as f64;
        let estimate = hits as f64 / n;
        Ok(CoverageEstimate {
            estimate,
            std_error: (estimate * (1.0 - estimate) / n).sqrt(),
            n_samples: mc.n_samples,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub estimate: f64,
    /// Binomial standard error of the estimate.
    pub std_error: f64,
    pub n_samples: usize,
}
