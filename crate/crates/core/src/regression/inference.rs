//! Marginal relative belief inference for one coefficient on a grid.
//!
//! For each grid value `b` the conditional prior predictive of the observed
//! counts, `m(T | beta_i = b)`, is estimated by averaging the likelihood
//! over draws of the remaining coordinates from the conditional normal.
//! The same standard normal draws are reused at every grid point, so the
//! estimated curve is smooth in `b`. The ratio to the unconditional
//! predictive `m(T)` is the relative belief ratio of `b`; posterior
//! contents are left-point Riemann sums with spacing `delta` against the
//! exact marginal prior density.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use super::data::{BinaryRegressionData, Experiment};
use crate::evidence::Verdict;
use crate::normal::{MultivariateNormal, NormalPrior};
use crate::seeding::MonteCarlo;
use crate::{Error, Result};

pub const MIN_INFERENCE_SAMPLES: usize = 1_000;
pub const MAX_GRID_STEPS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub coordinate: usize,
    pub lo: f64,
    pub hi: f64,
    pub delta: f64,
}

impl GridSpec {
    pub fn new(coordinate: usize, lo: f64, hi: f64, delta: f64) -> Result<Self> {
        let g = Self {
            coordinate,
            lo,
            hi,
            delta,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid over the central interval of the marginal prior holding `mass`.
    pub fn from_effective_support(
        prior: &NormalPrior,
        coordinate: usize,
        mass: f64,
        delta: f64,
    ) -> Result<Self> {
        let (lo, hi) = prior.effective_support(coordinate, mass)?;
        Self::new(coordinate, lo, hi, delta)
    }

    /// Widens the grid outwards just enough that `anchor` is a grid point
    /// (when it lies in range) and `hi` is the last one.
    pub fn aligned_to(&self, anchor: f64) -> Result<Self> {
        let d = self.delta;
        let lo = anchor - ((anchor - self.lo) / d).ceil() * d;
        let hi = anchor + ((self.hi - anchor) / d).ceil() * d;
        Self::new(self.coordinate, lo, hi, d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Domain(format!(
                "grid bounds must be finite with lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Domain(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if (self.hi - self.lo) / self.delta > MAX_GRID_STEPS {
            return Err(Error::Domain(format!(
                "grid [{}, {}] with delta {} has more than {MAX_GRID_STEPS} steps",
                self.lo, self.hi, self.delta
            )));
        }
        Ok(())
    }

    /// Index of the last grid point, `floor((hi - lo) / delta)`.
    pub fn steps(&self) -> i64 {
        ((self.hi - self.lo) / self.delta + 1e-9).floor() as i64
    }

    pub fn point(&self, j: i64) -> f64 {
        self.lo + j as f64 * self.delta
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.steps()).map(|j| self.point(j)).collect()
    }
}

/// Automatic widening of the grid when the ratio still exceeds 1 at an
/// end. Each round adds half the current width on every such side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendPolicy {
    pub max_widenings: usize,
    pub max_points: usize,
}

impl Default for ExtendPolicy {
    fn default() -> Self {
        Self {
            max_widenings: 12,
            max_points: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisAssessment {
    pub value: f64,
    /// Grid point nearest to `value`.
    pub grid_value: f64,
    pub rb: f64,
    pub strength: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalInferenceReport {
    /// The grid actually used, after any widening.
    pub grid: GridSpec,
    pub points: Vec<f64>,
    pub rb_values: Vec<f64>,
    pub prior_density: Vec<f64>,
    pub posterior_density: Vec<f64>,
    pub estimate: f64,
    pub estimate_rb: f64,
    /// Maximal runs of grid points with ratio above 1.
    pub plausibility_region: Vec<Interval>,
    pub region_content: f64,
    /// Quadrature of the posterior density over the whole grid.
    pub total_content: f64,
    pub marginal_likelihood: f64,
    pub marginal_likelihood_std_error: f64,
    /// The ratio exceeds 1 at an end of the final grid.
    pub truncated: bool,
    pub widenings: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl MarginalInferenceReport {
    fn grid_index(&self, value: f64) -> Result<usize> {
        let g = &self.grid;
        let j = ((value - g.lo) / g.delta).round();
        if !value.is_finite() || j < 0.0 || j as usize >= self.points.len() {
            return Err(Error::Domain(format!(
                "{value} lies outside the grid [{}, {}]",
                g.lo,
                self.points[self.points.len() - 1]
            )));
        }
        Ok(j as usize)
    }

    /// Ratio, strength and verdict at the grid point nearest `value`.
    pub fn assess(&self, value: f64) -> Result<HypothesisAssessment> {
        let j = self.grid_index(value)?;
        let rb = self.rb_values[j];
        let strength = self
            .rb_values
            .iter()
            .zip(&self.posterior_density)
            .filter(|(r, _)| **r <= rb)
            .map(|(_, p)| p * self.grid.delta)
            .sum();
        Ok(HypothesisAssessment {
            value,
            grid_value: self.points[j],
            rb,
            strength,
            verdict: Verdict::from_ratio(rb),
        })
    }

    /// Posterior content of the grid points with ratio above `threshold`.
    pub fn content_above(&self, threshold: f64) -> f64 {
        self.rb_values
            .iter()
            .zip(&self.posterior_density)
            .filter(|(r, _)| **r > threshold)
            .map(|(_, p)| p * self.grid.delta)
            .sum()
    }
}

/// Likelihood of the observed counts, binomial coefficients precomputed.
struct Kernel<'a> {
    experiment: &'a Experiment,
    counts: &'a [u32],
    ln_const: f64,
}

impl<'a> Kernel<'a> {
    fn new(data: &'a BinaryRegressionData) -> Self {
        let e = &data.experiment;
        let ln_const = e
            .trials
            .iter()
            .zip(&data.counts)
            .map(|(&n, &t)| ln_binomial(n as u64, t as u64))
            .sum();
        Self {
            experiment: e,
            counts: &data.counts,
            ln_const,
        }
    }

    fn likelihood(&self, beta: &[f64]) -> f64 {
        let e = self.experiment;
        let mut ll = self.ln_const;
        for (i, (&n, &t)) in e.trials.iter().zip(self.counts).enumerate() {
            let eta = e.eta(i, beta);
            if t > 0 {
                ll += t as f64 * e.link.ln_cdf(eta);
            }
            if t < n {
                ll += (n - t) as f64 * e.link.ln_ccdf(eta);
            }
        }
        ll.exp()
    }
}

fn check_inputs(prior: &NormalPrior, data: &BinaryRegressionData, grid: &GridSpec) -> Result<()> {
    prior.validate()?;
    data.validate()?;
    grid.validate()?;
    if prior.dim() != data.experiment.columns {
        return Err(Error::Domain(format!(
            "prior has dimension {} but the design has {} columns",
            prior.dim(),
            data.experiment.columns
        )));
    }
    if grid.coordinate >= prior.dim() {
        return Err(Error::Domain(format!(
            "coordinate {} out of range for a {}-dimensional prior",
            grid.coordinate,
            prior.dim()
        )));
    }
    Ok(())
}

/// Unconditional prior predictive probability of the observed counts with
/// its Monte Carlo standard error.
fn marginal_likelihood(prior: &NormalPrior, kernel: &Kernel, mc: MonteCarlo) -> Result<(f64, f64)> {
    let sampler = prior.sampler()?;
    let k = prior.dim();
    let parts = mc.map_chunks(|rng, n| {
        let mut z = Vec::with_capacity(k);
        let mut beta = vec![0.0; k];
        let (mut s, mut q) = (0.0, 0.0);
        for _ in 0..n {
            sampler.sample_into(rng, &mut z, &mut beta);
            let l = kernel.likelihood(&beta);
            s += l;
            q += l * l;
        }
        (s, q)
    });
    let (s, q) = parts
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let n = mc.n_samples as f64;
    let mean = s / n;
    Ok((mean, ((q / n - mean * mean).max(0.0) / n).sqrt()))
}

/// Conditional predictive at one grid value from shared draws `z`.
fn conditional_likelihood(sampler: &MultivariateNormal, z: &[f64], kernel: &Kernel) -> f64 {
    let r = sampler.rank();
    let mut beta = vec![0.0; sampler.dim()];
    if r == 0 {
        sampler.transform(&[], &mut beta);
        return kernel.likelihood(&beta);
    }
    let n = z.len() / r;
    let mut s = 0.0;
    for row in z.chunks_exact(r) {
        sampler.transform(row, &mut beta);
        s += kernel.likelihood(&beta);
    }
    s / n as f64
}

pub fn marginal_rb_inference(
    prior: &NormalPrior,
    data: &BinaryRegressionData,
    grid: &GridSpec,
    mc: MonteCarlo,
    extend: Option<ExtendPolicy>,
) -> Result<MarginalInferenceReport> {
    check_inputs(prior, data, grid)?;
    mc.validate(MIN_INFERENCE_SAMPLES)?;
    let i = grid.coordinate;
    let kernel = Kernel::new(data);

    let (m_obs, m_se) = marginal_likelihood(prior, &kernel, mc.stage("inference/marginal"))?;
    if !(m_obs > 0.0) {
        return Err(Error::UndefinedEvidence(
            "estimated prior predictive probability of the data is zero".into(),
        ));
    }

    let cond = prior.condition(i, grid.lo)?;
    let rank = cond.free.len();
    let zmc = mc.stage(&format!("inference/conditional/{i}"));
    let z: Vec<f64> = zmc
        .map_chunks(|rng, n| {
            (0..n * rank)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect::<Vec<_>>()
        })
        .concat();

    let mut cache: HashMap<i64, f64> = HashMap::new();
    let evaluate = |cache: &mut HashMap<i64, f64>, js: Vec<i64>| -> Result<()> {
        let missing: Vec<i64> = js.into_iter().filter(|j| !cache.contains_key(j)).collect();
        let values = missing
            .par_iter()
            .map(|&j| {
                let sampler = cond.at(grid.point(j)).sampler()?;
                Ok(conditional_likelihood(&sampler, &z, &kernel) / m_obs)
            })
            .collect::<Result<Vec<f64>>>()?;
        cache.extend(missing.into_iter().zip(values));
        Ok(())
    };

    let (mut j_lo, mut j_hi) = (0i64, grid.steps());
    evaluate(&mut cache, (j_lo..=j_hi).collect())?;
    let mut widenings = 0;
    if let Some(policy) = extend {
        while widenings < policy.max_widenings {
            let low_open = cache[&j_lo] > 1.0;
            let high_open = cache[&j_hi] > 1.0;
            if !low_open && !high_open {
                break;
            }
            let add = ((j_hi - j_lo) as f64 * 0.5).ceil() as i64;
            let (new_lo, new_hi) = (
                if low_open { j_lo - add } else { j_lo },
                if high_open { j_hi + add } else { j_hi },
            );
            if (new_hi - new_lo + 1) as usize > policy.max_points {
                break;
            }
            let fresh: Vec<i64> = (new_lo..j_lo).chain(j_hi + 1..=new_hi).collect();
            evaluate(&mut cache, fresh)?;
            j_lo = new_lo;
            j_hi = new_hi;
            widenings += 1;
        }
    }

    let final_grid = GridSpec {
        coordinate: i,
        lo: grid.point(j_lo),
        hi: grid.point(j_hi),
        delta: grid.delta,
    };
    let points: Vec<f64> = (j_lo..=j_hi).map(|j| grid.point(j)).collect();
    let rb_values: Vec<f64> = (j_lo..=j_hi).map(|j| cache[&j]).collect();
    let prior_density = points
        .iter()
        .map(|&b| prior.marginal_density(i, b))
        .collect::<Result<Vec<_>>>()?;
    let posterior_density: Vec<f64> = rb_values
        .iter()
        .zip(&prior_density)
        .map(|(r, p)| r * p)
        .collect();

    let mut best = 0;
    for (j, r) in rb_values.iter().enumerate() {
        if *r > rb_values[best] {
            best = j;
        }
    }
    let mut plausibility_region = Vec::new();
    let mut run_start: Option<usize> = None;
    for j in 0..=rb_values.len() {
        let inside = j < rb_values.len() && rb_values[j] > 1.0;
        match (inside, run_start) {
            (true, None) => run_start = Some(j),
            (false, Some(s)) => {
                plausibility_region.push(Interval {
                    lo: points[s],
                    hi: points[j - 1],
                });
                run_start = None;
            }
            _ => {}
        }
    }
    let delta = grid.delta;
    let region_content = rb_values
        .iter()
        .zip(&posterior_density)
        .filter(|(r, _)| **r > 1.0)
        .map(|(_, p)| p * delta)
        .sum();
    let total_content = posterior_density.iter().map(|p| p * delta).sum();
    let truncated = rb_values[0] > 1.0 || rb_values[rb_values.len() - 1] > 1.0;

    Ok(MarginalInferenceReport {
        grid: final_grid,
        estimate: points[best],
        estimate_rb: rb_values[best],
        points,
        rb_values,
        prior_density,
        posterior_density,
        plausibility_region,
        region_content,
        total_content,
        marginal_likelihood: m_obs,
        marginal_likelihood_std_error: m_se,
        truncated,
        widenings,
        n_samples: mc.n_samples,
        seed: mc.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::LinkFunction;

    fn no_data() -> BinaryRegressionData {
        let e = Experiment::new(2, vec![], vec![], LinkFunction::Logit).unwrap();
        BinaryRegressionData::new(e, vec![]).unwrap()
    }

    fn prior() -> NormalPrior {
        NormalPrior::new(vec![0.1, 0.6], vec![0.144, 0.048, 0.048, 0.577]).unwrap()
    }

    #[test]
    fn no_data_is_neutral_everywhere() {
        let p = prior();
        let g = GridSpec::from_effective_support(&p, 1, 0.995, 0.05).unwrap();
        let r = marginal_rb_inference(&p, &no_data(), &g, MonteCarlo::new(2_000, 1), None).unwrap();
        assert!(r.rb_values.iter().all(|&v| v == 1.0));
        let a = r.assess(0.0).unwrap();
        assert_eq!(a.verdict, Verdict::Neutral);
        assert!(r.plausibility_region.is_empty());
        assert!((r.total_content - 0.995).abs() < 0.01);
    }

    #[test]
    fn grid_points_and_validation() {
        let g = GridSpec::new(0, -1.0, 1.0, 0.5).unwrap();
        assert_eq!(g.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(GridSpec::new(0, 1.0, -1.0, 0.1).is_err());
        let a = GridSpec::new(0, -1.23, 2.71, 0.1)
            .unwrap()
            .aligned_to(0.0)
            .unwrap();
        assert!(a.lo <= -1.23 && a.hi >= 2.71);
        let j = (-a.lo / a.delta).round() as i64;
        assert!(a.point(j).abs() < 1e-12);
        assert!(GridSpec::new(0, 0.0, 1.0, 0.0).is_err());
        assert!(GridSpec::new(0, 0.0, 1.0, 1e-7).is_err());
    }

    #[test]
    fn outside_grid_is_rejected() {
        let p = prior();
        let g = GridSpec::new(1, -1.0, 1.0, 0.1).unwrap();
        let r = marginal_rb_inference(&p, &no_data(), &g, MonteCarlo::new(2_000, 1), None).unwrap();
        assert!(r.assess(5.0).is_err());
        assert_eq!(r.assess(0.52).unwrap().grid_value, r.points[15]);
    }
}
