//! Prior predictive tables over every outcome tuple.
//!
//! Cells are indexed row-major over `(t_1, ..., t_m)` with `t_m` varying
//! fastest. For each coefficient draw the product-binomial pmf of every
//! tuple is accumulated, so one pass estimates the whole table.

use serde::{Deserialize, Serialize};

use super::data::Experiment;
use super::sampler::CoefficientSampler;
use crate::seeding::MonteCarlo;
use crate::{Error, Result};

pub const MIN_TABLE_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveTable {
    pub trials: Vec<u32>,
    pub masses: Vec<f64>,
    /// Monte Carlo standard error of each cell; zero for exact tables.
    pub std_errors: Vec<f64>,
    /// Standard error of the table total.
    pub total_std_error: f64,
    /// Zero for tables computed by exhaustive enumeration.
    pub n_samples: usize,
    pub seed: u64,
}

impl PredictiveTable {
    pub fn cell_count(&self) -> usize {
        self.masses.len()
    }

    pub fn is_exact(&self) -> bool {
        self.n_samples == 0
    }

    pub fn index_of(&self, counts: &[u32]) -> Result<usize> {
        if counts.len() != self.trials.len() {
            return Err(Error::InvalidData(format!(
                "outcome has {} counts, table has {} design points",
                counts.len(),
                self.trials.len()
            )));
        }
        let mut idx = 0usize;
        for (&t, &n) in counts.iter().zip(&self.trials) {
            if t > n {
                return Err(Error::InvalidData(format!("count {t} exceeds {n} trials")));
            }
            idx = idx * (n as usize + 1) + t as usize;
        }
        Ok(idx)
    }

    pub fn counts_of(&self, mut idx: usize) -> Vec<u32> {
        let mut counts = vec![0; self.trials.len()];
        for (c, &n) in counts.iter_mut().zip(&self.trials).rev() {
            let radix = n as usize + 1;
            *c = (idx % radix) as u32;
            idx /= radix;
        }
        counts
    }

    pub fn mass(&self, counts: &[u32]) -> Result<f64> {
        Ok(self.masses[self.index_of(counts)?])
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn same_shape(&self, other: &PredictiveTable) -> Result<()> {
        if self.trials != other.trials {
            return Err(Error::InvalidData(format!(
                "tables have different shapes: {:?} vs {:?}",
                self.trials, other.trials
            )));
        }
        Ok(())
    }
}

/// Product-binomial pmf of every cell at one coefficient vector.
pub(crate) struct CellEvaluator<'a> {
    experiment: &'a Experiment,
    ln_choose: Vec<Vec<f64>>,
    pmfs: Vec<Vec<f64>>,
}

impl<'a> CellEvaluator<'a> {
    pub(crate) fn new(experiment: &'a Experiment) -> Self {
        Self {
            experiment,
            ln_choose: experiment.ln_choose_table(),
            pmfs: experiment
                .trials
                .iter()
                .map(|&n| vec![0.0; n as usize + 1])
                .collect(),
        }
    }

    /// Fills `cells` (length `cell_count`) with the pmf at `beta`.
    pub(crate) fn evaluate(&mut self, beta: &[f64], cells: &mut Vec<f64>) {
        let link = self.experiment.link;
        for (i, pmf) in self.pmfs.iter_mut().enumerate() {
            let eta = self.experiment.eta(i, beta);
            let ln_p = link.ln_cdf(eta);
            let ln_q = link.ln_ccdf(eta);
            let n = pmf.len() - 1;
            for (t, v) in pmf.iter_mut().enumerate() {
                let mut l = self.ln_choose[i][t];
                if t > 0 {
                    l += t as f64 * ln_p;
                }
                if t < n {
                    l += (n - t) as f64 * ln_q;
                }
                *v = l.exp();
            }
        }
        cells.clear();
        cells.push(1.0);
        for pmf in &self.pmfs {
            let old = cells.len();
            let radix = pmf.len();
            cells.resize(old * radix, 0.0);
            // expand in place from the back so earlier entries stay unread-safe
            for j in (0..old).rev() {
                let base = cells[j];
                for (t, p) in pmf.iter().enumerate().rev() {
                    cells[j * radix + t] = base * p;
                }
            }
        }
    }
}

struct Accumulator {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    total_sq: f64,
}

/// Monte Carlo estimate of the prior predictive table.
pub fn build_predictive_table<S: CoefficientSampler + ?Sized>(
    sampler: &S,
    experiment: &Experiment,
    mc: MonteCarlo,
) -> Result<PredictiveTable> {
    experiment.validate()?;
    mc.validate(MIN_TABLE_SAMPLES)?;
    check_dim(sampler.dim(), experiment)?;
    let cells = experiment.cell_count();
    let k = experiment.columns;

    let parts = mc.map_chunks(|rng, n| {
        let mut eval = CellEvaluator::new(experiment);
        let mut acc = Accumulator {
            sum: vec![0.0; cells],
            sum_sq: vec![0.0; cells],
            total_sq: 0.0,
        };
        let mut beta = vec![0.0; k];
        let mut scratch = Vec::with_capacity(k);
        let mut buf = Vec::with_capacity(cells);
        for _ in 0..n {
            sampler.draw(rng, &mut scratch, &mut beta);
            eval.evaluate(&beta, &mut buf);
            let mut total = 0.0;
            for ((s, q), &v) in acc.sum.iter_mut().zip(acc.sum_sq.iter_mut()).zip(&buf) {
                *s += v;
                *q += v * v;
                total += v;
            }
            acc.total_sq += total * total;
        }
        acc
    });

    let mut sum = vec![0.0; cells];
    let mut sum_sq = vec![0.0; cells];
    let mut total_sq = 0.0;
    for part in parts {
        for (s, v) in sum.iter_mut().zip(&part.sum) {
            *s += v;
        }
        for (s, v) in sum_sq.iter_mut().zip(&part.sum_sq) {
            *s += v;
        }
        total_sq += part.total_sq;
    }
    let n = mc.n_samples as f64;
    let masses: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_errors = masses
        .iter()
        .zip(&sum_sq)
        .map(|(m, q)| ((q / n - m * m).max(0.0) / n).sqrt())
        .collect();
    let total: f64 = masses.iter().sum();
    let total_std_error = ((total_sq / n - total * total).max(0.0) / n).sqrt();
    Ok(PredictiveTable {
        trials: experiment.trials.clone(),
        masses,
        std_errors,
        total_std_error,
        n_samples: mc.n_samples,
        seed: mc.seed,
    })
}

/// Exact prior predictive table for a prior with finitely many atoms.
pub fn exact_predictive_table<S: CoefficientSampler + ?Sized>(
    sampler: &S,
    experiment: &Experiment,
) -> Result<PredictiveTable> {
    experiment.validate()?;
    check_dim(sampler.dim(), experiment)?;
    let atoms = sampler.atoms().ok_or_else(|| {
        Error::Domain("exhaustive tables need a prior with finitely many atoms".into())
    })?;
    let cells = experiment.cell_count();
    let mut masses = vec![0.0; cells];
    let mut eval = CellEvaluator::new(experiment);
    let mut buf = Vec::with_capacity(cells);
    for (beta, w) in atoms {
        eval.evaluate(&beta, &mut buf);
        for (m, v) in masses.iter_mut().zip(&buf) {
            *m += w * v;
        }
    }
    Ok(PredictiveTable {
        trials: experiment.trials.clone(),
        masses,
        std_errors: vec![0.0; cells],
        total_std_error: 0.0,
        n_samples: 0,
        seed: 0,
    })
}

fn check_dim(dim: usize, experiment: &Experiment) -> Result<()> {
    if dim != experiment.columns {
        return Err(Error::Domain(format!(
            "sampler has dimension {dim} but the design has {} columns",
            experiment.columns
        )));
    }
    Ok(())
}
