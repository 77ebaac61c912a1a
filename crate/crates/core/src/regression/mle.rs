//! The joint relative belief estimate.
//!
//! The prior predictive of the observed counts does not depend on the
//! coefficients, so maximizing the joint ratio is maximizing the
//! likelihood. Fisher scoring with step-halving is used.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::data::BinaryRegressionData;
use crate::{Error, Result};

const MAX_ITER: usize = 200;
const DIVERGENCE_NORM: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Converged,
    /// The iterates ran off towards infinity: the likelihood has no finite
    /// maximizer (separated data).
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointEstimate {
    pub beta: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub status: EstimateStatus,
}

pub fn joint_rb_estimate(data: &BinaryRegressionData, start: &[f64]) -> Result<JointEstimate> {
    data.validate()?;
    let e = &data.experiment;
    let k = e.columns;
    if start.len() != k {
        return Err(Error::Domain(format!(
            "start has {} coordinates, expected {k}",
            start.len()
        )));
    }
    let mut beta = DVector::from_column_slice(start);
    let mut ll = data.log_likelihood(beta.as_slice());

    for iter in 1..=MAX_ITER {
        let mut score = DVector::zeros(k);
        let mut info = DMatrix::zeros(k, k);
        for i in 0..e.points() {
            let x = DVector::from_column_slice(e.row(i));
            let eta = e.eta(i, beta.as_slice());
            let p = e.link.cdf(eta);
            let q = e.link.cdf(-eta);
            let pq = (p * q).max(1e-300);
            let g = e.link.pdf(eta);
            let n = e.trials[i] as f64;
            let t = data.counts[i] as f64;
            // t - n p written to stay accurate when p is near 1
            let resid = if p > 0.5 { n * q - (n - t) } else { t - n * p };
            score += &x * (resid * g / pq);
            info += &x * x.transpose() * (n * g * g / pq);
        }
        let step = match info.clone().cholesky() {
            Some(ch) => ch.solve(&score),
            None => {
                let svd = info.svd(true, true);
                svd.solve(&score, 1e-12)
                    .map_err(|e| Error::Matrix(format!("information matrix: {e}")))?
            }
        };
        let mut scale = 1.0;
        let mut accepted = false;
        let mut next = beta.clone();
        let mut next_ll = ll;
        for _ in 0..40 {
            next = &beta + &step * scale;
            next_ll = data.log_likelihood(next.as_slice());
            if next_ll >= ll - 1e-12 * ll.abs().max(1.0) {
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Ok(JointEstimate {
                beta: beta.iter().copied().collect(),
                log_likelihood: ll,
                iterations: iter,
                status: EstimateStatus::Converged,
            });
        }
        let moved = (&next - &beta).amax();
        let gain = next_ll - ll;
        beta = next;
        ll = next_ll;
        // still moving while the likelihood has flattened out: a supremum
        // approached at infinity
        let stalled = gain.abs() < 1e-12 * ll.abs().max(1.0) && moved > 1e-3 * (1.0 + beta.amax());
        if beta.amax() > DIVERGENCE_NORM || stalled {
            return Ok(JointEstimate {
                beta: beta.iter().copied().collect(),
                log_likelihood: ll,
                iterations: iter,
                status: EstimateStatus::Diverged,
            });
        }
        if moved < 1e-10 * (1.0 + beta.amax()) {
            return Ok(JointEstimate {
                beta: beta.iter().copied().collect(),
                log_likelihood: ll,
                iterations: iter,
                status: EstimateStatus::Converged,
            });
        }
    }
    Err(Error::NoConvergence(format!(
        "no convergence after {MAX_ITER} iterations; last iterate {:?}",
        beta.as_slice()
    )))
}
