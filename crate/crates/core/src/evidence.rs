//! Relative belief over a finite set of values.
//!
//! A [`DiscreteBelief`] holds prior and posterior masses over an ordered
//! support. The relative belief ratio of a value is its posterior mass over
//! its prior mass: a ratio above 1 is evidence for the value, below 1
//! evidence against it.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SUM_TOL: f64 = 1e-9;

/// Direction of the evidence at a hypothesized value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    For,
    Against,
    Neutral,
}

impl Verdict {
    pub fn from_ratio(rb: f64) -> Self {
        if rb > 1.0 {
            Verdict::For
        } else if rb < 1.0 {
            Verdict::Against
        } else {
            Verdict::Neutral
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Verdict::For => "evidence for",
            Verdict::Against => "evidence against",
            Verdict::Neutral => "no evidence",
        }
    }
}

/// Prior and posterior probability vectors over an ordered support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBelief<L> {
    support: Vec<L>,
    prior: Vec<f64>,
    posterior: Vec<f64>,
}

impl<L: Clone + PartialEq + std::fmt::Debug> DiscreteBelief<L> {
    /// Zero prior masses are rejected since the ratio is undefined there.
    pub fn new(support: Vec<L>, prior: Vec<f64>, posterior: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidBelief("empty support".into()));
        }
        if prior.len() != support.len() || posterior.len() != support.len() {
            return Err(Error::InvalidBelief(format!(
                "support has {} labels but prior has {} and posterior {} entries",
                support.len(),
                prior.len(),
                posterior.len()
            )));
        }
        for (name, v) in [("prior", &prior), ("posterior", &posterior)] {
            if v.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidBelief(format!(
                    "{name} has negative or non-finite entries"
                )));
            }
            let total: f64 = v.iter().sum();
            if (total - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidBelief(format!("{name} sums to {total}")));
            }
        }
        if let Some(i) = prior.iter().position(|&p| p == 0.0) {
            return Err(Error::UndefinedEvidence(format!("{:?}", support[i])));
        }
        Ok(Self {
            support,
            prior,
            posterior,
        })
    }

    pub fn support(&self) -> &[L] {
        &self.support
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn index_of(&self, label: &L) -> Result<usize> {
        self.support
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Domain(format!("{label:?} is not in the support")))
    }

    /// Relative belief ratios for every support point, in support order.
    pub fn ratios(&self) -> Vec<f64> {
        self.prior
            .iter()
            .zip(&self.posterior)
            .map(|(pr, po)| po / pr)
            .collect()
    }

    pub fn relative_belief_ratio(&self, label: &L) -> Result<f64> {
        let i = self.index_of(label)?;
        Ok(self.posterior[i] / self.prior[i])
    }

    /// Relative belief ratio of a set: posterior mass over prior mass.
    pub fn set_ratio(&self, in_set: impl Fn(&L) -> bool) -> Result<f64> {
        let (prior, post) = self.set_masses(&in_set);
        if prior == 0.0 {
            return Err(Error::UndefinedEvidence("empty set".into()));
        }
        Ok(post / prior)
    }

    fn set_masses(&self, in_set: &impl Fn(&L) -> bool) -> (f64, f64) {
        self.support
            .iter()
            .enumerate()
            .filter(|(_, l)| in_set(l))
            .fold((0.0, 0.0), |(a, b), (i, _)| {
                (a + self.prior[i], b + self.posterior[i])
            })
    }

    /// Bayes factor of a set `A`: `RB(A) / RB(A^c)`.
    pub fn bayes_factor(&self, in_set: impl Fn(&L) -> bool) -> Result<f64> {
        let (prior_in, post_in) = self.set_masses(&in_set);
        let (prior_out, post_out) = self.set_masses(&|l: &L| !in_set(l));
        if prior_in == 0.0 || prior_out == 0.0 {
            return Err(Error::Domain(
                "Bayes factor needs a set with prior probability strictly between 0 and 1".into(),
            ));
        }
        Ok((post_in / prior_in) / (post_out / prior_out))
    }

    /// Index of the maximal ratio and whether the maximum is shared.
    /// Ties go to the lowest support index.
    pub fn estimate_index(&self) -> (usize, bool) {
        let rb = self.ratios();
        let mut best = 0;
        for (i, &r) in rb.iter().enumerate().skip(1) {
            if r > rb[best] {
                best = i;
            }
        }
        let tied = rb.iter().filter(|&&r| r == rb[best]).count() > 1;
        (best, tied)
    }

    pub fn relative_belief_estimate(&self) -> &L {
        &self.support[self.estimate_index().0]
    }

    /// Values with ratio strictly above 1, and their posterior content.
    pub fn plausibility(&self) -> (Vec<L>, f64) {
        let mut set = Vec::new();
        let mut content = 0.0;
        for (i, r) in self.ratios().into_iter().enumerate() {
            if r > 1.0 {
                set.push(self.support[i].clone());
                content += self.posterior[i];
            }
        }
        (set, content)
    }

    /// Posterior mass of `{psi : RB(psi) <= RB(psi_0)}`.
    pub fn strength(&self, label: &L) -> Result<f64> {
        let i = self.index_of(label)?;
        let rb = self.ratios();
        let at = rb[i];
        Ok(rb
            .iter()
            .zip(&self.posterior)
            .filter(|(r, _)| **r <= at)
            .map(|(_, p)| p)
            .sum())
    }

    /// Full report for the hypothesis `psi = label`.
    pub fn assess(&self, label: &L) -> Result<EvidenceReport<L>> {
        let rb = self.relative_belief_ratio(label)?;
        let (estimate_index, estimate_tied) = self.estimate_index();
        let (plausibility_set, plausibility_content) = self.plausibility();
        Ok(EvidenceReport {
            rb_at_hypothesis: rb,
            verdict: Verdict::from_ratio(rb),
            strength: self.strength(label)?,
            estimate: self.support[estimate_index].clone(),
            estimate_tied,
            plausibility_set,
            plausibility_content,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport<L> {
    pub rb_at_hypothesis: f64,
    pub verdict: Verdict,
    pub strength: f64,
    pub estimate: L,
    /// Set when several support points share the maximal ratio.
    pub estimate_tied: bool,
    pub plausibility_set: Vec<L>,
    pub plausibility_content: f64,
}
