use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::normal::MultivariateNormal;
use crate::{Error, Result};

/// Source of coefficient draws for prior predictive computations.
pub trait CoefficientSampler: Sync {
    fn dim(&self) -> usize;

    /// Writes one draw into `out`; `scratch` is reusable working storage.
    fn draw(&self, rng: &mut ChaCha8Rng, scratch: &mut Vec<f64>, out: &mut [f64]);

    /// Finite support with weights, when the distribution has one.
    fn atoms(&self) -> Option<Vec<(Vec<f64>, f64)>> {
        None
    }

    /// Bytes identifying the distribution, used for cache keys.
    fn fingerprint(&self) -> Vec<u8>;
}

impl CoefficientSampler for MultivariateNormal {
    fn dim(&self) -> usize {
        MultivariateNormal::dim(self)
    }

    fn draw(&self, rng: &mut ChaCha8Rng, scratch: &mut Vec<f64>, out: &mut [f64]) {
        self.sample_into(rng, scratch, out);
    }

    fn fingerprint(&self) -> Vec<u8> {
        MultivariateNormal::fingerprint(self)
    }
}

/// A prior with finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePrior {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DiscretePrior {
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::Domain(
                "a discrete prior needs one weight per atom".into(),
            ));
        }
        let k = atoms[0].len();
        if atoms.iter().any(|a| a.len() != k) {
            return Err(Error::Domain("atoms must share a dimension".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("weights sum to {total}")));
        }
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            atoms,
            weights,
            cumulative,
        })
    }

    pub fn point_mass(beta: Vec<f64>) -> Self {
        Self::new(vec![beta], vec![1.0]).expect("a single atom is always valid")
    }
}

impl CoefficientSampler for DiscretePrior {
    fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    fn draw(&self, rng: &mut ChaCha8Rng, _scratch: &mut Vec<f64>, out: &mut [f64]) {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let i = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.atoms.len() - 1);
        out.copy_from_slice(&self.atoms[i]);
    }

    fn atoms(&self) -> Option<Vec<(Vec<f64>, f64)>> {
        Some(
            self.atoms
                .iter()
                .cloned()
                .zip(self.weights.iter().copied())
                .collect(),
        )
    }

    fn fingerprint(&self) -> Vec<u8> {
        let mut out = b"discrete".to_vec();
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            for v in a.iter().chain(std::iter::once(w)) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }
}
