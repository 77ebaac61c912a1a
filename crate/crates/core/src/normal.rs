//! Multivariate normal priors on regression coefficients.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::special::std_normal_quantile;
use crate::{Error, Result};

/// `(mu0, sigma)` on the `W beta` scale together with the elicitation
/// matrix `W` (row-major). `cov = W^-1 diag(sigma^2) W^-T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalForm {
    pub w: Vec<f64>,
    pub mu0: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// `N_k(mean, cov)` with `cov` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<DiagonalForm>,
}

impl NormalPrior {
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let prior = Self {
            mean,
            cov,
            diagonal: None,
        };
        prior.validate()?;
        Ok(prior)
    }

    /// Builds `W^-1 mu0` and `W^-1 diag(sigma^2) W^-T`.
    pub fn from_diagonal_form(form: DiagonalForm) -> Result<Self> {
        let k = form.mu0.len();
        if form.sigma.len() != k || form.w.len() != k * k {
            return Err(Error::Matrix(format!(
                "diagonal form needs a {k}x{k} matrix and {k} scales"
            )));
        }
        let w = DMatrix::from_row_slice(k, k, &form.w);
        let w_inv = w
            .try_inverse()
            .ok_or_else(|| Error::Matrix("elicitation matrix is singular".into()))?;
        let mean = &w_inv * DVector::from_column_slice(&form.mu0);
        let d =
            DMatrix::from_diagonal(&DVector::from_iterator(k, form.sigma.iter().map(|s| s * s)));
        let cov = &w_inv * d * w_inv.transpose();
        let cov = symmetrize(&cov);
        let prior = Self {
            mean: mean.iter().copied().collect(),
            cov: row_major(&cov),
            diagonal: Some(form),
        };
        prior.validate()?;
        Ok(prior)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.dim();
        if k == 0 {
            return Err(Error::Matrix("prior has dimension zero".into()));
        }
        if self.cov.len() != k * k {
            return Err(Error::Matrix(format!(
                "covariance has {} entries, expected {}",
                self.cov.len(),
                k * k
            )));
        }
        if self.mean.iter().chain(&self.cov).any(|v| !v.is_finite()) {
            return Err(Error::Matrix("prior has non-finite entries".into()));
        }
        let c = self.cov_matrix();
        let scale = c.amax().max(f64::MIN_POSITIVE);
        if (&c - c.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Matrix("covariance is not symmetric".into()));
        }
        let min_eig = c.symmetric_eigenvalues().min();
        if min_eig < -1e-10 * scale {
            return Err(Error::Matrix(format!(
                "covariance has a negative eigenvalue {min_eig}"
            )));
        }
        Ok(())
    }

    pub fn cov_matrix(&self) -> DMatrix<f64> {
        let k = self.dim();
        DMatrix::from_row_slice(k, k, &self.cov)
    }

    pub fn cov_at(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.dim() + j]
    }

    /// Marginal `(mean, variance)` of coordinate `i`.
    pub fn marginal(&self, i: usize) -> Result<(f64, f64)> {
        self.check_index(i)?;
        Ok((self.mean[i], self.cov_at(i, i)))
    }

    /// Marginal density of coordinate `i` at `x`.
    pub fn marginal_density(&self, i: usize, x: f64) -> Result<f64> {
        let (m, v) = self.marginal(i)?;
        let sd = v.sqrt();
        let z = (x - m) / sd;
        Ok((-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt()))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.dim() {
            return Err(Error::Domain(format!(
                "coordinate {i} out of range for a {}-dimensional prior",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Central interval of the marginal of coordinate `i` holding `mass`.
    pub fn effective_support(&self, i: usize, mass: f64) -> Result<(f64, f64)> {
        if !(mass > 0.0 && mass < 1.0) {
            return Err(Error::Domain(format!(
                "effective support mass must lie in (0, 1), got {mass}"
            )));
        }
        let (m, v) = self.marginal(i)?;
        let z = std_normal_quantile(0.5 * (1.0 + mass))?;
        let half = z * v.sqrt();
        Ok((m - half, m + half))
    }

    /// Conditional distribution of the other coordinates given
    /// `beta_i = value`.
    pub fn condition(&self, fixed_index: usize, value: f64) -> Result<ConditionalNormal> {
        self.check_index(fixed_index)?;
        let k = self.dim();
        let var_fixed = self.cov_at(fixed_index, fixed_index);
        if !(var_fixed > 0.0) {
            return Err(Error::Matrix(format!(
                "cannot condition on coordinate {fixed_index} with variance {var_fixed}"
            )));
        }
        let free: Vec<usize> = (0..k).filter(|&j| j != fixed_index).collect();
        let slope: Vec<f64> = free
            .iter()
            .map(|&j| self.cov_at(j, fixed_index) / var_fixed)
            .collect();
        let base: Vec<f64> = free
            .iter()
            .zip(&slope)
            .map(|(&j, s)| self.mean[j] - s * self.mean[fixed_index])
            .collect();
        let r = free.len();
        let mut cov = vec![0.0; r * r];
        for (a, &ja) in free.iter().enumerate() {
            for (b, &jb) in free.iter().enumerate() {
                cov[a * r + b] = self.cov_at(ja, jb)
                    - self.cov_at(ja, fixed_index) * self.cov_at(fixed_index, jb) / var_fixed;
            }
        }
        if r > 0 {
            let c = DMatrix::from_row_slice(r, r, &cov);
            let scale = self.cov_matrix().amax();
            if c.symmetric_eigenvalues().min() <= 1e-12 * scale {
                return Err(Error::Matrix(format!(
                    "conditional covariance given coordinate {fixed_index} is singular"
                )));
            }
        }
        Ok(ConditionalNormal {
            dim: k,
            fixed_index,
            value,
            free,
            base,
            slope,
            cov,
        })
    }

    pub fn sampler(&self) -> Result<MultivariateNormal> {
        let factor = sqrt_factor(&self.cov_matrix())?;
        Ok(MultivariateNormal {
            mean: self.mean.clone(),
            factor: row_major(&factor),
            rank: factor.ncols(),
        })
    }
}

/// Distribution of the remaining coordinates given one fixed coordinate.
///
/// The conditional mean is affine in the fixed value,
/// `base + slope * value`, while the covariance does not depend on it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalNormal {
    dim: usize,
    pub fixed_index: usize,
    pub value: f64,
    pub free: Vec<usize>,
    base: Vec<f64>,
    pub slope: Vec<f64>,
    /// Row-major covariance of the free coordinates.
    pub cov: Vec<f64>,
}

impl ConditionalNormal {
    pub fn mean(&self) -> Vec<f64> {
        self.mean_at(self.value)
    }

    pub fn mean_at(&self, value: f64) -> Vec<f64> {
        self.base
            .iter()
            .zip(&self.slope)
            .map(|(b, s)| b + s * value)
            .collect()
    }

    /// Same conditional structure with a different fixed value.
    pub fn at(&self, value: f64) -> Self {
        Self {
            value,
            ..self.clone()
        }
    }

    /// Sampler over the full coefficient vector with the fixed coordinate
    /// pinned.
    pub fn sampler(&self) -> Result<MultivariateNormal> {
        let r = self.free.len();
        let k = self.dim;
        let mut mean = vec![0.0; k];
        let mut factor = vec![0.0; k * r];
        mean[self.fixed_index] = self.value;
        if r > 0 {
            let l = sqrt_factor(&DMatrix::from_row_slice(r, r, &self.cov))?;
            let m = self.mean();
            for (a, &j) in self.free.iter().enumerate() {
                mean[j] = m[a];
                for b in 0..r {
                    factor[j * r + b] = l[(a, b)];
                }
            }
        }
        Ok(MultivariateNormal {
            mean,
            factor,
            rank: r,
        })
    }
}

/// `mean + F z` with `z` standard normal of dimension `rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateNormal {
    pub mean: Vec<f64>,
    /// Row-major `dim x rank` factor.
    factor: Vec<f64>,
    rank: usize,
}

impl MultivariateNormal {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut Vec<f64>, out: &mut [f64]) {
        z.clear();
        z.extend((0..self.rank).map(|_| rng.sample::<f64, _>(StandardNormal)));
        self.transform(z, out);
    }

    /// Stable byte fingerprint of the distribution.
    pub fn fingerprint(&self) -> Vec<u8> {
        let mut out = b"mvn".to_vec();
        out.extend_from_slice(&(self.rank as u64).to_le_bytes());
        for v in self.mean.iter().chain(&self.factor) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn transform(&self, z: &[f64], out: &mut [f64]) {
        let r = self.rank;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.factor[i * r..(i + 1) * r];
            *o = self.mean[i] + row.iter().zip(z).map(|(f, zz)| f * zz).sum::<f64>();
        }
    }
}

fn sqrt_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = cov.clone().cholesky() {
        return Ok(ch.l());
    }
    // positive semidefinite fallback
    let eig = cov.clone().symmetric_eigen();
    let scale = cov.amax().max(f64::MIN_POSITIVE);
    if eig.eigenvalues.min() < -1e-10 * scale {
        return Err(Error::Matrix(
            "covariance is not positive semidefinite".into(),
        ));
    }
    let root = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|v| v.max(0.0).sqrt()),
    );
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root))
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}
