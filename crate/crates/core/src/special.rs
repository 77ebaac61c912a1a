//! Scalar probability functions and link cdfs.
//!
//! The standard normal cdf is computed from the complementary error function,
//! its inverse from a rational initializer followed by one Halley step. The
//! Student-t cdf uses the regularized incomplete beta function for every
//! degree of freedom.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::solve::golden_section_min;
use crate::{Error, Result};

/// Smallest probability used inside logarithms of link probabilities.
pub const PROB_FLOOR: f64 = 1e-300;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal cdf.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Inverse of the standard normal cdf on the open interval (0, 1).
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal quantile needs 0 < p < 1, got {p}"
        )));
    }
    let x = acklam_initial(p);
    // one Halley step against the erfc-based cdf
    let e = std_normal_cdf(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

// Rational approximation with relative error about 1.15e-9.
fn acklam_initial(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// The response cdf `G` of a binary regression model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkFunction {
    Probit,
    Logit,
    StudentT { df: u32 },
}

impl LinkFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            LinkFunction::StudentT { df: 0 } => Err(Error::Domain(
                "student_t link needs a positive number of degrees of freedom".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            LinkFunction::Probit => "probit".into(),
            LinkFunction::Logit => "logit".into(),
            LinkFunction::StudentT { df } => format!("student_t({df})"),
        }
    }

    /// `G(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            LinkFunction::Probit => std_normal_cdf(x),
            LinkFunction::Logit => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            LinkFunction::StudentT { df } => student_t_cdf(x, df as f64),
        }
    }

    /// `ln G(x)`, floored at `ln(PROB_FLOOR)`.
    pub fn ln_cdf(&self, x: f64) -> f64 {
        let v = match *self {
            LinkFunction::Logit => {
                if x >= 0.0 {
                    -(-x).exp().ln_1p()
                } else {
                    x - x.exp().ln_1p()
                }
            }
            _ => self.cdf(x).ln(),
        };
        v.max(PROB_FLOOR.ln())
    }

    /// `ln(1 - G(x))`. All supported links are symmetric about zero.
    pub fn ln_ccdf(&self, x: f64) -> f64 {
        self.ln_cdf(-x)
    }

    /// Density `G'(x)`.
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            LinkFunction::Probit => std_normal_pdf(x),
            LinkFunction::Logit => {
                let e = (-x.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            LinkFunction::StudentT { df } => student_t_pdf(x, df as f64),
        }
    }

    /// `G^{-1}(p)`; the endpoints map to signed infinities.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!(
                "link quantile needs 0 <= p <= 1, got {p}"
            )));
        }
        if p == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if p == 1.0 {
            return Ok(f64::INFINITY);
        }
        match *self {
            LinkFunction::Probit => std_normal_quantile(p),
            LinkFunction::Logit => Ok(p.ln() - (-p).ln_1p()),
            LinkFunction::StudentT { df } => Ok(student_t_quantile(p, df as f64)),
        }
    }
}

/// Student-t cdf via the regularized incomplete beta function.
pub fn student_t_cdf(x: f64, df: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    let tail = 0.5 * beta_reg(0.5 * df, 0.5, df / (df + x * x));
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

pub fn student_t_pdf(x: f64, df: f64) -> f64 {
    let ln_norm = ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * PI).ln();
    (ln_norm - 0.5 * (df + 1.0) * (x * x / df).ln_1p()).exp()
}

// Safeguarded Newton on the cdf; p in (0, 1).
fn student_t_quantile(p: f64, df: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let mut lo = -1.0;
    let mut hi = 1.0;
    while student_t_cdf(lo, df) > p && lo > -1e300 {
        lo *= 2.0;
    }
    while student_t_cdf(hi, df) < p && hi < 1e300 {
        hi *= 2.0;
    }
    let mut x = std_normal_quantile(p).unwrap_or(0.0).clamp(lo, hi);
    for _ in 0..300 {
        let f = student_t_cdf(x, df) - p;
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = student_t_pdf(x, df);
        let mut next = x - f / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
            return next;
        }
        x = next;
    }
    x
}

/// Result of fitting `Phi(x / lambda)` to a link cdf in sup norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalScaleFit {
    pub lambda: f64,
    pub max_error: f64,
}

/// Evaluation grid for the sup norm: -12 to 12 in steps of 0.001.
const FIT_GRID_HALF_STEPS: i64 = 12_000;
const FIT_GRID_STEP: f64 = 0.001;

fn fit_grid() -> impl Iterator<Item = f64> {
    (-FIT_GRID_HALF_STEPS..=FIT_GRID_HALF_STEPS).map(|j| j as f64 * FIT_GRID_STEP)
}

/// Sup-norm distance between `Phi(x / lambda)` and the link cdf on the
/// fitting grid.
pub fn normal_scale_error(link: LinkFunction, lambda: f64) -> f64 {
    let target: Vec<(f64, f64)> = fit_grid().map(|x| (x, link.cdf(x))).collect();
    sup_error(&target, lambda)
}

fn sup_error(target: &[(f64, f64)], lambda: f64) -> f64 {
    target
        .iter()
        .map(|&(x, g)| (std_normal_cdf(x / lambda) - g).abs())
        .fold(0.0, f64::max)
}

/// The `N(0, lambda^2)` approximation to a link cdf that minimizes the
/// maximum absolute cdf difference.
pub fn optimal_normal_scale(link: LinkFunction) -> NormalScaleFit {
    if link == LinkFunction::Probit {
        return NormalScaleFit {
            lambda: 1.0,
            max_error: 0.0,
        };
    }
    let target: Vec<(f64, f64)> = fit_grid().map(|x| (x, link.cdf(x))).collect();
    let (lambda, max_error) = golden_section_min(|l| sup_error(&target, l), 0.5, 4.0, 1e-5);
    NormalScaleFit { lambda, max_error }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Taylor series of erf, summed with enough terms for |z| <= 3.
    fn erf_series(z: f64) -> f64 {
        let mut term = z;
        let mut sum = z;
        let mut n = 0.0;
        while term.abs() > 1e-20 {
            n += 1.0;
            term *= -z * z / n;
            sum += term / (2.0 * n + 1.0);
        }
        2.0 / PI.sqrt() * sum
    }

    #[test]
    fn normal_cdf_matches_series() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        for &x in &[-2.5, -1.0, -0.3, 0.7, 1.959964, 2.2] {
            let oracle = 0.5 * (1.0 + erf_series(x / SQRT_2));
            assert_abs_diff_eq!(std_normal_cdf(x), oracle, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(std_normal_cdf(1.959964), 0.975, epsilon = 1e-7);
    }

    #[test]
    fn normal_far_tail() {
        // Mills ratio bound: phi(x)/|x| * (1 - 1/x^2) < Phi(x) < phi(x)/|x|
        let x = -8.0;
        let upper = std_normal_pdf(x) / 8.0;
        let lower = upper * (1.0 - 1.0 / 64.0);
        let v = std_normal_cdf(x);
        assert!(v < 1e-14 && v > lower && v < upper);
    }

    #[test]
    fn normal_quantile_values() {
        assert_abs_diff_eq!(std_normal_quantile(0.5).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            std_normal_quantile(0.975).unwrap(),
            1.959964,
            epsilon = 1e-6
        );
        let p = 1.0 - 0.99f64.sqrt();
        assert_abs_diff_eq!(p, 0.005012, epsilon = 1e-6);
        assert_abs_diff_eq!(
            std_normal_quantile(p).unwrap(),
            -2.574_961_455_590_52,
            epsilon = 1e-10
        );
        for &p in &[1e-12, 1e-5, 0.01, 0.3, 0.77, 0.999_999] {
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x) - p).abs() <= 1e-10 * p.max(1e-3));
        }
    }

    #[test]
    fn normal_quantile_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(std_normal_quantile(p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn logit_values() {
        let g = LinkFunction::Logit;
        assert_eq!(g.cdf(0.0), 0.5);
        assert_abs_diff_eq!(g.cdf(2.944), 0.95, epsilon = 1e-4);
        assert_abs_diff_eq!(g.quantile(0.45).unwrap(), -0.2007, epsilon = 1e-4);
        assert_abs_diff_eq!(g.quantile(0.15).unwrap(), -1.7346, epsilon = 1e-4);
        assert_abs_diff_eq!(g.quantile(0.75).unwrap(), 1.0986, epsilon = 1e-4);
        assert!(g.cdf(700.0) == 1.0 && g.cdf(-700.0) > 0.0);
        assert!(g.ln_cdf(-700.0).is_finite());
    }

    #[test]
    fn probit_is_normal() {
        for &x in &[-3.0, -0.1, 0.0, 1.2] {
            assert_eq!(LinkFunction::Probit.cdf(x), std_normal_cdf(x));
        }
        assert_eq!(LinkFunction::Probit.quantile(0.5).unwrap(), 0.0);
    }

    #[test]
    fn student_t_one_df_is_cauchy() {
        for &x in &[-40.0f64, -2.0, -0.5, 0.0, 0.3, 5.0] {
            let cauchy = 0.5 + x.atan() / PI;
            assert_abs_diff_eq!(student_t_cdf(x, 1.0), cauchy, epsilon = 1e-12);
        }
    }

    #[test]
    fn student_t_two_df_closed_form() {
        for &x in &[-7.0f64, -1.0, 0.2, 3.0] {
            let exact = 0.5 + x / (2.0 * (2.0 + x * x).sqrt());
            assert_abs_diff_eq!(student_t_cdf(x, 2.0), exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn quantile_endpoints_are_infinite() {
        for link in [
            LinkFunction::Probit,
            LinkFunction::Logit,
            LinkFunction::StudentT { df: 3 },
        ] {
            assert_eq!(link.quantile(0.0).unwrap(), f64::NEG_INFINITY);
            assert_eq!(link.quantile(1.0).unwrap(), f64::INFINITY);
            assert!(link.quantile(1.1).is_err());
        }
    }

    #[test]
    fn logit_scale_fit() {
        let fit = optimal_normal_scale(LinkFunction::Logit);
        assert_abs_diff_eq!(fit.lambda, 1.702, epsilon = 0.002);
        // independent dense-grid minimax: lambda 1.70174, error 0.0094573
        assert_abs_diff_eq!(fit.lambda, 1.701_745, epsilon = 1e-4);
        assert_abs_diff_eq!(fit.max_error, 0.009_457_3, epsilon = 1e-6);
    }

    #[test]
    fn probit_scale_fit_is_identity() {
        let fit = optimal_normal_scale(LinkFunction::Probit);
        assert_eq!(fit.lambda, 1.0);
        assert_eq!(fit.max_error, 0.0);
    }
}
