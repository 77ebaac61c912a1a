use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relbelief::elicitation::ElicitationSpec;
use relbelief::normal::{DiagonalForm, NormalPrior};
use relbelief::seeding::MonteCarlo;
use relbelief::special::LinkFunction;
use relbelief::Error;

fn bioassay() -> ElicitationSpec {
    ElicitationSpec {
        w: vec![1.0, -0.5, 1.0, 0.5],
        lower: vec![0.15, 0.25],
        upper: vec![0.75, 0.95],
        gamma: 0.99,
        link: LinkFunction::Logit,
        mu0: None,
        sigma_resolution: None,
    }
}

#[test]
fn elicited_prior_has_diagonal_structure_on_w_scale() {
    let spec = bioassay();
    let prior = spec.elicit_prior().unwrap();
    let w = nalgebra::DMatrix::from_row_slice(2, 2, &spec.w);
    let c = &w * prior.cov_matrix() * w.transpose();
    let sigma = spec.solve_sigmas().unwrap();
    assert!((c[(0, 0)] - sigma[0].powi(2)).abs() < 1e-10);
    assert!((c[(1, 1)] - sigma[1].powi(2)).abs() < 1e-10);
    assert!(c[(0, 1)].abs() < 1e-10);
    let form = prior.diagonal.as_ref().unwrap();
    assert_eq!(form.sigma, sigma);
    assert_eq!(form.mu0, spec.centroid_mean().unwrap());
    let rebuilt = NormalPrior::from_diagonal_form(form.clone()).unwrap();
    for (a, b) in rebuilt.cov.iter().zip(&prior.cov) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn prior_json_round_trip() {
    let prior = bioassay().elicit_prior().unwrap();
    let json = serde_json::to_string(&prior).unwrap();
    let back: NormalPrior = serde_json::from_str(&json).unwrap();
    assert_eq!(prior, back);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["mean", "cov", "mu0", "sigma", "w"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn coverage_reaches_gamma() {
    let spec = bioassay();
    let prior = spec.elicit_prior().unwrap();
    let cov = spec
        .prior_coverage_check(&prior, MonteCarlo::new(100_000, 7))
        .unwrap();
    assert!(cov.estimate >= 0.99 - 3.0 * cov.std_error, "{cov:?}");
    assert!((cov.std_error - (cov.estimate * (1.0 - cov.estimate) / 1e5).sqrt()).abs() < 1e-15);
}

#[test]
fn doubled_scales_lose_coverage() {
    let spec = bioassay();
    let form = spec.elicit_prior().unwrap().diagonal.unwrap();
    let doubled = NormalPrior::from_diagonal_form(DiagonalForm {
        sigma: form.sigma.iter().map(|s| 2.0 * s).collect(),
        ..form
    })
    .unwrap();
    let cov = spec
        .prior_coverage_check(&doubled, MonteCarlo::new(50_000, 7))
        .unwrap();
    assert!(cov.estimate < 0.99 - 3.0 * cov.std_error, "{cov:?}");
}

#[test]
fn uninformative_bounds_cover_everything() {
    let spec = ElicitationSpec {
        lower: vec![0.0, 0.0],
        upper: vec![1.0, 1.0],
        ..bioassay()
    };
    let prior = spec.elicit_prior().unwrap();
    let cov = spec
        .prior_coverage_check(&prior, MonteCarlo::new(10_000, 1))
        .unwrap();
    assert_eq!(cov.estimate, 1.0);
    assert!(prior.mean.iter().all(|m| m.abs() < 1e-15));
}

#[test]
fn scales_shrink_as_gamma_grows() {
    let mut last = vec![f64::INFINITY; 2];
    for gamma in [0.3, 0.5, 0.8, 0.9, 0.95, 0.99, 0.999] {
        let s = ElicitationSpec {
            gamma,
            ..bioassay()
        }
        .solve_sigmas()
        .unwrap();
        assert!(s[0] <= last[0] && s[1] <= last[1]);
        last = s;
    }
}

#[test]
fn one_sided_infeasible_at_low_gamma() {
    let spec = ElicitationSpec {
        upper: vec![0.75, 1.0],
        gamma: 0.2,
        ..bioassay()
    };
    assert!(matches!(spec.solve_sigmas(), Err(Error::Infeasible(_))));
}

#[test]
fn diffuse_normal_piles_mass_at_the_extremes() {
    // N(0, 20^2) coefficients: p(1, 1) rarely lands in [0.01, 0.99]
    let prior = NormalPrior::new(vec![0.0, 0.0], vec![400.0, 0.0, 0.0, 400.0]).unwrap();
    let sampler = prior.sampler().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut z, mut beta) = (Vec::new(), [0.0; 2]);
    let n = 100_000;
    let inside = (0..n)
        .filter(|_| {
            sampler.sample_into(&mut rng, &mut z, &mut beta);
            let p = LinkFunction::Logit.cdf(beta[0] + beta[1]);
            (0.01..=0.99).contains(&p)
        })
        .count();
    assert!((inside as f64 / n as f64) < 0.2);
}
