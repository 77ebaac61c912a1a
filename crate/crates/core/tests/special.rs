use relbelief::special::{normal_scale_error, optimal_normal_scale, LinkFunction};

const LINKS: [LinkFunction; 5] = [
    LinkFunction::Probit,
    LinkFunction::Logit,
    LinkFunction::StudentT { df: 1 },
    LinkFunction::StudentT { df: 5 },
    LinkFunction::StudentT { df: 30 },
];

#[test]
fn quantile_round_trip_on_a_fine_grid() {
    for link in LINKS {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let x = link.quantile(p).unwrap();
            assert!((link.cdf(x) - p).abs() <= 1e-8, "{link:?} at {p}");
        }
    }
}

#[test]
fn cdf_round_trip_on_ten_units() {
    // Near 1 a cdf value is only resolved to 2^-53 (the probit cdf is exactly
    // 1.0 at 10), so the upper tail is reached through the mirrored point.
    for link in LINKS {
        for i in -100..=100 {
            let x = i as f64 / 10.0;
            let p = link.cdf(x);
            let back = if 1.0 - p > 1e-6 {
                link.quantile(p).unwrap()
            } else {
                -link.quantile(link.cdf(-x)).unwrap()
            };
            assert!((back - x).abs() <= 1e-8, "{link:?} at {x}: {back}");
        }
    }
}

#[test]
fn upper_tail_round_trip_is_limited_by_resolution() {
    for link in LINKS {
        for i in 0..=100 {
            let x = i as f64 / 10.0;
            let p = link.cdf(x);
            if p < 1.0 {
                let back = link.quantile(p).unwrap();
                let pdf = (link.cdf(x + 1e-4) - link.cdf(x - 1e-4)) / 2e-4;
                let resolution = f64::EPSILON / pdf;
                assert!((back - x).abs() <= 1e-8 + resolution, "{link:?} at {x}: {back}");
            }
        }
    }
}

#[test]
fn reference_link_values() {
    assert!((LinkFunction::Logit.cdf(2.944) - 0.95).abs() < 1e-4);
    assert!((LinkFunction::Logit.quantile(0.15).unwrap() + 1.7346).abs() < 1e-4);
    assert!((LinkFunction::Logit.quantile(0.75).unwrap() - 1.0986).abs() < 1e-4);
    assert!((LinkFunction::Logit.cdf(700.0) - 1.0).abs() < 1e-15);
    assert!(LinkFunction::Logit.cdf(-700.0) > 0.0);
}

#[test]
fn scale_fits_are_local_minimax() {
    for link in [
        LinkFunction::Logit,
        LinkFunction::StudentT { df: 2 },
        LinkFunction::StudentT { df: 10 },
    ] {
        let fit = optimal_normal_scale(link);
        for l in [fit.lambda - 0.01, fit.lambda + 0.01] {
            assert!(normal_scale_error(link, l) >= fit.max_error - 1e-4);
        }
        assert!((normal_scale_error(link, fit.lambda) - fit.max_error).abs() < 1e-15);
    }
}
