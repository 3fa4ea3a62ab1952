use skillband::asymptotics::{asymptotic_table, equicoordinate_quantile, EquicorrSpec};
use statrs::distribution::{ContinuousCDF, Normal};

/// Root of (2 Phi(c) - 1)^J = 1 - alpha by bisection on the reference CDF.
fn independent_quantile(dim: usize, alpha: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let f = |c: f64| (2.0 * normal.cdf(c) - 1.0).powi(dim as i32) - (1.0 - alpha);
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn independent_case_matches_closed_form() {
    for alpha in [0.05, 0.1, 0.2] {
        for dim in [1, 2, 3, 7, 25, 60] {
            let spec = EquicorrSpec {
                mc_draws: 10_000,
                ..EquicorrSpec::new(dim, 0.0, alpha)
            };
            let q = equicoordinate_quantile(&spec).unwrap();
            let want = independent_quantile(dim, alpha);
            assert!(
                (q - want).abs() < 5e-3,
                "J={dim} alpha={alpha}: {q} vs {want}"
            );
        }
    }
}

#[test]
fn two_coordinates_example() {
    let want = independent_quantile(2, 0.1);
    assert!((want - 1.9479).abs() < 3e-3);
    let table = asymptotic_table(&[2], &[0.0], 0.1, 1000, 0).unwrap();
    assert!((table[0].supt_over_pointwise - 1.185).abs() < 2e-3);
}

#[test]
fn bonferroni_never_undercovers() {
    let table = asymptotic_table(&[2, 5, 10, 25], &[0.0, 0.3, 0.6, 0.9], 0.1, 200_000, 11).unwrap();
    for row in table {
        assert!(row.coverage_bonferroni >= 0.9 - 2e-3, "{row:?}");
        assert!(row.bonferroni_over_supt >= 1.0 - 2e-3, "{row:?}");
        assert!(row.coverage_pointwise <= 0.9 + 2e-3, "{row:?}");
    }
}
