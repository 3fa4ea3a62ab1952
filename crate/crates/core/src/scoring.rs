//! Consistent scoring functions and proper scoring rules.
//!
//! Probabilistic forecasts are represented as ensembles, i.e. as empirical
//! distributions over their members. The CRPS and the energy score are
//! evaluated exactly for that empirical distribution. All scores are
//! negatively oriented: smaller is better, and a perfect forecast scores 0.

use crate::error::{Error, Result};

/// Observed outcome, a vector of dimension `D >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(Vec<f64>);

impl Observation {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid(
                "observation must have at least one component",
            ));
        }
        ensure_finite(&values, "observation")?;
        Ok(Observation(values))
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(vec![value])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// An ensemble forecast: `M_e >= 1` members of dimension `D >= 1`, stored
/// member-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleForecast {
    dim: usize,
    values: Vec<f64>,
}

impl EnsembleForecast {
    /// Builds an ensemble from member vectors, which must share a dimension.
    pub fn new(members: Vec<Vec<f64>>) -> Result<Self> {
        let dim = members
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("ensemble must have at least one member"))?;
        if dim == 0 {
            return Err(Error::invalid("ensemble members must have dimension >= 1"));
        }
        let mut values = Vec::with_capacity(dim * members.len());
        for (i, m) in members.iter().enumerate() {
            if m.len() != dim {
                return Err(Error::invalid(format!(
                    "ensemble member {i} has dimension {}, expected {dim}",
                    m.len()
                )));
            }
            values.extend_from_slice(m);
        }
        ensure_finite(&values, "ensemble member")?;
        Ok(EnsembleForecast { dim, values })
    }

    /// Univariate ensemble (`D = 1`).
    pub fn univariate(members: &[f64]) -> Result<Self> {
        Self::new(members.iter().map(|&x| vec![x]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_members(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn members(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }
}

fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::invalid(format!(
            "{what} component {i} is not finite ({})",
            values[i]
        ))),
        None => Ok(()),
    }
}

/// Squared error `(y - x)^2`. With `y` in {0, 1} and `x` a probability this is
/// the Brier score.
pub fn squared_error(x: f64, y: f64) -> Result<f64> {
    ensure_finite(&[x, y], "squared error input")?;
    let u = y - x;
    Ok(u * u)
}

/// Squared Euclidean distance between forecast and observation vectors.
pub fn multivariate_squared_error(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: forecast has {} components, observation {}",
            x.len(),
            y.len()
        )));
    }
    ensure_finite(x, "forecast")?;
    ensure_finite(y, "observation")?;
    Ok(x.iter().zip(y).map(|(a, b)| (b - a) * (b - a)).sum())
}

/// Pinball loss `u * (tau - 1{u < 0})` with `u = y - x`.
pub fn quantile_score(x: f64, y: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!(
            "quantile level {tau} outside (0, 1)"
        )));
    }
    ensure_finite(&[x, y], "quantile score input")?;
    let u = y - x;
    let indicator = if u < 0.0 { 1.0 } else { 0.0 };
    Ok(u * (tau - indicator))
}

/// CRPS of the empirical distribution of a univariate ensemble.
///
/// Computes `mean|x_i - y| - 1/(2M^2) sum_ij |x_i - x_j|`; the pair sum is
/// evaluated in `O(M log M)` from the sorted members. Duplicate members are
/// kept as ordinary members.
pub fn crps_ensemble(forecast: &EnsembleForecast, y: f64) -> Result<f64> {
    if forecast.dim() != 1 {
        return Err(Error::invalid(format!(
            "crps needs a univariate ensemble, got dimension {}",
            forecast.dim()
        )));
    }
    ensure_finite(&[y], "observation")?;
    let mut xs = forecast.values.clone();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let abs_err: f64 = xs.iter().map(|x| (x - y).abs()).sum::<f64>() / m;
    // sum_{i<j} (x_(j) - x_(i)) = sum_i (2i - M + 1) (x_(i) - x_(0)), 0-based
    let lo = xs[0];
    let half_pairs: f64 = xs
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * i as f64 - m + 1.0) * (x - lo))
        .sum();
    let score = abs_err - half_pairs / (m * m);
    Ok(score.max(0.0))
}

/// Energy score of the empirical distribution of an ensemble, using all
/// member pairs. For `D = 1` it coincides with [`crps_ensemble`].
pub fn energy_score_ensemble(forecast: &EnsembleForecast, y: &[f64]) -> Result<f64> {
    if y.len() != forecast.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: ensemble has dimension {}, observation {}",
            forecast.dim(),
            y.len()
        )));
    }
    ensure_finite(y, "observation")?;
    let m = forecast.n_members() as f64;
    let members: Vec<&[f64]> = forecast.members().collect();
    let abs_err: f64 = members.iter().map(|x| euclidean(x, y)).sum::<f64>() / m;
    let mut pair_sum = 0.0;
    for (i, xi) in members.iter().enumerate() {
        for xj in &members[i + 1..] {
            pair_sum += euclidean(xi, xj);
        }
    }
    // each unordered pair appears twice in the full double sum
    let score = abs_err - pair_sum / (m * m);
    Ok(score.max(0.0))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Equal-weight aggregation: the sum of the individual scores.
pub fn aggregate_scores(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::invalid("cannot aggregate an empty score vector"));
    }
    ensure_finite(scores, "score")?;
    Ok(scores.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn squared_error_examples() {
        assert_eq!(squared_error(3.0, 5.0).unwrap(), 4.0);
        assert_eq!(squared_error(1.25, 1.25).unwrap(), 0.0);
        assert!((squared_error(0.7, 1.0).unwrap() - 0.09).abs() < 1e-15);
        assert!(squared_error(f64::NAN, 1.0).is_err());
        assert!(squared_error(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn multivariate_squared_error_examples() {
        assert_eq!(
            multivariate_squared_error(&[0.0, 0.0], &[3.0, 4.0]).unwrap(),
            25.0
        );
        assert_eq!(
            multivariate_squared_error(&[2.0, -1.0], &[2.0, -1.0]).unwrap(),
            0.0
        );
        assert_eq!(
            multivariate_squared_error(&[1.0, 1.0, 1.0], &[2.0, 3.0, 4.0]).unwrap(),
            14.0
        );
        assert!(multivariate_squared_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn quantile_score_examples() {
        assert_eq!(quantile_score(0.0, 2.0, 0.5).unwrap(), 1.0);
        assert!((quantile_score(0.0, 1.0, 0.9).unwrap() - 0.9).abs() < 1e-15);
        assert!((quantile_score(1.0, 0.0, 0.9).unwrap() - 0.1).abs() < 1e-15);
        for tau in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(quantile_score(0.0, 1.0, tau).is_err());
        }
    }

    #[test]
    fn crps_examples() {
        let point = EnsembleForecast::univariate(&[2.5]).unwrap();
        assert_eq!(crps_ensemble(&point, 2.5).unwrap(), 0.0);
        let single = EnsembleForecast::univariate(&[4.0]).unwrap();
        assert_eq!(crps_ensemble(&single, 1.5).unwrap(), 2.5);
        let two = EnsembleForecast::univariate(&[0.0, 2.0]).unwrap();
        assert!((crps_ensemble(&two, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    /// Integrates (F(c) - 1{y <= c})^2 for the empirical CDF with the
    /// midpoint rule on a fine grid.
    fn crps_by_quadrature(members: &[f64], y: f64) -> f64 {
        let lo = members.iter().cloned().fold(y, f64::min) - 1.0;
        let hi = members.iter().cloned().fold(y, f64::max) + 1.0;
        let n = 400_000;
        let h = (hi - lo) / n as f64;
        let m = members.len() as f64;
        (0..n)
            .map(|k| {
                let c = lo + (k as f64 + 0.5) * h;
                let f = members.iter().filter(|&&x| x <= c).count() as f64 / m;
                let ind = if y <= c { 1.0 } else { 0.0 };
                (f - ind) * (f - ind) * h
            })
            .sum()
    }

    #[test]
    fn crps_matches_quadrature() {
        let frozen = crps_by_quadrature(&[0.0, 2.0], 1.0);
        assert!((frozen - 0.5).abs() < 1e-6);
        for (members, y) in [
            (vec![0.3, -1.2, 0.8, 0.8], 0.1),
            (vec![5.0, 1.0, 3.0], 7.5),
            (vec![-2.0, -1.0], -3.0),
        ] {
            let ens = EnsembleForecast::univariate(&members).unwrap();
            let q = crps_by_quadrature(&members, y);
            assert!((crps_ensemble(&ens, y).unwrap() - q).abs() < 1e-4);
        }
    }

    #[test]
    fn energy_score_examples() {
        let single = EnsembleForecast::new(vec![vec![1.0, 2.0]]).unwrap();
        assert!((energy_score_ensemble(&single, &[4.0, 6.0]).unwrap() - 5.0).abs() < 1e-15);
        let two = EnsembleForecast::univariate(&[0.0, 2.0]).unwrap();
        assert!((energy_score_ensemble(&two, &[1.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn energy_score_two_dimensional_brute_force() {
        // mean distance to y: (1 + 1)/2 = 1; pairs: |(0,0)-(2,0)| = 2 twice, /(2*4)
        let expected = 1.0 - (2.0 + 2.0) / (2.0 * 4.0);
        let ens = EnsembleForecast::new(vec![vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let es = energy_score_ensemble(&ens, &[1.0, 0.0]).unwrap();
        assert!((es - expected).abs() < 1e-15);
        assert!((es - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ensemble_validation() {
        assert!(EnsembleForecast::new(vec![]).is_err());
        assert!(EnsembleForecast::univariate(&[]).is_err());
        assert!(EnsembleForecast::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(EnsembleForecast::univariate(&[1.0, f64::NAN]).is_err());
        let ens = EnsembleForecast::new(vec![vec![1.0, 2.0]]).unwrap();
        assert!(energy_score_ensemble(&ens, &[1.0]).is_err());
        assert!(crps_ensemble(&ens, 1.0).is_err());
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_scores(&[1.0, 2.0, 3.0]).unwrap(), 6.0);
        assert_eq!(aggregate_scores(&[0.37]).unwrap(), 0.37);
        let parts = [
            squared_error(0.0, 3.0).unwrap(),
            squared_error(0.0, 4.0).unwrap(),
        ];
        assert_eq!(parts, [9.0, 16.0]);
        assert_eq!(aggregate_scores(&parts).unwrap(), 25.0);
        assert!(aggregate_scores(&[]).is_err());
    }

    fn finite() -> impl Strategy<Value = f64> {
        -100.0..100.0f64
    }

    proptest! {
        #[test]
        fn scores_are_non_negative(x in finite(), y in finite(), tau in 0.001..0.999f64) {
            prop_assert!(squared_error(x, y).unwrap() >= 0.0);
            prop_assert!(quantile_score(x, y, tau).unwrap() >= 0.0);
        }

        #[test]
        fn ensemble_scores_non_negative_and_coincide(
            members in prop::collection::vec(finite(), 1..12),
            y in finite(),
        ) {
            let ens = EnsembleForecast::univariate(&members).unwrap();
            let crps = crps_ensemble(&ens, y).unwrap();
            let es = energy_score_ensemble(&ens, &[y]).unwrap();
            prop_assert!(crps >= 0.0);
            prop_assert!(es >= 0.0);
            prop_assert!((crps - es).abs() <= 1e-12);
        }

        #[test]
        fn perfect_ensembles_score_zero(y in finite(), m in 1usize..8) {
            let ens = EnsembleForecast::univariate(&vec![y; m]).unwrap();
            prop_assert_eq!(crps_ensemble(&ens, y).unwrap(), 0.0);
            prop_assert_eq!(energy_score_ensemble(&ens, &[y]).unwrap(), 0.0);
            prop_assert_eq!(squared_error(y, y).unwrap(), 0.0);
        }

        #[test]
        fn aggregation_matches_multivariate_se(
            pairs in prop::collection::vec((finite(), finite()), 1..10),
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let parts: Vec<f64> = x.iter().zip(&y).map(|(a, b)| squared_error(*a, *b).unwrap()).collect();
            let agg = aggregate_scores(&parts).unwrap();
            let mv = multivariate_squared_error(&x, &y).unwrap();
            prop_assert!((agg - mv).abs() <= 1e-12);
        }

        #[test]
        fn median_pinball_is_half_absolute_error(x in finite(), y in finite()) {
            let qs = quantile_score(x, y, 0.5).unwrap();
            prop_assert!((qs - 0.5 * (y - x).abs()).abs() <= 1e-12);
        }
    }
}
