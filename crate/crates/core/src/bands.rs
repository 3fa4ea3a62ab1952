//! Bootstrap confidence bands for vectors of skill scores, relative
//! accuracies or expected scores.
//!
//! The bands are the Cartesian product of intervals
//! `estimate_j +- sigma_j * c`, where `sigma_j` is the bootstrap standard
//! deviation of entry `j` and the scaling `c` depends on the band type:
//!
//! * pointwise: `z_{1-alpha/2}`, no joint coverage guarantee;
//! * Bonferroni: `z_{1-alpha/(2J)}`;
//! * sup-t: the empirical `1-alpha` quantile of the bootstrap distribution of
//!   `max_j |est*_j - est_j| / sigma_j`.
//!
//! Resampling uses the moving block bootstrap on whole score vectors, so both
//! the temporal and the cross-sectional dependence of the scores are kept.
//! A block length of 1 is the ordinary iid bootstrap.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::normal_quantile;
use crate::panel::{
    select_target, ComparisonSelector, EntryLabel, ScorePanel, Target, TargetEvaluator,
};
use crate::rng::stream_rng;

pub const DEFAULT_REPLICATES: usize = 4000;
pub const DEFAULT_BLOCK_MULTIPLIER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandType {
    Pointwise,
    Bonferroni,
    Supt,
}

impl BandType {
    pub const ALL: [BandType; 3] = [BandType::Supt, BandType::Bonferroni, BandType::Pointwise];

    pub fn as_str(self) -> &'static str {
        match self {
            BandType::Pointwise => "pointwise",
            BandType::Bonferroni => "bonferroni",
            BandType::Supt => "supt",
        }
    }

    /// Parses a comma-separated list such as `supt,bonferroni`.
    pub fn parse_list(s: &str) -> Result<Vec<BandType>> {
        let mut out: Vec<BandType> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let t = part.parse()?;
            if !out.contains(&t) {
                out.push(t);
            }
        }
        if out.is_empty() {
            return Err(Error::invalid("at least one band type is required"));
        }
        Ok(out)
    }
}

impl fmt::Display for BandType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BandType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pointwise" | "pointw" => Ok(BandType::Pointwise),
            "bonferroni" | "bonf" => Ok(BandType::Bonferroni),
            "supt" | "sup-t" => Ok(BandType::Supt),
            _ => Err(Error::invalid(format!(
                "unknown band type `{s}` (expected pointwise, bonferroni or supt)"
            ))),
        }
    }
}

/// `q * floor(N^(1/4))`, clamped to `[1, N]`.
pub fn default_block_length(n: usize, q: usize) -> usize {
    let mut r = (n as f64).powf(0.25).floor() as usize;
    while (r + 1).pow(4) <= n {
        r += 1;
    }
    while r > 0 && r.pow(4) > n {
        r -= 1;
    }
    (q * r).clamp(1, n.max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    /// One minus the confidence level.
    pub alpha: f64,
    /// Number of bootstrap replicates `B`.
    pub replicates: usize,
    pub block_length: usize,
    pub seed: u64,
    pub band_types: Vec<BandType>,
    pub target: Target,
}

impl BandConfig {
    /// 90% bands of all types for skill scores with `B = 4000`.
    pub fn new(block_length: usize) -> Self {
        BandConfig {
            alpha: 0.1,
            replicates: DEFAULT_REPLICATES,
            block_length,
            seed: 0,
            band_types: BandType::ALL.to_vec(),
            target: Target::Skill,
        }
    }

    /// Default configuration with block length `3 * floor(N^(1/4))`.
    pub fn for_sample_size(n: usize) -> Self {
        Self::new(default_block_length(n, DEFAULT_BLOCK_MULTIPLIER))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha = {} outside (0, 1)",
                self.alpha
            )));
        }
        if self.replicates < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 bootstrap replicates, got {}",
                self.replicates
            )));
        }
        check_block_length(n, self.block_length)?;
        if self.band_types.is_empty() {
            return Err(Error::invalid("at least one band type is required"));
        }
        Ok(())
    }
}

fn check_block_length(n: usize, l: usize) -> Result<()> {
    if l == 0 || l > n {
        return Err(Error::invalid(format!("block length {l} outside [1, {n}]")));
    }
    Ok(())
}

/// Draws the `ceil(N/l)` block start indices (0-based) of one moving block
/// resample, each uniform on `0..=N-l`.
pub fn draw_block_starts<R: Rng + ?Sized>(n: usize, l: usize, rng: &mut R) -> Result<Vec<usize>> {
    check_block_length(n, l)?;
    let n_blocks = n.div_ceil(l);
    let n_starts = n - l + 1;
    Ok((0..n_blocks)
        .map(|_| rng.random_range(0..n_starts))
        .collect())
}

/// Visits the row indices of a resample in order: the blocks strung
/// together, cut at `N` rows.
fn for_each_resampled_row(n: usize, l: usize, starts: &[usize], mut f: impl FnMut(usize)) {
    let mut remaining = n;
    for &s in starts {
        let take = l.min(remaining);
        (s..s + take).for_each(&mut f);
        remaining -= take;
    }
}

/// One moving block bootstrap resample of whole score vectors. The last
/// `ceil(N/l) * l - N` rows of the concatenated blocks are discarded.
pub fn moving_block_resample<R: Rng + ?Sized>(
    panel: &ScorePanel,
    block_length: usize,
    rng: &mut R,
) -> Result<ScorePanel> {
    let n = panel.n_time();
    let starts = draw_block_starts(n, block_length, rng)?;
    let mut values = Vec::with_capacity(panel.values().len());
    for_each_resampled_row(n, block_length, &starts, |t| {
        values.extend_from_slice(panel.row(t))
    });
    Ok(panel.with_values(values))
}

/// Column means of the resample described by `starts`, accumulated in the
/// same order as [`crate::panel::average_scores`] on the materialized
/// resample.
fn resample_means(panel: &ScorePanel, block_length: usize, starts: &[usize], sums: &mut [f64]) {
    sums.iter_mut().for_each(|s| *s = 0.0);
    for_each_resampled_row(panel.n_time(), block_length, starts, |t| {
        for (s, v) in sums.iter_mut().zip(panel.row(t)) {
            *s += v;
        }
    });
    let n = panel.n_time() as f64;
    sums.iter_mut().for_each(|s| *s /= n);
}

/// Target vectors of `B` bootstrap resamples, row-major `B x J`.
///
/// Replicate `b` draws from its own stream `(seed, b)`, so the output does
/// not depend on the number of worker threads.
pub fn bootstrap_replicates(
    panel: &ScorePanel,
    evaluator: &TargetEvaluator,
    block_length: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_block_length(panel.n_time(), block_length)?;
    let j = evaluator.len();
    let rows: Vec<Result<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let starts = draw_block_starts(panel.n_time(), block_length, &mut rng)?;
            let mut means = vec![0.0; panel.n_cols()];
            resample_means(panel, block_length, &starts, &mut means);
            let mut out = vec![0.0; j];
            evaluator
                .evaluate_into(&means, &mut out)
                .map_err(|e| match e {
                    Error::DegenerateBenchmark { column, mean, .. } => Error::DegenerateBenchmark {
                        column,
                        mean,
                        replicate: Some(b),
                    },
                    other => other,
                })?;
            Ok(out)
        })
        .collect();
    let mut flat = Vec::with_capacity(replicates * j);
    for row in rows {
        flat.extend(row?);
    }
    Ok(flat)
}

/// Sample standard deviations (divisor `B - 1`) of the columns of a
/// row-major `B x J` matrix.
pub fn bootstrap_sigma(replicates: &[f64], j: usize) -> Vec<f64> {
    let b = replicates.len() / j;
    let mut mean = vec![0.0; j];
    for row in replicates.chunks_exact(j) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= b as f64);
    let mut ss = vec![0.0; j];
    for row in replicates.chunks_exact(j) {
        for ((s, x), m) in ss.iter_mut().zip(row).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    ss.into_iter()
        .map(|s| (s / (b as f64 - 1.0)).sqrt())
        .collect()
}

/// 1-based rank of the order statistic used as the empirical `1 - alpha`
/// quantile of `B` draws: `ceil((1 - alpha) B)`.
pub fn supt_rank(alpha: f64, replicates: usize) -> usize {
    // the small offset keeps products like 0.9 * 4000 from rounding up
    let k = ((1.0 - alpha) * replicates as f64 - 1e-9).ceil() as usize;
    k.clamp(1, replicates)
}

/// Empirical `1 - alpha` quantile of the bootstrap max-|t| statistics.
pub fn supt_scaling(estimates: &[f64], replicates: &[f64], sigma: &[f64], alpha: f64) -> f64 {
    let j = estimates.len();
    let mut maxima: Vec<f64> = replicates
        .chunks_exact(j)
        .map(|row| {
            row.iter()
                .zip(estimates)
                .zip(sigma)
                .map(|((x, e), s)| (x - e).abs() / s)
                .fold(0.0, f64::max)
        })
        .collect();
    let k = supt_rank(alpha, maxima.len());
    let (_, kth, _) = maxima.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// Scaling constant of a non-resampling band type.
pub fn normal_scaling(band_type: BandType, alpha: f64, j: usize) -> Result<f64> {
    match band_type {
        BandType::Pointwise => normal_quantile(1.0 - alpha / 2.0),
        BandType::Bonferroni => normal_quantile(1.0 - alpha / (2.0 * j as f64)),
        BandType::Supt => Err(Error::invalid(
            "sup-t scaling is estimated from the bootstrap",
        )),
    }
}

/// One band: scaling constant and entrywise bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub band_type: BandType,
    pub scaling: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Band {
    pub fn symmetric(band_type: BandType, scaling: f64, estimates: &[f64], sigma: &[f64]) -> Band {
        let half: Vec<f64> = sigma.iter().map(|s| s * scaling).collect();
        Band {
            band_type,
            scaling,
            lower: estimates.iter().zip(&half).map(|(e, h)| e - h).collect(),
            upper: estimates.iter().zip(&half).map(|(e, h)| e + h).collect(),
        }
    }

    /// Whether every entry of `truth` lies inside the band.
    pub fn contains(&self, truth: &[f64]) -> bool {
        truth
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(t, (lo, hi))| lo <= t && t <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMetadata {
    pub alpha: f64,
    pub replicates: usize,
    pub block_length: usize,
    pub seed: u64,
    pub target: Target,
    pub n_time: usize,
    pub n_entries: usize,
    pub entries: Vec<EntryLabel>,
    /// Methods that act as benchmark in one pair and as compared method in
    /// another.
    pub dual_role_methods: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandResult {
    pub estimates: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    pub bands: Vec<Band>,
    pub metadata: BandMetadata,
}

impl BandResult {
    pub fn band(&self, band_type: BandType) -> Option<&Band> {
        self.bands.iter().find(|b| b.band_type == band_type)
    }

    pub fn scaling(&self, band_type: BandType) -> Option<f64> {
        self.band(band_type).map(|b| b.scaling)
    }
}

/// Builds the requested bands from the point estimates and a `B x J`
/// matrix of bootstrap target vectors.
pub fn bands_from_replicates(
    estimates: &[f64],
    replicates: &[f64],
    alpha: f64,
    band_types: &[BandType],
    entries: &[EntryLabel],
) -> Result<(Vec<f64>, Vec<Band>)> {
    let j = estimates.len();
    let sigma = bootstrap_sigma(replicates, j);
    if let Some(k) = sigma.iter().position(|s| s.is_nan() || *s <= 0.0) {
        return Err(Error::ZeroSigma {
            entry: k,
            label: entries.get(k).map(ToString::to_string).unwrap_or_default(),
        });
    }
    let bands = band_types
        .iter()
        .map(|&t| {
            let c = match t {
                BandType::Supt => supt_scaling(estimates, replicates, &sigma, alpha),
                _ => normal_scaling(t, alpha, j)?,
            };
            Ok(Band::symmetric(t, c, estimates, &sigma))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((sigma, bands))
}

/// Bootstrap bands for the target selected by `config`. All band types come
/// from the same `B` resamples.
pub fn bootstrap_bands(
    panel: &ScorePanel,
    selector: &ComparisonSelector,
    config: &BandConfig,
) -> Result<BandResult> {
    config.validate(panel.n_time())?;
    let (estimates, evaluator) = select_target(panel, selector, config.target)?;
    let draws = bootstrap_replicates(
        panel,
        &evaluator,
        config.block_length,
        config.replicates,
        config.seed,
    )?;
    let (sigma_hat, bands) = bands_from_replicates(
        &estimates,
        &draws,
        config.alpha,
        &config.band_types,
        evaluator.entries(),
    )?;
    Ok(BandResult {
        metadata: BandMetadata {
            alpha: config.alpha,
            replicates: config.replicates,
            block_length: config.block_length,
            seed: config.seed,
            target: config.target,
            n_time: panel.n_time(),
            n_entries: estimates.len(),
            entries: evaluator.entries().to_vec(),
            dual_role_methods: evaluator
                .comparisons()
                .map(|c| c.dual_role_methods().to_vec())
                .unwrap_or_default(),
        },
        estimates,
        sigma_hat,
        bands,
    })
}

/// Bounds of one band type for one entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowBounds {
    pub band_type: BandType,
    pub lower: f64,
    pub upper: f64,
    /// Zero lies inside the interval, i.e. the entrywise test of equal
    /// predictive accuracy does not reject.
    pub covers_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub entry: usize,
    pub label: EntryLabel,
    pub estimate: f64,
    pub sigma: f64,
    pub bounds: Vec<RowBounds>,
}

/// Per-entry table view of a [`BandResult`].
pub fn band_report(result: &BandResult) -> Vec<ReportRow> {
    (0..result.estimates.len())
        .map(|j| ReportRow {
            entry: j,
            label: result.metadata.entries[j].clone(),
            estimate: result.estimates[j],
            sigma: result.sigma_hat[j],
            bounds: result
                .bands
                .iter()
                .map(|b| RowBounds {
                    band_type: b.band_type,
                    lower: b.lower[j],
                    upper: b.upper[j],
                    covers_zero: b.lower[j] <= 0.0 && 0.0 <= b.upper[j],
                })
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::average_scores;
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, StandardNormal};

    fn methods(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("m{i}")).collect()
    }

    fn counting_panel(n: usize, p: usize) -> ScorePanel {
        let values = (0..n * p)
            .map(|i| (i / p) as f64 + 0.001 * (i % p) as f64)
            .collect();
        ScorePanel::from_method_columns(methods(p), n, values).unwrap()
    }

    fn noise_panel(n: usize, p: usize, seed: u64) -> ScorePanel {
        let mut rng = stream_rng(seed, 0);
        let values = (0..n * p)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                10.0 + z
            })
            .collect();
        ScorePanel::from_method_columns(methods(p), n, values).unwrap()
    }

    #[test]
    fn block_length_default() {
        assert_eq!(default_block_length(100, 3), 9);
        assert_eq!(default_block_length(400, 3), 12);
        assert_eq!(default_block_length(81, 1), 3);
        assert_eq!(default_block_length(80, 1), 2);
        assert_eq!(default_block_length(2, 3), 2);
    }

    #[test]
    fn full_length_block_reproduces_input() {
        let panel = counting_panel(7, 3);
        let mut rng = stream_rng(1, 0);
        assert_eq!(moving_block_resample(&panel, 7, &mut rng).unwrap(), panel);
    }

    #[test]
    fn iid_case_draws_input_rows() {
        let panel = counting_panel(3, 2);
        let mut rng = stream_rng(2, 0);
        assert_eq!(draw_block_starts(3, 1, &mut rng).unwrap().len(), 3);
        let res = moving_block_resample(&panel, 1, &mut rng).unwrap();
        assert_eq!(res.n_time(), 3);
        for row in res.rows() {
            assert!(panel.rows().any(|r| r == row));
        }
    }

    #[test]
    fn truncation_counts() {
        let mut rng = stream_rng(3, 0);
        let starts = draw_block_starts(5, 2, &mut rng).unwrap();
        assert_eq!(starts.len(), 3);
        assert!(starts.iter().all(|&s| s <= 3));
        let mut rows = Vec::new();
        for_each_resampled_row(5, 2, &starts, |t| rows.push(t));
        assert_eq!(rows.len(), 5);
        assert_eq!(&rows[4..], &[starts[2]]);
    }

    #[test]
    fn block_length_out_of_range() {
        let panel = counting_panel(4, 2);
        let mut rng = stream_rng(0, 0);
        assert!(moving_block_resample(&panel, 0, &mut rng).is_err());
        assert!(moving_block_resample(&panel, 5, &mut rng).is_err());
    }

    #[test]
    fn resample_means_match_materialized_resample() {
        let panel = noise_panel(23, 3, 4);
        for l in [1, 4, 23] {
            let starts = draw_block_starts(23, l, &mut stream_rng(9, l as u64)).unwrap();
            let res = moving_block_resample(&panel, l, &mut stream_rng(9, l as u64)).unwrap();
            let mut means = vec![0.0; 3];
            resample_means(&panel, l, &starts, &mut means);
            assert_eq!(means, average_scores(&res));
        }
    }

    #[test]
    fn sigma_uses_unbiased_divisor() {
        let sigma = bootstrap_sigma(&[1.0, 10.0, 2.0, 10.0, 3.0, 10.0], 2);
        assert_eq!(sigma, vec![1.0, 0.0]);
    }

    #[test]
    fn supt_rank_convention() {
        assert_eq!(supt_rank(0.1, 4000), 3600);
        assert_eq!(supt_rank(0.1, 999), 900);
        assert_eq!(supt_rank(0.05, 10), 10);
        assert_eq!(supt_rank(0.5, 3), 2);
        // k-th order statistic of 1..=10 with k = 9
        let reps: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(supt_scaling(&[0.0], &reps, &[1.0], 0.1), 9.0);
    }

    #[test]
    fn single_entry_bonferroni_equals_pointwise() {
        let panel = noise_panel(60, 2, 5);
        let sel = ComparisonSelector::parse("m0:m1").unwrap();
        let mut cfg = BandConfig::new(1);
        cfg.replicates = 200;
        let res = bootstrap_bands(&panel, &sel, &cfg).unwrap();
        let z = normal_quantile(0.95).unwrap();
        assert_eq!(res.scaling(BandType::Bonferroni), Some(z));
        assert_eq!(res.scaling(BandType::Pointwise), Some(z));
    }

    #[test]
    fn zero_sigma_is_reported() {
        let base = noise_panel(30, 1, 6);
        let values: Vec<f64> = base.values().iter().flat_map(|&x| [x, x]).collect();
        let panel = ScorePanel::from_method_columns(methods(2), 30, values).unwrap();
        let sel = ComparisonSelector::parse("m0:m1").unwrap();
        let mut cfg = BandConfig::new(1);
        cfg.replicates = 50;
        assert!(matches!(
            bootstrap_bands(&panel, &sel, &cfg),
            Err(Error::ZeroSigma { entry: 0, .. })
        ));
    }

    #[test]
    fn degenerate_resample_reports_replicate() {
        // benchmark mean is positive on the sample but a resample can pick
        // only the negative rows
        let values = vec![1.0, 3.0, 1.0, -1.0, 1.0, -1.0];
        let panel = ScorePanel::from_method_columns(methods(2), 3, values).unwrap();
        let sel = ComparisonSelector::parse("m0:m1").unwrap();
        let mut cfg = BandConfig::new(1);
        cfg.replicates = 200;
        match bootstrap_bands(&panel, &sel, &cfg) {
            Err(Error::DegenerateBenchmark {
                column, replicate, ..
            }) => {
                assert_eq!(column, "m1");
                assert!(replicate.is_some());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = BandConfig::new(2);
        assert!(cfg.validate(10).is_ok());
        cfg.alpha = 1.0;
        assert!(cfg.validate(10).is_err());
        cfg = BandConfig::new(11);
        assert!(cfg.validate(10).is_err());
        cfg = BandConfig::new(1);
        cfg.replicates = 1;
        assert!(cfg.validate(10).is_err());
        cfg = BandConfig::new(1);
        cfg.band_types.clear();
        assert!(cfg.validate(10).is_err());
    }

    #[test]
    fn band_types_parse() {
        assert_eq!(
            BandType::parse_list("supt, bonf,pointwise,supt").unwrap(),
            vec![BandType::Supt, BandType::Bonferroni, BandType::Pointwise]
        );
        assert!(BandType::parse_list("").is_err());
        assert!(BandType::parse_list("wide").is_err());
    }

    fn result_from(estimate: f64, sigma: f64, scaling: f64) -> BandResult {
        BandResult {
            estimates: vec![estimate],
            sigma_hat: vec![sigma],
            bands: vec![Band::symmetric(
                BandType::Bonferroni,
                scaling,
                &[estimate],
                &[sigma],
            )],
            metadata: BandMetadata {
                alpha: 0.1,
                replicates: 4000,
                block_length: 1,
                seed: 0,
                target: Target::Skill,
                n_time: 10,
                n_entries: 1,
                entries: vec![EntryLabel {
                    labels: vec!["tvp".into()],
                    benchmark: Some("const".into()),
                }],
                dual_role_methods: vec![],
            },
        }
    }

    #[test]
    fn report_has_one_row_per_entry() {
        let rows = band_report(&result_from(0.1, 0.02, 2.0));
        assert_eq!(rows.len(), 1);
        let b = &rows[0].bounds[0];
        assert!(b.lower <= b.upper);
        assert!(!b.covers_zero);
    }

    #[test]
    fn report_reproduces_quoted_case_study_bounds() {
        // estimate 6.2% with half-width 8.52% is quoted as (-2.28%, 14.7%);
        // agreement is to the rounding of the quoted figures
        let z = 1.644_853_626_951_472_2;
        let rows = band_report(&result_from(0.062, 0.0852 / z, z));
        let b = &rows[0].bounds[0];
        assert!((b.lower - -0.0228).abs() < 5e-4, "{}", b.lower);
        assert!((b.upper - 0.147).abs() < 5e-4, "{}", b.upper);
        assert!(b.covers_zero);
    }
}
