//! Coverage experiments on simulated score processes.
//!
//! Scores follow a stationary VAR(1), `S_t = c + a S_{t-1} + e_t` with
//! `c = (1 - a) mu`, and equicorrelated Gaussian errors (unit variances,
//! correlation `v`). All expected scores are equal, so the true skill score
//! vector is zero and the true expected-score vector is `mu`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bands::{
    bands_from_replicates, bootstrap_replicates, default_block_length, BandType, DEFAULT_REPLICATES,
};
use crate::error::{Error, Result};
use crate::panel::{select_target, ComparisonSelector, ScorePanel, Target};
use crate::rng::{derive_seed, stream_rng};

pub const DEFAULT_MEAN: f64 = 10.0;
pub const DEFAULT_BURN_IN: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Var1Config {
    /// Number of score series `P`.
    pub dim: usize,
    /// Sample length `N`.
    pub n_time: usize,
    /// Autoregressive coefficient `a`, shared by all series.
    pub ar: f64,
    /// Error correlation `v`.
    pub error_corr: f64,
    pub mean: Vec<f64>,
    pub burn_in: usize,
    pub seed: u64,
}

impl Var1Config {
    pub fn new(dim: usize, n_time: usize, ar: f64, error_corr: f64) -> Self {
        Var1Config {
            dim,
            n_time,
            ar,
            error_corr,
            mean: vec![DEFAULT_MEAN; dim],
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::invalid(format!(
                "need P >= 2 score series, got {}",
                self.dim
            )));
        }
        if self.n_time < 2 {
            return Err(Error::invalid(format!("need N >= 2, got {}", self.n_time)));
        }
        if self.ar.is_nan() || self.ar.abs() >= 1.0 {
            return Err(Error::invalid(format!(
                "AR coefficient {} is not stationary",
                self.ar
            )));
        }
        if !(0.0..1.0).contains(&self.error_corr) {
            return Err(Error::invalid(format!(
                "error correlation {} outside [0, 1)",
                self.error_corr
            )));
        }
        if self.mean.len() != self.dim {
            return Err(Error::invalid(format!(
                "mean has {} entries, expected {}",
                self.mean.len(),
                self.dim
            )));
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("mean must be finite"));
        }
        Ok(())
    }

    fn method_labels(&self) -> Vec<String> {
        (1..=self.dim).map(|i| format!("s{i}")).collect()
    }
}

/// Simulates `burn_in + N` steps from `S_0 = mu` and returns the last `N`
/// rows as a panel with methods `s1..sP`.
pub fn simulate_var1_scores<R: Rng + ?Sized>(cfg: &Var1Config, rng: &mut R) -> Result<ScorePanel> {
    cfg.validate()?;
    let p = cfg.dim;
    let load = cfg.error_corr.sqrt();
    let idio = (1.0 - cfg.error_corr).sqrt();
    let intercept: Vec<f64> = cfg.mean.iter().map(|m| (1.0 - cfg.ar) * m).collect();
    let mut state = cfg.mean.clone();
    let mut values = Vec::with_capacity(cfg.n_time * p);
    for t in 0..cfg.burn_in + cfg.n_time {
        let common: f64 = StandardNormal.sample(rng);
        for (s, c) in state.iter_mut().zip(&intercept) {
            let own: f64 = StandardNormal.sample(rng);
            *s = c + cfg.ar * *s + load * common + idio * own;
        }
        if t >= cfg.burn_in {
            values.extend_from_slice(&state);
        }
    }
    ScorePanel::from_method_columns(cfg.method_labels(), cfg.n_time, values)
}

/// Resampling scheme of one experiment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Bootstrap {
    Iid,
    /// Moving blocks of length `q * floor(N^(1/4))`.
    Block {
        q: usize,
    },
}

impl Bootstrap {
    pub fn block_length(self, n: usize) -> usize {
        match self {
            Bootstrap::Iid => 1,
            Bootstrap::Block { q } => default_block_length(n, q),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Bootstrap::Iid => "iid",
            Bootstrap::Block { .. } => "block",
        }
    }

    pub fn multiplier(self) -> Option<usize> {
        match self {
            Bootstrap::Iid => None,
            Bootstrap::Block { q } => Some(q),
        }
    }

    fn key(self) -> u64 {
        match self {
            Bootstrap::Iid => 0,
            Bootstrap::Block { q } => q as u64,
        }
    }
}

/// Parameter grid of a coverage experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    pub ar: Vec<f64>,
    pub error_corr: Vec<f64>,
    pub dims: Vec<usize>,
    pub n_times: Vec<usize>,
    pub bootstraps: Vec<Bootstrap>,
    pub band_types: Vec<BandType>,
    pub targets: Vec<Target>,
    /// Simulated panels per cell, `R`.
    pub replications: usize,
    /// Bootstrap replicates per panel, `B`.
    pub bootstrap_replicates: usize,
    pub alpha: f64,
    pub mean: f64,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for CoverageGrid {
    fn default() -> Self {
        CoverageGrid {
            ar: vec![0.0],
            error_corr: vec![0.0],
            dims: vec![5],
            n_times: vec![400],
            bootstraps: vec![Bootstrap::Iid, Bootstrap::Block { q: 3 }],
            band_types: BandType::ALL.to_vec(),
            targets: vec![Target::Skill],
            replications: 1000,
            bootstrap_replicates: DEFAULT_REPLICATES,
            alpha: 0.1,
            mean: DEFAULT_MEAN,
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
        }
    }
}

impl CoverageGrid {
    /// Named grids. `appendix-e` is the full small/medium-dimension design,
    /// `appendix-e-high-dim` the P = 100/400 arms, and `appendix-e-small` a
    /// reduced version for quick runs.
    pub fn preset(name: &str) -> Result<Self> {
        let all_bootstraps = vec![Bootstrap::Iid, Bootstrap::Block { q: 3 }];
        match name {
            "appendix-e" => Ok(CoverageGrid {
                ar: vec![0.0, 0.3, 0.6],
                error_corr: vec![0.0, 0.3, 0.6],
                dims: vec![2, 5, 25],
                n_times: vec![100, 400],
                bootstraps: all_bootstraps,
                ..Self::default()
            }),
            "appendix-e-high-dim" => Ok(CoverageGrid {
                ar: vec![0.0, 0.3, 0.6],
                error_corr: vec![0.0, 0.3, 0.6],
                dims: vec![100, 400],
                n_times: vec![100, 400],
                bootstraps: (1..=3).map(|q| Bootstrap::Block { q }).collect(),
                band_types: vec![BandType::Supt, BandType::Bonferroni],
                ..Self::default()
            }),
            "appendix-e-small" => Ok(CoverageGrid {
                ar: vec![0.0, 0.6],
                error_corr: vec![0.0],
                dims: vec![2, 5],
                n_times: vec![100],
                bootstraps: all_bootstraps,
                replications: 200,
                bootstrap_replicates: 999,
                ..Self::default()
            }),
            _ => Err(Error::invalid(format!(
                "unknown preset `{name}` (expected appendix-e, appendix-e-high-dim or appendix-e-small)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("need at least one replication"));
        }
        if self.bootstrap_replicates < 2 {
            return Err(Error::invalid("need at least 2 bootstrap replicates"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha = {} outside (0, 1)",
                self.alpha
            )));
        }
        let empty = [
            ("a", self.ar.is_empty()),
            ("v", self.error_corr.is_empty()),
            ("P", self.dims.is_empty()),
            ("N", self.n_times.is_empty()),
            ("bootstrap", self.bootstraps.is_empty()),
            ("band type", self.band_types.is_empty()),
            ("target", self.targets.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::invalid(format!("grid has no {name} values")));
        }
        for &a in &self.ar {
            for &v in &self.error_corr {
                for &p in &self.dims {
                    for &n in &self.n_times {
                        self.var1(p, n, a, v).validate()?;
                    }
                }
            }
        }
        Ok(())
    }

    fn var1(&self, dim: usize, n_time: usize, ar: f64, error_corr: f64) -> Var1Config {
        Var1Config {
            mean: vec![self.mean; dim],
            burn_in: self.burn_in,
            ..Var1Config::new(dim, n_time, ar, error_corr)
        }
    }
}

/// Coverage of one (a, v, P, N, bootstrap, band type, target) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageCell {
    pub ar: f64,
    pub error_corr: f64,
    pub dim: usize,
    pub n_time: usize,
    pub bootstrap: Bootstrap,
    pub block_length: usize,
    pub band_type: BandType,
    pub target: Target,
    /// Replications that produced a band.
    pub replications: usize,
    pub hits: usize,
    /// Replications aborted by a degenerate benchmark or zero sigma.
    pub failed: usize,
    pub coverage: f64,
    pub mc_se: f64,
}

/// Population value of the target under the simulated process.
fn true_target(target: Target, mean: f64, dim: usize) -> Vec<f64> {
    match target {
        Target::Skill => vec![0.0; dim - 1],
        Target::Relative => vec![1.0; dim - 1],
        Target::Expected => vec![mean; dim],
    }
}

fn target_key(target: Target) -> u64 {
    match target {
        Target::Skill => 0,
        Target::Expected => 1,
        Target::Relative => 2,
    }
}

/// Runs the coverage experiment over the whole grid.
///
/// For every `(a, v, P, N)` and replication `r` one panel is simulated from
/// a stream derived from `(seed, a, v, P, N, r)`; all bootstrap arms, targets
/// and band types of that replication use this same panel, and all band types
/// of an arm share the same resamples. The skill scores compare `s1..s(P-1)`
/// with the benchmark `sP`.
pub fn run_coverage_experiment(grid: &CoverageGrid) -> Result<Vec<CoverageCell>> {
    grid.validate()?;
    let mut cells = Vec::new();
    for &ar in &grid.ar {
        for &v in &grid.error_corr {
            for &dim in &grid.dims {
                for &n in &grid.n_times {
                    cells.extend(run_design_point(grid, ar, v, dim, n)?);
                }
            }
        }
    }
    Ok(cells)
}

fn run_design_point(
    grid: &CoverageGrid,
    ar: f64,
    v: f64,
    dim: usize,
    n: usize,
) -> Result<Vec<CoverageCell>> {
    let cfg = grid.var1(dim, n, ar, v);
    let arms: Vec<(Bootstrap, Target)> = grid
        .bootstraps
        .iter()
        .flat_map(|&b| grid.targets.iter().map(move |&t| (b, t)))
        .collect();
    let point_key = [ar.to_bits(), v.to_bits(), dim as u64, n as u64];

    // per replication, per arm: hit flags per band type or a failure
    let outcomes: Vec<Vec<Option<Vec<bool>>>> = (0..grid.replications)
        .into_par_iter()
        .map(|r| -> Result<Vec<Option<Vec<bool>>>> {
            let mut keys = point_key.to_vec();
            keys.push(r as u64);
            let panel_seed = derive_seed(grid.seed, &keys);
            let panel = simulate_var1_scores(&cfg, &mut stream_rng(panel_seed, 0))?;
            let benchmark = format!("s{dim}");
            let selector = ComparisonSelector::against_benchmark(&panel, &benchmark);
            arms.iter()
                .map(|&(boot, target)| {
                    let seed = derive_seed(panel_seed, &[boot.key(), target_key(target)]);
                    replicate_hits(&panel, &selector, grid, boot, target, seed)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(arms.len() * grid.band_types.len());
    for (a_idx, &(boot, target)) in arms.iter().enumerate() {
        let failed = outcomes.iter().filter(|o| o[a_idx].is_none()).count();
        let done = grid.replications - failed;
        for (t_idx, &band_type) in grid.band_types.iter().enumerate() {
            let hits = outcomes
                .iter()
                .filter_map(|o| o[a_idx].as_ref())
                .filter(|h| h[t_idx])
                .count();
            let coverage = if done > 0 {
                hits as f64 / done as f64
            } else {
                f64::NAN
            };
            let mc_se = if done > 0 {
                (coverage * (1.0 - coverage) / done as f64).sqrt()
            } else {
                f64::NAN
            };
            cells.push(CoverageCell {
                ar,
                error_corr: v,
                dim,
                n_time: n,
                bootstrap: boot,
                block_length: boot.block_length(n),
                band_type,
                target,
                replications: done,
                hits,
                failed,
                coverage,
                mc_se,
            });
        }
    }
    Ok(cells)
}

/// Hit flags for one simulated panel, or `None` when the bootstrap aborted.
fn replicate_hits(
    panel: &ScorePanel,
    selector: &ComparisonSelector,
    grid: &CoverageGrid,
    boot: Bootstrap,
    target: Target,
    seed: u64,
) -> Result<Option<Vec<bool>>> {
    let (estimates, evaluator) = match select_target(panel, selector, target) {
        Ok(x) => x,
        Err(Error::DegenerateBenchmark { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let block_length = boot.block_length(panel.n_time());
    let draws = match bootstrap_replicates(
        panel,
        &evaluator,
        block_length,
        grid.bootstrap_replicates,
        seed,
    ) {
        Ok(d) => d,
        Err(Error::DegenerateBenchmark { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let bands = match bands_from_replicates(
        &estimates,
        &draws,
        grid.alpha,
        &grid.band_types,
        evaluator.entries(),
    ) {
        Ok((_, bands)) => bands,
        Err(Error::ZeroSigma { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let truth = true_target(target, grid.mean, panel.n_cols());
    Ok(Some(bands.iter().map(|b| b.contains(&truth)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::average_scores;

    fn lag1_autocorrelation(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
        let cov: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        cov / var
    }

    fn column(panel: &ScorePanel, p: usize) -> Vec<f64> {
        panel.rows().map(|r| r[p]).collect()
    }

    #[test]
    fn white_noise_case_centers_on_mean() {
        let cfg = Var1Config::new(4, 400, 0.0, 0.0);
        let panel = simulate_var1_scores(&cfg, &mut stream_rng(11, 0)).unwrap();
        assert_eq!((panel.n_time(), panel.n_cols()), (400, 4));
        for m in average_scores(&panel) {
            assert!((m - 10.0).abs() < 3.0 / 20.0, "{m}");
        }
    }

    #[test]
    fn persistent_case_has_lag_one_autocorrelation() {
        let cfg = Var1Config::new(3, 2000, 0.6, 0.3);
        let panel = simulate_var1_scores(&cfg, &mut stream_rng(12, 0)).unwrap();
        for p in 0..3 {
            let col = column(&panel, p);
            let rho = lag1_autocorrelation(&col);
            assert!((rho - 0.6).abs() < 0.1, "{rho}");
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            // long-run sd of the mean is 1 / ((1 - a) sqrt(N))
            assert!((mean - 10.0).abs() < 3.0 / (0.4 * 2000f64.sqrt()), "{mean}");
        }
    }

    #[test]
    fn error_correlation_shows_up_across_series() {
        let cfg = Var1Config::new(2, 4000, 0.0, 0.6);
        let panel = simulate_var1_scores(&cfg, &mut stream_rng(13, 0)).unwrap();
        let (x, y) = (column(&panel, 0), column(&panel, 1));
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let cov: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / n;
        assert!((cov - 0.6).abs() < 0.06, "{cov}");
    }

    #[test]
    fn config_validation() {
        assert!(Var1Config::new(1, 10, 0.0, 0.0).validate().is_err());
        assert!(Var1Config::new(2, 1, 0.0, 0.0).validate().is_err());
        assert!(Var1Config::new(2, 10, 1.0, 0.0).validate().is_err());
        assert!(Var1Config::new(2, 10, 0.0, 1.0).validate().is_err());
        let mut cfg = Var1Config::new(2, 10, 0.0, 0.0);
        cfg.mean = vec![1.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn presets_exist() {
        for name in ["appendix-e", "appendix-e-high-dim", "appendix-e-small"] {
            CoverageGrid::preset(name).unwrap().validate().unwrap();
        }
        assert!(CoverageGrid::preset("nope").is_err());
    }

    fn small_grid() -> CoverageGrid {
        CoverageGrid {
            dims: vec![2, 4],
            n_times: vec![60],
            bootstraps: vec![Bootstrap::Iid, Bootstrap::Block { q: 1 }],
            targets: vec![Target::Skill, Target::Expected],
            replications: 40,
            bootstrap_replicates: 200,
            seed: 5,
            ..CoverageGrid::default()
        }
    }

    #[test]
    fn experiment_layout_and_nesting() {
        let cells = run_coverage_experiment(&small_grid()).unwrap();
        assert_eq!(cells.len(), 2 * 2 * 2 * 3);
        for c in &cells {
            assert!((0.0..=1.0).contains(&c.coverage));
            assert_eq!(c.replications + c.failed, 40);
        }
        // same panels and resamples: pointwise hits imply Bonferroni hits
        for chunk in cells.chunks(3) {
            let hits = |t: BandType| chunk.iter().find(|c| c.band_type == t).unwrap().hits;
            assert!(hits(BandType::Pointwise) <= hits(BandType::Bonferroni));
        }
        let single = cells
            .iter()
            .filter(|c| c.dim == 2 && c.target == Target::Skill);
        for c in single
            .clone()
            .filter(|c| c.band_type == BandType::Pointwise)
        {
            let bonf = single
                .clone()
                .find(|d| d.band_type == BandType::Bonferroni && d.bootstrap == c.bootstrap)
                .unwrap();
            assert_eq!(c.hits, bonf.hits);
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let a = run_coverage_experiment(&small_grid()).unwrap();
        let b = run_coverage_experiment(&small_grid()).unwrap();
        assert_eq!(a, b);
    }
}
