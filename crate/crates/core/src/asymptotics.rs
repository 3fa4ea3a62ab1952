//! Large-sample width and coverage of pointwise, Bonferroni and sup-t bands
//! when the `J` standardized estimators are equicorrelated normals.
//!
//! With unit variances and common correlation `rho >= 0`, the vector has the
//! one-factor form `Z_j = sqrt(rho) W + sqrt(1 - rho) e_j`. Conditional on the
//! factor `W` the coordinates are independent, so
//!
//! ```text
//! P(max_j |Z_j| <= c) = E_W [ (Phi(a+(W)) - Phi(a-(W)))^J ],
//!   a+-(W) = (+-c - sqrt(rho) W) / sqrt(1 - rho).
//! ```
//!
//! The expectation over `W` is estimated by Monte Carlo; the equicoordinate
//! quantile is the root of that coverage curve at `1 - alpha`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::normal::{normal_cdf, normal_pdf, normal_quantile};
use crate::rng::stream_rng;

pub const DEFAULT_MC_DRAWS: usize = 2_000_000;
const CHUNK: usize = 1 << 15;

#[derive(Debug, Clone, PartialEq)]
pub struct EquicorrSpec {
    pub dim: usize,
    pub rho: f64,
    pub alpha: f64,
    pub mc_draws: usize,
    pub seed: u64,
}

impl EquicorrSpec {
    pub fn new(dim: usize, rho: f64, alpha: f64) -> Self {
        EquicorrSpec {
            dim,
            rho,
            alpha,
            mc_draws: DEFAULT_MC_DRAWS,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dimension J must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::invalid(format!(
                "correlation {} outside [0, 1)",
                self.rho
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha = {} outside (0, 1)",
                self.alpha
            )));
        }
        if self.mc_draws == 0 {
            return Err(Error::invalid("mc_draws must be positive"));
        }
        Ok(())
    }
}

/// Monte Carlo draws of the common factor for one correlation level. The
/// same draws serve every `J`, which keeps curves over `J` smooth.
#[derive(Debug, Clone)]
pub struct EquicorrModel {
    rho: f64,
    loading: f64,
    scale: f64,
    factor: Vec<f64>,
}

impl EquicorrModel {
    pub fn new(rho: f64, mc_draws: usize, seed: u64) -> Result<Self> {
        EquicorrSpec {
            dim: 1,
            rho,
            alpha: 0.5,
            mc_draws,
            seed,
        }
        .validate()?;
        // with rho = 0 the conditional probability does not depend on W
        let factor = if rho == 0.0 {
            vec![0.0]
        } else {
            let n_chunks = mc_draws.div_ceil(CHUNK);
            let chunks: Vec<Vec<f64>> = (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let len = CHUNK.min(mc_draws - c * CHUNK);
                    let mut rng = stream_rng(seed, c as u64);
                    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
                })
                .collect();
            chunks.concat()
        };
        Ok(EquicorrModel {
            rho,
            loading: rho.sqrt(),
            scale: (1.0 - rho).sqrt(),
            factor,
        })
    }

    pub fn from_spec(spec: &EquicorrSpec) -> Result<Self> {
        spec.validate()?;
        Self::new(spec.rho, spec.mc_draws, spec.seed)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Estimated `P(max_j |Z_j| <= c)` and its derivative in `c`.
    fn coverage_and_slope(&self, dim: usize, c: f64) -> (f64, f64) {
        if c <= 0.0 {
            return (0.0, 0.0);
        }
        let j = dim as i32;
        let partial: Vec<(f64, f64)> = self
            .factor
            .par_chunks(CHUNK)
            .map(|ws| {
                ws.iter().fold((0.0, 0.0), |(p_acc, d_acc), &w| {
                    let shift = self.loading * w;
                    let hi = (c - shift) / self.scale;
                    let lo = (-c - shift) / self.scale;
                    let p = (normal_cdf(hi) - normal_cdf(lo)).max(0.0);
                    let dens = (normal_pdf(hi) + normal_pdf(lo)) / self.scale;
                    let d = if j == 1 {
                        dens
                    } else {
                        dim as f64 * p.powi(j - 1) * dens
                    };
                    (p_acc + p.powi(j), d_acc + d)
                })
            })
            .collect();
        let (p, d) = partial
            .into_iter()
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let n = self.factor.len() as f64;
        (p / n, d / n)
    }

    /// Estimated `P(max_j |Z_j| <= c)`.
    pub fn coverage(&self, dim: usize, c: f64) -> f64 {
        self.coverage_and_slope(dim, c).0
    }

    /// The `1 - alpha` equicoordinate quantile for dimension `dim`.
    pub fn quantile(&self, dim: usize, alpha: f64) -> Result<f64> {
        let target = 1.0 - alpha;
        // the Bonferroni constant bounds the quantile from above, so Newton
        // steps from it approach the root monotonically; bisection guards
        // against Monte Carlo noise in the slope
        let mut c = normal_quantile(1.0 - alpha / (2.0 * dim as f64))?;
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        for _ in 0..200 {
            let (g, slope) = self.coverage_and_slope(dim, c);
            let diff = g - target;
            if diff == 0.0 {
                return Ok(c);
            }
            if diff < 0.0 {
                lo = c;
            } else {
                hi = c;
            }
            let mut next = if slope > 0.0 {
                c - diff / slope
            } else {
                f64::NAN
            };
            if !(next > lo && next < hi) {
                next = if hi.is_finite() {
                    0.5 * (lo + hi)
                } else {
                    c + 1.0
                };
            }
            if (next - c).abs() < 1e-10 {
                return Ok(next);
            }
            c = next;
        }
        Ok(c)
    }
}

/// The `1 - alpha` quantile of `max_j |Z_j|`.
pub fn equicoordinate_quantile(spec: &EquicorrSpec) -> Result<f64> {
    EquicorrModel::from_spec(spec)?.quantile(spec.dim, spec.alpha)
}

/// Asymptotic joint coverage of the pointwise band (`c = z_{1-alpha/2}`).
pub fn pointwise_asymptotic_coverage(spec: &EquicorrSpec) -> Result<f64> {
    let c = normal_quantile(1.0 - spec.alpha / 2.0)?;
    Ok(EquicorrModel::from_spec(spec)?.coverage(spec.dim, c))
}

/// Asymptotic joint coverage of the Bonferroni band (`c = z_{1-alpha/(2J)}`).
pub fn bonferroni_asymptotic_coverage(spec: &EquicorrSpec) -> Result<f64> {
    spec.validate()?;
    let c = normal_quantile(1.0 - spec.alpha / (2.0 * spec.dim as f64))?;
    Ok(EquicorrModel::from_spec(spec)?.coverage(spec.dim, c))
}

/// Width of the Bonferroni band relative to the sup-t band.
pub fn width_ratio_bonf_vs_supt(spec: &EquicorrSpec) -> Result<f64> {
    spec.validate()?;
    let z = normal_quantile(1.0 - spec.alpha / (2.0 * spec.dim as f64))?;
    Ok(z / equicoordinate_quantile(spec)?)
}

/// Width of the sup-t band relative to the pointwise band.
pub fn width_ratio_supt_vs_pointwise(spec: &EquicorrSpec) -> Result<f64> {
    spec.validate()?;
    Ok(equicoordinate_quantile(spec)? / normal_quantile(1.0 - spec.alpha / 2.0)?)
}

/// One line of the width/coverage table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub dim: usize,
    pub rho: f64,
    pub alpha: f64,
    pub z_pointwise: f64,
    pub z_bonferroni: f64,
    pub q_supt: f64,
    pub supt_over_pointwise: f64,
    pub bonferroni_over_supt: f64,
    pub coverage_pointwise: f64,
    pub coverage_bonferroni: f64,
}

/// Width ratios and coverages for every `(rho, J)` combination. The factor
/// draws for each `rho` come from the stream seeded by `(seed, rho index)`.
pub fn asymptotic_table(
    dims: &[usize],
    rhos: &[f64],
    alpha: f64,
    mc_draws: usize,
    seed: u64,
) -> Result<Vec<AsymptoticRow>> {
    let mut rows = Vec::with_capacity(dims.len() * rhos.len());
    for (k, &rho) in rhos.iter().enumerate() {
        let model = EquicorrModel::new(rho, mc_draws, crate::rng::derive_seed(seed, &[k as u64]))?;
        let z_point = normal_quantile(1.0 - alpha / 2.0)?;
        for &dim in dims {
            EquicorrSpec {
                dim,
                rho,
                alpha,
                mc_draws,
                seed,
            }
            .validate()?;
            let z_bonf = normal_quantile(1.0 - alpha / (2.0 * dim as f64))?;
            let q = model.quantile(dim, alpha)?;
            rows.push(AsymptoticRow {
                dim,
                rho,
                alpha,
                z_pointwise: z_point,
                z_bonferroni: z_bonf,
                q_supt: q,
                supt_over_pointwise: q / z_point,
                bonferroni_over_supt: z_bonf / q,
                coverage_pointwise: model.coverage(dim, z_point),
                coverage_bonferroni: model.coverage(dim, z_bonf),
            });
        }
    }
    Ok(rows)
}
