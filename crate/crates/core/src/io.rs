//! File formats: long-format score panels and forecast files, and the CSV
//! tables written by the command-line tool.
//!
//! A panel file is a CSV with a time column, one column per dimension and a
//! value column. Its layout is declared by a JSON header, given either as a
//! first line `# {...}` or as a sidecar file:
//!
//! ```text
//! # {"dimensions":[{"name":"horizon"},{"name":"method","labels":["a","b"]}],"method_axis":"method"}
//! time,horizon,method,value
//! 1,h1,a,0.25
//! ```
//!
//! Dimensions without declared labels take their labels in order of first
//! appearance. Times that all parse as integers are ordered numerically,
//! otherwise lexicographically (which orders ISO-8601 dates), and mapped to
//! consecutive indices. Row numbers in errors are file line numbers.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotics::AsymptoticRow;
use crate::bands::{band_report, BandResult};
use crate::error::{Error, Result};
use crate::panel::{DimensionSpec, ScorePanel};
use crate::scoring::{
    crps_ensemble, energy_score_ensemble, multivariate_squared_error, quantile_score,
    squared_error, EnsembleForecast,
};
use crate::simulation::CoverageCell;

/// Marker in the member column of a forecast file for observation rows.
pub const OBSERVATION_MARKER: &str = "obs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeaderDimension {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

/// Layout declaration of a panel or forecast file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelHeader {
    pub dimensions: Vec<HeaderDimension>,
    pub method_axis: String,
    #[serde(default = "default_time_column")]
    pub time_column: String,
    #[serde(default = "default_value_column")]
    pub value_column: String,
    #[serde(default = "default_member_column")]
    pub member_column: String,
}

fn default_time_column() -> String {
    "time".into()
}

fn default_value_column() -> String {
    "value".into()
}

fn default_member_column() -> String {
    "member".into()
}

impl PanelHeader {
    pub fn new(dimensions: Vec<HeaderDimension>, method_axis: impl Into<String>) -> Self {
        PanelHeader {
            dimensions,
            method_axis: method_axis.into(),
            time_column: default_time_column(),
            value_column: default_value_column(),
            member_column: default_member_column(),
        }
    }

    /// Header describing an existing panel, with all labels spelled out.
    pub fn for_panel(panel: &ScorePanel) -> Self {
        let dims = panel
            .dims()
            .iter()
            .map(|d| HeaderDimension {
                name: d.name.clone(),
                labels: d.labels.clone(),
            })
            .collect();
        PanelHeader::new(dims, panel.dims()[panel.method_axis()].name.clone())
    }

    fn method_index(&self) -> Result<usize> {
        self.dimensions
            .iter()
            .position(|d| d.name == self.method_axis)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "method axis `{}` is not a declared dimension",
                    self.method_axis
                ))
            })
    }
}

/// Header text and CSV body of a file, plus the number of lines stripped
/// before the body.
struct Source {
    header: PanelHeader,
    body: String,
    line_offset: usize,
}

fn read_source(path: &Path, header: Option<&Path>) -> Result<Source> {
    let text = fs::read_to_string(path)?;
    let (inline, body, line_offset) = match text.strip_prefix('#') {
        Some(rest) => {
            let (first, body) = rest.split_once('\n').unwrap_or((rest, ""));
            (Some(first.trim().to_string()), body.to_string(), 1)
        }
        None => (None, text, 0),
    };
    let sidecar = header.map(Path::to_path_buf).or_else(|| {
        let p = sidecar_path(path);
        (inline.is_none() && p.is_file()).then_some(p)
    });
    let header: PanelHeader = match (sidecar, inline) {
        (Some(p), _) => serde_json::from_str(&fs::read_to_string(p)?)?,
        (None, Some(json)) => serde_json::from_str(&json)?,
        (None, None) => {
            return Err(Error::invalid(format!(
                "{} has no header: start it with `# {{...}}` or provide a sidecar JSON",
                path.display()
            )))
        }
    };
    Ok(Source {
        header,
        body,
        line_offset,
    })
}

/// Default sidecar location: the data path with extension `.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

struct LongRecord {
    line: usize,
    time: String,
    labels: Vec<String>,
    rest: Vec<String>,
}

/// Reads the records of a long-format file, picking the time column, the
/// dimension columns and `extra` further columns (all remaining columns if
/// `extra` is `None`). Returns the names of the extra columns too.
fn read_records(src: &Source, extra: Option<&[&str]>) -> Result<(Vec<String>, Vec<LongRecord>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(src.body.as_bytes());
    let columns: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Parse {
                row: src.line_offset + 1,
                message: format!("missing column `{name}`"),
            })
    };
    let time_col = find(&src.header.time_column)?;
    let dim_cols = src
        .header
        .dimensions
        .iter()
        .map(|d| find(&d.name))
        .collect::<Result<Vec<_>>>()?;
    let extra_cols: Vec<usize> = match extra {
        Some(names) => names.iter().map(|n| find(n)).collect::<Result<_>>()?,
        None => (0..columns.len())
            .filter(|c| *c != time_col && !dim_cols.contains(c))
            .collect(),
    };
    let extra_names = extra_cols.iter().map(|&c| columns[c].clone()).collect();

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = src.line_offset + rec.position().map_or(0, |p| p.line() as usize);
        let field = |c: usize| {
            rec.get(c).map(str::to_string).ok_or_else(|| Error::Parse {
                row: line,
                message: format!("missing field `{}`", columns[c]),
            })
        };
        records.push(LongRecord {
            line,
            time: field(time_col)?,
            labels: dim_cols.iter().map(|&c| field(c)).collect::<Result<_>>()?,
            rest: extra_cols
                .iter()
                .map(|&c| field(c))
                .collect::<Result<_>>()?,
        });
    }
    Ok((extra_names, records))
}

/// Time and label indexing of a long file.
struct Layout {
    time_labels: Vec<String>,
    time_index: HashMap<String, usize>,
    dims: Vec<DimensionSpec>,
    label_index: Vec<HashMap<String, usize>>,
}

impl Layout {
    /// `skip_blank_method` leaves empty method labels out of label discovery
    /// (shared observation rows of forecast files).
    fn build(
        header: &PanelHeader,
        records: &[LongRecord],
        skip_blank_method: bool,
    ) -> Result<Layout> {
        let method = header.method_index()?;
        let mut dims = Vec::with_capacity(header.dimensions.len());
        let mut label_index = Vec::with_capacity(header.dimensions.len());
        for (k, hd) in header.dimensions.iter().enumerate() {
            let mut labels = hd.labels.clone();
            let declared = !labels.is_empty();
            let mut index: HashMap<String, usize> = HashMap::new();
            for (i, l) in labels.iter().enumerate() {
                if index.insert(l.clone(), i).is_some() {
                    return Err(Error::invalid(format!(
                        "label `{l}` repeated in dimension `{}`",
                        hd.name
                    )));
                }
            }
            for r in records {
                let l = &r.labels[k];
                if index.contains_key(l) || (skip_blank_method && k == method && l.is_empty()) {
                    continue;
                }
                if declared {
                    return Err(Error::Parse {
                        row: r.line,
                        message: format!("label `{l}` is not declared for dimension `{}`", hd.name),
                    });
                }
                index.insert(l.clone(), labels.len());
                labels.push(l.clone());
            }
            let spec = DimensionSpec {
                is_method_axis: k == method,
                ..DimensionSpec::new(hd.name.clone(), labels)
            };
            dims.push(spec);
            label_index.push(index);
        }

        let mut times: Vec<String> = Vec::new();
        let mut seen = HashMap::new();
        for r in records {
            if seen.insert(r.time.clone(), ()).is_none() {
                times.push(r.time.clone());
            }
        }
        let as_ints: Option<Vec<i64>> = times.iter().map(|t| t.parse().ok()).collect();
        match as_ints {
            Some(ints) => {
                let mut paired: Vec<(i64, String)> = ints.into_iter().zip(times).collect();
                paired.sort();
                times = paired.into_iter().map(|(_, t)| t).collect();
            }
            None => times.sort(),
        }
        let time_index = times
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Layout {
            time_labels: times,
            time_index,
            dims,
            label_index,
        })
    }

    fn n_cols(&self) -> usize {
        self.dims.iter().map(DimensionSpec::len).product()
    }

    /// Flat column index of a label tuple; `None` for a label not indexed.
    fn column(&self, labels: &[String]) -> Option<usize> {
        let mut p = 0;
        for ((d, idx), l) in self.dims.iter().zip(&self.label_index).zip(labels) {
            p = p * d.len() + *idx.get(l)?;
        }
        Some(p)
    }

    fn describe(&self, t: usize, p: usize) -> String {
        let mut parts = vec![format!("time={}", self.time_labels[t])];
        let mut rem = p;
        let mut idx = vec![0; self.dims.len()];
        for (k, d) in self.dims.iter().enumerate().rev() {
            idx[k] = rem % d.len();
            rem /= d.len();
        }
        for (d, i) in self.dims.iter().zip(idx) {
            parts.push(format!("{}={}", d.name, d.labels[i]));
        }
        parts.join(", ")
    }
}

fn parse_value(s: &str, line: usize, column: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        row: line,
        message: format!("`{s}` in column `{column}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row: line,
            message: format!("non-finite value `{s}` in column `{column}`"),
        });
    }
    Ok(v)
}

/// Loads a long-format panel. `header` overrides the inline header and the
/// default sidecar (`<path>.json`).
pub fn load_panel(path: &Path, header: Option<&Path>) -> Result<ScorePanel> {
    let src = read_source(path, header)?;
    let value_column = src.header.value_column.clone();
    let (_, records) = read_records(&src, Some(&[value_column.as_str()]))?;
    let layout = Layout::build(&src.header, &records, false)?;
    let p = layout.n_cols();
    let n = layout.time_labels.len();
    let mut values = vec![0.0; n * p];
    let mut origin = vec![0usize; n * p];
    for r in &records {
        let t = layout.time_index[&r.time];
        let col = layout.column(&r.labels).expect("labels indexed by layout");
        let cell = t * p + col;
        if origin[cell] != 0 {
            return Err(Error::DuplicateKey {
                key: layout.describe(t, col),
                first: origin[cell],
                second: r.line,
            });
        }
        values[cell] = parse_value(&r.rest[0], r.line, &value_column)?;
        origin[cell] = r.line;
    }
    if let Some(cell) = origin.iter().position(|&o| o == 0) {
        return Err(Error::Incomplete(layout.describe(cell / p, cell % p)));
    }
    ScorePanel::with_time_labels(layout.dims, layout.time_labels, values)
}

/// Writes a panel in long format with an inline header. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_panel<W: Write>(panel: &ScorePanel, out: W) -> Result<()> {
    let mut out = out;
    let header = PanelHeader::for_panel(panel);
    writeln!(out, "# {}", serde_json::to_string(&header)?)?;
    let mut w = csv::Writer::from_writer(out);
    let mut names = vec![header.time_column.clone()];
    names.extend(panel.dims().iter().map(|d| d.name.clone()));
    names.push(header.value_column.clone());
    w.write_record(&names)?;
    for (t, row) in panel.rows().enumerate() {
        for (p, v) in row.iter().enumerate() {
            let mut rec = vec![panel.time_labels()[t].clone()];
            rec.extend(panel.column_labels(p).into_iter().map(str::to_string));
            rec.push(format!("{v:?}"));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Scoring rule applied to each forecast cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoringRule {
    /// Squared error of a single-valued forecast (`D = 1`).
    SquaredError,
    /// Squared Euclidean error of a single-valued vector forecast.
    MultivariateSquaredError,
    /// Pinball loss of a single quantile forecast at level `tau`.
    Quantile(f64),
    /// CRPS of an ensemble (`D = 1`).
    Crps,
    /// Energy score of an ensemble.
    Energy,
}

impl FromStr for ScoringRule {
    type Err = Error;

    /// Accepts `se`, `mv_se`, `qs(tau)` (or `qs:tau`), `crps` and `energy`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "se" | "brier" => return Ok(ScoringRule::SquaredError),
            "mv_se" | "mvse" => return Ok(ScoringRule::MultivariateSquaredError),
            "crps" => return Ok(ScoringRule::Crps),
            "energy" | "es" => return Ok(ScoringRule::Energy),
            _ => {}
        }
        let tau = s
            .strip_prefix("qs(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("qs:"))
            .ok_or_else(|| Error::invalid(format!("unknown scoring rule `{s}`")))?;
        let tau: f64 = tau
            .parse()
            .map_err(|_| Error::invalid(format!("bad quantile level in `{s}`")))?;
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::invalid(format!(
                "quantile level {tau} outside (0, 1)"
            )));
        }
        Ok(ScoringRule::Quantile(tau))
    }
}

impl ScoringRule {
    fn check(self, dim: usize, members: usize, cell: impl Fn() -> String) -> Result<()> {
        let univariate = matches!(
            self,
            ScoringRule::SquaredError | ScoringRule::Quantile(_) | ScoringRule::Crps
        );
        if univariate && dim != 1 {
            return Err(Error::invalid(format!(
                "{self:?} needs one value column, got {dim}"
            )));
        }
        let single = matches!(
            self,
            ScoringRule::SquaredError
                | ScoringRule::MultivariateSquaredError
                | ScoringRule::Quantile(_)
        );
        if single && members != 1 {
            return Err(Error::invalid(format!(
                "{self:?} needs a single forecast value per cell, got {members} members at {}",
                cell()
            )));
        }
        Ok(())
    }

    pub fn score(self, forecast: &EnsembleForecast, obs: &[f64]) -> Result<f64> {
        let first = || forecast.members().next().expect("ensembles are non-empty");
        match self {
            ScoringRule::SquaredError => squared_error(first()[0], obs[0]),
            ScoringRule::MultivariateSquaredError => multivariate_squared_error(first(), obs),
            ScoringRule::Quantile(tau) => quantile_score(first()[0], obs[0], tau),
            ScoringRule::Crps => crps_ensemble(forecast, obs[0]),
            ScoringRule::Energy => energy_score_ensemble(forecast, obs),
        }
    }
}

#[derive(Default)]
struct ForecastCell {
    members: Vec<Vec<f64>>,
    obs: Option<(Vec<f64>, usize)>,
}

/// Scores a forecast file and sums the scores over the dimensions in
/// `aggregate_over`.
///
/// Besides time and dimension columns the file has a member column (default
/// `member`) and one or more value columns. Rows whose member is `obs` hold
/// the observation; an observation row with an empty method label applies
/// to every method.
pub fn score_forecasts(
    path: &Path,
    header: Option<&Path>,
    rule: ScoringRule,
    aggregate_over: &[String],
) -> Result<ScorePanel> {
    let src = read_source(path, header)?;
    let method = src.header.method_index()?;
    let (extra, records) = read_records(&src, None)?;
    let member_col = extra
        .iter()
        .position(|c| *c == src.header.member_column)
        .ok_or_else(|| Error::Parse {
            row: src.line_offset + 1,
            message: format!("missing column `{}`", src.header.member_column),
        })?;
    let value_cols: Vec<usize> = (0..extra.len()).filter(|&c| c != member_col).collect();
    if value_cols.is_empty() {
        return Err(Error::invalid("forecast file has no value columns"));
    }
    let layout = Layout::build(&src.header, &records, true)?;
    let p = layout.n_cols();
    let n = layout.time_labels.len();
    let mut cells: Vec<ForecastCell> = (0..n * p).map(|_| ForecastCell::default()).collect();
    let n_methods = layout.dims[method].len();

    for r in &records {
        let values = value_cols
            .iter()
            .map(|&c| parse_value(&r.rest[c], r.line, &extra[c]))
            .collect::<Result<Vec<_>>>()?;
        let t = layout.time_index[&r.time];
        let is_obs = r.rest[member_col] == OBSERVATION_MARKER;
        let targets: Vec<usize> = if is_obs && r.labels[method].is_empty() {
            let mut labels = r.labels.clone();
            (0..n_methods)
                .map(|m| {
                    labels[method] = layout.dims[method].labels[m].clone();
                    layout.column(&labels).expect("labels indexed by layout")
                })
                .collect()
        } else {
            vec![layout.column(&r.labels).expect("labels indexed by layout")]
        };
        for col in targets {
            let cell = &mut cells[t * p + col];
            if !is_obs {
                cell.members.push(values.clone());
            } else if let Some((_, first)) = &cell.obs {
                return Err(Error::DuplicateKey {
                    key: format!("observation {}", layout.describe(t, col)),
                    first: *first,
                    second: r.line,
                });
            } else {
                cell.obs = Some((values.clone(), r.line));
            }
        }
    }

    let mut scores = Vec::with_capacity(n * p);
    for (i, cell) in cells.into_iter().enumerate() {
        let describe = || layout.describe(i / p, i % p);
        let Some((obs, _)) = cell.obs else {
            return Err(Error::Incomplete(format!("observation for {}", describe())));
        };
        if cell.members.is_empty() {
            return Err(Error::Incomplete(format!("forecast for {}", describe())));
        }
        rule.check(obs.len(), cell.members.len(), describe)?;
        let forecast = EnsembleForecast::new(cell.members)?;
        scores.push(rule.score(&forecast, &obs)?);
    }
    let panel = ScorePanel::with_time_labels(layout.dims, layout.time_labels, scores)?;
    let over: Vec<&str> = aggregate_over.iter().map(String::as_str).collect();
    aggregate_panel(&panel, &over)
}

/// Sums the scores over the named dimensions (equal-weight aggregation).
/// The method axis cannot be aggregated.
pub fn aggregate_panel(panel: &ScorePanel, over: &[&str]) -> Result<ScorePanel> {
    if over.is_empty() {
        return Ok(panel.clone());
    }
    let dims = panel.dims();
    let mut drop = vec![false; dims.len()];
    for name in over {
        let k = dims
            .iter()
            .position(|d| d.name == *name)
            .ok_or_else(|| Error::invalid(format!("unknown dimension `{name}`")))?;
        if k == panel.method_axis() {
            return Err(Error::invalid(format!(
                "cannot aggregate over the method axis `{name}`"
            )));
        }
        if std::mem::replace(&mut drop[k], true) {
            return Err(Error::invalid(format!("dimension `{name}` listed twice")));
        }
    }
    let kept: Vec<DimensionSpec> = dims
        .iter()
        .zip(&drop)
        .filter(|(_, d)| !**d)
        .map(|(s, _)| s.clone())
        .collect();
    let new_p: usize = kept.iter().map(DimensionSpec::len).product();
    let target: Vec<usize> = (0..panel.n_cols())
        .map(|p| {
            panel
                .unflatten(p)
                .iter()
                .zip(&drop)
                .filter(|(_, d)| !**d)
                .zip(&kept)
                .fold(0, |acc, ((i, _), spec)| acc * spec.len() + i)
        })
        .collect();
    let mut values = vec![0.0; panel.n_time() * new_p];
    for (t, row) in panel.rows().enumerate() {
        let out = &mut values[t * new_p..(t + 1) * new_p];
        for (v, &q) in row.iter().zip(&target) {
            out[q] += v;
        }
    }
    ScorePanel::with_time_labels(kept, panel.time_labels().to_vec(), values)
}

/// `%g`-style formatting with `digits` significant digits.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

const SIG: usize = 6;

/// Band table: one row per entry with labels, estimate, bootstrap sigma and
/// for each band type the bounds and whether zero lies inside.
pub fn write_bands_csv<W: Write>(result: &BandResult, dim_names: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut names = vec!["entry".to_string()];
    names.extend(dim_names.iter().cloned());
    names.extend(["benchmark", "estimate", "sigma"].map(String::from));
    for b in &result.bands {
        let t = b.band_type.as_str();
        names.extend([
            format!("{t}_lower"),
            format!("{t}_upper"),
            format!("{t}_covers_zero"),
        ]);
    }
    w.write_record(&names)?;
    for row in band_report(result) {
        let mut rec = vec![row.entry.to_string()];
        rec.extend(row.label.labels.iter().cloned());
        rec.push(row.label.benchmark.clone().unwrap_or_default());
        rec.push(format_sig(row.estimate, SIG));
        rec.push(format_sig(row.sigma, SIG));
        for b in &row.bounds {
            rec.push(format_sig(b.lower, SIG));
            rec.push(format_sig(b.upper, SIG));
            rec.push(b.covers_zero.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Coverage table in the layout `a, v, boot, type, P, N, coverage, mc_se`
/// followed by block multiplier, block length, target and counts.
pub fn write_coverage_csv<W: Write>(cells: &[CoverageCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "a",
        "v",
        "boot",
        "type",
        "P",
        "N",
        "coverage",
        "mc_se",
        "q",
        "block_length",
        "target",
        "R",
        "hits",
        "failed",
    ])?;
    for c in cells {
        w.write_record([
            format_sig(c.ar, SIG),
            format_sig(c.error_corr, SIG),
            c.bootstrap.label().to_string(),
            c.band_type.as_str().to_string(),
            c.dim.to_string(),
            c.n_time.to_string(),
            format_sig(c.coverage, SIG),
            format_sig(c.mc_se, SIG),
            c.bootstrap
                .multiplier()
                .map(|q| q.to_string())
                .unwrap_or_default(),
            c.block_length.to_string(),
            c.target.as_str().to_string(),
            c.replications.to_string(),
            c.hits.to_string(),
            c.failed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_asymptotics_csv<W: Write>(rows: &[AsymptoticRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "J",
        "rho",
        "alpha",
        "z_pointwise",
        "z_bonferroni",
        "q_supt",
        "supt_over_pointwise",
        "bonferroni_over_supt",
        "coverage_pointwise",
        "coverage_bonferroni",
    ])?;
    for r in rows {
        let mut rec = vec![r.dim.to_string()];
        rec.extend(
            [
                r.rho,
                r.alpha,
                r.z_pointwise,
                r.z_bonferroni,
                r.q_supt,
                r.supt_over_pointwise,
                r.bonferroni_over_supt,
                r.coverage_pointwise,
                r.coverage_bonferroni,
            ]
            .map(|x| format_sig(x, SIG)),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON; floats keep their full round-trip representation.
pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, out: W) -> Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.1, "0.1"),
            (-0.0228, "-0.0228"),
            (0.14700001, "0.147"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (0.0001234567, "0.000123457"),
            (0.00001234567, "1.23457e-05"),
            (1.9599639845, "1.95996"),
            (f64::NAN, "NaN"),
        ];
        for (x, s) in cases {
            assert_eq!(format_sig(x, 6), s, "{x}");
        }
    }

    #[test]
    fn scoring_rule_parsing() {
        assert_eq!(
            "se".parse::<ScoringRule>().unwrap(),
            ScoringRule::SquaredError
        );
        assert_eq!(
            "qs(0.9)".parse::<ScoringRule>().unwrap(),
            ScoringRule::Quantile(0.9)
        );
        assert_eq!(
            "qs:0.25".parse::<ScoringRule>().unwrap(),
            ScoringRule::Quantile(0.25)
        );
        assert_eq!("CRPS".parse::<ScoringRule>().unwrap(), ScoringRule::Crps);
        assert!("qs(1.5)".parse::<ScoringRule>().is_err());
        assert!("log".parse::<ScoringRule>().is_err());
    }

    #[test]
    fn aggregation_drops_dimension() {
        let dims = vec![
            DimensionSpec::new("var", vec!["x".into(), "y".into()]),
            DimensionSpec::methods("method", vec!["a".into(), "b".into()]),
        ];
        // columns x/a, x/b, y/a, y/b
        let panel = ScorePanel::new(dims, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        let agg = aggregate_panel(&panel, &["var"]).unwrap();
        assert_eq!(agg.n_cols(), 2);
        assert_eq!(agg.values(), &[4.0, 6.0, 12.0, 14.0]);
        assert!(aggregate_panel(&panel, &["method"]).is_err());
        assert!(aggregate_panel(&panel, &["nope"]).is_err());
        assert_eq!(aggregate_panel(&panel, &[]).unwrap(), panel);
    }
}
