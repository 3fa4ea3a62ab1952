//! Score panels and the maps from average scores to skill scores.
//!
//! A [`ScorePanel`] holds `N` score vectors of length `P`. The `P` columns are
//! the lexicographic flattening of the declared dimensions (the last dimension
//! varies fastest). Exactly one dimension is the method axis; skill scores
//! compare two labels of that axis at every combination of the other
//! dimensions.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One named index dimension of a panel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionSpec {
    pub name: String,
    pub labels: Vec<String>,
    #[serde(default)]
    pub is_method_axis: bool,
}

impl DimensionSpec {
    pub fn new(name: impl Into<String>, labels: Vec<String>) -> Self {
        DimensionSpec {
            name: name.into(),
            labels,
            is_method_axis: false,
        }
    }

    pub fn methods(name: impl Into<String>, labels: Vec<String>) -> Self {
        DimensionSpec {
            is_method_axis: true,
            ..Self::new(name, labels)
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Validates a dimension list and returns the index of the method axis.
pub(crate) fn validate_dims(dims: &[DimensionSpec]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::invalid("a panel needs at least one dimension"));
    }
    let mut names = HashSet::new();
    for d in dims {
        if !names.insert(d.name.as_str()) {
            return Err(Error::invalid(format!(
                "dimension `{}` declared twice",
                d.name
            )));
        }
        if d.labels.is_empty() {
            return Err(Error::invalid(format!(
                "dimension `{}` has no labels",
                d.name
            )));
        }
        let mut seen = HashSet::new();
        for l in &d.labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::invalid(format!(
                    "label `{l}` repeated in dimension `{}`",
                    d.name
                )));
            }
        }
    }
    let methods: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_method_axis)
        .map(|(i, _)| i)
        .collect();
    match methods.as_slice() {
        [m] => Ok(*m),
        [] => Err(Error::invalid("no dimension is marked as the method axis")),
        _ => Err(Error::invalid(
            "more than one dimension is marked as the method axis",
        )),
    }
}

/// An `N x P` matrix of realized scores with its index metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePanel {
    time_labels: Vec<String>,
    dims: Vec<DimensionSpec>,
    method_axis: usize,
    values: Vec<f64>,
}

impl ScorePanel {
    /// Builds a panel from row-major values; time labels default to `0..N`.
    pub fn new(dims: Vec<DimensionSpec>, n_time: usize, values: Vec<f64>) -> Result<Self> {
        let time_labels = (0..n_time).map(|t| t.to_string()).collect();
        Self::with_time_labels(dims, time_labels, values)
    }

    pub fn with_time_labels(
        dims: Vec<DimensionSpec>,
        time_labels: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let method_axis = validate_dims(&dims)?;
        let n = time_labels.len();
        if n < 2 {
            return Err(Error::invalid(format!(
                "a panel needs N >= 2 time points, got {n}"
            )));
        }
        let p: usize = dims.iter().map(DimensionSpec::len).product();
        if values.len() != n * p {
            return Err(Error::invalid(format!(
                "expected {n} x {p} = {} values, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite score {} at time {}, column {}",
                values[i],
                i / p,
                i % p
            )));
        }
        Ok(ScorePanel {
            time_labels,
            dims,
            method_axis,
            values,
        })
    }

    /// Single-dimension panel whose columns are the methods `labels`.
    pub fn from_method_columns(
        labels: Vec<String>,
        n_time: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            vec![DimensionSpec::methods("method", labels)],
            n_time,
            values,
        )
    }

    pub fn n_time(&self) -> usize {
        self.time_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.values.len() / self.n_time()
    }

    pub fn dims(&self) -> &[DimensionSpec] {
        &self.dims
    }

    pub fn method_axis(&self) -> usize {
        self.method_axis
    }

    pub fn time_labels(&self) -> &[String] {
        &self.time_labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let p = self.n_cols();
        &self.values[t * p..(t + 1) * p]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.n_cols())
    }

    /// Label indices (one per dimension) of column `p`.
    pub fn unflatten(&self, mut p: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for (k, d) in self.dims.iter().enumerate().rev() {
            idx[k] = p % d.len();
            p /= d.len();
        }
        idx
    }

    /// Column index of a tuple of label indices.
    pub fn flatten(&self, idx: &[usize]) -> usize {
        self.dims
            .iter()
            .zip(idx)
            .fold(0, |acc, (d, &i)| acc * d.len() + i)
    }

    pub fn column_labels(&self, p: usize) -> Vec<&str> {
        self.unflatten(p)
            .into_iter()
            .zip(&self.dims)
            .map(|(i, d)| d.labels[i].as_str())
            .collect()
    }

    /// Column index for a full label tuple in dimension order.
    pub fn column_index(&self, labels: &[&str]) -> Option<usize> {
        if labels.len() != self.dims.len() {
            return None;
        }
        let idx: Option<Vec<usize>> = self
            .dims
            .iter()
            .zip(labels)
            .map(|(d, l)| d.position(l))
            .collect();
        idx.map(|i| self.flatten(&i))
    }

    pub fn column_name(&self, p: usize) -> String {
        self.column_labels(p).join("/")
    }

    /// A new panel with the same layout and different rows.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> ScorePanel {
        debug_assert_eq!(values.len(), self.values.len());
        ScorePanel {
            time_labels: self.time_labels.clone(),
            dims: self.dims.clone(),
            method_axis: self.method_axis,
            values,
        }
    }
}

/// Column means, accumulated over rows in time order.
pub fn average_scores(panel: &ScorePanel) -> Vec<f64> {
    let mut sums = vec![0.0; panel.n_cols()];
    for row in panel.rows() {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let n = panel.n_time() as f64;
    sums.iter_mut().for_each(|s| *s /= n);
    sums
}

/// The set of (method, benchmark) pairs to compare. Each pair is applied at
/// every combination of the non-method dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComparisonSelector {
    pub pairs: Vec<(String, String)>,
}

impl ComparisonSelector {
    pub fn new(pairs: Vec<(String, String)>) -> Self {
        ComparisonSelector { pairs }
    }

    /// Every method against a single benchmark, in method-axis order.
    pub fn against_benchmark(panel: &ScorePanel, benchmark: &str) -> Self {
        let methods = &panel.dims()[panel.method_axis()].labels;
        ComparisonSelector {
            pairs: methods
                .iter()
                .filter(|m| *m != benchmark)
                .map(|m| (m.clone(), benchmark.to_string()))
                .collect(),
        }
    }

    /// Parses `m1:m2,m3:m4`.
    pub fn parse(spec: &str) -> Result<Self> {
        let pairs = spec
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|p| match p.split_once(':') {
                Some((a, b)) if !a.is_empty() && !b.is_empty() => {
                    Ok((a.trim().to_string(), b.trim().to_string()))
                }
                _ => Err(Error::invalid(format!(
                    "comparison `{p}` is not of the form method:benchmark"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ComparisonSelector { pairs })
    }

    /// Checks the pairs against a panel and expands them to column pairs.
    pub fn resolve(&self, panel: &ScorePanel) -> Result<Comparisons> {
        if self.pairs.is_empty() {
            return Err(Error::invalid(
                "at least one method:benchmark pair is required",
            ));
        }
        let axis = &panel.dims()[panel.method_axis()];
        let mut seen = HashSet::new();
        let mut pair_idx = Vec::with_capacity(self.pairs.len());
        for (m1, m2) in &self.pairs {
            if m1 == m2 {
                return Err(Error::invalid(format!(
                    "method `{m1}` compared with itself"
                )));
            }
            if !seen.insert((m1, m2)) {
                return Err(Error::invalid(format!("pair {m1}:{m2} listed twice")));
            }
            let lookup = |l: &str| {
                axis.position(l).ok_or_else(|| {
                    Error::invalid(format!("unknown method `{l}` on axis `{}`", axis.name))
                })
            };
            pair_idx.push((lookup(m1)?, lookup(m2)?));
        }

        let others: Vec<usize> = (0..panel.dims().len())
            .filter(|&k| k != panel.method_axis())
            .collect();
        let n_other: usize = others.iter().map(|&k| panel.dims()[k].len()).product();
        let mut entries = Vec::with_capacity(n_other * pair_idx.len());
        let mut columns = Vec::with_capacity(entries.capacity());
        let mut idx = vec![0usize; panel.dims().len()];
        for combo in 0..n_other {
            let mut rest = combo;
            for &k in others.iter().rev() {
                let len = panel.dims()[k].len();
                idx[k] = rest % len;
                rest /= len;
            }
            for (u, &(i1, i2)) in pair_idx.iter().enumerate() {
                idx[panel.method_axis()] = i1;
                let c1 = panel.flatten(&idx);
                let labels = panel
                    .column_labels(c1)
                    .into_iter()
                    .map(String::from)
                    .collect();
                idx[panel.method_axis()] = i2;
                let c2 = panel.flatten(&idx);
                columns.push((c1, c2));
                entries.push(EntryLabel {
                    labels,
                    benchmark: Some(self.pairs[u].1.clone()),
                });
            }
        }

        let firsts: HashSet<&str> = self.pairs.iter().map(|p| p.0.as_str()).collect();
        let mut dual_role: Vec<String> = self
            .pairs
            .iter()
            .map(|p| p.1.as_str())
            .filter(|b| firsts.contains(b))
            .map(String::from)
            .collect();
        dual_role.sort();
        dual_role.dedup();

        Ok(Comparisons {
            columns,
            entries,
            column_names: (0..panel.n_cols()).map(|p| panel.column_name(p)).collect(),
            dual_role_methods: dual_role,
        })
    }
}

/// Labels of one entry of a target vector. For skill scores and relative
/// accuracies the method-axis label is the compared method and `benchmark`
/// names the reference method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryLabel {
    pub labels: Vec<String>,
    pub benchmark: Option<String>,
}

impl fmt::Display for EntryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.labels.join("/"))?;
        if let Some(b) = &self.benchmark {
            write!(f, " vs {b}")?;
        }
        Ok(())
    }
}

/// A selector resolved against a panel layout: `J` (method, benchmark)
/// column pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparisons {
    columns: Vec<(usize, usize)>,
    entries: Vec<EntryLabel>,
    column_names: Vec<String>,
    dual_role_methods: Vec<String>,
}

impl Comparisons {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[(usize, usize)] {
        &self.columns
    }

    pub fn entries(&self) -> &[EntryLabel] {
        &self.entries
    }

    /// Methods used as a benchmark in one pair and as the compared method in
    /// another.
    pub fn dual_role_methods(&self) -> &[String] {
        &self.dual_role_methods
    }

    fn ratios_into(&self, means: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, &(c1, c2)) in out.iter_mut().zip(&self.columns) {
            let bench = means[c2];
            if bench.is_nan() || bench <= 0.0 {
                return Err(Error::DegenerateBenchmark {
                    column: self.column_names[c2].clone(),
                    mean: bench,
                    replicate: None,
                });
            }
            *o = means[c1] / bench;
        }
        Ok(())
    }
}

/// Entrywise `1 - mean(method) / mean(benchmark)`.
pub fn skill_from_means(means: &[f64], comparisons: &Comparisons) -> Result<Vec<f64>> {
    let mut out = relative_accuracy_from_means(means, comparisons)?;
    out.iter_mut().for_each(|r| *r = 1.0 - *r);
    Ok(out)
}

/// Entrywise `mean(method) / mean(benchmark)`.
pub fn relative_accuracy_from_means(means: &[f64], comparisons: &Comparisons) -> Result<Vec<f64>> {
    let mut out = vec![0.0; comparisons.len()];
    comparisons.ratios_into(means, &mut out)?;
    Ok(out)
}

/// Which functional of the expected scores the bands are built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Skill,
    Expected,
    Relative,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Skill => "skill",
            Target::Expected => "expected",
            Target::Relative => "relative",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "skill" | "ss" => Ok(Target::Skill),
            "expected" | "es" | "score" => Ok(Target::Expected),
            "relative" | "ra" => Ok(Target::Relative),
            _ => Err(Error::invalid(format!(
                "unknown target `{s}` (expected skill, expected or relative)"
            ))),
        }
    }
}

/// Maps a vector of `P` mean scores to the `J`-vector of the chosen target.
/// Reused on every bootstrap resample.
#[derive(Debug, Clone)]
pub struct TargetEvaluator {
    target: Target,
    comparisons: Option<Comparisons>,
    entries: Vec<EntryLabel>,
}

impl TargetEvaluator {
    pub fn target(&self) -> Target {
        self.target
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[EntryLabel] {
        &self.entries
    }

    pub fn comparisons(&self) -> Option<&Comparisons> {
        self.comparisons.as_ref()
    }

    pub fn evaluate(&self, means: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.evaluate_into(means, &mut out)?;
        Ok(out)
    }

    /// Writes the target vector for `means` into `out` (length `J`).
    pub fn evaluate_into(&self, means: &[f64], out: &mut [f64]) -> Result<()> {
        match (&self.comparisons, self.target) {
            (None, _) => out.copy_from_slice(means),
            (Some(c), Target::Relative) => c.ratios_into(means, out)?,
            (Some(c), _) => {
                c.ratios_into(means, out)?;
                out.iter_mut().for_each(|r| *r = 1.0 - *r);
            }
        }
        Ok(())
    }
}

/// Point estimate of the target on `panel` together with the evaluator that
/// produced it. For [`Target::Expected`] the selector is ignored and `J = P`.
pub fn select_target(
    panel: &ScorePanel,
    selector: &ComparisonSelector,
    target: Target,
) -> Result<(Vec<f64>, TargetEvaluator)> {
    let evaluator = match target {
        Target::Expected => TargetEvaluator {
            target,
            comparisons: None,
            entries: (0..panel.n_cols())
                .map(|p| EntryLabel {
                    labels: panel
                        .column_labels(p)
                        .into_iter()
                        .map(String::from)
                        .collect(),
                    benchmark: None,
                })
                .collect(),
        },
        Target::Skill | Target::Relative => {
            let comparisons = selector.resolve(panel)?;
            TargetEvaluator {
                target,
                entries: comparisons.entries().to_vec(),
                comparisons: Some(comparisons),
            }
        }
    };
    let estimate = evaluator.evaluate(&average_scores(panel))?;
    Ok((estimate, evaluator))
}
