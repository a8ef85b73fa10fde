//! Peak-year regression datasets and least-squares fits.
//!
//! Each model regresses peak-year innovation (or impact) on exactly one
//! effort-related key variable plus a fixed set of controls. Skewed positive
//! variables are log-transformed, then every column, dependent included, is
//! z-scored before fitting. Fits use Householder QR; standard errors come from
//! the inverse of the triangular factor, never from an explicit inverse of the
//! normal matrix.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::careers::{find_peak, period_metrics, Career, PeriodMetrics};

#[derive(Debug, Error, PartialEq)]
pub enum RegressError {
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("column `{0}` has a non-finite or non-positive value where a log is required")]
    BadLogInput(String),
    #[error("design is rank deficient: `{column}` is a linear combination of {depends_on:?}")]
    RankDeficient {
        column: String,
        depends_on: Vec<String>,
    },
    #[error("need more than {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("column `{0}` length differs from the dependent")]
    Length(String),
    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },
}

pub type Result<T> = std::result::Result<T, RegressError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dependent {
    Innovation,
    Impact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    PeakOnly,
    PeakPlusPrepeak,
}

impl FromStr for Variant {
    type Err = RegressError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "peak-only" => Ok(Variant::PeakOnly),
            "peak-plus-prepeak" => Ok(Variant::PeakPlusPrepeak),
            _ => Err(RegressError::Unknown {
                kind: "variant",
                value: s.into(),
            }),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::PeakOnly => "peak-only",
            Variant::PeakPlusPrepeak => "peak-plus-prepeak",
        })
    }
}

/// How per-paper citation counts of the peak year become the impact variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ImpactAggregate {
    /// Mean of `ln(1 + citations)` over peak-year papers.
    #[default]
    Mean,
    /// `ln(1 + sum of citations)` over peak-year papers.
    Sum,
}

impl FromStr for ImpactAggregate {
    type Err = RegressError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(ImpactAggregate::Mean),
            "sum" => Ok(ImpactAggregate::Sum),
            _ => Err(RegressError::Unknown {
                kind: "impact aggregate",
                value: s.into(),
            }),
        }
    }
}

/// Key variables in model-column order (Model 1 through Model 6).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum KeyVariable {
    RelativeEffort,
    Effort,
    RelativeProductivity,
    Productivity,
    RelativeTimeDevoted,
    TimeDevoted,
}

impl KeyVariable {
    pub const ALL: [KeyVariable; 6] = [
        KeyVariable::RelativeEffort,
        KeyVariable::Effort,
        KeyVariable::RelativeProductivity,
        KeyVariable::Productivity,
        KeyVariable::RelativeTimeDevoted,
        KeyVariable::TimeDevoted,
    ];

    pub fn label(self) -> &'static str {
        match self {
            KeyVariable::RelativeEffort => "Relative effort",
            KeyVariable::Effort => "Effort",
            KeyVariable::RelativeProductivity => "Relative productivity",
            KeyVariable::Productivity => "Productivity",
            KeyVariable::RelativeTimeDevoted => "Relative time devoted",
            KeyVariable::TimeDevoted => "Time devoted",
        }
    }

    fn value(self, m: &PeriodMetrics) -> f64 {
        match self {
            KeyVariable::RelativeEffort => m.relative_effort,
            KeyVariable::Effort => m.effort,
            KeyVariable::RelativeProductivity => m.relative_productivity,
            KeyVariable::Productivity => m.productivity as f64,
            KeyVariable::RelativeTimeDevoted => m.relative_time_devoted,
            KeyVariable::TimeDevoted => m.time_devoted as f64,
        }
    }

    /// Counts take `ln(1 + x)`, ratios take `ln(x)`.
    fn transform(self) -> Transform {
        match self {
            KeyVariable::Productivity | KeyVariable::TimeDevoted => Transform::Log1p,
            _ => Transform::Log,
        }
    }
}

pub const COAUTHORS: &str = "Avg. num. of coauthors";
pub const PREV_INNOVATION: &str = "Avg. prev. innovation";
pub const PEAK_YEAR: &str = "Peak year";
pub const TIME_TO_PEAK: &str = "Time to peak";
pub const INTERCEPT: &str = "Intercept";
const PREPEAK_SUFFIX: &str = " (2 years before peak)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub author_id: String,
    /// Mean defined score of all peak-year papers, the peak paper included.
    pub innovation: f64,
    pub impact: f64,
    pub peak: PeriodMetrics,
    /// Metrics over the two years before the peak year (`peak-plus-prepeak` only).
    pub prepeak: Option<PeriodMetrics>,
    pub time_to_peak: i32,
    pub peak_year: i32,
    pub coauthors_peak: f64,
    /// Mean defined score over the two years before the peak year.
    pub prev_innovation: f64,
    pub coauthors_prepeak: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiagnostics {
    pub careers: usize,
    pub no_peak: usize,
    pub no_prev_innovation: usize,
    pub no_prepeak_metrics: usize,
    pub rows: usize,
}

/// One row per career that has a peak and a defined pre-peak innovation level.
pub fn build_rows(
    careers: &BTreeMap<String, Career>,
    variant: Variant,
    impact: ImpactAggregate,
) -> (Vec<RegressionRow>, RowDiagnostics) {
    let mut diag = RowDiagnostics {
        careers: careers.len(),
        ..Default::default()
    };
    let mut rows = Vec::new();
    for c in careers.values() {
        let Ok(peak) = find_peak(c) else {
            diag.no_peak += 1;
            continue;
        };
        let py = peak.peak_year;
        let Some(prev_innovation) = c.mean_score(py - 2, py - 1) else {
            diag.no_prev_innovation += 1;
            continue;
        };
        let (prepeak, coauthors_prepeak) = match variant {
            Variant::PeakOnly => (None, None),
            Variant::PeakPlusPrepeak => {
                match period_metrics(c, py - 2, py - 1).expect("well-formed period") {
                    Some(m) => (Some(m), c.mean_coauthors(py - 2, py - 1)),
                    None => {
                        diag.no_prepeak_metrics += 1;
                        continue;
                    }
                }
            }
        };
        let peak_metrics = period_metrics(c, py, py)
            .expect("well-formed period")
            .expect("peak year has a publication");
        let cites = c.in_years(py, py).map(|p| p.citations as f64);
        let impact_value = match impact {
            ImpactAggregate::Mean => {
                crate::careers::mean(cites.map(f64::ln_1p)).expect("non-empty peak year")
            }
            ImpactAggregate::Sum => cites.sum::<f64>().ln_1p(),
        };
        rows.push(RegressionRow {
            author_id: c.author_id.clone(),
            innovation: c.mean_score(py, py).expect("peak paper has a score"),
            impact: impact_value,
            peak: peak_metrics,
            prepeak,
            time_to_peak: peak.time_to_peak,
            peak_year: py,
            coauthors_peak: c.mean_coauthors(py, py).expect("non-empty peak year"),
            prev_innovation,
            coauthors_prepeak,
        });
    }
    diag.rows = rows.len();
    (rows, diag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    Log,
    Log1p,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Column {
        Column {
            name: name.into(),
            values,
        }
    }

    fn transformed(mut self, t: Transform) -> Result<Column> {
        match t {
            Transform::Identity => {}
            Transform::Log => {
                if self.values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                    return Err(RegressError::BadLogInput(self.name));
                }
                self.values.iter_mut().for_each(|v| *v = v.ln());
            }
            Transform::Log1p => {
                if self.values.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                    return Err(RegressError::BadLogInput(self.name));
                }
                self.values.iter_mut().for_each(|v| *v = v.ln_1p());
            }
        }
        Ok(self)
    }
}

/// Z-scores every column in place (zero mean, unit sample variance).
pub fn standardize(columns: &mut [Column]) -> Result<()> {
    for col in columns.iter() {
        if col.values.len() < 2 {
            return Err(RegressError::ZeroVariance(col.name.clone()));
        }
    }
    for col in columns.iter_mut() {
        let n = col.values.len() as f64;
        let mean = col.values.iter().sum::<f64>() / n;
        let var = col.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(RegressError::ZeroVariance(col.name.clone()));
        }
        col.values.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    }
    Ok(())
}

/// Transformed but unstandardized dependent and predictor columns.
pub fn design(
    rows: &[RegressionRow],
    dependent: Dependent,
    key: KeyVariable,
    variant: Variant,
) -> Result<(Column, Vec<Column>)> {
    let col = |name: String, f: &dyn Fn(&RegressionRow) -> f64, t: Transform| {
        Column::new(name, rows.iter().map(f).collect()).transformed(t)
    };
    let y = match dependent {
        Dependent::Innovation => col("Innovation".into(), &|r| r.innovation, Transform::Identity)?,
        Dependent::Impact => col("Impact".into(), &|r| r.impact, Transform::Identity)?,
    };
    let mut xs = vec![col(
        key.label().into(),
        &|r| key.value(&r.peak),
        key.transform(),
    )?];
    if variant == Variant::PeakPlusPrepeak {
        xs.push(col(
            format!("{}{PREPEAK_SUFFIX}", key.label()),
            &|r| r.prepeak.as_ref().map_or(f64::NAN, |m| key.value(m)),
            key.transform(),
        )?);
    }
    xs.push(col(
        COAUTHORS.into(),
        &|r| r.coauthors_peak,
        Transform::Identity,
    )?);
    if variant == Variant::PeakPlusPrepeak {
        xs.push(col(
            format!("{COAUTHORS}{PREPEAK_SUFFIX}"),
            &|r| r.coauthors_prepeak.unwrap_or(f64::NAN),
            Transform::Identity,
        )?);
    }
    xs.push(col(
        PREV_INNOVATION.into(),
        &|r| r.prev_innovation,
        Transform::Identity,
    )?);
    xs.push(col(
        PEAK_YEAR.into(),
        &|r| r.peak_year as f64,
        Transform::Identity,
    )?);
    xs.push(col(
        TIME_TO_PEAK.into(),
        &|r| r.time_to_peak as f64,
        Transform::Identity,
    )?);
    for c in std::iter::once(&y).chain(&xs) {
        if c.values.iter().any(|v| !v.is_finite()) {
            return Err(RegressError::BadLogInput(c.name.clone()));
        }
    }
    Ok((y, xs))
}

/// Least-squares fit with an intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// Intercept first, then predictors in input order.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub n: usize,
    pub df_resid: usize,
    pub residuals: Vec<f64>,
}

impl OlsFit {
    pub fn coefficient(&self, name: &str) -> Option<(f64, f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.coefficients[i], self.std_errors[i], self.t_stats[i]))
    }
}

/// Relative pivot size below which a column counts as linearly dependent.
const RANK_TOL: f64 = 1e-10;

/// Ordinary least squares of `y` on an intercept plus `xs` via Householder QR.
pub fn ols(y: &[f64], xs: &[Column]) -> Result<OlsFit> {
    let n = y.len();
    let k = xs.len() + 1;
    if n <= k {
        return Err(RegressError::TooFewRows { needed: k, got: n });
    }
    let mut names = vec![INTERCEPT.to_string()];
    let mut a: Vec<Vec<f64>> = vec![vec![1.0; n]];
    for c in xs {
        if c.values.len() != n {
            return Err(RegressError::Length(c.name.clone()));
        }
        names.push(c.name.clone());
        a.push(c.values.clone());
    }
    let col_norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();
    let mut qty = y.to_vec();
    // r[i][j] = R(i, j), upper triangular
    let mut r = vec![vec![0.0; k]; k];
    for j in 0..k {
        let (col, later) = a[j..].split_first_mut().expect("j < k");
        // entries above the diagonal were fixed by earlier reflections
        for i in 0..j {
            r[i][j] = col[i];
        }
        let sub_norm = norm(&col[j..]);
        if !(sub_norm > RANK_TOL * col_norms[j]) {
            return Err(RegressError::RankDeficient {
                column: names[j].clone(),
                depends_on: dependent_columns(&r, j, &names),
            });
        }
        let alpha = if col[j] > 0.0 { -sub_norm } else { sub_norm };
        let mut v: Vec<f64> = col[j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        r[j][j] = alpha;
        for other in later.iter_mut() {
            reflect(&v, vnorm2, &mut other[j..]);
        }
        reflect(&v, vnorm2, &mut qty[j..]);
    }
    // back substitution: R beta = (Q^T y)[..k]
    let rr = |i: usize, j: usize| r[i][j];
    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| rr(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / rr(i, i);
    }
    // R^{-1}, upper triangular
    let mut rinv = vec![vec![0.0; k]; k];
    for c in 0..k {
        for i in (0..=c).rev() {
            let e = if i == c { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=c).map(|j| rr(i, j) * rinv[j][c]).sum();
            rinv[i][c] = (e - s) / rr(i, i);
        }
    }
    let residuals: Vec<f64> = (0..n)
        .map(|row| {
            let fitted = beta[0]
                + xs.iter()
                    .enumerate()
                    .map(|(j, c)| beta[j + 1] * c.values[row])
                    .sum::<f64>();
            y[row] - fitted
        })
        .collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let df_resid = n - k;
    let sigma2 = ssr / df_resid as f64;
    let std_errors: Vec<f64> = (0..k)
        .map(|i| (sigma2 * rinv[i].iter().map(|x| x * x).sum::<f64>()).sqrt())
        .collect();
    let t_stats: Vec<f64> = beta.iter().zip(&std_errors).map(|(b, s)| b / s).collect();
    let tdist = StudentsT::new(0.0, 1.0, df_resid as f64).expect("positive degrees of freedom");
    let p_values = t_stats
        .iter()
        .map(|t| {
            if t.is_finite() {
                (2.0 * tdist.sf(t.abs())).clamp(0.0, 1.0)
            } else if t.is_nan() {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(OlsFit {
        names,
        coefficients: beta,
        std_errors,
        t_stats,
        p_values,
        r_squared,
        n,
        df_resid,
        residuals,
    })
}

fn norm(x: &[f64]) -> f64 {
    // scaled to avoid overflow on large inputs
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

/// Applies `I - 2 v v^T / (v^T v)` to `x`.
fn reflect(v: &[f64], vnorm2: f64, x: &mut [f64]) {
    if vnorm2 == 0.0 {
        return;
    }
    let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vnorm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= f * vi;
    }
}

/// Earlier columns that column `j` loads on, from `R[..j, ..j] c = R[..j, j]`.
fn dependent_columns(r: &[Vec<f64>], j: usize, names: &[String]) -> Vec<String> {
    let mut c = vec![0.0; j];
    for i in (0..j).rev() {
        let s: f64 = (i + 1..j).map(|l| r[i][l] * c[l]).sum();
        c[i] = (r[i][j] - s) / r[i][i];
    }
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    names[..j]
        .iter()
        .zip(&c)
        .filter(|(_, v)| v.abs() > 1e-8 * scale)
        .map(|(n, _)| n.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub dependent: Dependent,
    pub key: KeyVariable,
    pub variant: Variant,
    #[serde(flatten)]
    pub fit: OlsFit,
}

impl RegressionResult {
    pub fn n(&self) -> usize {
        self.fit.n
    }
}

/// Significance stars at the 0.01 / 0.05 / 0.1 levels.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// Standardized OLS for one dependent / key-variable / variant combination.
pub fn fit_ols(
    rows: &[RegressionRow],
    dependent: Dependent,
    key: KeyVariable,
    variant: Variant,
) -> Result<RegressionResult> {
    let (y, xs) = design(rows, dependent, key, variant)?;
    let mut cols = Vec::with_capacity(xs.len() + 1);
    cols.push(y);
    cols.extend(xs);
    standardize(&mut cols)?;
    let y = cols.remove(0);
    let fit = ols(&y.values, &cols)?;
    Ok(RegressionResult {
        dependent,
        key,
        variant,
        fit,
    })
}

/// All six key-variable models for one dependent and variant.
pub fn fit_models(
    rows: &[RegressionRow],
    dependent: Dependent,
    variant: Variant,
) -> Result<Vec<RegressionResult>> {
    KeyVariable::ALL
        .iter()
        .map(|&k| fit_ols(rows, dependent, k, variant))
        .collect()
}

/// Table with one column per model: `coef*** (se)` cells, then `N` and `R2` rows.
pub fn write_table_csv<W: Write>(models: &[RegressionResult], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["variable".to_string()];
    header.extend((1..=models.len()).map(|i| format!("Model {i}")));
    out.write_record(&header)?;
    // key variables in model order, then the shared controls
    let mut variables: Vec<String> = Vec::new();
    let controls_from = |m: &RegressionResult| match m.variant {
        Variant::PeakOnly => 2,
        Variant::PeakPlusPrepeak => 3,
    };
    for m in models {
        for name in &m.fit.names[1..controls_from(m)] {
            if !variables.contains(name) {
                variables.push(name.clone());
            }
        }
    }
    for m in models {
        for name in &m.fit.names[controls_from(m)..] {
            if !variables.contains(name) {
                variables.push(name.clone());
            }
        }
    }
    for var in &variables {
        let mut row = vec![var.clone()];
        for m in models {
            row.push(match m.fit.names.iter().position(|n| n == var) {
                Some(i) => format!(
                    "{:.3}{} ({:.3})",
                    m.fit.coefficients[i],
                    stars(m.fit.p_values[i]),
                    m.fit.std_errors[i]
                ),
                None => String::new(),
            });
        }
        out.write_record(&row)?;
    }
    let mut n_row = vec!["N".to_string()];
    n_row.extend(models.iter().map(|m| m.fit.n.to_string()));
    out.write_record(&n_row)?;
    let mut r2 = vec!["R2".to_string()];
    r2.extend(models.iter().map(|m| format!("{:.3}", m.fit.r_squared)));
    out.write_record(&r2)?;
    out.flush()?;
    Ok(())
}

/// Coefficient plot data: model, variable, coefficient and three standard errors.
pub fn write_coefficient_plot_csv<W: Write>(models: &[RegressionResult], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "dependent",
        "variant",
        "model",
        "variable",
        "coefficient",
        "error_bar_3se",
    ])?;
    for (i, m) in models.iter().enumerate() {
        for (j, name) in m.fit.names.iter().enumerate().skip(1) {
            out.write_record([
                serde_json::to_value(m.dependent)
                    .unwrap()
                    .as_str()
                    .unwrap_or(""),
                &m.variant.to_string(),
                &format!("Model {}", i % KeyVariable::ALL.len() + 1),
                name,
                &m.fit.coefficients[j].to_string(),
                &(3.0 * m.fit.std_errors[j]).to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::careers::Publication;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn exact_linear_data() {
        let mut g = rng(1);
        let x: Vec<f64> = (0..40).map(|_| g.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let mut cols = vec![Column::new("y", y), Column::new("x", x)];
        standardize(&mut cols).unwrap();
        let fit = ols(&cols[0].values, &cols[1..]).unwrap();
        assert!((fit.coefficients[1] - 1.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-10);
    }

    #[test]
    fn residuals_orthogonal_to_predictors() {
        let mut g = rng(2);
        let xs: Vec<Column> = (0..4)
            .map(|j| {
                Column::new(
                    format!("x{j}"),
                    (0..200)
                        .map(|_| g.sample::<f64, _>(StandardNormal))
                        .collect(),
                )
            })
            .collect();
        let y: Vec<f64> = (0..200)
            .map(|i| 0.5 * xs[0].values[i] - xs[2].values[i] + g.sample::<f64, _>(StandardNormal))
            .collect();
        let fit = ols(&y, &xs).unwrap();
        for c in &xs {
            let dot: f64 = c
                .values
                .iter()
                .zip(&fit.residuals)
                .map(|(a, b)| a * b)
                .sum();
            assert!(dot.abs() < 1e-8, "{dot}");
        }
        assert!(fit.residuals.iter().sum::<f64>().abs() < 1e-8);
        assert!((0.0..=1.0).contains(&fit.r_squared));
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let mut g = rng(3);
        let x: Vec<f64> = (0..30).map(|_| g.random_range(0.0..1.0)).collect();
        let z: Vec<f64> = (0..30).map(|_| g.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..30).map(|_| g.random_range(0.0..1.0)).collect();
        let xs = vec![
            Column::new("x", x.clone()),
            Column::new("z", z),
            Column::new("x again", x),
        ];
        match ols(&y, &xs) {
            Err(RegressError::RankDeficient { column, depends_on }) => {
                assert_eq!(column, "x again");
                assert!(depends_on.contains(&"x".to_string()));
                assert!(!depends_on.contains(&"z".to_string()));
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn standardize_contract() {
        let mut cols = vec![Column::new("c", vec![3.0; 5])];
        assert_eq!(
            standardize(&mut cols),
            Err(RegressError::ZeroVariance("c".into()))
        );

        let mut g = rng(4);
        let v: Vec<f64> = (0..500).map(|_| g.random_range(10.0..1000.0)).collect();
        let mut cols = vec![Column::new("v", v)];
        standardize(&mut cols).unwrap();
        let n = cols[0].values.len() as f64;
        let mean = cols[0].values.iter().sum::<f64>() / n;
        let var = cols[0]
            .values
            .iter()
            .map(|x| (x - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
        let once = cols.clone();
        standardize(&mut cols).unwrap();
        for (a, b) in once[0].values.iter().zip(&cols[0].values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_rows() {
        let xs = vec![Column::new("x", vec![1.0, 2.0])];
        assert!(matches!(
            ols(&[1.0, 2.0], &xs),
            Err(RegressError::TooFewRows { .. })
        ));
    }

    #[test]
    fn predictions_invariant_under_affine_inputs() {
        let mut g = rng(5);
        let x: Vec<f64> = (0..100).map(|_| g.random_range(0.0..10.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| v * 0.3 + g.random_range(-1.0..1.0))
            .collect();
        let a = ols(&y, &[Column::new("x", x.clone())]).unwrap();
        let b = ols(
            &y,
            &[Column::new("x", x.iter().map(|v| 7.0 * v - 40.0).collect())],
        )
        .unwrap();
        for (r1, r2) in a.residuals.iter().zip(&b.residuals) {
            assert!((r1 - r2).abs() < 1e-9);
        }
        assert!((a.r_squared - b.r_squared).abs() < 1e-12);
    }

    fn career(id: &str, items: &[(i32, Option<f64>, u32)]) -> Career {
        let pubs = items
            .iter()
            .enumerate()
            .map(|(i, &(year, score, citations))| Publication {
                paper: i as u32,
                year,
                coauthors: 1,
                score,
                citations,
            })
            .collect();
        Career::new(id, pubs).unwrap()
    }

    #[test]
    fn rows_follow_peak_and_prepeak_rules() {
        let mut careers = BTreeMap::new();
        // peak in first year: no pre-peak innovation, dropped from both variants
        careers.insert(
            "a".into(),
            career(
                "a",
                &[
                    (1990, Some(0.9), 3),
                    (1992, Some(0.1), 1),
                    (1995, Some(0.0), 0),
                ],
            ),
        );
        // single peak-year paper
        careers.insert(
            "b".into(),
            career(
                "b",
                &[
                    (1990, Some(0.1), 0),
                    (1993, Some(0.2), 4),
                    (1994, Some(0.7), 3),
                    (1999, Some(0.3), 0),
                ],
            ),
        );
        let (rows, diag) = build_rows(&careers, Variant::PeakOnly, ImpactAggregate::Mean);
        assert_eq!(rows.len(), 1);
        assert_eq!(diag.no_prev_innovation, 1);
        let r = &rows[0];
        assert_eq!(r.innovation, 0.7);
        assert_eq!(r.prev_innovation, 0.2);
        assert_eq!(r.impact, (4.0f64).ln());
        assert_eq!(r.peak.time_devoted, 1);
        let (rows, _) = build_rows(&careers, Variant::PeakPlusPrepeak, ImpactAggregate::Sum);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].prepeak.unwrap().productivity, 1);
        assert_eq!(rows[0].impact, (4.0f64).ln());
    }

    #[test]
    fn stars_levels() {
        assert_eq!(stars(0.001), "***");
        assert_eq!(stars(0.02), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.5), "");
    }
}
