//! Balanced-panel data model and deterministic transformations.
//!
//! A panel variable is stored as a T×n matrix: rows are time points, columns
//! are individuals. This module provides long-CSV ingestion (pivoting to the
//! wide layout), cell-wise transforms (log, deflation), first differences,
//! the classical within transformations that eliminate additive fixed
//! effects, and recovery of those additive effects from a residual panel.
//!
//! All operations are pure: they take the panel by reference and return a new
//! one. Panels are immutable after construction and safe to share across
//! threads.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::num::{cast, Real};

/// Errors produced by panel construction, ingestion, and transformations.
#[derive(Debug, Error)]
pub enum PanelError {
    /// Panel dimensions below the T ≥ 2, n ≥ 2 minimum.
    #[error("panel must have at least 2 time points and 2 units, got {t}x{n}")]
    TooSmall { t: usize, n: usize },
    /// Duplicate label on the time or unit axis.
    #[error("duplicate {axis} label `{label}`")]
    DuplicateLabel { axis: &'static str, label: String },
    /// Label list length does not match the matrix dimension.
    #[error("{axis} labels ({labels}) do not match matrix dimension ({dim})")]
    LabelMismatch {
        axis: &'static str,
        labels: usize,
        dim: usize,
    },
    /// Operand shapes or labels differ where they must agree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// Logarithm of a non-positive entry.
    #[error("log requires strictly positive entries; found {value} at ({time}, {unit})")]
    DomainError {
        value: f64,
        time: String,
        unit: String,
    },
    /// Division by a zero cell.
    #[error("division by zero at ({time}, {unit})")]
    DivisionByZero { time: String, unit: String },
    /// Too few time points for the requested difference.
    #[error("first difference requires T >= 3, got T = {t}")]
    TooShort { t: usize },
    /// The (id, time) grid has a hole.
    #[error("missing cell for id `{id}` at time `{time}` in column `{column}`")]
    MissingCell {
        id: String,
        time: String,
        column: String,
    },
    /// The same (id, time) pair appears twice.
    #[error("duplicate cell for id `{id}` at time `{time}`")]
    DuplicateCell { id: String, time: String },
    /// A value cell failed to parse as a number.
    #[error("non-numeric value `{value}` for id `{id}` at time `{time}` in column `{column}`")]
    NonNumericValue {
        value: String,
        id: String,
        time: String,
        column: String,
    },
    /// A named column is absent from the CSV header.
    #[error("column `{0}` not found in CSV header")]
    ColumnNotFound(String),
    /// Underlying CSV reader/writer failure.
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    /// Underlying I/O failure.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    /// Regressor naming conflicts inside a `PanelSet`.
    #[error("{0}")]
    InvalidSet(String),
}

/// Additive-effects specification: which classical fixed effects the model
/// removes before (and re-estimates after) the factor step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effects {
    /// No additive effects (an overall intercept may still be present).
    None,
    /// Time-constant individual effects α_i.
    Individual,
    /// Common time-varying effects θ_t.
    Time,
    /// Both α_i and θ_t (forces an overall intercept μ).
    Twoways,
}

impl Effects {
    /// Parse the conventional lowercase names.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Effects::None),
            "individual" => Some(Effects::Individual),
            "time" => Some(Effects::Time),
            "twoways" => Some(Effects::Twoways),
            _ => None,
        }
    }

    /// Conventional lowercase name.
    pub fn name(self) -> &'static str {
        match self {
            Effects::None => "none",
            Effects::Individual => "individual",
            Effects::Time => "time",
            Effects::Twoways => "twoways",
        }
    }

    /// Whether the specification removes individual effects.
    pub fn has_individual(self) -> bool {
        matches!(self, Effects::Individual | Effects::Twoways)
    }

    /// Whether the specification removes time effects.
    pub fn has_time(self) -> bool {
        matches!(self, Effects::Time | Effects::Twoways)
    }
}

/// One panel variable: a T×n value matrix with ordered time and unit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelMatrix<T: Real> {
    values: DMatrix<T>,
    time_labels: Vec<String>,
    unit_labels: Vec<String>,
}

/// Means removed by a within transformation, kept so additive effects and the
/// overall level can be reconstructed after slope estimation.
#[derive(Debug, Clone)]
pub struct TransformMeans<T: Real> {
    /// Overall constant (grand mean when an intercept is present, else 0;
    /// always the grand mean under two-way demeaning).
    pub overall: T,
    /// Per-unit constants (column means where individual effects are removed,
    /// otherwise the overall constant replicated).
    pub individual: Vec<T>,
    /// Per-period constants (row means where time effects are removed,
    /// otherwise the overall constant replicated).
    pub time: Vec<T>,
}

impl<T: Real> PanelMatrix<T> {
    /// Construct a panel from a value matrix and axis labels.
    pub fn new(
        values: DMatrix<T>,
        time_labels: Vec<String>,
        unit_labels: Vec<String>,
    ) -> Result<Self, PanelError> {
        let (t, n) = (values.nrows(), values.ncols());
        if t < 2 || n < 2 {
            return Err(PanelError::TooSmall { t, n });
        }
        if time_labels.len() != t {
            return Err(PanelError::LabelMismatch {
                axis: "time",
                labels: time_labels.len(),
                dim: t,
            });
        }
        if unit_labels.len() != n {
            return Err(PanelError::LabelMismatch {
                axis: "unit",
                labels: unit_labels.len(),
                dim: n,
            });
        }
        check_unique("time", &time_labels)?;
        check_unique("unit", &unit_labels)?;
        Ok(PanelMatrix {
            values,
            time_labels,
            unit_labels,
        })
    }

    /// Construct a panel with positional labels "1", "2", … on both axes.
    pub fn from_values(values: DMatrix<T>) -> Result<Self, PanelError> {
        let time_labels = (1..=values.nrows()).map(|i| i.to_string()).collect();
        let unit_labels = (1..=values.ncols()).map(|i| i.to_string()).collect();
        PanelMatrix::new(values, time_labels, unit_labels)
    }

    /// Number of time points T.
    pub fn n_periods(&self) -> usize {
        self.values.nrows()
    }

    /// Number of cross-section units n.
    pub fn n_units(&self) -> usize {
        self.values.ncols()
    }

    /// The T×n value matrix.
    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    /// Ordered time labels (length T).
    pub fn time_labels(&self) -> &[String] {
        &self.time_labels
    }

    /// Ordered unit labels (length n).
    pub fn unit_labels(&self) -> &[String] {
        &self.unit_labels
    }

    /// Replace the values while keeping the labels; the shape must match.
    pub fn with_values(&self, values: DMatrix<T>) -> Result<Self, PanelError> {
        if values.shape() != self.values.shape() {
            return Err(PanelError::ShapeMismatch(format!(
                "replacement values are {}x{}, panel is {}x{}",
                values.nrows(),
                values.ncols(),
                self.n_periods(),
                self.n_units()
            )));
        }
        Ok(PanelMatrix {
            values,
            time_labels: self.time_labels.clone(),
            unit_labels: self.unit_labels.clone(),
        })
    }

    /// Natural logarithm of every cell. Errors on non-positive entries.
    pub fn ln(&self) -> Result<Self, PanelError> {
        let mut out = self.values.clone();
        for j in 0..out.ncols() {
            for i in 0..out.nrows() {
                let v = out[(i, j)];
                if v <= T::zero() {
                    return Err(PanelError::DomainError {
                        value: v.to_f64().unwrap_or(f64::NAN),
                        time: self.time_labels[i].clone(),
                        unit: self.unit_labels[j].clone(),
                    });
                }
                out[(i, j)] = v.ln();
            }
        }
        self.with_values(out)
    }

    /// Cell-wise division by another panel of identical shape and labels
    /// (e.g. deflation by a price index).
    pub fn divide_by(&self, divisor: &Self) -> Result<Self, PanelError> {
        self.check_aligned(divisor)?;
        let mut out = self.values.clone();
        for j in 0..out.ncols() {
            for i in 0..out.nrows() {
                let d = divisor.values[(i, j)];
                if d == T::zero() {
                    return Err(PanelError::DivisionByZero {
                        time: self.time_labels[i].clone(),
                        unit: self.unit_labels[j].clone(),
                    });
                }
                out[(i, j)] /= d;
            }
        }
        self.with_values(out)
    }

    /// First-order time difference: row t of the result is row t+1 minus
    /// row t of the input. The result is (T−1)×n and drops the first time
    /// label.
    pub fn first_difference(&self) -> Result<Self, PanelError> {
        let t = self.n_periods();
        if t < 3 {
            return Err(PanelError::TooShort { t });
        }
        let n = self.n_units();
        let mut out = DMatrix::<T>::zeros(t - 1, n);
        for j in 0..n {
            for i in 0..t - 1 {
                out[(i, j)] = self.values[(i + 1, j)] - self.values[(i, j)];
            }
        }
        PanelMatrix::new(
            out,
            self.time_labels[1..].to_vec(),
            self.unit_labels.clone(),
        )
    }

    /// Classical within transformation for the given effects specification.
    ///
    /// `none` returns an identity copy; `individual` subtracts column means;
    /// `time` subtracts row means; `twoways` subtracts both and adds the
    /// grand mean back.
    pub fn within_transform(&self, effects: Effects) -> Self {
        self.within_decompose(effects, false).0
    }

    /// Within transformation that also returns the removed means.
    ///
    /// When `center_intercept` is set and the specification leaves a mean
    /// unremoved (`none`, `individual`, `time`), the grand mean is subtracted
    /// as an overall constant, mirroring how an intercept is absorbed before
    /// estimation. The returned [`TransformMeans`] record what was removed.
    pub fn within_decompose(&self, effects: Effects, center_intercept: bool) -> (Self, TransformMeans<T>) {
        let t = self.n_periods();
        let n = self.n_units();
        let grand = self.grand_mean();
        let const_term = if center_intercept { grand } else { T::zero() };
        let mut out = self.values.clone();
        let means = match effects {
            Effects::None => {
                if center_intercept {
                    out.iter_mut().for_each(|v| *v -= grand);
                }
                TransformMeans {
                    overall: const_term,
                    individual: vec![const_term; n],
                    time: vec![const_term; t],
                }
            }
            Effects::Individual => {
                let col_means = self.column_means();
                for j in 0..n {
                    for i in 0..t {
                        out[(i, j)] -= col_means[j];
                    }
                }
                TransformMeans {
                    overall: const_term,
                    individual: col_means,
                    time: vec![const_term; t],
                }
            }
            Effects::Time => {
                let row_means = self.row_means();
                for j in 0..n {
                    for i in 0..t {
                        out[(i, j)] -= row_means[i];
                    }
                }
                TransformMeans {
                    overall: const_term,
                    individual: vec![const_term; n],
                    time: row_means,
                }
            }
            Effects::Twoways => {
                let col_means = self.column_means();
                let row_means = self.row_means();
                for j in 0..n {
                    for i in 0..t {
                        out[(i, j)] = out[(i, j)] - col_means[j] - row_means[i] + grand;
                    }
                }
                TransformMeans {
                    overall: grand,
                    individual: col_means,
                    time: row_means,
                }
            }
        };
        (
            PanelMatrix {
                values: out,
                time_labels: self.time_labels.clone(),
                unit_labels: self.unit_labels.clone(),
            },
            means,
        )
    }

    /// Standardize each row to zero mean and unit variance across units
    /// (sample variance, denominator n−1). Used by the dimension criteria
    /// when they are asked to work on the correlation scale.
    pub fn standardize_rows(&self) -> Self {
        let t = self.n_periods();
        let n = self.n_units();
        let mut out = self.values.clone();
        for i in 0..t {
            let mean = compensated_mean((0..n).map(|j| self.values[(i, j)]));
            let var = compensated_sum((0..n).map(|j| {
                let d = self.values[(i, j)] - mean;
                d * d
            })) / cast::<T>((n - 1) as f64);
            let sd = var.sqrt();
            for j in 0..n {
                out[(i, j)] = (self.values[(i, j)] - mean) / sd;
            }
        }
        PanelMatrix {
            values: out,
            time_labels: self.time_labels.clone(),
            unit_labels: self.unit_labels.clone(),
        }
    }

    /// Grand mean over all cells.
    pub fn grand_mean(&self) -> T {
        compensated_mean(self.values.iter().copied())
    }

    /// Column (per-unit) means, length n.
    pub fn column_means(&self) -> Vec<T> {
        (0..self.n_units())
            .map(|j| compensated_mean(self.values.column(j).iter().copied()))
            .collect()
    }

    /// Row (per-period) means, length T.
    pub fn row_means(&self) -> Vec<T> {
        (0..self.n_periods())
            .map(|i| compensated_mean(self.values.row(i).iter().copied()))
            .collect()
    }

    /// Write the panel as a wide CSV: first column holds the time labels,
    /// the remaining columns one unit each.
    pub fn write_wide_csv(&self, path: &Path) -> Result<(), PanelError> {
        let mut out = String::new();
        out.push_str("time");
        for u in &self.unit_labels {
            out.push(',');
            out.push_str(u);
        }
        out.push('\n');
        for i in 0..self.n_periods() {
            out.push_str(&self.time_labels[i]);
            for j in 0..self.n_units() {
                let v = self.values[(i, j)].to_f64().unwrap_or(f64::NAN);
                let _ = write!(out, ",{}", format_value(v));
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Read a panel from a wide CSV produced by [`PanelMatrix::write_wide_csv`].
    pub fn read_wide_csv(path: &Path) -> Result<Self, PanelError> {
        let mut reader = csv::ReaderBuilder::new().from_path(path)?;
        let headers = reader.headers()?.clone();
        if headers.len() < 3 {
            return Err(PanelError::ShapeMismatch(
                "wide CSV needs a time column plus at least 2 unit columns".into(),
            ));
        }
        let unit_labels: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
        let mut time_labels = Vec::new();
        let mut rows: Vec<Vec<T>> = Vec::new();
        for record in reader.records() {
            let record = record?;
            let time = record.get(0).unwrap_or("").to_owned();
            let mut row = Vec::with_capacity(unit_labels.len());
            for (j, cell) in record.iter().skip(1).enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| PanelError::NonNumericValue {
                    value: cell.to_owned(),
                    id: unit_labels[j].clone(),
                    time: time.clone(),
                    column: "value".into(),
                })?;
                row.push(cast::<T>(v));
            }
            time_labels.push(time);
            rows.push(row);
        }
        let t = rows.len();
        let n = unit_labels.len();
        let values = DMatrix::from_fn(t, n, |i, j| rows[i][j]);
        PanelMatrix::new(values, time_labels, unit_labels)
    }

    fn check_aligned(&self, other: &Self) -> Result<(), PanelError> {
        if self.values.shape() != other.values.shape()
            || self.time_labels != other.time_labels
            || self.unit_labels != other.unit_labels
        {
            return Err(PanelError::ShapeMismatch(format!(
                "panels are not aligned: {}x{} vs {}x{}",
                self.n_periods(),
                self.n_units(),
                other.n_periods(),
                other.n_units()
            )));
        }
        Ok(())
    }
}

/// The variables of one model: a response and named regressors with shared
/// shape and labels.
#[derive(Debug, Clone)]
pub struct PanelSet<T: Real> {
    /// Response variable Y.
    pub response: PanelMatrix<T>,
    /// Named regressors X_1, …, X_P in model order.
    pub regressors: Vec<(String, PanelMatrix<T>)>,
    /// Whether the model carries an overall intercept μ.
    pub has_intercept: bool,
}

impl<T: Real> PanelSet<T> {
    /// Construct a model variable set, validating alignment and names.
    pub fn new(
        response: PanelMatrix<T>,
        regressors: Vec<(String, PanelMatrix<T>)>,
        has_intercept: bool,
    ) -> Result<Self, PanelError> {
        let mut seen = std::collections::BTreeSet::new();
        for (name, x) in &regressors {
            if name == "intercept" {
                return Err(PanelError::InvalidSet(
                    "`intercept` is a reserved regressor name".into(),
                ));
            }
            if !seen.insert(name.clone()) {
                return Err(PanelError::InvalidSet(format!(
                    "duplicate regressor name `{name}`"
                )));
            }
            response.check_aligned(x)?;
        }
        Ok(PanelSet {
            response,
            regressors,
            has_intercept,
        })
    }

    /// Number of time points T.
    pub fn n_periods(&self) -> usize {
        self.response.n_periods()
    }

    /// Number of units n.
    pub fn n_units(&self) -> usize {
        self.response.n_units()
    }

    /// Number of regressors P (excluding the intercept).
    pub fn n_regressors(&self) -> usize {
        self.regressors.len()
    }
}

/// Load one or more variables from a long CSV into wide panels.
///
/// The file must contain `id_col`, `time_col`, and each of `value_cols`. The
/// (id, time) pairs must form a complete grid; every value column becomes a
/// T×n [`PanelMatrix`] with rows sorted ascending by time and columns
/// ascending by id. Labels sort numerically when every label parses as a
/// number, lexicographically otherwise, so the pivot does not depend on file
/// order.
pub fn load_long_csv<T: Real>(
    path: &Path,
    id_col: &str,
    time_col: &str,
    value_cols: &[&str],
) -> Result<BTreeMap<String, PanelMatrix<T>>, PanelError> {
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize, PanelError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PanelError::ColumnNotFound(name.to_owned()))
    };
    let id_idx = find(id_col)?;
    let time_idx = find(time_col)?;
    let value_idx: Vec<usize> = value_cols
        .iter()
        .map(|c| find(c))
        .collect::<Result<_, _>>()?;

    // First pass: collect rows keyed by (id, time) and the label sets.
    let mut cells: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let id = record.get(id_idx).unwrap_or("").trim().to_owned();
        let time = record.get(time_idx).unwrap_or("").trim().to_owned();
        let key = (id.clone(), time.clone());
        if cells.contains_key(&key) {
            return Err(PanelError::DuplicateCell { id, time });
        }
        let mut row = Vec::with_capacity(value_idx.len());
        for (&idx, &col) in value_idx.iter().zip(value_cols) {
            let cell = record.get(idx).unwrap_or("");
            let v: f64 = cell.trim().parse().map_err(|_| PanelError::NonNumericValue {
                value: cell.to_owned(),
                id: id.clone(),
                time: time.clone(),
                column: col.to_string(),
            })?;
            row.push(v);
        }
        cells.insert(key, row);
    }

    let mut ids: Vec<String> = cells.keys().map(|(id, _)| id.clone()).collect();
    let mut times: Vec<String> = cells.keys().map(|(_, t)| t.clone()).collect();
    ids.sort();
    ids.dedup();
    times.sort();
    times.dedup();
    sort_labels(&mut ids);
    sort_labels(&mut times);

    // Completeness check: every (id, time) pair must be present.
    for id in &ids {
        for time in &times {
            if !cells.contains_key(&(id.clone(), time.clone())) {
                return Err(PanelError::MissingCell {
                    id: id.clone(),
                    time: time.clone(),
                    column: value_cols.first().copied().unwrap_or("").to_owned(),
                });
            }
        }
    }

    let t = times.len();
    let n = ids.len();
    let mut result = BTreeMap::new();
    for (k, &col) in value_cols.iter().enumerate() {
        let values = DMatrix::from_fn(t, n, |i, j| {
            cast::<T>(cells[&(ids[j].clone(), times[i].clone())][k])
        });
        result.insert(
            col.to_owned(),
            PanelMatrix::new(values, times.clone(), ids.clone())?,
        );
    }
    Ok(result)
}

/// Write variables back to a long CSV (inverse of [`load_long_csv`] on the
/// grid): one row per (id, time) pair, ids outer, times inner.
pub fn write_long_csv<T: Real>(
    path: &Path,
    id_col: &str,
    time_col: &str,
    vars: &[(&str, &PanelMatrix<T>)],
) -> Result<(), PanelError> {
    let (first_name, first) = match vars.first() {
        Some(v) => *v,
        None => {
            return Err(PanelError::InvalidSet(
                "write_long_csv needs at least one variable".into(),
            ))
        }
    };
    for (name, p) in vars.iter().skip(1) {
        first.check_aligned(p).map_err(|_| {
            PanelError::ShapeMismatch(format!(
                "variable `{name}` is not aligned with `{first_name}`"
            ))
        })?;
    }
    let mut out = String::new();
    out.push_str(id_col);
    out.push(',');
    out.push_str(time_col);
    for (name, _) in vars {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for j in 0..first.n_units() {
        for i in 0..first.n_periods() {
            out.push_str(&first.unit_labels()[j]);
            out.push(',');
            out.push_str(&first.time_labels()[i]);
            for (_, p) in vars {
                let v = p.values()[(i, j)].to_f64().unwrap_or(f64::NAN);
                let _ = write!(out, ",{}", format_value(v));
            }
            out.push('\n');
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Recover additive effects from a residual panel Y − Xβ̂.
///
/// Returns `(μ, α, θ)`: the overall level (grand mean when an intercept is
/// present or under `twoways`, else 0), per-unit effects, and per-period
/// effects. Effects the specification does not include are returned as
/// zeros; included effects are centered so they sum to zero.
pub fn recover_additive_effects<T: Real>(
    residual_panel: &PanelMatrix<T>,
    effects: Effects,
    has_intercept: bool,
) -> (T, Vec<T>, Vec<T>) {
    let t = residual_panel.n_periods();
    let n = residual_panel.n_units();
    let grand = residual_panel.grand_mean();
    let with_intercept = has_intercept || effects == Effects::Twoways;
    let mu = if with_intercept { grand } else { T::zero() };
    let alpha = if effects.has_individual() {
        residual_panel
            .column_means()
            .into_iter()
            .map(|m| m - grand)
            .collect()
    } else {
        vec![T::zero(); n]
    };
    let theta = if effects.has_time() {
        residual_panel
            .row_means()
            .into_iter()
            .map(|m| m - grand)
            .collect()
    } else {
        vec![T::zero(); t]
    };
    (mu, alpha, theta)
}

/// Sum with Neumaier compensation: deterministic and robust to cancellation,
/// so means reproduce bit-for-bit across runs and platforms.
pub(crate) fn compensated_sum<T: Real, I: Iterator<Item = T>>(iter: I) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in iter {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) fn compensated_mean<T: Real, I: ExactSizeIterator<Item = T>>(iter: I) -> T {
    let len = iter.len();
    compensated_sum(iter) / cast::<T>(len as f64)
}

/// Format a value for CSV output with full round-trip precision.
fn format_value(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:.17e}")
    }
}

fn check_unique(axis: &'static str, labels: &[String]) -> Result<(), PanelError> {
    let mut seen = std::collections::BTreeSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(PanelError::DuplicateLabel {
                axis,
                label: l.clone(),
            });
        }
    }
    Ok(())
}

/// Sort labels numerically when all of them parse as numbers, otherwise
/// lexicographically (ties broken by the string form either way).
fn sort_labels(labels: &mut [String]) {
    let all_numeric = labels.iter().all(|l| l.parse::<f64>().is_ok());
    if all_numeric {
        labels.sort_by(|a, b| {
            let fa: f64 = a.parse().unwrap();
            let fb: f64 = b.parse().unwrap();
            fa.partial_cmp(&fb)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.cmp(b))
        });
    } else {
        labels.sort();
    }
}
