//! Dataset ingestion, standardization and discretization.
//!
//! A [`DataTable`] stores features column-major together with integer class
//! codes. Every estimator in the crate reads either the raw columns (ICA,
//! correlations, classifiers) or a [`DiscretizedView`] built from them
//! (plug-in entropies).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Integer-valued numeric columns with at most this many distinct values are
/// treated as categorical.
pub const MAX_CATEGORICAL_LEVELS: usize = 32;

const MISSING_TOKENS: &[&str] = &["", "na", "nan", "null", "?"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataTable {
    columns: Vec<Vec<f64>>,
    feature_names: Vec<String>,
    feature_kinds: Vec<FeatureKind>,
    /// String levels for categorical columns read from text; `None` when the
    /// stored values are themselves the category codes.
    levels: Vec<Option<Vec<String>>>,
    labels: Vec<u32>,
    label_names: Vec<String>,
    label_column: String,
}

impl DataTable {
    /// Builds a table, checking that every column has one finite value per
    /// label and that every class code in `0..label_names.len()` occurs.
    pub fn new(
        columns: Vec<Vec<f64>>,
        feature_names: Vec<String>,
        feature_kinds: Vec<FeatureKind>,
        labels: Vec<u32>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let m = columns.len();
        let levels = vec![None; m];
        Self::with_levels(
            columns,
            feature_names,
            feature_kinds,
            levels,
            labels,
            label_names,
            "label".to_string(),
        )
    }

    fn with_levels(
        columns: Vec<Vec<f64>>,
        feature_names: Vec<String>,
        feature_kinds: Vec<FeatureKind>,
        levels: Vec<Option<Vec<String>>>,
        labels: Vec<u32>,
        label_names: Vec<String>,
        label_column: String,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::NoUsableRows);
        }
        if feature_names.len() != columns.len() {
            return Err(Error::LengthMismatch {
                expected: columns.len(),
                found: feature_names.len(),
            });
        }
        if feature_kinds.len() != columns.len() {
            return Err(Error::LengthMismatch {
                expected: columns.len(),
                found: feature_kinds.len(),
            });
        }
        for col in &columns {
            if col.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: col.len(),
                });
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite feature value".into()));
            }
        }
        let l = label_names.len();
        if l < 2 {
            return Err(Error::TooFewClasses(l));
        }
        let mut seen = vec![false; l];
        for &y in &labels {
            let y = y as usize;
            if y >= l {
                return Err(Error::InvalidArgument(format!(
                    "label code {y} outside 0..{l}"
                )));
            }
            seen[y] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "class {:?} never occurs",
                label_names[missing]
            )));
        }
        Ok(DataTable {
            columns,
            feature_names,
            feature_kinds,
            levels,
            labels,
            label_names,
            label_column,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn label_column(&self) -> &str {
        &self.label_column
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_kinds(&self) -> &[FeatureKind] {
        &self.feature_kinds
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn with_label_column(mut self, name: impl Into<String>) -> Self {
        self.label_column = name.into();
        self
    }

    /// Writes the table as delimited text with a header row. Floats use the
    /// shortest representation that parses back to the same value.
    pub fn write_csv<W: Write>(&self, writer: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(&self.label_column);
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(self.n_features() + 1);
        for i in 0..self.n_samples() {
            row.clear();
            for (j, col) in self.columns.iter().enumerate() {
                let v = col[i];
                match &self.levels[j] {
                    Some(levels) => row.push(levels[v as usize].clone()),
                    None => row.push(format!("{v}")),
                }
            }
            row.push(self.label_names[self.labels[i] as usize].clone());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<writer>".into(),
            source: e,
        })?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path, delimiter: u8) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.write_csv(std::io::BufWriter::new(file), delimiter)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Drop every row with a missing cell.
    #[default]
    Drop,
    /// Fill continuous cells with the column median and categorical cells
    /// with the column mode. Rows with a missing label are still dropped.
    Impute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub label_column: LabelColumn,
    pub delimiter: u8,
    pub has_header: bool,
    pub missing_policy: MissingPolicy,
    /// Per-column kind overrides, keyed by column name.
    pub kind_overrides: BTreeMap<String, FeatureKind>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            label_column: LabelColumn::Name("label".into()),
            delimiter: b',',
            has_header: true,
            missing_policy: MissingPolicy::Drop,
            kind_overrides: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub cells_imputed: usize,
    pub label_column: String,
    pub n_classes: usize,
    pub kinds: Vec<(String, FeatureKind)>,
}

enum RawColumn {
    Numeric(Vec<Option<f64>>),
    Text(Vec<Option<String>>),
}

fn is_missing(cell: &str) -> bool {
    let lower = cell.to_ascii_lowercase();
    MISSING_TOKENS.contains(&lower.as_str())
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok()
}

/// Reads a delimited file into a [`DataTable`].
pub fn load_csv(path: &Path, options: &LoadOptions) -> Result<(DataTable, LoadReport)> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    read_csv(std::io::BufReader::new(file), options)
}

pub fn read_csv<R: Read>(reader: R, options: &LoadOptions) -> Result<(DataTable, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records: Vec<Vec<String>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        records.push(rec.iter().map(str::to_string).collect());
    }
    let n_cols = if options.has_header {
        rdr.headers()?.len()
    } else {
        records.first().map_or(0, Vec::len)
    };
    let names: Vec<String> = if options.has_header {
        rdr.headers()?.iter().map(str::to_string).collect()
    } else {
        (0..n_cols).map(|j| format!("c{j}")).collect()
    };

    let label_idx = match &options.label_column {
        LabelColumn::Name(name) => names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::LabelColumnMissing(name.clone()))?,
        LabelColumn::Index(i) if *i < n_cols => *i,
        LabelColumn::Index(i) => return Err(Error::LabelColumnMissing(i.to_string())),
    };
    let rows_read = records.len();

    // Per-column typing over non-missing cells.
    let feature_idx: Vec<usize> = (0..n_cols).filter(|&j| j != label_idx).collect();
    let mut raw: Vec<RawColumn> = Vec::with_capacity(feature_idx.len());
    for &j in &feature_idx {
        let cells: Vec<&str> = records.iter().map(|r| r[j].as_str()).collect();
        let numeric = cells
            .iter()
            .filter(|c| !is_missing(c))
            .all(|c| parse_number(c).is_some());
        if numeric {
            raw.push(RawColumn::Numeric(
                cells
                    .iter()
                    .map(|c| {
                        if is_missing(c) {
                            None
                        } else {
                            parse_number(c).filter(|v| v.is_finite())
                        }
                    })
                    .collect(),
            ));
        } else {
            let distinct: BTreeSet<&str> =
                cells.iter().copied().filter(|c| !is_missing(c)).collect();
            if distinct.len() > MAX_CATEGORICAL_LEVELS {
                return Err(Error::UnparseableColumn {
                    column: names[j].clone(),
                    distinct: distinct.len(),
                });
            }
            raw.push(RawColumn::Text(
                cells
                    .iter()
                    .map(|c| (!is_missing(c)).then(|| c.to_string()))
                    .collect(),
            ));
        }
    }
    let label_cells: Vec<Option<&str>> = records
        .iter()
        .map(|r| {
            let c = r[label_idx].as_str();
            (!is_missing(c)).then_some(c)
        })
        .collect();

    let feature_missing = |i: usize| {
        raw.iter().any(|col| match col {
            RawColumn::Numeric(v) => v[i].is_none(),
            RawColumn::Text(v) => v[i].is_none(),
        })
    };
    let keep: Vec<usize> = (0..rows_read)
        .filter(|&i| {
            label_cells[i].is_some()
                && (options.missing_policy == MissingPolicy::Impute || !feature_missing(i))
        })
        .collect();
    if keep.is_empty() {
        return Err(Error::NoUsableRows);
    }

    let mut columns = Vec::with_capacity(raw.len());
    let mut kinds = Vec::with_capacity(raw.len());
    let mut levels = Vec::with_capacity(raw.len());
    let mut cells_imputed = 0;
    for (k, col) in raw.into_iter().enumerate() {
        let name = &names[feature_idx[k]];
        match col {
            RawColumn::Numeric(values) => {
                let present: Vec<f64> = keep.iter().filter_map(|&i| values[i]).collect();
                let inferred = infer_numeric_kind(&present);
                let kind = options.kind_overrides.get(name).copied().unwrap_or(inferred);
                let fill = match kind {
                    FeatureKind::Continuous => stats::median(&present),
                    FeatureKind::Categorical => numeric_mode(&present),
                };
                let col: Vec<f64> = keep
                    .iter()
                    .map(|&i| {
                        values[i].unwrap_or_else(|| {
                            cells_imputed += 1;
                            fill
                        })
                    })
                    .collect();
                columns.push(col);
                kinds.push(kind);
                levels.push(None);
            }
            RawColumn::Text(values) => {
                let lv: Vec<String> = keep
                    .iter()
                    .filter_map(|&i| values[i].clone())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let index: HashMap<&str, usize> =
                    lv.iter().enumerate().map(|(c, s)| (s.as_str(), c)).collect();
                let codes: Vec<Option<f64>> = keep
                    .iter()
                    .map(|&i| values[i].as_deref().map(|s| index[s] as f64))
                    .collect();
                let present: Vec<f64> = codes.iter().flatten().copied().collect();
                let fill = numeric_mode(&present);
                let col = codes
                    .into_iter()
                    .map(|c| {
                        c.unwrap_or_else(|| {
                            cells_imputed += 1;
                            fill
                        })
                    })
                    .collect();
                columns.push(col);
                kinds.push(FeatureKind::Categorical);
                levels.push(Some(lv));
            }
        }
    }

    let label_strings: Vec<&str> = keep.iter().map(|&i| label_cells[i].unwrap()).collect();
    let label_names = sorted_levels(&label_strings);
    let label_index: HashMap<&str, u32> = label_names
        .iter()
        .enumerate()
        .map(|(c, s)| (s.as_str(), c as u32))
        .collect();
    let labels: Vec<u32> = label_strings.iter().map(|s| label_index[s]).collect();
    if label_names.len() < 2 {
        return Err(Error::TooFewClasses(label_names.len()));
    }

    let feature_names: Vec<String> = feature_idx.iter().map(|&j| names[j].clone()).collect();
    let report = LoadReport {
        rows_read,
        rows_dropped: rows_read - keep.len(),
        cells_imputed,
        label_column: names[label_idx].clone(),
        n_classes: label_names.len(),
        kinds: feature_names.iter().cloned().zip(kinds.iter().copied()).collect(),
    };
    let table = DataTable::with_levels(
        columns,
        feature_names,
        kinds,
        levels,
        labels,
        label_names,
        names[label_idx].clone(),
    )?;
    Ok((table, report))
}

fn infer_numeric_kind(values: &[f64]) -> FeatureKind {
    if values.iter().any(|v| v.fract() != 0.0) {
        return FeatureKind::Continuous;
    }
    let distinct: BTreeSet<i64> = values.iter().map(|&v| v as i64).collect();
    if distinct.len() <= MAX_CATEGORICAL_LEVELS {
        FeatureKind::Categorical
    } else {
        FeatureKind::Continuous
    }
}

fn numeric_mode(values: &[f64]) -> f64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v.to_bits() as i64).or_default() += 1;
    }
    let mut best: Option<(usize, f64)> = None;
    for (bits, c) in counts {
        let v = f64::from_bits(bits as u64);
        match best {
            Some((bc, bv)) if bc > c || (bc == c && bv <= v) => {}
            _ => best = Some((c, v)),
        }
    }
    best.map_or(0.0, |(_, v)| v)
}

/// Distinct values, ordered numerically when every value parses as a number
/// and lexicographically otherwise.
fn sorted_levels(values: &[&str]) -> Vec<String> {
    let distinct: BTreeSet<&str> = values.iter().copied().collect();
    let mut out: Vec<&str> = distinct.into_iter().collect();
    if out.iter().all(|s| parse_number(s).is_some()) {
        out.sort_by(|a, b| parse_number(a).unwrap().total_cmp(&parse_number(b).unwrap()));
    }
    out.into_iter().map(str::to_string).collect()
}

/// Z-scores every continuous column (population variance). Categorical
/// columns and labels are left untouched.
pub fn standardize(table: &DataTable) -> Result<DataTable> {
    let mut out = table.clone();
    for (j, col) in out.columns.iter_mut().enumerate() {
        if table.feature_kinds[j] != FeatureKind::Continuous {
            continue;
        }
        let m = stats::mean(col);
        let var = stats::variance(col);
        if var <= 0.0 {
            return Err(Error::ZeroVariance {
                column: table.feature_names[j].clone(),
            });
        }
        let sd = var.sqrt();
        col.iter_mut().for_each(|v| *v = (*v - m) / sd);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinScheme {
    #[default]
    EqualFrequency,
    EqualWidth,
}

/// Integer-coded columns for plug-in estimation.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedView {
    codes: Vec<Vec<u32>>,
    cardinalities: Vec<u32>,
    bin_edges: Vec<Option<Vec<f64>>>,
    bins: usize,
    scheme: BinScheme,
    labels: Vec<u32>,
    n_classes: usize,
}

impl DiscretizedView {
    /// Builds a view directly from integer codes (used for hand-made
    /// discrete examples). Every column is treated as categorical.
    pub fn from_codes(codes: Vec<Vec<u32>>, labels: Vec<u32>) -> Result<Self> {
        let n = labels.len();
        if let Some(bad) = codes.iter().find(|c| c.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let cardinalities = codes
            .iter()
            .map(|c| c.iter().copied().max().map_or(0, |m| m + 1))
            .collect();
        let n_classes = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
        let m = codes.len();
        Ok(DiscretizedView {
            codes,
            cardinalities,
            bin_edges: vec![None; m],
            bins: 0,
            scheme: BinScheme::EqualFrequency,
            labels,
            n_classes,
        })
    }

    pub fn n_features(&self) -> usize {
        self.codes.len()
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.codes[j]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn cardinality(&self, j: usize) -> u32 {
        self.cardinalities[j]
    }

    pub fn bin_edges(&self, j: usize) -> Option<&[f64]> {
        self.bin_edges[j].as_deref()
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn scheme(&self) -> BinScheme {
        self.scheme
    }
}

/// Discretizes continuous columns into at most `bins` bins; categorical
/// columns are code-mapped in ascending value order.
pub fn discretize(table: &DataTable, bins: usize, scheme: BinScheme) -> Result<DiscretizedView> {
    if bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    let mut codes = Vec::with_capacity(table.n_features());
    let mut edges = Vec::with_capacity(table.n_features());
    for (col, kind) in table.columns.iter().zip(&table.feature_kinds) {
        match kind {
            FeatureKind::Categorical => {
                codes.push(category_codes(col));
                edges.push(None);
            }
            FeatureKind::Continuous => {
                let e = match scheme {
                    BinScheme::EqualFrequency => equal_frequency_edges(col, bins),
                    BinScheme::EqualWidth => equal_width_edges(col, bins),
                };
                let c = match scheme {
                    BinScheme::EqualFrequency => col
                        .iter()
                        .map(|v| e.partition_point(|edge| edge < v) as u32)
                        .collect(),
                    BinScheme::EqualWidth => col
                        .iter()
                        .map(|v| e.partition_point(|edge| edge <= v) as u32)
                        .collect(),
                };
                codes.push(c);
                edges.push(Some(e));
            }
        }
    }
    let cardinalities = codes
        .iter()
        .map(|c: &Vec<u32>| c.iter().copied().max().map_or(0, |m| m + 1))
        .collect();
    Ok(DiscretizedView {
        codes,
        cardinalities,
        bin_edges: edges,
        bins,
        scheme,
        labels: table.labels.clone(),
        n_classes: table.n_classes(),
    })
}

fn category_codes(col: &[f64]) -> Vec<u32> {
    let mut distinct: Vec<f64> = col.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    col.iter()
        .map(|v| distinct.partition_point(|d| d < v) as u32)
        .collect()
}

/// Cut points at the `k·n/bins` order statistics (midpoint between the two
/// neighbouring sorted values). Tied neighbours put the cut on the tied
/// value, so all copies land in the lower bin. Duplicate cuts are removed.
pub fn equal_frequency_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = Vec::with_capacity(bins.saturating_sub(1));
    for k in 1..bins {
        let pos = k * n / bins;
        if pos == 0 || pos >= n {
            continue;
        }
        let lo = sorted[pos - 1];
        let hi = sorted[pos];
        let edge = if lo < hi { lo + (hi - lo) / 2.0 } else { lo };
        if edges.last().is_none_or(|&last| edge > last) && edge < sorted[n - 1] {
            edges.push(edge);
        }
    }
    edges
}

fn equal_width_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN bounds too
    if !(hi > lo) {
        return Vec::new();
    }
    let width = (hi - lo) / bins as f64;
    (1..bins).map(|k| lo + width * k as f64).collect()
}

/// Equal-frequency codes for a raw slice.
pub fn equal_frequency_codes(values: &[f64], bins: usize) -> Vec<u32> {
    let edges = equal_frequency_edges(values, bins);
    values
        .iter()
        .map(|v| edges.partition_point(|e| e < v) as u32)
        .collect()
}

/// Everything the selection engine reads, computed once per dataset:
/// the plug-in view and z-scored copies of every feature and of the class
/// code for the ICA models.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub view: DiscretizedView,
    /// Z-scored features; constant columns become all zeros.
    pub signals: Vec<Arc<[f64]>>,
    /// Z-scored numeric class code.
    pub label_signal: Arc<[f64]>,
    pub feature_names: Vec<String>,
}

impl PreparedData {
    pub fn new(table: &DataTable, bins: usize, scheme: BinScheme) -> Result<Self> {
        let view = discretize(table, bins, scheme)?;
        Ok(Self::with_view(table, view))
    }

    pub fn with_view(table: &DataTable, view: DiscretizedView) -> Self {
        let signals = table
            .columns
            .iter()
            .map(|c| Arc::from(stats::zscore(c)))
            .collect();
        let y: Vec<f64> = table.labels.iter().map(|&c| c as f64).collect();
        PreparedData {
            view,
            signals,
            label_signal: Arc::from(stats::zscore(&y)),
            feature_names: table.feature_names.clone(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.signals.len()
    }

    pub fn n_samples(&self) -> usize {
        self.label_signal.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, options: &LoadOptions) -> Result<(DataTable, LoadReport)> {
        read_csv(text.as_bytes(), options)
    }

    fn opts(label: &str) -> LoadOptions {
        LoadOptions {
            label_column: LabelColumn::Name(label.into()),
            ..LoadOptions::default()
        }
    }

    #[test]
    fn parses_small_file() {
        let (t, report) = read("a,b,y\n1.5,2,x\n2.5,3,y\n3.5,2,x\n0.5,3,z\n", &opts("y")).unwrap();
        assert_eq!(t.n_samples(), 4);
        assert_eq!(t.n_features(), 2);
        assert_eq!(t.n_classes(), 3);
        assert_eq!(t.labels(), &[0, 1, 0, 2]);
        assert_eq!(t.feature_kinds(), &[FeatureKind::Continuous, FeatureKind::Categorical]);
        assert_eq!(report.rows_dropped, 0);
    }

    #[test]
    fn drops_rows_with_missing_cells() {
        let text = "a,b,y\n1.5,2,0\n,3,1\n3.5,2,0\n0.5,3,1\n";
        let (t, report) = read(text, &opts("y")).unwrap();
        assert_eq!(t.n_samples(), 3);
        assert_eq!(report.rows_dropped, 1);
        assert_eq!(report.rows_read, 4);
    }

    #[test]
    fn imputes_median_and_mode() {
        let text = "a,b,y\n1.5,2,0\n,3,1\n3.5,NA,0\n0.5,3,1\n";
        let o = LoadOptions {
            missing_policy: MissingPolicy::Impute,
            ..opts("y")
        };
        let (t, report) = read(text, &o).unwrap();
        assert_eq!(t.n_samples(), 4);
        assert_eq!(report.cells_imputed, 2);
        assert_eq!(t.column(0)[1], 1.5);
        assert_eq!(t.column(1)[2], 3.0);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            read("a,b\n1,2\n", &opts("y")),
            Err(Error::LabelColumnMissing(_))
        ));
        let mut garbage = String::from("a,y\n");
        for i in 0..40 {
            garbage.push_str(&format!("w{i},{}\n", i % 2));
        }
        assert!(matches!(
            read(&garbage, &opts("y")),
            Err(Error::UnparseableColumn { .. })
        ));
        assert!(matches!(
            read("a,y\n,0\n,1\n", &opts("y")),
            Err(Error::NoUsableRows)
        ));
        assert!(matches!(
            read("a,y\n1,0\n2,0\n", &opts("y")),
            Err(Error::TooFewClasses(1))
        ));
        assert!(load_csv(Path::new("/definitely/not/here.csv"), &opts("y")).is_err());
    }

    #[test]
    fn label_by_index_without_header() {
        let o = LoadOptions {
            label_column: LabelColumn::Index(0),
            has_header: false,
            delimiter: b';',
            ..LoadOptions::default()
        };
        let (t, _) = read("1;0.5\n0;0.25\n", &o).unwrap();
        assert_eq!(t.feature_names(), &["c1".to_string()]);
        assert_eq!(t.labels(), &[1, 0]);
    }

    #[test]
    fn standardize_z_scores_continuous_only() {
        let t = DataTable::new(
            vec![vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0]],
            vec!["a".into(), "b".into()],
            vec![FeatureKind::Continuous, FeatureKind::Categorical],
            vec![0, 1, 0],
            vec!["0".into(), "1".into()],
        )
        .unwrap();
        let s = standardize(&t).unwrap();
        assert!(stats::mean(s.column(0)).abs() < 1e-12);
        assert!((stats::variance(s.column(0)) - 1.0).abs() < 1e-12);
        assert_eq!(s.column(1), t.column(1));
        let twice = standardize(&s).unwrap();
        for (a, b) in twice.column(0).iter().zip(s.column(0)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let t = DataTable::new(
            vec![vec![5.0, 5.0, 5.0]],
            vec!["flat".into()],
            vec![FeatureKind::Continuous],
            vec![0, 1, 0],
            vec!["0".into(), "1".into()],
        )
        .unwrap();
        let err = standardize(&t).unwrap_err();
        assert!(err.to_string().contains("zero variance"));
        assert!(err.to_string().contains("flat"));
    }

    #[test]
    fn equal_frequency_bins_hold_n_over_b() {
        let values: Vec<f64> = (0..100).map(|i| ((i * 37) % 100) as f64 / 100.0).collect();
        let codes = equal_frequency_codes(&values, 5);
        let mut counts = [0; 5];
        codes.iter().for_each(|&c| counts[c as usize] += 1);
        assert_eq!(counts, [20; 5]);
    }

    #[test]
    fn ties_stay_in_one_bin() {
        let values = [1.0, 1.0, 1.0, 1.0, 2.0, 3.0];
        let codes = equal_frequency_codes(&values, 3);
        assert!(codes[..4].iter().all(|&c| c == codes[0]));
        let edges = equal_frequency_edges(&values, 3);
        assert!(edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn constant_column_gets_one_bin() {
        assert!(equal_frequency_edges(&[4.0; 10], 5).is_empty());
        assert_eq!(equal_width_edges(&[4.0; 10], 5), Vec::<f64>::new());
    }

    #[test]
    fn discretize_rejects_one_bin() {
        let t = DataTable::new(
            vec![vec![1.0, 2.0]],
            vec!["a".into()],
            vec![FeatureKind::Continuous],
            vec![0, 1],
            vec!["0".into(), "1".into()],
        )
        .unwrap();
        assert!(discretize(&t, 1, BinScheme::EqualFrequency).is_err());
        let v = discretize(&t, 2, BinScheme::EqualWidth).unwrap();
        assert_eq!(v.column(0), &[0, 1]);
    }
}
