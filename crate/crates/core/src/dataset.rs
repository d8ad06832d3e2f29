//! RSS fingerprint datasets: CSV ingestion, discretization, stratified
//! splitting and column reduction.
//!
//! A fingerprint is an `m x n` matrix of received signal strengths (dBm)
//! with one categorical floor label per row. A reserved sentinel value
//! (100 in the public 520-AP corpus) marks an access point that was not
//! detected in that sample.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selection;

pub const DEFAULT_SENTINEL: f64 = 100.0;
pub const DEFAULT_RSS_MIN: f64 = -104.0;
pub const DEFAULT_RSS_MAX: f64 = 0.0;
/// 9 signal bins plus the not-detected bin.
pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_TEST_FRACTION: f64 = 0.3;
pub const DEFAULT_SPLIT_SEED: u64 = 42;
pub const CANONICAL_FLOOR_COLUMN: &str = "FLOOR";

/// Declared signal range plus the not-detected marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssRange {
    pub min: f64,
    pub max: f64,
    pub sentinel: f64,
}

impl Default for RssRange {
    fn default() -> Self {
        RssRange {
            min: DEFAULT_RSS_MIN,
            max: DEFAULT_RSS_MAX,
            sentinel: DEFAULT_SENTINEL,
        }
    }
}

impl RssRange {
    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::Config(format!(
                "RSS range must satisfy min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if !self.sentinel.is_finite() {
            return Err(Error::Config("sentinel must be finite".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn is_sentinel(&self, v: f64) -> bool {
        v == self.sentinel
    }

    /// Value used for correlation and distance computations: the sentinel
    /// becomes one dB below the weakest representable signal.
    #[inline]
    pub fn substitute(&self, v: f64) -> f64 {
        if self.is_sentinel(v) {
            self.min - 1.0
        } else {
            v
        }
    }
}

/// Which CSV columns hold RSS values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RssColumns {
    /// Every header starting with this prefix, in file order.
    Prefix(String),
    /// Column indices `start..end` (end exclusive).
    Range { start: usize, end: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub rss_columns: RssColumns,
    pub floor_column: String,
    pub range: RssRange,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            rss_columns: RssColumns::Prefix("WAP".into()),
            floor_column: CANONICAL_FLOOR_COLUMN.into(),
            range: RssRange::default(),
        }
    }
}

impl CsvSchema {
    /// Schema matching what [`FingerprintDataset::write_csv`] produces.
    pub fn canonical(n_aps: usize, range: RssRange) -> Self {
        CsvSchema {
            rss_columns: RssColumns::Range {
                start: 0,
                end: n_aps,
            },
            floor_column: CANONICAL_FLOOR_COLUMN.into(),
            range,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub m: usize,
    pub n: usize,
    pub f: usize,
    pub sentinel: f64,
    pub rss_min: f64,
    pub rss_max: f64,
}

/// Validated `m x n` fingerprint with floor labels.
///
/// Floor labels are stored as codes into `floor_names`. Subsets produced by
/// [`split`] and [`reduce`] keep the parent's label vocabulary so codes stay
/// comparable between train and test partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintDataset {
    rss: Vec<f64>,
    rows: usize,
    cols: usize,
    labels: Vec<usize>,
    floor_names: Vec<String>,
    ap_ids: Vec<String>,
    range: RssRange,
}

impl FingerprintDataset {
    /// Builds a dataset from a row-major RSS buffer and raw floor labels.
    pub fn new(
        rss: Vec<f64>,
        ap_ids: Vec<String>,
        floors: Vec<String>,
        range: RssRange,
    ) -> Result<Self> {
        range.validate()?;
        let cols = ap_ids.len();
        let rows = floors.len();
        if cols == 0 {
            return Err(Error::InvalidData("dataset has no RSS columns".into()));
        }
        if rss.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: rss.len(),
            });
        }
        let mut seen = HashMap::with_capacity(cols);
        for id in &ap_ids {
            if seen.insert(id.as_str(), ()).is_some() {
                return Err(Error::InvalidData(format!("duplicate AP id {id:?}")));
            }
        }
        for (idx, &v) in rss.iter().enumerate() {
            check_value(v, &range, idx / cols, &ap_ids[idx % cols])?;
        }
        let (labels, floor_names) = encode_labels(&floors);
        if floor_names.len() < 2 {
            return Err(Error::TooFewFloors(floor_names.len()));
        }
        Ok(FingerprintDataset {
            rss,
            rows,
            cols,
            labels,
            floor_names,
            ap_ids,
            range,
        })
    }

    pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, schema)
    }

    pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Self> {
        schema.range.validate()?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();

        let rss_idx: Vec<usize> = match &schema.rss_columns {
            RssColumns::Prefix(prefix) => headers
                .iter()
                .enumerate()
                .filter(|(_, h)| h.starts_with(prefix.as_str()))
                .map(|(i, _)| i)
                .collect(),
            RssColumns::Range { start, end } => {
                if start >= end || *end > headers.len() {
                    return Err(Error::MissingColumn(format!(
                        "RSS column range {start}..{end} (file has {} columns)",
                        headers.len()
                    )));
                }
                (*start..*end).collect()
            }
        };
        if rss_idx.is_empty() {
            return Err(Error::MissingColumn(format!("{:?}", schema.rss_columns)));
        }
        let floor_idx = headers
            .iter()
            .position(|h| h == schema.floor_column)
            .ok_or_else(|| Error::MissingColumn(schema.floor_column.clone()))?;
        if rss_idx.contains(&floor_idx) {
            return Err(Error::Config(format!(
                "floor column {:?} overlaps the RSS columns",
                schema.floor_column
            )));
        }
        let ap_ids: Vec<String> = rss_idx.iter().map(|&i| headers[i].to_string()).collect();

        let mut rss = Vec::new();
        let mut floors = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            for (&ci, id) in rss_idx.iter().zip(&ap_ids) {
                let cell = record.get(ci).unwrap_or("");
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    column: id.clone(),
                    value: cell.to_string(),
                })?;
                check_value(v, &schema.range, row, id)?;
                rss.push(v);
            }
            let floor = record.get(floor_idx).unwrap_or("");
            if floor.is_empty() {
                return Err(Error::Parse {
                    row,
                    column: schema.floor_column.clone(),
                    value: String::new(),
                });
            }
            floors.push(floor.to_string());
        }
        Self::new(rss, ap_ids, floors, schema.range)
    }

    /// Writes the canonical headered CSV: RSS columns first, then `FLOOR`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.ap_ids.iter().map(String::as_str).collect();
        header.push(CANONICAL_FLOOR_COLUMN);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.cols + 1);
        for r in 0..self.rows {
            record.clear();
            record.extend(self.row(r).iter().map(|v| v.to_string()));
            record.push(self.floor_names[self.labels[r]].clone());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn n_samples(&self) -> usize {
        self.rows
    }

    pub fn n_aps(&self) -> usize {
        self.cols
    }

    /// Size of the label vocabulary.
    pub fn n_floors(&self) -> usize {
        self.floor_names.len()
    }

    /// Number of distinct labels actually present in the rows.
    pub fn floors_present(&self) -> usize {
        let mut seen = vec![false; self.floor_names.len()];
        for &l in &self.labels {
            seen[l] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    pub fn range(&self) -> RssRange {
        self.range
    }

    pub fn ap_ids(&self) -> &[String] {
        &self.ap_ids
    }

    pub fn floor_names(&self) -> &[String] {
        &self.floor_names
    }

    /// Floor label codes, indices into [`floor_names`](Self::floor_names).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn rss(&self) -> &[f64] {
        &self.rss
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.rss[r * self.cols..(r + 1) * self.cols]
    }

    pub fn value(&self, r: usize, c: usize) -> f64 {
        self.rss[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.value(r, c)).collect()
    }

    /// Column with the sentinel replaced by `rss_min - 1`.
    pub fn substituted_column(&self, c: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.range.substitute(self.value(r, c)))
            .collect()
    }

    /// Row-major feature matrix with the sentinel substituted.
    pub fn substituted_features(&self) -> Vec<f64> {
        self.rss.iter().map(|&v| self.range.substitute(v)).collect()
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            m: self.rows,
            n: self.cols,
            f: self.floor_names.len(),
            sentinel: self.range.sentinel,
            rss_min: self.range.min,
            rss_max: self.range.max,
        }
    }

    /// Rows `rows` (in the given order), same columns and label vocabulary.
    pub fn subset_rows(&self, rows: &[usize]) -> Self {
        let mut rss = Vec::with_capacity(rows.len() * self.cols);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            rss.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        FingerprintDataset {
            rss,
            rows: rows.len(),
            labels,
            ..self.clone_meta()
        }
    }

    /// Columns `cols` (in the given order), same rows.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut rss = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            rss.extend(cols.iter().map(|&c| row[c]));
        }
        FingerprintDataset {
            rss,
            rows: self.rows,
            cols: cols.len(),
            labels: self.labels.clone(),
            floor_names: self.floor_names.clone(),
            ap_ids: cols.iter().map(|&c| self.ap_ids[c].clone()).collect(),
            range: self.range,
        }
    }

    fn clone_meta(&self) -> Self {
        FingerprintDataset {
            rss: Vec::new(),
            rows: 0,
            cols: self.cols,
            labels: Vec::new(),
            floor_names: self.floor_names.clone(),
            ap_ids: self.ap_ids.clone(),
            range: self.range,
        }
    }

    /// Replaces the label codes, keeping the vocabulary. Codes must be valid.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.rows {
            return Err(Error::Dimension {
                expected: self.rows,
                got: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.floor_names.len()) {
            return Err(Error::InvalidData(format!("label code {bad} out of range")));
        }
        Ok(FingerprintDataset {
            labels,
            ..self.clone()
        })
    }
}

fn check_value(v: f64, range: &RssRange, row: usize, column: &str) -> Result<()> {
    if range.is_sentinel(v) {
        return Ok(());
    }
    if !v.is_finite() || v < range.min || v > range.max {
        return Err(Error::OutOfRange {
            row,
            column: column.to_string(),
            value: v,
            min: range.min,
            max: range.max,
        });
    }
    Ok(())
}

/// Sorted label vocabulary (numeric order when every label parses as a
/// number) and per-row codes.
fn encode_labels(floors: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut names: Vec<String> = floors.to_vec();
    names.sort();
    names.dedup();
    let numeric: Option<Vec<f64>> = names.iter().map(|s| s.parse::<f64>().ok()).collect();
    if let Some(keys) = numeric {
        let mut paired: Vec<(f64, String)> = keys.into_iter().zip(names).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0));
        names = paired.into_iter().map(|(_, s)| s).collect();
    }
    let index: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let codes = floors.iter().map(|s| index[s.as_str()]).collect();
    (codes, names)
}

/// Per-AP categorical view used by the association statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedDataset {
    /// Column-major `m x n` bin indices.
    bins: Vec<u16>,
    rows: usize,
    cols: usize,
    n_bins: usize,
    labels: Vec<usize>,
    n_floors: usize,
}

impl DiscretizedDataset {
    /// Bin count including the not-detected bin.
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_floors(&self) -> usize {
        self.n_floors
    }

    pub fn n_samples(&self) -> usize {
        self.rows
    }

    pub fn n_aps(&self) -> usize {
        self.cols
    }

    pub fn not_detected_bin(&self) -> usize {
        self.n_bins - 1
    }

    pub fn column(&self, c: usize) -> &[u16] {
        &self.bins[c * self.rows..(c + 1) * self.rows]
    }

    pub fn bin(&self, r: usize, c: usize) -> u16 {
        self.bins[c * self.rows + r]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Equal-width bin index for one RSS value; the sentinel gets `n_bins - 1`.
#[inline]
pub fn bin_index(v: f64, range: &RssRange, n_bins: usize) -> usize {
    if range.is_sentinel(v) {
        return n_bins - 1;
    }
    let signal_bins = (n_bins - 1) as f64;
    let t = (v - range.min) / (range.max - range.min);
    let idx = (t * signal_bins).floor();
    if idx <= 0.0 {
        0
    } else {
        (idx as usize).min(n_bins - 2)
    }
}

pub fn discretize(d: &FingerprintDataset, n_bins: usize) -> Result<DiscretizedDataset> {
    if n_bins < 2 {
        return Err(Error::Config(format!(
            "bin count must be >= 2, got {n_bins}"
        )));
    }
    if n_bins > u16::MAX as usize {
        return Err(Error::Config(format!("bin count {n_bins} too large")));
    }
    let range = d.range();
    let mut bins = Vec::with_capacity(d.rows * d.cols);
    for c in 0..d.cols {
        bins.extend((0..d.rows).map(|r| bin_index(d.value(r, c), &range, n_bins) as u16));
    }
    Ok(DiscretizedDataset {
        bins,
        rows: d.rows,
        cols: d.cols,
        n_bins,
        labels: d.labels.clone(),
        n_floors: d.floor_names.len(),
    })
}

/// Stratified row partition. Returns sorted `(train, test)` row indices.
pub fn split_indices(
    d: &FingerprintDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut by_floor: Vec<Vec<usize>> = vec![Vec::new(); d.n_floors()];
    for (r, &l) in d.labels.iter().enumerate() {
        by_floor[l].push(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(d.rows);
    let mut test = Vec::new();
    for (floor, mut rows) in by_floor.into_iter().enumerate() {
        match rows.len() {
            0 => continue,
            1 => return Err(Error::UnstratifiableFloor(d.floor_names[floor].clone())),
            count => {
                let n_test = ((count as f64 * test_fraction).round() as usize).clamp(1, count - 1);
                rows.shuffle(&mut rng);
                test.extend_from_slice(&rows[..n_test]);
                train.extend_from_slice(&rows[n_test..]);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(
    d: &FingerprintDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(FingerprintDataset, FingerprintDataset)> {
    let (train, test) = split_indices(d, test_fraction, seed)?;
    Ok((d.subset_rows(&train), d.subset_rows(&test)))
}

/// Keeps the columns where `x` is 1.
pub fn reduce(d: &FingerprintDataset, x: &[u8]) -> Result<FingerprintDataset> {
    let k = selection::cardinality(x, d.cols)?;
    if k == 0 {
        return Err(Error::EmptySelection);
    }
    Ok(d.select_columns(&selection::selected_indices(x)))
}
