//! Per-AP importance (Cramér's V of binned RSS against the floor label) and
//! pairwise redundancy (absolute Pearson correlation between AP columns).

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DiscretizedDataset, FingerprintDataset};
use crate::error::{Error, Result};

/// `b x f` table of co-occurrence counts between one AP's bins and floors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
}

impl ContingencyTable {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidData("ragged contingency table".into()));
        }
        Ok(ContingencyTable {
            rows,
            cols,
            counts: counts.into_iter().flatten().collect(),
        })
    }

    /// Counts `(bins[s], floors[s])` pairs into an `n_bins x n_floors` table.
    pub fn from_columns(
        bins: &[u16],
        n_bins: usize,
        floors: &[usize],
        n_floors: usize,
    ) -> Result<Self> {
        if bins.len() != floors.len() {
            return Err(Error::Dimension {
                expected: bins.len(),
                got: floors.len(),
            });
        }
        let mut counts = vec![0u64; n_bins * n_floors];
        for (&b, &f) in bins.iter().zip(floors) {
            let b = b as usize;
            if b >= n_bins || f >= n_floors {
                return Err(Error::InvalidData(format!(
                    "cell ({b}, {f}) outside {n_bins}x{n_floors} table"
                )));
            }
            counts[b * n_floors + f] += 1;
        }
        Ok(ContingencyTable {
            rows: n_bins,
            cols: n_floors,
            counts,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.counts[r * self.cols + c]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.get(r, c)).sum())
            .collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.cols.max(1))
            .map(<[u64]>::to_vec)
            .collect()
    }
}

pub fn contingency_table(
    bins: &[u16],
    n_bins: usize,
    floors: &[usize],
    n_floors: usize,
) -> Result<ContingencyTable> {
    ContingencyTable::from_columns(bins, n_bins, floors, n_floors)
}

/// Pearson chi-square statistic of independence. Cells whose expected count
/// is zero (empty row or column marginal) contribute nothing.
pub fn chi_square(table: &ContingencyTable) -> Result<f64> {
    let total = table.total();
    if total == 0 {
        return Err(Error::InvalidData("empty contingency table".into()));
    }
    let total = total as f64;
    let row_sums = table.row_sums();
    let col_sums = table.col_sums();
    let mut chi2 = 0.0;
    for (r, &rs) in row_sums.iter().enumerate() {
        if rs == 0 {
            continue;
        }
        for (c, &cs) in col_sums.iter().enumerate() {
            if cs == 0 {
                continue;
            }
            let expected = rs as f64 * cs as f64 / total;
            let diff = table.get(r, c) as f64 - expected;
            chi2 += diff * diff / expected;
        }
    }
    Ok(chi2)
}

/// Denominator dimensions for Cramér's V.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CramerDims {
    /// Count only rows/columns with a nonzero marginal.
    #[default]
    Effective,
    /// Use the nominal table shape `b x f`.
    Nominal,
}

/// Cramér's V, `sqrt(chi2 / (m * min(b - 1, f - 1)))`, clamped to `[0, 1]`.
/// Degenerate tables (one occupied row or column, or no samples) give 0.
pub fn cramers_v(table: &ContingencyTable, dims: CramerDims) -> f64 {
    let m = table.total();
    if m == 0 {
        return 0.0;
    }
    let (b, f) = match dims {
        CramerDims::Effective => (
            table.row_sums().iter().filter(|&&s| s > 0).count(),
            table.col_sums().iter().filter(|&&s| s > 0).count(),
        ),
        CramerDims::Nominal => (table.n_rows(), table.n_cols()),
    };
    let dof = b.min(f).saturating_sub(1);
    if dof == 0 {
        return 0.0;
    }
    let chi2 = chi_square(table).expect("nonempty table");
    (chi2 / (m as f64 * dof as f64)).sqrt().clamp(0.0, 1.0)
}

/// Per-AP importance values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImportanceVector(Vec<f64>);

impl ImportanceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidData(format!(
                "importance[{i}] = {v} outside [0, 1]"
            )));
        }
        Ok(ImportanceVector(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn summary(&self) -> ValueSummary {
        ValueSummary::of(self.0.iter().copied())
    }

    /// `ap_id,importance` CSV.
    pub fn write_csv<W: Write>(&self, ap_ids: &[String], writer: W) -> Result<()> {
        if ap_ids.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: ap_ids.len(),
            });
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["ap_id", "importance"])?;
        for (id, v) in ap_ids.iter().zip(&self.0) {
            w.write_record([id.as_str(), &v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Symmetric `n x n` matrix of pairwise redundancies with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyMatrix {
    n: usize,
    values: Vec<f64>,
}

impl RedundancyMatrix {
    /// Validates symmetry, zero diagonal and the `[0, 1]` range.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: values.len(),
            });
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidData(format!("R[{i}][{i}] must be 0")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidData(format!(
                        "R[{i}][{j}] = {v} outside [0, 1]"
                    )));
                }
                if v != values[j * n + i] {
                    return Err(Error::InvalidData(format!("R not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(RedundancyMatrix { n, values })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidData(
                "redundancy matrix must be square".into(),
            ));
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Summary over the off-diagonal entries.
    pub fn summary(&self) -> ValueSummary {
        let n = self.n;
        ValueSummary::of(
            (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| self.get(i, j)),
        )
    }

    /// Dense CSV with AP ids as header row and first column.
    pub fn write_csv<W: Write>(&self, ap_ids: &[String], writer: W) -> Result<()> {
        if ap_ids.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: ap_ids.len(),
            });
        }
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["ap_id".to_string()];
        header.extend(ap_ids.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in ap_ids.iter().enumerate() {
            let mut rec = Vec::with_capacity(self.n + 1);
            rec.push(id.clone());
            rec.extend(self.row(i).iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

impl ValueSummary {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (mut min, mut max, mut sum, mut count) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0);
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            count += 1;
        }
        if count == 0 {
            return ValueSummary {
                min: 0.0,
                max: 0.0,
                mean: 0.0,
                count,
            };
        }
        ValueSummary {
            min,
            max,
            mean: sum / count as f64,
            count,
        }
    }
}

pub fn importance_vector(d: &DiscretizedDataset) -> ImportanceVector {
    importance_vector_with(d, CramerDims::Effective)
}

pub fn importance_vector_with(d: &DiscretizedDataset, dims: CramerDims) -> ImportanceVector {
    let values = (0..d.n_aps())
        .into_par_iter()
        .map(|c| {
            let table =
                ContingencyTable::from_columns(d.column(c), d.n_bins(), d.labels(), d.n_floors())
                    .expect("discretized dataset is self-consistent");
            cramers_v(&table, dims)
        })
        .collect();
    ImportanceVector(values)
}

/// Sample Pearson correlation. Zero-variance input gives 0.
pub fn pearson(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension {
            expected: u.len(),
            got: v.len(),
        });
    }
    if u.len() < 2 {
        return Err(Error::InvalidData(
            "pearson needs at least 2 samples".into(),
        ));
    }
    let (cu, nu) = centered(u);
    let (cv, nv) = centered(v);
    Ok(correlation_of_centered(&cu, nu, &cv, nv))
}

fn centered(u: &[f64]) -> (Vec<f64>, f64) {
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    let c: Vec<f64> = u.iter().map(|x| x - mean).collect();
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    (c, norm)
}

#[inline]
fn correlation_of_centered(cu: &[f64], nu: f64, cv: &[f64], nv: f64) -> f64 {
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let dot: f64 = cu.iter().zip(cv).map(|(a, b)| a * b).sum();
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

/// `R_ij = |pearson(col_i, col_j)|` over sentinel-substituted RSS, `R_ii = 0`.
/// Each unordered pair is computed once, in a fixed summation order.
pub fn redundancy_matrix(d: &FingerprintDataset) -> RedundancyMatrix {
    let n = d.n_aps();
    let columns: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|c| centered(&d.substituted_column(c)))
        .collect();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (ci, ni) = &columns[i];
            ((i + 1)..n)
                .map(|j| {
                    let (cj, nj) = &columns[j];
                    correlation_of_centered(ci, *ni, cj, *nj).abs()
                })
                .collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    RedundancyMatrix { n, values }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub importance: ValueSummary,
    pub redundancy: ValueSummary,
}
