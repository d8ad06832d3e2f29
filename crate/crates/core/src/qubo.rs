//! The selection objective
//!
//! ```text
//! Q(x, a) = -a * sum_i I_i x_i + (1 - a) * sum_{i,j} R_ij x_i x_j
//! ```
//!
//! and its matrix form `x^T P(a) x` with `P_ij = R_ij - a (R_ij + [i == j] I_i)`.
//! The double sum runs over ordered pairs, so each unordered pair counts
//! twice; `x^T P x` double-counts in the same way and the two forms agree
//! exactly.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::selection;
use crate::stats::{ImportanceVector, RedundancyMatrix};

/// Importance, redundancy and the balancing parameter `alpha`.
///
/// The statistics are shared behind `Arc` so re-weighting the same problem
/// at a new `alpha` (as the binary search does) is cheap.
#[derive(Debug, Clone)]
pub struct QuboInstance {
    importance: Arc<ImportanceVector>,
    redundancy: Arc<RedundancyMatrix>,
    alpha: f64,
}

impl QuboInstance {
    pub fn new(
        importance: ImportanceVector,
        redundancy: RedundancyMatrix,
        alpha: f64,
    ) -> Result<Self> {
        Self::from_shared(Arc::new(importance), Arc::new(redundancy), alpha)
    }

    pub fn from_shared(
        importance: Arc<ImportanceVector>,
        redundancy: Arc<RedundancyMatrix>,
        alpha: f64,
    ) -> Result<Self> {
        if importance.len() != redundancy.dim() {
            return Err(Error::Dimension {
                expected: redundancy.dim(),
                got: importance.len(),
            });
        }
        check_alpha(alpha)?;
        Ok(QuboInstance {
            importance,
            redundancy,
            alpha,
        })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(QuboInstance {
            alpha,
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.importance.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn importance(&self) -> &ImportanceVector {
        &self.importance
    }

    pub fn redundancy(&self) -> &RedundancyMatrix {
        &self.redundancy
    }

    pub fn shared_importance(&self) -> Arc<ImportanceVector> {
        Arc::clone(&self.importance)
    }

    pub fn shared_redundancy(&self) -> Arc<RedundancyMatrix> {
        Arc::clone(&self.redundancy)
    }

    pub fn build_matrix(&self) -> QuboMatrix {
        let n = self.n();
        let a = self.alpha;
        let mut p = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let r = self.redundancy.get(i, j);
                let diag = if i == j { self.importance.get(i) } else { 0.0 };
                p.push(r - a * (r + diag));
            }
        }
        QuboMatrix { n, p }
    }

    /// `I(x) = sum_i I_i x_i`.
    pub fn importance_of(&self, x: &[u8]) -> Result<f64> {
        selection::cardinality(x, self.n())?;
        Ok(self.importance_sum(x))
    }

    /// `R(x) = sum_{i,j} R_ij x_i x_j` over ordered pairs.
    pub fn redundancy_of(&self, x: &[u8]) -> Result<f64> {
        selection::cardinality(x, self.n())?;
        Ok(self.redundancy_sum(x))
    }

    pub fn energy(&self, x: &[u8]) -> Result<f64> {
        selection::cardinality(x, self.n())?;
        Ok(self.energy_unchecked(x))
    }

    /// Energy of an already validated 0/1 vector. Sums in index order.
    pub fn energy_unchecked(&self, x: &[u8]) -> f64 {
        -self.alpha * self.importance_sum(x) + (1.0 - self.alpha) * self.redundancy_sum(x)
    }

    fn importance_sum(&self, x: &[u8]) -> f64 {
        x.iter()
            .zip(self.importance.values())
            .filter(|(&xi, _)| xi == 1)
            .map(|(_, &v)| v)
            .sum()
    }

    fn redundancy_sum(&self, x: &[u8]) -> f64 {
        let mut sum = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            if xi != 1 {
                continue;
            }
            let row = self.redundancy.row(i);
            for (j, &xj) in x.iter().enumerate() {
                if xj == 1 {
                    sum += row[j];
                }
            }
        }
        sum
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Dense symmetric `P(alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboMatrix {
    n: usize,
    p: Vec<f64>,
}

impl QuboMatrix {
    pub fn from_dense(n: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: p.len(),
            });
        }
        Ok(QuboMatrix { n, p })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn max_abs(&self) -> f64 {
        self.p.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `x^T P x`.
    pub fn quadratic_form(&self, x: &[u8]) -> Result<f64> {
        selection::cardinality(x, self.n)?;
        let mut sum = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            let row = self.row(i);
            for (j, &xj) in x.iter().enumerate() {
                if xj == 1 {
                    sum += row[j];
                }
            }
        }
        Ok(sum)
    }

    pub fn write_dense_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        for i in 0..self.n {
            w.write_record(self.row(i).iter().map(f64::to_string))?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// One `i j value` line per nonzero entry (both triangles), 0-based,
    /// preceded by a `# n=<dim>` line.
    pub fn write_triplets<W: Write>(&self, mut writer: W) -> Result<()> {
        let io = |e| Error::io("<triplet writer>", e);
        writeln!(writer, "# n={}", self.n).map_err(io)?;
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                if v != 0.0 {
                    writeln!(writer, "{i} {j} {v}").map_err(io)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_triplets<R: BufRead>(reader: R) -> Result<Self> {
        let mut n = None;
        let mut entries = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<triplet reader>", e))?;
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("# n=") {
                n = Some(
                    rest.trim()
                        .parse::<usize>()
                        .map_err(|_| bad_triplet(lineno, line))?,
                );
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad_triplet(lineno, line));
            }
            let i: usize = parts[0].parse().map_err(|_| bad_triplet(lineno, line))?;
            let j: usize = parts[1].parse().map_err(|_| bad_triplet(lineno, line))?;
            let v: f64 = parts[2].parse().map_err(|_| bad_triplet(lineno, line))?;
            entries.push((i, j, v));
        }
        let n = n.ok_or_else(|| Error::InvalidData("triplet file lacks '# n=' header".into()))?;
        let mut p = vec![0.0; n * n];
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::InvalidData(format!(
                    "triplet ({i}, {j}) outside {n}x{n}"
                )));
            }
            p[i * n + j] = v;
        }
        Ok(QuboMatrix { n, p })
    }
}

fn bad_triplet(lineno: usize, line: &str) -> Error {
    Error::InvalidData(format!("triplet line {}: {line:?}", lineno + 1))
}
