//! Instance generators and naive reference implementations shared by the
//! integration and acceptance tests. Everything here is written the slow,
//! obvious way on purpose and shares no code with the library.

#![allow(dead_code)]

use apsel_core::qubo::QuboInstance;
use apsel_core::stats::{ImportanceVector, RedundancyMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two-pass sample Pearson coefficient; 0 when either side is constant.
pub fn naive_pearson(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let mut suv = 0.0;
    let mut suu = 0.0;
    let mut svv = 0.0;
    for i in 0..u.len() {
        suv += (u[i] - mu) * (v[i] - mv);
        suu += (u[i] - mu) * (u[i] - mu);
        svv += (v[i] - mv) * (v[i] - mv);
    }
    if suu == 0.0 || svv == 0.0 {
        0.0
    } else {
        suv / (suu.sqrt() * svv.sqrt())
    }
}

/// Counts by scanning every (row, col) cell against every sample.
pub fn naive_table(bins: &[usize], floors: &[usize], b: usize, f: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; f]; b];
    for (r, row) in t.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = (0..bins.len())
                .filter(|&s| bins[s] == r && floors[s] == c)
                .count() as u64;
        }
    }
    t
}

pub fn naive_chi_square(t: &[Vec<u64>]) -> f64 {
    let m: u64 = t.iter().flatten().sum();
    let mut chi = 0.0;
    for (r, row) in t.iter().enumerate() {
        for (c, &obs) in row.iter().enumerate() {
            let rs: u64 = t[r].iter().sum();
            let cs: u64 = t.iter().map(|row| row[c]).sum();
            let e = rs as f64 * cs as f64 / m as f64;
            if e > 0.0 {
                chi += (obs as f64 - e).powi(2) / e;
            }
        }
    }
    chi
}

/// Cramér's V over the non-empty rows and columns; 0 when degenerate.
pub fn naive_cramers_v(t: &[Vec<u64>]) -> f64 {
    let m: u64 = t.iter().flatten().sum();
    let rows = t.iter().filter(|r| r.iter().sum::<u64>() > 0).count();
    let cols = (0..t[0].len())
        .filter(|&c| t.iter().map(|r| r[c]).sum::<u64>() > 0)
        .count();
    let d = rows.min(cols);
    if d < 2 || m == 0 {
        return 0.0;
    }
    (naive_chi_square(t) / (m as f64 * (d - 1) as f64))
        .sqrt()
        .min(1.0)
}

/// Importance uniform in [0, 1]; redundancy the absolute correlation of
/// random columns sharing a few latent factors.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, alpha: f64) -> QuboInstance {
    let importance: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let rows = 40;
    let factors = 3;
    let load: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..factors).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut cols = vec![vec![0.0; rows]; n];
    for r in 0..rows {
        let z: Vec<f64> = (0..factors).map(|_| rng.random_range(-1.0..1.0)).collect();
        for (i, col) in cols.iter_mut().enumerate() {
            let common: f64 = (0..factors).map(|k| load[i][k] * z[k]).sum();
            col[r] = common + 0.5 * rng.random_range(-1.0..1.0);
        }
    }
    let mut red = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                red[i][j] = naive_pearson(&cols[i], &cols[j]).abs().min(1.0);
            }
        }
    }
    QuboInstance::new(
        ImportanceVector::new(importance).unwrap(),
        RedundancyMatrix::from_rows(red).unwrap(),
        alpha,
    )
    .unwrap()
}

/// Objective written term by term: `-a sum I_i x_i + (1-a) sum_ij R_ij x_i x_j`.
pub fn naive_energy(inst: &QuboInstance, x: &[u8]) -> f64 {
    let n = inst.n();
    let a = inst.alpha();
    let mut lin = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        lin += inst.importance().get(i) * x[i] as f64;
        for j in 0..n {
            quad += inst.redundancy().get(i, j) * (x[i] * x[j]) as f64;
        }
    }
    -a * lin + (1.0 - a) * quad
}

/// `P_ij = R_ij - a (R_ij + delta_ij I_i)`, built entry by entry.
pub fn naive_matrix(inst: &QuboInstance) -> Vec<Vec<f64>> {
    let n = inst.n();
    let a = inst.alpha();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let r = inst.redundancy().get(i, j);
                    let delta = if i == j {
                        inst.importance().get(i)
                    } else {
                        0.0
                    };
                    r - a * (r + delta)
                })
                .collect()
        })
        .collect()
}

pub fn naive_quadratic_form(p: &[Vec<f64>], x: &[u8]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        for j in 0..p.len() {
            s += x[i] as f64 * p[i][j] * x[j] as f64;
        }
    }
    s
}

pub fn bits(mask: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

/// Minimum energy over all `2^n` vectors (optionally with at most `k_max`
/// ones) and every vector within `tol` of it.
pub fn naive_minimizers(inst: &QuboInstance, k_max: usize, tol: f64) -> (f64, Vec<Vec<u8>>) {
    let n = inst.n();
    let all: Vec<(f64, Vec<u8>)> = (0..1u64 << n)
        .filter(|m| m.count_ones() as usize <= k_max)
        .map(|m| {
            let x = bits(m, n);
            (naive_energy(inst, &x), x)
        })
        .collect();
    let best = all.iter().map(|(e, _)| *e).fold(f64::INFINITY, f64::min);
    let ties = all
        .into_iter()
        .filter(|(e, _)| *e <= best + tol)
        .map(|(_, x)| x)
        .collect();
    (best, ties)
}

pub fn card(x: &[u8]) -> usize {
    x.iter().filter(|&&v| v == 1).count()
}
