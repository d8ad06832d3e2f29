//! QUBO minimizers: seeded simulated annealing for real problem sizes and
//! exhaustive enumeration as the small-`n` ground truth.
//!
//! Solvers are reached through [`QuboSolver`] so callers (the alpha search,
//! the CLI) never depend on a concrete algorithm.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{QuboInstance, QuboMatrix};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 24;
/// Hard limit of the `u64` mask enumeration.
const MAX_EXHAUSTIVE_BITS: usize = 40;
/// Slack for collecting near-minimal states during the incremental scan.
/// They are re-scored exactly afterwards.
const SCAN_TOL: f64 = 1e-8;

/// Tolerance under which two exactly evaluated energies count as tied.
pub fn tie_tolerance(energy: f64) -> f64 {
    1e-12 * energy.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealConfig {
    /// `None` scales to the instance: `max |P_ij| * n`.
    pub initial_temperature: Option<f64>,
    pub cooling_rate: f64,
    pub sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            initial_temperature: None,
            cooling_rate: 0.97,
            sweeps: 1000,
            restarts: 20,
            seed: 0,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!(
                    "initial temperature must be > 0, got {t}"
                )));
            }
        }
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return Err(Error::Config(format!(
                "cooling rate must lie in (0, 1), got {}",
                self.cooling_rate
            )));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<u8>,
    pub energy: f64,
    pub k: usize,
    pub solver: String,
    pub wall_time: Duration,
}

impl Solution {
    fn new(inst: &QuboInstance, x: Vec<u8>, solver: &str, started: Instant) -> Self {
        let energy = inst.energy_unchecked(&x);
        let k = x.iter().filter(|&&v| v == 1).count();
        Solution {
            x,
            energy,
            k,
            solver: solver.to_string(),
            wall_time: started.elapsed(),
        }
    }

    pub fn selected(&self) -> Vec<usize> {
        crate::selection::selected_indices(&self.x)
    }
}

pub trait QuboSolver: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, inst: &QuboInstance) -> Result<Solution>;
}

/// Named solver choice, as written in configs and on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverSpec {
    Sa(AnnealConfig),
    Exhaustive { cap: usize },
}

impl SolverSpec {
    /// `sa` or `exhaustive`.
    pub fn from_name(name: &str, anneal: AnnealConfig, cap: usize) -> Result<Self> {
        match name {
            "sa" => Ok(SolverSpec::Sa(anneal)),
            "exhaustive" => Ok(SolverSpec::Exhaustive { cap }),
            other => Err(Error::Config(format!(
                "unknown solver {other:?} (expected sa or exhaustive)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SolverSpec::Sa(cfg) => cfg.validate(),
            SolverSpec::Exhaustive { cap } if *cap > MAX_EXHAUSTIVE_BITS => Err(Error::Config(
                format!("exhaustive cap {cap} exceeds {MAX_EXHAUSTIVE_BITS}"),
            )),
            SolverSpec::Exhaustive { .. } => Ok(()),
        }
    }
}

impl QuboSolver for SolverSpec {
    fn name(&self) -> &str {
        match self {
            SolverSpec::Sa(_) => "sa",
            SolverSpec::Exhaustive { .. } => "exhaustive",
        }
    }

    fn solve(&self, inst: &QuboInstance) -> Result<Solution> {
        match self {
            SolverSpec::Sa(cfg) => solve_sa(inst, cfg),
            SolverSpec::Exhaustive { cap } => solve_exhaustive_capped(inst, *cap),
        }
    }
}

/// Incrementally maintained state for single-bit-flip moves.
///
/// `fields[i] = sum_{j != i} P_ij x_j`, so flipping bit `i` changes the
/// energy by `(1 - 2 x_i) (P_ii + 2 fields[i])` and costs `O(n)` to commit.
#[derive(Debug, Clone)]
pub struct FlipState<'a> {
    p: &'a QuboMatrix,
    x: Vec<u8>,
    fields: Vec<f64>,
    energy: f64,
    k: usize,
}

impl<'a> FlipState<'a> {
    pub fn new(p: &'a QuboMatrix, x: Vec<u8>) -> Self {
        let n = p.dim();
        assert_eq!(x.len(), n);
        let mut fields = vec![0.0; n];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 1 {
                for (i, f) in fields.iter_mut().enumerate() {
                    if i != j {
                        *f += p.get(i, j);
                    }
                }
            }
        }
        let energy = x
            .iter()
            .enumerate()
            .filter(|(_, &xi)| xi == 1)
            .map(|(i, _)| p.get(i, i) + fields[i])
            .sum();
        let k = x.iter().filter(|&&v| v == 1).count();
        FlipState {
            p,
            x,
            fields,
            energy,
            k,
        }
    }

    #[inline]
    pub fn delta(&self, i: usize) -> f64 {
        let sign = if self.x[i] == 1 { -1.0 } else { 1.0 };
        sign * (self.p.get(i, i) + 2.0 * self.fields[i])
    }

    /// Flips bit `i` and returns the energy change.
    pub fn flip(&mut self, i: usize) -> f64 {
        let d = self.delta(i);
        let s = if self.x[i] == 1 {
            self.x[i] = 0;
            self.k -= 1;
            -1.0
        } else {
            self.x[i] = 1;
            self.k += 1;
            1.0
        };
        let row = self.p.row(i);
        for (j, f) in self.fields.iter_mut().enumerate() {
            if j != i {
                *f += s * row[j];
            }
        }
        self.energy += d;
        d
    }

    pub fn x(&self) -> &[u8] {
        &self.x
    }

    /// Incrementally tracked energy (subject to rounding drift).
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

fn anneal_once(p: &QuboMatrix, cfg: &AnnealConfig, t0: f64, seed: u64) -> Vec<u8> {
    let n = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0: Vec<u8> = (0..n).map(|_| rng.random::<bool>() as u8).collect();
    let mut state = FlipState::new(p, x0);
    let mut best_x = state.x().to_vec();
    let mut best_e = state.energy();
    let mut order: Vec<usize> = (0..n).collect();
    let mut temperature = t0;
    for _ in 0..cfg.sweeps {
        order.shuffle(&mut rng);
        for &i in &order {
            let d = state.delta(i);
            let accept =
                d <= 0.0 || (temperature > 0.0 && rng.random::<f64>() < (-d / temperature).exp());
            if accept {
                state.flip(i);
                if state.energy() < best_e {
                    best_e = state.energy();
                    best_x.copy_from_slice(state.x());
                }
            }
        }
        temperature *= cfg.cooling_rate;
    }
    best_x
}

/// Multi-restart simulated annealing with Metropolis single-bit flips.
///
/// Restart `r` draws from its own stream seeded with `seed + r`; the best
/// restart wins, lowest index on equal energy, so the result does not depend
/// on how restarts are scheduled.
pub fn solve_sa(inst: &QuboInstance, cfg: &AnnealConfig) -> Result<Solution> {
    cfg.validate()?;
    let started = Instant::now();
    let p = inst.build_matrix();
    let n = p.dim();
    if n == 0 {
        return Ok(Solution::new(inst, Vec::new(), "sa", started));
    }
    let t0 = cfg.initial_temperature.unwrap_or(p.max_abs() * n as f64);
    let candidates: Vec<(usize, Vec<u8>, f64)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let x = anneal_once(&p, cfg, t0, cfg.seed.wrapping_add(r as u64));
            let e = inst.energy_unchecked(&x);
            (r, x, e)
        })
        .collect();
    let (_, x, _) = candidates
        .into_iter()
        .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    Ok(Solution::new(inst, x, "sa", started))
}

pub fn solve_exhaustive(inst: &QuboInstance) -> Result<Solution> {
    solve_exhaustive_capped(inst, DEFAULT_EXHAUSTIVE_CAP)
}

/// Global minimum by enumeration of all `2^n` vectors. Ties go to the
/// smallest cardinality, then the lexicographically smallest vector.
pub fn solve_exhaustive_capped(inst: &QuboInstance, cap: usize) -> Result<Solution> {
    let started = Instant::now();
    let ties = minimizers(inst, cap, inst.n())?;
    let x = ties
        .into_iter()
        .next()
        .expect("zero vector is always feasible");
    Ok(Solution::new(inst, x, "exhaustive", started))
}

/// All global minimizers (within [`tie_tolerance`]), sorted by cardinality
/// then lexicographically.
pub fn global_minimizers(inst: &QuboInstance, cap: usize) -> Result<Vec<Vec<u8>>> {
    minimizers(inst, cap, inst.n())
}

/// Minimum energy over vectors with at most `k_max` ones.
pub fn constrained_min(inst: &QuboInstance, k_max: usize) -> Result<Solution> {
    constrained_min_capped(inst, k_max, DEFAULT_EXHAUSTIVE_CAP)
}

pub fn constrained_min_capped(inst: &QuboInstance, k_max: usize, cap: usize) -> Result<Solution> {
    if k_max > inst.n() {
        return Err(Error::Config(format!(
            "budget {k_max} exceeds dimension {}",
            inst.n()
        )));
    }
    let started = Instant::now();
    let ties = minimizers(inst, cap, k_max)?;
    let x = ties
        .into_iter()
        .next()
        .expect("zero vector is always feasible");
    Ok(Solution::new(inst, x, "constrained_exhaustive", started))
}

fn minimizers(inst: &QuboInstance, cap: usize, k_max: usize) -> Result<Vec<Vec<u8>>> {
    let n = inst.n();
    let cap = cap.min(MAX_EXHAUSTIVE_BITS);
    if n > cap {
        return Err(Error::ExhaustiveCap { n, cap });
    }
    let p = inst.build_matrix();
    let masks = gray_scan(&p, k_max);
    let scored: Vec<(Vec<u8>, f64)> = masks
        .into_iter()
        .map(|m| {
            let x: Vec<u8> = (0..n).map(|i| ((m >> i) & 1) as u8).collect();
            let e = inst.energy_unchecked(&x);
            (x, e)
        })
        .collect();
    let best = scored.iter().map(|(_, e)| *e).fold(f64::INFINITY, f64::min);
    let tol = tie_tolerance(best);
    let mut ties: Vec<Vec<u8>> = scored
        .into_iter()
        .filter(|(_, e)| *e <= best + tol)
        .map(|(x, _)| x)
        .collect();
    ties.sort_by(|a, b| {
        let ka = a.iter().filter(|&&v| v == 1).count();
        let kb = b.iter().filter(|&&v| v == 1).count();
        ka.cmp(&kb).then_with(|| a.cmp(b))
    });
    Ok(ties)
}

/// Walks all masks in Gray-code order with incremental energies and returns
/// the masks (cardinality <= `k_max`) within [`SCAN_TOL`] of the minimum.
fn gray_scan(p: &QuboMatrix, k_max: usize) -> Vec<u64> {
    let n = p.dim();
    let mut state = FlipState::new(p, vec![0; n]);
    let mut mask = 0u64;
    let mut best = 0.0f64;
    let mut cands: Vec<(u64, f64)> = vec![(0, 0.0)];
    let total: u64 = 1u64 << n;
    for step in 1..total {
        let i = step.trailing_zeros() as usize;
        state.flip(i);
        mask ^= 1 << i;
        if state.k() > k_max {
            continue;
        }
        let e = state.energy();
        if e <= best + SCAN_TOL {
            if e < best {
                best = e;
            }
            cands.push((mask, e));
            if cands.len() > 4096 {
                cands.retain(|c| c.1 <= best + SCAN_TOL);
            }
        }
    }
    cands
        .into_iter()
        .filter(|c| c.1 <= best + SCAN_TOL)
        .map(|c| c.0)
        .collect()
}
