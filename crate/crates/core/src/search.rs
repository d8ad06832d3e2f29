//! Choosing `alpha`: bisection on `[0, 1]` against an accuracy oracle, and a
//! plain grid sweep for plotting cardinality and accuracy against `alpha`.
//!
//! Larger `alpha` favours importance over redundancy and so selects more
//! APs. Each bisection step solves the QUBO at the interval midpoint and
//! scores the selection; if accuracy falls short of the full-set accuracy
//! the lower bound moves up (more APs), otherwise the upper bound moves down.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locate::AccuracyOracle;
use crate::qubo::QuboInstance;
use crate::selection;
use crate::solver::QuboSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Interval width, accuracy slack and an iteration cap.
    #[default]
    Robust,
    /// Literal do-while on accuracy improvement `acc - prev_acc >= epsilon`.
    PaperFaithful,
}

impl std::str::FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "robust" => Ok(SearchMode::Robust),
            "paper-faithful" | "paper_faithful" => Ok(SearchMode::PaperFaithful),
            other => Err(Error::Config(format!(
                "unknown search mode {other:?} (expected robust or paper-faithful)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub epsilon: f64,
    pub alpha_precision: f64,
    pub max_iterations: usize,
    pub mode: SearchMode,
    pub accuracy_slack: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            epsilon: 0.001,
            alpha_precision: 1.0 / 1024.0,
            max_iterations: 12,
            mode: SearchMode::Robust,
            accuracy_slack: 0.01,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.alpha_precision > 0.0 && self.alpha_precision < 1.0) {
            return Err(Error::Config(format!(
                "alpha precision must lie in (0, 1), got {}",
                self.alpha_precision
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if self.accuracy_slack.is_nan() || self.accuracy_slack < 0.0 {
            return Err(Error::Config("accuracy slack must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub alpha: f64,
    pub k: usize,
    pub accuracy: f64,
    pub energy: f64,
    /// Interval `[a, b]` whose midpoint produced `alpha`; absent for sweeps.
    pub interval: Option<[f64; 2]>,
    pub selected: Vec<usize>,
    pub solver_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Interval narrower than the alpha precision.
    Interval,
    MaxIterations,
    /// An acceptable selection sits one AP above a known-insufficient one.
    NoKReduction,
    /// Paper-faithful: accuracy improved by less than epsilon.
    Epsilon,
    GridExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub mode: Option<SearchMode>,
    pub n_aps: usize,
    pub base_accuracy: f64,
    pub iterations: Vec<IterationRecord>,
    pub result_alpha: f64,
    pub result_k: usize,
    pub result_accuracy: f64,
    pub result_selected: Vec<usize>,
    /// No iterate met the accuracy target and the full AP set was returned.
    pub fell_back_to_full_set: bool,
    pub stop_reason: StopReason,
}

impl SearchTrace {
    pub fn result_x(&self) -> Vec<u8> {
        selection::from_indices(&self.result_selected, self.n_aps)
            .expect("trace indices are within n_aps")
    }

    /// `iteration,alpha,k,accuracy` rows.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iteration", "alpha", "k", "accuracy"])?;
        for r in &self.iterations {
            w.write_record([
                r.iteration.to_string(),
                r.alpha.to_string(),
                r.k.to_string(),
                r.accuracy.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

fn evaluate_alpha(
    problem: &QuboInstance,
    alpha: f64,
    oracle: &dyn AccuracyOracle,
    solver: &dyn QuboSolver,
    iteration: usize,
    interval: Option<[f64; 2]>,
) -> Result<IterationRecord> {
    let inst = problem.with_alpha(alpha)?;
    let sol = solver.solve(&inst)?;
    if sol.x.len() != inst.n() {
        return Err(Error::Solver(format!(
            "solver {} returned {} variables for a {}-AP problem",
            solver.name(),
            sol.x.len(),
            inst.n()
        )));
    }
    let accuracy = if sol.k == 0 {
        0.0
    } else {
        oracle.accuracy(&sol.x)?
    };
    Ok(IterationRecord {
        iteration,
        alpha,
        k: sol.k,
        accuracy,
        energy: sol.energy,
        interval,
        selected: sol.selected(),
        solver_ms: sol.wall_time.as_secs_f64() * 1e3,
    })
}

fn check_dims(problem: &QuboInstance, oracle: &dyn AccuracyOracle) -> Result<()> {
    if problem.n() != oracle.n_aps() {
        return Err(Error::Dimension {
            expected: oracle.n_aps(),
            got: problem.n(),
        });
    }
    if problem.n() == 0 {
        return Err(Error::InvalidData("no access points to select from".into()));
    }
    Ok(())
}

/// Bisection on `alpha`. `problem` supplies importance and redundancy; its
/// own `alpha` is ignored.
pub fn binary_search_alpha(
    problem: &QuboInstance,
    oracle: &dyn AccuracyOracle,
    solver: &dyn QuboSolver,
    cfg: &SearchConfig,
) -> Result<SearchTrace> {
    cfg.validate()?;
    check_dims(problem, oracle)?;
    let n = problem.n();
    let base_accuracy = oracle.accuracy(&vec![1u8; n])?;
    match cfg.mode {
        SearchMode::Robust => robust(problem, oracle, solver, cfg, base_accuracy),
        SearchMode::PaperFaithful => faithful(problem, oracle, solver, cfg, base_accuracy),
    }
}

fn robust(
    problem: &QuboInstance,
    oracle: &dyn AccuracyOracle,
    solver: &dyn QuboSolver,
    cfg: &SearchConfig,
    base_accuracy: f64,
) -> Result<SearchTrace> {
    let target = base_accuracy - cfg.accuracy_slack;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut best: Option<usize> = None;
    // largest cardinality seen to fall short of the target; the empty set always does
    let mut insufficient_k = 0usize;
    let stop_reason = loop {
        if b - a <= cfg.alpha_precision {
            break StopReason::Interval;
        }
        if iterations.len() >= cfg.max_iterations {
            break StopReason::MaxIterations;
        }
        let alpha = 0.5 * (a + b);
        let rec = evaluate_alpha(
            problem,
            alpha,
            oracle,
            solver,
            iterations.len(),
            Some([a, b]),
        )?;
        if rec.accuracy >= target {
            let better = best.is_none_or(|i| {
                let cur = &iterations[i];
                (rec.k, -rec.accuracy) < (cur.k, -cur.accuracy)
            });
            if better {
                best = Some(iterations.len());
            }
        } else {
            insufficient_k = insufficient_k.max(rec.k);
        }
        if rec.accuracy < base_accuracy {
            a = alpha;
        } else {
            b = alpha;
        }
        iterations.push(rec);
        if let Some(i) = best {
            if iterations[i].k <= insufficient_k + 1 {
                break StopReason::NoKReduction;
            }
        }
    };
    Ok(finish(
        problem.n(),
        Some(SearchMode::Robust),
        base_accuracy,
        iterations,
        best,
        stop_reason,
    ))
}

fn faithful(
    problem: &QuboInstance,
    oracle: &dyn AccuracyOracle,
    solver: &dyn QuboSolver,
    cfg: &SearchConfig,
    base_accuracy: f64,
) -> Result<SearchTrace> {
    let (mut a, mut b) = (0.0f64, 1.0f64);
    // prev_acc is read before its first assignment in the pseudocode; it
    // starts from the full-set accuracy here
    let mut acc = base_accuracy;
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let stop_reason = loop {
        let prev_acc = acc;
        let alpha = 0.5 * (a + b);
        let rec = evaluate_alpha(
            problem,
            alpha,
            oracle,
            solver,
            iterations.len(),
            Some([a, b]),
        )?;
        acc = rec.accuracy;
        if acc < base_accuracy {
            a = alpha;
        } else {
            b = alpha;
        }
        iterations.push(rec);
        if acc - prev_acc < cfg.epsilon {
            break StopReason::Epsilon;
        }
        if iterations.len() >= cfg.max_iterations {
            break StopReason::MaxIterations;
        }
    };
    let last = iterations.len() - 1;
    Ok(finish(
        problem.n(),
        Some(SearchMode::PaperFaithful),
        base_accuracy,
        iterations,
        Some(last),
        stop_reason,
    ))
}

fn finish(
    n_aps: usize,
    mode: Option<SearchMode>,
    base_accuracy: f64,
    iterations: Vec<IterationRecord>,
    chosen: Option<usize>,
    stop_reason: StopReason,
) -> SearchTrace {
    let (result_alpha, result_k, result_accuracy, result_selected, fell_back) = match chosen {
        Some(i) => {
            let r = &iterations[i];
            (r.alpha, r.k, r.accuracy, r.selected.clone(), false)
        }
        None => (1.0, n_aps, base_accuracy, (0..n_aps).collect(), true),
    };
    SearchTrace {
        mode,
        n_aps,
        base_accuracy,
        iterations,
        result_alpha,
        result_k,
        result_accuracy,
        result_selected,
        fell_back_to_full_set: fell_back,
        stop_reason,
    }
}

/// Solves and scores every `alpha` in `grid` (ascending, within `[0, 1]`).
/// The reported result is the smallest selection within `accuracy_slack` of
/// the full-set accuracy.
pub fn sweep_alpha(
    problem: &QuboInstance,
    oracle: &dyn AccuracyOracle,
    solver: &dyn QuboSolver,
    grid: &[f64],
    accuracy_slack: f64,
) -> Result<SearchTrace> {
    check_dims(problem, oracle)?;
    if grid.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()));
    }
    if grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::Config("alpha grid values must lie in [0, 1]".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("alpha grid must be ascending".into()));
    }
    let base_accuracy = oracle.accuracy(&vec![1u8; problem.n()])?;
    let iterations = grid
        .par_iter()
        .enumerate()
        .map(|(i, &alpha)| evaluate_alpha(problem, alpha, oracle, solver, i, None))
        .collect::<Result<Vec<_>>>()?;
    let target = base_accuracy - accuracy_slack;
    let best = iterations
        .iter()
        .filter(|r| r.accuracy >= target)
        .min_by(|x, y| {
            x.k.cmp(&y.k)
                .then(y.accuracy.total_cmp(&x.accuracy))
                .then(x.iteration.cmp(&y.iteration))
        })
        .map(|r| r.iteration);
    Ok(finish(
        problem.n(),
        None,
        base_accuracy,
        iterations,
        best,
        StopReason::GridExhausted,
    ))
}

/// `points` evenly spaced values from 0 to 1 inclusive.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.5],
        p => (0..p).map(|i| i as f64 / (p - 1) as f64).collect(),
    }
}
