//! End-to-end runs: configuration, the load -> stats -> search -> evaluate
//! pipeline, on-disk artifacts, and solver benchmarking.
//!
//! One output directory per run holds `report.json`, `trace.csv`,
//! `trace.json`, `importance.csv`, `redundancy.csv`, `stats.json` and
//! `selection.json`. Each artifact is written as soon as its stage finishes,
//! so a failing later stage leaves the earlier files in place.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{
    discretize, split, CsvSchema, DatasetSummary, FingerprintDataset, RssColumns, RssRange,
    DEFAULT_BINS, DEFAULT_RSS_MAX, DEFAULT_RSS_MIN, DEFAULT_SENTINEL, DEFAULT_SPLIT_SEED,
    DEFAULT_TEST_FRACTION,
};
use crate::error::{Error, Result};
use crate::locate::{AccuracyReport, ClassifierSpec, Localizer};
use crate::qubo::QuboInstance;
use crate::search::{binary_search_alpha, sweep_alpha, uniform_grid, SearchConfig, SearchTrace};
use crate::solver::{AnnealConfig, QuboSolver, Solution, SolverSpec, DEFAULT_EXHAUSTIVE_CAP};
use crate::stats::{
    importance_vector, redundancy_matrix, ImportanceVector, RedundancyMatrix, StatsSummary,
};
use crate::synthetic::{generate, SyntheticConfig};

/// Where the fingerprint comes from and how to read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// CSV file; when absent the run uses the synthetic generator.
    pub path: Option<PathBuf>,
    pub rss_prefix: String,
    /// `[start, end)` column indices; overrides `rss_prefix` when set.
    pub rss_columns: Option<[usize; 2]>,
    pub floor_column: String,
    pub sentinel: f64,
    pub rss_min: f64,
    pub rss_max: f64,
    pub synthetic: SyntheticConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            path: None,
            rss_prefix: "WAP".into(),
            rss_columns: None,
            floor_column: "FLOOR".into(),
            sentinel: DEFAULT_SENTINEL,
            rss_min: DEFAULT_RSS_MIN,
            rss_max: DEFAULT_RSS_MAX,
            synthetic: SyntheticConfig::default(),
        }
    }
}

impl DatasetConfig {
    pub fn range(&self) -> RssRange {
        RssRange {
            min: self.rss_min,
            max: self.rss_max,
            sentinel: self.sentinel,
        }
    }

    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            rss_columns: match self.rss_columns {
                Some([start, end]) => RssColumns::Range { start, end },
                None => RssColumns::Prefix(self.rss_prefix.clone()),
            },
            floor_column: self.floor_column.clone(),
            range: self.range(),
        }
    }

    pub fn load(&self) -> Result<FingerprintDataset> {
        match &self.path {
            Some(p) => FingerprintDataset::load_csv(p, &self.schema()),
            None => Ok(generate(&self.synthetic)?.dataset),
        }
    }
}

/// Solver selection plus the settings of every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// `sa` or `exhaustive`.
    pub name: String,
    pub exhaustive_cap: usize,
    pub anneal: AnnealConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            name: "sa".into(),
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            anneal: AnnealConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn spec(&self) -> Result<SolverSpec> {
        let s = SolverSpec::from_name(&self.name, self.anneal.clone(), self.exhaustive_cap)?;
        s.validate()?;
        Ok(s)
    }
}

/// A complete, reproducible experiment description.
///
/// `seed` is copied into the split, the annealer and the forest before a
/// run; seeds written in the nested sections are overwritten. The synthetic
/// generator keeps its own seed because it defines the data, not the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub bins: usize,
    pub test_fraction: f64,
    pub out: PathBuf,
    /// Number of evenly spaced `alpha` values for sweeps.
    pub sweep_points: usize,
    pub dataset: DatasetConfig,
    pub classifier: ClassifierSpec,
    pub solver: SolverConfig,
    pub search: SearchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SPLIT_SEED,
            bins: DEFAULT_BINS,
            test_fraction: DEFAULT_TEST_FRACTION,
            out: PathBuf::from("apsel-out"),
            sweep_points: 101,
            dataset: DatasetConfig::default(),
            classifier: ClassifierSpec::default(),
            solver: SolverConfig::default(),
            search: SearchConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a TOML config. A relative dataset path is taken relative to
    /// the config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => {
                Error::Config(format!("config {} not found", path.display()))
            }
            _ => Error::io(path, e),
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(p), Some(dir)) = (&cfg.dataset.path, path.parent()) {
            if p.is_relative() {
                cfg.dataset.path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::Config(format!(
                "bins must be >= 2, got {}",
                self.bins
            )));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.sweep_points == 0 {
            return Err(Error::Config("sweep_points must be >= 1".into()));
        }
        self.dataset
            .range()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.classifier.validate()?;
        self.solver.spec()?;
        self.search.validate()
    }

    /// The config with the top-level seed pushed into every stochastic
    /// component.
    pub fn seeded(&self) -> Self {
        let mut c = self.clone();
        c.solver.anneal.seed = self.seed;
        c.classifier.seed = self.seed;
        c
    }
}

/// Milliseconds spent in each stage of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub load_ms: f64,
    pub split_ms: f64,
    pub discretize_ms: f64,
    pub importance_ms: f64,
    pub redundancy_ms: f64,
    pub search_ms: f64,
    pub evaluate_ms: f64,
    pub write_ms: f64,
    pub total_ms: f64,
}

/// A selection as emitted on disk: AP ids instead of a bit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub x: Vec<String>,
    pub energy: f64,
    pub k: usize,
    pub solver: String,
    pub wall_time_ms: f64,
    pub alpha: f64,
}

impl SolutionRecord {
    pub fn from_solution(sol: &Solution, alpha: f64, ap_ids: &[String]) -> Self {
        SolutionRecord {
            x: sol
                .selected()
                .into_iter()
                .map(|i| ap_ids[i].clone())
                .collect(),
            energy: sol.energy,
            k: sol.k,
            solver: sol.solver.clone(),
            wall_time_ms: sol.wall_time.as_secs_f64() * 1e3,
            alpha,
        }
    }

    /// Back to a bit vector over `ap_ids`.
    pub fn to_x(&self, ap_ids: &[String]) -> Result<Vec<u8>> {
        let mut x = vec![0u8; ap_ids.len()];
        for id in &self.x {
            let i = ap_ids
                .iter()
                .position(|a| a == id)
                .ok_or_else(|| Error::InvalidData(format!("selection names unknown AP {id:?}")))?;
            x[i] = 1;
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: DatasetSummary,
    pub n_train: usize,
    pub n_test: usize,
    pub stats: StatsSummary,
    pub solver: String,
    pub search: SearchTrace,
    pub selection: SolutionRecord,
    pub selected_fraction: f64,
    pub full_accuracy: AccuracyReport,
    pub selected_accuracy: AccuracyReport,
    /// File names inside the output directory.
    pub artifacts: Vec<String>,
    pub timings: StageTimings,
}

/// Loaded data with its split and statistics, ready for solving.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub data: FingerprintDataset,
    pub localizer: Localizer,
    /// Built from the training partition only; its own `alpha` is 0.
    pub problem: QuboInstance,
    pub timings: StageTimings,
}

impl Prepared {
    pub fn ap_ids(&self) -> &[String] {
        self.data.ap_ids()
    }

    pub fn stats_summary(&self) -> StatsSummary {
        StatsSummary {
            importance: self.problem.importance().summary(),
            redundancy: self.problem.redundancy().summary(),
        }
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// load -> split -> discretize -> importance/redundancy on the training rows.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let cfg = cfg.seeded();
    let mut timings = StageTimings::default();
    let t = Instant::now();
    let data = cfg.dataset.load()?;
    timings.load_ms = ms(t);
    let t = Instant::now();
    let (train_set, test_set) = split(&data, cfg.test_fraction, cfg.seed)?;
    timings.split_ms = ms(t);
    let t = Instant::now();
    let disc = discretize(&train_set, cfg.bins)?;
    timings.discretize_ms = ms(t);
    let t = Instant::now();
    let importance = importance_vector(&disc);
    timings.importance_ms = ms(t);
    let t = Instant::now();
    let redundancy = redundancy_matrix(&train_set);
    timings.redundancy_ms = ms(t);
    let problem = QuboInstance::new(importance, redundancy, 0.0)?;
    let localizer = Localizer::new(train_set, test_set, cfg.classifier.clone())?;
    Ok(Prepared {
        data,
        localizer,
        problem,
        timings,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create_file(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    use std::io::Write;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// `importance.csv`, `redundancy.csv` and `stats.json`.
pub fn write_stats(
    dir: &Path,
    ap_ids: &[String],
    importance: &ImportanceVector,
    redundancy: &RedundancyMatrix,
) -> Result<Vec<String>> {
    create_dir(dir)?;
    importance.write_csv(ap_ids, create_file(&dir.join("importance.csv"))?)?;
    redundancy.write_csv(ap_ids, create_file(&dir.join("redundancy.csv"))?)?;
    write_json(
        &dir.join("stats.json"),
        &StatsSummary {
            importance: importance.summary(),
            redundancy: redundancy.summary(),
        },
    )?;
    Ok(vec![
        "importance.csv".into(),
        "redundancy.csv".into(),
        "stats.json".into(),
    ])
}

/// `trace.csv` and `trace.json`.
pub fn write_trace(dir: &Path, trace: &SearchTrace) -> Result<Vec<String>> {
    create_dir(dir)?;
    trace.write_csv(create_file(&dir.join("trace.csv"))?)?;
    write_json(&dir.join("trace.json"), trace)?;
    Ok(vec!["trace.csv".into(), "trace.json".into()])
}

/// Solution record for the iterate a trace settled on.
pub fn trace_solution(
    trace: &SearchTrace,
    problem: &QuboInstance,
    solver: &str,
    ap_ids: &[String],
) -> Result<SolutionRecord> {
    let x = trace.result_x();
    let energy = problem.with_alpha(trace.result_alpha)?.energy(&x)?;
    let wall_time_ms = trace
        .iterations
        .iter()
        .find(|r| r.alpha == trace.result_alpha && r.selected == trace.result_selected)
        .map_or(0.0, |r| r.solver_ms);
    Ok(SolutionRecord {
        x: trace
            .result_selected
            .iter()
            .map(|&i| ap_ids[i].clone())
            .collect(),
        energy,
        k: trace.result_k,
        solver: if trace.fell_back_to_full_set {
            "full-set".into()
        } else {
            solver.into()
        },
        wall_time_ms,
        alpha: trace.result_alpha,
    })
}

/// How the search stage picks `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchKind {
    Bisection,
    Sweep,
}

/// Full pipeline with bisection on `alpha`, writing every artifact to
/// `cfg.out`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport> {
    run_with(cfg, SearchKind::Bisection)
}

/// Same as [`run_pipeline`] but scores an evenly spaced `alpha` grid.
pub fn run_sweep(cfg: &RunConfig) -> Result<RunReport> {
    run_with(cfg, SearchKind::Sweep)
}

fn run_with(cfg: &RunConfig, kind: SearchKind) -> Result<RunReport> {
    let started = Instant::now();
    let prepared = prepare(cfg)?;
    let cfg = cfg.seeded();
    let mut timings = prepared.timings.clone();
    let dir = cfg.out.as_path();
    let ap_ids = prepared.ap_ids().to_vec();

    let t = Instant::now();
    let mut artifacts = write_stats(
        dir,
        &ap_ids,
        prepared.problem.importance(),
        prepared.problem.redundancy(),
    )?;
    let mut write_ms = ms(t);

    let solver = cfg.solver.spec()?;
    let t = Instant::now();
    let trace = match kind {
        SearchKind::Bisection => {
            binary_search_alpha(&prepared.problem, &prepared.localizer, &solver, &cfg.search)?
        }
        SearchKind::Sweep => sweep_alpha(
            &prepared.problem,
            &prepared.localizer,
            &solver,
            &uniform_grid(cfg.sweep_points),
            cfg.search.accuracy_slack,
        )?,
    };
    timings.search_ms = ms(t);

    let t = Instant::now();
    artifacts.extend(write_trace(dir, &trace)?);
    let selection = trace_solution(&trace, &prepared.problem, solver.name(), &ap_ids)?;
    write_json(&dir.join("selection.json"), &selection)?;
    artifacts.push("selection.json".into());
    write_ms += ms(t);

    let t = Instant::now();
    let full_accuracy = prepared.localizer.report(&vec![1u8; ap_ids.len()])?;
    let selected_accuracy = prepared.localizer.report(&trace.result_x())?;
    timings.evaluate_ms = ms(t);

    artifacts.push("report.json".into());
    let mut report = RunReport {
        dataset: prepared.data.summary(),
        n_train: prepared.localizer.train.n_samples(),
        n_test: prepared.localizer.test.n_samples(),
        stats: prepared.stats_summary(),
        solver: solver.name().into(),
        selected_fraction: trace.result_k as f64 / ap_ids.len() as f64,
        search: trace,
        selection,
        full_accuracy,
        selected_accuracy,
        artifacts,
        timings,
    };
    let t = Instant::now();
    write_json(&dir.join("report.json"), &report)?;
    report.timings.write_ms = write_ms + ms(t);
    report.timings.total_ms = ms(started);
    // rewrite so the file carries the final timings
    write_json(&dir.join("report.json"), &report)?;
    Ok(report)
}

/// One benchmark row: the same bisection run with one solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub solver: String,
    pub n_aps: usize,
    pub iterations: usize,
    pub result_k: usize,
    pub result_alpha: f64,
    pub result_accuracy: f64,
    /// Time inside the solver, summed over iterations.
    pub solver_ms: f64,
    /// Whole search including the accuracy oracle.
    pub search_ms: f64,
}

/// Runs the configured search once per solver on identical inputs and
/// writes `bench.csv` and `bench.json` to `cfg.out`.
pub fn bench(cfg: &RunConfig, solvers: &[SolverSpec]) -> Result<Vec<BenchRow>> {
    if solvers.is_empty() {
        return Err(Error::Config("bench needs at least one solver".into()));
    }
    for s in solvers {
        s.validate()?;
    }
    let prepared = prepare(cfg)?;
    let cfg = cfg.seeded();
    let mut rows = Vec::with_capacity(solvers.len());
    for s in solvers {
        let s = match s {
            SolverSpec::Sa(a) => SolverSpec::Sa(AnnealConfig {
                seed: cfg.seed,
                ..a.clone()
            }),
            other => other.clone(),
        };
        let t = Instant::now();
        let trace = binary_search_alpha(&prepared.problem, &prepared.localizer, &s, &cfg.search)?;
        let search_ms = ms(t);
        rows.push(BenchRow {
            solver: s.name().into(),
            n_aps: trace.n_aps,
            iterations: trace.iterations.len(),
            result_k: trace.result_k,
            result_alpha: trace.result_alpha,
            result_accuracy: trace.result_accuracy,
            solver_ms: trace.iterations.iter().map(|r| r.solver_ms).sum(),
            search_ms,
        });
    }
    let dir = cfg.out.as_path();
    create_dir(dir)?;
    let mut w = csv::Writer::from_writer(create_file(&dir.join("bench.csv"))?);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(dir.join("bench.csv"), e))?;
    write_json(&dir.join("bench.json"), &rows)?;
    Ok(rows)
}
