//! `apsel`: access-point selection from the command line.
//!
//! Settings come from an optional TOML file (`--config`); any flag given on
//! the command line replaces the matching config value. Every subcommand
//! writes its artifacts to `--out` and prints its main result as JSON on
//! stdout. Errors exit with the stage code: 2 config, 3 data, 4 solver,
//! 5 localizer.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use apsel_core::dataset::split;
use apsel_core::locate::{ClassifierKind, Localizer};
use apsel_core::pipeline::{
    bench, prepare, run_pipeline, run_sweep, write_json, write_stats, RunConfig, SolutionRecord,
};
use apsel_core::search::SearchMode;
use apsel_core::solver::{QuboSolver, SolverSpec};
use apsel_core::synthetic::generate;
use apsel_core::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "apsel",
    version,
    about = "QUBO access-point selection for floor localization"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the split, the annealer, the forest and the generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Termination rule for the alpha search.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args, Debug)]
#[command(next_help_heading = "Dataset")]
struct DataArgs {
    /// Fingerprint CSV. Without it (and without a path in the config) the
    /// built-in synthetic dataset is used.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Header prefix of the RSS columns.
    #[arg(long, global = true)]
    rss_prefix: Option<String>,
    /// RSS columns by index, `start,end` with `end` exclusive.
    #[arg(long, global = true, value_parser = parse_index_pair)]
    rss_columns: Option<[usize; 2]>,
    /// Header of the floor label column.
    #[arg(long, global = true)]
    floor_column: Option<String>,
    /// Value marking an AP as not detected.
    #[arg(long, global = true, allow_hyphen_values = true)]
    sentinel: Option<f64>,
    /// Declared signal range `min,max` in dBm.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_range)]
    rss_range: Option<(f64, f64)>,
    /// Histogram bins per AP, the last one reserved for not-detected.
    #[arg(long, global = true)]
    bins: Option<usize>,
    /// Share of each floor's samples held out for accuracy.
    #[arg(long, global = true)]
    test_fraction: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Importance vector, redundancy matrix and their summaries.
    Stats,
    /// Solve the QUBO once at a fixed alpha.
    Solve {
        /// Weight of importance against redundancy, in [0, 1].
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        solver: SolverArgs,
        /// Also write the QUBO matrix.
        #[arg(long, value_enum)]
        matrix: Option<MatrixFormat>,
    },
    /// Full pipeline: bisection on alpha against held-out floor accuracy.
    Auto {
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        classifier: ClassifierArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Score an evenly spaced alpha grid.
    Sweep {
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        classifier: ClassifierArgs,
        /// Grid size including both endpoints.
        #[arg(long)]
        points: Option<usize>,
        /// Accepted accuracy loss when picking the reported iterate.
        #[arg(long)]
        accuracy_slack: Option<f64>,
    },
    /// Floor accuracy of a selection (default: every AP).
    Evaluate {
        #[command(flatten)]
        classifier: ClassifierArgs,
        /// JSON file holding `{"x": [ap ids]}` (e.g. selection.json) or a
        /// bare list of ids.
        #[arg(long)]
        selection: Option<PathBuf>,
    },
    /// Run the same search with several solvers and time them.
    Bench {
        /// Comma-separated solvers.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "sa")]
        solvers: Vec<SolverKind>,
        #[command(flatten)]
        anneal: AnnealArgs,
        /// Largest n the exhaustive solver accepts.
        #[arg(long)]
        exhaustive_cap: Option<usize>,
        #[command(flatten)]
        classifier: ClassifierArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Write the synthetic dataset as CSV plus a JSON layout of its APs.
    GenSynthetic {
        /// Rows (fingerprints).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        floors: Option<usize>,
        /// APs strong on exactly one floor.
        #[arg(long)]
        informative: Option<usize>,
        /// Noisy affine copies of informative APs.
        #[arg(long)]
        redundant: Option<usize>,
        /// APs carrying no floor information.
        #[arg(long)]
        noise: Option<usize>,
        /// CSV path (default: `<out>/synthetic.csv`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
#[command(next_help_heading = "Solver")]
struct SolverArgs {
    /// QUBO solver.
    #[arg(long, value_enum)]
    solver: Option<SolverKind>,
    /// Largest n the exhaustive solver accepts.
    #[arg(long)]
    exhaustive_cap: Option<usize>,
    #[command(flatten)]
    anneal: AnnealArgs,
}

#[derive(Args, Debug)]
#[command(next_help_heading = "Annealing")]
struct AnnealArgs {
    /// Sweeps over all bits per restart.
    #[arg(long)]
    sa_sweeps: Option<usize>,
    /// Independent restarts; the best result wins.
    #[arg(long)]
    sa_restarts: Option<usize>,
    /// Initial temperature (default: max |P_ij| * n).
    #[arg(long)]
    sa_t0: Option<f64>,
    /// Geometric cooling factor per sweep.
    #[arg(long)]
    sa_cooling: Option<f64>,
}

#[derive(Args, Debug)]
#[command(next_help_heading = "Classifier")]
struct ClassifierArgs {
    /// Floor classifier behind the accuracy oracle.
    #[arg(long, value_enum)]
    classifier: Option<ClassifierChoice>,
    /// Neighbours for knn.
    #[arg(long)]
    knn_k: Option<usize>,
    /// Trees in the random forest.
    #[arg(long)]
    forest_trees: Option<usize>,
}

#[derive(Args, Debug)]
#[command(next_help_heading = "Search")]
struct SearchArgs {
    /// Minimum accuracy gain that keeps the paper-faithful loop going.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Robust mode stops once the alpha interval is this narrow.
    #[arg(long)]
    alpha_precision: Option<f64>,
    /// Cap on solver/oracle iterations.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Accepted accuracy loss against the full AP set.
    #[arg(long)]
    accuracy_slack: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Robust,
    PaperFaithful,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SolverKind {
    Sa,
    Exhaustive,
}

impl SolverKind {
    fn name(self) -> &'static str {
        match self {
            SolverKind::Sa => "sa",
            SolverKind::Exhaustive => "exhaustive",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ClassifierChoice {
    Knn,
    Forest,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MatrixFormat {
    /// `qubo.csv`, n rows of n values.
    Dense,
    /// `qubo.triplets`, one `i j value` line per nonzero.
    Triplets,
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> std::result::Result<(T, T), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated values, got {s:?}"))?;
    let p = |v: &str| {
        v.trim()
            .parse::<T>()
            .map_err(|_| format!("cannot parse {v:?}"))
    };
    Ok((p(a)?, p(b)?))
}

fn parse_index_pair(s: &str) -> std::result::Result<[usize; 2], String> {
    parse_pair(s).map(|(a, b)| [a, b])
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    parse_pair(s)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl GlobalArgs {
    /// Config file (or defaults) with every given flag applied on top.
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.out, self.out.clone());
        set(
            &mut cfg.search.mode,
            self.mode.map(|m| match m {
                Mode::Robust => SearchMode::Robust,
                Mode::PaperFaithful => SearchMode::PaperFaithful,
            }),
        );
        let d = &self.data;
        if d.data.is_some() {
            cfg.dataset.path = d.data.clone();
        }
        if let Some(prefix) = &d.rss_prefix {
            // an explicit prefix beats a column range from the config
            cfg.dataset.rss_prefix = prefix.clone();
            cfg.dataset.rss_columns = None;
        }
        if d.rss_columns.is_some() {
            cfg.dataset.rss_columns = d.rss_columns;
        }
        set(&mut cfg.dataset.floor_column, d.floor_column.clone());
        set(&mut cfg.dataset.sentinel, d.sentinel);
        if let Some((lo, hi)) = d.rss_range {
            cfg.dataset.rss_min = lo;
            cfg.dataset.rss_max = hi;
        }
        set(&mut cfg.bins, d.bins);
        set(&mut cfg.test_fraction, d.test_fraction);
        Ok(cfg)
    }
}

impl AnnealArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let a = &mut cfg.solver.anneal;
        set(&mut a.sweeps, self.sa_sweeps);
        set(&mut a.restarts, self.sa_restarts);
        if self.sa_t0.is_some() {
            a.initial_temperature = self.sa_t0;
        }
        set(&mut a.cooling_rate, self.sa_cooling);
    }
}

impl SolverArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(
            &mut cfg.solver.name,
            self.solver.map(|s| s.name().to_string()),
        );
        set(&mut cfg.solver.exhaustive_cap, self.exhaustive_cap);
        self.anneal.apply(cfg);
    }
}

impl ClassifierArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let c = &mut cfg.classifier;
        set(
            &mut c.kind,
            self.classifier.map(|k| match k {
                ClassifierChoice::Knn => ClassifierKind::Knn,
                ClassifierChoice::Forest => ClassifierKind::Forest,
            }),
        );
        set(&mut c.k_neighbors, self.knn_k);
        set(&mut c.trees, self.forest_trees);
    }
}

impl SearchArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let s = &mut cfg.search;
        set(&mut s.epsilon, self.epsilon);
        set(&mut s.alpha_precision, self.alpha_precision);
        set(&mut s.max_iterations, self.max_iterations);
        set(&mut s.accuracy_slack, self.accuracy_slack);
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| Error::io("<stdout>", e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// The effective configuration, saved next to the artifacts it produced.
fn write_config(cfg: &RunConfig) -> Result<()> {
    let path = cfg.out.join("config.toml");
    let text = cfg.seeded().to_toml_string()?;
    create(&path)?
        .write_all(text.as_bytes())
        .map_err(|e| Error::io(&path, e))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SelectionFile {
    Record { x: Vec<String> },
    Ids(Vec<String>),
}

fn read_selection(path: &Path, ap_ids: &[String]) -> Result<Vec<u8>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ids = match serde_json::from_str::<SelectionFile>(&text)
        .map_err(|e| Error::Config(format!("{}: not a selection file: {e}", path.display())))?
    {
        SelectionFile::Record { x } | SelectionFile::Ids(x) => x,
    };
    let record = SolutionRecord {
        x: ids,
        energy: 0.0,
        k: 0,
        solver: String::new(),
        wall_time_ms: 0.0,
        alpha: 0.0,
    };
    record.to_x(ap_ids)
}

#[derive(Serialize)]
struct SyntheticLayout {
    csv: String,
    informative: Vec<String>,
    /// `[copy, source]` AP ids.
    redundant: Vec<[String; 2]>,
    noise: Vec<String>,
    summary: apsel_core::dataset::DatasetSummary,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = cli.global.config()?;
    match cli.command {
        Command::Stats => {
            let prepared = prepare(&cfg)?;
            let dir = cfg.out.as_path();
            write_stats(
                dir,
                prepared.ap_ids(),
                prepared.problem.importance(),
                prepared.problem.redundancy(),
            )?;
            write_json(&dir.join("dataset.json"), &prepared.data.summary())?;
            print_json(&prepared.stats_summary())
        }
        Command::Solve {
            alpha,
            solver,
            matrix,
        } => {
            solver.apply(&mut cfg);
            let prepared = prepare(&cfg)?;
            let spec = cfg.seeded().solver.spec()?;
            let problem = prepared.problem.with_alpha(alpha)?;
            let sol = spec.solve(&problem)?;
            let record = SolutionRecord::from_solution(&sol, alpha, prepared.ap_ids());
            let dir = cfg.out.as_path();
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            write_json(&dir.join("solution.json"), &record)?;
            match matrix {
                Some(MatrixFormat::Dense) => problem
                    .build_matrix()
                    .write_dense_csv(create(&dir.join("qubo.csv"))?)?,
                Some(MatrixFormat::Triplets) => {
                    let path = dir.join("qubo.triplets");
                    let mut w = create(&path)?;
                    problem.build_matrix().write_triplets(&mut w)?;
                    w.flush().map_err(|e| Error::io(&path, e))?;
                }
                None => {}
            }
            print_json(&record)
        }
        Command::Auto {
            solver,
            classifier,
            search,
        } => {
            solver.apply(&mut cfg);
            classifier.apply(&mut cfg);
            search.apply(&mut cfg);
            cfg.validate()?;
            write_config(&cfg)?;
            let report = run_pipeline(&cfg)?;
            eprintln!(
                "selected {} of {} APs at alpha {:.6}: accuracy {:.4} (full set {:.4})",
                report.search.result_k,
                report.dataset.n,
                report.search.result_alpha,
                report.selected_accuracy.accuracy,
                report.full_accuracy.accuracy
            );
            print_json(&report.selection)
        }
        Command::Sweep {
            solver,
            classifier,
            points,
            accuracy_slack,
        } => {
            solver.apply(&mut cfg);
            classifier.apply(&mut cfg);
            set(&mut cfg.sweep_points, points);
            set(&mut cfg.search.accuracy_slack, accuracy_slack);
            cfg.validate()?;
            write_config(&cfg)?;
            let report = run_sweep(&cfg)?;
            print_json(&report.search)
        }
        Command::Evaluate {
            classifier,
            selection,
        } => {
            classifier.apply(&mut cfg);
            cfg.validate()?;
            let cfg = cfg.seeded();
            let data = cfg.dataset.load()?;
            let x = match &selection {
                Some(p) => read_selection(p, data.ap_ids())?,
                None => vec![1u8; data.n_aps()],
            };
            let (train_set, test_set) = split(&data, cfg.test_fraction, cfg.seed)?;
            let report = Localizer::new(train_set, test_set, cfg.classifier.clone())?.report(&x)?;
            let dir = cfg.out.as_path();
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            write_json(&dir.join("evaluation.json"), &report)?;
            print_json(&report)
        }
        Command::Bench {
            solvers,
            anneal,
            exhaustive_cap,
            classifier,
            search,
        } => {
            anneal.apply(&mut cfg);
            set(&mut cfg.solver.exhaustive_cap, exhaustive_cap);
            classifier.apply(&mut cfg);
            search.apply(&mut cfg);
            let specs = solvers
                .iter()
                .map(|s| {
                    SolverSpec::from_name(
                        s.name(),
                        cfg.solver.anneal.clone(),
                        cfg.solver.exhaustive_cap,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            cfg.validate()?;
            write_config(&cfg)?;
            print_json(&bench(&cfg, &specs)?)
        }
        Command::GenSynthetic {
            samples,
            floors,
            informative,
            redundant,
            noise,
            output,
        } => {
            let s = &mut cfg.dataset.synthetic;
            set(&mut s.samples, samples);
            set(&mut s.floors, floors);
            set(&mut s.informative, informative);
            set(&mut s.redundant, redundant);
            set(&mut s.noise, noise);
            set(&mut s.seed, cli.global.seed);
            let synth = generate(s)?;
            let csv = output.unwrap_or_else(|| cfg.out.join("synthetic.csv"));
            let mut w = create(&csv)?;
            synth.dataset.write_csv(&mut w)?;
            w.flush().map_err(|e| Error::io(&csv, e))?;
            let ids = synth.dataset.ap_ids();
            let layout = SyntheticLayout {
                csv: csv.display().to_string(),
                informative: synth.informative.iter().map(|&i| ids[i].clone()).collect(),
                redundant: synth
                    .redundant
                    .iter()
                    .map(|&(c, s)| [ids[c].clone(), ids[s].clone()])
                    .collect(),
                noise: synth.noise.iter().map(|&i| ids[i].clone()).collect(),
                summary: synth.dataset.summary(),
            };
            write_json(&csv.with_extension("json"), &layout)?;
            print_json(&layout)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("apsel: {} error: {e}", e.stage().as_str());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
