//! Access-point selection for RSS fingerprint floor localization.
//!
//! Selection is posed as a QUBO over binary inclusion variables: reward the
//! per-AP association with the floor label (Cramér's V), penalise pairwise
//! correlation between selected APs (absolute Pearson), weighted by a single
//! balancing parameter `alpha`. Sweeping `alpha` from 0 to 1 grows the
//! selected set, and a bisection on `alpha` against a held-out accuracy
//! oracle finds a small subset that keeps full-set accuracy.
//!
//! ```no_run
//! use apsel_core::prelude::*;
//!
//! let data = generate(&SyntheticConfig::default())?.dataset;
//! let (train_set, test_set) = split(&data, 0.3, 42)?;
//! let problem = QuboInstance::new(
//!     importance_vector(&discretize(&train_set, 10)?),
//!     redundancy_matrix(&train_set),
//!     0.5,
//! )?;
//! let oracle = Localizer::new(train_set, test_set, ClassifierSpec::default())?;
//! let solver = SolverSpec::Sa(AnnealConfig::default());
//! let trace = binary_search_alpha(&problem, &oracle, &solver, &SearchConfig::default())?;
//! println!("{} APs at alpha = {}", trace.result_k, trace.result_alpha);
//! # Ok::<(), apsel_core::Error>(())
//! ```

pub mod dataset;
pub mod error;
pub mod locate;
pub mod pipeline;
pub mod qubo;
pub mod search;
pub mod selection;
pub mod solver;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result, Stage};

pub mod prelude {
    pub use crate::dataset::{
        discretize, reduce, split, split_indices, CsvSchema, DiscretizedDataset,
        FingerprintDataset, RssColumns, RssRange,
    };
    pub use crate::error::{Error, Result};
    pub use crate::locate::{
        accuracy_for_selection, evaluate, train, AccuracyOracle, AccuracyReport, ClassifierKind,
        ClassifierSpec, Localizer,
    };
    pub use crate::qubo::{QuboInstance, QuboMatrix};
    pub use crate::search::{
        binary_search_alpha, sweep_alpha, SearchConfig, SearchMode, SearchTrace,
    };
    pub use crate::solver::{
        constrained_min, solve_exhaustive, solve_sa, AnnealConfig, QuboSolver, Solution, SolverSpec,
    };
    pub use crate::stats::{
        importance_vector, redundancy_matrix, ImportanceVector, RedundancyMatrix,
    };
    pub use crate::synthetic::{generate, SyntheticConfig};
}
