//! Data loading, preprocessing, experiment protocols and reports.

pub mod io;
pub mod preprocess;
pub mod protocol;
pub mod report;

pub use io::{load_csv, load_seeds, write_seeds, NamedDataset};
pub use preprocess::{preprocess, PreprocessPolicy, Transform};
pub use protocol::{
    run, run_real, run_seed_sweep, run_synthetic_grid, split, Algorithm, DatasetSpec,
    ExperimentConfig, Mode, TrialRecord,
};
pub use report::{aggregate, emit_report, Aggregate, Report, ReportFormat};
