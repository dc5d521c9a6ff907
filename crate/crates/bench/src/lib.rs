//! Experiment driver: signal families, grid configs, seeded trial runs,
//! CSV output, summaries and an independent success checker.

pub mod check;
pub mod config;
pub mod families;
pub mod records;
pub mod runner;
pub mod summary;

pub use config::{parse_config, Cell, ConfigParse, SchemeKind};
pub use families::{generate_signal, FamilyKind, SignalFamily};
pub use records::RunRecord;
pub use runner::{run_grid, run_trial, TrialOutcome};
pub use summary::{summarize, Summary};
