//! Experiment harness around `gftbench-core`: graph bundle I/O, synthetic
//! stochastic block models, stratified transductive splits, bound-vs-gap
//! sweeps, regularizer ablations, and the statistics the result tables
//! need.

pub mod ablate;
pub mod bundle;
pub mod dataset;
pub mod error;
pub mod kv;
pub mod sbm;
pub mod split;
pub mod stats;
pub mod sweep;

pub use ablate::{regularizer_ablation, AblationRow, AblationSettings};
pub use bundle::{load_graph_bundle, load_graph_bundle_with, write_graph_bundle, BundleOptions};
pub use dataset::PreparedDataset;
pub use error::{HarnessError, Result};
pub use sbm::{generate_sbm, SbmParams};
pub use split::{make_split, Split};
pub use stats::{correlate, paired_test, CorrelationReport, PairedTest};
pub use sweep::{analyze_sweep, run_sweep, run_sweep_with, SweepRow, SweepSettings, SweepSummary};
