//! Deterministic two-factor image corruption suites and robustness analysis.
//!
//! The crate is organised bottom-up:
//!
//! * [`raster`] holds the image and dataset types, CIFAR-10/PNG I/O, the
//!   synthetic shape dataset and the seed-derivation contract.
//! * [`perturb`] implements salt & pepper noise, Gaussian noise, rotation and
//!   ordered composition of those steps.
//! * [`suite`] enumerates the 69 benchmark groups and writes/verifies suites.
//! * [`stats`] has the population statistics, correlation coefficients and
//!   quadrant placement used for mean-accuracy/CV analysis.
//! * [`report`] turns predictions into per-run summaries and cross-run
//!   aggregates.
//! * [`mcvplot`] renders mean-accuracy vs. CV scatter plots as SVG.
//! * [`protocol`] runs the nine training runs end to end on synthetic data.
//! * [`baseline`] is a small softmax-regression classifier that runs the
//!   whole train/evaluate protocol without an external ML stack.

pub mod baseline;
pub mod error;
pub mod mcvplot;
pub mod perturb;
pub mod protocol;
pub mod raster;
pub mod report;
pub mod stats;
pub mod suite;

pub use error::{Error, Result};
pub use perturb::{PerturbationChain, PerturbationStep};
pub use raster::{LabeledDataset, RasterImage, SeedSpec};
pub use report::{AggregateAnalysis, ClassifierRun, PredictionRecord, RobustnessSummary};
pub use stats::{AccuracyVector, QuadrantLabel, ReferencePoint};
pub use suite::{GroupSpec, SuiteManifest};

/// Version tag written into manifests and reports; readers reject other values.
pub const FORMAT_VERSION: &str = "perturbench/1";
