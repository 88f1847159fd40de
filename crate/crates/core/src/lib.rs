//! Feed-forward neural network that assigns bone-metastasis samples to their
//! primary carcinoma (breast, lung or renal) from six multifractal parameters.
//!
//! Pipeline: [`features::expand_features`] builds 27 inputs (6 raw values and
//! their 21 pairwise products), [`features::fit_scaling`] z-scores them,
//! [`training::train`] fits a 27-s2-3 sigmoid network by batch gradient
//! descent on the regularized cross-entropy, and [`evaluation::evaluate`]
//! reports one-vs-rest metrics per class.
//!
//! Batch computations are split into fixed-size row chunks; with the
//! `parallel` feature (on by default) chunks run on the rayon pool. Partial
//! results are always combined in chunk order, so sequential and parallel
//! runs are bitwise identical.

pub mod dataio;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod features;
pub mod network;
pub mod training;

pub use dataio::{Dataset, GeneratorSpec, SplitSpec};
pub use error::{Error, Result};
pub use evaluation::{ClassMetrics, ConfusionCounts, EvaluationReport, MetricKind};
pub use exec::Execution;
pub use features::{CarcinomaClass, FeatureVector, MultifractalSample, ScalingParams, FEATURE_DIM};
pub use network::{Model, Prediction, Topology};
pub use training::{Gradients, InitEpsilon, TrainConfig, TrainReport};
