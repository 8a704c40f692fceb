//! Weight prediction for partially weighted directed networks.
//!
//! A directed graph `G = (O, T, E)` carries known weights on a training subset
//! of its origins, terminals or edges. Every element gets an integer count
//! from the training weights around it, the distance between two elements is
//! the difference of their counts, and unknown weights are predicted with a
//! kNN rule under that distance or with a kernel expansion over the counts.
//!
//! Modules, bottom-up:
//!
//! - [`graph`]: the digraph, partial weightings and neighbor relations.
//! - [`metric`]: count profiles and the count metrics.
//! - [`knn`], [`svm`]: the two predictors.
//! - [`fairness`]: fairness/goodness vertex scores used as vertex ground truth.
//! - [`ingest`]: edge-list parsing, rescaling, sampling and splits.
//! - [`eval`]: MAE/RMSE and the experiment pipeline.

pub mod error;
pub mod eval;
pub mod fairness;
pub mod graph;
pub mod ingest;
pub mod knn;
pub mod metric;
pub mod svm;

pub use error::{Error, ErrorClass, Result};
pub use eval::{evaluate, mae, rmse, run_experiment, run_predictions, EvaluationReport, ExperimentConfig, Method};
pub use fairness::{compute_fairness_goodness, FgParams, FgScores};
pub use graph::{
    neighbors_of_edge, neighbors_of_origin, neighbors_of_terminal, DirectedGraph, EdgeId, Element, NeighborOptions,
    OriginId, PartialWeighting, TerminalId, Variant, WeightRange,
};
pub use ingest::{DatasetSpec, Snapshot, SplitPlan, TrainSize};
pub use knn::{DenominatorPolicy, KnnConfig, KnnRegressor, ZeroDistancePolicy};
pub use metric::{Bandwidth, CountProfile, MetricValue, ProfileTable};
pub use svm::{KernelKind, KernelSpec, SvmConfig, SvmModel};
