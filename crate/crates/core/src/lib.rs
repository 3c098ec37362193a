//! Analysis of two-layer business ecosystems: physical stakeholders and
//! their virtual counterparts joined in one undirected network.
//!
//! Modules cover ingestion, community detection with a degree-corrected
//! blockmodel, cost-weighted efficiency, degree statistics and paired
//! nonparametric tests, a synthetic generator, and the end-to-end
//! [`pipeline`].

pub mod communities;
pub mod efficiency;
pub mod error;
pub mod graph;
pub mod pipeline;
pub mod rng;
pub mod stats;
pub mod synthgen;

pub use communities::{
    composition, dcsbm_objective, fit_dcsbm, gini, mixing_matrix, modularity,
    normalized_modularity, CompositionReport, MixingMatrix, ModularityScore, ModularityVariant,
    Partition,
};
pub use efficiency::{compare_components, ComparisonReport, CostScheme, EfficiencyReport};
pub use error::{Error, Result};
pub use graph::{EcosystemGraph, IngestOptions, Node, NodeKind};
pub use pipeline::{run_pipeline, AnalysisReport, PipelineConfig};
pub use stats::TestResult;
pub use synthgen::{generate_coupled, SynthParams};
