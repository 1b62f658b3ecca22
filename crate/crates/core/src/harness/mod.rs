//! End-to-end checks built on the core modules: the gauge family, the
//! coefficient relations, weighted-estimate probes and ladder experiments.

pub mod carleman;
pub mod experiments;
pub mod gauge;
pub mod relations;

pub use carleman::{carleman_probe, dirichlet_test_family, CarlemanKind, CarlemanProbe, CarlemanReport};
pub use experiments::{
    gauge_equivalence_experiment, separation_experiment, GaugeExperimentReport, QBump, SeparationReport, TripleRecipe,
};
pub use gauge::{gauge_transform, EtaProfile, GaugeSpec};
pub use relations::{check_relations, corollary_pipeline, CorollaryCase, CorollaryReport, RelationResidual};
