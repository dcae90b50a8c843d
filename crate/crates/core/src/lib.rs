//! Score-based generation of molecular conformations.
//!
//! The pipeline: a molecular graph is extended with virtual bonds between
//! second and third neighbors ([`molgraph`]), a message-passing network
//! regresses the gradient of the log-density of interatomic distances
//! ([`scorenet`], trained with denoising score matching in [`dsm`]), the
//! chain rule converts per-edge distance gradients into roto-translation
//! equivariant per-atom coordinate gradients ([`fields`]), and annealed
//! Langevin dynamics integrates those gradients into 3D structures
//! ([`sampler`]). Generated ensembles are scored against references with
//! Kabsch RMSD, COV/MAT/MIS and kernel MMD ([`metrics`]). [`toydata`]
//! provides synthetic molecules with known conformational distributions
//! for desk-scale training runs.

pub mod autodiff;
pub mod dsm;
pub mod fields;
pub mod geom;
pub mod metrics;
pub mod molgraph;
pub mod sampler;
pub mod scorenet;
pub mod testkit;
pub mod toydata;

pub use dsm::{make_schedule, NoiseSchedule, TrainConfig, TrainOutcome};
pub use fields::CoordinateScore;
pub use metrics::EnsembleMetricsReport;
pub use molgraph::{BondKind, Conformation, DistanceVector, MolecularGraph};
pub use sampler::LangevinConfig;
pub use scorenet::{ScoreNetHyper, ScoreNetParams};
pub use toydata::{ToyFamily, ToySpec};
