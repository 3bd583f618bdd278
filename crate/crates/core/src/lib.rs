//! Beamwidth optimization for relay-assisted millimetre-wave small cells.
//!
//! A single small-cell base station (SCBS) serves UEs either directly or via
//! anchor UEs that relay over device-to-device links. Narrow beams buy gain
//! but cost alignment time; [`pso`] searches per-link beamwidths that
//! maximize the network welfare computed by [`welfare`].
//!
//! The math is generic over [`Scalar`] (`f32` or `f64`). The aliases below fix
//! the common choices.

// NaN must fail the range checks, so they are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod pso;
pub mod radio;
pub mod scalar;
pub mod scheduling;
pub mod topology;
pub mod welfare;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use scheduling::Mac;
pub use topology::{LinkKind, NodeId, Role};

pub type RadioParamsF64 = radio::RadioParams<f64>;
pub type RadioParamsF32 = radio::RadioParams<f32>;
pub type TopologyF64 = topology::Topology<f64>;
pub type TopologyF32 = topology::Topology<f32>;
pub type TopologyConfigF64 = topology::TopologyConfig<f64>;
pub type ScheduleWeightsF64 = scheduling::ScheduleWeights<f64>;
pub type BeamwidthVectorF64 = pso::BeamwidthVector<f64>;
pub type BeamwidthVectorF32 = pso::BeamwidthVector<f32>;
pub type SwarmConfigF64 = pso::SwarmConfig<f64>;
pub type RateReportF64 = welfare::RateReport<f64>;
