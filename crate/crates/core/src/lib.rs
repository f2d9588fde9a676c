//! Identification of latent selection structure in sequential data.
//!
//! Given observations `X_1, .., X_N` in temporal order, [`discovery`]
//! classifies every dependent pair as a selection pair (both variables cause
//! a latent selection variable that is always conditioned on), a direct
//! relation, both, or a confounded pair (latent common cause). Queries go
//! through [`ci::CiProvider`], answered either by Fisher's z test on data or
//! by exact d-separation on a known graph.
//!
//! Numeric code is generic over [`Scalar`]; the `*64`/`*32` aliases below
//! fix the usual choices.

pub mod ci;
pub mod discovery;
pub mod eval;
pub mod example;
pub mod graph;
pub mod scalar;
pub mod simulator;

pub use ci::{CiError, CiProvider, CiQuery, CiTestResult, DSeparationOracle};
pub use discovery::{discover, Discovery, DiscoveryError, DiscoveryOptions, TraceRecord};
pub use graph::{DependencyKind, GraphError, SequentialCausalGraph, VariableIndex};
pub use scalar::{Matrix, Scalar};

pub type Dataset64 = ci::Dataset<f64>;
pub type Dataset32 = ci::Dataset<f32>;
pub type FisherZ64 = ci::FisherZProvider<f64>;
pub type FisherZ32 = ci::FisherZProvider<f32>;
pub type Matrix64 = Matrix<f64>;
