//! DocNADE topic modeling and lifelong learning over streams of document
//! collections.

pub mod corpus;
pub mod eval;
pub mod error;
pub mod lifelong;
pub mod model;
pub mod scalar;
pub mod stream;
pub mod synthetic;

pub use error::{Error, Result};
pub use scalar::{Activation, Scalar};

/// Double-precision model parameters.
pub type DocNade = model::ModelParams<f64>;
/// Single-precision model parameters.
pub type DocNade32 = model::ModelParams<f32>;
pub type KnowledgeBase64 = lifelong::KnowledgeBase<f64>;
pub type KnowledgeBase32 = lifelong::KnowledgeBase<f32>;
