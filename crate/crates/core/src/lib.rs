//! Fuzzy commitment scheme over linear codes with public feature
//! transforms, and the decodability family of linkage attacks against it.
//!
//! - [`field`], [`gf2`], [`linalg`]: finite-field arithmetic and exact linear algebra.
//! - [`codes`]: BCH and generic linear codes with bounded-distance decoding.
//! - [`transforms`]: public record-specific transforms and the exhaustive
//!   distance-preservation oracles.
//! - [`commitment`]: enrollment, verification and the record file format.
//! - [`attacks`]: decodability, generalized, modified and linear decodability attacks.
//! - [`analysis`]: closed-form densities and bounds as exact rationals.
//! - [`experiments`]: seeded Monte Carlo harness and reports.

pub mod analysis;
pub mod attacks;
pub mod codes;
pub mod commitment;
pub mod error;
pub mod experiments;
pub mod field;
pub mod gf2;
pub mod linalg;
pub mod transforms;

pub use codes::{bch_build, reed_solomon, CodeDescriptor, LinearCode};
pub use error::{
    AnalysisError, AttackError, CodeError, CommitmentError, ExperimentError, FieldError, LinalgError, TransformError,
};
pub use field::{Field, FieldSpec};
pub use linalg::{AffineSolution, FieldMatrix, FieldVector};
