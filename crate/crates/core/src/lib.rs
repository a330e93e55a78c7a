//! Word embeddings built from rate matrices.
//!
//! Every word owns a rate matrix `Q` (non-negative off-diagonals, zero column
//! sums). A context is embedded by letting a truncated Taylor expansion of
//! `exp(εQ)` for each word act on the uniform distribution `p_u`. Three
//! truncations are provided:
//!
//! * FOS, first order overall: `(I + ε ΣQ_i) p_u`, additive like CBOW;
//! * FOP, first order per factor: `(I + εQ_k)⋯(I + εQ_1) p_u`, order aware;
//! * SOS, all terms through `ε²`, including ordered bilinear cross terms.
//!
//! CBOW (vector sum) and CMOW (matrix product) baselines and hybrids that
//! concatenate two compositions are trained under the same negative-sampling
//! objective, optionally split into separate left and right context terms.

pub mod analysis;
pub mod corpus;
mod error;
pub mod persistence;
pub mod rate_algebra;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
