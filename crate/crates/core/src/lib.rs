//! Certifying and refuting steerability in polytopic general probabilistic
//! theories.
//!
//! Every decision reduces to a small dense linear program solved by
//! [`gptsteer_lp`], and every verdict carries a certificate: a local hidden
//! state model or decomposition on one side, a witness functional on the
//! other.

pub mod acceptance;
pub mod approx;
pub mod bipartite;
pub mod choquet;
pub mod error;
pub mod geometry;
pub mod gpt;
pub mod guards;
pub mod io;
pub mod sampling;
pub mod steering;
pub mod tensor;

pub use error::{GptError, Result};
pub use gpt::{BallNorm, ConeMembership, Functional, GptSystem, LinearMap, Measurement, SystemId, SystemKind, SystemSpec, Vector};
pub use guards::Guards;
pub use steering::{Assemblage, GeneralWitness, LhsModel, LhsVerdict, Witness};
pub use tensor::{DichotomicTensor, TensorElement};
