//! Numerical kit shared by every layer above: generic scalars, multivariate
//! truncated-Taylor jets, a finite-difference oracle, dense tensors,
//! polynomials and small symmetric solves.

mod fd;
mod jet;
pub mod linalg;
mod poly;
mod scalar;
mod tensor;

pub use fd::fd_partial;
pub use jet::{jet_eval, Jet, JetEval, JetSpace, MAX_VARS};
pub use poly::Poly;
pub use scalar::Scalar;
pub use tensor::{antisymmetrize, symmetrize, Tensor, Variance};

pub(crate) use scalar::{clear_poison, take_poison};
