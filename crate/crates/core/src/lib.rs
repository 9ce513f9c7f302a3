//! Curvature engine for square Finsler metrics `F = (alpha + beta)^2 / alpha`,
//! where `alpha` is a Riemannian norm and `beta` a 1-form.
//!
//! The crate is layered:
//!
//! * [`numkit`]: generic scalars, truncated-Taylor jets (forward-mode
//!   derivatives up to order 3), a finite-difference oracle, dense tensors,
//!   multivariate polynomials and small symmetric solves.
//! * [`riemann`]: metric fields `a_ij(x)`, Christoffel symbols, geodesic
//!   sprays and Riemann curvature of the underlying Riemannian norm.
//! * [`betaform`]: 1-form fields `b_i(x)`, covariant derivatives, the
//!   symmetric/antisymmetric decomposition and conformal-form diagnostics.
//! * [`finsler`]: the square metric itself; fundamental tensor, spray (two
//!   independent routes), Riemann, Weyl and Douglas tensors, flag curvature.
//! * [`classify`]: residuals of the structural equations that characterize
//!   square metrics of scalar flag curvature, metric deformations, the
//!   closed-form model families and curvature bounds.
//!
//! Everything that evaluates a field is generic over [`Scalar`], so the same
//! code runs on plain floats and on (nested) jets; that is what turns one
//! evaluator into a derivative engine.

pub mod betaform;
pub mod classify;
mod error;
pub mod finsler;
pub mod numkit;
pub mod riemann;

pub use error::{Error, Result};
pub use numkit::{Jet, JetSpace, Scalar, Tensor, Variance};

/// Precision used by the concrete pipelines.
pub type Real = f64;
/// One level of forward differentiation over [`Real`].
pub type Jet1 = numkit::Jet<Real>;
/// Two levels, for differentiating through fields that are themselves
/// assembled from derivatives.
pub type Jet2 = numkit::Jet<Jet1>;
