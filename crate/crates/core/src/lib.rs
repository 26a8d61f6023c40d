//! Reduced-basis sampling of parameterised Gaussian random fields.
//!
//! The field lives on piecewise-constant cells of the unit square. Its covariance depends on
//! hyperparameters `τ = (ℓ, σ)`; a Matérn kernel is linearised into separable terms so that a
//! reduced basis built offline from a few snapshot eigenproblems gives cheap online
//! eigensolves for any `τ`. On top of the sampler sit a P1 finite-element Darcy solver,
//! forward Monte Carlo and a Metropolis-within-Gibbs pCN sampler for hierarchical inversion.

pub mod covariance;
pub mod error;
pub mod fem;
pub mod io;
pub mod kl;
pub mod linalg;
pub mod mesh;
pub mod rb;
pub mod rng;
pub mod uq;

pub use error::{Error, Result};
