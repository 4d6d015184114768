//! Finite-n unitary-ensemble gap probabilities through finite-rank Fredholm
//! determinants, together with residual checks of the integrable structure
//! they carry: restricted recurrences, Toda relations, the universal PDE for
//! `ln det(I - K)` and its Painlevé reductions.
//!
//! The pipeline is layered:
//!
//! * [`measure`]: weights `e^{-V(x) + t x}`, domains `J`, quadrature nodes.
//! * [`orthopoly`]: Stieltjes recurrences and orthonormal quasi-polynomials.
//! * [`tau`]: free and restricted tau functions and `(ξ, t)` grids.
//! * [`resolvent`]: Gram matrices, the functions `Q`, `P`, inner products
//!   `u`, `v`, `w` and the resolvent kernel.
//! * [`identities`]: residual reports for the finite-n identities.
//! * [`pde`]: finite-difference jets and PDE / Painlevé residuals.
//! * [`oracle`]: brute-force integrals and a Monte-Carlo sampler.

// `!(x > 0.0)` rejects NaN along with the failing values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod identities;
pub mod measure;
pub mod numeric;
pub mod oracle;
pub mod orthopoly;
pub mod pde;
pub mod resolvent;
pub mod tau;

pub use error::{Error, Result};
