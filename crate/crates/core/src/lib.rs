//! Eigenbundle holonomy along loops of symmetric operators and the forced
//! eigenvalue degeneracies it implies.
//!
//! A loop of operators `D(t) = ρ(t) D₀ ρ(t)ᵀ` built from an odd loop
//! (`ρ(1) = −I`) carries a non-orientable eigenbundle over any window holding
//! an odd number of eigenvalues. Filling the loop with a disc of operators then
//! forces the window to break somewhere inside the disc, which shows up as a
//! pair of coinciding eigenvalues. The crate builds those loops ([`models`],
//! [`clifford`]), computes the bundle sign by frame transport ([`holonomy`]),
//! and searches the disc for the degeneracy ([`lasso`]).

pub mod clifford;
pub mod config;
pub mod error;
pub mod experiment;
pub mod holonomy;
pub mod lasso;
pub mod linalg;
pub mod models;
pub mod output;
pub mod reproduce;
pub mod spectral;

pub use error::{Error, Result};
pub use holonomy::{predicted_sign, transport, Sign};
pub use models::{OperatorFamily, Parity, SymmetricOperator};
pub use spectral::{eigendecompose, SpectralWindow};
