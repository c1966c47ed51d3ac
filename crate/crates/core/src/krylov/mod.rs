//! Krylov solvers and spectral estimates.

mod eig;
mod gmres;

pub use eig::{spectral_radius, EigOptions, SpectralEstimate};
pub use gmres::{gmres, GmresOptions, GmresResult};
