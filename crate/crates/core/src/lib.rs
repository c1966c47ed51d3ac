//! Overlapping Schwarz and block preconditioners for the incompressible Navier-Stokes
//! equations, with the finite element, sparse and Krylov machinery they sit on.

pub mod bench;
pub mod block;
pub mod coarse;
pub mod decomp;
pub mod error;
pub mod fe;
pub mod krylov;
pub mod linop;
pub mod mesh;
pub mod newton;
pub mod par;
pub mod problems;
pub mod saddle;
pub mod schwarz;
pub mod sparse;
pub mod timestep;

pub use error::{Error, Result};
