//! Nyström laboratory for nonlocal eigenvalue problems `ℒu − λu = f` with
//! homogeneous or singular boundary data, for the restricted and spectral
//! fractional Laplacians and the classical Laplacian on an interval or a
//! radial ball.

pub mod boundary;
pub mod discretize;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod limits;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
