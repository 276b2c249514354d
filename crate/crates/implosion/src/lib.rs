//! Smooth self-similar implosion profiles for radial compressible Euler flow.
//!
//! The profile is found as a trajectory of an autonomous planar system that crosses the
//! sonic line analytically; the crate then checks repulsivity of the profile, counts
//! unstable eigenvalues of the linearized operator, and integrates the renormalized flow.

pub mod config;
pub mod emden;
pub mod error;
pub mod ode;
pub mod params;
pub mod profile;
pub mod repulsivity;
pub mod series;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use params::{derive, Parameters, Regime};
