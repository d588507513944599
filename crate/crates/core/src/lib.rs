//! Petviashvili-type fixed-point iterations for traveling waves, accelerated
//! by vector extrapolation and Anderson mixing, over Fourier pseudospectral
//! discretizations of nonlinear dispersive wave models.
//!
//! The crate is organized bottom-up:
//!
//! - [`spectral`]: periodic grids, FFT plans and Fourier multipliers.
//! - [`models`]: discrete problems `L u = N(u)` with homogeneous `N`.
//! - [`iterate`]: Petviashvili engines, stopping criteria and traces.
//! - [`extrap`]: MPE, RRE, MMPE, VEA and TEA with a cycling driver.
//! - [`anderson`]: Anderson acceleration, Type I and Type II.
//! - [`spectrum`]: eigenvalues of the linearized iteration maps.
//! - [`cli`]: configuration, experiment runner and file formats.
//! - [`oracles`]: independent reference computations used by the tests.

pub mod anderson;
pub mod cli;
pub mod error;
pub mod extrap;
pub mod iterate;
pub mod linalg;
pub mod models;
pub mod oracles;
pub mod spectral;
pub mod spectrum;

pub use error::{Error, Result};
