//! Discrete-velocity kinetics on the torus: the hard-sphere collision
//! operator with exact discrete conservation, semi-Lagrangian spectral
//! transport, the incompressible Navier-Stokes-Fourier and compressible
//! Euler solvers, well-prepared initial data, and moment extraction.

use thiserror::Error;

pub mod boltzmann;
pub mod collision;
pub mod euler;
pub mod fft;
pub mod grid;
pub mod hilbert;
pub mod nsf;
pub mod snapshot;

pub use boltzmann::{boltzmann_evolve, entropy, BoltzmannParams};
pub use collision::CollisionTable;
pub use euler::{euler_evolve, EulerState};
pub use grid::{FluidState, KineticField, SpatialGrid, VelocityGrid};
pub use hilbert::{maxwellian_slice, moments, prepare_euler_data, prepare_nsf_data, DataPrep};
pub use nsf::{nsf_evolve, NsfParams, NsfState};

#[derive(Debug, Error)]
pub enum Error {
    #[error("nonpositive density or temperature: rho={0}, T={1}")]
    NonPositive(f64, f64),
    #[error("CFL violated: dt*V/dx = {0} > 1")]
    Cfl(f64),
    #[error("field blow-up at t = {0}: {1}")]
    BlowUp(f64, String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("requested delta {0} makes the prepared data negative (min {1:.3e}); use a smaller delta")]
    NegativeData(f64, f64),
    #[error("iterative inverse failed to reach tolerance: residual {0:.3e}")]
    NoConvergence(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
