//! Experiment orchestration: the kinetic-limit, hydrodynamic-limit,
//! cutting-property, and Monte Carlo scaling campaigns, with plain-text
//! configuration, seeded reproducibility, and CSV/plot artifacts.

use thiserror::Error as ThisError;

pub mod config;
pub mod experiments;
pub mod report;

pub use config::Config;
pub use report::{RunReport, Verdict};

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Particle(#[from] particle_system::Error),
    #[error(transparent)]
    Kinetic(#[from] kinetic_solvers::Error),
    #[error(transparent)]
    Cutting(#[from] cutting_algorithms::Error),
    #[error(transparent)]
    Mc(#[from] mc_integrals::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
