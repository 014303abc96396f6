//! The cutting-algorithm suite: UP/DOWN, TRANSUP/TRANSDN, SELECT2,
//! MAINTRUP/MAINTRDN, the long-bond two-layer procedure, and the master
//! dispatcher with machine-checked excess certificates.

use thiserror::Error as ThisError;

pub mod generate;
pub mod master;
pub mod outcome;
pub mod runner;
pub mod trans;
pub mod triangle;
pub mod twolayer;
pub mod up;

pub use generate::{random_molecule, GeneratorParams};
pub use master::{master_cut, MasterConfig};
pub use outcome::{ComponentRecord, Counters, CutOutcome, MasterCase};
pub use runner::{Engine, Orient};
pub use trans::{
    algorithm_maintrdn, algorithm_maintrup, algorithm_transdn, algorithm_transup,
    check_maintrup_contract, check_transup_contract, greedy_feedback_set, select2,
    MaintrOption,
};
pub use triangle::triangle_longbond_cut;
pub use twolayer::{two_layer_cut, TwoLayerData};
pub use up::{algorithm_down, algorithm_up, check_up_contract};

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Molecule(#[from] molecule::MoleculeError),
    #[error("cutting plan failed: {0}")]
    PlanFailed(String),
    #[error("generator could not satisfy the requested features after {0} attempts")]
    GeneratorExhausted(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
