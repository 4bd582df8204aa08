//! Ground states of the anisotropic S=1/2 chain in a transverse field and
//! the pairwise entanglement of their two-site reduced density matrices.

pub mod entanglement;
pub mod error;
pub mod ground_solver;
pub mod observables;
pub mod oracle;
pub mod spin_model;
pub mod sweep;

pub use error::{Error, Result};
