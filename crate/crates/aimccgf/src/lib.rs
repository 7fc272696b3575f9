//! Hybrid coupled-cluster Green's functions for the Anderson impurity model.
//!
//! The crate builds the impurity Hamiltonian in a Jordan–Wigner qubit
//! encoding, solves the coupled-cluster amplitude equations classically,
//! rewrites the cluster-dressed creation and annihilation operators as
//! linear combinations of Pauli strings, and evaluates the time-domain
//! Green's function on an emulated state-vector device. Exact
//! diagonalization serves as the reference throughout.

pub mod cc;
pub mod circuit;
pub mod ed;
pub mod error;
pub mod exec;
pub mod fock;
pub mod lcu;
pub mod linalg;
pub mod measurement;
pub mod model;
pub mod pauli;
pub mod resources;
pub mod series;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Execution;
