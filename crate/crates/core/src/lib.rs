//! Statevector toolkit for Jastrow-dressed (non-unitary) VQE.
//!
//! Modules follow the data flow of an experiment: integrals are mapped to a
//! qubit Hamiltonian ([`fermion`], [`pauli`]), a hardware-efficient circuit
//! ([`ansatz`]) prepares a trial state ([`statevector`]), a diagonal Jastrow
//! factor ([`jastrow`]) dresses it, [`vqe`] optimizes the parameters, and
//! [`measurement`] and [`resource`] model the cost of estimating the energy
//! on hardware. [`cli`] ties them together.

// `!(x > tol)` guards are written that way so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod cli;
pub mod error;
pub mod fermion;
pub mod jastrow;
pub mod measurement;
pub mod optim;
pub mod par;
pub mod pauli;
pub mod resource;
pub mod rng;
pub mod statevector;
pub mod vqe;

pub use error::{Error, Result};
pub use par::Exec;
pub use pauli::{PauliString, PauliSum};
pub use statevector::Statevector;
