//! Simulation of heralded two-photon purification with partially
//! distinguishable photons.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`]: Fock states, detector click patterns and transition submatrices.
//! * [`permanent`]: permanents, multipermanents and detection probabilities.
//! * [`circuit`]: beamsplitter networks, the purifier circuit and loss.
//! * [`distinguishability`]: Gram matrices from physical noise models.
//! * [`protocol`]: raw and purified HOM visibilities and parameter sweeps.
//! * [`dephasing`]: the closed-form pure-dephasing model.
//! * [`histogram`]: correlation-peak count models and their inversion.
//! * [`cli`]: configuration files and the `purify` command line.

pub mod circuit;
pub mod cli;
pub mod dephasing;
pub mod distinguishability;
pub mod error;
pub mod fock;
pub mod histogram;
pub mod permanent;
pub mod protocol;

/// Dense complex matrix used for transfer and Gram matrices.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;

pub use error::{Error, Result};
