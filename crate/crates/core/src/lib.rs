//! Exact quantum dynamics for a sequential two-neutron entanglement protocol.
//!
//! Two spin-1/2 neutrons scatter one after another from a ferromagnetic
//! sample of N localized spins held in a static field. The collective
//! exchange coupling between each neutron and the sample mediates
//! correlations between the neutrons even though they never meet. This
//! crate provides:
//!
//! - flip-number-restricted ("sector") and collective-magnon bases for the
//!   sample-plus-two-neutron Hilbert space ([`basis`]),
//! - the free and scattering Hamiltonians over either basis ([`hamiltonian`]),
//! - exact unitary evolution of the four-stage protocol ([`dynamics`]),
//! - Wootters concurrence, a closed-form concurrence for the magnon initial
//!   state, and entanglement-witness machinery with shot-noise simulation
//!   ([`entanglement`]),
//! - parameter sweeps, peak finding, scaling fits and tolerance widths
//!   ([`analysis`]),
//! - an SI-unit feasibility calculator for experimental requirements
//!   ([`feasibility`]),
//! - a self-check harness ([`verify`]) and TOML run configuration
//!   ([`config`]).
//!
//! Natural units (`hbar = mu_0 = mu_B = m_e = 1`) are used everywhere except
//! [`feasibility`], which owns all SI conversions.

pub mod analysis;
pub mod basis;
pub mod config;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod feasibility;
pub mod hamiltonian;
pub mod verify;

pub use error::{Error, Result};

/// Complex scalar used for all amplitudes and operators.
pub type C64 = num_complex::Complex64;
