//! Multilevel macroscopic resonant tunneling (MRT) in an rf-SQUID flux qubit.
//!
//! The crate builds the one-dimensional SQUID Hamiltonian on a phase grid,
//! extracts well-localized metastable states, and turns them into interwell
//! escape rates and a full rate matrix under three noise sources: slow
//! (Gaussian) flux noise, fast (sub-)Ohmic flux noise and charge noise.
//!
//! Units: ħ = k_B = 1 and the energy unit is h·GHz, so a rate `r` returned by
//! this crate corresponds to `r · 2π · 10⁹ s⁻¹` (see [`units`]).
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod basis;
pub mod dynamics;
mod error;
pub mod linalg;
mod math;
pub mod noise;
pub mod rates;
pub mod spectrum;
pub mod squid;
pub mod units;

pub use error::{Error, Result};
