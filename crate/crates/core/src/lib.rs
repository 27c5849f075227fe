//! Compressive-sensing broadband channel estimation for IRS-aided mmWave
//! massive MIMO OFDM downlinks.
//!
//! The pipeline: draw geometric multipath links ([`channel`]), sound them
//! with hybrid BS precoders and random IRS phases ([`pilot`]), sparsify the
//! BS-user and IRS-user channels over oversampled angular dictionaries
//! ([`dictionary`]), and recover them jointly across subcarriers with
//! distributed OMP ([`recovery`]). [`harness`] runs seeded Monte Carlo sweeps.

pub mod channel;
pub mod config;
pub mod dictionary;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod pilot;
pub mod recovery;

pub use error::{Error, Result};

/// Complex baseband sample type used throughout.
pub type C64 = num_complex::Complex64;
