//! Delay-Doppler physical-layer toolkit built around the discrete Zak transform.
//!
//! The crate covers the full Zak-OTFS chain: frame geometry and quasi-periodic
//! arrays ([`grid`]), unitary time/DD/frequency maps ([`transforms`]), carrier
//! families and Heisenberg-Weyl operators ([`waveforms`]), ambiguity functions
//! ([`ambiguity`]), DD pulse-shaping filters ([`filters`]), doubly-selective
//! channels ([`channel`]), receivers ([`rxchain`]), signaling schemes
//! ([`schemes`]) and discrete radar ([`radar`]).
//!
//! Indices are 0-based throughout. A DD array is stored row-major with
//! vector index `k*N + l`.

pub mod ambiguity;
pub mod channel;
pub mod error;
pub mod filters;
pub mod grid;
pub mod radar;
pub mod rxchain;
pub mod schemes;
pub mod seed;
pub mod transforms;
pub mod waveforms;

mod fft;

pub use ambiguity::{AmbiguitySurface, SupportSet};

pub use error::{Result, ZakError};
pub use channel::{ChannelInstance, EffectiveChannel, PathSpec};
pub use filters::{FilterFamily, FilterSpec};

pub use grid::{DDArray, GridParams, TDSequence, C64};
pub use transforms::{FDSequence, SymplecticParams};
pub use waveforms::{BasisFamily, BasisSpec, SubgroupSpec};
