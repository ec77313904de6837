//! Waveform-level simulation of multicarrier, filterbank, single-carrier and
//! time-frequency-packed signals over doubly-selective channels, with linear
//! frequency-domain receivers and achievable spectral efficiency estimation.
//!
//! Every family is an instance of the same lattice model; see
//! [`config::FrameConfig`].

pub mod ase;
pub mod channel;
pub mod config;
pub mod constellation;
pub mod dft;
pub mod error;
pub mod mimo;
pub mod presets;
pub mod pulse;
pub mod receiver;
pub mod rng;
pub mod waveform;

pub use num_complex::Complex64;

pub use config::{FrameConfig, Scheme};
pub use error::{Error, Result};
