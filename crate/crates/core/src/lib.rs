pub mod analysis;
pub mod channel;
pub mod detector;
pub mod error;
pub mod fft;
pub mod rdm;
pub mod rng;
pub mod sensing_cos;
pub mod sensing_vcp;
pub mod waveform;

pub use error::{Error, Result};
