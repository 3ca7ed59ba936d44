//! Channel synthesis from per-path ray records.
//!
//! The crate turns lists of multipath components (one list per transmit
//! element / receive element pair) into frequency-domain MIMO channel
//! responses:
//!
//! * [`raypaths`] holds the path data model and its line-oriented text format.
//! * [`geomtracer`] is a small image-method tracer (LOS plus single specular
//!   bounces off ground and axis-aligned boxes) that produces path data per
//!   antenna element.
//! * [`chansynth`] bins paths at the receiver sampling interval `1/BW` and
//!   evaluates the UL and DL responses at their carriers.
//! * [`mobility`] discretizes a straight user trajectory into virtual samples
//!   and applies a per-path Doppler phase.
//! * [`beams`] is the beam-selection labeling harness: matched filter, DFT
//!   codebook, achievable rate, argmax labels and windowed samples.
//!
//! Everything here is `no_std` with `alloc`; file IO, configuration and the
//! command line live in the `raychan` crate. Float math goes through
//! `num_traits::Float` (libm) on targets where `core` lacks it.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod beams;
pub mod chansynth;
pub mod geomtracer;
pub mod mobility;
pub mod raypaths;
mod vec3;

pub use num_complex::Complex64;
pub use vec3::Vec3;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier wavelength in meters for a frequency in Hz.
pub fn wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}
