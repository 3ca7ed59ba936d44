//! Beam-selection labeling.
//!
//! Labels are produced the way a sub-6 → mmWave beam predictor is trained:
//! each time slot carries the sub-6 UL channel vector as a feature and the
//! index of the codebook beam that maximizes the mmWave DL rate as the
//! label. The product `h·f` is the plain (unconjugated) inner product, so
//! the matched filter for `h` is `conj(h)/‖h‖`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamError {
    #[error("zero channel vector has no matched filter")]
    ZeroChannel,
    #[error("dimension mismatch: channel has {channel} entries, beam has {beam}")]
    Dimension { channel: usize, beam: usize },
    #[error("codebook needs at least one beam and one antenna")]
    EmptyCodebook,
    #[error("rate parameters need bandwidth > 0 and snr > 0")]
    RateParams,
    #[error("noise variance must be finite and non-negative")]
    NoiseVariance,
    #[error("series of length {len} too short for window {window} + horizon {horizon}")]
    SeriesTooShort { len: usize, window: usize, horizon: usize },
    #[error("UL and DL series lengths differ ({ul} vs {dl})")]
    Misaligned { ul: usize, dl: usize },
}

fn dot(h: &[Complex64], f: &[Complex64]) -> Complex64 {
    h.iter().zip(f).map(|(a, b)| a * b).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `conj(h)/‖h‖`.
pub fn matched_filter(h: &[Complex64]) -> Result<Vec<Complex64>, BeamError> {
    let n = norm(h);
    if !(n > 0.0 && n.is_finite()) {
        return Err(BeamError::ZeroChannel);
    }
    Ok(h.iter().map(|c| c.conj() / n).collect())
}

/// N unit-norm progressive-phase beams over M antennas:
/// `f_n[m] = e^{j2πmn/N}/√M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    antennas: usize,
    beams: Vec<Vec<Complex64>>,
}

impl Codebook {
    pub fn dft(n_beams: usize, antennas: usize) -> Result<Self, BeamError> {
        if n_beams == 0 || antennas == 0 {
            return Err(BeamError::EmptyCodebook);
        }
        let scale = 1.0 / (antennas as f64).sqrt();
        let beams = (0..n_beams)
            .map(|n| {
                (0..antennas)
                    .map(|m| {
                        // reduce m·n mod N first so the angle stays small
                        let k = (m * n) % n_beams;
                        Complex64::from_polar(scale, 2.0 * PI * k as f64 / n_beams as f64)
                    })
                    .collect()
            })
            .collect();
        Ok(Codebook { antennas, beams })
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn beam(&self, n: usize) -> &[Complex64] {
        &self.beams[n]
    }

    pub fn beams(&self) -> impl Iterator<Item = &[Complex64]> {
        self.beams.iter().map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Bandwidth `B`, Hz.
    pub bandwidth: f64,
    /// Linear transmit SNR `P/σ²`.
    pub snr: f64,
}

impl RateParams {
    pub fn new(bandwidth: f64, snr: f64) -> Result<Self, BeamError> {
        if !(bandwidth.is_finite() && bandwidth > 0.0 && snr.is_finite() && snr > 0.0) {
            return Err(BeamError::RateParams);
        }
        Ok(RateParams { bandwidth, snr })
    }
}

/// `B·log2(1 + snr·|h·f|²)`, bit/s.
pub fn rate(h: &[Complex64], f: &[Complex64], p: RateParams) -> Result<f64, BeamError> {
    if h.len() != f.len() {
        return Err(BeamError::Dimension { channel: h.len(), beam: f.len() });
    }
    Ok(p.bandwidth * (1.0 + p.snr * dot(h, f).norm_sqr()).log2())
}

/// Exhaustive argmax of [`rate`] over the codebook; ties go to the lowest
/// index.
pub fn optimal_beam(h: &[Complex64], codebook: &Codebook, p: RateParams) -> Result<(usize, f64), BeamError> {
    let mut best = (0, f64::NEG_INFINITY);
    for (n, f) in codebook.beams().enumerate() {
        let r = rate(h, f, p)?;
        if r > best.1 {
            best = (n, r);
        }
    }
    Ok(best)
}

/// `y = h·s + n`, `n` circularly-symmetric Gaussian with per-entry variance
/// `noise_var`, drawn from a ChaCha8 stream seeded with `seed`.
pub fn awgn_observe(h: &[Complex64], pilot: Complex64, noise_var: f64, seed: u64) -> Result<Vec<Complex64>, BeamError> {
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(BeamError::NoiseVariance);
    }
    if noise_var == 0.0 {
        return Ok(h.iter().map(|c| c * pilot).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (noise_var / 2.0).sqrt();
    Ok(h.iter()
        .map(|c| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c * pilot + Complex64::new(sigma * re, sigma * im)
        })
        .collect())
}

/// One training example: `window` consecutive UL vectors ending at slot
/// `t`, labeled with the best DL beam at `t + horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    pub t: usize,
    pub features: Vec<Vec<Complex64>>,
    pub label: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub window: usize,
    pub horizon: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { window: 25, horizon: 1 }
    }
}

/// Slides a window over aligned per-slot UL/DL series.
pub fn build_dataset(
    ul: &[Vec<Complex64>],
    dl: &[Vec<Complex64>],
    codebook: &Codebook,
    p: RateParams,
    spec: WindowSpec,
) -> Result<Vec<WindowedSample>, BeamError> {
    if ul.len() != dl.len() {
        return Err(BeamError::Misaligned { ul: ul.len(), dl: dl.len() });
    }
    let WindowSpec { window, horizon } = spec;
    let len = ul.len();
    if window == 0 || len < window + horizon {
        return Err(BeamError::SeriesTooShort { len, window, horizon });
    }
    (window - 1..len - horizon)
        .map(|t| {
            let (label, rate) = optimal_beam(&dl[t + horizon], codebook, p)?;
            Ok(WindowedSample { t, features: ul[t + 1 - window..=t].to_vec(), label, rate })
        })
        .collect()
}
