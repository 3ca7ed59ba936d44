//! Tapped-delay binning and UL/DL channel response synthesis.
//!
//! Paths of one link are grouped into sampling bins of width `1/BW`, anchored
//! at the first arrival `τ₀`. Bin `i` covers `[τ₀ + i/BW, τ₀ + (i+1)/BW)` and
//! its tap is the coherent sum `Σ α_n e^{jφ_n}` of the paths inside. The
//! single-frequency response at carrier `f` is then
//! `H(f) = Σ_i tap_i · e^{-j2πf(τ₀ + i/BW)}`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::raypaths::{Link, PathRecord, RxId, ScenarioData, TxId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("bandwidth must be positive and finite, got {0}")]
    Bandwidth(f64),
    #[error("carrier frequency must be positive and finite, got {0}")]
    Carrier(f64),
    #[error("missing link {0} -> {1}")]
    MissingLink(TxId, RxId),
}

/// Receiver sampling grid of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingGrid {
    pub bw: f64,
    /// First-arrival delay, seconds. Zero for an empty link.
    pub tau0: f64,
    /// Number of occupied bins.
    pub occupied: usize,
}

impl SamplingGrid {
    pub fn bin_width(&self) -> f64 {
        1.0 / self.bw
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub bin: u64,
    /// Left bin edge `τ₀ + bin/BW`.
    pub delay: f64,
    pub coeff: Complex64,
    /// Number of paths summed into this tap.
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TapSet {
    pub grid: SamplingGrid,
    pub taps: Vec<Tap>,
}

impl TapSet {
    pub fn path_count(&self) -> usize {
        self.taps.iter().map(|t| t.paths).sum()
    }
}

/// UL and DL carrier frequencies, Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierPair {
    pub f_up: f64,
    pub f_dn: f64,
}

impl CarrierPair {
    pub fn new(f_up: f64, f_dn: f64) -> Result<Self, SynthError> {
        for f in [f_up, f_dn] {
            check_carrier(f)?;
        }
        Ok(CarrierPair { f_up, f_dn })
    }
}

fn check_carrier(f: f64) -> Result<(), SynthError> {
    if f.is_finite() && f > 0.0 {
        Ok(())
    } else {
        Err(SynthError::Carrier(f))
    }
}

fn check_bw(bw: f64) -> Result<(), SynthError> {
    if bw.is_finite() && bw > 0.0 {
        Ok(())
    } else {
        Err(SynthError::Bandwidth(bw))
    }
}

/// Bins `(delay, coefficient)` components. Accumulation runs in ascending
/// delay, ties in input order.
pub fn bin_components(components: &[(f64, Complex64)], bw: f64) -> Result<TapSet, SynthError> {
    check_bw(bw)?;
    let mut order: Vec<usize> = (0..components.len()).collect();
    order.sort_by(|&a, &b| components[a].0.total_cmp(&components[b].0));

    let tau0 = order.first().map_or(0.0, |&i| components[i].0);
    let mut taps: Vec<Tap> = Vec::new();
    for i in order {
        let (delay, coeff) = components[i];
        let bin = ((delay - tau0) * bw).floor() as u64;
        match taps.last_mut() {
            Some(t) if t.bin == bin => {
                t.coeff += coeff;
                t.paths += 1;
            }
            _ => taps.push(Tap { bin, delay: tau0 + bin as f64 / bw, coeff, paths: 1 }),
        }
    }
    Ok(TapSet { grid: SamplingGrid { bw, tau0, occupied: taps.len() }, taps })
}

/// Groups the paths of `link` into sampling bins of width `1/bw`.
pub fn bin_paths(link: &Link, bw: f64) -> Result<TapSet, SynthError> {
    bin_with_phase(link.paths(), bw, |_| 0.0)
}

/// Bins paths after adding `extra_phase(path)` radians to each path phase.
pub fn bin_with_phase(
    paths: &[PathRecord],
    bw: f64,
    mut extra_phase: impl FnMut(&PathRecord) -> f64,
) -> Result<TapSet, SynthError> {
    let comps: Vec<(f64, Complex64)> = paths.iter().map(|p| (p.delay, p.coefficient(extra_phase(p)))).collect();
    bin_components(&comps, bw)
}

/// `Σ tap · e^{-j2πfτ}` over all taps; zero for an empty set.
pub fn synth_response(taps: &TapSet, f: f64) -> Complex64 {
    taps.taps.iter().map(|t| t.coeff * Complex64::from_polar(1.0, -2.0 * PI * f * t.delay)).sum()
}

/// `(H_up, H_dn)` of one link.
pub fn synth_uldl(link: &Link, bw: f64, carriers: CarrierPair) -> Result<(Complex64, Complex64), SynthError> {
    check_carrier(carriers.f_up)?;
    check_carrier(carriers.f_dn)?;
    let taps = bin_paths(link, bw)?;
    Ok((synth_response(&taps, carriers.f_up), synth_response(&taps, carriers.f_dn)))
}

/// Dense row-major complex matrix, rows = BS elements, cols = user elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ChannelMatrix { rows, cols, data: alloc::vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, k: usize, g: usize) -> Complex64 {
        self.data[k * self.cols + g]
    }

    pub fn set(&mut self, k: usize, g: usize, v: Complex64) {
        self.data[k * self.cols + g] = v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Column `g`: the BS-side vector seen by user element `g`.
    pub fn column(&self, g: usize) -> Vec<Complex64> {
        (0..self.rows).map(|k| self.get(k, g)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Selects one BS and one user point with `n_tx × n_rx` active elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSelection {
    pub bs: u32,
    pub area: u32,
    pub point: u32,
    pub n_tx: usize,
    pub n_rx: usize,
}

impl PairSelection {
    pub fn ids(&self, k: usize, g: usize) -> (TxId, RxId) {
        (TxId { bs: self.bs, elem: k as u32 }, RxId { area: self.area, point: self.point, elem: g as u32 })
    }

    pub fn link<'a>(&self, data: &'a ScenarioData, k: usize, g: usize) -> Result<&'a Link, SynthError> {
        let (tx, rx) = self.ids(k, g);
        data.link(tx, rx).ok_or(SynthError::MissingLink(tx, rx))
    }
}

/// Fills `(H_up, H_dn)` matrices from per-pair responses.
pub(crate) fn assemble(
    sel: &PairSelection,
    mut entry: impl FnMut(usize, usize) -> Result<(Complex64, Complex64), SynthError>,
) -> Result<(ChannelMatrix, ChannelMatrix), SynthError> {
    let mut up = ChannelMatrix::zeros(sel.n_tx, sel.n_rx);
    let mut dn = ChannelMatrix::zeros(sel.n_tx, sel.n_rx);
    for k in 0..sel.n_tx {
        for g in 0..sel.n_rx {
            let (u, d) = entry(k, g)?;
            up.set(k, g, u);
            dn.set(k, g, d);
        }
    }
    Ok((up, dn))
}

/// UL and DL channel matrices for one BS / user point.
pub fn synth_matrix(
    data: &ScenarioData,
    sel: &PairSelection,
    bw: f64,
    carriers: CarrierPair,
) -> Result<(ChannelMatrix, ChannelMatrix), SynthError> {
    assemble(sel, |k, g| synth_uldl(sel.link(data, k, g)?, bw, carriers))
}
