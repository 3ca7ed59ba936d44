//! Moving-user synthesis.
//!
//! A straight trajectory along one grid axis is sampled every `Δt`. Sample
//! `κ` has travelled `κ·v·Δt` meters; it is anchored at the grid point
//! `m = ⌈κvΔt/Δs − 1⌉` steps from the start and sits `Δd = κvΔt − mΔs` past
//! it, with `Δd ∈ (0, Δs]`. The anchor's path set is reused unchanged except
//! for a per-path Doppler phase `2π·Δd·(u·n)/λ`, where `u` is the movement
//! direction and `n` the unit vector toward the arriving ray.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::chansynth::{
    assemble, bin_with_phase, synth_response, CarrierPair, ChannelMatrix, PairSelection, SynthError,
};
use crate::raypaths::{GridGeometry, PathRecord, ScenarioData};
use crate::{Vec3, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MobilityError {
    #[error("invalid movement: {0}")]
    Spec(&'static str),
    #[error("start point {0} is outside the grid")]
    StartOutsideGrid(u32),
    #[error("trajectory leaves the grid at sample {kappa}")]
    ExitsGrid { kappa: u32 },
    #[error("area {0} has no grid")]
    UnknownArea(u32),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// Movement direction on the user grid: up/down move along ±y (rows),
/// left/right along ∓x (columns).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub fn unit(self) -> Vec3 {
        match self {
            Direction::Up => Vec3::Y,
            Direction::Down => -Vec3::Y,
            Direction::Left => -Vec3::X,
            Direction::Right => Vec3::X,
        }
    }

    /// `(drow, dcol)` per step.
    fn step(self) -> (i64, i64) {
        match self {
            Direction::Up => (1, 0),
            Direction::Down => (-1, 0),
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovementSpec {
    pub area: u32,
    pub start_point: u32,
    pub direction: Direction,
    /// m/s. Zero is accepted and pins every sample to the start point.
    pub speed: f64,
    /// Seconds between samples.
    pub sample_interval: f64,
    pub n_samples: u32,
}

impl MovementSpec {
    pub fn validate(&self) -> Result<(), MobilityError> {
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return Err(MobilityError::Spec("speed must be finite and non-negative"));
        }
        if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
            return Err(MobilityError::Spec("sample interval must be positive"));
        }
        if self.n_samples == 0 {
            return Err(MobilityError::Spec("need at least one sample"));
        }
        Ok(())
    }
}

/// One point sampled along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualSample {
    /// 1-based sample index κ.
    pub kappa: u32,
    /// Anchor step `m` along the trajectory.
    pub anchor: u32,
    /// Grid point index of the anchor.
    pub point: u32,
    /// Displacement past the anchor, meters.
    pub delta_d: f64,
    pub direction: Vec3,
}

/// Anchor step and offset for a travelled distance `κ·v·Δt`.
///
/// Evaluates `m = ⌈κvΔt/Δs − 1⌉`, `Δd = κvΔt − mΔs`, then corrects `m` by
/// one step where rounding of the quotient would push `Δd` out of `(0, Δs]`.
/// Zero travel gives `(0, 0)`.
pub fn anchor_offset(travel: f64, spacing: f64) -> (i64, f64) {
    if travel == 0.0 {
        return (0, 0.0);
    }
    let mut m = (travel / spacing - 1.0).ceil() as i64;
    let mut dd = travel - m as f64 * spacing;
    while dd <= 0.0 {
        m -= 1;
        dd = travel - m as f64 * spacing;
    }
    while dd > spacing {
        m += 1;
        dd = travel - m as f64 * spacing;
    }
    (m, dd)
}

/// Samples `κ = 1..=n_samples` along the trajectory.
pub fn sample_trajectory(spec: &MovementSpec, grid: &GridGeometry) -> Result<Vec<VirtualSample>, MobilityError> {
    spec.validate()?;
    let (row, col) = grid.row_col(spec.start_point).ok_or(MobilityError::StartOutsideGrid(spec.start_point))?;
    let (dr, dc) = spec.direction.step();
    let steps_available = match spec.direction {
        Direction::Up => grid.rows - 1 - row,
        Direction::Down => row,
        Direction::Left => col,
        Direction::Right => grid.cols - 1 - col,
    } as i64;

    (1..=spec.n_samples)
        .map(|kappa| {
            let travel = kappa as f64 * spec.speed * spec.sample_interval;
            let (m, delta_d) = anchor_offset(travel, grid.spacing);
            // a positive offset needs the next grid point to exist too
            let needed = if delta_d > 0.0 { m + 1 } else { m };
            if m < 0 || needed > steps_available {
                return Err(MobilityError::ExitsGrid { kappa });
            }
            let r = row as i64 + dr * m;
            let c = col as i64 + dc * m;
            let point = grid.point_index(r as u32, c as u32).ok_or(MobilityError::ExitsGrid { kappa })?;
            Ok(VirtualSample { kappa, anchor: m as u32, point, delta_d, direction: spec.direction.unit() })
        })
        .collect()
}

/// Unit vector `(cos el·cos az, cos el·sin az, sin el)` for angles in
/// degrees, pointing from the receiver toward where the ray came from.
pub fn aoa_unit_vector(aoa_az: f64, aoa_el: f64) -> Vec3 {
    let (az, el) = (aoa_az.to_radians(), aoa_el.to_radians());
    Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
}

/// Doppler phase `2π·Δd·(u·n)/λ`, radians.
pub fn doppler_shift(delta_d: f64, u: Vec3, n: Vec3, wavelength: f64) -> f64 {
    2.0 * PI * delta_d * u.dot(n) / wavelength
}

fn path_doppler(p: &PathRecord, sample: &VirtualSample, wavelength: f64) -> f64 {
    doppler_shift(sample.delta_d, sample.direction, aoa_unit_vector(p.aoa_az, p.aoa_el), wavelength)
}

/// Mobile-state `(H_up, H_dn)` matrices at one virtual sample. `sel.point`
/// is ignored; the sample's anchor point is used.
pub fn synth_mobile(
    data: &ScenarioData,
    sel: &PairSelection,
    sample: &VirtualSample,
    bw: f64,
    carriers: CarrierPair,
) -> Result<(ChannelMatrix, ChannelMatrix), MobilityError> {
    let carriers = CarrierPair::new(carriers.f_up, carriers.f_dn)?;
    let sel = PairSelection { point: sample.point, ..*sel };
    let lambda_up = SPEED_OF_LIGHT / carriers.f_up;
    let lambda_dn = SPEED_OF_LIGHT / carriers.f_dn;
    let mats = assemble(&sel, |k, g| {
        let paths = sel.link(data, k, g)?.paths();
        let up = bin_with_phase(paths, bw, |p| path_doppler(p, sample, lambda_up))?;
        let dn = bin_with_phase(paths, bw, |p| path_doppler(p, sample, lambda_dn))?;
        Ok((synth_response(&up, carriers.f_up), synth_response(&dn, carriers.f_dn)))
    })?;
    Ok(mats)
}

/// Samples a trajectory and synthesizes every sample.
pub fn synth_trajectory(
    data: &ScenarioData,
    bs: u32,
    n_tx: usize,
    n_rx: usize,
    spec: &MovementSpec,
    bw: f64,
    carriers: CarrierPair,
) -> Result<Vec<(ChannelMatrix, ChannelMatrix)>, MobilityError> {
    let grid = data.grid(spec.area).ok_or(MobilityError::UnknownArea(spec.area))?;
    let sel = PairSelection { bs, area: spec.area, point: spec.start_point, n_tx, n_rx };
    sample_trajectory(spec, grid)?.iter().map(|s| synth_mobile(data, &sel, s, bw, carriers)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chansynth::synth_uldl;
    use crate::raypaths::{amplitude_to_dbm, Link, RxId, TxId};
    use num_complex::Complex64;

    fn grid(rows: u32, cols: u32, spacing: f64) -> GridGeometry {
        GridGeometry { origin: Vec3::default(), spacing, rows, cols }
    }

    fn spec(speed: f64, dt: f64, n: u32) -> MovementSpec {
        MovementSpec { area: 0, start_point: 0, direction: Direction::Right, speed, sample_interval: dt, n_samples: n }
    }

    #[test]
    fn worked_anchor_examples() {
        assert_eq!(anchor_offset(1.0, 1.0), (0, 1.0));
        assert_eq!(anchor_offset(1.5, 1.0), (1, 0.5));
        let travel = 10.0 * 20.0 * 1e-3;
        assert_eq!(travel, 0.2);
        assert_eq!(anchor_offset(travel, 1.0), (0, 0.2));
        assert_eq!(anchor_offset(0.0, 1.0), (0, 0.0));
    }

    #[test]
    fn samples_walk_the_grid() {
        let g = grid(1, 5, 1.0);
        let s = sample_trajectory(&spec(1.5, 1.0, 2), &g).unwrap();
        assert_eq!((s[0].anchor, s[0].point, s[0].delta_d), (1, 1, 0.5));
        assert_eq!((s[1].anchor, s[1].point, s[1].delta_d), (2, 2, 1.0));
        assert_eq!(s[0].direction, Vec3::X);
    }

    #[test]
    fn leaving_the_grid_names_kappa() {
        let g = grid(1, 3, 1.0);
        // 2 steps available: kappa 5 travels 2.5 m
        assert_eq!(sample_trajectory(&spec(0.5, 1.0, 10), &g), Err(MobilityError::ExitsGrid { kappa: 5 }));
        let up = MovementSpec { direction: Direction::Up, ..spec(1.0, 1.0, 1) };
        assert_eq!(sample_trajectory(&up, &g), Err(MobilityError::ExitsGrid { kappa: 1 }));
        let left = MovementSpec { direction: Direction::Left, start_point: 2, ..spec(1.0, 1.0, 2) };
        let s = sample_trajectory(&left, &g).unwrap();
        assert_eq!(s[1].point, 1);
        assert_eq!(s[1].direction, -Vec3::X);
    }

    #[test]
    fn down_moves_to_lower_rows() {
        let g = grid(3, 2, 2.0);
        let down = MovementSpec { direction: Direction::Down, start_point: 5, ..spec(2.0, 1.0, 2) };
        let s = sample_trajectory(&down, &g).unwrap();
        assert_eq!(s[1].point, 3);
        assert_eq!(s[1].delta_d, 2.0);
    }

    #[test]
    fn invalid_specs() {
        let g = grid(1, 3, 1.0);
        assert!(sample_trajectory(&spec(-1.0, 1.0, 1), &g).is_err());
        assert!(sample_trajectory(&spec(1.0, 0.0, 1), &g).is_err());
        assert!(sample_trajectory(&spec(1.0, 1.0, 0), &g).is_err());
        let bad_start = MovementSpec { start_point: 9, ..spec(1.0, 1.0, 1) };
        assert_eq!(sample_trajectory(&bad_start, &g), Err(MobilityError::StartOutsideGrid(9)));
    }

    #[test]
    fn aoa_vectors() {
        assert_eq!(aoa_unit_vector(0.0, 0.0), Vec3::X);
        assert!((aoa_unit_vector(90.0, 0.0) - Vec3::Y).norm() < 1e-16);
        let v = aoa_unit_vector(45.0, 30.0);
        let c = 3f64.sqrt() * 2f64.sqrt() / 4.0;
        assert!((v - Vec3::new(c, c, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn doppler_examples() {
        assert_eq!(doppler_shift(0.3, Vec3::X, Vec3::Y, 0.1), 0.0);
        assert!((doppler_shift(0.1, Vec3::X, Vec3::X, 0.1) - 2.0 * PI).abs() < 1e-15);
        let n = Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0);
        assert!((doppler_shift(0.05, Vec3::X, n, 0.1) - PI / 2.0).abs() < 1e-15);
    }

    fn one_path_data(aoa_az: f64) -> ScenarioData {
        let mut d = ScenarioData::new(3.5e9).unwrap();
        d.insert_grid(0, grid(1, 4, 1.0)).unwrap();
        for point in 0..4 {
            let p = PathRecord {
                aod_az: 0.0,
                aod_el: 0.0,
                aoa_az,
                aoa_el: 0.0,
                delay: 1e-6 + point as f64 * 1e-9,
                phase: 10.0 * point as f64,
                power_dbm: amplitude_to_dbm(0.01).unwrap(),
            };
            d.insert_link(Link::new(TxId { bs: 0, elem: 0 }, RxId { area: 0, point, elem: 0 }, alloc::vec![p]))
                .unwrap();
        }
        d
    }

    #[test]
    fn single_path_phase_rotation() {
        let data = one_path_data(0.0);
        let carriers = CarrierPair::new(3.5e9, 3.5e9).unwrap();
        let sel = PairSelection { bs: 0, area: 0, point: 0, n_tx: 1, n_rx: 1 };
        let sample = VirtualSample { kappa: 1, anchor: 0, point: 0, delta_d: 0.013, direction: Vec3::X };
        let (_, moving) = synth_mobile(&data, &sel, &sample, 100e6, carriers).unwrap();
        let (_, stat) = synth_uldl(data.link(sel.ids(0, 0).0, sel.ids(0, 0).1).unwrap(), 100e6, carriers).unwrap();
        let lambda = SPEED_OF_LIGHT / 3.5e9;
        let expect = stat * Complex64::from_polar(1.0, 2.0 * PI * 0.013 / lambda);
        assert!((moving.get(0, 0) - expect).norm() <= 1e-12 * expect.norm());
    }

    #[test]
    fn reversing_direction_conjugates_phase_factor() {
        let data = one_path_data(37.0);
        let carriers = CarrierPair::new(3.5e9, 3.6e9).unwrap();
        let sel = PairSelection { bs: 0, area: 0, point: 0, n_tx: 1, n_rx: 1 };
        let fwd = VirtualSample { kappa: 1, anchor: 0, point: 0, delta_d: 0.4, direction: Vec3::X };
        let rev = VirtualSample { direction: -Vec3::X, ..fwd };
        let link = data.link(sel.ids(0, 0).0, sel.ids(0, 0).1).unwrap();
        let (su, sd) = synth_uldl(link, 100e6, carriers).unwrap();
        let (fu, fd) = synth_mobile(&data, &sel, &fwd, 100e6, carriers).unwrap();
        let (ru, rd) = synth_mobile(&data, &sel, &rev, 100e6, carriers).unwrap();
        for (s, f, r) in [(su, fu.get(0, 0), ru.get(0, 0)), (sd, fd.get(0, 0), rd.get(0, 0))] {
            let pf = f / s;
            let pr = r / s;
            assert!((pf - pr.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_speed_is_static() {
        let data = one_path_data(123.0);
        let carriers = CarrierPair::new(3.5e9, 3.7e9).unwrap();
        let sp = MovementSpec { speed: 0.0, ..spec(0.0, 1e-3, 5) };
        let out = synth_trajectory(&data, 0, 1, 1, &sp, 100e6, carriers).unwrap();
        let (su, sd) = synth_uldl(data.links().next().unwrap(), 100e6, carriers).unwrap();
        for (u, d) in out {
            assert_eq!(u.get(0, 0), su);
            assert_eq!(d.get(0, 0), sd);
        }
    }

    #[test]
    fn missing_anchor_link() {
        let data = one_path_data(0.0);
        let sel = PairSelection { bs: 1, area: 0, point: 0, n_tx: 1, n_rx: 1 };
        let s = VirtualSample { kappa: 1, anchor: 0, point: 2, delta_d: 0.1, direction: Vec3::X };
        let err = synth_mobile(&data, &sel, &s, 1e8, CarrierPair::new(1e9, 1e9).unwrap()).unwrap_err();
        assert!(matches!(err, MobilityError::Synth(SynthError::MissingLink(..))));
    }
}
