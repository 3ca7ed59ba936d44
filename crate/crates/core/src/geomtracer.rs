//! Image-method ray tracer for desk-scale scenes.
//!
//! Scenes are a ground plane at `z = 0` plus solid axis-aligned boxes. Each
//! transmit/receive element pair is traced on its own from the element
//! positions, so arrays larger than the scatterer spacing see different path
//! sets per element. Supported mechanisms: the direct path and one specular
//! reflection off the ground or any exterior box face.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::raypaths::{
    amplitude_to_dbm, wrap_degrees, GridGeometry, Link, PathRecord, RxId, ScenarioData, ScenarioError, TxId,
};
use crate::{Vec3, SPEED_OF_LIGHT};

/// Minimum parametric overlap (fraction of a segment) counted as a blockage.
const BLOCK_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Tx,
    Rx,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("{0:?} lies inside a building")]
    InsideBuilding(Endpoint),
    #[error("{0:?} lies below the ground plane")]
    BelowGround(Endpoint),
    #[error("tx and rx coincide")]
    Coincident,
    #[error("invalid scene: {0}")]
    Scene(&'static str),
    #[error("tracing {tx} -> {rx}: {source}")]
    AtLink { tx: TxId, rx: RxId, source: Box<TraceError> },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Solid axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self, TraceError> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(TraceError::Scene("box corners must be finite"));
        }
        if (0..3).any(|a| max[a] <= min[a]) {
            return Err(TraceError::Scene("box needs positive extent on every axis"));
        }
        Ok(Aabb { min, max })
    }

    pub fn min(&self) -> Vec3 {
        self.min
    }

    pub fn max(&self) -> Vec3 {
        self.max
    }

    /// Strict interior test.
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|a| p[a] > self.min[a] && p[a] < self.max[a])
    }

    /// Whether the segment `a -> b` passes through the open interior.
    fn blocks(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for axis in 0..3 {
            if d[axis] == 0.0 {
                if a[axis] <= self.min[axis] || a[axis] >= self.max[axis] {
                    return false;
                }
                continue;
            }
            let ta = (self.min[axis] - a[axis]) / d[axis];
            let tb = (self.max[axis] - a[axis]) / d[axis];
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
            if t1 - t0 <= BLOCK_EPS {
                return false;
            }
        }
        true
    }
}

/// Element radiation pattern, applied at both link ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElementPattern {
    #[default]
    Isotropic,
    /// Vertical half-wave dipole, power gain `1.64·[cos((π/2)cosθ)/sinθ]²`.
    HalfWaveDipole,
}

impl ElementPattern {
    /// Power gain toward unit direction `dir`.
    pub fn gain(self, dir: Vec3) -> f64 {
        match self {
            ElementPattern::Isotropic => 1.0,
            ElementPattern::HalfWaveDipole => {
                let cos_t = dir.z.clamp(-1.0, 1.0);
                let sin_t = (1.0 - cos_t * cos_t).sqrt();
                if sin_t < 1e-12 {
                    return 0.0;
                }
                let f = (PI / 2.0 * cos_t).cos() / sin_t;
                1.64 * f * f
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub buildings: Vec<Aabb>,
    /// Ground reflection coefficient; `None` removes the ground plane.
    pub gamma_ground: Option<f64>,
    pub gamma_wall: f64,
    pub freq_hz: f64,
    pub tx_power_mw: f64,
    pub pattern: ElementPattern,
}

impl Scene {
    /// Scene with perfectly reflecting ground (`Γ = -1`), no buildings and
    /// isotropic elements.
    pub fn new(freq_hz: f64, tx_power_mw: f64) -> Result<Self, TraceError> {
        let s = Scene {
            buildings: Vec::new(),
            gamma_ground: Some(-1.0),
            gamma_wall: -1.0,
            freq_hz,
            tx_power_mw,
            pattern: ElementPattern::Isotropic,
        };
        s.validate()?;
        Ok(s)
    }

    /// Empty free-space scene: no ground, no buildings.
    pub fn free_space(freq_hz: f64, tx_power_mw: f64) -> Result<Self, TraceError> {
        Ok(Scene { gamma_ground: None, ..Scene::new(freq_hz, tx_power_mw)? })
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if !(self.freq_hz.is_finite() && self.freq_hz > 0.0) {
            return Err(TraceError::Scene("frequency must be positive"));
        }
        if !(self.tx_power_mw.is_finite() && self.tx_power_mw > 0.0) {
            return Err(TraceError::Scene("tx power must be positive"));
        }
        let in_range = |g: f64| (-1.0..=0.0).contains(&g);
        if !in_range(self.gamma_wall) || !self.gamma_ground.is_none_or(in_range) {
            return Err(TraceError::Scene("reflection coefficients must lie in [-1, 0]"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.freq_hz
    }

    fn blocked(&self, a: Vec3, b: Vec3) -> bool {
        self.buildings.iter().any(|bx| bx.blocks(a, b))
    }

    fn check_endpoint(&self, p: Vec3, which: Endpoint) -> Result<(), TraceError> {
        if !p.is_finite() {
            return Err(TraceError::Scene("non-finite position"));
        }
        if self.buildings.iter().any(|b| b.contains(p)) {
            return Err(TraceError::InsideBuilding(which));
        }
        if self.gamma_ground.is_some() && p.z <= 0.0 {
            return Err(TraceError::BelowGround(which));
        }
        Ok(())
    }

    /// Builds the path record for a route `tx -> [bounce] -> rx` with total
    /// unfolded length `length`. Returns `None` for zero-amplitude paths.
    fn path(&self, tx: Vec3, rx: Vec3, bounce: Option<(Vec3, f64)>, length: f64) -> Option<PathRecord> {
        let lambda = self.wavelength();
        let (first, last, gamma) = match bounce {
            Some((p, g)) => (p, p, g),
            None => (rx, tx, 1.0),
        };
        let depart = (first - tx).normalized();
        let arrive = (last - rx).normalized();
        let gain = (self.pattern.gain(depart) * self.pattern.gain(arrive)).sqrt();
        let alpha = self.tx_power_mw.sqrt() * lambda / (4.0 * PI * length) * gamma.abs() * gain;
        let power_dbm = amplitude_to_dbm(alpha).ok()?;

        let cycles = (length / lambda).fract();
        let mut phase = -2.0 * PI * cycles;
        if gamma < 0.0 {
            phase += PI;
        }
        let (aod_az, aod_el) = direction_angles(depart);
        let (aoa_az, aoa_el) = direction_angles(arrive);
        Some(PathRecord {
            aod_az,
            aod_el,
            aoa_az,
            aoa_el,
            delay: length / SPEED_OF_LIGHT,
            phase: wrap_degrees(phase.to_degrees()),
            power_dbm,
        })
    }
}

/// Azimuth (from +x toward +y, `[0, 360)`) and elevation (from the xy-plane)
/// of a unit vector, degrees.
pub fn direction_angles(dir: Vec3) -> (f64, f64) {
    let az = wrap_degrees(dir.y.atan2(dir.x).to_degrees());
    let el = dir.z.clamp(-1.0, 1.0).asin().to_degrees();
    (az, el)
}

/// Traces every path between two points, sorted by delay.
pub fn trace_link(scene: &Scene, tx: Vec3, rx: Vec3) -> Result<Vec<PathRecord>, TraceError> {
    scene.validate()?;
    scene.check_endpoint(tx, Endpoint::Tx)?;
    scene.check_endpoint(rx, Endpoint::Rx)?;
    if tx == rx {
        return Err(TraceError::Coincident);
    }

    let mut paths = Vec::new();

    if !scene.blocked(tx, rx) {
        paths.extend(scene.path(tx, rx, None, tx.distance(rx)));
    }

    if let Some(gamma) = scene.gamma_ground {
        let image = Vec3::new(tx.x, tx.y, -tx.z);
        let t = tx.z / (tx.z + rx.z);
        let mut p = image + (rx - image) * t;
        p.z = 0.0;
        let covered = scene
            .buildings
            .iter()
            .any(|b| b.min.z <= 0.0 && p.x > b.min.x && p.x < b.max.x && p.y > b.min.y && p.y < b.max.y);
        if !covered && !scene.blocked(tx, p) && !scene.blocked(p, rx) {
            paths.extend(scene.path(tx, rx, Some((p, gamma)), image.distance(rx)));
        }
    }

    for b in &scene.buildings {
        for axis in 0..3 {
            for (plane, outward) in [(b.min[axis], -1.0), (b.max[axis], 1.0)] {
                if outward * (tx[axis] - plane) <= 0.0 || outward * (rx[axis] - plane) <= 0.0 {
                    continue;
                }
                let mut image = tx;
                image[axis] = 2.0 * plane - tx[axis];
                let t = (plane - image[axis]) / (rx[axis] - image[axis]);
                let mut p = image + (rx - image) * t;
                p[axis] = plane;
                let on_face = (0..3).filter(|&a| a != axis).all(|a| p[a] >= b.min[a] && p[a] <= b.max[a]);
                if !on_face || (scene.gamma_ground.is_some() && p.z < 0.0) {
                    continue;
                }
                if scene.blocked(tx, p) || scene.blocked(p, rx) {
                    continue;
                }
                paths.extend(scene.path(tx, rx, Some((p, scene.gamma_wall)), image.distance(rx)));
            }
        }
    }

    paths.sort_by(|a, b| a.delay.total_cmp(&b.delay));
    Ok(paths)
}

/// Plane spanned by a planar array; the first axis carries columns, the
/// second rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArrayPlane {
    #[default]
    XY,
    XZ,
    YZ,
}

impl ArrayPlane {
    fn axes(self) -> (Vec3, Vec3) {
        match self {
            ArrayPlane::XY => (Vec3::X, Vec3::Y),
            ArrayPlane::XZ => (Vec3::X, Vec3::Z),
            ArrayPlane::YZ => (Vec3::Y, Vec3::Z),
        }
    }
}

/// Uniform planar array with half-wavelength element spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementLayout {
    pub reference: Vec3,
    pub rows: u32,
    pub cols: u32,
    pub plane: ArrayPlane,
    spacing: f64,
}

impl ElementLayout {
    pub fn new(reference: Vec3, rows: u32, cols: u32, plane: ArrayPlane, freq_hz: f64) -> Result<Self, TraceError> {
        if rows == 0 || cols == 0 {
            return Err(TraceError::Scene("array needs at least one element"));
        }
        if !(freq_hz.is_finite() && freq_hz > 0.0) {
            return Err(TraceError::Scene("frequency must be positive"));
        }
        Ok(ElementLayout { reference, rows, cols, plane, spacing: SPEED_OF_LIGHT / (2.0 * freq_hz) })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        (self.rows * self.cols) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Element `r * cols + c` sits at `reference + c·d·u + r·d·v` where
    /// `(u, v)` are the plane axes.
    pub fn element_positions(&self) -> Vec<Vec3> {
        let (u, v) = self.plane.axes();
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| (r, c)))
            .map(|(r, c)| self.reference + u * (c as f64 * self.spacing) + v * (r as f64 * self.spacing))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxArray {
    pub bs: u32,
    pub layout: ElementLayout,
}

/// User grid plus the element array carried at every point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserArea {
    pub area: u32,
    pub grid: GridGeometry,
    pub rows: u32,
    pub cols: u32,
    pub plane: ArrayPlane,
}

impl UserArea {
    pub fn layout_at(&self, point: u32, freq_hz: f64) -> Result<ElementLayout, TraceError> {
        let pos = self.grid.point_position(point).ok_or(TraceError::Scene("point outside grid"))?;
        ElementLayout::new(pos, self.rows, self.cols, self.plane, freq_hz)
    }
}

/// Traces one link per (tx element, rx element) pair over every user point.
pub fn trace_scenario(scene: &Scene, txs: &[TxArray], areas: &[UserArea]) -> Result<ScenarioData, TraceError> {
    scene.validate()?;
    let mut data = ScenarioData::new(scene.freq_hz)?;
    for a in areas {
        data.insert_grid(a.area, a.grid)?;
    }
    for tx in txs {
        let tx_pos = tx.layout.element_positions();
        for a in areas {
            for point in 0..a.grid.n_points() {
                let rx_pos = a.layout_at(point, scene.freq_hz)?.element_positions();
                for (ti, &tp) in tx_pos.iter().enumerate() {
                    for (ri, &rp) in rx_pos.iter().enumerate() {
                        let tx_id = TxId { bs: tx.bs, elem: ti as u32 };
                        let rx_id = RxId { area: a.area, point, elem: ri as u32 };
                        let paths = trace_link(scene, tp, rp).map_err(|e| TraceError::AtLink {
                            tx: tx_id,
                            rx: rx_id,
                            source: Box::new(e),
                        })?;
                        data.insert_link(Link::new(tx_id, rx_id, paths))?;
                    }
                }
            }
        }
    }
    Ok(data)
}
