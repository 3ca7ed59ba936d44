//! JSON scene description for the built-in tracer.
//!
//! ```json
//! {
//!   "freq_hz": 3.5e9,
//!   "tx_power_mw": 1.0,
//!   "gamma_ground": -1.0,
//!   "gamma_wall": -1.0,
//!   "pattern": "isotropic",
//!   "buildings": [{ "min": [0, 10, 0], "max": [30, 25, 18] }],
//!   "arrays": [
//!     { "kind": "bs", "id": 0, "position": [50, 8, 6], "rows": 1, "cols": 16, "plane": "xz" },
//!     { "kind": "area", "id": 0, "origin": [30, 0, 1.5], "spacing": 1.0, "rows": 1, "cols": 41 }
//!   ]
//! }
//! ```
//!
//! `gamma_ground: null` removes the ground plane; omitting it keeps the
//! default `-1`. Area entries take an optional `elements` object
//! (`rows`, `cols`, `plane`) for multi-antenna users.

use raychan_core::geomtracer::{
    trace_scenario, Aabb, ArrayPlane, ElementLayout, ElementPattern, Scene, TxArray, UserArea,
};
use raychan_core::raypaths::{GridGeometry, ScenarioData};
use raychan_core::Vec3;
use serde::{Deserialize, Serialize};

fn minus_one() -> Option<f64> {
    Some(-1.0)
}

fn minus_one_f() -> f64 {
    -1.0
}

fn one() -> u32 {
    1
}

fn unit_power() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneName {
    #[default]
    Xy,
    Xz,
    Yz,
}

impl From<PlaneName> for ArrayPlane {
    fn from(p: PlaneName) -> Self {
        match p {
            PlaneName::Xy => ArrayPlane::XY,
            PlaneName::Xz => ArrayPlane::XZ,
            PlaneName::Yz => ArrayPlane::YZ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternName {
    #[default]
    Isotropic,
    HalfWaveDipole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    #[serde(default = "one")]
    pub rows: u32,
    #[serde(default = "one")]
    pub cols: u32,
    #[serde(default)]
    pub plane: PlaneName,
}

impl Default for ElementSpec {
    fn default() -> Self {
        ElementSpec { rows: 1, cols: 1, plane: PlaneName::Xy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArraySpec {
    Bs {
        id: u32,
        position: [f64; 3],
        #[serde(default = "one")]
        rows: u32,
        #[serde(default = "one")]
        cols: u32,
        #[serde(default)]
        plane: PlaneName,
    },
    Area {
        id: u32,
        origin: [f64; 3],
        spacing: f64,
        rows: u32,
        cols: u32,
        #[serde(default)]
        elements: ElementSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub freq_hz: f64,
    #[serde(default = "unit_power")]
    pub tx_power_mw: f64,
    #[serde(default = "minus_one")]
    pub gamma_ground: Option<f64>,
    #[serde(default = "minus_one_f")]
    pub gamma_wall: f64,
    #[serde(default)]
    pub pattern: PatternName,
    #[serde(default)]
    pub buildings: Vec<BuildingSpec>,
    pub arrays: Vec<ArraySpec>,
}

impl SceneFile {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn scene(&self) -> anyhow::Result<Scene> {
        let buildings =
            self.buildings.iter().map(|b| Aabb::new(b.min.into(), b.max.into())).collect::<Result<Vec<_>, _>>()?;
        let scene = Scene {
            buildings,
            gamma_ground: self.gamma_ground,
            gamma_wall: self.gamma_wall,
            freq_hz: self.freq_hz,
            tx_power_mw: self.tx_power_mw,
            pattern: match self.pattern {
                PatternName::Isotropic => ElementPattern::Isotropic,
                PatternName::HalfWaveDipole => ElementPattern::HalfWaveDipole,
            },
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn tx_arrays(&self) -> anyhow::Result<Vec<TxArray>> {
        self.arrays
            .iter()
            .filter_map(|a| match *a {
                ArraySpec::Bs { id, position, rows, cols, plane } => Some(
                    ElementLayout::new(Vec3::from(position), rows, cols, plane.into(), self.freq_hz)
                        .map(|layout| TxArray { bs: id, layout })
                        .map_err(Into::into),
                ),
                ArraySpec::Area { .. } => None,
            })
            .collect()
    }

    pub fn user_areas(&self) -> Vec<UserArea> {
        self.arrays
            .iter()
            .filter_map(|a| match *a {
                ArraySpec::Area { id, origin, spacing, rows, cols, elements } => Some(UserArea {
                    area: id,
                    grid: GridGeometry { origin: Vec3::from(origin), spacing, rows, cols },
                    rows: elements.rows,
                    cols: elements.cols,
                    plane: elements.plane.into(),
                }),
                ArraySpec::Bs { .. } => None,
            })
            .collect()
    }

    /// Traces every BS element against every user element of every area.
    pub fn trace(&self) -> anyhow::Result<ScenarioData> {
        let scene = self.scene()?;
        Ok(trace_scenario(&scene, &self.tx_arrays()?, &self.user_areas())?)
    }
}
