//! Per-path data model and the `DATAAI6G-PATHS v1` text format.
//!
//! A [`ScenarioData`] is a keyed collection of [`Link`]s, one per
//! (transmit element, receive element) pair, plus the carrier frequency of
//! the trace and the geometry of each user grid. Each link holds its
//! multipath components as [`PathRecord`]s sorted by delay.
//!
//! Text layout (UTF-8, one record per line, `#` starts a comment):
//!
//! ```text
//! DATAAI6G-PATHS v1
//! freq_hz <f>
//! grid <area> <ox> <oy> <oz> <ds> <rows> <cols>
//! link tx <bs> <elem> rx <area> <point> <elem> npaths <M>
//! <aod_az_deg> <aod_el_deg> <aoa_az_deg> <aoa_el_deg> <delay_s> <phase_deg> <power_dbm>
//! ```
//!
//! Reals are written with 17 significant digits so that every `f64` survives
//! a write/parse cycle bit for bit.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::Vec3;

pub const HEADER: &str = "DATAAI6G-PATHS v1";

/// Converts a path power in dBm to a linear amplitude in √mW, `10^(p/20)`.
pub fn dbm_to_amplitude(power_dbm: f64) -> Result<f64, PathError> {
    if !power_dbm.is_finite() {
        return Err(PathError::NonFinite("power_dbm"));
    }
    Ok(10f64.powf(power_dbm / 20.0))
}

/// Inverse of [`dbm_to_amplitude`]. Zero amplitude has no dBm value.
pub fn amplitude_to_dbm(amplitude: f64) -> Result<f64, PathError> {
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(PathError::NonPositiveAmplitude);
    }
    Ok(20.0 * amplitude.log10())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("{0} is not finite")]
    NonFinite(&'static str),
    #[error("negative delay {0} s")]
    NegativeDelay(f64),
    #[error("{field} = {value} outside [-90, 90] degrees")]
    Elevation { field: &'static str, value: f64 },
    #[error("amplitude must be positive and finite")]
    NonPositiveAmplitude,
}

/// Wraps an angle in degrees into `[0, 360)`.
pub fn wrap_degrees(deg: f64) -> f64 {
    let mut w = deg - 360.0 * (deg / 360.0).floor();
    if w < 0.0 {
        w += 360.0;
    }
    // a tiny negative input rounds up to exactly 360
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// One multipath component between a transmit and a receive element.
///
/// Angles and phase are in degrees; azimuths and phase are kept in
/// `[0, 360)`, elevations in `[-90, 90]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub aod_az: f64,
    pub aod_el: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    /// Propagation delay, seconds.
    pub delay: f64,
    pub phase: f64,
    pub power_dbm: f64,
}

impl PathRecord {
    /// Validates the record and wraps azimuths and phase into `[0, 360)`.
    pub fn normalized(self) -> Result<Self, PathError> {
        let fields = [
            ("aod_az", self.aod_az),
            ("aod_el", self.aod_el),
            ("aoa_az", self.aoa_az),
            ("aoa_el", self.aoa_el),
            ("delay", self.delay),
            ("phase", self.phase),
            ("power_dbm", self.power_dbm),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(PathError::NonFinite(name));
            }
        }
        if self.delay < 0.0 {
            return Err(PathError::NegativeDelay(self.delay));
        }
        for (field, value) in [("aod_el", self.aod_el), ("aoa_el", self.aoa_el)] {
            if !(-90.0..=90.0).contains(&value) {
                return Err(PathError::Elevation { field, value });
            }
        }
        Ok(PathRecord {
            aod_az: wrap_degrees(self.aod_az),
            aoa_az: wrap_degrees(self.aoa_az),
            phase: wrap_degrees(self.phase),
            ..self
        })
    }

    pub fn phase_rad(&self) -> f64 {
        self.phase.to_radians()
    }

    /// Linear amplitude `10^(power_dbm/20)`.
    pub fn amplitude(&self) -> f64 {
        10f64.powf(self.power_dbm / 20.0)
    }

    /// Complex path gain `α·e^{j(φ + extra_phase)}`, `extra_phase` in radians.
    pub fn coefficient(&self, extra_phase: f64) -> Complex64 {
        Complex64::from_polar(self.amplitude(), self.phase_rad() + extra_phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxId {
    pub bs: u32,
    pub elem: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RxId {
    pub area: u32,
    pub point: u32,
    pub elem: u32,
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tx(bs {}, elem {})", self.bs, self.elem)
    }
}

impl fmt::Display for RxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rx(area {}, point {}, elem {})", self.area, self.point, self.elem)
    }
}

/// All paths between one transmit element and one receive element.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub tx: TxId,
    pub rx: RxId,
    paths: Vec<PathRecord>,
}

impl Link {
    /// Builds a link, sorting `paths` by nondecreasing delay (stable).
    pub fn new(tx: TxId, rx: RxId, mut paths: Vec<PathRecord>) -> Self {
        paths.sort_by(|a, b| a.delay.total_cmp(&b.delay));
        Link { tx, rx, paths }
    }

    pub fn paths(&self) -> &[PathRecord] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Applies `f` to every path, keeping the delay order.
    pub fn map_paths(&self, f: impl FnMut(&PathRecord) -> PathRecord) -> Link {
        Link::new(self.tx, self.rx, self.paths.iter().map(f).collect())
    }
}

/// Placement of a user grid: point `r * cols + c` sits at
/// `origin + c·spacing·x̂ + r·spacing·ŷ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub origin: Vec3,
    pub spacing: f64,
    pub rows: u32,
    pub cols: u32,
}

impl GridGeometry {
    pub fn n_points(&self) -> u32 {
        self.rows * self.cols
    }

    /// `(row, col)` of a point index.
    pub fn row_col(&self, point: u32) -> Option<(u32, u32)> {
        (point < self.n_points()).then(|| (point / self.cols, point % self.cols))
    }

    pub fn point_index(&self, row: u32, col: u32) -> Option<u32> {
        (row < self.rows && col < self.cols).then(|| row * self.cols + col)
    }

    pub fn point_position(&self, point: u32) -> Option<Vec3> {
        let (r, c) = self.row_col(point)?;
        Some(Vec3::new(self.origin.x + c as f64 * self.spacing, self.origin.y + r as f64 * self.spacing, self.origin.z))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("duplicate link {0} -> {1}")]
    DuplicateLink(TxId, RxId),
    #[error("duplicate grid for area {0}")]
    DuplicateGrid(u32),
    #[error("grid for area {0} needs spacing > 0 and at least one point")]
    BadGrid(u32),
    #[error("link {0} -> {1} references an area without grid geometry")]
    UnknownArea(TxId, RxId),
    #[error("link {0} -> {1} references a point outside its grid")]
    PointOutOfGrid(TxId, RxId),
    #[error("frequency must be positive and finite")]
    BadFrequency,
}

/// Paths for every traced element pair plus trace metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    pub freq_hz: f64,
    grids: BTreeMap<u32, GridGeometry>,
    links: BTreeMap<(TxId, RxId), Link>,
}

impl ScenarioData {
    pub fn new(freq_hz: f64) -> Result<Self, ScenarioError> {
        if !(freq_hz.is_finite() && freq_hz > 0.0) {
            return Err(ScenarioError::BadFrequency);
        }
        Ok(ScenarioData { freq_hz, grids: BTreeMap::new(), links: BTreeMap::new() })
    }

    pub fn insert_grid(&mut self, area: u32, grid: GridGeometry) -> Result<(), ScenarioError> {
        if !(grid.spacing.is_finite() && grid.spacing > 0.0)
            || grid.rows == 0
            || grid.cols == 0
            || !grid.origin.is_finite()
        {
            return Err(ScenarioError::BadGrid(area));
        }
        if self.grids.contains_key(&area) {
            return Err(ScenarioError::DuplicateGrid(area));
        }
        self.grids.insert(area, grid);
        Ok(())
    }

    /// Inserts a link. Its area must already have a grid.
    pub fn insert_link(&mut self, link: Link) -> Result<(), ScenarioError> {
        let grid = self.grids.get(&link.rx.area).ok_or(ScenarioError::UnknownArea(link.tx, link.rx))?;
        if link.rx.point >= grid.n_points() {
            return Err(ScenarioError::PointOutOfGrid(link.tx, link.rx));
        }
        let key = (link.tx, link.rx);
        if self.links.contains_key(&key) {
            return Err(ScenarioError::DuplicateLink(link.tx, link.rx));
        }
        self.links.insert(key, link);
        Ok(())
    }

    pub fn grid(&self, area: u32) -> Option<&GridGeometry> {
        self.grids.get(&area)
    }

    pub fn grids(&self) -> impl Iterator<Item = (u32, &GridGeometry)> {
        self.grids.iter().map(|(a, g)| (*a, g))
    }

    pub fn link(&self, tx: TxId, rx: RxId) -> Option<&Link> {
        self.links.get(&(tx, rx))
    }

    /// Links in key order.
    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn path_count(&self) -> usize {
        self.links.values().map(Link::len).sum()
    }

    /// Distinct base station indices.
    pub fn base_stations(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.links.keys().map(|(t, _)| t.bs).collect();
        v.dedup();
        v
    }

    /// Number of distinct elements used by base station `bs`.
    pub fn tx_element_count(&self, bs: u32) -> usize {
        let mut v: Vec<u32> = self.links.keys().filter(|(t, _)| t.bs == bs).map(|(t, _)| t.elem).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    }

    /// Number of distinct elements at one user point.
    pub fn rx_element_count(&self, area: u32, point: u32) -> usize {
        let mut v: Vec<u32> =
            self.links.keys().filter(|(_, r)| r.area == area && r.point == point).map(|(_, r)| r.elem).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("missing `{HEADER}` header")]
    MissingHeader,
    #[error("missing `freq_hz` line")]
    MissingFrequency,
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Path { line: usize, source: PathError },
    #[error("line {line}: {source}")]
    Scenario { line: usize, source: ScenarioError },
    #[error("line {line}: link section declares {declared} paths, found {found}")]
    PathCount { line: usize, declared: usize, found: usize },
}

fn malformed(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Malformed { line, msg: msg.into() }
}

fn parse_num<T: core::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, ParseError> {
    tok.parse().map_err(|_| malformed(line, alloc::format!("bad {what} `{tok}`")))
}

struct PendingLink {
    line: usize,
    tx: TxId,
    rx: RxId,
    declared: usize,
    paths: Vec<PathRecord>,
}

/// Parses the paths text format.
pub fn parse_paths(text: &str) -> Result<ScenarioData, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    match lines.next() {
        Some((_, l)) if l.split_whitespace().eq(HEADER.split_whitespace()) => {}
        _ => return Err(ParseError::MissingHeader),
    }

    let mut freq: Option<f64> = None;
    let mut grids: Vec<(usize, u32, GridGeometry)> = Vec::new();
    let mut links: Vec<PendingLink> = Vec::new();

    for (n, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks[0] {
            "freq_hz" => {
                if toks.len() != 2 {
                    return Err(malformed(n, "expected `freq_hz <f>`"));
                }
                if freq.is_some() {
                    return Err(malformed(n, "repeated freq_hz"));
                }
                freq = Some(parse_num(toks[1], n, "frequency")?);
            }
            "grid" => {
                if toks.len() != 8 {
                    return Err(malformed(n, "expected `grid <area> <ox> <oy> <oz> <ds> <rows> <cols>`"));
                }
                let area = parse_num(toks[1], n, "area")?;
                let origin = Vec3::new(
                    parse_num(toks[2], n, "origin")?,
                    parse_num(toks[3], n, "origin")?,
                    parse_num(toks[4], n, "origin")?,
                );
                let grid = GridGeometry {
                    origin,
                    spacing: parse_num(toks[5], n, "spacing")?,
                    rows: parse_num(toks[6], n, "rows")?,
                    cols: parse_num(toks[7], n, "cols")?,
                };
                grids.push((n, area, grid));
            }
            "link" => {
                if toks.len() != 10 || toks[1] != "tx" || toks[4] != "rx" || toks[8] != "npaths" {
                    return Err(malformed(n, "expected `link tx <bs> <elem> rx <area> <point> <elem> npaths <M>`"));
                }
                if let Some(prev) = links.last() {
                    check_count(prev)?;
                }
                links.push(PendingLink {
                    line: n,
                    tx: TxId { bs: parse_num(toks[2], n, "bs")?, elem: parse_num(toks[3], n, "element")? },
                    rx: RxId {
                        area: parse_num(toks[5], n, "area")?,
                        point: parse_num(toks[6], n, "point")?,
                        elem: parse_num(toks[7], n, "element")?,
                    },
                    declared: parse_num(toks[9], n, "path count")?,
                    paths: Vec::new(),
                });
            }
            _ => {
                let Some(link) = links.last_mut() else {
                    return Err(malformed(n, alloc::format!("unexpected `{}`", toks[0])));
                };
                if toks.len() != 7 {
                    return Err(malformed(n, "path line needs 7 fields"));
                }
                let mut v = [0f64; 7];
                for (slot, tok) in v.iter_mut().zip(&toks) {
                    *slot = parse_num(tok, n, "number")?;
                }
                let rec = PathRecord {
                    aod_az: v[0],
                    aod_el: v[1],
                    aoa_az: v[2],
                    aoa_el: v[3],
                    delay: v[4],
                    phase: v[5],
                    power_dbm: v[6],
                }
                .normalized()
                .map_err(|source| ParseError::Path { line: n, source })?;
                if link.paths.len() == link.declared {
                    return Err(ParseError::PathCount {
                        line: link.line,
                        declared: link.declared,
                        found: link.declared + 1,
                    });
                }
                link.paths.push(rec);
            }
        }
    }
    if let Some(prev) = links.last() {
        check_count(prev)?;
    }

    let freq = freq.ok_or(ParseError::MissingFrequency)?;
    let mut data = ScenarioData::new(freq).map_err(|source| ParseError::Scenario { line: 2, source })?;
    for (line, area, grid) in grids {
        data.insert_grid(area, grid).map_err(|source| ParseError::Scenario { line, source })?;
    }
    for p in links {
        data.insert_link(Link::new(p.tx, p.rx, p.paths))
            .map_err(|source| ParseError::Scenario { line: p.line, source })?;
    }
    Ok(data)
}

fn check_count(p: &PendingLink) -> Result<(), ParseError> {
    if p.paths.len() != p.declared {
        return Err(ParseError::PathCount { line: p.line, declared: p.declared, found: p.paths.len() });
    }
    Ok(())
}

struct Real(f64);

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.16e}", self.0)
    }
}

/// Writes the canonical text form: header, frequency, grids by area, then
/// links in key order.
pub fn write_paths(data: &ScenarioData) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    // Writing to a String cannot fail.
    let _ = writeln!(out, "freq_hz {}", Real(data.freq_hz));
    for (area, g) in data.grids() {
        let _ = writeln!(
            out,
            "grid {} {} {} {} {} {} {}",
            area,
            Real(g.origin.x),
            Real(g.origin.y),
            Real(g.origin.z),
            Real(g.spacing),
            g.rows,
            g.cols
        );
    }
    for link in data.links() {
        let _ = writeln!(
            out,
            "link tx {} {} rx {} {} {} npaths {}",
            link.tx.bs,
            link.tx.elem,
            link.rx.area,
            link.rx.point,
            link.rx.elem,
            link.len()
        );
        for p in link.paths() {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {}",
                Real(p.aod_az),
                Real(p.aod_el),
                Real(p.aoa_az),
                Real(p.aoa_el),
                Real(p.delay),
                Real(p.phase),
                Real(p.power_dbm)
            );
        }
    }
    out
}

impl fmt::Display for ScenarioData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_paths(self))
    }
}

impl core::str::FromStr for ScenarioData {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_paths(s)
    }
}
