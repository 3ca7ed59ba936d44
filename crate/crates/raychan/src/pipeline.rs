//! Job orchestration: source loading, dataset generation and validation.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use raychan_core::beams::{awgn_observe, build_dataset, Codebook, RateParams, WindowSpec, WindowedSample};
use raychan_core::chansynth::{bin_paths, synth_matrix, synth_uldl, CarrierPair, ChannelMatrix, PairSelection};
use raychan_core::mobility::{sample_trajectory, synth_mobile, Direction, MovementSpec};
use raychan_core::raypaths::{parse_paths, write_paths, Link, ScenarioData};
use raychan_core::Complex64;

use crate::config::{JobConfig, PointSelection, SourceSpec};
use crate::manifest::{Manifest, MANIFEST_NAME};
use crate::scene::SceneFile;
use crate::tensor::Tensor;

/// Reads a paths file or traces a scene file.
pub fn load_source(cfg: &JobConfig, spec: &SourceSpec) -> Result<ScenarioData> {
    match spec {
        SourceSpec::Paths(p) => {
            let path = cfg.resolve(p);
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            parse_paths(&text).with_context(|| format!("parsing {}", path.display()))
        }
        SourceSpec::Scene(p) => {
            let path = cfg.resolve(p);
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            SceneFile::from_json(&text).and_then(|s| s.trace()).with_context(|| format!("tracing {}", path.display()))
        }
    }
}

/// Selected user points of `area`, checked against its grid.
pub fn selected_points(cfg: &JobConfig, data: &ScenarioData, area: u32) -> Result<Vec<u32>> {
    let grid = data.grid(area).with_context(|| format!("area {area} not in source"))?;
    match &cfg.selected_points {
        PointSelection::All(_) => Ok((0..grid.n_points()).collect()),
        PointSelection::List(v) => {
            if let Some(p) = v.iter().find(|&&p| p >= grid.n_points()) {
                bail!("selected point {p} outside area {area} ({} points)", grid.n_points());
            }
            Ok(v.clone())
        }
    }
}

/// Checks that every referenced BS, area and point exists in `data`.
pub fn check_references(cfg: &JobConfig, data: &ScenarioData) -> Result<()> {
    if let Some(band) = cfg.band_hz {
        ensure!(
            (band - data.freq_hz).abs() <= 1e-9 * band,
            "band_hz {band} differs from source frequency {}",
            data.freq_hz
        );
    }
    let stations = data.base_stations();
    for bs in &cfg.active_bs {
        ensure!(stations.contains(bs), "base station {bs} not in source");
    }
    for &area in &cfg.active_areas {
        selected_points(cfg, data, area)?;
    }
    Ok(())
}

/// Resolves `(f_up, f_dn)`, defaulting to the frequency of the respective
/// source.
pub fn carriers(cfg: &JobConfig, ul_freq: f64, dl_freq: f64) -> Result<CarrierPair> {
    Ok(CarrierPair::new(cfg.f_up_hz.unwrap_or(ul_freq), cfg.f_dn_hz.unwrap_or(dl_freq))?)
}

fn selection(cfg: &JobConfig, data: &ScenarioData, bs: u32, area: u32, point: u32) -> PairSelection {
    PairSelection {
        bs,
        area,
        point,
        n_tx: cfg.tx_elements.unwrap_or_else(|| data.tx_element_count(bs)),
        n_rx: cfg.rx_elements.unwrap_or_else(|| data.rx_element_count(area, point)),
    }
}

fn stack(dims: Vec<usize>, mats: &[ChannelMatrix]) -> Result<Tensor> {
    let data = mats.iter().flat_map(|m| m.as_slice().iter().copied()).collect();
    Ok(Tensor::new(dims, data)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Static,
    Mobile,
    Beams,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Static => "static",
            Mode::Mobile => "mobile",
            Mode::Beams => "beams",
        }
    }

    /// The mode implied by the config flags.
    pub fn from_config(cfg: &JobConfig) -> Mode {
        if cfg.beams.enabled {
            Mode::Beams
        } else if cfg.moving {
            Mode::Mobile
        } else {
            Mode::Static
        }
    }
}

/// In-memory dataset, ready to be written.
#[derive(Debug, Default)]
pub struct Dataset {
    pub tensors: Vec<(String, Tensor)>,
    /// `(name, data rows, contents)`.
    pub tables: Vec<(String, usize, String)>,
}

/// `H_up`/`H_dn` of shape `(points, K, G)` per active BS and area.
pub fn generate_static(cfg: &JobConfig, data: &ScenarioData) -> Result<Dataset> {
    check_references(cfg, data)?;
    let carriers = carriers(cfg, data.freq_hz, data.freq_hz)?;
    let mut out = Dataset::default();
    for &bs in &cfg.active_bs {
        for &area in &cfg.active_areas {
            let points = selected_points(cfg, data, area)?;
            let first = selection(cfg, data, bs, area, points[0]);
            let (mut ups, mut dns) = (Vec::new(), Vec::new());
            for &point in &points {
                let sel = PairSelection { point, ..first };
                let (u, d) = synth_matrix(data, &sel, cfg.bw_hz, carriers)
                    .with_context(|| format!("bs {bs}, area {area}, point {point}"))?;
                ups.push(u);
                dns.push(d);
            }
            let dims = vec![points.len(), first.n_tx, first.n_rx];
            out.tensors.push((format!("h_up_bs{bs}_area{area}.dai6"), stack(dims.clone(), &ups)?));
            out.tensors.push((format!("h_dn_bs{bs}_area{area}.dai6"), stack(dims, &dns)?));
        }
    }
    Ok(out)
}

/// `H_up`/`H_dn` of shape `(samples, K, G)` along the configured trajectory,
/// one pair of tensors per active BS.
pub fn generate_mobile(cfg: &JobConfig, data: &ScenarioData) -> Result<Dataset> {
    check_references(cfg, data)?;
    let spec = cfg.movement_checked()?;
    let carriers = carriers(cfg, data.freq_hz, data.freq_hz)?;
    let grid = data.grid(spec.area).with_context(|| format!("movement area {} not in source", spec.area))?;
    let samples = sample_trajectory(&spec, grid)?;
    let mut out = Dataset::default();
    for &bs in &cfg.active_bs {
        let sel = selection(cfg, data, bs, spec.area, spec.start_point);
        let (mut ups, mut dns) = (Vec::new(), Vec::new());
        for s in &samples {
            let (u, d) = synth_mobile(data, &sel, s, cfg.bw_hz, carriers)
                .with_context(|| format!("bs {bs}, sample {}", s.kappa))?;
            ups.push(u);
            dns.push(d);
        }
        let dims = vec![samples.len(), sel.n_tx, sel.n_rx];
        let area = spec.area;
        out.tensors.push((format!("h_up_bs{bs}_area{area}_mobile.dai6"), stack(dims.clone(), &ups)?));
        out.tensors.push((format!("h_dn_bs{bs}_area{area}_mobile.dai6"), stack(dims, &dns)?));
    }
    Ok(out)
}

/// Seed of the UL observation noise at slot `t`.
pub fn slot_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// One BS-side channel vector per time slot.
pub type Series = Vec<Vec<Complex64>>;

/// Per-slot BS-side vectors along the trajectory: UL from `ul` at `f_up`,
/// DL from `dl` at `f_dn`, first user element only.
pub fn beam_series(cfg: &JobConfig, ul: &ScenarioData, dl: &ScenarioData) -> Result<(Series, Series)> {
    check_references(cfg, ul)?;
    let spec = cfg.movement_checked()?;
    let bs = cfg.active_bs[0];
    let grid = ul.grid(spec.area).with_context(|| format!("movement area {} not in source", spec.area))?;
    ensure!(dl.grid(spec.area) == Some(grid), "area {} differs between the UL and DL sources", spec.area);
    let carriers = carriers(cfg, ul.freq_hz, dl.freq_hz)?;
    let samples = sample_trajectory(&spec, grid)?;
    let ul_sel = PairSelection { n_rx: 1, ..selection(cfg, ul, bs, spec.area, spec.start_point) };
    let dl_sel = PairSelection { n_tx: cfg.beams.dl_tx_elements.unwrap_or_else(|| dl.tx_element_count(bs)), ..ul_sel };
    let mut up = Vec::with_capacity(samples.len());
    let mut dn = Vec::with_capacity(samples.len());
    for s in &samples {
        let (u, _) =
            synth_mobile(ul, &ul_sel, s, cfg.bw_hz, carriers).with_context(|| format!("UL sample {}", s.kappa))?;
        let (_, d) =
            synth_mobile(dl, &dl_sel, s, cfg.bw_hz, carriers).with_context(|| format!("DL sample {}", s.kappa))?;
        up.push(u.column(0));
        dn.push(d.column(0));
    }
    Ok((up, dn))
}

/// Windowed beam-prediction samples from per-slot UL/DL vectors.
pub fn beam_samples(cfg: &JobConfig, up: &[Vec<Complex64>], dn: &[Vec<Complex64>]) -> Result<Vec<WindowedSample>> {
    let b = &cfg.beams;
    let observed = up
        .iter()
        .enumerate()
        .map(|(t, h)| awgn_observe(h, Complex64::new(1.0, 0.0), b.noise_var, slot_seed(cfg.seed, t)))
        .collect::<Result<Vec<_>, _>>()?;
    let antennas = dn.first().map_or(0, Vec::len);
    let codebook = Codebook::dft(b.n_beams, antennas)?;
    let params = RateParams::new(b.bandwidth_hz.unwrap_or(cfg.bw_hz), b.snr)?;
    Ok(build_dataset(&observed, dn, &codebook, params, WindowSpec { window: b.window, horizon: b.horizon })?)
}

/// Features `(samples, W, M_sub6)`, labels `(samples,)` and the label CSV.
pub fn generate_beams(cfg: &JobConfig, ul: &ScenarioData, dl: &ScenarioData) -> Result<Dataset> {
    let (up, dn) = beam_series(cfg, ul, dl)?;
    let samples = beam_samples(cfg, &up, &dn)?;
    let m_sub6 = up.first().map_or(0, Vec::len);
    let features = samples.iter().flat_map(|s| s.features.iter().flatten().copied()).collect();
    let labels = samples.iter().map(|s| Complex64::new(s.label as f64, 0.0)).collect();
    let mut csv = String::from("t,label,rate_bps\n");
    for s in &samples {
        csv.push_str(&format!("{},{},{:e}\n", s.t, s.label, s.rate));
    }
    let n = samples.len();
    Ok(Dataset {
        tensors: vec![
            ("beam_features.dai6".into(), Tensor::new(vec![n, cfg.beams.window, m_sub6], features)?),
            ("beam_labels.dai6".into(), Tensor::new(vec![n], labels)?),
        ],
        tables: vec![("beam_labels.csv".into(), n, csv)],
    })
}

/// Writes the dataset files and `manifest.json` into `dir`.
pub fn write_dataset(cfg: &JobConfig, mode: Mode, dir: &Path, ds: &Dataset) -> Result<Manifest> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut manifest = Manifest::new(mode.name(), cfg.hash(), cfg.seed);
    for (name, t) in &ds.tensors {
        let bytes = t.to_bytes();
        fs::write(dir.join(name), &bytes).with_context(|| format!("writing {name}"))?;
        manifest.add_tensor(name, t, &bytes);
    }
    for (name, rows, text) in &ds.tables {
        fs::write(dir.join(name), text).with_context(|| format!("writing {name}"))?;
        manifest.add_csv(name, *rows, text.as_bytes());
    }
    fs::write(dir.join(MANIFEST_NAME), manifest.to_json()).context("writing manifest")?;
    Ok(manifest)
}

/// Loads the configured sources, generates `mode` and writes it to `dir`.
pub fn run(cfg: &JobConfig, mode: Mode, dir: &Path) -> Result<Manifest> {
    let data = load_source(cfg, &cfg.source)?;
    let ds = match mode {
        Mode::Static => generate_static(cfg, &data)?,
        Mode::Mobile => generate_mobile(cfg, &data)?,
        Mode::Beams => match &cfg.beams.dl_source {
            Some(spec) => generate_beams(cfg, &data, &load_source(cfg, spec).context("DL source")?)?,
            None => generate_beams(cfg, &data, &data)?,
        },
    };
    write_dataset(cfg, mode, dir, &ds)
}

/// Runs the mode implied by the config into its output directory.
pub fn run_generate(cfg: &JobConfig) -> Result<Manifest> {
    run(cfg, Mode::from_config(cfg), &cfg.output_path())
}

/// Traces the scene source (and a scene DL source) into paths files.
pub fn run_trace(cfg: &JobConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut jobs = vec![("paths.txt", &cfg.source)];
    if let Some(dl) = &cfg.beams.dl_source {
        jobs.push(("paths_dl.txt", dl));
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for (name, spec) in jobs {
        if !matches!(spec, SourceSpec::Scene(_)) {
            if name == "paths.txt" {
                bail!("`trace` needs a scene source");
            }
            continue;
        }
        let data = load_source(cfg, spec)?;
        let path = dir.join(name);
        fs::write(&path, write_paths(&data)).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &'static str, result: Result<String>) {
        let (passed, detail) = match result {
            Ok(d) => (true, d),
            Err(e) => (false, format!("{e:#}")),
        };
        self.checks.push(Check { name, passed, detail });
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn active_links<'a>(cfg: &'a JobConfig, data: &'a ScenarioData) -> impl Iterator<Item = &'a Link> {
    data.links().filter(|l| cfg.active_bs.contains(&l.tx.bs) && cfg.active_areas.contains(&l.rx.area))
}

fn check_bins(cfg: &JobConfig, data: &ScenarioData) -> Result<String> {
    let mut n = 0;
    for link in active_links(cfg, data) {
        let taps = bin_paths(link, cfg.bw_hz)?;
        ensure!(
            taps.path_count() == link.len(),
            "{} -> {}: {} paths binned of {}",
            link.tx,
            link.rx,
            taps.path_count(),
            link.len()
        );
        n += 1;
    }
    Ok(format!("{n} links"))
}

fn check_equal_carriers(cfg: &JobConfig, data: &ScenarioData) -> Result<String> {
    let c = carriers(cfg, data.freq_hz, data.freq_hz)?;
    let mut n = 0;
    for link in active_links(cfg, data) {
        for f in [c.f_up, c.f_dn] {
            let (u, d) = synth_uldl(link, cfg.bw_hz, CarrierPair::new(f, f)?)?;
            ensure!(u == d, "{} -> {} at {f} Hz: {u} != {d}", link.tx, link.rx);
        }
        n += 1;
    }
    Ok(format!("{n} links at f_up and f_dn"))
}

fn check_zero_speed(cfg: &JobConfig, data: &ScenarioData) -> Result<String> {
    let c = carriers(cfg, data.freq_hz, data.freq_hz)?;
    let mut n = 0;
    for &bs in &cfg.active_bs {
        for &area in &cfg.active_areas {
            let grid = data.grid(area).with_context(|| format!("area {area}"))?;
            for point in selected_points(cfg, data, area)? {
                let sel = selection(cfg, data, bs, area, point);
                let spec = MovementSpec {
                    area,
                    start_point: point,
                    direction: Direction::Right,
                    speed: 0.0,
                    sample_interval: 1.0,
                    n_samples: 1,
                };
                let sample = sample_trajectory(&spec, grid)?.remove(0);
                let mobile = synth_mobile(data, &sel, &sample, cfg.bw_hz, c)?;
                let fixed = synth_matrix(data, &sel, cfg.bw_hz, c)?;
                ensure!(mobile == fixed, "bs {bs}, area {area}, point {point}: mobile differs from static");
                n += 1;
            }
        }
    }
    Ok(format!("{n} points"))
}

fn check_codebook(cfg: &JobConfig, antennas: usize) -> Result<String> {
    let cb = Codebook::dft(cfg.beams.n_beams, antennas)?;
    for (i, f) in cb.beams().enumerate() {
        let norm = f.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        ensure!((norm - 1.0).abs() <= 1e-12, "beam {i} has norm {norm}");
    }
    Ok(format!("{} beams over {antennas} antennas", cb.len()))
}

/// Runs the built-in invariant checks against the configured source.
/// Failures become report entries.
pub fn run_validate(cfg: &JobConfig) -> Report {
    let mut report = Report::default();
    let data = match load_source(cfg, &cfg.source) {
        Ok(d) => {
            report.push("source", Ok(format!("{} links, {} paths", d.n_links(), d.path_count())));
            d
        }
        Err(e) => {
            report.push("source", Err(e));
            return report;
        }
    };
    let dl = cfg.beams.dl_source.as_ref().map(|spec| load_source(cfg, spec));
    if let Some(Err(e)) = &dl {
        report.push("dl_source", Err(anyhow::anyhow!("{e:#}")));
    }
    let refs = check_references(cfg, &data);
    let refs_ok = refs.is_ok();
    report.push("references", refs.map(|_| "all referenced ids exist".into()));
    if !refs_ok {
        return report;
    }
    report.push("bin_conservation", check_bins(cfg, &data));
    report.push("uldl_equal_carriers", check_equal_carriers(cfg, &data));
    report.push("zero_speed", check_zero_speed(cfg, &data));
    let antennas = match &dl {
        Some(Ok(d)) => cfg.beams.dl_tx_elements.unwrap_or_else(|| d.tx_element_count(cfg.active_bs[0])),
        _ => cfg.tx_elements.unwrap_or_else(|| data.tx_element_count(cfg.active_bs[0])),
    };
    report.push("codebook_norms", check_codebook(cfg, antennas.max(1)));
    report
}
