//! Comparison pipeline: exact bands against singular Bohr–Sommerfeld
//! predictions near each separatrix, plus the output writers.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::actions::{edge_weights, EdgeWeight};
use crate::classical::{find_critical_points, separatrix_graph, CriticalKind};
use crate::error::{Error, Result};
use crate::quantum::{band_structure, reduce_pm_pi, BandTable, FluxContext, KGrid, SpectralKind};
use crate::singular_bs::{
    detect_scenario, generic_roots, Conventions, SaddleInvariant, Scenario, ScenarioParams, SeparatrixData, Widths,
    DEFAULT_WINDOW,
};
use crate::symbol::TrigSymbol;

pub const SCHEMA_VERSION: u32 = 1;
/// `λ₀` values of the dispersion panels and formula width columns.
pub const PANEL_LAMBDAS: [f64; 3] = [-1.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Config(format!("unknown format `{other}` (expected csv, json or svg)"))),
        }
    }
}

pub fn parse_formats(list: &str) -> Result<Vec<Format>> {
    let mut out: Vec<Format> = list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    out.dedup();
    Ok(out)
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Y" => Ok(Scenario::Y),
            "X" => Ok(Scenario::X),
            "DEG" => Ok(Scenario::Deg),
            other => Err(Error::Config(format!("unknown scenario `{other}` (expected Y, X or DEG)"))),
        }
    }
}

/// `NxM` k-grid syntax.
pub fn parse_kgrid(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("k-grid must look like 64x64, got `{s}`"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn parse_etas(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad flux value `{t}`"))))
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub symbol: TrigSymbol,
    /// Where the symbol came from (file path or a short description).
    pub symbol_source: String,
    pub etas: Vec<usize>,
    pub kgrid: (usize, usize),
    /// Half-width `A` of the `λ` window.
    pub window: f64,
    pub scenario: Option<Scenario>,
    /// Separatrix energies to examine; all saddle values when `None`.
    pub energies: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
    pub formats: Vec<Format>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(symbol: TrigSymbol, symbol_source: impl Into<String>) -> Self {
        RunConfig {
            symbol,
            symbol_source: symbol_source.into(),
            etas: vec![64],
            kgrid: (16, 16),
            window: DEFAULT_WINDOW,
            scenario: None,
            energies: None,
            out_dir: None,
            formats: vec![Format::Csv, Format::Json, Format::Svg],
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.etas.is_empty() {
            return Err(Error::Config("at least one flux value is required".into()));
        }
        if let Some(&bad) = self.etas.iter().find(|&&e| e == 0) {
            return Err(Error::Config(format!("flux must be a positive integer, got {bad}")));
        }
        if self.kgrid.0 < 2 || self.kgrid.1 < 2 {
            return Err(Error::Config(format!("k-grid must be at least 2x2, got {}x{}", self.kgrid.0, self.kgrid.1)));
        }
        if !(self.window > 0.0 && self.window <= 50.0) {
            return Err(Error::Config(format!("window must lie in (0, 50], got {}", self.window)));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        if let Some(es) = &self.energies {
            if es.iter().any(|e| !e.is_finite()) {
                return Err(Error::Config("energies must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "symbol": self.symbol.to_json_value(),
            "symbol_source": self.symbol_source,
            "eta": self.etas,
            "kgrid": [self.kgrid.0, self.kgrid.1],
            "window": self.window,
            "scenario": self.scenario,
            "energies": self.energies,
            "formats": self.formats,
            "threads": self.threads,
        })
    }
}

/// Run `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Item {
    pub kind: SpectralKind,
    pub lo: f64,
    pub hi: f64,
}

impl Item {
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Match {
    pub predicted: usize,
    pub measured: usize,
    /// `(measured − predicted centre) / h`.
    pub center_offset: f64,
    /// Measured over predicted width, when the prediction is nonzero.
    pub width_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandTop {
    pub band_center: f64,
    pub measured: (f64, f64),
    pub predicted: (f64, f64),
    /// The plain two-loop maximum, before branch selection.
    pub kmax: (f64, f64),
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaComparison {
    pub eta: usize,
    pub h: f64,
    pub measured: Vec<Item>,
    pub predicted: Vec<Item>,
    pub matches: Vec<Match>,
    pub formula_widths: Vec<(f64, Widths)>,
    pub band_tops: Vec<BandTop>,
    /// Width of the measured band nearest the separatrix, times `|log h|/h`.
    pub central_band_scaled: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparatrixComparison {
    pub energy: f64,
    pub scenario: Option<Scenario>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub saddles: Vec<SaddleInvariant>,
    pub edges: Vec<EdgeWeight>,
    pub runs: Vec<EtaComparison>,
    /// Ratios of `central_band_scaled` between consecutive fluxes.
    pub convergence: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub config: Value,
    pub separatrices: Vec<SeparatrixComparison>,
}

impl ComparisonReport {
    pub fn empty(config: &RunConfig) -> Self {
        ComparisonReport {
            schema_version: SCHEMA_VERSION,
            config: config.to_json_value(),
            separatrices: Vec::new(),
        }
    }
}

/// Saddle values of the symbol, ascending.
pub fn saddle_energies(symbol: &TrigSymbol) -> Result<Vec<f64>> {
    let crit = find_critical_points(symbol)?;
    let mut v: Vec<f64> = crit.iter().filter(|c| c.kind == CriticalKind::Saddle).map(|c| c.value).collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(v)
}

/// A separatrix with its matching template, if one applies.
#[derive(Debug, Clone)]
pub struct PreparedSeparatrix {
    pub data: SeparatrixData,
    pub params: Option<ScenarioParams>,
    pub note: Option<String>,
}

pub fn prepare(symbol: &TrigSymbol, energy: f64, scenario: Option<Scenario>) -> Result<PreparedSeparatrix> {
    let graph = separatrix_graph(symbol, energy)?;
    let weights = edge_weights(symbol, &graph)?;
    let data = SeparatrixData::new(&graph, &weights)?;
    let detected = match scenario {
        Some(s) => Ok(s),
        None => detect_scenario(&data),
    };
    let (params, note) = match detected {
        Ok(s) => (Some(ScenarioParams::new(&data, s, Conventions::default())?), None),
        Err(Error::ScenarioUnsupported(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    Ok(PreparedSeparatrix { data, params, note })
}

/// Measured bands (merged) and gaps meeting `[lo, hi]`, by centre.
pub fn measured_items(table: &BandTable, lo: f64, hi: f64) -> Vec<Item> {
    let hit = |a: f64, b: f64| b >= lo && a <= hi;
    let mut items: Vec<Item> = table
        .merged
        .iter()
        .filter(|i| hit(i.lo, i.hi))
        .map(|i| Item {
            kind: SpectralKind::Band,
            lo: i.lo,
            hi: i.hi,
        })
        .chain(table.gaps.iter().filter(|i| hit(i.lo, i.hi)).map(|i| Item {
            kind: SpectralKind::Gap,
            lo: i.lo,
            hi: i.hi,
        }))
        .collect();
    items.sort_by(|a, b| a.center().total_cmp(&b.center()));
    items
}

/// Predicted bands and the gaps between them, in energy.
pub fn predicted_items(params: &ScenarioParams, h: f64, window: f64) -> Vec<Item> {
    let e0 = params.energy;
    let bands = params.predicted_bands(h, window);
    let mut items = Vec::new();
    for (i, &(a, b)) in bands.iter().enumerate() {
        if i > 0 {
            items.push(Item {
                kind: SpectralKind::Gap,
                lo: e0 + h * bands[i - 1].1,
                hi: e0 + h * a,
            });
        }
        items.push(Item {
            kind: SpectralKind::Band,
            lo: e0 + h * a,
            hi: e0 + h * b,
        });
    }
    items
}

/// Injective nearest-centre matching between items of the same kind.
pub fn match_items(predicted: &[Item], measured: &[Item], h: f64) -> Vec<Match> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in predicted.iter().enumerate() {
        for (j, m) in measured.iter().enumerate() {
            if p.kind == m.kind {
                pairs.push(((m.center() - p.center()).abs(), i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; predicted.len()];
    let mut used_m = vec![false; measured.len()];
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if used_p[i] || used_m[j] {
            continue;
        }
        used_p[i] = true;
        used_m[j] = true;
        let (p, m) = (&predicted[i], &measured[j]);
        out.push(Match {
            predicted: i,
            measured: j,
            center_offset: (m.center() - p.center()) / h,
            width_ratio: (p.width() > 1e-300).then(|| m.width() / p.width()),
        });
    }
    out.sort_by_key(|m| m.predicted);
    out
}

/// Distance on the Brillouin torus.
pub fn torus_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    reduce_pm_pi(a.0 - b.0).hypot(reduce_pm_pi(a.1 - b.1))
}

/// Grid argmax of each band function whose range centre lies in `[lo, hi]`.
pub fn measured_band_tops(table: &BandTable, lo: f64, hi: f64) -> Vec<(f64, (f64, f64))> {
    let n2 = table.k2.len();
    table
        .band_ranges
        .iter()
        .enumerate()
        .filter(|(_, r)| (lo..=hi).contains(&r.center()))
        .map(|(j, r)| {
            let (idx, _) = table
                .energies
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, row)| if row[j] > best.1 { (i, row[j]) } else { best });
            (r.center(), (table.k1[idx / n2], table.k2[idx % n2]))
        })
        .collect()
}

/// Predicted band tops matched to the measured band functions (DEG only).
pub fn band_tops(params: &ScenarioParams, table: &BandTable, h: f64, window: f64) -> Result<Vec<BandTop>> {
    if params.scenario != Scenario::Deg {
        return Ok(Vec::new());
    }
    let e0 = params.energy;
    let bands = params.predicted_bands(h, window);
    let mut out = Vec::new();
    for (center, measured) in measured_band_tops(table, e0 - window * h, e0 + window * h) {
        let l = (center - e0) / h;
        let Some(&band) = bands
            .iter()
            .filter(|b| b.0 > -window && b.1 < window)
            .min_by(|a, b| (0.5 * (a.0 + a.1) - l).abs().total_cmp(&(0.5 * (b.0 + b.1) - l).abs()))
        else {
            continue;
        };
        let predicted = params.band_top(band, h)?;
        out.push(BandTop {
            band_center: center,
            measured,
            predicted,
            kmax: params.kmax(0.5 * (band.0 + band.1), h)?,
            distance: torus_distance(measured, predicted),
        });
    }
    Ok(out)
}

fn central_band(items: &[Item], e0: f64) -> Option<&Item> {
    items
        .iter()
        .filter(|i| i.kind == SpectralKind::Band)
        .min_by(|a, b| {
            let d = |i: &Item| if i.lo <= e0 && e0 <= i.hi { 0.0 } else { (i.center() - e0).abs() };
            d(a).total_cmp(&d(b))
        })
}

fn compare_one(prep: &PreparedSeparatrix, table: &BandTable, h: f64, window: f64) -> Result<EtaComparison> {
    let e0 = prep.data.energy;
    let measured = measured_items(table, e0 - window * h, e0 + window * h);
    let (predicted, formula_widths, tops) = match &prep.params {
        Some(p) => (
            predicted_items(p, h, window),
            PANEL_LAMBDAS.iter().map(|&l| (l, p.widths(l, h))).collect(),
            band_tops(p, table, h, window)?,
        ),
        None => (Vec::new(), Vec::new(), Vec::new()),
    };
    Ok(EtaComparison {
        eta: table.eta,
        h,
        matches: match_items(&predicted, &measured, h),
        central_band_scaled: central_band(&measured, e0).map(|b| b.width() * h.ln().abs() / h),
        measured,
        predicted,
        formula_widths,
        band_tops: tops,
    })
}

/// Exact band tables for each flux, in configuration order.
pub fn spectra(config: &RunConfig) -> Result<Vec<BandTable>> {
    config
        .etas
        .iter()
        .map(|&eta| band_structure(&config.symbol, FluxContext::new(eta)?, KGrid::new(config.kgrid.0, config.kgrid.1)))
        .collect()
}

fn energies(config: &RunConfig) -> Result<Vec<f64>> {
    match &config.energies {
        Some(e) => Ok(e.clone()),
        None => saddle_energies(&config.symbol),
    }
}

pub fn run_compare(config: &RunConfig) -> Result<ComparisonReport> {
    config.validate()?;
    with_threads(config.threads, || {
        let tables = spectra(config)?;
        let mut report = ComparisonReport::empty(config);
        for e0 in energies(config)? {
            let prep = prepare(&config.symbol, e0, config.scenario)?;
            let runs: Vec<EtaComparison> = tables
                .par_iter()
                .map(|t| compare_one(&prep, t, FluxContext::new(t.eta)?.h(), config.window))
                .collect::<Result<_>>()?;
            let convergence = runs
                .windows(2)
                .map(|w| match (w[0].central_band_scaled, w[1].central_band_scaled) {
                    (Some(a), Some(b)) if a > 0.0 => Some(b / a),
                    _ => None,
                })
                .collect();
            report.separatrices.push(SeparatrixComparison {
                energy: e0,
                scenario: prep.params.as_ref().map(|p| p.scenario),
                note: prep.note.clone(),
                saddles: prep.data.vertices.clone(),
                edges: prep.data.edges.clone(),
                runs,
                convergence,
            });
        }
        Ok(report)
    })?
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparatrixPrediction {
    pub energy: f64,
    pub scenario: Option<Scenario>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub eta: usize,
    pub bands: Vec<Item>,
    pub formula_widths: Vec<(f64, Widths)>,
    pub kmax: Option<(f64, f64)>,
    /// Generic-system roots at `k = 0` (always available).
    pub roots_at_gamma: Vec<f64>,
}

/// Semiclassical predictions only.
pub fn run_predict(config: &RunConfig) -> Result<Value> {
    config.validate()?;
    let out = with_threads(config.threads, || -> Result<Vec<SeparatrixPrediction>> {
        let mut out = Vec::new();
        for e0 in energies(config)? {
            let prep = prepare(&config.symbol, e0, config.scenario)?;
            for &eta in &config.etas {
                let h = FluxContext::new(eta)?.h();
                let p = prep.params.as_ref();
                out.push(SeparatrixPrediction {
                    energy: e0,
                    scenario: p.map(|p| p.scenario),
                    note: prep.note.clone(),
                    eta,
                    bands: p
                        .map(|p| predicted_items(p, h, config.window).into_iter().filter(|i| i.kind == SpectralKind::Band).collect())
                        .unwrap_or_default(),
                    formula_widths: p.map(|p| PANEL_LAMBDAS.iter().map(|&l| (l, p.widths(l, h))).collect()).unwrap_or_default(),
                    kmax: p.and_then(|p| p.kmax(0.0, h).ok()),
                    roots_at_gamma: generic_roots(&prep.data, &Conventions::default(), (0.0, 0.0), h, config.window)
                        .into_iter()
                        .map(|l| e0 + h * l)
                        .collect(),
                });
            }
        }
        Ok(out)
    })??;
    Ok(json!({"schema_version": SCHEMA_VERSION, "config": config.to_json_value(), "predictions": out}))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

pub const CSV_HEADER: &str = "schema_version,separatrix_energy,scenario,eta,kind,lo,hi,center,width,width_scaled,predicted_center,predicted_width\n";

/// One row per measured band or gap.
pub fn widths_csv(report: &ComparisonReport) -> String {
    let mut out = String::from(CSV_HEADER);
    for s in &report.separatrices {
        let scen = s.scenario.map(|x| x.to_string()).unwrap_or_default();
        for r in &s.runs {
            let scale = r.h.ln().abs() / r.h;
            for (j, m) in r.measured.iter().enumerate() {
                let pred = r.matches.iter().find(|x| x.measured == j).map(|x| r.predicted[x.predicted]);
                let kind = match m.kind {
                    SpectralKind::Band => "band",
                    SpectralKind::Gap => "gap",
                };
                let _ = writeln!(
                    out,
                    "{},{:.12e},{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{}",
                    SCHEMA_VERSION,
                    s.energy,
                    scen,
                    r.eta,
                    kind,
                    m.lo,
                    m.hi,
                    m.center(),
                    m.width(),
                    m.width() * scale,
                    pred.map(|p| format!("{:.12e}", p.center())).unwrap_or_default(),
                    pred.map(|p| format!("{:.12e}", p.width())).unwrap_or_default(),
                );
            }
        }
    }
    out
}

const PANEL: f64 = 220.0;
const MARGIN: f64 = 30.0;
const CONTOUR_GRID: usize = 48;
const CONTOUR_LEVELS: usize = 7;

/// Contour segments of `f` on `[−π, π]²` by marching squares, in unit-square
/// coordinates.
fn contour_segments(f: impl Fn(f64, f64) -> f64, levels: &[f64]) -> Vec<((f64, f64), (f64, f64))> {
    use std::f64::consts::PI;
    let n = CONTOUR_GRID;
    let coord = |i: usize| -PI + 2.0 * PI * i as f64 / n as f64;
    let vals: Vec<Vec<f64>> = (0..=n).map(|i| (0..=n).map(|j| f(coord(i), coord(j))).collect()).collect();
    let mut segs = Vec::new();
    for &lv in levels {
        for i in 0..n {
            for j in 0..n {
                let c = [
                    (i, j, vals[i][j]),
                    (i + 1, j, vals[i + 1][j]),
                    (i + 1, j + 1, vals[i + 1][j + 1]),
                    (i, j + 1, vals[i][j + 1]),
                ];
                let mut pts = Vec::new();
                for e in 0..4 {
                    let (a, b) = (c[e], c[(e + 1) % 4]);
                    if (a.2 - lv) * (b.2 - lv) < 0.0 {
                        let t = (lv - a.2) / (b.2 - a.2);
                        let x = a.0 as f64 + t * (b.0 as f64 - a.0 as f64);
                        let y = a.1 as f64 + t * (b.1 as f64 - a.1 as f64);
                        pts.push((x / n as f64, y / n as f64));
                    }
                }
                for pair in pts.chunks_exact(2) {
                    segs.push((pair[0], pair[1]));
                }
            }
        }
    }
    segs
}

fn panel_svg(out: &mut String, params: &ScenarioParams, lambda0: f64, h: f64, x0: f64, y0: f64) {
    use std::f64::consts::PI;
    let f = |k1: f64, k2: f64| params.rhs(lambda0, (k1, k2), h);
    let (lo, hi) = params.rhs_range(lambda0, h);
    let levels: Vec<f64> = (1..=CONTOUR_LEVELS)
        .map(|i| lo + (hi - lo) * i as f64 / (CONTOUR_LEVELS + 1) as f64)
        .collect();
    let _ = writeln!(
        out,
        r#"<g transform="translate({x0:.1},{y0:.1})"><rect width="{PANEL:.1}" height="{PANEL:.1}" fill="white" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="-8" text-anchor="middle" font-size="12">{} at E={:.4}, λ₀={lambda0:+.0}</text>"#,
        PANEL / 2.0,
        params.scenario,
        params.energy
    );
    let mut path = String::new();
    for ((ax, ay), (bx, by)) in contour_segments(f, &levels) {
        let _ = write!(
            path,
            "M{:.2},{:.2}L{:.2},{:.2}",
            ax * PANEL,
            (1.0 - ay) * PANEL,
            bx * PANEL,
            (1.0 - by) * PANEL
        );
    }
    let _ = writeln!(out, r#"<path d="{path}" fill="none" stroke="steelblue" stroke-width="0.8"/>"#);
    if let Ok((k1, k2)) = params.kmax(lambda0, h) {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="crimson"/>"#,
            (k1 + PI) / (2.0 * PI) * PANEL,
            (1.0 - (k2 + PI) / (2.0 * PI)) * PANEL
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">k₁</text><text x="-10" y="{:.1}" font-size="10">k₂</text></g>"#,
        PANEL / 2.0,
        PANEL + 14.0,
        PANEL / 2.0
    );
}

/// Level curves of the predicted dispersion at `λ₀ ∈ {−1, 0, 1}`, one row
/// of panels per separatrix with a matching template.
pub fn dispersion_svg(report: &ComparisonReport, preps: &[Option<ScenarioParams>]) -> String {
    let h = report
        .separatrices
        .first()
        .and_then(|s| s.runs.first())
        .map_or(1.0, |r| r.h);
    let rows: Vec<&ScenarioParams> = preps.iter().flatten().collect();
    let width = MARGIN + PANEL_LAMBDAS.len() as f64 * (PANEL + MARGIN);
    let height = MARGIN + rows.len() as f64 * (PANEL + 2.0 * MARGIN);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" data-schema-version=\"{SCHEMA_VERSION}\">\n"
    );
    for (r, params) in rows.iter().enumerate() {
        for (c, &l) in PANEL_LAMBDAS.iter().enumerate() {
            let x0 = MARGIN + c as f64 * (PANEL + MARGIN);
            let y0 = MARGIN + r as f64 * (PANEL + 2.0 * MARGIN);
            panel_svg(&mut out, params, l, h, x0, y0);
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Write the requested formats into `dir`; returns the paths written.
pub fn emit(report: &ComparisonReport, symbol: &TrigSymbol, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for f in formats {
        let (name, body) = match f {
            Format::Csv => ("widths.csv", widths_csv(report)),
            Format::Json => (
                "report.json",
                serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))? + "\n",
            ),
            Format::Svg => {
                let preps = report
                    .separatrices
                    .iter()
                    .map(|s| {
                        s.scenario
                            .map(|sc| prepare(symbol, s.energy, Some(sc)).map(|p| p.params))
                            .transpose()
                            .map(Option::flatten)
                    })
                    .collect::<Result<Vec<_>>>()?;
                ("dispersion.svg", dispersion_svg(report, &preps))
            }
        };
        let path = dir.join(name);
        write_file(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band(lo: f64, hi: f64) -> Item {
        Item {
            kind: SpectralKind::Band,
            lo,
            hi,
        }
    }

    #[test]
    fn matching_is_injective_and_kind_aware() {
        let p = [band(0.0, 1.0), band(1.1, 2.0)];
        let m = [
            band(0.05, 1.0),
            Item {
                kind: SpectralKind::Gap,
                lo: 1.0,
                hi: 1.1,
            },
        ];
        let ms = match_items(&p, &m, 1.0);
        assert_eq!(ms.len(), 1);
        assert_eq!((ms[0].predicted, ms[0].measured), (0, 0));
        assert!((ms[0].center_offset - 0.025).abs() < 1e-15);
    }

    #[test]
    fn parsers() {
        assert_eq!(parse_kgrid("64x32").unwrap(), (64, 32));
        assert!(parse_kgrid("64").is_err());
        assert_eq!(parse_etas("64,128").unwrap(), vec![64, 128]);
        assert_eq!(parse_formats("csv,svg").unwrap(), vec![Format::Csv, Format::Svg]);
        assert!(parse_formats("pdf").is_err());
        assert_eq!("deg".parse::<Scenario>().unwrap(), Scenario::Deg);
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new(TrigSymbol::harper(0.5), "harper");
        assert!(c.validate().is_ok());
        c.kgrid = (1, 4);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.kgrid = (4, 4);
        c.etas.clear();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn torus_distance_wraps() {
        assert!(torus_distance((3.1, 0.0), (-3.1, 0.0)) < 0.1);
    }

    #[test]
    fn empty_report_writes_headers_only() {
        let c = RunConfig::new(TrigSymbol::harper(0.5), "harper");
        let r = ComparisonReport::empty(&c);
        assert_eq!(widths_csv(&r), CSV_HEADER);
        let svg = dispersion_svg(&r, &[]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
