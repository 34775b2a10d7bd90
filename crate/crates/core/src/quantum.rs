//! Exact spectra at integer flux.
//!
//! With `h = 2π/η`, a joint Bloch eigenfunction is a comb supported on
//! `x ∈ x₀ + hℤ`, `x₀ = −h k₁/2π`, with amplitudes `a_{j+η} = e^{ik₂} a_j`.
//! The Weyl quantization of `e^{i(mp+nx)}` acts by
//! `(Uf)(x) = e^{+imnh/2} e^{inx} f(x+mh)`, so on the comb
//! `(M a)_i = Σ c_{mn} e^{imnh/2} e^{in x_i} a_{i+m}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::eigen::{hermitian_eigenvalues, DenseMatrix};
use crate::error::{Error, Result};
use crate::symbol::TrigSymbol;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const DEFAULT_KGRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxContext {
    eta: usize,
    h: f64,
}

impl FluxContext {
    pub fn new(eta: usize) -> Result<Self> {
        if eta == 0 {
            return Err(Error::InvalidFlux("eta must be at least 1".into()));
        }
        Ok(FluxContext {
            eta,
            h: 2.0 * PI / eta as f64,
        })
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn h(&self) -> f64 {
        self.h
    }
}

/// Bloch parameters, reduced to `[−π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quasimomentum {
    pub k1: f64,
    pub k2: f64,
}

impl Quasimomentum {
    pub fn new(k1: f64, k2: f64) -> Self {
        Quasimomentum {
            k1: reduce_pm_pi(k1),
            k2: reduce_pm_pi(k2),
        }
    }
}

pub fn reduce_pm_pi(k: f64) -> f64 {
    let r = (k + PI).rem_euclid(2.0 * PI) - PI;
    if r >= PI {
        -PI
    } else {
        r
    }
}

/// The η×η matrix of the operator on the Bloch fibre at `k`.
#[derive(Debug, Clone)]
pub struct BlochMatrix {
    matrix: DenseMatrix,
}

impl BlochMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.size()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.matrix)
    }
}

/// Assemble with an explicit sign of the BCH phase. Only `+1` yields a
/// Hermitian matrix; the other sign is kept for the negative test.
fn assemble(symbol: &TrigSymbol, flux: FluxContext, k: Quasimomentum, phase_sign: f64) -> DenseMatrix {
    let eta = flux.eta as i64;
    let h = flux.h;
    let mut m = DenseMatrix::zeros(flux.eta);
    for (&(mm, nn), &c) in symbol.coeffs() {
        let bch = Complex64::from_polar(1.0, phase_sign * (mm as f64) * (nn as f64) * h / 2.0);
        for i in 0..eta {
            let xi = h * (i as f64 - k.k1 / (2.0 * PI));
            let j = i + mm as i64;
            let r = j.rem_euclid(eta);
            let q = j.div_euclid(eta);
            let wrap = Complex64::from_polar(1.0, q as f64 * k.k2);
            let diag = Complex64::from_polar(1.0, nn as f64 * xi);
            m[(i as usize, r as usize)] += c * bch * diag * wrap;
        }
    }
    m
}

/// `scale` floors the relative test so that symbols whose terms nearly cancel
/// are not rejected for rounding noise.
fn checked(mut m: DenseMatrix, scale: f64) -> Result<BlochMatrix> {
    let norm = m.frobenius_norm();
    let defect = m.hermiticity_defect();
    if defect > HERMITICITY_TOL * norm.max(scale) {
        return Err(Error::HermiticityFailure { defect, norm });
    }
    m.symmetrize();
    Ok(BlochMatrix { matrix: m })
}

fn assembly_scale(symbol: &TrigSymbol, flux: FluxContext) -> f64 {
    symbol.abs_sum() * (flux.eta as f64).sqrt()
}

pub fn bloch_matrix(symbol: &TrigSymbol, flux: FluxContext, k: Quasimomentum) -> Result<BlochMatrix> {
    checked(assemble(symbol, flux, k, 1.0), assembly_scale(symbol, flux))
}

#[doc(hidden)]
pub fn bloch_matrix_with_phase_sign(
    symbol: &TrigSymbol,
    flux: FluxContext,
    k: Quasimomentum,
    sign: f64,
) -> Result<BlochMatrix> {
    checked(assemble(symbol, flux, k, sign), assembly_scale(symbol, flux))
}

/// Eigenvalues of `M(k)`, ascending.
pub fn spectrum_at(symbol: &TrigSymbol, flux: FluxContext, k: Quasimomentum) -> Result<Vec<f64>> {
    bloch_matrix(symbol, flux, k)?.eigenvalues()
}

/// Γ-centred half-open grid of `n` points on `[−π, π)`; contains 0 and,
/// for even `n`, −π.
pub fn k_axis(n: usize) -> Vec<f64> {
    let half = (n / 2) as f64;
    (0..n).map(|i| 2.0 * PI * (i as f64 - half) / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KGrid {
    pub n1: usize,
    pub n2: usize,
}

impl KGrid {
    pub fn new(n1: usize, n2: usize) -> Self {
        KGrid { n1, n2 }
    }

    pub fn square(n: usize) -> Self {
        KGrid { n1: n, n2: n }
    }
}

impl Default for KGrid {
    fn default() -> Self {
        KGrid::square(DEFAULT_KGRID)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone)]
pub struct BandTable {
    pub eta: usize,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    /// `energies[i1 * n2 + i2][j]`: band `j` at `(k1[i1], k2[i2])`.
    pub energies: Vec<Vec<f64>>,
    /// Range of each band function.
    pub band_ranges: Vec<Interval>,
    pub merged: Vec<Interval>,
    pub gaps: Vec<Interval>,
}

impl BandTable {
    pub fn total_bandwidth(&self) -> f64 {
        self.merged.iter().map(Interval::width).sum()
    }

    /// `min E_{j+1} − max E_j` for consecutive band functions; negative when
    /// they overlap.
    pub fn band_function_gaps(&self) -> Vec<f64> {
        self.band_ranges
            .windows(2)
            .map(|w| w[1].lo - w[0].hi)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("eta,k1,k2,band_index,energy\n");
        let n2 = self.k2.len();
        for (idx, row) in self.energies.iter().enumerate() {
            let (k1, k2) = (self.k1[idx / n2], self.k2[idx % n2]);
            for (j, e) in row.iter().enumerate() {
                out.push_str(&format!("{},{:.17e},{:.17e},{},{:.17e}\n", self.eta, k1, k2, j + 1, e));
            }
        }
        out
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let iv = |v: &[Interval]| -> Vec<serde_json::Value> {
            v.iter()
                .map(|i| serde_json::json!({"lo": i.lo, "hi": i.hi, "width": i.width()}))
                .collect()
        };
        serde_json::json!({
            "schema_version": 1,
            "eta": self.eta,
            "kgrid": [self.k1.len(), self.k2.len()],
            "bands": iv(&self.merged),
            "gaps": iv(&self.gaps),
            "band_functions": iv(&self.band_ranges),
        })
    }
}

fn merge(ranges: &[Interval]) -> (Vec<Interval>, Vec<Interval>) {
    let mut sorted = ranges.to_vec();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut merged: Vec<Interval> = Vec::new();
    for r in sorted {
        match merged.last_mut() {
            Some(last) if r.lo <= last.hi => last.hi = last.hi.max(r.hi),
            _ => merged.push(r),
        }
    }
    let gaps = merged
        .windows(2)
        .map(|w| Interval {
            lo: w[0].hi,
            hi: w[1].lo,
        })
        .collect();
    (merged, gaps)
}

pub fn band_structure(symbol: &TrigSymbol, flux: FluxContext, grid: KGrid) -> Result<BandTable> {
    if grid.n1 < 2 || grid.n2 < 2 {
        return Err(Error::Config(format!(
            "k-grid must be at least 2x2, got {}x{}",
            grid.n1, grid.n2
        )));
    }
    let k1 = k_axis(grid.n1);
    let k2 = k_axis(grid.n2);
    let points: Vec<(f64, f64)> = k1
        .iter()
        .flat_map(|&a| k2.iter().map(move |&b| (a, b)))
        .collect();
    // rayon's indexed collect keeps grid order regardless of scheduling
    let energies = points
        .par_iter()
        .map(|&(a, b)| spectrum_at(symbol, flux, Quasimomentum::new(a, b)))
        .collect::<Result<Vec<_>>>()?;
    let eta = flux.eta;
    let band_ranges: Vec<Interval> = (0..eta)
        .map(|j| {
            let (lo, hi) = energies
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), row| {
                    (lo.min(row[j]), hi.max(row[j]))
                });
            Interval { lo, hi }
        })
        .collect();
    let (merged, gaps) = merge(&band_ranges);
    Ok(BandTable {
        eta,
        k1,
        k2,
        energies,
        band_ranges,
        merged,
        gaps,
    })
}

/// Double the grid from `start` until the total bandwidth moves by less than
/// `tol`, or `max_n` is reached. Returns the last table.
pub fn band_structure_refined(
    symbol: &TrigSymbol,
    flux: FluxContext,
    start: usize,
    max_n: usize,
    tol: f64,
) -> Result<BandTable> {
    let mut n = start.max(2);
    let mut table = band_structure(symbol, flux, KGrid::square(n))?;
    while n * 2 <= max_n {
        n *= 2;
        let next = band_structure(symbol, flux, KGrid::square(n))?;
        let change = (next.total_bandwidth() - table.total_bandwidth()).abs();
        table = next;
        if change < tol {
            break;
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralKind {
    Band,
    Gap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralItem {
    pub kind: SpectralKind,
    pub width: f64,
    pub center: f64,
}

/// Bands and gaps meeting `[e0 − window, e0 + window]`, sorted by centre.
pub fn widths_near(table: &BandTable, e0: f64, window: f64) -> Result<Vec<SpectralItem>> {
    if !(window > 0.0) {
        return Err(Error::Config(format!("window must be positive, got {window}")));
    }
    let (lo, hi) = (e0 - window, e0 + window);
    let hits = |i: &Interval| i.hi >= lo && i.lo <= hi;
    if !table.merged.iter().any(hits) {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let mut items: Vec<SpectralItem> = table
        .merged
        .iter()
        .filter(|i| hits(i))
        .map(|i| SpectralItem {
            kind: SpectralKind::Band,
            width: i.width(),
            center: i.center(),
        })
        .chain(table.gaps.iter().filter(|i| hits(i)).map(|i| SpectralItem {
            kind: SpectralKind::Gap,
            width: i.width(),
            center: i.center(),
        }))
        .collect();
    items.sort_by(|a, b| a.center.total_cmp(&b.center));
    Ok(items)
}
