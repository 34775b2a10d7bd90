//! Regular Bohr–Sommerfeld rules away from the separatrices.
//!
//! Closed orbits quantize to flat bands through `|A(E)| = 2πh(n + ½)`.
//! Open orbits of a family `f` satisfy `S_f(E) = h(k₂ + 2πn)`, with `S`
//! taken along `+x` over one period; the plus family is the one whose `S`
//! decreases with energy. Where two curves of opposite families cross, the
//! exact spectrum has an exponentially small gap.

use serde::Serialize;
use std::f64::consts::{PI, TAU};

use crate::actions::{open_action_table, MonotoneCubic, OpenAction};
use crate::classical::{critical_candidates, trace_level_set, CriticalPoint, ReebEdge, ReebEdgeKind, ReebGraph};
use crate::error::{Error, Result};
use crate::flow::Flow;
use crate::quantum::{reduce_pm_pi, FluxContext};
use crate::symbol::{reduce_angle, TrigSymbol};

const TABLE_POINTS: usize = 65;
/// Relative distance kept from the ends of a Reeb edge.
const EDGE_MARGIN: f64 = 1e-9;
const ROOT_TOL: f64 = 1e-10;
const OPEN_TABLE_POINTS: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatLevel {
    pub n: i64,
    pub energy: f64,
    /// `|A|` at the root, equal to `2πh(n + ½)` to the root tolerance.
    pub action: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatBandPrediction {
    pub energy_interval: (f64, f64),
    pub h: f64,
    pub levels: Vec<FlatLevel>,
}

/// `|A(E)|` of one closed family, continued from a seed point.
struct ClosedFamily<'a> {
    symbol: &'a TrigSymbol,
    crit: Vec<(f64, f64)>,
}

impl ClosedFamily<'_> {
    fn area(&self, energy: f64, seed: (f64, f64)) -> Result<(f64, (f64, f64))> {
        let flow = Flow::new(self.symbol, energy, &self.crit);
        let (p, x) = flow.project(seed.0, seed.1);
        let lp = flow.trace_loop((p, x))?;
        if lp.lift != (0, 0) {
            return Err(Error::TracingDivergence(format!(
                "closed family continued onto lift {:?} at E = {energy}",
                lp.lift
            )));
        }
        Ok((lp.action.abs(), (reduce_angle(p), reduce_angle(x))))
    }
}

/// Flat-band energies of one finite Reeb edge.
pub fn flat_bands(symbol: &TrigSymbol, edge: &ReebEdge, flux: FluxContext) -> Result<FlatBandPrediction> {
    if edge.kind != ReebEdgeKind::Finite {
        return Err(Error::Config("flat bands need a finite-motion edge".into()));
    }
    let h = flux.h();
    let (a, b) = edge.energy_interval;
    let fam = ClosedFamily {
        symbol,
        crit: critical_candidates(symbol).iter().map(CriticalPoint::pos).collect(),
    };
    // energies clustered at both ends, continued outwards from the middle
    let margin = EDGE_MARGIN * (b - a);
    let energies: Vec<f64> = (0..TABLE_POINTS)
        .map(|i| {
            let u = 0.5 * (1.0 - (PI * i as f64 / (TABLE_POINTS - 1) as f64).cos());
            a + margin + (b - a - 2.0 * margin) * u
        })
        .collect();
    let mid = TABLE_POINTS / 2;
    let mut areas = vec![0.0; TABLE_POINTS];
    let mut seeds = vec![edge.seed; TABLE_POINTS];
    let mut seed = edge.seed;
    for i in (0..=mid).rev() {
        let (s, next) = fam.area(energies[i], seed)?;
        areas[i] = s;
        seeds[i] = next;
        seed = next;
    }
    seed = seeds[mid];
    for i in mid + 1..TABLE_POINTS {
        let (s, next) = fam.area(energies[i], seed)?;
        areas[i] = s;
        seeds[i] = next;
        seed = next;
    }
    let (amin, amax) = (areas[0].min(areas[TABLE_POINTS - 1]), areas[0].max(areas[TABLE_POINTS - 1]));
    let n_lo = ((amin / (TAU * h) - 0.5).ceil() as i64).max(0);
    let n_hi = (amax / (TAU * h) - 0.5).floor() as i64;
    let mut levels = Vec::new();
    for n in n_lo..=n_hi {
        let target = TAU * h * (n as f64 + 0.5);
        let Some(i) = (0..TABLE_POINTS - 1).find(|&i| (areas[i] - target) * (areas[i + 1] - target) <= 0.0) else {
            continue;
        };
        let f = |e: f64, sd: (f64, f64)| -> Result<(f64, (f64, f64))> {
            let (s, nx) = fam.area(e, sd)?;
            Ok((s - target, nx))
        };
        let energy = illinois(
            (energies[i], areas[i] - target, seeds[i]),
            (energies[i + 1], areas[i + 1] - target, seeds[i + 1]),
            f,
        )?;
        levels.push(FlatLevel {
            n,
            energy,
            action: target,
        });
    }
    Ok(FlatBandPrediction {
        energy_interval: (a, b),
        h,
        levels,
    })
}

/// Regula falsi with the Illinois modification on a bracket whose ends
/// carry their own continuation seeds.
fn illinois(
    lo: (f64, f64, (f64, f64)),
    hi: (f64, f64, (f64, f64)),
    f: impl Fn(f64, (f64, f64)) -> Result<(f64, (f64, f64))>,
) -> Result<f64> {
    let (mut a, mut fa, mut sa) = lo;
    let (mut b, mut fb, mut sb) = hi;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut side = 0;
    for _ in 0..100 {
        let c = (a * fb - b * fa) / (fb - fa);
        let seed = if (c - a).abs() < (c - b).abs() { sa } else { sb };
        let (fc, sc) = f(c, seed)?;
        if fc.abs() <= ROOT_TOL || (b - a).abs() < 1e-15 {
            return Ok(c);
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            sb = sc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            sa = sc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok((a * fb - b * fa) / (fb - fa))
}

/// Flat bands of every finite edge of the Reeb graph.
pub fn all_flat_bands(symbol: &TrigSymbol, reeb: &ReebGraph, flux: FluxContext) -> Result<Vec<FlatBandPrediction>> {
    reeb.edges
        .iter()
        .filter(|e| e.kind == ReebEdgeKind::Finite)
        .map(|e| flat_bands(symbol, e, flux))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Plus,
    Minus,
}

/// One dispersion curve `E_n(k₂)`; `None` where it leaves the window.
#[derive(Debug, Clone, Serialize)]
pub struct OpenCurve {
    pub family: Family,
    pub n: i64,
    pub energies: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub energy: f64,
    /// Quasimomentum of the crossing, in `[−π, π)`.
    pub k2: f64,
    pub n_plus: i64,
    pub n_minus: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OpenDispersion {
    pub window: (f64, f64),
    pub h: f64,
    pub k2: Vec<f64>,
    pub plus: OpenAction,
    pub minus: OpenAction,
    pub curves: Vec<OpenCurve>,
    pub crossings: Vec<Crossing>,
}

impl OpenDispersion {
    pub fn crossing_energies(&self) -> Vec<f64> {
        self.crossings.iter().map(|c| c.energy).collect()
    }
}

/// The two open families over `window`, as `(plus, minus)` lifts.
fn open_families(symbol: &TrigSymbol, window: (f64, f64)) -> Result<((i64, i64), (i64, i64))> {
    let mid = 0.5 * (window.0 + window.1);
    let mut lifts: Vec<(i64, i64)> = trace_level_set(symbol, mid)?
        .iter()
        .filter(|t| !t.closed)
        .map(|t| t.lift)
        .collect();
    lifts.sort();
    lifts.dedup();
    match lifts.as_slice() {
        [a, b] if a.0 == -b.0 && a.1 == -b.1 && a.1 != 0 => {
            let (plus, minus) = if a.1 < 0 { (*a, *b) } else { (*b, *a) };
            Ok((plus, minus))
        }
        _ => Err(Error::Config(format!(
            "expected two opposite open families advancing in x at E = {mid}, found lifts {lifts:?}"
        ))),
    }
}

fn curves_for(table: &OpenAction, family: Family, h: f64, k2: &[f64]) -> Vec<OpenCurve> {
    let (lo, hi) = table.domain();
    let (s0, s1) = (table.s(lo), table.s(hi));
    let (smin, smax) = (s0.min(s1), s0.max(s1));
    let n_lo = ((smin / h - PI) / TAU).floor() as i64;
    let n_hi = ((smax / h + PI) / TAU).ceil() as i64;
    (n_lo..=n_hi)
        .filter_map(|n| {
            let energies: Vec<Option<f64>> = k2
                .iter()
                .map(|&k| table.energy_for(h * (k + TAU * n as f64)))
                .collect();
            energies.iter().any(Option::is_some).then_some(OpenCurve { family, n, energies })
        })
        .collect()
}

/// Dispersion curves of both open families and their crossing points.
pub fn open_dispersion(symbol: &TrigSymbol, window: (f64, f64), flux: FluxContext, k2: &[f64]) -> Result<OpenDispersion> {
    let h = flux.h();
    let (plus_lift, minus_lift) = open_families(symbol, window)?;
    let plus = open_action_table(symbol, plus_lift, window, OPEN_TABLE_POINTS)?;
    let minus = open_action_table(symbol, minus_lift, window, OPEN_TABLE_POINTS)?;
    let mut curves = curves_for(&plus, Family::Plus, h, k2);
    curves.extend(curves_for(&minus, Family::Minus, h, k2));
    let crossings = crossings(&plus, &minus, h);
    Ok(OpenDispersion {
        window,
        h,
        k2: k2.to_vec(),
        plus,
        minus,
        curves,
        crossings,
    })
}

/// Curves `S₊ = h(k + 2πn₊)` and `S₋ = h(k + 2πn₋)` meet at a common `k`
/// exactly where `S₊ − S₋ ∈ 2πhℤ`; that difference is monotone.
fn crossings(plus: &OpenAction, minus: &OpenAction, h: f64) -> Vec<Crossing> {
    let es = plus.energies.clone();
    let d: Vec<f64> = es.iter().map(|&e| plus.s(e) - minus.s(e)).collect();
    let slopes: Vec<f64> = es.iter().map(|&e| plus.ds_de(e) - minus.ds_de(e)).collect();
    let diff = MonotoneCubic::with_slopes(es.clone(), d.clone(), slopes);
    let (dmin, dmax) = (d[0].min(d[d.len() - 1]), d[0].max(d[d.len() - 1]));
    let j_lo = (dmin / (TAU * h)).ceil() as i64;
    let j_hi = (dmax / (TAU * h)).floor() as i64;
    let mut out: Vec<Crossing> = (j_lo..=j_hi)
        .filter_map(|j| {
            let e = diff.inverse(TAU * h * j as f64)?;
            let phase = plus.s(e) / h;
            let k = reduce_pm_pi(phase);
            let n_plus = ((phase - k) / TAU).round() as i64;
            let n_minus = ((minus.s(e) / h - k) / TAU).round() as i64;
            Some(Crossing {
                energy: e,
                k2: k,
                n_plus,
                n_minus,
            })
        })
        .collect();
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(interval: (f64, f64), seed: (f64, f64)) -> ReebEdge {
        ReebEdge {
            lower: 0,
            upper: 1,
            kind: ReebEdgeKind::Finite,
            energy_interval: interval,
            direction: None,
            seed,
            lift: (0, 0),
        }
    }

    #[test]
    fn tiny_action_range_has_no_levels() {
        // the well [−3, −2.999] of Harper holds area ≈ 0.0022 < πh for η = 100
        let s = TrigSymbol::harper(0.5);
        let flux = FluxContext::new(100).unwrap();
        let e = edge((-3.0, -2.999), (PI + 0.02, PI));
        let pred = flat_bands(&s, &e, flux).unwrap();
        assert!(pred.levels.is_empty());
    }

    #[test]
    fn lowest_harper_levels_are_harmonic() {
        let s = TrigSymbol::harper(0.5);
        let flux = FluxContext::new(200).unwrap();
        let h = flux.h();
        let e = edge((-3.0, -1.0), (PI + 0.5, PI));
        let pred = flat_bands(&s, &e, flux).unwrap();
        for lv in pred.levels.iter().take(3) {
            let harmonic = -3.0 + 2.0 * 0.5f64.sqrt() * h * (lv.n as f64 + 0.5);
            assert!((lv.energy - harmonic).abs() < 2.0 * h * h);
        }
        assert_eq!(pred.levels[0].n, 0);
    }

    #[test]
    fn cos_p_crossings_pair_opposite_families() {
        let s = TrigSymbol::from_cosines(&[((1, 0), 2.0)]).unwrap();
        let flux = FluxContext::new(20).unwrap();
        let disp = open_dispersion(&s, (-1.5, 1.5), flux, &[0.0]).unwrap();
        // S₊ − S₋ = 4π arccos(E/2) hits 2πhℤ at 2cos(πj/η); k₂ is 0 or −π there
        for c in &disp.crossings {
            let j = (c.energy / 2.0).acos() * 20.0 / PI;
            assert!((j - j.round()).abs() < 1e-7, "{c:?}");
            assert!(c.k2.abs() < 1e-6 || (c.k2 + PI).abs() < 1e-6);
        }
    }
}
