//! First-order averaging of a periodic potential over cyclotron orbits.
//!
//! For the `n`-th Landau level the averaged Hamiltonian in guiding-centre
//! coordinates is `L_n(Y) = I_n + ε Σ_ξ J₀(√((2n+1)h)·|ξ|) v̂(ξ) e^{i⟨ξ,Y⟩}`
//! with `I_n = (n + ½)h`. The result is rescaled to `2π`-periodic
//! coordinates `x = 2πY₁/a`, `p = 2πY₂/b` so that it plugs into the rest of
//! the crate; the rescaling multiplies the effective Planck constant by
//! `(2π)²/(ab)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::classical::{critical_values, find_critical_points, reeb_graph, ReebEdgeKind, ReebNodeKind};
use crate::error::{Error, Result};
use crate::special::bessel_j0;
use crate::symbol::{parse_value, terms_from_value, TrigSymbol};

/// Trigonometric potential on the rectangle `[0, a) × [0, b)`. Key `(m₁, m₂)`
/// is the mode `e^{2πi(m₁Y₁/a + m₂Y₂/b)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential2D {
    periods: (f64, f64),
    coeffs: BTreeMap<(i32, i32), Complex64>,
}

impl Potential2D {
    pub fn new(periods: (f64, f64), coeffs: BTreeMap<(i32, i32), Complex64>) -> Result<Self> {
        if !(periods.0 > 0.0 && periods.1 > 0.0 && periods.0.is_finite() && periods.1.is_finite()) {
            return Err(Error::Config(format!("periods must be positive, got {periods:?}")));
        }
        // reuse the symbol's reality check on the same coefficient map
        TrigSymbol::from_coeffs_with_cap(coeffs.clone(), i32::MAX)?;
        let coeffs = coeffs.into_iter().filter(|(_, c)| c.norm() > 0.0).collect();
        Ok(Potential2D { periods, coeffs })
    }

    /// Sum of `amp · cos(2π(m₁Y₁/a + m₂Y₂/b))`.
    pub fn from_cosines(periods: (f64, f64), terms: &[((i32, i32), f64)]) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for &((m1, m2), amp) in terms {
            if (m1, m2) == (0, 0) {
                *coeffs.entry((0, 0)).or_insert(Complex64::new(0.0, 0.0)) += amp;
            } else {
                *coeffs.entry((m1, m2)).or_insert(Complex64::new(0.0, 0.0)) += amp / 2.0;
                *coeffs.entry((-m1, -m2)).or_insert(Complex64::new(0.0, 0.0)) += amp / 2.0;
            }
        }
        Self::new(periods, coeffs)
    }

    /// JSON with the symbol term schema plus `"periods": [a, b]`; term
    /// frequencies are `(m₁, m₂)` over `(Y₁, Y₂)`.
    pub fn parse(text: &str) -> Result<Self> {
        let doc = parse_value(text)?;
        let periods = doc
            .get("periods")
            .and_then(Value::as_array)
            .and_then(|a| match a.as_slice() {
                [x, y] => Some((x.as_f64()?, y.as_f64()?)),
                _ => None,
            })
            .ok_or_else(|| Error::Parse {
                line: 0,
                column: 0,
                message: "`periods` must be an array of two numbers".into(),
            })?;
        Self::new(periods, terms_from_value(&doc)?)
    }

    pub fn periods(&self) -> (f64, f64) {
        self.periods
    }

    pub fn coeffs(&self) -> &BTreeMap<(i32, i32), Complex64> {
        &self.coeffs
    }

    /// Length of the reciprocal vector of mode `(m₁, m₂)`.
    pub fn wavenumber(&self, (m1, m2): (i32, i32)) -> f64 {
        (TAU * m1 as f64 / self.periods.0).hypot(TAU * m2 as f64 / self.periods.1)
    }

    pub fn value(&self, y1: f64, y2: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&(m1, m2), c)| {
                let arg = TAU * (m1 as f64 * y1 / self.periods.0 + m2 as f64 * y2 / self.periods.1);
                (c * Complex64::from_polar(1.0, arg)).re
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandauParams {
    pub n: u32,
    pub h: f64,
    pub epsilon: f64,
}

impl LandauParams {
    pub fn new(n: u32, h: f64, epsilon: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Config(format!("h must be positive, got {h}")));
        }
        Ok(LandauParams { n, h, epsilon })
    }

    /// `I_n = (n + ½)h`.
    pub fn action(&self) -> f64 {
        (self.n as f64 + 0.5) * self.h
    }
}

/// An averaged Landau-level symbol in `2π`-periodic coordinates.
#[derive(Debug, Clone)]
pub struct LandauSymbol {
    pub params: LandauParams,
    /// `L_n(x, p)` with `x = 2πY₁/a`, `p = 2πY₂/b`.
    pub symbol: TrigSymbol,
    /// `(2π/a, 2π/b)`.
    pub scale: (f64, f64),
    /// Planck constant in the rescaled coordinates, `h(2π)²/(ab)`.
    pub h_rescaled: f64,
}

impl LandauSymbol {
    pub fn to_json_value(&self) -> Value {
        json!({
            "schema_version": 1,
            "n": self.params.n,
            "h": self.params.h,
            "epsilon": self.params.epsilon,
            "action": self.params.action(),
            "scale": [self.scale.0, self.scale.1],
            "h_rescaled": self.h_rescaled,
            "symbol": self.symbol.to_json_value(),
        })
    }
}

/// Mode multiplier `J₀(√((2n+1)h) |ξ|)`.
pub fn mode_multiplier(v: &Potential2D, params: &LandauParams, mode: (i32, i32)) -> Result<f64> {
    bessel_j0(((2 * params.n + 1) as f64 * params.h).sqrt() * v.wavenumber(mode))
}

pub fn average_first_order(v: &Potential2D, params: LandauParams) -> Result<LandauSymbol> {
    let mut coeffs = BTreeMap::new();
    coeffs.insert((0, 0), Complex64::new(params.action(), 0.0));
    for (&mode, &c) in v.coeffs() {
        let mult = mode_multiplier(v, &params, mode)?;
        // symbol frequencies are ordered (p, x) = (Y₂, Y₁)
        *coeffs.entry((mode.1, mode.0)).or_insert(Complex64::new(0.0, 0.0)) += c * params.epsilon * mult;
    }
    let (a, b) = v.periods();
    Ok(LandauSymbol {
        params,
        symbol: TrigSymbol::from_coeffs_with_cap(coeffs, i32::MAX)?,
        scale: (TAU / a, TAU / b),
        h_rescaled: params.h * TAU * TAU / (a * b),
    })
}

/// Topological fingerprint of a level's Reeb graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ReebSignature {
    pub minima: usize,
    pub maxima: usize,
    pub saddle_levels: usize,
    pub finite_edges: usize,
    pub infinite_edges: usize,
    pub directions: Vec<(i64, i64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub critical_values: Vec<f64>,
    pub signature: ReebSignature,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub n: u32,
    pub action: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<LevelSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn summarize(symbol: &TrigSymbol) -> Result<LevelSummary> {
    let crit = find_critical_points(symbol)?;
    let reeb = reeb_graph(symbol)?;
    let count = |k| reeb.nodes.iter().filter(|n| n.kind == k).count();
    let mut directions: Vec<(i64, i64)> = reeb
        .edges
        .iter()
        .filter_map(|e| e.direction)
        .map(|(a, b)| if (a, b) < (0, 0) { (-a, -b) } else { (a, b) })
        .collect();
    directions.sort_unstable();
    directions.dedup();
    Ok(LevelSummary {
        critical_values: critical_values(&crit),
        signature: ReebSignature {
            minima: count(ReebNodeKind::Min),
            maxima: count(ReebNodeKind::Max),
            saddle_levels: count(ReebNodeKind::Branch),
            finite_edges: reeb.edges.iter().filter(|e| e.kind == ReebEdgeKind::Finite).count(),
            infinite_edges: reeb.edges.iter().filter(|e| e.kind == ReebEdgeKind::Infinite).count(),
            directions,
        },
    })
}

/// Reeb summaries of `L_n` for each `n` in `levels`; failures are reported
/// per level rather than aborting the whole report.
pub fn level_topology_report(
    v: &Potential2D,
    h: f64,
    epsilon: f64,
    levels: std::ops::RangeInclusive<u32>,
) -> Result<Vec<LevelReport>> {
    let levels: Vec<u32> = levels.collect();
    levels
        .par_iter()
        .map(|&n| {
            let params = LandauParams::new(n, h, epsilon)?;
            let avg = average_first_order(v, params)?;
            let (summary, error) = match summarize(&avg.symbol) {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(LevelReport {
                n,
                action: params.action(),
                summary,
                error,
            })
        })
        .collect()
}
