//! Singular Bohr–Sommerfeld rules near a separatrix.
//!
//! Every saddle `V` carries four local coefficients `x₁..x₄` tied by
//! `(x₃, x₄) = 𝓔(ε) [[1, i e^{−πε}], [i e^{−πε}, 1]] (x₁, x₂)` with
//! `ε = s_V λ / w_V`. Each separatrix edge transports the coefficient at its
//! outgoing label to the incoming label of the next saddle with the phase
//! `ψ = κ_B (B/h + λJ) + κ_m π m/2 + κ_k ⟨l, k⟩`. The sign choices `κ` are
//! fixed once in [`Conventions`].
//!
//! The generic engine solves the full `4n_v × 4n_v` system. Since the local
//! scattering maps and the edge transports are unitary for real `λ`, the
//! determinant reduces to `det(I − U)` with `U` unitary and known
//! determinant phase `Θ`, so `Re[det(I − U) e^{−iΘ/2}]` is a real function
//! whose sign changes are the admissible `λ`.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

use crate::actions::EdgeWeight;
use crate::classical::SeparatrixGraph;
use crate::eigen::DenseMatrix;
use crate::error::{Error, Result};
use crate::quantum::reduce_pm_pi;
use crate::special::arg_gamma_half_unchecked;

pub use crate::special::arg_gamma_half;

/// Default half-width `A` of the spectral window `|λ| ≤ A`.
pub const DEFAULT_WINDOW: f64 = 5.0;
/// Sampling step in `λ` for sign scans.
const SCAN_STEP: f64 = 0.005;

type C = Complex64;

fn cis(a: f64) -> C {
    C::from_polar(1.0, a)
}

/// `𝓔 = (1 + e^{−2πε})^{−1/2} e^{i argΓ(½ + iε) + iε log h}`.
pub fn script_e(epsilon: f64, h: f64) -> C {
    let modulus = (1.0 + (-TAU * epsilon).exp()).sqrt().recip();
    C::from_polar(modulus, arg_gamma_half_unchecked(epsilon) + epsilon * h.ln())
}

/// Sign conventions of the edge phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conventions {
    pub action_sign: f64,
    pub maslov_sign: f64,
    pub k_sign: f64,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            action_sign: -1.0,
            maslov_sign: -1.0,
            k_sign: -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleInvariant {
    pub w: f64,
    pub sign: i32,
}

impl SaddleInvariant {
    pub fn epsilon(&self, lambda: f64) -> f64 {
        self.sign as f64 * lambda / self.w
    }

    /// Phase of `det` of the local scattering map, halved; independent of
    /// the saddle orientation.
    pub fn theta(&self, lambda: f64, h: f64) -> f64 {
        let t = lambda / self.w;
        arg_gamma_half_unchecked(t) + t * h.ln()
    }

    /// `e^{−πε}`.
    pub fn q(&self, lambda: f64) -> f64 {
        (-PI * self.epsilon(lambda)).exp()
    }

    pub fn rho(&self, lambda: f64) -> f64 {
        let q = self.q(lambda);
        (1.0 + q * q).sqrt().recip()
    }

    /// Labels of the incoming and outgoing branches, in slot order.
    pub fn in_labels(&self) -> [usize; 2] {
        if self.sign > 0 {
            [1, 2]
        } else {
            [3, 4]
        }
    }

    pub fn out_labels(&self) -> [usize; 2] {
        if self.sign > 0 {
            [3, 4]
        } else {
            [1, 2]
        }
    }

    /// Unitary map from incoming to outgoing coefficients (slot order).
    pub fn scattering(&self, lambda: f64, h: f64) -> [[C; 2]; 2] {
        let e = script_e(self.epsilon(lambda), h);
        let iq = C::new(0.0, self.q(lambda));
        let m = [[e, e * iq], [e * iq, e]];
        if self.sign > 0 {
            m
        } else {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
        }
    }
}

/// Saddles and weighted edges of one separatrix, validated against the
/// matching template.
#[derive(Debug, Clone, Serialize)]
pub struct SeparatrixData {
    pub energy: f64,
    pub vertices: Vec<SaddleInvariant>,
    pub edges: Vec<EdgeWeight>,
}

impl SeparatrixData {
    pub fn new(graph: &SeparatrixGraph, weights: &[EdgeWeight]) -> Result<Self> {
        let vertices: Vec<SaddleInvariant> = graph
            .vertices
            .iter()
            .map(|v| SaddleInvariant {
                w: v.frame.w,
                sign: v.frame.sign,
            })
            .collect();
        Self::from_parts(graph.energy, vertices, weights.to_vec())
    }

    pub fn from_parts(energy: f64, vertices: Vec<SaddleInvariant>, edges: Vec<EdgeWeight>) -> Result<Self> {
        let n = vertices.len();
        if edges.len() != 2 * n {
            return Err(Error::InconsistentIndexing(format!(
                "{} edges for {n} saddles, expected {}",
                edges.len(),
                2 * n
            )));
        }
        let mut out_used = vec![[false; 2]; n];
        let mut in_used = vec![[false; 2]; n];
        for (k, e) in edges.iter().enumerate() {
            if e.from >= n || e.to >= n {
                return Err(Error::InconsistentIndexing(format!("edge {k} refers to a missing saddle")));
            }
            let Some(a) = vertices[e.from].out_labels().iter().position(|&l| l == e.from_label) else {
                return Err(Error::InconsistentIndexing(format!(
                    "edge {k} leaves saddle {} through label {}, which is incoming",
                    e.from, e.from_label
                )));
            };
            let Some(b) = vertices[e.to].in_labels().iter().position(|&l| l == e.to_label) else {
                return Err(Error::InconsistentIndexing(format!(
                    "edge {k} enters saddle {} through label {}, which is outgoing",
                    e.to, e.to_label
                )));
            };
            if out_used[e.from][a] || in_used[e.to][b] {
                return Err(Error::InconsistentIndexing(format!("edge {k} reuses a label")));
            }
            out_used[e.from][a] = true;
            in_used[e.to][b] = true;
        }
        Ok(SeparatrixData {
            energy,
            vertices,
            edges,
        })
    }

    fn out_slot(&self, e: &EdgeWeight) -> usize {
        self.vertices[e.from].out_labels().iter().position(|&l| l == e.from_label).unwrap()
    }

    fn in_slot(&self, e: &EdgeWeight) -> usize {
        self.vertices[e.to].in_labels().iter().position(|&l| l == e.to_label).unwrap()
    }
}

/// Phase acquired along an edge.
pub fn edge_phase(conv: &Conventions, e: &EdgeWeight, lambda: f64, k: (f64, f64), h: f64) -> f64 {
    conv.action_sign * (e.b / h + lambda * e.j)
        + conv.maslov_sign * PI * e.m as f64 / 2.0
        + conv.k_sign * (e.lift.0 as f64 * k.0 + e.lift.1 as f64 * k.1)
}

/// The full linear system: two matching rows per saddle followed by one
/// transport row per edge. Unknown `4v + (label − 1)` is `x_label` at `v`.
#[derive(Debug, Clone)]
pub struct QuantizationSystem {
    pub matrix: DenseMatrix,
}

impl QuantizationSystem {
    pub fn size(&self) -> usize {
        self.matrix.size()
    }

    pub fn determinant(&self) -> C {
        self.matrix.determinant()
    }
}

pub fn assemble_system(
    data: &SeparatrixData,
    conv: &Conventions,
    lambda: f64,
    k: (f64, f64),
    h: f64,
) -> QuantizationSystem {
    let n = data.vertices.len();
    let mut m = DenseMatrix::zeros(4 * n);
    let one = C::new(1.0, 0.0);
    for (v, s) in data.vertices.iter().enumerate() {
        let e = script_e(s.epsilon(lambda), h);
        let iq = C::new(0.0, s.q(lambda));
        let (r3, r4) = (2 * v, 2 * v + 1);
        m[(r3, 4 * v + 2)] = one;
        m[(r3, 4 * v)] = -e;
        m[(r3, 4 * v + 1)] = -e * iq;
        m[(r4, 4 * v + 3)] = one;
        m[(r4, 4 * v)] = -e * iq;
        m[(r4, 4 * v + 1)] = -e;
    }
    for (j, e) in data.edges.iter().enumerate() {
        let r = 2 * n + j;
        m[(r, 4 * e.to + e.to_label - 1)] = one;
        m[(r, 4 * e.from + e.from_label - 1)] = -cis(edge_phase(conv, e, lambda, k, h));
    }
    QuantizationSystem { matrix: m }
}

fn permutation_sign(perm: &[usize]) -> f64 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1.0;
    for i in 0..perm.len() {
        if seen[i] {
            continue;
        }
        let mut j = i;
        let mut len = 0;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// `Re[det(I − U) e^{−iΘ/2}] / 4^{n_v}`, together with the imaginary part
/// (zero up to rounding) as a consistency check.
pub fn secular(data: &SeparatrixData, conv: &Conventions, lambda: f64, k: (f64, f64), h: f64) -> (f64, f64) {
    let n = data.vertices.len();
    let dim = 2 * n;
    let scat: Vec<[[C; 2]; 2]> = data.vertices.iter().map(|s| s.scattering(lambda, h)).collect();
    let mut u = DenseMatrix::zeros(dim);
    let mut perm = vec![0; dim];
    let mut theta = 0.0;
    for e in &data.edges {
        let (a, b) = (data.out_slot(e), data.in_slot(e));
        let psi = edge_phase(conv, e, lambda, k, h);
        theta += psi;
        perm[2 * e.from + a] = 2 * e.to + b;
        for c in 0..2 {
            u[(2 * e.to + b, 2 * e.from + c)] = cis(psi) * scat[e.from][a][c];
        }
    }
    for s in &data.vertices {
        theta += 2.0 * s.theta(lambda, h);
    }
    if permutation_sign(&perm) < 0.0 {
        theta += PI;
    }
    let mut i_minus_u = DenseMatrix::identity(dim);
    for i in 0..dim {
        for j in 0..dim {
            i_minus_u[(i, j)] -= u[(i, j)];
        }
    }
    let d = i_minus_u.determinant() * cis(-0.5 * theta) / 4f64.powi(n as i32);
    (d.re, d.im)
}

fn bisect(f: &impl Fn(f64) -> f64, mut x0: f64, mut x1: f64) -> f64 {
    let mut f0 = f(x0);
    for _ in 0..200 {
        let mid = 0.5 * (x0 + x1);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (f0 > 0.0) {
            x0 = mid;
            f0 = fm;
        } else {
            x1 = mid;
        }
        if x1 - x0 < 1e-14 {
            break;
        }
    }
    0.5 * (x0 + x1)
}

/// Roots of `f` on `[lo, hi]`: sign changes between samples, plus close
/// pairs hidden inside a dip of `|f|` that golden-section search uncovers.
fn scan_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil().max(2.0) as usize;
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..n {
        if ys[i] == 0.0 {
            roots.push(xs[i]);
        } else if ys[i] * ys[i + 1] < 0.0 {
            roots.push(bisect(&f, xs[i], xs[i + 1]));
        }
        if i == 0 {
            continue;
        }
        let (ya, yb, yc) = (ys[i - 1], ys[i], ys[i + 1]);
        let dip = ya * yb > 0.0 && yb * yc > 0.0 && yb.abs() < ya.abs() && yb.abs() < yc.abs();
        if !dip {
            continue;
        }
        let sgn = yb.signum();
        let g = |x: f64| sgn * f(x);
        let (mut a, mut c) = (xs[i - 1], xs[i + 1]);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut x1, mut x2) = (c - r * (c - a), a + r * (c - a));
        let (mut g1, mut g2) = (g(x1), g(x2));
        for _ in 0..80 {
            if g1.min(g2) < 0.0 || c - a < 1e-13 {
                break;
            }
            if g1 < g2 {
                c = x2;
                x2 = x1;
                g2 = g1;
                x1 = c - r * (c - a);
                g1 = g(x1);
            } else {
                a = x1;
                x1 = x2;
                g1 = g2;
                x2 = a + r * (c - a);
                g2 = g(x2);
            }
        }
        let xm = if g1 < g2 { x1 } else { x2 };
        if g(xm) < 0.0 {
            roots.push(bisect(&f, xs[i - 1], xm));
            roots.push(bisect(&f, xm, xs[i + 1]));
        }
    }
    if ys[n] == 0.0 {
        roots.push(xs[n]);
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Admissible `λ ∈ [−A, A]` of the generic system at quasimomentum `k`.
pub fn generic_roots(data: &SeparatrixData, conv: &Conventions, k: (f64, f64), h: f64, window: f64) -> Vec<f64> {
    scan_roots(|l| secular(data, conv, l, k, h).0, -window, window, SCAN_STEP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scenario {
    Y,
    X,
    #[serde(rename = "DEG")]
    Deg,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Y => "Y",
            Scenario::X => "X",
            Scenario::Deg => "DEG",
        })
    }
}

/// Topological classification of a separatrix.
pub fn detect_scenario(data: &SeparatrixData) -> Result<Scenario> {
    let lifts: Vec<(i64, i64)> = data.edges.iter().map(|e| e.lift).collect();
    match (data.vertices.len(), data.edges.len()) {
        (1, 2) => Ok(Scenario::Y),
        (2, 4) => {
            let zero = lifts.iter().filter(|l| **l == (0, 0)).count();
            let spans = lifts
                .iter()
                .any(|a| lifts.iter().any(|b| (a.0 * b.1 - a.1 * b.0).abs() == 1));
            if spans {
                Ok(Scenario::Deg)
            } else if zero == 2 {
                Ok(Scenario::X)
            } else {
                Err(Error::ScenarioUnsupported(format!("two saddles with edge lifts {lifts:?}")))
            }
        }
        (v, e) => Err(Error::ScenarioUnsupported(format!("{v} saddles and {e} edges"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// A loop phase `c + ⟨L, k⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopPhase {
    pub constant: f64,
    pub k_coeff: (f64, f64),
}

impl LoopPhase {
    pub fn at(&self, k: (f64, f64)) -> f64 {
        self.constant + self.k_coeff.0 * k.0 + self.k_coeff.1 * k.1
    }

    fn depends_on_k(&self) -> bool {
        self.k_coeff != (0.0, 0.0)
    }
}

/// A separatrix matched onto one of the three closed-form templates.
///
/// Edges are stored in template order: for `Y`, `[a, b]` leaving the saddle
/// through its first and second outgoing slot. For two saddles, `[a, b]`
/// leave `V`, `c` closes the loop `a c` through diagonal scattering
/// entries and `d` the loop `b d`; the loops `a d` and `b c` use the
/// off-diagonal entries. These are the weights
/// entering `Δ₂` (diagonal loops) and `Δ₁` (off-diagonal loops).
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioParams {
    pub scenario: Scenario,
    pub energy: f64,
    pub vertices: Vec<SaddleInvariant>,
    pub edges: Vec<EdgeWeight>,
    pub conventions: Conventions,
}

impl ScenarioParams {
    pub fn new(data: &SeparatrixData, scenario: Scenario, conv: Conventions) -> Result<Self> {
        let fail = |msg: &str| Err(Error::InconsistentIndexing(format!("{scenario} template: {msg}")));
        let leaving = |v: usize, slot: usize| {
            data.edges
                .iter()
                .find(|e| e.from == v && data.out_slot(e) == slot)
                .copied()
                .expect("validated separatrix has every outgoing slot")
        };
        match scenario {
            Scenario::Y => {
                if data.vertices.len() != 1 {
                    return fail("expects one saddle");
                }
                let (a, b) = (leaving(0, 0), leaving(0, 1));
                if data.in_slot(&a) != 0 || data.in_slot(&b) != 1 {
                    return fail("edges must return to the slot they left from");
                }
                Ok(ScenarioParams {
                    scenario,
                    energy: data.energy,
                    vertices: data.vertices.clone(),
                    edges: vec![a, b],
                    conventions: conv,
                })
            }
            Scenario::X | Scenario::Deg => {
                if data.vertices.len() != 2 {
                    return fail("expects two saddles");
                }
                // V is the saddle with positive orientation when the signs differ
                let v = if data.vertices[0].sign >= data.vertices[1].sign { 0 } else { 1 };
                let w = 1 - v;
                let (a, b) = (leaving(v, 0), leaving(v, 1));
                if a.to != w || b.to != w {
                    return fail("edges leaving V must end at the other saddle");
                }
                // a enters W at slot sa; the diagonal scattering entry sends
                // it on through W's outgoing slot sa
                let c = leaving(w, data.in_slot(&a));
                let d = leaving(w, data.in_slot(&b));
                if c.to != v || d.to != v {
                    return fail("edges leaving W must end at V");
                }
                if data.in_slot(&c) != 0 || data.in_slot(&d) != 1 {
                    return fail("composite edge permutation is not the identity");
                }
                Ok(ScenarioParams {
                    scenario,
                    energy: data.energy,
                    vertices: vec![data.vertices[v], data.vertices[w]],
                    edges: vec![a, b, c, d],
                    conventions: conv,
                })
            }
        }
    }

    fn psi(&self, i: usize, lambda: f64, k: (f64, f64), h: f64) -> f64 {
        edge_phase(&self.conventions, &self.edges[i], lambda, k, h)
    }

    fn psi_loop(&self, plus: &[usize], minus: &[usize], lambda: f64, h: f64) -> LoopPhase {
        let c = &self.conventions;
        let mut constant = 0.0;
        let mut kc = (0.0, 0.0);
        for (idx, sgn) in plus.iter().map(|&i| (i, 0.5)).chain(minus.iter().map(|&i| (i, -0.5))) {
            let e = &self.edges[idx];
            constant += sgn * self.psi(idx, lambda, (0.0, 0.0), h);
            kc.0 += sgn * c.k_sign * e.lift.0 as f64;
            kc.1 += sgn * c.k_sign * e.lift.1 as f64;
        }
        LoopPhase { constant, k_coeff: kc }
    }

    /// `Σ_V θ_V + Σ ψ / 2`, the phase on the left of the dispersion relation.
    pub fn total_phase(&self, lambda: f64, k: (f64, f64), h: f64) -> f64 {
        let theta: f64 = self.vertices.iter().map(|s| s.theta(lambda, h)).sum();
        let psi: f64 = (0..self.edges.len()).map(|i| self.psi(i, lambda, k, h)).sum();
        theta + 0.5 * psi
    }

    /// Loop phases: for `Y` the single difference `(ψ_a − ψ_b)/2`; for two
    /// saddles the diagonal `(ψ_a + ψ_c − ψ_b − ψ_d)/2` and off-diagonal
    /// `(ψ_a + ψ_d − ψ_b − ψ_c)/2`.
    pub fn loop_phases(&self, lambda: f64, h: f64) -> Vec<LoopPhase> {
        match self.scenario {
            Scenario::Y => vec![self.psi_loop(&[0], &[1], lambda, h)],
            _ => vec![
                self.psi_loop(&[0, 2], &[1, 3], lambda, h),
                self.psi_loop(&[0, 3], &[1, 2], lambda, h),
            ],
        }
    }

    /// Weights of the loop cosines on the right-hand side.
    pub fn loop_weights(&self, lambda: f64) -> Vec<f64> {
        match self.scenario {
            Scenario::Y => vec![self.vertices[0].rho(lambda)],
            _ => {
                let (v, w) = (&self.vertices[0], &self.vertices[1]);
                let r = v.rho(lambda) * w.rho(lambda);
                let cross = -(v.sign * w.sign) as f64 * v.q(lambda) * w.q(lambda);
                vec![r, r * cross]
            }
        }
    }

    pub fn rhs(&self, lambda: f64, k: (f64, f64), h: f64) -> f64 {
        self.loop_phases(lambda, h)
            .iter()
            .zip(self.loop_weights(lambda))
            .map(|(p, wt)| wt * p.at(k).cos())
            .sum()
    }

    /// Closed-form dispersion relation `cos(total_phase) − rhs`, zero
    /// exactly where the generic determinant vanishes.
    pub fn condition(&self, lambda: f64, k: (f64, f64), h: f64) -> f64 {
        self.total_phase(lambda, k, h).cos() - self.rhs(lambda, k, h)
    }

    pub fn closed_form_roots(&self, k: (f64, f64), h: f64, window: f64) -> Vec<f64> {
        scan_roots(|l| self.condition(l, k, h), -window, window, SCAN_STEP)
    }

    /// Range of `rhs` over all quasimomenta at fixed `λ`.
    pub fn rhs_range(&self, lambda: f64, h: f64) -> (f64, f64) {
        let phases = self.loop_phases(lambda, h);
        let wts = self.loop_weights(lambda);
        match self.scenario {
            Scenario::Y => (-wts[0].abs(), wts[0].abs()),
            Scenario::X => {
                // only the diagonal loops wind; the off-diagonal term is fixed
                let (free, fixed) = if phases[0].depends_on_k() { (0, 1) } else { (1, 0) };
                let c = wts[fixed] * phases[fixed].constant.cos();
                (c - wts[free].abs(), c + wts[free].abs())
            }
            Scenario::Deg => {
                let s = wts[0].abs() + wts[1].abs();
                (-s, s)
            }
        }
    }

    /// Bands in `λ` on `[−A, A]`: the set where `cos(total_phase)` lies in
    /// the range of the right-hand side.
    pub fn predicted_bands(&self, h: f64, window: f64) -> Vec<(f64, f64)> {
        let k0 = (0.0, 0.0);
        let inside = |l: f64| {
            let (lo, hi) = self.rhs_range(l, h);
            let c = self.total_phase(l, k0, h).cos();
            (c - lo).min(hi - c)
        };
        let edges = scan_roots(inside, -window, window, SCAN_STEP);
        let mut bands = Vec::new();
        let mut start = (inside(-window) >= 0.0).then_some(-window);
        for e in edges {
            match start.take() {
                Some(s) => bands.push((s, e)),
                None => start = Some(e),
            }
        }
        if let Some(s) = start {
            bands.push((s, window));
        }
        bands
    }

    /// `1 / (log h · Σ 1/w_V)`, the factor converting phase into `μ`.
    fn mu_scale(&self, h: f64) -> f64 {
        let inv: f64 = self.vertices.iter().map(|s| 1.0 / s.w).sum();
        1.0 / (h.ln() * inv)
    }

    /// `N(λ₀, h)`: minus the `k`-independent part of the total phase.
    pub fn n_term(&self, lambda0: f64, h: f64) -> f64 {
        -self.total_phase(lambda0, (0.0, 0.0), h)
    }

    /// Shifts `Δ` in the form `cos(k_i − Δ_i)` for each winding loop phase,
    /// and the constant off-diagonal phase (`Δ₁` of the X template).
    pub fn deltas(&self, lambda0: f64, h: f64) -> Vec<f64> {
        self.loop_phases(lambda0, h)
            .iter()
            .map(|p| {
                if p.k_coeff.0 != 0.0 {
                    -p.constant * p.k_coeff.0.signum()
                } else if p.k_coeff.1 != 0.0 {
                    -p.constant * p.k_coeff.1.signum()
                } else {
                    p.constant
                }
            })
            .collect()
    }

    /// Linearized branch `μ^±_n(k)` around `λ₀`; `BranchOutOfWindow` when
    /// `|μ| > window`.
    pub fn dispersion(&self, lambda0: f64, k: (f64, f64), h: f64, n: i64, branch: Branch, window: f64) -> Result<f64> {
        let arg = self.rhs(lambda0, k, h).clamp(-1.0, 1.0);
        let k_part = self.total_phase(lambda0, k, h) - self.total_phase(lambda0, (0.0, 0.0), h);
        let mu = self.mu_scale(h) * (self.n_term(lambda0, h) - k_part + branch.sign() * arg.acos() + TAU * n as f64);
        if mu.abs() > window {
            return Err(Error::BranchOutOfWindow { n, window });
        }
        Ok(mu)
    }

    /// Integers `n` for which some branch of [`Self::dispersion`] can land in
    /// `|μ| ≤ window`.
    pub fn admissible_n(&self, lambda0: f64, h: f64, window: f64) -> std::ops::RangeInclusive<i64> {
        let s = self.mu_scale(h).abs();
        let n0 = self.n_term(lambda0, h);
        let span = window / s + PI;
        let lo = ((-span - n0) / TAU).floor() as i64;
        let hi = ((span - n0) / TAU).ceil() as i64;
        lo..=hi
    }

    /// Orientation-adjusted `λ₀` as used by the width formulas.
    fn oriented(&self, lambda0: f64) -> f64 {
        self.vertices[0].sign as f64 * lambda0
    }

    /// Band and gap widths in energy units at `λ₀`.
    pub fn widths(&self, lambda0: f64, h: f64) -> Widths {
        match self.scenario {
            Scenario::Y => {
                let (b, g) = widths_y(self.vertices[0].w, self.oriented(lambda0), h);
                Widths::Y { band: b, gap: g }
            }
            Scenario::X => {
                let delta1 = self.loop_phases(lambda0, h)[1].constant;
                let (b, g1, g2) = widths_x(self.vertices[0].w, self.vertices[1].w, self.oriented(lambda0), delta1, h);
                Widths::X { band: b, gap1: g1, gap2: g2 }
            }
            Scenario::Deg => {
                let (b, g) = widths_deg(self.vertices[0].w, self.vertices[1].w, lambda0, h);
                Widths::Deg { band: b, gap: g }
            }
        }
    }

    /// Quasimomentum at which both loop cosines equal one.
    pub fn kmax(&self, lambda0: f64, h: f64) -> Result<(f64, f64)> {
        if self.scenario != Scenario::Deg {
            return Err(Error::ScenarioUnsupported(format!("kmax needs DEG, got {}", self.scenario)));
        }
        let ph = self.loop_phases(lambda0, h);
        let (a, b) = (ph[0].k_coeff, ph[1].k_coeff);
        let det = a.0 * b.1 - a.1 * b.0;
        if det.abs() < 1e-12 {
            return Err(Error::ScenarioUnsupported("loop phases do not separate k₁ and k₂".into()));
        }
        let (c0, c1) = (-ph[0].constant, -ph[1].constant);
        let k1 = (c0 * b.1 - a.1 * c1) / det;
        let k2 = (a.0 * c1 - c0 * b.0) / det;
        Ok((reduce_pm_pi(k1), reduce_pm_pi(k2)))
    }

    /// Location of the maximum of the predicted band `band` (in `λ`). Both
    /// loop cosines are extremal at [`Self::kmax`] and at its antipode
    /// `kmax + (π, π)`; `+` branches peak at the first, `−` branches at the
    /// second, so the band top is whichever carries the larger root.
    pub fn band_top(&self, band: (f64, f64), h: f64) -> Result<(f64, f64)> {
        let lambda0 = 0.5 * (band.0 + band.1);
        let k = self.kmax(lambda0, h)?;
        let anti = (reduce_pm_pi(k.0 + PI), reduce_pm_pi(k.1 + PI));
        let pad = 1e-6 + 0.05 * (band.1 - band.0);
        let top = |q: (f64, f64)| {
            scan_roots(|l| self.condition(l, q, h), band.0 - pad, band.1 + pad, SCAN_STEP.min(0.2 * (band.1 - band.0)).max(1e-4))
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        };
        if top(k) >= top(anti) {
            Ok(k)
        } else {
            Ok(anti)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "scenario")]
pub enum Widths {
    Y { band: f64, gap: f64 },
    X { band: f64, gap1: f64, gap2: f64 },
    #[serde(rename = "DEG")]
    Deg { band: f64, gap: f64 },
}

fn check(params: &ScenarioParams, want: Scenario) -> Result<()> {
    if params.scenario == want {
        Ok(())
    } else {
        Err(Error::ScenarioUnsupported(format!(
            "{want} formula applied to a {} separatrix",
            params.scenario
        )))
    }
}

pub fn dispersion_y(params: &ScenarioParams, lambda0: f64, k2: f64, h: f64, n: i64, branch: Branch) -> Result<f64> {
    check(params, Scenario::Y)?;
    params.dispersion(lambda0, (0.0, k2), h, n, branch, DEFAULT_WINDOW)
}

pub fn dispersion_x(params: &ScenarioParams, lambda0: f64, k2: f64, h: f64, n: i64, branch: Branch) -> Result<f64> {
    check(params, Scenario::X)?;
    params.dispersion(lambda0, (0.0, k2), h, n, branch, DEFAULT_WINDOW)
}

pub fn dispersion_deg(
    params: &ScenarioParams,
    lambda0: f64,
    k: (f64, f64),
    h: f64,
    n: i64,
    branch: Branch,
) -> Result<f64> {
    check(params, Scenario::Deg)?;
    params.dispersion(lambda0, k, h, n, branch, DEFAULT_WINDOW)
}

/// `(B, G)` for one saddle; `λ₀` measured along the saddle orientation.
pub fn widths_y(w: f64, lambda0: f64, h: f64) -> (f64, f64) {
    let c = 2.0 * w * h / h.ln().abs();
    let r = (1.0 + (-TAU * lambda0 / w).exp()).sqrt().recip();
    (c * r.asin(), c * r.acos())
}

/// `(B, G₁, G₂)`; the widths come in the order `B, G₁, B, G₂`.
pub fn widths_x(w: f64, wt: f64, lambda0: f64, delta1: f64, h: f64) -> (f64, f64, f64) {
    let c = w * wt * h / ((w + wt) * h.ln().abs());
    let q = (-(1.0 / w + 1.0 / wt) * lambda0 * PI).exp();
    let d = ((1.0 + (-TAU * lambda0 / w).exp()) * (1.0 + (-TAU * lambda0 / wt).exp())).sqrt();
    let plus = ((1.0 + q * delta1.cos()) / d).clamp(-1.0, 1.0);
    let minus = ((1.0 - q * delta1.cos()) / d).clamp(-1.0, 1.0);
    (c * (plus.asin() + minus.asin()), 2.0 * c * plus.acos(), 2.0 * c * minus.acos())
}

/// `(B, G)` for two saddles of opposite orientation.
pub fn widths_deg(w: f64, wt: f64, lambda0: f64, h: f64) -> (f64, f64) {
    let c = 2.0 * w * wt * h / ((w + wt) * h.ln().abs());
    let num = (-PI * lambda0 / w).exp() + (-PI * lambda0 / wt).exp();
    let d = ((1.0 + (-TAU * lambda0 / w).exp()) * (1.0 + (-TAU * lambda0 / wt).exp())).sqrt();
    let r = (num / d).clamp(-1.0, 1.0);
    (c * r.asin(), c * r.acos())
}

/// `2π{Δ/2π + ½} − π` componentwise.
pub fn kmax_from_deltas(delta1: f64, delta2: f64) -> (f64, f64) {
    let f = |d: f64| {
        let x = d / TAU + 0.5;
        TAU * (x - x.floor()) - PI
    };
    (f(delta1), f(delta2))
}
