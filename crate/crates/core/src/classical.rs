//! Phase-space geometry of a symbol on the torus `[0, 2π)²`.
//!
//! Coordinates are stored in `(p, x)` order; lifts are integer vectors in
//! the same order, in units of `2π`. Trajectories are oriented by the flow
//! `ẋ = H_p`, `ṗ = −H_x`.

use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::flow::{torus_delta, Flow, FlowState};
use crate::symbol::{reduce_angle, Freq, Hessian, Point2, TrigSymbol};

pub const DEGENERACY_FLOOR: f64 = 1e-8;
pub const MERGE_RADIUS: f64 = 1e-6;
pub const BRANCH_OFFSET: f64 = 1e-4;
pub const CRITICAL_GUARD: f64 = 1e-6;
pub const GRADIENT_TOL: f64 = 1e-10;
/// Rotation applied to the "up" reference when a branch is exactly vertical.
pub const TIE_ROTATION: f64 = 1e-6;
const SEED_GRID: usize = 64;
const LEVEL_GRID: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Min,
    Max,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub location: Point2,
    pub kind: CriticalKind,
    pub value: f64,
    pub hessian: Hessian,
    /// `√|det H''|`.
    pub w: f64,
}

impl CriticalPoint {
    pub fn pos(&self) -> (f64, f64) {
        (self.location.p, self.location.x)
    }
}

fn newton_critical(symbol: &TrigSymbol, mut p: f64, mut x: f64) -> Option<(f64, f64)> {
    let scale = symbol.abs_sum().max(1e-300);
    for _ in 0..80 {
        let (gp, gx) = symbol.gradient(p, x);
        if gp.hypot(gx) < 1e-14 * scale {
            break;
        }
        let h = symbol.hessian(p, x);
        let det = h.det();
        let (mut dp, mut dx) = if det.abs() > 1e-10 * scale * scale {
            (-(h.xx * gp - h.px * gx) / det, -(-h.px * gp + h.pp * gx) / det)
        } else {
            // Levenberg–Marquardt on the symmetric system
            let mu = 1e-6 * scale * scale;
            let a = h.pp * h.pp + h.px * h.px + mu;
            let b = h.pp * h.px + h.px * h.xx;
            let c = h.px * h.px + h.xx * h.xx + mu;
            let rp = -(h.pp * gp + h.px * gx);
            let rx = -(h.px * gp + h.xx * gx);
            let d = a * c - b * b;
            ((c * rp - b * rx) / d, (a * rx - b * rp) / d)
        };
        let len = dp.hypot(dx);
        if len > 0.5 {
            dp *= 0.5 / len;
            dx *= 0.5 / len;
        }
        p += dp;
        x += dx;
    }
    let (gp, gx) = symbol.gradient(p, x);
    (gp.hypot(gx) <= GRADIENT_TOL).then_some((p, x))
}

/// Newton refinement of a single critical point near `near`.
pub fn refine_critical(symbol: &TrigSymbol, near: Point2) -> Option<CriticalPoint> {
    let (p, x) = newton_critical(symbol, near.p, near.x)?;
    Some(classify(symbol, Point2::new(p, x)))
}

fn classify(symbol: &TrigSymbol, location: Point2) -> CriticalPoint {
    let hessian = symbol.hessian(location.p, location.x);
    let det = hessian.det();
    let kind = if det < 0.0 {
        CriticalKind::Saddle
    } else if hessian.pp + hessian.xx > 0.0 {
        CriticalKind::Min
    } else {
        CriticalKind::Max
    };
    CriticalPoint {
        location,
        kind,
        value: symbol.value(location.p, location.x),
        hessian,
        w: det.abs().sqrt(),
    }
}

/// All Newton-converged critical points, deduplicated but not checked for
/// degeneracy.
pub(crate) fn critical_candidates(symbol: &TrigSymbol) -> Vec<CriticalPoint> {
    let mut found: Vec<CriticalPoint> = Vec::new();
    for i in 0..SEED_GRID {
        for j in 0..SEED_GRID {
            let p0 = TAU * (i as f64 + 0.5) / SEED_GRID as f64;
            let x0 = TAU * (j as f64 + 0.5) / SEED_GRID as f64;
            let Some((p, x)) = newton_critical(symbol, p0, x0) else {
                continue;
            };
            let loc = Point2::new(p, x);
            let dup = found.iter().any(|c| {
                let (dp, dx) = torus_delta((c.location.p, c.location.x), (loc.p, loc.x));
                dp.hypot(dx) < MERGE_RADIUS
            });
            if !dup {
                found.push(classify(symbol, loc));
            }
        }
    }
    found.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.location.p.total_cmp(&b.location.p))
            .then(a.location.x.total_cmp(&b.location.x))
    });
    found
}

/// Critical points sorted by `(value, p, x)`.
pub fn find_critical_points(symbol: &TrigSymbol) -> Result<Vec<CriticalPoint>> {
    if symbol.is_constant() {
        return Err(Error::DegenerateCritical { p: 0.0, x: 0.0, det: 0.0 });
    }
    let found = critical_candidates(symbol);
    if let Some(c) = found.iter().find(|c| c.hessian.det().abs() < DEGENERACY_FLOOR) {
        return Err(Error::DegenerateCritical {
            p: c.location.p,
            x: c.location.x,
            det: c.hessian.det().abs(),
        });
    }
    Ok(found)
}

/// Distinct critical values, ascending.
pub fn critical_values(points: &[CriticalPoint]) -> Vec<f64> {
    let mut v: Vec<f64> = points.iter().map(|c| c.value).collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    v
}

/// One connected component of a regular level set.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub energy: f64,
    /// Continuous lift of the component, one period; the last sample equals
    /// the first shifted by `2π·lift`.
    pub samples: Vec<(f64, f64)>,
    /// True for contractible (finite-motion) components.
    pub closed: bool,
    pub lift: (i64, i64),
    pub period: f64,
    /// `∫ p dx` along the lifted samples.
    pub action: f64,
}

impl Trajectory {
    fn from_loop(energy: f64, lp: crate::flow::ClosedLoop) -> Self {
        Trajectory {
            energy,
            samples: lp.states.iter().map(|s| (s.p, s.x)).collect(),
            closed: lp.lift == (0, 0),
            lift: lp.lift,
            period: lp.period,
            action: lp.action,
        }
    }
}

fn check_energy(energy: f64, crit: &[CriticalPoint]) -> Result<()> {
    let min = crit.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
    let max = crit.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
    if crit.is_empty() || energy < min || energy > max {
        return Err(Error::EmptyLevelSet { energy, min, max });
    }
    if let Some(c) = crit.iter().find(|c| (c.value - energy).abs() < CRITICAL_GUARD) {
        return Err(Error::NearCriticalValue {
            energy,
            critical: c.value,
            distance: (c.value - energy).abs(),
        });
    }
    Ok(())
}

/// Trace the single component through `seed`, with the flow step `step`.
pub fn trace_component(symbol: &TrigSymbol, energy: f64, seed: (f64, f64), step: f64) -> Result<Trajectory> {
    let crit: Vec<(f64, f64)> = critical_candidates(symbol).iter().map(CriticalPoint::pos).collect();
    let lp = Flow::new(symbol, energy, &crit).with_step(step).trace_loop(seed)?;
    Ok(Trajectory::from_loop(energy, lp))
}

/// Spatial index of traced polylines used to skip seeds on known components.
struct Visited {
    cells: Vec<Vec<((f64, f64), (f64, f64))>>,
}

impl Visited {
    fn new() -> Self {
        Visited {
            cells: vec![Vec::new(); LEVEL_GRID * LEVEL_GRID],
        }
    }

    fn cell(p: f64, x: f64) -> (usize, usize) {
        let c = |a: f64| ((reduce_angle(a) / TAU * LEVEL_GRID as f64) as usize).min(LEVEL_GRID - 1);
        (c(p), c(x))
    }

    fn insert(&mut self, samples: &[(f64, f64)]) {
        for w in samples.windows(2) {
            let a = (reduce_angle(w[0].0), reduce_angle(w[0].1));
            let d = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            let b = (a.0 + d.0, a.1 + d.1);
            let (i, j) = Self::cell(a.0, a.1);
            self.cells[i * LEVEL_GRID + j].push((a, b));
        }
    }

    fn contains(&self, p: f64, x: f64, tol: f64) -> bool {
        let (i, j) = Self::cell(p, x);
        let n = LEVEL_GRID as i64;
        for di in -1..=1i64 {
            for dj in -1..=1i64 {
                let ci = (i as i64 + di).rem_euclid(n) as usize;
                let cj = (j as i64 + dj).rem_euclid(n) as usize;
                for &(a, b) in &self.cells[ci * LEVEL_GRID + cj] {
                    if segment_distance((p, x), a, b) < tol {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Torus distance from `z` to the segment `a → b` (b given relative to a's lift).
fn segment_distance(z: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (zp, zx) = torus_delta(z, a);
    let (dp, dx) = (b.0 - a.0, b.1 - a.1);
    let len2 = dp * dp + dx * dx;
    let t = if len2 > 0.0 {
        ((zp * dp + zx * dx) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (zp - t * dp).hypot(zx - t * dx)
}

fn level_seeds(symbol: &TrigSymbol, energy: f64, crit: &[CriticalPoint]) -> Vec<(f64, f64)> {
    let f = |p: f64, x: f64| symbol.value(p, x) - energy;
    let bisect = |a: (f64, f64), b: (f64, f64)| {
        let (mut lo, mut hi) = (0.0, 1.0);
        let fa = f(a.0, a.1);
        for _ in 0..50 {
            let m = 0.5 * (lo + hi);
            let v = f(a.0 + m * (b.0 - a.0), a.1 + m * (b.1 - a.1));
            if (v > 0.0) == (fa > 0.0) {
                lo = m;
            } else {
                hi = m;
            }
        }
        let m = 0.5 * (lo + hi);
        (a.0 + m * (b.0 - a.0), a.1 + m * (b.1 - a.1))
    };
    let mut seeds = Vec::new();
    // rays from extrema catch components smaller than a grid cell
    for c in crit.iter().filter(|c| c.kind != CriticalKind::Saddle) {
        let inside = (c.value - energy).signum();
        for &(ep, ex) in &[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)] {
            let mut prev = (c.location.p, c.location.x);
            let mut r = 1e-9;
            while r < PI {
                let cur = (c.location.p + r * ep, c.location.x + r * ex);
                if f(cur.0, cur.1).signum() != inside {
                    seeds.push(bisect(prev, cur));
                    break;
                }
                prev = cur;
                r *= 1.25;
            }
        }
    }
    let step = TAU / LEVEL_GRID as f64;
    for i in 0..LEVEL_GRID {
        for j in 0..LEVEL_GRID {
            let a = (i as f64 * step, j as f64 * step);
            for b in [(a.0 + step, a.1), (a.0, a.1 + step)] {
                if (f(a.0, a.1) > 0.0) != (f(b.0, b.1) > 0.0) {
                    seeds.push(bisect(a, b));
                }
            }
        }
    }
    seeds
}

/// Every connected component of `{H = E}` on the torus.
pub fn trace_level_set(symbol: &TrigSymbol, energy: f64) -> Result<Vec<Trajectory>> {
    let crit = critical_candidates(symbol);
    check_energy(energy, &crit)?;
    let crit_pos: Vec<(f64, f64)> = crit.iter().map(CriticalPoint::pos).collect();
    let flow = Flow::new(symbol, energy, &crit_pos);
    let mut visited = Visited::new();
    let mut out = Vec::new();
    for seed in level_seeds(symbol, energy, &crit) {
        let (p, x) = flow.project(seed.0, seed.1);
        if visited.contains(p, x, 1e-4) {
            continue;
        }
        let lp = flow.trace_loop((reduce_angle(p), reduce_angle(x)))?;
        let traj = Trajectory::from_loop(energy, lp);
        visited.insert(&traj.samples);
        out.push(traj);
    }
    Ok(out)
}

/// Local geometry of a saddle: the four separatrix branch directions,
/// labelled 1–4 so that the cyclic counter-clockwise order (x horizontal,
/// p vertical) is v₁, v₄, v₂, v₃ and the sector between v₃ and v₁ contains
/// the upward `+p` direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleFrame {
    /// `directions[l − 1]` is the unit `(dp, dx)` of branch `l`.
    pub directions: [(f64, f64); 4],
    /// Whether branch `l` leaves the saddle under the flow.
    pub outgoing: [bool; 4],
    /// Sign of `H − E` inside the sector between v₃ and v₁.
    pub sign: i32,
    pub w: f64,
    /// `|u × v|` for unit vectors on the two branch lines.
    pub cross: f64,
    /// True when a branch was exactly vertical and the reference was rotated.
    pub rotated: bool,
}

impl SaddleFrame {
    pub fn new(h: Hessian) -> Self {
        let w = (-h.det()).max(0.0).sqrt();
        // linearized flow on (dp, dx): [[−H_px, −H_xx], [H_pp, H_px]]
        let eig = |mu: f64| {
            let a = (h.xx, -h.px - mu);
            let b = (h.px - mu, -h.pp);
            let v = if a.0.hypot(a.1) >= b.0.hypot(b.1) { a } else { b };
            let n = v.0.hypot(v.1);
            (v.0 / n, v.1 / n)
        };
        let u = eig(w);
        let s = eig(-w);
        let rays = [(u, true), ((-u.0, -u.1), true), (s, false), ((-s.0, -s.1), false)];
        let angle = |v: (f64, f64)| v.0.atan2(v.1); // atan2(dp, dx)
        let mut up = PI / 2.0;
        let rotated = rays.iter().any(|(v, _)| (angle(*v) - up).abs() < 1e-12);
        if rotated {
            up += TIE_ROTATION;
        }
        let mut rel: Vec<(f64, (f64, f64), bool)> = rays
            .iter()
            .map(|&(v, out)| ((angle(v) - up).rem_euclid(TAU), v, out))
            .collect();
        rel.sort_by(|a, b| a.0.total_cmp(&b.0));
        // ascending counter-clockwise angle from "up": v1, v4, v2, v3
        let label_of_rank = [1usize, 4, 2, 3];
        let mut directions = [(0.0, 0.0); 4];
        let mut outgoing = [false; 4];
        for (rank, &(_, v, out)) in rel.iter().enumerate() {
            directions[label_of_rank[rank] - 1] = v;
            outgoing[label_of_rank[rank] - 1] = out;
        }
        let (v1, v3) = (directions[0], directions[2]);
        let bis = (v1.0 + v3.0, v1.1 + v3.1);
        let sign = if h.form(bis.0, bis.1) > 0.0 { 1 } else { -1 };
        let cross = (u.0 * s.1 - u.1 * s.0).abs();
        SaddleFrame {
            directions,
            outgoing,
            sign,
            w,
            cross,
            rotated,
        }
    }

    /// Label (1–4) of the branch closest in direction to `d`.
    pub fn label_towards(&self, d: (f64, f64)) -> usize {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, v) in self.directions.iter().enumerate() {
            let dot = v.0 * d.0 + v.1 * d.1;
            if dot > best.0 {
                best = (dot, i + 1);
            }
        }
        best.1
    }

    pub fn incoming_labels(&self) -> [usize; 2] {
        let mut v = (1..=4).filter(|&l| !self.outgoing[l - 1]);
        [v.next().unwrap(), v.next().unwrap()]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparatrixVertex {
    pub location: Point2,
    pub value: f64,
    pub hessian_pp: f64,
    pub frame: SaddleFrame,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparatrixEdge {
    pub from: usize,
    pub from_label: usize,
    pub to: usize,
    pub to_label: usize,
    /// Arrival lattice copy relative to the departure representative.
    pub lift: (i64, i64),
    /// Lifted polyline starting near `from`.
    pub polyline: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparatrixGraph {
    pub energy: f64,
    pub vertices: Vec<SeparatrixVertex>,
    pub edges: Vec<SeparatrixEdge>,
}

impl SeparatrixGraph {
    pub fn vertex_pos(&self, v: usize) -> (f64, f64) {
        (self.vertices[v].location.p, self.vertices[v].location.x)
    }

    pub fn to_json_value(&self, every: usize) -> Value {
        let every = every.max(1);
        json!({
            "schema_version": 1,
            "energy": self.energy,
            "vertices": self.vertices.iter().map(|v| json!({
                "p": v.location.p,
                "x": v.location.x,
                "w": v.frame.w,
                "sign": v.frame.sign,
                "rotated": v.frame.rotated,
                "branches": (1..=4).map(|l| json!({
                    "label": l,
                    "direction": [v.frame.directions[l - 1].0, v.frame.directions[l - 1].1],
                    "outgoing": v.frame.outgoing[l - 1],
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|e| json!({
                "from": e.from,
                "from_label": e.from_label,
                "to": e.to,
                "to_label": e.to_label,
                "lift": [e.lift.0, e.lift.1],
                "polyline": decimate(&e.polyline, every),
            })).collect::<Vec<_>>(),
        })
    }
}

fn decimate(pts: &[(f64, f64)], every: usize) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = pts.iter().step_by(every).map(|&(p, x)| [p, x]).collect();
    if let Some(&(p, x)) = pts.last() {
        if (pts.len() - 1) % every != 0 {
            out.push([p, x]);
        }
    }
    out
}

/// Saddles of `symbol` at the value `energy`, sorted by canonical key.
pub fn saddles_at(symbol: &TrigSymbol, energy: f64) -> Result<Vec<CriticalPoint>> {
    let crit = find_critical_points(symbol)?;
    let tol = 1e-8 * (1.0 + energy.abs());
    let saddles: Vec<CriticalPoint> = crit
        .into_iter()
        .filter(|c| c.kind == CriticalKind::Saddle && (c.value - energy).abs() <= tol)
        .collect();
    if saddles.is_empty() {
        return Err(Error::NotASaddleValue(energy));
    }
    Ok(saddles)
}

/// Identify the saddle copy a traced state is approaching: `(vertex, lift)`.
pub(crate) fn nearest_saddle(vertices: &[(f64, f64)], z: (f64, f64)) -> (usize, (i64, i64), f64) {
    let mut best = (0usize, (0i64, 0i64), f64::INFINITY);
    for (i, &v) in vertices.iter().enumerate() {
        let (dp, dx) = torus_delta(z, v);
        let d = dp.hypot(dx);
        if d < best.2 {
            let lp = ((z.0 - dp - v.0) / TAU).round() as i64;
            let lx = ((z.1 - dx - v.1) / TAU).round() as i64;
            best = (i, (lp, lx), d);
        }
    }
    best
}

/// Trace the separatrix network at a saddle value.
pub fn separatrix_graph(symbol: &TrigSymbol, energy: f64) -> Result<SeparatrixGraph> {
    let saddles = saddles_at(symbol, energy)?;
    let energy = saddles[0].value;
    let crit: Vec<(f64, f64)> = find_critical_points(symbol)?.iter().map(CriticalPoint::pos).collect();
    let flow = Flow::new(symbol, energy, &crit);
    let vertices: Vec<SeparatrixVertex> = saddles
        .iter()
        .map(|c| SeparatrixVertex {
            location: c.location,
            value: c.value,
            hessian_pp: c.hessian.pp,
            frame: SaddleFrame::new(c.hessian),
        })
        .collect();
    let reps: Vec<(f64, f64)> = saddles.iter().map(CriticalPoint::pos).collect();
    let mut edges = Vec::new();
    for (vi, v) in vertices.iter().enumerate() {
        for label in 1..=4 {
            if !v.frame.outgoing[label - 1] {
                continue;
            }
            let d = v.frame.directions[label - 1];
            let (p, x) = flow.project(reps[vi].0 + BRANCH_OFFSET * d.0, reps[vi].1 + BRANCH_OFFSET * d.1);
            let start = FlowState::at(p, x);
            let (states, _) = flow.trace_until(start, |st| {
                st.s > 1e-2 && nearest_saddle(&reps, (st.p, st.x)).2 < BRANCH_OFFSET
            })?;
            let end = states.last().unwrap();
            let (to, lift, _) = nearest_saddle(&reps, (end.p, end.x));
            let rel = (
                end.p - reps[to].0 - TAU * lift.0 as f64,
                end.x - reps[to].1 - TAU * lift.1 as f64,
            );
            let to_label = vertices[to].frame.label_towards(rel);
            edges.push(SeparatrixEdge {
                from: vi,
                from_label: label,
                to,
                to_label,
                lift,
                polyline: states.iter().map(|s| (s.p, s.x)).collect(),
            });
        }
    }
    Ok(SeparatrixGraph {
        energy,
        vertices,
        edges,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReebNodeKind {
    Min,
    Max,
    Branch,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReebNode {
    pub kind: ReebNodeKind,
    pub energy: f64,
    /// Representative location (an extremum, or the first saddle at this value).
    pub location: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReebEdgeKind {
    Finite,
    Infinite,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReebEdge {
    pub lower: usize,
    pub upper: usize,
    pub kind: ReebEdgeKind,
    pub energy_interval: (f64, f64),
    /// Primitive direction of motion for infinite edges.
    pub direction: Option<(i64, i64)>,
    /// A point of the component at the mid energy of the interval.
    pub seed: (f64, f64),
    /// Flow-oriented lift of that component.
    pub lift: (i64, i64),
}

#[derive(Debug, Clone, Serialize)]
pub struct ReebGraph {
    pub nodes: Vec<ReebNode>,
    pub edges: Vec<ReebEdge>,
}

impl ReebGraph {
    /// Number of edges whose open energy interval contains `energy`.
    pub fn fiber_count(&self, energy: f64) -> usize {
        self.edges
            .iter()
            .filter(|e| e.energy_interval.0 < energy && energy < e.energy_interval.1)
            .count()
    }

    pub fn to_json_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("reeb graph serializes");
        v["schema_version"] = json!(1);
        v
    }
}

pub fn reeb_graph(symbol: &TrigSymbol) -> Result<ReebGraph> {
    let crit = find_critical_points(symbol)?;
    let values = critical_values(&crit);
    let mut nodes: Vec<ReebNode> = Vec::new();
    // node index per extremum point, per saddle value
    let mut extremum_node = vec![usize::MAX; crit.len()];
    for (i, c) in crit.iter().enumerate() {
        match c.kind {
            CriticalKind::Saddle => {}
            kind => {
                extremum_node[i] = nodes.len();
                nodes.push(ReebNode {
                    kind: if kind == CriticalKind::Min { ReebNodeKind::Min } else { ReebNodeKind::Max },
                    energy: c.value,
                    location: c.pos(),
                });
            }
        }
    }
    let mut branch_node = Vec::new();
    for &v in &values {
        if let Some(c) = crit
            .iter()
            .find(|c| c.kind == CriticalKind::Saddle && (c.value - v).abs() < 1e-9)
        {
            branch_node.push((v, nodes.len()));
            nodes.push(ReebNode {
                kind: ReebNodeKind::Branch,
                energy: v,
                location: c.pos(),
            });
        }
    }
    let node_at = |energy: f64, centroid: (f64, f64), kind: CriticalKind| -> usize {
        if let Some(&(_, n)) = branch_node.iter().find(|(v, _)| (v - energy).abs() < 1e-9) {
            return n;
        }
        // nearest extremum of the requested kind at this value
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, c) in crit.iter().enumerate() {
            if c.kind == kind && (c.value - energy).abs() < 1e-9 {
                let (dp, dx) = torus_delta(c.pos(), centroid);
                let d = dp.hypot(dx);
                if d < best.0 {
                    best = (d, extremum_node[i]);
                }
            }
        }
        best.1
    };
    let mut edges = Vec::new();
    for w in values.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        for traj in trace_level_set(symbol, mid)? {
            let n = traj.samples.len() as f64;
            let centroid = traj
                .samples
                .iter()
                .fold((0.0, 0.0), |acc, &(p, x)| (acc.0 + p / n, acc.1 + x / n));
            let centroid = (reduce_angle(centroid.0), reduce_angle(centroid.1));
            let lower = node_at(w[0], centroid, CriticalKind::Min);
            let upper = node_at(w[1], centroid, CriticalKind::Max);
            let (kind, direction) = if traj.closed {
                (ReebEdgeKind::Finite, None)
            } else {
                // canonical sign: first nonzero component positive
                let (a, b) = traj.lift;
                let s = if a < 0 || (a == 0 && b < 0) { -1 } else { 1 };
                (ReebEdgeKind::Infinite, Some((s * a, s * b)))
            };
            edges.push(ReebEdge {
                lower,
                upper,
                kind,
                energy_interval: (w[0], w[1]),
                direction,
                seed: (reduce_angle(traj.samples[0].0), reduce_angle(traj.samples[0].1)),
                lift: traj.lift,
            });
        }
    }
    Ok(ReebGraph { nodes, edges })
}

/// Tune the amplitude `a` of an added `a·cos(m p + n x)` so the saddles near
/// `first` and `second` reach the same value.
pub fn equalize_saddles(
    symbol: &TrigSymbol,
    key: Freq,
    first: Point2,
    second: Point2,
    bracket: (f64, f64),
) -> Result<TrigSymbol> {
    let split = |amp: f64| -> Result<f64> {
        let s = symbol.plus_cos(key, amp)?;
        let a = refine_critical(&s, first).ok_or(Error::NoBracket { lo: bracket.0, hi: bracket.1 })?;
        let b = refine_critical(&s, second).ok_or(Error::NoBracket { lo: bracket.0, hi: bracket.1 })?;
        Ok(a.value - b.value)
    };
    if split(0.0)?.abs() <= 1e-12 {
        return Ok(symbol.clone());
    }
    let (mut lo, mut hi) = bracket;
    let (mut flo, fhi) = (split(lo)?, split(hi)?);
    if flo == 0.0 {
        return symbol.plus_cos(key, lo);
    }
    if fhi == 0.0 {
        return symbol.plus_cos(key, hi);
    }
    if (flo > 0.0) == (fhi > 0.0) {
        return Err(Error::NoBracket { lo, hi });
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        let fm = split(mid)?;
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    symbol.plus_cos(key, 0.5 * (lo + hi))
}

/// SVG of level curves on the fundamental domain (x horizontal, p up).
pub fn render_level_curves_svg(symbol: &TrigSymbol, energies: &[f64], size: u32) -> Result<String> {
    let scale = size as f64 / TAU;
    let mut paths = String::new();
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    for (k, &e) in energies.iter().enumerate() {
        let curves = match trace_level_set(symbol, e) {
            Ok(c) => c,
            Err(Error::NearCriticalValue { .. }) => separatrix_graph(symbol, e)?
                .edges
                .into_iter()
                .map(|ed| Trajectory {
                    energy: e,
                    samples: ed.polyline,
                    closed: false,
                    lift: ed.lift,
                    period: f64::INFINITY,
                    action: f64::NAN,
                })
                .collect(),
            Err(err) => return Err(err),
        };
        for c in curves {
            let mut d = String::new();
            let mut prev: Option<(f64, f64)> = None;
            for &(p, x) in &c.samples {
                let (rp, rx) = (reduce_angle(p), reduce_angle(x));
                let jump = prev.is_none_or(|(pp, px)| (pp - rp).abs() > PI || (px - rx).abs() > PI);
                let (sx, sy) = (rx * scale, size as f64 - rp * scale);
                d.push_str(&format!("{}{:.2},{:.2} ", if jump { "M" } else { "L" }, sx, sy));
                prev = Some((rp, rx));
            }
            paths.push_str(&format!(
                "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\"/>\n",
                d.trim_end(),
                palette[k % palette.len()]
            ));
        }
    }
    Ok(format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n\
         <rect width=\"{size}\" height=\"{size}\" fill=\"white\" stroke=\"black\"/>\n{paths}</svg>\n"
    ))
}
