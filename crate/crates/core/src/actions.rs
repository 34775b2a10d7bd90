//! Actions, times and Maslov indices of cycles and separatrix edges.
//!
//! Edge weights use a fixed gauge so that they add up along cycles: an edge
//! leaving vertex `V` and arriving at the lattice copy `W + 2πl` carries
//! `B = ∫ p dx − 2π l_p (x_W + 2π l_x)`, where the integral runs along the
//! lifted edge starting from `V`'s representative. The correction is the
//! phase picked up by the magnetic translation that maps the copy back to
//! `W`, which makes `B/h` the relative WKB phase between the local
//! solutions at the two vertices.

use serde::Serialize;
use std::f64::consts::{PI, TAU};

use crate::classical::{nearest_saddle, CriticalPoint, SeparatrixGraph, Trajectory};
use crate::error::{Error, Result};
use crate::flow::{Flow, FlowState};
use crate::symbol::TrigSymbol;

/// Cutoff radii for the renormalized time.
pub const CUTOFFS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
pub const RICHARDSON_TOL: f64 = 1e-5;
/// Start and stop distance of the fine edge trace.
const EDGE_START: f64 = 2e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleData {
    pub a: f64,
    pub i: f64,
    pub m: i64,
    pub homology: (i64, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeWeight {
    pub b: f64,
    pub j: f64,
    pub m: i64,
    pub from: usize,
    pub from_label: usize,
    pub to: usize,
    pub to_label: usize,
    pub lift: (i64, i64),
}

fn closure_gap(traj: &Trajectory) -> f64 {
    let (Some(first), Some(last)) = (traj.samples.first(), traj.samples.last()) else {
        return 0.0;
    };
    let dp = last.0 - first.0 - TAU * traj.lift.0 as f64;
    let dx = last.1 - first.1 - TAU * traj.lift.1 as f64;
    dp.hypot(dx)
}

/// `∮ p dx` along the lifted cycle, flow-oriented.
pub fn principal_action(traj: &Trajectory) -> Result<f64> {
    if traj.samples.len() <= 1 {
        return Ok(0.0);
    }
    if closure_gap(traj) > 1e-6 {
        return Err(Error::NotAClosedCycle);
    }
    Ok(traj.action)
}

/// Signed flow time `∫ dt` along a polyline lying on a level set: positive
/// when traversed with the flow. Five-point Gauss–Legendre per segment.
pub fn hamiltonian_time(
    symbol: &TrigSymbol,
    polyline: &[(f64, f64)],
    critical: &[CriticalPoint],
    cutoff: f64,
) -> Result<f64> {
    for &(p, x) in polyline {
        for c in critical {
            let (dp, dx) = crate::flow::torus_delta((p, x), c.pos());
            let d = dp.hypot(dx);
            if d < cutoff {
                return Err(Error::NearCritical { distance: d, cutoff });
            }
        }
    }
    const NODES: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    // each segment is replaced by the cubic Hermite arc through its end
    // points with the flow tangents there, which is fourth-order accurate
    let tangent = |p: f64, x: f64, chord: (f64, f64)| -> (f64, f64) {
        let (hp, hx) = symbol.gradient(p, x);
        let g = hp.hypot(hx);
        let (tp, tx) = (-hx / g, hp / g);
        if tp * chord.0 + tx * chord.1 >= 0.0 {
            (tp, tx)
        } else {
            (-tp, -tx)
        }
    };
    let mut t = 0.0;
    for w in polyline.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d = (b.0 - a.0, b.1 - a.1);
        let len = d.0.hypot(d.1);
        if len == 0.0 {
            continue;
        }
        let ta = tangent(a.0, a.1, d);
        let tb = tangent(b.0, b.1, d);
        for (n, wt) in NODES.iter().zip(WEIGHTS) {
            let u = 0.5 * (1.0 + n);
            let (u2, u3) = (u * u, u * u * u);
            let (h00, h10, h01, h11) = (2.0 * u3 - 3.0 * u2 + 1.0, u3 - 2.0 * u2 + u, -2.0 * u3 + 3.0 * u2, u3 - u2);
            let (d00, d10, d01, d11) = (6.0 * u2 - 6.0 * u, 3.0 * u2 - 4.0 * u + 1.0, -6.0 * u2 + 6.0 * u, 3.0 * u2 - 2.0 * u);
            let zp = h00 * a.0 + h10 * len * ta.0 + h01 * b.0 + h11 * len * tb.0;
            let zx = h00 * a.1 + h10 * len * ta.1 + h01 * b.1 + h11 * len * tb.1;
            let dp = d00 * a.0 + d10 * len * ta.0 + d01 * b.0 + d11 * len * tb.0;
            let dx = d00 * a.1 + d10 * len * ta.1 + d01 * b.1 + d11 * len * tb.1;
            let (hp, hx) = symbol.gradient(zp, zx);
            let g2 = hp * hp + hx * hx;
            // dt = (dz · flow)/|∇H|² with flow = (−H_x, H_p)
            t += 0.5 * wt * (dp * -hx + dx * hp) / g2;
        }
    }
    Ok(t)
}

/// Signed count of smooth vertical tangencies (`H_p = 0`) along a path;
/// each contributes `sign(H_pp)` there.
pub fn maslov_along(symbol: &TrigSymbol, samples: &[(f64, f64)]) -> i64 {
    let mut m = 0;
    for w in samples.windows(2) {
        let a = symbol.gradient(w[0].0, w[0].1).0;
        let b = symbol.gradient(w[1].0, w[1].1).0;
        if (a > 0.0) != (b > 0.0) && a != b {
            let s = a / (a - b);
            let (p, x) = (w[0].0 + s * (w[1].0 - w[0].0), w[0].1 + s * (w[1].1 - w[0].1));
            m += if symbol.hessian(p, x).pp > 0.0 { 1 } else { -1 };
        }
    }
    m
}

pub fn maslov_index(symbol: &TrigSymbol, traj: &Trajectory) -> Result<i64> {
    if closure_gap(traj) > 1e-6 {
        return Err(Error::NotAClosedCycle);
    }
    Ok(maslov_along(symbol, &traj.samples))
}

pub fn cycle_data(symbol: &TrigSymbol, traj: &Trajectory) -> Result<CycleData> {
    Ok(CycleData {
        a: principal_action(traj)?,
        i: traj.period,
        m: maslov_index(symbol, traj)?,
        homology: traj.lift,
    })
}

/// Sum of edge weights along a cycle given as edge indices.
pub fn cycle_from_edges(weights: &[EdgeWeight], edges: &[usize]) -> CycleData {
    edges.iter().fold(
        CycleData {
            a: 0.0,
            i: 0.0,
            m: 0,
            homology: (0, 0),
        },
        |acc, &e| {
            let w = &weights[e];
            CycleData {
                a: acc.a + w.b,
                i: acc.i + w.j,
                m: acc.m + w.m,
                homology: (acc.homology.0 + w.lift.0, acc.homology.1 + w.lift.1),
            }
        },
    )
}

#[derive(Debug, Clone, Copy)]
pub struct RenormOptions {
    pub cutoffs: [f64; 3],
    pub tolerance: f64,
    /// Coefficient sign of the logarithmic corner term; `+1` is the
    /// convergent choice, `−1` is kept for the negative test.
    pub corner_sign: f64,
}

impl Default for RenormOptions {
    fn default() -> Self {
        RenormOptions {
            cutoffs: CUTOFFS,
            tolerance: RICHARDSON_TOL,
            corner_sign: 1.0,
        }
    }
}

/// Fine trace of one separatrix edge, kept for event queries.
pub struct EdgeTrace {
    states: Vec<FlowState>,
    steps: Vec<f64>,
    from: (f64, f64),
    /// Arrival copy `W + 2πl` in lifted coordinates.
    to: (f64, f64),
    w_from: f64,
    w_to: f64,
    cross_from: f64,
    cross_to: f64,
    pub b: f64,
    pub m: i64,
}

impl EdgeTrace {
    pub fn new(symbol: &TrigSymbol, graph: &SeparatrixGraph, edge: usize, critical: &[(f64, f64)]) -> Result<Self> {
        let e = &graph.edges[edge];
        let flow = Flow::new(symbol, graph.energy, critical);
        let reps: Vec<(f64, f64)> = (0..graph.vertices.len()).map(|v| graph.vertex_pos(v)).collect();
        let v = reps[e.from];
        let d = graph.vertices[e.from].frame.directions[e.from_label - 1];
        let (p0, x0) = flow.project(v.0 + EDGE_START * d.0, v.1 + EDGE_START * d.1);
        let (states, steps) = flow.trace_until(FlowState::at(p0, x0), |st| {
            st.s > 1e-2 && nearest_saddle(&reps, (st.p, st.x)).2 < EDGE_START
        })?;
        let last = *states.last().unwrap();
        let (to, lift, _) = nearest_saddle(&reps, (last.p, last.x));
        if to != e.to || lift != e.lift {
            return Err(Error::TracingDivergence(format!(
                "fine trace of edge {edge} reached vertex {to} lift {lift:?}, graph says {} {:?}",
                e.to, e.lift
            )));
        }
        let w_pos = reps[to];
        let target = (w_pos.0 + TAU * lift.0 as f64, w_pos.1 + TAU * lift.1 as f64);
        // straight pieces between the saddles and the traced ends
        let head = 0.5 * (v.0 + p0) * (x0 - v.1);
        let tail = 0.5 * (last.p + target.0) * (target.1 - last.x);
        let b_raw = head + last.b + tail;
        let b = b_raw - TAU * lift.0 as f64 * (w_pos.1 + TAU * lift.1 as f64);
        let samples: Vec<(f64, f64)> = states.iter().map(|s| (s.p, s.x)).collect();
        let m = maslov_along(symbol, &samples);
        let fv = &graph.vertices[e.from].frame;
        let fw = &graph.vertices[to].frame;
        Ok(EdgeTrace {
            states,
            steps,
            from: v,
            to: target,
            w_from: fv.w,
            w_to: fw.w,
            cross_from: fv.cross,
            cross_to: fw.cross,
            b,
            m,
        })
    }

    fn dist(a: (f64, f64), st: &FlowState) -> f64 {
        (st.p - a.0).hypot(st.x - a.1)
    }

    /// Flow time between the points at distance `r` from the departure and
    /// arrival saddles.
    pub fn time_between(&self, flow: &Flow, r: f64) -> Result<f64> {
        let n = self.states.len();
        let dep = (0..n - 1)
            .find(|&i| Self::dist(self.from, &self.states[i]) < r && Self::dist(self.from, &self.states[i + 1]) >= r)
            .ok_or(Error::NearCritical { distance: r, cutoff: r })?;
        let arr = (0..n - 1)
            .rev()
            .find(|&i| Self::dist(self.to, &self.states[i]) >= r && Self::dist(self.to, &self.states[i + 1]) < r)
            .ok_or(Error::NearCritical { distance: r, cutoff: r })?;
        let from = self.from;
        let to = self.to;
        let a = flow.locate(&self.states[dep], self.steps[dep], |s| Self::dist(from, s) - r)?;
        let b = flow.locate(&self.states[arr], self.steps[arr], |s| Self::dist(to, s) - r)?;
        Ok(b.t - a.t)
    }

    /// `J(r)`: the cut time plus the logarithmic corner terms.
    pub fn regularized_time(&self, flow: &Flow, r: f64, corner_sign: f64) -> Result<f64> {
        let t = self.time_between(flow, r)?;
        let corr = (r.ln() + 0.5 * self.cross_from.ln()) / self.w_from + (r.ln() + 0.5 * self.cross_to.ln()) / self.w_to;
        Ok(t + corner_sign * corr)
    }

    pub fn renormalized_time(&self, flow: &Flow, opts: &RenormOptions) -> Result<f64> {
        let [r1, r2, r3] = opts.cutoffs;
        let j1 = self.regularized_time(flow, r1, opts.corner_sign)?;
        let j2 = self.regularized_time(flow, r2, opts.corner_sign)?;
        let j3 = self.regularized_time(flow, r3, opts.corner_sign)?;
        // linear extrapolation to r = 0 from each consecutive pair
        let e1 = (r1 * j2 - r2 * j1) / (r1 - r2);
        let e2 = (r2 * j3 - r3 * j2) / (r2 - r3);
        if !((e1 - e2).abs() <= opts.tolerance) {
            return Err(Error::NoConvergence { first: e1, second: e2 });
        }
        Ok(e2)
    }
}

fn crit_positions(symbol: &TrigSymbol) -> Result<Vec<(f64, f64)>> {
    Ok(crate::classical::find_critical_points(symbol)?
        .iter()
        .map(CriticalPoint::pos)
        .collect())
}

/// Renormalized time of one edge with explicit options.
pub fn renormalized_time(symbol: &TrigSymbol, graph: &SeparatrixGraph, edge: usize, opts: &RenormOptions) -> Result<f64> {
    let crit = crit_positions(symbol)?;
    let tr = EdgeTrace::new(symbol, graph, edge, &crit)?;
    tr.renormalized_time(&Flow::new(symbol, graph.energy, &crit), opts)
}

/// `(B, J, m)` for every edge of the graph, in edge order.
pub fn edge_weights(symbol: &TrigSymbol, graph: &SeparatrixGraph) -> Result<Vec<EdgeWeight>> {
    let crit = crit_positions(symbol)?;
    let flow = Flow::new(symbol, graph.energy, &crit);
    let opts = RenormOptions::default();
    (0..graph.edges.len())
        .map(|k| {
            let tr = EdgeTrace::new(symbol, graph, k, &crit)?;
            let e = &graph.edges[k];
            Ok(EdgeWeight {
                b: tr.b,
                j: tr.renormalized_time(&flow, &opts)?,
                m: tr.m,
                from: e.from,
                from_label: e.from_label,
                to: e.to,
                to_label: e.to_label,
                lift: e.lift,
            })
        })
        .collect()
}

/// Shape-preserving cubic interpolant (Fritsch–Carlson).
#[derive(Debug, Clone, Serialize)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut m = vec![0.0; n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            m[i] = if d[i - 1] * d[i] <= 0.0 { 0.0 } else { 0.5 * (d[i - 1] + d[i]) };
        }
        Self::limited(xs, ys, m)
    }

    /// Hermite interpolant with known derivatives, passed through the same
    /// monotonicity limiter (a no-op when the data are smooth enough).
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, slopes: Vec<f64>) -> Self {
        Self::limited(xs, ys, slopes)
    }

    fn limited(xs: Vec<f64>, ys: Vec<f64>, mut m: Vec<f64>) -> Self {
        let n = xs.len();
        let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        for i in 0..n - 1 {
            if d[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            if m[i] * d[i] < 0.0 {
                m[i] = 0.0;
            }
            if m[i + 1] * d[i] < 0.0 {
                m[i + 1] = 0.0;
            }
            let a = m[i] / d[i];
            let b = m[i + 1] / d[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                m[i] = t * a * d[i];
                m[i + 1] = t * b * d[i];
            }
        }
        MonotoneCubic { xs, ys, slopes: m }
    }

    /// The `x` with `eval(x) = y`, if `y` lies in the tabulated range.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        let n = self.xs.len();
        let (y0, y1) = (self.ys[0], self.ys[n - 1]);
        let inc = y1 > y0;
        if (inc && !(y0..=y1).contains(&y)) || (!inc && !(y1..=y0).contains(&y)) {
            return None;
        }
        // bracketing interval, then bisection on the cubic
        let i = (0..n - 1)
            .find(|&i| (self.ys[i] - y) * (self.ys[i + 1] - y) <= 0.0)
            .unwrap_or(n - 2);
        let (mut lo, mut hi) = (self.xs[i], self.xs[i + 1]);
        let flo = self.eval(lo) - y;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if (self.eval(mid) - y > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Index of the interval containing `x`, clamped to the table.
    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.ys[i]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * self.ys[i + 1]
            + (t3 - t2) * h * self.slopes[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * self.ys[i]
            + (3.0 * t2 - 4.0 * t + 1.0) * h * self.slopes[i]
            + (-6.0 * t2 + 6.0 * t) * self.ys[i + 1]
            + (3.0 * t2 - 2.0 * t) * h * self.slopes[i + 1])
            / h
    }
}

/// `S(E)` for one open-trajectory family, tabulated and interpolated.
#[derive(Debug, Clone, Serialize)]
pub struct OpenAction {
    /// Flow-oriented lift selecting the family.
    pub lift: (i64, i64),
    pub energies: Vec<f64>,
    /// `∫ p dx` over one period traversed towards increasing x, with the
    /// starting momentum in `[−π, π)`.
    pub actions: Vec<f64>,
    pub periods: Vec<f64>,
    interp: MonotoneCubic,
    period_interp: MonotoneCubic,
}

impl OpenAction {
    pub fn s(&self, e: f64) -> f64 {
        self.interp.eval(e)
    }

    pub fn ds_de(&self, e: f64) -> f64 {
        self.interp.derivative(e)
    }

    pub fn period(&self, e: f64) -> f64 {
        self.period_interp.eval(e)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.energies[0], *self.energies.last().unwrap())
    }

    /// Energy with `S(E) = s`, if it lies in the tabulated domain.
    pub fn energy_for(&self, s: f64) -> Option<f64> {
        self.interp.inverse(s)
    }
}

fn action_along_plus_x(traj: &Trajectory) -> f64 {
    let sigma = traj.lift.1.signum() as f64;
    let mut s = sigma * traj.action;
    // traversed towards +x the starting momentum is the first sample when
    // sigma > 0 and the last one otherwise; both equal the seed modulo 2π·lift_p
    let p_start = if sigma > 0.0 { traj.samples[0].0 } else { traj.samples.last().unwrap().0 };
    let shift = ((p_start + PI) / TAU).floor();
    s -= shift * TAU * TAU * traj.lift.1.abs() as f64;
    s
}

/// `S(E)` and the period for the single component of family `lift` at `energy`.
pub fn open_action_at(symbol: &TrigSymbol, lift: (i64, i64), energy: f64) -> Result<(f64, f64)> {
    if lift.1 == 0 {
        return Err(Error::Config(format!("open family {lift:?} does not advance in x")));
    }
    let traj = crate::classical::trace_level_set(symbol, energy)?
        .into_iter()
        .find(|t| t.lift == lift)
        .ok_or_else(|| Error::Config(format!("no open component with lift {lift:?} at E = {energy}")))?;
    Ok((action_along_plus_x(&traj), traj.period))
}

/// Follows one open component from a point near it; used to continue a
/// family in energy without rescanning the torus.
pub(crate) fn open_action_from_seed(
    symbol: &TrigSymbol,
    lift: (i64, i64),
    energy: f64,
    seed: (f64, f64),
    crit: &[(f64, f64)],
) -> Result<(f64, f64, (f64, f64))> {
    let flow = Flow::new(symbol, energy, crit);
    let (p, x) = flow.project(seed.0, seed.1);
    let lp = flow.trace_loop((p, x))?;
    if lp.lift != lift {
        return Err(Error::TracingDivergence(format!(
            "continuation of family {lift:?} landed on lift {:?} at E = {energy}",
            lp.lift
        )));
    }
    let traj = Trajectory {
        energy,
        samples: lp.states.iter().map(|s| (s.p, s.x)).collect(),
        closed: false,
        lift,
        period: lp.period,
        action: lp.action,
    };
    let next = (crate::symbol::reduce_angle(p), crate::symbol::reduce_angle(x));
    Ok((action_along_plus_x(&traj), traj.period, next))
}

/// Tabulate `S(E)` on `n ≥ 33` equispaced energies. Interpolation is cubic
/// Hermite with the exact slopes `dS/dE = sign(lift_x)·T(E)`.
pub fn open_action_table(symbol: &TrigSymbol, lift: (i64, i64), window: (f64, f64), n: usize) -> Result<OpenAction> {
    let (lo, hi) = window;
    if lift.1 == 0 {
        return Err(Error::Config(format!("open family {lift:?} does not advance in x")));
    }
    let crit = crate::classical::critical_candidates(symbol);
    if let Some(c) = crit.iter().find(|c| c.value >= lo && c.value <= hi) {
        return Err(Error::WindowCrossesCritical {
            lo,
            hi,
            critical: c.value,
        });
    }
    let crit_pos: Vec<(f64, f64)> = crit.iter().map(CriticalPoint::pos).collect();
    let n = n.max(33);
    let energies: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let first = crate::classical::trace_level_set(symbol, lo)?
        .into_iter()
        .find(|t| t.lift == lift)
        .ok_or_else(|| Error::Config(format!("no open component with lift {lift:?} at E = {lo}")))?;
    let mut seed = first.samples[0];
    let mut actions = Vec::with_capacity(n);
    let mut periods = Vec::with_capacity(n);
    for &e in &energies {
        let (s, t, next) = open_action_from_seed(symbol, lift, e, seed, &crit_pos)?;
        actions.push(s);
        periods.push(t);
        seed = next;
    }
    // keep the table on one branch of the 4π²-ambiguity
    for i in 1..n {
        let k = ((actions[i] - actions[i - 1]) / (TAU * TAU)).round();
        actions[i] -= k * TAU * TAU;
    }
    let sigma = lift.1.signum() as f64;
    let slopes: Vec<f64> = periods.iter().map(|t| sigma * t).collect();
    Ok(OpenAction {
        lift,
        interp: MonotoneCubic::with_slopes(energies.clone(), actions.clone(), slopes),
        period_interp: MonotoneCubic::new(energies.clone(), periods.clone()),
        energies,
        actions,
        periods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_cubic_reproduces_lines() {
        let xs: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let m = MonotoneCubic::new(xs, ys);
        assert!((m.eval(2.5) - 6.0).abs() < 1e-14);
        assert!((m.derivative(1.3) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn monotone_cubic_stays_monotone() {
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        let ys = vec![0.0, 0.1, 5.0, 5.1];
        let m = MonotoneCubic::new(xs, ys);
        let mut prev = m.eval(0.0);
        for i in 1..=300 {
            let v = m.eval(i as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn cycle_sums() {
        let w = |b, j, m, l| EdgeWeight { b, j, m, from: 0, from_label: 1, to: 0, to_label: 3, lift: l };
        let ws = [w(1.0, 2.0, 1, (0, 1)), w(0.5, -1.0, -1, (1, 0))];
        let c = cycle_from_edges(&ws, &[0, 1]);
        assert_eq!(c, CycleData { a: 1.5, i: 1.0, m: 0, homology: (1, 1) });
    }
}
