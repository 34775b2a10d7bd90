//! Arc-length continuation of the Hamiltonian flow on a level set.
//!
//! The state carries the lifted position `(p, x)` together with the running
//! flow time `t`, the running action `b = ∫ p dx` and the arc length `s`.
//! Each RK4 step is followed by a Newton projection back onto `H = E`, so
//! the position never drifts off the level set. The step shrinks linearly
//! with the distance to the nearest critical point, which keeps the
//! logarithmically divergent time integral accurate near saddles.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::symbol::TrigSymbol;

pub const DEFAULT_STEP: f64 = 0.01;
pub const DEFAULT_MAX_LENGTH: f64 = 400.0;
const NEAR_CRIT_FACTOR: f64 = 0.05;
const MIN_STEP: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub p: f64,
    pub x: f64,
    pub t: f64,
    pub b: f64,
    pub s: f64,
}

impl FlowState {
    pub fn at(p: f64, x: f64) -> Self {
        FlowState { p, x, t: 0.0, b: 0.0, s: 0.0 }
    }
}

/// Shortest lattice-reduced displacement `a − b` on the torus.
pub fn torus_delta(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let red = |d: f64| d - 2.0 * PI * (d / (2.0 * PI)).round();
    (red(a.0 - b.0), red(a.1 - b.1))
}

pub struct Flow<'a> {
    symbol: &'a TrigSymbol,
    energy: f64,
    crit: Vec<(f64, f64)>,
    pub base_step: f64,
    pub max_length: f64,
}

impl<'a> Flow<'a> {
    pub fn new(symbol: &'a TrigSymbol, energy: f64, critical: &[(f64, f64)]) -> Self {
        Flow {
            symbol,
            energy,
            crit: critical.to_vec(),
            base_step: DEFAULT_STEP,
            max_length: DEFAULT_MAX_LENGTH,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.base_step = step;
        self
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn symbol(&self) -> &TrigSymbol {
        self.symbol
    }

    /// Unit tangent `(dp/ds, dx/ds)` of the flow `ẋ = H_p, ṗ = −H_x`.
    pub fn direction(&self, p: f64, x: f64) -> Option<(f64, f64)> {
        let (hp, hx) = self.symbol.gradient(p, x);
        let g = hp.hypot(hx);
        (g > 0.0).then(|| (-hx / g, hp / g))
    }

    fn rates(&self, p: f64, x: f64) -> Option<[f64; 4]> {
        let (hp, hx) = self.symbol.gradient(p, x);
        let g = hp.hypot(hx);
        if g == 0.0 || !g.is_finite() {
            return None;
        }
        let dx = hp / g;
        Some([-hx / g, dx, 1.0 / g, p * dx])
    }

    pub fn project(&self, mut p: f64, mut x: f64) -> (f64, f64) {
        let tol = 1e-15 * (1.0 + self.energy.abs() + self.symbol.abs_sum());
        for _ in 0..8 {
            let r = self.symbol.value(p, x) - self.energy;
            if r.abs() <= tol {
                break;
            }
            let (hp, hx) = self.symbol.gradient(p, x);
            let g2 = hp * hp + hx * hx;
            if g2 == 0.0 {
                break;
            }
            p -= r * hp / g2;
            x -= r * hx / g2;
        }
        (p, x)
    }

    pub fn crit_distance(&self, p: f64, x: f64) -> f64 {
        self.crit
            .iter()
            .map(|&c| {
                let (dp, dx) = torus_delta((p, x), c);
                dp.hypot(dx)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn step_size(&self, st: &FlowState) -> f64 {
        (NEAR_CRIT_FACTOR * self.crit_distance(st.p, st.x))
            .min(self.base_step)
            .max(MIN_STEP)
    }

    /// One RK4 step of length `ds` followed by projection.
    pub fn advance(&self, st: &FlowState, ds: f64) -> Result<FlowState> {
        let fail = || Error::TracingDivergence(format!("flow stalls at a critical point near ({:.6}, {:.6})", st.p, st.x));
        let k1 = self.rates(st.p, st.x).ok_or_else(fail)?;
        let k2 = self
            .rates(st.p + 0.5 * ds * k1[0], st.x + 0.5 * ds * k1[1])
            .ok_or_else(fail)?;
        let k3 = self
            .rates(st.p + 0.5 * ds * k2[0], st.x + 0.5 * ds * k2[1])
            .ok_or_else(fail)?;
        let k4 = self.rates(st.p + ds * k3[0], st.x + ds * k3[1]).ok_or_else(fail)?;
        let inc = |i: usize| ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        let (p, x) = self.project(st.p + inc(0), st.x + inc(1));
        Ok(FlowState {
            p,
            x,
            t: st.t + inc(2),
            b: st.b + inc(3),
            s: st.s + ds,
        })
    }

    /// Bisect on the fraction of a step at which `f` changes sign, given
    /// that it does between `st` and `advance(st, ds)`.
    pub fn locate(&self, st: &FlowState, ds: f64, f: impl Fn(&FlowState) -> f64) -> Result<FlowState> {
        let f0 = f(st);
        let (mut lo, mut hi) = (0.0, ds);
        let mut best = self.advance(st, ds)?;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let sm = self.advance(st, mid)?;
            if (f(&sm) > 0.0) == (f0 > 0.0) {
                lo = mid;
            } else {
                hi = mid;
                best = sm;
            }
            if hi - lo < 1e-16 * (1.0 + st.s) {
                break;
            }
        }
        Ok(best)
    }

    /// Follow the flow from `start` until `stop` returns true. Returns every
    /// accepted state (including `start`) and the step used after each.
    pub fn trace_until(
        &self,
        start: FlowState,
        mut stop: impl FnMut(&FlowState) -> bool,
    ) -> Result<(Vec<FlowState>, Vec<f64>)> {
        let mut states = vec![start];
        let mut steps = Vec::new();
        let mut cur = start;
        loop {
            if cur.s - start.s > self.max_length {
                return Err(Error::TracingDivergence(format!(
                    "no termination within path length {}",
                    self.max_length
                )));
            }
            let ds = self.step_size(&cur);
            let next = self.advance(&cur, ds)?;
            steps.push(ds);
            states.push(next);
            cur = next;
            if stop(&cur) {
                return Ok((states, steps));
            }
        }
    }

    /// Trace the component through `seed` once around. The end state sits
    /// exactly on the hyperplane through the seed normal to the initial
    /// tangent, displaced by `2π·lift`.
    pub fn trace_loop(&self, seed: (f64, f64)) -> Result<ClosedLoop> {
        let (p0, x0) = self.project(seed.0, seed.1);
        let tau = self
            .direction(p0, x0)
            .ok_or_else(|| Error::TracingDivergence("seed is a critical point".into()))?;
        let start = FlowState::at(p0, x0);
        let offset = |st: &FlowState, d: (f64, f64)| -> f64 {
            tau.0 * (st.p - p0 - 2.0 * PI * d.0) + tau.1 * (st.x - x0 - 2.0 * PI * d.1)
        };
        let mut states = vec![start];
        let mut cur = start;
        let mut n = 0usize;
        loop {
            if cur.s > self.max_length {
                return Err(Error::TracingDivergence(format!(
                    "component through ({p0:.6}, {x0:.6}) did not close within length {}",
                    self.max_length
                )));
            }
            let ds = self.step_size(&cur);
            let next = self.advance(&cur, ds)?;
            n += 1;
            let d = (
                ((next.p - p0) / (2.0 * PI)).round(),
                ((next.x - x0) / (2.0 * PI)).round(),
            );
            let rp = next.p - p0 - 2.0 * PI * d.0;
            let rx = next.x - x0 - 2.0 * PI * d.1;
            if n >= 3 && rp.hypot(rx) < 4.0 * ds && offset(&cur, d) < 0.0 && offset(&next, d) >= 0.0 {
                let end = self.locate(&cur, ds, |st| offset(st, d))?;
                states.push(end);
                return Ok(ClosedLoop {
                    lift: (d.0 as i64, d.1 as i64),
                    period: end.t,
                    action: end.b,
                    length: end.s,
                    states,
                });
            }
            states.push(next);
            cur = next;
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub states: Vec<FlowState>,
    /// Net displacement in units of `2π`, `(p, x)` order.
    pub lift: (i64, i64),
    pub period: f64,
    /// `∫ p dx` along the lifted path.
    pub action: f64,
    pub length: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_open_orbit_of_cos_p() {
        let s = TrigSymbol::from_cosines(&[((1, 0), 2.0)]).unwrap();
        let p0: f64 = 1.0;
        let e = 2.0 * p0.cos();
        let flow = Flow::new(&s, e, &[]);
        let lp = flow.trace_loop((p0, 0.3)).unwrap();
        // ẋ = −2 sin p < 0
        assert_eq!(lp.lift, (0, -1));
        assert!((lp.period - PI / p0.sin()).abs() < 1e-10);
        assert!((lp.action + 2.0 * PI * p0).abs() < 1e-10);
    }

    #[test]
    fn harmonic_orbit_period() {
        // near the minimum of Harper the period tends to 2π/(2√α)
        let s = TrigSymbol::harper(0.5);
        let emin = -3.0;
        let flow = Flow::new(&s, emin + 1e-3, &[(PI, PI)]);
        let lp = flow.trace_loop((PI + 0.02, PI)).unwrap();
        assert_eq!(lp.lift, (0, 0));
        assert!((lp.period - 2.0 * PI / 2.0f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn torus_delta_is_minimal() {
        let (a, b) = torus_delta((0.1, 6.2), (6.2, 0.1));
        assert!((a - (2.0 * PI - 6.1)).abs() < 1e-12);
        assert!((b + (2.0 * PI - 6.1)).abs() < 1e-12);
    }
}
