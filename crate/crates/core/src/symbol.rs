//! Doubly periodic classical symbols given as finite trigonometric
//! polynomials `H(p, x) = Σ c_{mn} e^{i(mp + nx)}`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Default bound on `|m|` and `|n|`.
pub const DEFAULT_FREQUENCY_CAP: i32 = 16;

/// Relative tolerance of the reality check.
pub const REALITY_TOL: f64 = 1e-12;

/// Frequency pair `(m, n)` multiplying `(p, x)`.
pub type Freq = (i32, i32);

/// A phase-space point on the torus, reduced to `[0, 2π)²`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Point2 {
    pub p: f64,
    pub x: f64,
}

/// Reduce an angle to its representative in `[0, 2π)`.
pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid may round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl Point2 {
    pub fn new(p: f64, x: f64) -> Self {
        Point2 {
            p: reduce_angle(p),
            x: reduce_angle(x),
        }
    }
}

/// Second derivatives of a symbol at a point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Hessian {
    pub pp: f64,
    pub px: f64,
    pub xx: f64,
}

impl Hessian {
    pub fn det(&self) -> f64 {
        self.pp * self.xx - self.px * self.px
    }

    /// Quadratic form `vᵀ H'' v` for `v = (dp, dx)`.
    pub fn form(&self, dp: f64, dx: f64) -> f64 {
        self.pp * dp * dp + 2.0 * self.px * dp * dx + self.xx * dx * dx
    }
}

/// A real trigonometric polynomial on the torus.
///
/// Immutable after construction; the conjugate-symmetry invariant
/// `c_{-m,-n} = conj(c_{mn})` is checked by every constructor.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSymbol {
    coeffs: BTreeMap<Freq, Complex64>,
    // one representative per conjugate pair, with its multiplicity folded in
    half: Vec<(f64, f64, Complex64)>,
    constant: f64,
    abs_sum: f64,
}

impl TrigSymbol {
    /// Build from explicit coefficients, validating reality and the default
    /// frequency cap.
    pub fn from_coeffs(coeffs: BTreeMap<Freq, Complex64>) -> Result<Self> {
        Self::from_coeffs_with_cap(coeffs, DEFAULT_FREQUENCY_CAP)
    }

    pub fn from_coeffs_with_cap(coeffs: BTreeMap<Freq, Complex64>, cap: i32) -> Result<Self> {
        for &(m, n) in coeffs.keys() {
            if m.abs() > cap || n.abs() > cap {
                return Err(Error::FrequencyCap { m, n, cap });
            }
        }
        let coeffs: BTreeMap<Freq, Complex64> =
            coeffs.into_iter().filter(|(_, c)| c.norm() > 0.0).collect();
        let abs_sum: f64 = coeffs.values().map(|c| c.norm()).sum();
        let tol = REALITY_TOL * abs_sum.max(f64::MIN_POSITIVE);
        for (&(m, n), c) in &coeffs {
            let partner = coeffs.get(&(-m, -n)).copied().unwrap_or_default();
            let residual = (partner - c.conj()).norm();
            if residual > tol {
                return Err(Error::RealityViolation {
                    residual,
                    tolerance: tol,
                });
            }
        }
        let mut half = Vec::new();
        let mut constant = 0.0;
        for (&(m, n), &c) in &coeffs {
            if (m, n) == (0, 0) {
                constant = c.re;
            } else if m > 0 || (m == 0 && n > 0) {
                half.push((m as f64, n as f64, c * 2.0));
            }
        }
        Ok(TrigSymbol {
            coeffs,
            half,
            constant,
            abs_sum,
        })
    }

    /// Sum of `amp · cos(m p + n x)` terms.
    pub fn from_cosines(terms: &[(Freq, f64)]) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for &((m, n), a) in terms {
            add_cos(&mut coeffs, m, n, a);
        }
        Self::from_coeffs(coeffs)
    }

    /// The Harper symbol `2 cos p + 2α cos x`.
    pub fn harper(alpha: f64) -> Self {
        Self::from_cosines(&[((1, 0), 2.0), ((0, 1), 2.0 * alpha)]).expect("harper symbol is real")
    }

    pub fn constant(c: f64) -> Self {
        Self::from_cosines(&[((0, 0), c)]).expect("constant symbol is real")
    }

    pub fn zero() -> Self {
        Self::from_coeffs(BTreeMap::new()).expect("zero symbol is real")
    }

    pub fn coeffs(&self) -> &BTreeMap<Freq, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, m: i32, n: i32) -> Complex64 {
        self.coeffs.get(&(m, n)).copied().unwrap_or_default()
    }

    /// `Σ |c_{mn}|`, the scale used by all relative tolerances.
    pub fn abs_sum(&self) -> f64 {
        self.abs_sum
    }

    /// Largest `|m|` and `|n|` present.
    pub fn max_frequency(&self) -> (i32, i32) {
        self.coeffs
            .keys()
            .fold((0, 0), |(a, b), &(m, n)| (a.max(m.abs()), b.max(n.abs())))
    }

    pub fn is_constant(&self) -> bool {
        self.half.is_empty()
    }

    /// Evaluate with the full complex sum and verify the imaginary part.
    pub fn evaluate(&self, pt: Point2) -> Result<f64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&(m, n), &c) in &self.coeffs {
            let phase = m as f64 * pt.p + n as f64 * pt.x;
            acc += c * Complex64::from_polar(1.0, phase);
        }
        let tol = REALITY_TOL * self.abs_sum.max(f64::MIN_POSITIVE);
        if acc.im.abs() > tol {
            return Err(Error::RealityViolation {
                residual: acc.im.abs(),
                tolerance: tol,
            });
        }
        Ok(acc.re)
    }

    /// Real value at an unreduced point; the hot path used by the tracers.
    #[inline]
    pub fn value(&self, p: f64, x: f64) -> f64 {
        let mut v = self.constant;
        for &(m, n, c) in &self.half {
            let (s, co) = (m * p + n * x).sin_cos();
            v += c.re * co - c.im * s;
        }
        v
    }

    /// `(H_p, H_x)`.
    #[inline]
    pub fn gradient(&self, p: f64, x: f64) -> (f64, f64) {
        let (mut hp, mut hx) = (0.0, 0.0);
        for &(m, n, c) in &self.half {
            let (s, co) = (m * p + n * x).sin_cos();
            // d/dθ Re(c e^{iθ}) = -Re(c) sin θ - Im(c) cos θ
            let d = -c.re * s - c.im * co;
            hp += m * d;
            hx += n * d;
        }
        (hp, hx)
    }

    pub fn hessian(&self, p: f64, x: f64) -> Hessian {
        let (mut pp, mut px, mut xx) = (0.0, 0.0, 0.0);
        for &(m, n, c) in &self.half {
            let (s, co) = (m * p + n * x).sin_cos();
            let d2 = -c.re * co + c.im * s;
            pp += m * m * d2;
            px += m * n * d2;
            xx += n * n * d2;
        }
        Hessian { pp, px, xx }
    }

    pub fn gradient_at(&self, pt: Point2) -> Result<(f64, f64)> {
        self.evaluate(pt)?;
        Ok(self.gradient(pt.p, pt.x))
    }

    pub fn hessian_at(&self, pt: Point2) -> Result<Hessian> {
        self.evaluate(pt)?;
        Ok(self.hessian(pt.p, pt.x))
    }

    /// Minimum and maximum over a `n × n` sample grid (a cheap range bound).
    pub fn sampled_range(&self, n: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let v = self.value(TAU * i as f64 / n as f64, TAU * j as f64 / n as f64);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// Pull back by a unimodular integer matrix: the result `H'` satisfies
    /// `H'(z) = H(M z)` with `z = (p, x)`, so each frequency `k` becomes `Mᵀ k`.
    pub fn canonical_transform(&self, m: [[i64; 2]; 2]) -> Result<TrigSymbol> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det != 1 {
            return Err(Error::NotUnimodular(m));
        }
        let mut out = BTreeMap::new();
        for (&(a, b), &c) in &self.coeffs {
            let (a, b) = (a as i64, b as i64);
            let na = m[0][0] * a + m[1][0] * b;
            let nb = m[0][1] * a + m[1][1] * b;
            let key = (
                i32::try_from(na).map_err(|_| Error::FrequencyCap { m: i32::MAX, n: 0, cap: 0 })?,
                i32::try_from(nb).map_err(|_| Error::FrequencyCap { m: 0, n: i32::MAX, cap: 0 })?,
            );
            *out.entry(key).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let cap = out
            .keys()
            .fold(DEFAULT_FREQUENCY_CAP, |acc, &(a, b)| acc.max(a.abs()).max(b.abs()));
        TrigSymbol::from_coeffs_with_cap(out, cap)
    }

    /// Shift the position argument: returns `H(p, x + shift)`.
    pub fn shift_x(&self, shift: f64) -> TrigSymbol {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&(m, n), &c)| ((m, n), c * Complex64::from_polar(1.0, n as f64 * shift)))
            .collect();
        TrigSymbol::from_coeffs_with_cap(coeffs, i32::MAX).expect("shift preserves reality")
    }

    /// Add `amp · cos(m p + n x)`.
    pub fn plus_cos(&self, (m, n): Freq, amp: f64) -> Result<TrigSymbol> {
        let mut coeffs = self.coeffs.clone();
        add_cos(&mut coeffs, m, n, amp);
        TrigSymbol::from_coeffs_with_cap(coeffs, i32::MAX)
    }

    /// Canonical JSON form: every nonzero coefficient as `{m, n, re, im}`.
    pub fn to_json_value(&self) -> Value {
        let terms: Vec<Value> = self
            .coeffs
            .iter()
            .map(|(&(m, n), c)| json!({"m": m, "n": n, "re": c.re, "im": c.im}))
            .collect();
        json!({"schema_version": 1, "terms": terms})
    }
}

fn add_cos(coeffs: &mut BTreeMap<Freq, Complex64>, m: i32, n: i32, amp: f64) {
    if (m, n) == (0, 0) {
        *coeffs.entry((0, 0)).or_default() += amp;
    } else {
        *coeffs.entry((m, n)).or_default() += amp / 2.0;
        *coeffs.entry((-m, -n)).or_default() += amp / 2.0;
    }
}

fn add_sin(coeffs: &mut BTreeMap<Freq, Complex64>, m: i32, n: i32, amp: f64) {
    if (m, n) != (0, 0) {
        *coeffs.entry((m, n)).or_default() += Complex64::new(0.0, -amp / 2.0);
        *coeffs.entry((-m, -n)).or_default() += Complex64::new(0.0, amp / 2.0);
    }
}

fn structural(message: impl Into<String>) -> Error {
    Error::Parse {
        line: 0,
        column: 0,
        message: message.into(),
    }
}

fn get_f64(obj: &serde_json::Map<String, Value>, key: &str, path: &str) -> Result<f64> {
    obj.get(key)
        .ok_or_else(|| structural(format!("{path}: missing field `{key}`")))?
        .as_f64()
        .ok_or_else(|| structural(format!("{path}.{key}: expected a number")))
}

fn get_i32(obj: &serde_json::Map<String, Value>, key: &str, path: &str) -> Result<i32> {
    let v = obj
        .get(key)
        .ok_or_else(|| structural(format!("{path}: missing field `{key}`")))?;
    v.as_i64()
        .and_then(|i| i32::try_from(i).ok())
        .ok_or_else(|| structural(format!("{path}.{key}: expected an integer")))
}

fn get_pair(v: &Value, path: &str) -> Result<(i32, i32)> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| structural(format!("{path}: expected [m, n]")))?;
    let m = arr[0].as_i64().and_then(|i| i32::try_from(i).ok());
    let n = arr[1].as_i64().and_then(|i| i32::try_from(i).ok());
    match (m, n) {
        (Some(m), Some(n)) => Ok((m, n)),
        _ => Err(structural(format!("{path}: frequencies must be integers"))),
    }
}

/// Accumulate the `terms` array of a symbol document into a coefficient map.
pub(crate) fn terms_from_value(doc: &Value) -> Result<BTreeMap<Freq, Complex64>> {
    let terms = doc
        .get("terms")
        .ok_or_else(|| structural("missing field `terms`"))?
        .as_array()
        .ok_or_else(|| structural("`terms` must be an array"))?;
    let mut coeffs = BTreeMap::new();
    for (i, t) in terms.iter().enumerate() {
        let path = format!("terms[{i}]");
        let obj = t
            .as_object()
            .ok_or_else(|| structural(format!("{path}: expected an object")))?;
        if let Some(f) = obj.get("cos") {
            let (m, n) = get_pair(f, &format!("{path}.cos"))?;
            add_cos(&mut coeffs, m, n, get_f64(obj, "amp", &path)?);
        } else if let Some(f) = obj.get("sin") {
            let (m, n) = get_pair(f, &format!("{path}.sin"))?;
            add_sin(&mut coeffs, m, n, get_f64(obj, "amp", &path)?);
        } else if obj.contains_key("m") {
            let m = get_i32(obj, "m", &path)?;
            let n = get_i32(obj, "n", &path)?;
            let re = get_f64(obj, "re", &path)?;
            let im = obj.get("im").map_or(Some(0.0), Value::as_f64).ok_or_else(|| {
                structural(format!("{path}.im: expected a number"))
            })?;
            *coeffs.entry((m, n)).or_default() += Complex64::new(re, im);
        } else {
            return Err(structural(format!(
                "{path}: expected one of `cos`, `sin` or `m`/`n`/`re`/`im`"
            )));
        }
    }
    Ok(coeffs)
}

pub(crate) fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Parse the JSON symbol schema.
pub fn parse_symbol(text: &str) -> Result<TrigSymbol> {
    let doc = parse_value(text)?;
    TrigSymbol::from_coeffs(terms_from_value(&doc)?)
}

pub fn serialize_symbol(symbol: &TrigSymbol) -> String {
    serde_json::to_string_pretty(&symbol.to_json_value()).expect("json serialization")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn harper_values() {
        let h = TrigSymbol::harper(0.5);
        assert!((h.evaluate(Point2::new(0.0, 0.0)).unwrap() - 3.0).abs() < 1e-14);
        assert!((h.evaluate(Point2::new(0.0, PI)).unwrap() - 1.0).abs() < 1e-14);
        let z = TrigSymbol::zero();
        assert_eq!(z.evaluate(Point2::new(1.0, 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn harper_derivatives_at_saddle() {
        let h = TrigSymbol::harper(0.25);
        let (hp, hx) = h.gradient(0.0, PI);
        assert!(hp.abs() < 1e-15 && hx.abs() < 1e-15);
        let hs = h.hessian(0.0, PI);
        assert!((hs.pp + 2.0).abs() < 1e-14);
        assert!((hs.xx - 0.5).abs() < 1e-14);
        assert!(hs.px.abs() < 1e-14);
        assert!((hs.det() + 1.0).abs() < 1e-14);
        assert!((hs.det().abs().sqrt() - 1.0).abs() < 1e-14);
        // finite-difference cross-check
        let d = 1e-5;
        let fd_pp = (h.value(d, PI) - 2.0 * h.value(0.0, PI) + h.value(-d, PI)) / (d * d);
        let fd_xx = (h.value(0.0, PI + d) - 2.0 * h.value(0.0, PI) + h.value(0.0, PI - d)) / (d * d);
        assert!((fd_pp - hs.pp).abs() < 1e-5);
        assert!((fd_xx - hs.xx).abs() < 1e-5);
    }

    #[test]
    fn constant_hessian_vanishes() {
        let c = TrigSymbol::constant(1.5);
        assert_eq!(c.hessian(0.3, 0.7), Hessian { pp: 0.0, px: 0.0, xx: 0.0 });
    }

    #[test]
    fn transform_identity_and_rotation() {
        let h = TrigSymbol::harper(0.5);
        assert_eq!(h.canonical_transform([[1, 0], [0, 1]]).unwrap(), h);
        let r = h.canonical_transform([[0, -1], [1, 0]]).unwrap();
        // 2 cos x' + 2α cos p'
        assert!((r.coeff(0, 1).re - 1.0).abs() < 1e-15);
        assert!((r.coeff(0, -1).re - 1.0).abs() < 1e-15);
        assert!((r.coeff(1, 0).re - 0.5).abs() < 1e-15);
        assert!(r.coeff(0, 0).norm() == 0.0);
        assert!(matches!(
            h.canonical_transform([[2, 0], [0, 1]]),
            Err(Error::NotUnimodular(_))
        ));
    }

    #[test]
    fn parse_shorthand_and_explicit() {
        let h = parse_symbol(r#"{"terms":[{"cos":[1,0],"amp":2},{"cos":[0,1],"amp":1}]}"#).unwrap();
        assert_eq!(h, TrigSymbol::harper(0.5));
        let err = parse_symbol(r#"{"terms":[{"m":1,"n":0,"re":1,"im":0}]}"#).unwrap_err();
        assert!(matches!(err, Error::RealityViolation { .. }));
        let s = parse_symbol(r#"{"terms":[{"sin":[1,1],"amp":0.5}]}"#).unwrap();
        let v = s.evaluate(Point2::new(0.3, 0.4)).unwrap();
        assert!((v - 0.5 * (0.7f64).sin()).abs() < 1e-14);
    }

    #[test]
    fn parse_errors_carry_location() {
        match parse_symbol("{\"terms\": [\n  {\"cos\": [1,0], \"amp\": }\n]}") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_symbol(r#"{"terms":[{"cos":[1,0]}]}"#) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("terms[0]")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn frequency_cap_is_an_error() {
        assert!(matches!(
            TrigSymbol::from_cosines(&[((17, 0), 1.0)]),
            Err(Error::FrequencyCap { .. })
        ));
    }

    #[test]
    fn serialize_round_trip() {
        let text = r#"{"terms":[{"cos":[1,0],"amp":2},{"sin":[0,2],"amp":0.3},{"m":1,"n":1,"re":0.1,"im":0.2},{"m":-1,"n":-1,"re":0.1,"im":-0.2}]}"#;
        let h = parse_symbol(text).unwrap();
        let s = serialize_symbol(&h);
        assert_eq!(parse_symbol(&s).unwrap(), h);
        assert_eq!(serialize_symbol(&parse_symbol(&s).unwrap()), s);
    }

    #[test]
    fn reduction_representative() {
        let p = Point2::new(-1e-20, TAU);
        assert!(p.p >= 0.0 && p.p < TAU);
        assert_eq!(p.x, 0.0);
    }
}
