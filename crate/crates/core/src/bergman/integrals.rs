//! `I(i,j,k) = ∫₀^∞ e^{-α(U+mU²)+2mU(j-k)} U^i dU`.
//!
//! With `c = α - 2m(j-k)` and `a = αm` the integrand is `U^i e^{-cU-aU²}`.
//! Integrating `d/dU[U^i e^{-cU-aU²}]` gives `2a·J(i+1) = i·J(i-1) - c·J(i) + [i=0]`;
//! the base value is `J(0) = ½√(π/a)·erfcx(c/(2√a))`.

use std::f64::consts::PI;

use super::erfcx::ln_erfcx;
use super::quadrature::{integrate, integrate_tail, QuadResult};
use crate::coords::Params;
use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weight {
    alpha: f64,
}

impl Weight {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha must be finite and > 0, got {alpha}")));
        }
        Ok(Weight { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// A positive quantity carried as its logarithm, with a relative error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    pub ln_value: f64,
    pub rel_err: f64,
}

impl LogValue {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// Linear and quadratic coefficients `(c, a)` of the exponent for `I(·, j, k)`.
pub fn exponent_coeffs(j: u32, k: u32, prm: Params, w: Weight) -> (f64, f64) {
    let m = prm.m();
    (w.alpha() - 2.0 * m * (j as f64 - k as f64), w.alpha() * m)
}

fn rel_err_at(i: usize) -> f64 {
    (16.0 + 4.0 * i as f64) * EPS
}

/// `ln J(0..=imax)` for the integrand `U^i e^{-cU-aU²}` (`a > 0`, or `a = 0` with `c > 0`).
pub fn ln_integral_seq(c: f64, a: f64, imax: usize) -> Result<Vec<LogValue>> {
    if !(a >= 0.0) || !c.is_finite() || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid exponent coefficients c={c}, a={a}")));
    }
    let mut out = Vec::with_capacity(imax + 1);
    if a == 0.0 {
        if !(c > 0.0) {
            return Err(Error::Domain(format!("integral diverges for a=0, c={c}")));
        }
        let lc = c.ln();
        let mut lf = 0.0;
        for i in 0..=imax {
            if i > 0 {
                lf += (i as f64).ln();
            }
            out.push(LogValue { ln_value: lf - (i as f64 + 1.0) * lc, rel_err: rel_err_at(i) });
        }
        return Ok(out);
    }
    let sa = a.sqrt();
    let ln_j0 = (0.5 * (PI / a).sqrt()).ln() + ln_erfcx(c / (2.0 * sa));
    let ratios = ratio_seq(c, a, ln_j0, imax)?;
    let mut acc = ln_j0;
    out.push(LogValue { ln_value: acc, rel_err: rel_err_at(0) });
    for (n, r) in ratios.iter().enumerate() {
        acc += r.ln();
        out.push(LogValue { ln_value: acc, rel_err: rel_err_at(n + 1) });
    }
    Ok(out)
}

/// `ρ_i = J(i)/J(i-1)` for `i = 1..=imax`.
fn ratio_seq(c: f64, a: f64, ln_j0: f64, imax: usize) -> Result<Vec<f64>> {
    if imax == 0 {
        return Ok(Vec::new());
    }
    if c <= 0.0 {
        // Forward: no cancellation since both terms are nonnegative.
        let mut rho = Vec::with_capacity(imax);
        let mut r = ((-ln_j0).exp() - c) / (2.0 * a);
        rho.push(r);
        for i in 1..imax {
            r = (i as f64 / r - c) / (2.0 * a);
            rho.push(r);
        }
        return Ok(rho);
    }
    // Backward from the asymptotic root of 2aρ² + cρ - N = 0; J is the minimal solution.
    let backward = |n: usize| -> Vec<f64> {
        let mut r = (-c + (c * c + 8.0 * a * n as f64).sqrt()) / (4.0 * a);
        let mut out = vec![0.0; imax];
        for i in (1..n).rev() {
            r = i as f64 / (c + 2.0 * a * r);
            if i <= imax {
                out[i - 1] = r;
            }
        }
        out
    };
    let mut n = 2 * imax + 64;
    let mut prev = backward(n);
    for _ in 0..30 {
        n *= 2;
        let next = backward(n);
        let diff = prev.iter().zip(&next).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max);
        if diff <= 4.0 * EPS {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Convergence { iterations: n, residual: 0.0 })
}

/// `ln I(i, j, k)` by the closed-form path.
pub fn ln_integral(i: u32, j: u32, k: u32, prm: Params, w: Weight) -> Result<LogValue> {
    let (c, a) = exponent_coeffs(j, k, prm, w);
    Ok(ln_integral_seq(c, a, i as usize)?[i as usize])
}

fn to_quad(l: LogValue) -> Result<QuadResult> {
    let value = l.ln_value.exp();
    if !value.is_finite() {
        return Err(Error::Range(format!("I-integral overflows f64 (ln value {})", l.ln_value)));
    }
    Ok(QuadResult { value, abs_err: value * l.rel_err })
}

/// `I(i, j, k)`; for `m = 0` this is `i!/α^{i+1}`.
pub fn integral_i(i: u32, j: u32, k: u32, prm: Params, w: Weight) -> Result<QuadResult> {
    to_quad(ln_integral(i, j, k, prm, w)?)
}

/// Adaptive quadrature of `I(i, j, k)`, split at the peak of the integrand.
pub fn integral_i_quad(i: u32, j: u32, k: u32, prm: Params, w: Weight, rel_tol: f64) -> Result<QuadResult> {
    let (c, a) = exponent_coeffs(j, k, prm, w);
    if a == 0.0 && c <= 0.0 {
        return Err(Error::Domain(format!("integral diverges for m=0, c={c}")));
    }
    let fi = i as f64;
    let peak = if i == 0 {
        if a > 0.0 {
            (-c / (2.0 * a)).max(0.0)
        } else {
            0.0
        }
    } else if a > 0.0 {
        (-c + (c * c + 8.0 * a * fi).sqrt()) / (4.0 * a)
    } else {
        fi / c
    };
    let log_f = |u: f64| {
        let lu = if i == 0 { 0.0 } else { fi * u.ln() };
        lu - c * u - a * u * u
    };
    let l = if peak > 0.0 || i == 0 { log_f(peak) } else { 0.0 };
    let f = |u: f64| if u <= 0.0 && i > 0 { 0.0 } else { (log_f(u) - l).exp() };
    let curv = 2.0 * a + if i > 0 { fi / (peak * peak) } else { 0.0 };
    let slope = if peak == 0.0 { c.max(0.0) } else { 0.0 };
    let s = 1.0 / (curv.sqrt() + slope);
    let limit = 4000;
    let mut total = QuadResult { value: 0.0, abs_err: 0.0 };
    if peak > 0.0 {
        let head = integrate(f, &[0.0, 0.5 * peak, peak], 0.0, 0.5 * rel_tol, limit)?;
        total.value += head.value;
        total.abs_err += head.abs_err;
    }
    let tail = integrate_tail(f, peak, s, 0.0, 0.5 * rel_tol, limit)?;
    total.value += tail.value;
    total.abs_err += tail.abs_err;
    let scale = l.exp();
    if !scale.is_finite() {
        return Err(Error::Range(format!("I-integral overflows f64 (ln scale {l})")));
    }
    Ok(QuadResult { value: total.value * scale, abs_err: total.abs_err * scale })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPath {
    pub closed: QuadResult,
    pub quadrature: QuadResult,
    /// `|closed - quadrature|`.
    pub diff: f64,
    pub agree: bool,
}

pub fn integral_two_path(i: u32, j: u32, k: u32, prm: Params, w: Weight) -> Result<TwoPath> {
    let closed = integral_i(i, j, k, prm, w)?;
    let quadrature = integral_i_quad(i, j, k, prm, w, 1e-12)?;
    let diff = (closed.value - quadrature.value).abs();
    Ok(TwoPath { closed, quadrature, diff, agree: diff <= closed.abs_err + quadrature.abs_err })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecurrenceCheck {
    pub direct: QuadResult,
    pub from_recurrence: QuadResult,
    pub holds: bool,
}

/// The eliminations `I(1,0,0) = I(1,1,1) = -I(0,0,0)/(2m) + 1/(2αm)` and
/// `I(2,1,1) = I(0,0,0)(2m+α)/(4m²α) - 1/(4m²α)`, checked on quadrature values.
pub fn recurrence_checks(prm: Params, w: Weight) -> Result<[RecurrenceCheck; 2]> {
    let m = prm.m();
    if m <= 0.0 {
        return Err(Error::Domain("the recurrences divide by m; need m > 0".into()));
    }
    let al = w.alpha();
    let y = integral_i_quad(0, 0, 0, prm, w, 1e-12)?;
    let i1 = integral_i_quad(1, 1, 1, prm, w, 1e-12)?;
    let i2 = integral_i_quad(2, 1, 1, prm, w, 1e-12)?;
    let r1v = -y.value / (2.0 * m) + 1.0 / (2.0 * al * m);
    let r1e = y.abs_err / (2.0 * m) + 4.0 * EPS * (y.value / (2.0 * m) + 1.0 / (2.0 * al * m));
    let k2 = 4.0 * m * m * al;
    let r2v = y.value * (2.0 * m + al) / k2 - 1.0 / k2;
    let r2e = y.abs_err * (2.0 * m + al) / k2 + 4.0 * EPS * (y.value * (2.0 * m + al) / k2 + 1.0 / k2);
    let mk = |direct: QuadResult, v: f64, e: f64| RecurrenceCheck {
        direct,
        from_recurrence: QuadResult { value: v, abs_err: e },
        holds: (direct.value - v).abs() <= direct.abs_err + e,
    };
    Ok([mk(i1, r1v, r1e), mk(i2, r2v, r2e)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prm(m: f64) -> Params {
        Params::new(m).unwrap()
    }

    fn w(a: f64) -> Weight {
        Weight::new(a).unwrap()
    }

    #[test]
    fn flat_gamma_values() {
        let r = integral_i(2, 0, 0, prm(0.0), w(1.0)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
        let r = integral_i(4, 3, 1, prm(0.0), w(2.0)).unwrap();
        assert!((r.value - 24.0 / 32.0).abs() < 1e-14);
        assert!(Weight::new(0.0).is_err());
    }

    #[test]
    fn reference_value() {
        let r = integral_i(0, 0, 0, prm(0.1), w(20.0)).unwrap();
        assert!((r.value - 0.049514298235865960671).abs() < 1e-15);
        let q = integral_i_quad(0, 0, 0, prm(0.1), w(20.0), 1e-12).unwrap();
        assert!((q.value - 0.049514298235865960671).abs() <= q.abs_err.max(1e-15));
    }

    #[test]
    fn recurrences_hold() {
        let [a, b] = recurrence_checks(prm(0.1), w(20.0)).unwrap();
        assert!(a.holds && b.holds, "{a:?} {b:?}");
        assert!(recurrence_checks(prm(0.0), w(1.0)).is_err());
    }

    #[test]
    fn large_negative_linear_coefficient() {
        // c = 1 - 2·1·40 = -79: J0 ~ e^{c²/4a}, far outside a plain product of exp and erfc.
        let l = ln_integral(3, 40, 0, prm(1.0), w(1.0)).unwrap();
        assert!(l.ln_value > 1000.0 / 1.0e3 && l.ln_value.is_finite());
        assert!(integral_i(3, 400, 0, prm(1.0), w(1.0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn two_paths_agree(i in 0u32..=4, j in 0u32..=3, k in 0u32..=3, mi in 0usize..3, ai in 0usize..3) {
            let m = [0.01, 0.1, 1.0][mi];
            let al = [1.0, 10.0, 100.0][ai];
            let t = integral_two_path(i, j, k, prm(m), w(al)).unwrap();
            prop_assert!(t.agree, "{:?}", t);
        }

        #[test]
        fn recurrence_identity(i in 1usize..8, c in -20.0..20.0f64, a in 0.01..50.0f64) {
            let s = ln_integral_seq(c, a, i + 1).unwrap();
            let v = |n: usize| s[n].ln_value.exp();
            let lhs = 2.0 * a * v(i + 1);
            let rhs = i as f64 * v(i - 1) - c * v(i);
            let scale = (i as f64 * v(i - 1)).abs() + (c * v(i)).abs();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }
    }
}
