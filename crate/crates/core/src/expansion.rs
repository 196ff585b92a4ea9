//! Asymptotic expansion of `ε` for `αg_m`: Ricci-flat coefficient formulas,
//! a Watson-lemma series at the origin, a fit from samples and the
//! pullback-metric correction.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::bergman::kernel::{epsilon_at, epsilon_at_z};
use crate::bergman::Weight;
use crate::coords::{ComplexPoint, Params, RadialPoint, SigmaPoint};
use crate::error::{Error, Result};
use crate::geometry::{closed_form_invariants, contracted_invariants, norm_r2_at, ClosedFormInvariants};

/// States how `ε` is normalized in every fit and comparison.
pub const NORMALIZATION_NOTE: &str =
    "fits use pi^2*epsilon, so the flat metric gives exactly alpha^2 (a0 = 1); the unnormalized flat value is alpha^2/pi^2";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionCoeffs {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

fn coeffs_from(inv: ClosedFormInvariants) -> ExpansionCoeffs {
    ExpansionCoeffs { a0: 1.0, a1: 0.0, a2: inv.norm_r2 / 24.0, a3: inv.lap_r2 / 48.0 }
}

/// `a2 = |R|²/24`, `a3 = Δ|R|²/48` from the printed closed forms
/// (`Δ|R|² = 3072m³(7m(U+V)-1)/D¹¹`).
pub fn coeffs_ricci_flat(p: SigmaPoint, prm: Params) -> ExpansionCoeffs {
    coeffs_from(closed_form_invariants(p, prm))
}

/// The same reduction with the invariants obtained by exact contraction
/// (`|R|² = 96m²/D⁶`, `Δ|R|² = 2304m³(5m(U+V)-1)/D⁹`).
pub fn coeffs_ricci_flat_contracted(p: SigmaPoint, prm: Params) -> ExpansionCoeffs {
    coeffs_from(contracted_invariants(p, prm))
}

pub const WATSON_MAX_ORDER: usize = 6;

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Exact `σₙ` with `π²ε(0) ~ α² Σₙ σₙ (m/α)ⁿ`.
///
/// With `s = m/α`, `I₀ ~ P(s)/α` where `P(s) = Σ (-1)ᵏ(2k)!/k! sᵏ`, and
/// `I₁ = (1 - αI₀)/(2αm) = Q(s)/α²` with `Q = (1 - P)/(2s)`; then
/// `π²ε(0) = α²/(P² + 4sPQ)`.
pub fn watson_series_exact(order: usize) -> Result<Vec<BigRational>> {
    if order > WATSON_MAX_ORDER {
        return Err(Error::InvalidArgument(format!("order must be <= {WATSON_MAX_ORDER}, got {order}")));
    }
    let n = order + 1;
    let p: Vec<BigRational> = (0..=n as u64)
        .map(|k| {
            let v = factorial(2 * k) / factorial(k);
            BigRational::from_integer(if k % 2 == 0 { v } else { -v })
        })
        .collect();
    let q: Vec<BigRational> = (0..n).map(|k| -p[k + 1].clone() / BigRational::from_integer(2.into())).collect();
    let mul = |a: &[BigRational], b: &[BigRational]| -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); n];
        for (i, x) in a.iter().enumerate().take(n) {
            for (j, y) in b.iter().enumerate().take(n - i) {
                out[i + j] += x * y;
            }
        }
        out
    };
    let p2 = mul(&p, &p);
    let pq = mul(&p, &q);
    let mut den = p2;
    for k in 1..n {
        den[k] += BigRational::from_integer(4.into()) * &pq[k - 1];
    }
    let mut inv = vec![BigRational::zero(); n];
    inv[0] = BigRational::one() / &den[0];
    for k in 1..n {
        let mut acc = BigRational::zero();
        for i in 1..=k {
            acc += &den[i] * &inv[k - i];
        }
        inv[k] = -acc / &den[0];
    }
    inv.truncate(order + 1);
    Ok(inv)
}

/// Coefficients of `α², α¹, α⁰, α⁻¹, …` in the expansion of `π²ε(0)`.
pub fn watson_epsilon_origin(prm: Params, order: usize) -> Result<Vec<f64>> {
    let m = prm.m();
    if !(m > 0.0) {
        return Err(Error::Domain("the origin series is expanded in m/α; need m > 0".into()));
    }
    Ok(watson_series_exact(order)?
        .iter()
        .enumerate()
        .map(|(k, c)| c.to_f64().unwrap_or(f64::NAN) * m.powi(k as i32))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub c2: f64,
    pub c3: f64,
    pub residual_norm: f64,
    pub condition: f64,
    pub alphas: Vec<f64>,
    /// Largest propagated error of `π²ε` over the samples.
    pub max_sample_err: f64,
    pub normalization: &'static str,
}

const MAX_CONDITION: f64 = 1e8;

/// Fits `π²ε(p; α) - α² ≈ c2 + c3/α`.
///
/// Consecutive pairs `(a, b)` of the ladder first eliminate the `α⁻²` term:
/// `(b²y_b - a²y_a)/(b² - a²) = c2 + c3/(a + b) + O(α⁻³)`. The pair values are
/// then fitted by least squares with weights `(a + b)²`.
pub fn asymptotic_fit(p: SigmaPoint, prm: Params, alphas: &[f64], tol: f64) -> Result<FitResult> {
    if alphas.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 alphas, got {}", alphas.len())));
    }
    if alphas.windows(2).any(|w| !(w[0] < w[1])) || !(alphas[0] > 0.0) || !alphas.iter().all(|a| a.is_finite()) {
        return Err(Error::InvalidArgument("alphas must be finite, positive and strictly increasing".into()));
    }
    let samples: Vec<(f64, f64)> = alphas
        .par_iter()
        .map(|&al| {
            let s = epsilon_at(p, prm, Weight::new(al)?, tol)?;
            Ok((PI * PI * s.value - al * al, PI * PI * s.abs_err))
        })
        .collect::<Result<_>>()?;
    let max_sample_err = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let mut rows = Vec::with_capacity(alphas.len() - 1);
    for i in 0..alphas.len() - 1 {
        let (a, b) = (alphas[i], alphas[i + 1]);
        let (ya, yb) = (samples[i].0, samples[i + 1].0);
        let z = (b * b * yb - a * a * ya) / (b * b - a * a);
        rows.push((1.0 / (a + b), z, (a + b) * (a + b)));
    }
    let (mut s00, mut s01, mut s11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(t, z, wt) in &rows {
        s00 += wt;
        s01 += wt * t;
        s11 += wt * t * t;
        r0 += wt * z;
        r1 += wt * t * z;
    }
    let tr = s00 + s11;
    let disc = ((s00 - s11).powi(2) + 4.0 * s01 * s01).sqrt();
    let (lmax, lmin) = (0.5 * (tr + disc), 0.5 * (tr - disc));
    let condition = if lmin > 0.0 { (lmax / lmin).sqrt() } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Numerical(format!("ill-conditioned fit: condition number {condition:e} > {MAX_CONDITION:e}")));
    }
    let det = s00 * s11 - s01 * s01;
    let c2 = (r0 * s11 - r1 * s01) / det;
    let c3 = (s00 * r1 - s01 * r0) / det;
    let residual_norm = rows.iter().map(|&(t, z, _)| (z - c2 - c3 * t).powi(2)).sum::<f64>().sqrt();
    Ok(FitResult {
        c2,
        c3,
        residual_norm,
        condition,
        alphas: alphas.to_vec(),
        max_sample_err,
        normalization: NORMALIZATION_NOTE,
    })
}

/// Fitted, curvature and series values of the α⁰ and α⁻¹ coefficients at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct OriginComparison {
    pub m: f64,
    pub fit: FitResult,
    /// `|R|²(0)/24` from the numeric curvature tensor.
    pub c2_curvature: f64,
    pub c2_watson: f64,
    pub c3_watson: f64,
    /// `Δ|R|²(0)/48` with the printed closed form.
    pub a3_reduction: f64,
    /// `Δ|R|²(0)/48` with the exactly contracted invariant.
    pub a3_contracted: f64,
    pub finding: String,
}

pub fn origin_comparison(prm: Params, alphas: &[f64], tol: f64) -> Result<OriginComparison> {
    let m = prm.m();
    let fit = asymptotic_fit(SigmaPoint::ORIGIN, prm, alphas, tol)?;
    let c2_curvature = norm_r2_at(RadialPoint { x1: 0.0, x2: 0.0 }, prm)? / 24.0;
    let (c2_watson, c3_watson) = if m > 0.0 {
        let w = watson_epsilon_origin(prm, 3)?;
        (w[2], w[3])
    } else {
        (0.0, 0.0)
    };
    let a3_reduction = coeffs_ricci_flat(SigmaPoint::ORIGIN, prm).a3;
    let a3_contracted = coeffs_ricci_flat_contracted(SigmaPoint::ORIGIN, prm).a3;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let finding = if close(a3_reduction, c3_watson) {
        "the printed-Laplacian reduction agrees with the series coefficient".to_string()
    } else {
        format!(
            "the printed-Laplacian reduction gives a3(0) = {a3_reduction:.6e}, but the series gives {c3_watson:.6e} \
             and the fit gives {:.6e}; the exactly contracted Laplacian gives {a3_contracted:.6e}{}",
            fit.c3,
            if close(a3_contracted, c3_watson) { ", which agrees with the series" } else { "" }
        )
    };
    Ok(OriginComparison { m, fit, c2_curvature, c2_watson, c3_watson, a3_reduction, a3_contracted, finding })
}

/// `∂ᵢ∂̄ⱼ(½ log ε)` at `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PullbackCorrection {
    pub matrix: [[Complex64; 2]; 2],
    pub alpha: f64,
    /// `max |M - M*|`.
    pub hermitian_defect: f64,
    /// Set when the rounding error of the stencil is not small next to the entries.
    pub cancellation_warning: bool,
}

impl PullbackCorrection {
    /// Frobenius norm of `matrix/α`.
    pub fn normalized_norm(&self) -> f64 {
        self.matrix.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt() / self.alpha
    }
}

/// Central finite differences of `½ log ε` in the four real coordinates of `z`
/// with step `h`.
pub fn pullback_correction(z: ComplexPoint, prm: Params, w: Weight, h: f64) -> Result<PullbackCorrection> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("step h must be finite and > 0, got {h}")));
    }
    let tol = 1e-15;
    let base = [z.z1.re, z.z1.im, z.z2.re, z.z2.im];
    let f = |d: [f64; 4]| -> Result<(f64, f64)> {
        let x: Vec<f64> = base.iter().zip(d).map(|(b, e)| b + e).collect();
        let q = ComplexPoint::new(Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3]))?;
        let s = epsilon_at_z(q, prm, w, tol)?;
        Ok((0.5 * s.value.ln(), s.abs_err / s.value))
    };
    let unit = |i: usize, s: f64| {
        let mut d = [0.0; 4];
        d[i] = s;
        d
    };
    let mut stencil = vec![[0.0; 4]];
    for i in 0..4 {
        stencil.push(unit(i, h));
        stencil.push(unit(i, -h));
        for j in i + 1..4 {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut d = [0.0; 4];
                d[i] = si * h;
                d[j] = sj * h;
                stencil.push(d);
            }
        }
    }
    let vals: Vec<(f64, f64)> = stencil.par_iter().map(|&d| f(d)).collect::<Result<_>>()?;
    let lookup = |d: [f64; 4]| vals[stencil.iter().position(|s| *s == d).expect("stencil point")].0;
    let f0 = vals[0].0;
    let max_rel = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    let mut hess = [[0.0; 4]; 4];
    for i in 0..4 {
        hess[i][i] = (lookup(unit(i, h)) - 2.0 * f0 + lookup(unit(i, -h))) / (h * h);
        for j in i + 1..4 {
            let mut pp = [0.0; 4];
            let (mut pm, mut mp, mut mm) = ([0.0; 4], [0.0; 4], [0.0; 4]);
            pp[i] = h;
            pp[j] = h;
            pm[i] = h;
            pm[j] = -h;
            mp[i] = -h;
            mp[j] = h;
            mm[i] = -h;
            mm[j] = -h;
            let v = (lookup(pp) - lookup(pm) - lookup(mp) + lookup(mm)) / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    let mut matrix = [[Complex64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let (xa, ya, xb, yb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
            matrix[a][b] = 0.25 * Complex64::new(hess[xa][xb] + hess[ya][yb], hess[xa][yb] - hess[ya][xb]);
        }
    }
    let mut hermitian_defect: f64 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            hermitian_defect = hermitian_defect.max((matrix[a][b] - matrix[b][a].conj()).norm());
        }
    }
    let biggest = matrix.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    let rounding = 4.0 * (max_rel + f64::EPSILON * f0.abs().max(1.0)) / (h * h);
    Ok(PullbackCorrection {
        matrix,
        alpha: w.alpha(),
        hermitian_defect,
        cancellation_warning: rounding > 1e-3 * biggest,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct A3Verdict {
    pub identically_zero: bool,
    pub witness: Option<SigmaPoint>,
    /// Printed-Laplacian `a3` at the witness.
    pub witness_value: f64,
    /// `a3` with the exactly contracted Laplacian at the witness.
    pub witness_value_contracted: f64,
    /// `U + V` where the printed form vanishes, `1/(7m)`.
    pub zero_locus_sum: Option<f64>,
    /// `U + V` where the contracted form vanishes, `1/(5m)`.
    pub zero_locus_sum_contracted: Option<f64>,
}

/// `a3 ≡ 0` exactly when `m = 0`; otherwise the origin is a witness.
pub fn a3_vanishing_verdict(prm: Params) -> A3Verdict {
    let m = prm.m();
    if m == 0.0 {
        return A3Verdict {
            identically_zero: true,
            witness: None,
            witness_value: 0.0,
            witness_value_contracted: 0.0,
            zero_locus_sum: None,
            zero_locus_sum_contracted: None,
        };
    }
    A3Verdict {
        identically_zero: false,
        witness: Some(SigmaPoint::ORIGIN),
        witness_value: coeffs_ricci_flat(SigmaPoint::ORIGIN, prm).a3,
        witness_value_contracted: coeffs_ricci_flat_contracted(SigmaPoint::ORIGIN, prm).a3,
        zero_locus_sum: Some(1.0 / (7.0 * m)),
        zero_locus_sum_contracted: Some(1.0 / (5.0 * m)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prm(m: f64) -> Params {
        Params::new(m).unwrap()
    }

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn ricci_flat_coefficients() {
        let c = coeffs_ricci_flat(SigmaPoint::ORIGIN, prm(0.0));
        assert_eq!((c.a0, c.a1, c.a2, c.a3), (1.0, 0.0, 0.0, 0.0));
        let c = coeffs_ricci_flat(SigmaPoint::ORIGIN, prm(1.0));
        assert!((c.a2 - 4.0).abs() < 1e-14 && (c.a3 + 64.0).abs() < 1e-12);
        let c = coeffs_ricci_flat_contracted(SigmaPoint::ORIGIN, prm(1.0));
        assert!((c.a2 - 4.0).abs() < 1e-14 && (c.a3 + 48.0).abs() < 1e-12);
    }

    #[test]
    fn watson_series() {
        let s = watson_series_exact(4).unwrap();
        assert_eq!(s, vec![rat(1), rat(0), rat(4), rat(-48), rat(640)]);
        assert!(watson_series_exact(7).is_err());
        let w = watson_epsilon_origin(prm(0.1), 3).unwrap();
        assert!((w[2] - 0.04).abs() < 1e-15 && (w[3] + 0.048).abs() < 1e-15);
        assert!(watson_epsilon_origin(prm(0.0), 3).is_err());
    }

    #[test]
    fn fit_recovers_series() {
        let r = origin_comparison(prm(0.1), &[100.0, 200.0, 400.0, 800.0], 1e-14).unwrap();
        assert!((r.fit.c2 - 0.04).abs() < 0.01 * 0.04, "{r:?}");
        assert!((r.fit.c3 + 0.048).abs() < 0.02 * 0.048, "{r:?}");
        assert!((r.c2_curvature - 0.04).abs() < 1e-12);
        assert!((r.a3_reduction + 0.064).abs() < 1e-15);
        let flat = asymptotic_fit(SigmaPoint::new(0.5, 0.2).unwrap(), prm(0.0), &[1.0, 2.0, 4.0, 8.0], 1e-14).unwrap();
        assert!(flat.c2.abs() < 1e-8 && flat.c3.abs() < 1e-7, "{flat:?}");
        assert!(asymptotic_fit(SigmaPoint::ORIGIN, prm(0.1), &[1.0, 2.0, 3.0], 1e-12).is_err());
        assert!(asymptotic_fit(SigmaPoint::ORIGIN, prm(0.1), &[1.0, 3.0, 2.0, 4.0], 1e-12).is_err());
    }

    #[test]
    fn pullback_decays() {
        let z = ComplexPoint::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let norms: Vec<f64> = [10.0, 40.0, 160.0]
            .iter()
            .map(|&a| {
                let c = pullback_correction(z, prm(0.1), Weight::new(a).unwrap(), 0.05).unwrap();
                assert!(c.hermitian_defect < 1e-8);
                c.normalized_norm()
            })
            .collect();
        assert!(norms[0] > norms[1] && norms[1] > norms[2], "{norms:?}");
        let flat = pullback_correction(z, prm(0.0), Weight::new(3.0).unwrap(), 0.05).unwrap();
        assert!(flat.matrix.iter().flatten().all(|c| c.norm() < 1e-9), "{flat:?}");
    }

    #[test]
    fn verdicts() {
        assert!(a3_vanishing_verdict(prm(0.0)).identically_zero);
        let v = a3_vanishing_verdict(prm(1.0));
        assert!(!v.identically_zero && (v.witness_value + 64.0).abs() < 1e-12);
        let s = v.zero_locus_sum.unwrap();
        let at = coeffs_ricci_flat(SigmaPoint::new(s, 0.0).unwrap(), prm(1.0)).a3;
        assert!(at.abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn watson_leading_terms(m in 1e-3..5.0f64) {
            let w = watson_epsilon_origin(prm(m), 2).unwrap();
            prop_assert_eq!(w[0], 1.0);
            prop_assert_eq!(w[1], 0.0);
            prop_assert!((w[2] - 4.0 * m * m).abs() <= 1e-15 * 4.0 * m * m);
        }
    }
}
