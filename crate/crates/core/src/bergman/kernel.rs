//! Monomial norms, the density function `ε` and the balanced-condition tests.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;

use super::integrals::{exponent_coeffs, integral_i, ln_integral_seq, LogValue, Weight};
use super::quadrature::QuadResult;
use crate::coords::{lift, ComplexPoint, Params, SigmaPoint};
use crate::error::{Error, Result};
use crate::exact::verify::{exact_h_quadratic, HQuadratic};
use crate::geometry::potential;

const EPS: f64 = f64::EPSILON;
const LN_PI2: f64 = 2.0 * 1.1447298858494002;
const WINDOW_START: usize = 16;
const WINDOW_MAX: usize = 1024;

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `‖z₁ʲz₂ᵏ‖²` for `j, k < size`, stored as logarithms.
#[derive(Clone, Debug)]
pub struct NormTable {
    prm: Params,
    weight: Weight,
    size: usize,
    ln: Vec<f64>,
    rel: Vec<f64>,
}

impl NormTable {
    pub fn build(prm: Params, w: Weight, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("norm table size must be >= 1".into()));
        }
        let m = prm.m();
        let n = size as i64;
        // One integral sequence per difference d = j - k, i = 0..=size.
        let seqs: Vec<Vec<LogValue>> = (-(n - 1)..n)
            .into_par_iter()
            .map(|d| {
                let (j, k) = if d >= 0 { (d as u32, 0) } else { (0, (-d) as u32) };
                let (c, a) = exponent_coeffs(j, k, prm, w);
                ln_integral_seq(c, a, size)
            })
            .collect::<Result<_>>()?;
        let seq = |d: i64| &seqs[(d + n - 1) as usize];
        let entries: Vec<(f64, f64)> = (0..size * size)
            .into_par_iter()
            .map(|idx| {
                let (j, k) = (idx / size, idx % size);
                let d = j as i64 - k as i64;
                let (a, b) = (seq(d), seq(-d));
                let mut ln = LN_PI2 + a[j].ln_value + b[k].ln_value;
                let mut rel = a[j].rel_err + b[k].rel_err + 4.0 * EPS;
                if m > 0.0 {
                    let ra = (a[j + 1].ln_value - a[j].ln_value).exp();
                    let rb = (b[k + 1].ln_value - b[k].ln_value).exp();
                    ln += (2.0 * m * (ra + rb)).ln_1p();
                    rel += a[j + 1].rel_err + b[k + 1].rel_err;
                }
                (ln, rel)
            })
            .collect();
        let (ln, rel) = entries.into_iter().unzip();
        Ok(NormTable { prm, weight: w, size, ln, rel })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn params(&self) -> Params {
        self.prm
    }

    pub fn weight(&self) -> Weight {
        self.weight
    }

    pub fn ln_norm(&self, j: usize, k: usize) -> f64 {
        self.ln[j * self.size + k]
    }

    pub fn rel_err(&self, j: usize, k: usize) -> f64 {
        self.rel[j * self.size + k]
    }

    pub fn norm(&self, j: usize, k: usize) -> Result<QuadResult> {
        let value = self.ln_norm(j, k).exp();
        if !value.is_finite() {
            return Err(Error::Range(format!("norm of z1^{j} z2^{k} overflows f64")));
        }
        Ok(QuadResult { value, abs_err: value * self.rel_err(j, k) })
    }
}

/// `π²[I(j,j,k)I(k,k,j) + 2m·I(j+1,j,k)I(k,k,j) + 2m·I(j,j,k)I(k+1,k,j)]`.
pub fn monomial_norm(j: u32, k: u32, prm: Params, w: Weight) -> Result<QuadResult> {
    let m = prm.m();
    if m == 0.0 {
        let ln = LN_PI2 + ln_factorial(j as usize) + ln_factorial(k as usize) - (j + k + 2) as f64 * w.alpha().ln();
        let value = ln.exp();
        return Ok(QuadResult { value, abs_err: value * (8.0 + (j + k) as f64) * EPS });
    }
    let a = integral_i(j, j, k, prm, w)?;
    let b = integral_i(k, k, j, prm, w)?;
    let a1 = integral_i(j + 1, j, k, prm, w)?;
    let b1 = integral_i(k + 1, k, j, prm, w)?;
    let s = a.value * b.value + 2.0 * m * (a1.value * b.value + a.value * b1.value);
    let e = a.abs_err * b.value
        + a.value * b.abs_err
        + 2.0 * m * (a1.abs_err * b.value + a1.value * b.abs_err + a.abs_err * b1.value + a.value * b1.abs_err)
        + 4.0 * EPS * s;
    Ok(QuadResult { value: PI * PI * s, abs_err: PI * PI * e })
}

/// One evaluation of `ε` at `(U, V)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonSample {
    pub point: SigmaPoint,
    pub alpha: f64,
    pub value: f64,
    /// Bound on the neglected tail of the kernel series.
    pub trunc_bound: f64,
    /// Truncation bound plus the propagated norm errors.
    pub abs_err: f64,
    /// The series was summed over `0 ≤ j, k < window`.
    pub window: usize,
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Geometric majorant `Σ_{n≥0} e^{t0} q^n` from the two leading ratios.
fn geometric_tail(t0: f64, t1: f64, t2: f64) -> f64 {
    if t0 == f64::NEG_INFINITY {
        return 0.0;
    }
    let q1 = if t1 == f64::NEG_INFINITY { 0.0 } else { (t1 - t0).exp() };
    let q2 = if t2 == f64::NEG_INFINITY { 0.0 } else { (t2 - t1).exp() };
    let q = q1.max(q2);
    if q >= 1.0 {
        f64::INFINITY
    } else {
        t0.exp() / (1.0 - q)
    }
}

/// `ε(U,V) = e^{-αΦ} Σ_{j,k} x₁ʲx₂ᵏ/‖z₁ʲz₂ᵏ‖²` with `xᵢ = |zᵢ|²`, summed in a square window that
/// doubles until the tail bound is at most `tol·ε` (`tol` is relative).
pub fn epsilon_at(p: SigmaPoint, prm: Params, w: Weight, tol: f64) -> Result<EpsilonSample> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!("tol must be finite and > 0, got {tol}")));
    }
    let m = prm.m();
    let al = w.alpha();
    let base = -al * potential(p, prm);
    if p.u == 0.0 && p.v == 0.0 {
        let table = NormTable::build(prm, w, 1)?;
        let value = (base - table.ln_norm(0, 0)).exp();
        return Ok(EpsilonSample {
            point: p,
            alpha: al,
            value,
            trunc_bound: 0.0,
            abs_err: value * table.rel_err(0, 0),
            window: 1,
        });
    }
    let shift = 2.0 * m * (p.u - p.v);
    let lx1 = if p.u > 0.0 { p.u.ln() + shift } else { f64::NEG_INFINITY };
    let lx2 = if p.v > 0.0 { p.v.ln() - shift } else { f64::NEG_INFINITY };
    let mut window = WINDOW_START;
    let mut last_bound = f64::INFINITY;
    while window <= WINDOW_MAX {
        let table = NormTable::build(prm, w, window + 3)?;
        let term = |j: usize, k: usize| {
            if (j > 0 && lx1 == f64::NEG_INFINITY) || (k > 0 && lx2 == f64::NEG_INFINITY) {
                return f64::NEG_INFINITY;
            }
            let a = if j > 0 { j as f64 * lx1 } else { 0.0 };
            let b = if k > 0 { k as f64 * lx2 } else { 0.0 };
            base + a + b - table.ln_norm(j, k)
        };
        let mut tmax = f64::NEG_INFINITY;
        for j in 0..window {
            for k in 0..window {
                tmax = tmax.max(term(j, k));
            }
        }
        let mut acc = Neumaier::default();
        let mut max_rel: f64 = 0.0;
        for j in 0..window {
            for k in 0..window {
                let t = term(j, k);
                if t > f64::NEG_INFINITY {
                    acc.add((t - tmax).exp());
                    max_rel = max_rel.max(table.rel_err(j, k));
                }
            }
        }
        let j0 = window;
        let mut tail = 0.0;
        for i in 0..j0 {
            tail += geometric_tail(term(j0, i) - tmax, term(j0 + 1, i) - tmax, term(j0 + 2, i) - tmax);
            tail += geometric_tail(term(i, j0) - tmax, term(i, j0 + 1) - tmax, term(i, j0 + 2) - tmax);
        }
        // Corner j, k ≥ J: product of the two directional majorants at (J, J).
        let c0 = term(j0, j0) - tmax;
        if c0 > f64::NEG_INFINITY {
            let row = geometric_tail(c0, term(j0 + 1, j0) - tmax, term(j0 + 2, j0) - tmax);
            let col = geometric_tail(0.0, term(j0, j0 + 1) - term(j0, j0), term(j0, j0 + 2) - term(j0, j0));
            tail += row * col;
        }
        let scale = tmax.exp();
        let value = acc.total() * scale;
        let bound = tail * scale;
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::Range(format!("epsilon is not representable at (U,V)=({}, {})", p.u, p.v)));
        }
        if bound <= tol * value {
            return Ok(EpsilonSample {
                point: p,
                alpha: al,
                value,
                trunc_bound: bound,
                abs_err: bound + value * (max_rel + 4.0 * EPS),
                window,
            });
        }
        last_bound = bound / value;
        window *= 2;
    }
    Err(Error::Numerical(format!(
        "kernel series truncation budget exceeded at window {WINDOW_MAX}: relative tail bound {last_bound:e} > tol {tol:e}"
    )))
}

/// `ε` at a point of `C²`; depends only on `(|z₁|², |z₂|²)`.
pub fn epsilon_at_z(z: ComplexPoint, prm: Params, w: Weight, tol: f64) -> Result<EpsilonSample> {
    let (_, p) = lift(z, prm, 1e-15)?;
    epsilon_at(p, prm, w, tol)
}

fn h_oracle() -> &'static HQuadratic {
    static H: OnceLock<HQuadratic> = OnceLock::new();
    H.get_or_init(exact_h_quadratic)
}

/// `h_α` evaluated two ways.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HAlpha {
    pub direct: QuadResult,
    /// The exact quadratic in `y = I(0,0,0)`, divided by `4m²α`.
    pub via_quadratic: f64,
    pub agree: bool,
}

/// `I(0,0,0)² + 4m·I(1,0,0)I(0,0,0) - α²I(1,1,1)² - 4mα²I(2,1,1)I(1,1,1)`; exactly 0 at `m = 0`.
pub fn h_alpha(prm: Params, w: Weight) -> Result<QuadResult> {
    Ok(h_alpha_checked(prm, w)?.direct)
}

pub fn h_alpha_checked(prm: Params, w: Weight) -> Result<HAlpha> {
    let m = prm.m();
    let al = w.alpha();
    if m == 0.0 {
        let zero = QuadResult { value: 0.0, abs_err: 0.0 };
        return Ok(HAlpha { direct: zero, via_quadratic: 0.0, agree: true });
    }
    let y = integral_i(0, 0, 0, prm, w)?;
    let i1 = integral_i(1, 1, 1, prm, w)?;
    let i2 = integral_i(2, 1, 1, prm, w)?;
    let a2 = al * al;
    let terms = [y.value * y.value, 4.0 * m * i1.value * y.value, a2 * i1.value * i1.value, 4.0 * m * a2 * i2.value * i1.value];
    let value = terms[0] + terms[1] - terms[2] - terms[3];
    let err = 2.0 * y.value * y.abs_err
        + 4.0 * m * (i1.abs_err * y.value + i1.value * y.abs_err)
        + 2.0 * a2 * i1.value * i1.abs_err
        + 4.0 * m * a2 * (i2.abs_err * i1.value + i2.value * i1.abs_err)
        + 4.0 * EPS * terms.iter().sum::<f64>();
    let q = h_oracle();
    let vals = [m, 0.0, 0.0, al, y.value];
    let (c2, c1, c0) = (q.a2.eval_f64(&vals), q.a1.eval_f64(&vals), q.a0.eval_f64(&vals));
    let scale = 4.0 * m * m * al;
    let via_quadratic = (c2 * y.value * y.value + c1 * y.value + c0) / scale;
    let quad_err = ((2.0 * c2 * y.value + c1).abs() * y.abs_err
        + 8.0 * EPS * ((c2 * y.value * y.value).abs() + (c1 * y.value).abs() + c0.abs()))
        / scale;
    Ok(HAlpha {
        direct: QuadResult { value, abs_err: err },
        via_quadratic,
        agree: (value - via_quadratic).abs() <= err + quad_err,
    })
}

/// `α²‖z₁z₂‖²/‖1‖²`, which equals 1 for a balanced metric.
pub fn norm_ratio(prm: Params, w: Weight) -> Result<QuadResult> {
    if prm.m() == 0.0 {
        return Ok(QuadResult { value: 1.0, abs_err: 0.0 });
    }
    let t = NormTable::build(prm, w, 2)?;
    let ln = 2.0 * w.alpha().ln() + t.ln_norm(1, 1) - t.ln_norm(0, 0);
    let value = ln.exp();
    Ok(QuadResult { value, abs_err: value * (t.rel_err(1, 1) + t.rel_err(0, 0) + 4.0 * EPS) })
}

/// Maximum relative deviation of `ε` from `ε(0)` over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationReport {
    pub alpha: f64,
    pub eps0: f64,
    pub max_rel_dev: f64,
    pub argmax: SigmaPoint,
    /// Relative error budget of the deviation itself.
    pub combined_err: f64,
    pub samples: Vec<EpsilonSample>,
}

pub fn epsilon_deviation(prm: Params, w: Weight, grid: &[SigmaPoint], tol: f64) -> Result<DeviationReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("deviation grid must be nonempty".into()));
    }
    let e0 = epsilon_at(SigmaPoint::ORIGIN, prm, w, tol)?;
    let samples: Vec<EpsilonSample> = grid.par_iter().map(|&p| epsilon_at(p, prm, w, tol)).collect::<Result<_>>()?;
    let mut best = (0.0, grid[0]);
    for s in &samples {
        let dev = (s.value - e0.value).abs() / e0.value;
        if dev > best.0 {
            best = (dev, s.point);
        }
    }
    let combined_err = samples
        .iter()
        .map(|s| s.abs_err / e0.value + (s.value / e0.value) * (e0.abs_err / e0.value))
        .fold(0.0, f64::max);
    Ok(DeviationReport {
        alpha: w.alpha(),
        eps0: e0.value,
        max_rel_dev: best.0,
        argmax: best.1,
        combined_err,
        samples,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BalanceRow {
    pub m: f64,
    pub h: QuadResult,
    pub h_via_quadratic: f64,
    pub h_paths_agree: bool,
    pub norm_ratio: QuadResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BalanceReport {
    pub alpha: f64,
    pub rows: Vec<BalanceRow>,
    /// Over the rows with `m > 0`; `None` when there are none.
    pub min_abs_h: Option<f64>,
    /// One of `+`, `-`, `0` per row; `0` when `|h|` is within its error.
    pub sign_pattern: String,
}

pub fn balanced_scan(m_grid: &[f64], w: Weight) -> Result<BalanceReport> {
    if m_grid.is_empty() {
        return Err(Error::InvalidArgument("m-grid must be nonempty".into()));
    }
    let half = 0.5 * w.alpha();
    if let Some(bad) = m_grid.iter().find(|&&m| !(0.0..=half).contains(&m)) {
        return Err(Error::Domain(format!("grid point m={bad} lies outside [0, α/2] = [0, {half}]")));
    }
    let rows: Vec<BalanceRow> = m_grid
        .par_iter()
        .map(|&m| {
            let prm = Params::new(m)?;
            let h = h_alpha_checked(prm, w)?;
            Ok(BalanceRow {
                m,
                h: h.direct,
                h_via_quadratic: h.via_quadratic,
                h_paths_agree: h.agree,
                norm_ratio: norm_ratio(prm, w)?,
            })
        })
        .collect::<Result<_>>()?;
    let min_abs_h = rows.iter().filter(|r| r.m > 0.0).map(|r| r.h.value.abs()).reduce(f64::min);
    let sign_pattern = rows
        .iter()
        .map(|r| {
            if r.h.value.abs() <= r.h.abs_err {
                '0'
            } else if r.h.value > 0.0 {
                '+'
            } else {
                '-'
            }
        })
        .collect();
    Ok(BalanceReport { alpha: w.alpha(), rows, min_abs_h, sign_pattern })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn prm(m: f64) -> Params {
        Params::new(m).unwrap()
    }

    fn w(a: f64) -> Weight {
        Weight::new(a).unwrap()
    }

    #[test]
    fn flat_norms() {
        let n = monomial_norm(1, 1, prm(0.0), w(1.0)).unwrap();
        assert!((n.value - PI * PI).abs() < 1e-13);
        let t = NormTable::build(prm(0.0), w(3.0), 6).unwrap();
        for j in 0..5usize {
            for k in 0..5usize {
                let want = PI * PI * (ln_factorial(j) + ln_factorial(k)).exp() / 3f64.powi((j + k + 2) as i32);
                assert!((t.norm(j, k).unwrap().value - want).abs() < 1e-13 * want);
            }
        }
    }

    #[test]
    fn table_matches_direct_norms_and_is_symmetric() {
        let t = NormTable::build(prm(0.5), w(2.0), 6).unwrap();
        for j in 0..=4u32 {
            for k in 0..=4u32 {
                let a = t.norm(j as usize, k as usize).unwrap();
                let b = t.norm(k as usize, j as usize).unwrap();
                let d = monomial_norm(j, k, prm(0.5), w(2.0)).unwrap();
                assert!((a.value - b.value).abs() <= a.abs_err + b.abs_err, "({j},{k})");
                assert!((a.value - d.value).abs() <= a.abs_err + d.abs_err, "({j},{k})");
            }
        }
    }

    #[test]
    fn origin_and_flat_epsilon() {
        let s = epsilon_at(SigmaPoint::ORIGIN, prm(0.1), w(20.0), 1e-12).unwrap();
        let n0 = monomial_norm(0, 0, prm(0.1), w(20.0)).unwrap();
        assert!((s.value - 1.0 / n0.value).abs() < 1e-15 * s.value);
        assert!((PI * PI * s.value - 400.037).abs() < 1e-3);
        for al in [1.0, 10.0] {
            for (u, v) in [(0.0, 0.0), (0.3, 0.0), (1.0, 2.0), (4.0, 0.5)] {
                let s = epsilon_at(SigmaPoint::new(u, v).unwrap(), prm(0.0), w(al), 1e-14).unwrap();
                assert!((PI * PI * s.value - al * al).abs() < 1e-10 * al * al, "α={al} ({u},{v}): {}", PI * PI * s.value);
            }
        }
        assert!(epsilon_at(SigmaPoint::ORIGIN, prm(0.1), w(1.0), 0.0).is_err());
    }

    #[test]
    fn h_alpha_examples() {
        assert_eq!(h_alpha(prm(0.0), w(1.0)).unwrap().value, 0.0);
        let h = h_alpha_checked(prm(0.3), w(1.0)).unwrap();
        assert!(h.direct.value > h.direct.abs_err && h.agree, "{h:?}");
        let r = norm_ratio(prm(0.5), w(1.0)).unwrap();
        assert!((r.value - 1.0).abs() > r.abs_err);
        assert_eq!(norm_ratio(prm(0.0), w(1.0)).unwrap().value, 1.0);
    }

    #[test]
    fn scan_and_deviation() {
        let grid: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();
        let rep = balanced_scan(&grid, w(1.0)).unwrap();
        assert_eq!(rep.sign_pattern, "0++++++++++");
        assert!(rep.min_abs_h.unwrap() > 0.0);
        assert!(balanced_scan(&[0.6], w(1.0)).is_err());
        let pts: Vec<SigmaPoint> = [(0.5, 0.0), (1.0, 1.0), (2.0, 0.5)].iter().map(|&(u, v)| SigmaPoint::new(u, v).unwrap()).collect();
        let flat = epsilon_deviation(prm(0.0), w(1.0), &pts, 1e-14).unwrap();
        assert!(flat.max_rel_dev <= flat.combined_err.max(1e-13), "{flat:?}");
        let curved = epsilon_deviation(prm(0.5), w(1.0), &pts, 1e-12).unwrap();
        assert!(curved.max_rel_dev > 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn epsilon_positive_and_phase_invariant(r1 in 0.0..1.5f64, r2 in 0.0..1.5f64, t1 in 0.0..6.3f64, t2 in 0.0..6.3f64, m in 0.0..1.0f64) {
            let a = ComplexPoint::new(Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)).unwrap();
            let b = ComplexPoint::new(Complex64::from_polar(r1, t1), Complex64::from_polar(r2, t2)).unwrap();
            let ea = epsilon_at_z(a, prm(m), w(2.0), 1e-12).unwrap();
            let eb = epsilon_at_z(b, prm(m), w(2.0), 1e-12).unwrap();
            prop_assert!(ea.value > 0.0);
            prop_assert!((ea.value - eb.value).abs() <= 1e-12 * ea.value + ea.abs_err + eb.abs_err);
        }
    }
}
