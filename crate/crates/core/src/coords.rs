//! Implicit coordinates of the LeBrun metrics.
//!
//! A point of C² is described by `x_i = |z_i|²` and by the implicit pair
//! `(U, V)` related through `x1 = U e^{2m(U-V)}`, `x2 = V e^{2m(V-U)}`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-13;

const MAX_ITER: usize = 300;

/// Metric parameter `m ≥ 0`; `m = 0` is the flat metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    m: f64,
}

impl Params {
    pub fn new(m: f64) -> Result<Self> {
        if !m.is_finite() || m < 0.0 {
            return Err(Error::InvalidArgument(format!("m must be finite and >= 0, got {m}")));
        }
        Ok(Params { m })
    }

    pub fn m(&self) -> f64 {
        self.m
    }
}

/// Implicit coordinates. `u` and `v` hold the squares `U = u²`, `V = v²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaPoint {
    pub u: f64,
    pub v: f64,
}

impl SigmaPoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !(u.is_finite() && v.is_finite()) || u < 0.0 || v < 0.0 {
            return Err(Error::InvalidArgument(format!("(U, V) must be finite and >= 0, got ({u}, {v})")));
        }
        Ok(SigmaPoint { u, v })
    }

    pub const ORIGIN: SigmaPoint = SigmaPoint { u: 0.0, v: 0.0 };

    /// Point with `U = a²`, `V = b²`.
    pub fn from_roots(a: f64, b: f64) -> Result<Self> {
        Self::new(a * a, b * b)
    }

    pub fn sum(&self) -> f64 {
        self.u + self.v
    }
}

/// `x_i = |z_i|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialPoint {
    pub x1: f64,
    pub x2: f64,
}

impl RadialPoint {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        if !(x1.is_finite() && x2.is_finite()) || x1 < 0.0 || x2 < 0.0 {
            return Err(Error::InvalidArgument(format!("(x1, x2) must be finite and >= 0, got ({x1}, {x2})")));
        }
        Ok(RadialPoint { x1, x2 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexPoint {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl ComplexPoint {
    pub fn new(z1: Complex64, z2: Complex64) -> Result<Self> {
        if !(z1.re.is_finite() && z1.im.is_finite() && z2.re.is_finite() && z2.im.is_finite()) {
            return Err(Error::InvalidArgument("z must be finite".into()));
        }
        Ok(ComplexPoint { z1, z2 })
    }

    pub const ORIGIN: ComplexPoint = ComplexPoint {
        z1: Complex64::new(0.0, 0.0),
        z2: Complex64::new(0.0, 0.0),
    };

    /// The real point `(√x1, √x2)`.
    pub fn real(x: RadialPoint) -> Self {
        ComplexPoint {
            z1: Complex64::new(x.x1.sqrt(), 0.0),
            z2: Complex64::new(x.x2.sqrt(), 0.0),
        }
    }

    /// Point over `x` with phases `theta1`, `theta2`.
    pub fn with_phases(x: RadialPoint, theta1: f64, theta2: f64) -> Self {
        ComplexPoint {
            z1: Complex64::from_polar(x.x1.sqrt(), theta1),
            z2: Complex64::from_polar(x.x2.sqrt(), theta2),
        }
    }

    pub fn radial(&self) -> RadialPoint {
        RadialPoint { x1: self.z1.norm_sqr(), x2: self.z2.norm_sqr() }
    }
}

/// `∂(x1, x2)/∂(U, V)` with its determinant `1 + 2m(U+V)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianAt {
    pub j: [[f64; 2]; 2],
    pub det: f64,
}

fn exp_checked(arg: f64) -> Result<f64> {
    let e = arg.exp();
    if !e.is_finite() || (e == 0.0 && arg > -1e3) {
        return Err(Error::Range(format!("exponential factor e^{arg} out of range")));
    }
    Ok(e)
}

pub fn forward_map(p: SigmaPoint, prm: Params) -> Result<RadialPoint> {
    let m = prm.m();
    let w = 2.0 * m * (p.u - p.v);
    let x1 = if p.u == 0.0 { 0.0 } else { p.u * exp_checked(w)? };
    let x2 = if p.v == 0.0 { 0.0 } else { p.v * exp_checked(-w)? };
    if !(x1.is_finite() && x2.is_finite()) {
        return Err(Error::Range(format!("forward map overflows at (U, V) = ({}, {})", p.u, p.v)));
    }
    Ok(RadialPoint { x1, x2 })
}

pub fn jacobian_forward(p: SigmaPoint, prm: Params) -> JacobianAt {
    let m = prm.m();
    let e = (2.0 * m * (p.u - p.v)).exp();
    let ei = 1.0 / e;
    let j = [
        [(1.0 + 2.0 * m * p.u) * e, -2.0 * m * p.u * e],
        [-2.0 * m * p.v * ei, (1.0 + 2.0 * m * p.v) * ei],
    ];
    JacobianAt { j, det: 1.0 + 2.0 * m * p.sum() }
}

/// `∂(U, V)/∂(x1, x2)`.
pub fn inverse_jacobian(p: SigmaPoint, prm: Params) -> [[f64; 2]; 2] {
    let m = prm.m();
    let e = (2.0 * m * (p.u - p.v)).exp();
    let d = 1.0 + 2.0 * m * p.sum();
    [
        [(1.0 + 2.0 * m * p.v) / (e * d), 2.0 * m * p.u * e / d],
        [2.0 * m * p.v / (e * d), (1.0 + 2.0 * m * p.u) * e / d],
    ]
}

// Root w >= 0 of w = a e^{-2mw} - b e^{2mw} for a >= b, found as the zero of
// the decreasing function h(w) = ln a - 2mw - ln(w + b e^{2mw}) on [0, a].
fn solve_reduced(a: f64, b: f64, m: f64) -> Result<f64> {
    let (la, lb) = (a.ln(), b.ln());
    let h = |w: f64| {
        let be = (lb + 2.0 * m * w).exp();
        let s = w + be;
        (la - 2.0 * m * w - s.ln(), -2.0 * m - (1.0 + 2.0 * m * be) / s)
    };
    if a == b {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, a);
    let mut w = (a.ln_1p() / (2.0 * m)).min(a).max(0.5 * a.min(1.0 / m) * f64::EPSILON);
    let mut residual = f64::INFINITY;
    let mut last = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let (f, df) = h(w);
        residual = f.abs();
        if f == 0.0 || residual <= 4.0 * f64::EPSILON * (1.0 + la.abs() + 2.0 * m * w.abs()) {
            return Ok(w);
        }
        if f > 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        let newton = w - f / df;
        let next = if newton.is_finite() && newton >= lo && newton <= hi {
            newton
        } else if lo > 0.0 && hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - w).abs();
        w = next;
        if step <= 4.0 * f64::EPSILON * w || hi - lo <= 4.0 * f64::EPSILON * w {
            return Ok(w);
        }
        if step >= last && step <= 1e-9 * w {
            return Ok(w);
        }
        last = step;
    }
    Err(Error::Convergence { iterations: MAX_ITER, residual })
}

/// Solves `forward_map(p) = x` for `p`.
///
/// Writing `w = U - V`, the system collapses to the scalar equation
/// `w = x1 e^{-2mw} - x2 e^{2mw}`, whose two sides cross exactly once with the
/// root in `[-x2, x1]`; the root is found by safeguarded Newton steps on a
/// logarithmic form of the equation, then `U = x1 e^{-2mw}`, `V = x2 e^{2mw}`.
pub fn inverse_map(x: RadialPoint, prm: Params, tol: f64) -> Result<SigmaPoint> {
    let x = RadialPoint::new(x.x1, x.x2)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let m = prm.m();
    if m == 0.0 || (x.x1 == 0.0 && x.x2 == 0.0) {
        return Ok(SigmaPoint { u: x.x1, v: x.x2 });
    }
    let w = if x.x1 >= x.x2 {
        solve_reduced(x.x1, x.x2, m)?
    } else {
        -solve_reduced(x.x2, x.x1, m)?
    };
    let u = if x.x1 == 0.0 { 0.0 } else { (x.x1.ln() - 2.0 * m * w).exp() };
    let v = if x.x2 == 0.0 { 0.0 } else { (x.x2.ln() + 2.0 * m * w).exp() };
    let back = forward_map(SigmaPoint { u, v }, prm)?;
    let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { ((a - b) / b).abs() };
    let residual = rel(back.x1, x.x1).max(rel(back.x2, x.x2));
    let cond = (1.0 + 2.0 * m * (u + v)) * (1.0 + 2.0 * m * (u - v).abs());
    let floor = tol.max(16.0 * f64::EPSILON * cond);
    if !(residual <= floor) {
        return Err(Error::Convergence { iterations: MAX_ITER, residual });
    }
    Ok(SigmaPoint { u, v })
}

/// `(|z1|², |z2|²)` together with the implicit coordinates over `z`.
pub fn lift(z: ComplexPoint, prm: Params, tol: f64) -> Result<(RadialPoint, SigmaPoint)> {
    let z = ComplexPoint::new(z.z1, z.z2)?;
    let x = z.radial();
    let p = inverse_map(x, prm, tol)?;
    Ok((x, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn prm(m: f64) -> Params {
        Params::new(m).unwrap()
    }

    #[test]
    fn flat_forward_is_identity() {
        let x = forward_map(SigmaPoint::new(3.0, 5.0).unwrap(), prm(0.0)).unwrap();
        assert_eq!((x.x1, x.x2), (3.0, 5.0));
    }

    #[test]
    fn forward_unit_point() {
        let x = forward_map(SigmaPoint::new(1.0, 0.0).unwrap(), prm(1.0)).unwrap();
        assert_relative_eq!(x.x1, 7.38905609893065, max_relative = 1e-14);
        assert_eq!(x.x2, 0.0);
    }

    #[test]
    fn forward_overflow_is_range_error() {
        let r = forward_map(SigmaPoint::new(400.0, 0.0).unwrap(), prm(1.0));
        assert!(matches!(r, Err(Error::Range(_))));
    }

    #[test]
    fn jacobian_examples() {
        let j = jacobian_forward(SigmaPoint::new(0.7, 0.2).unwrap(), prm(0.0));
        assert_eq!(j.j, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(j.det, 1.0);
        let j = jacobian_forward(SigmaPoint::new(0.5, 0.5).unwrap(), prm(1.0));
        assert_relative_eq!(j.det, 3.0);
        let det = j.j[0][0] * j.j[1][1] - j.j[0][1] * j.j[1][0];
        assert_relative_eq!(det, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn jacobian_swap_symmetry() {
        let p = prm(0.8);
        let a = jacobian_forward(SigmaPoint::new(0.3, 1.1).unwrap(), p).j;
        let b = jacobian_forward(SigmaPoint::new(1.1, 0.3).unwrap(), p).j;
        for i in 0..2 {
            for k in 0..2 {
                assert_relative_eq!(a[i][k], b[1 - i][1 - k], max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn inverse_jacobian_examples() {
        let j = inverse_jacobian(SigmaPoint::ORIGIN, prm(2.5));
        assert_eq!(j, [[1.0, 0.0], [0.0, 1.0]]);
        let j = inverse_jacobian(SigmaPoint::new(1.0, 0.0).unwrap(), prm(1.0));
        assert_relative_eq!(j[0][0], (-2.0f64).exp() / 3.0, max_relative = 1e-15);
        assert_relative_eq!(j[0][0], 0.045112, max_relative = 1e-4);
    }

    #[test]
    fn inverse_map_examples() {
        for m in [0.0, 0.3, 1.0, 10.0] {
            let p = inverse_map(RadialPoint::new(0.0, 0.0).unwrap(), prm(m), DEFAULT_TOL).unwrap();
            assert_eq!((p.u, p.v), (0.0, 0.0));
        }
        let p = inverse_map(RadialPoint::new(1f64.exp().powi(2), 0.0).unwrap(), prm(1.0), DEFAULT_TOL).unwrap();
        assert_relative_eq!(p.u, 1.0, max_relative = 1e-14);
        assert_eq!(p.v, 0.0);
        let p = inverse_map(RadialPoint::new(0.25, 7.5).unwrap(), prm(0.0), DEFAULT_TOL).unwrap();
        assert_eq!((p.u, p.v), (0.25, 7.5));
    }

    #[test]
    fn inverse_map_rejects_bad_input() {
        assert!(inverse_map(RadialPoint { x1: -1.0, x2: 0.0 }, prm(1.0), 1e-13).is_err());
        assert!(inverse_map(RadialPoint { x1: 1.0, x2: 0.0 }, prm(1.0), 0.0).is_err());
    }

    #[test]
    fn inverse_map_large_arguments() {
        let p = prm(10.0);
        for (u, v) in [(30.0, 0.0), (0.0, 30.0), (25.0, 2.0), (1e-300, 20.0)] {
            let s = SigmaPoint::new(u, v).unwrap();
            let x = forward_map(s, p).unwrap();
            let back = inverse_map(x, p, DEFAULT_TOL).unwrap();
            assert_relative_eq!(back.u, u, max_relative = 1e-11);
            assert_relative_eq!(back.v, v, max_relative = 1e-11);
        }
    }

    #[test]
    fn lift_examples() {
        let (x, s) = lift(ComplexPoint::ORIGIN, prm(1.0), DEFAULT_TOL).unwrap();
        assert_eq!((x.x1, x.x2, s.u, s.v), (0.0, 0.0, 0.0, 0.0));
        let z = ComplexPoint::new(Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0)).unwrap();
        let (x, s) = lift(z, prm(0.0), DEFAULT_TOL).unwrap();
        assert_relative_eq!(x.x1, 2.0);
        assert_relative_eq!(x.x2, 4.0);
        assert_eq!((s.u, s.v), (x.x1, x.x2));
        let z = ComplexPoint::new(Complex64::new(1f64.exp(), 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let (x, s) = lift(z, prm(1.0), DEFAULT_TOL).unwrap();
        assert_relative_eq!(x.x1, 1f64.exp().powi(2), max_relative = 1e-15);
        assert_relative_eq!(s.u, 1.0, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn round_trip(m in prop::sample::select(vec![0.0, 0.1, 1.0, 10.0]), u in 0.0..5.0f64, v in 0.0..5.0f64) {
            let p = prm(m);
            let s = SigmaPoint::new(u, v).unwrap();
            let back = inverse_map(forward_map(s, p).unwrap(), p, DEFAULT_TOL).unwrap();
            prop_assert!((back.u - u).abs() <= 1e-11 * u.max(1.0));
            prop_assert!((back.v - v).abs() <= 1e-11 * v.max(1.0));
        }

        #[test]
        fn jacobians_are_inverse(m in 0.0..10.0f64, u in 0.0..3.0f64, v in 0.0..3.0f64) {
            let p = prm(m);
            let s = SigmaPoint::new(u, v).unwrap();
            let a = jacobian_forward(s, p);
            let b = inverse_jacobian(s, p);
            let det = a.j[0][0] * a.j[1][1] - a.j[0][1] * a.j[1][0];
            prop_assert!(((det - a.det) / a.det).abs() < 1e-12);
            prop_assert!(a.j[0][0] > 0.0);
            for i in 0..2 {
                for k in 0..2 {
                    let prod: f64 = (0..2).map(|l| b[i][l] * a.j[l][k]).sum();
                    let want = if i == k { 1.0 } else { 0.0 };
                    prop_assert!((prod - want).abs() < 1e-12);
                }
            }
        }
    }
}
