//! Sums of `E^k · z-monomial · f(m, U, V)` with `E = e^{2m(U-V)}`.
//!
//! A z-monomial is stored as signed exponents `(n1, n2)`: `n > 0` means `z^n`,
//! `n < 0` means `z̄^{|n|}`. Products contract `z_i z̄_i` to `x_i` at once, with
//! `x1 = E·U` and `x2 = E⁻¹·V`, so no term carries both `z_i` and `z̄_i`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::Zero;

use super::poly::{Poly, Var};
use super::ratfunc::RatFunc;

/// `(k, n1, n2)` for `E^k z^{(n1, n2)}`.
pub type Tag = (i32, i32, i32);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coord {
    Z1,
    Z1Bar,
    Z2,
    Z2Bar,
}

#[derive(Clone, PartialEq, Eq, Default)]
pub struct ExactScalar {
    terms: BTreeMap<Tag, RatFunc>,
}

fn d_poly() -> Poly {
    Poly::parse("1 + 2m*U + 2m*V").unwrap()
}

impl ExactScalar {
    pub fn zero() -> Self {
        ExactScalar::default()
    }

    pub fn term(tag: Tag, f: RatFunc) -> Self {
        let mut terms = BTreeMap::new();
        if !f.is_zero() {
            terms.insert(tag, f);
        }
        ExactScalar { terms }
    }

    pub fn radial(f: RatFunc) -> Self {
        ExactScalar::term((0, 0, 0), f)
    }

    pub fn constant(c: i64) -> Self {
        ExactScalar::radial(RatFunc::int(c))
    }

    /// `z^{(n1, n2)}` with signed exponents.
    pub fn monomial(n1: i32, n2: i32) -> Self {
        ExactScalar::term((0, n1, n2), RatFunc::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Tag, &RatFunc)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total polynomial term count over all coefficients.
    pub fn size(&self) -> usize {
        self.terms.values().map(RatFunc::size).sum()
    }

    /// The coefficient when the scalar is a single untagged term (or zero).
    pub fn as_radial(&self) -> Option<RatFunc> {
        match self.terms.len() {
            0 => Some(RatFunc::zero()),
            1 => self.terms.get(&(0, 0, 0)).cloned(),
            _ => None,
        }
    }

    /// The single term, if there is exactly one.
    pub fn single(&self) -> Option<(Tag, &RatFunc)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(t, f)| (*t, f))
        } else {
            None
        }
    }

    fn add_term(&mut self, tag: Tag, f: RatFunc) {
        if f.is_zero() {
            return;
        }
        match self.terms.get_mut(&tag) {
            None => {
                self.terms.insert(tag, f);
            }
            Some(cur) => {
                let s = &*cur + &f;
                if s.is_zero() {
                    self.terms.remove(&tag);
                } else {
                    *cur = s;
                }
            }
        }
    }

    pub fn scale(&self, f: &RatFunc) -> ExactScalar {
        let mut out = ExactScalar::zero();
        for (t, g) in &self.terms {
            out.add_term(*t, g * f);
        }
        out
    }

    pub fn conj(&self) -> ExactScalar {
        ExactScalar { terms: self.terms.iter().map(|(&(k, a, b), f)| ((k, -a, -b), f.clone())).collect() }
    }

    pub fn map_coeffs<F: Fn(&RatFunc) -> RatFunc>(&self, f: F) -> ExactScalar {
        let mut out = ExactScalar::zero();
        for (t, g) in &self.terms {
            out.add_term(*t, f(g));
        }
        out
    }

    /// `∂/∂x1` of `E^k f(U,V)`: `E^{k-1}/D·[(1+2mV)(f_U+2mkf) + 2mV(f_V-2mkf)]`.
    fn dx1_radial(k: i32, f: &RatFunc) -> (i32, RatFunc) {
        let (fu, fv) = shifted_partials(k, f);
        let a = RatFunc::from(Poly::parse("1+2m*V").unwrap());
        let b = RatFunc::from(Poly::parse("2m*V").unwrap());
        let inv_d = RatFunc::new(Poly::one(), d_poly()).unwrap();
        (k - 1, &(&(&a * &fu) + &(&b * &fv)) * &inv_d)
    }

    /// `∂/∂x2` of `E^k f(U,V)`: `E^{k+1}/D·[2mU(f_U+2mkf) + (1+2mU)(f_V-2mkf)]`.
    fn dx2_radial(k: i32, f: &RatFunc) -> (i32, RatFunc) {
        let (fu, fv) = shifted_partials(k, f);
        let a = RatFunc::from(Poly::parse("2m*U").unwrap());
        let b = RatFunc::from(Poly::parse("1+2m*U").unwrap());
        let inv_d = RatFunc::new(Poly::one(), d_poly()).unwrap();
        (k + 1, &(&(&a * &fu) + &(&b * &fv)) * &inv_d)
    }

    /// `∂/∂x_i` of a scalar whose terms carry no z-monomial.
    pub fn dx(&self, i: usize) -> ExactScalar {
        let mut out = ExactScalar::zero();
        for (&(k, n1, n2), f) in &self.terms {
            assert!(n1 == 0 && n2 == 0, "dx applies to radial terms only");
            let (k2, g) = if i == 0 { Self::dx1_radial(k, f) } else { Self::dx2_radial(k, f) };
            out.add_term((k2, 0, 0), g);
        }
        out
    }

    /// Derivative in `z1, z̄1, z2` or `z̄2` (Leibniz over the monomial and the radial factor).
    pub fn dz(&self, c: Coord) -> ExactScalar {
        let mut out = ExactScalar::zero();
        for (&(k, n1, n2), f) in &self.terms {
            let n = match c {
                Coord::Z1 | Coord::Z1Bar => n1,
                Coord::Z2 | Coord::Z2Bar => n2,
            };
            let holo = matches!(c, Coord::Z1 | Coord::Z2);
            if (holo && n > 0) || (!holo && n < 0) {
                let step = if holo { -1 } else { 1 };
                let tag = match c {
                    Coord::Z1 | Coord::Z1Bar => (k, n1 + step, n2),
                    Coord::Z2 | Coord::Z2Bar => (k, n1, n2 + step),
                };
                out.add_term(tag, f.scale_int(n.abs() as i64));
            }
            let (k2, g) = match c {
                Coord::Z1 | Coord::Z1Bar => Self::dx1_radial(k, f),
                Coord::Z2 | Coord::Z2Bar => Self::dx2_radial(k, f),
            };
            // ∂x_i/∂z_i = z̄_i and ∂x_i/∂z̄_i = z_i.
            let factor = match c {
                Coord::Z1 => ExactScalar::monomial(-1, 0),
                Coord::Z1Bar => ExactScalar::monomial(1, 0),
                Coord::Z2 => ExactScalar::monomial(0, -1),
                Coord::Z2Bar => ExactScalar::monomial(0, 1),
            };
            let part = &ExactScalar::term((k2, n1, n2), g) * &factor;
            for (t, h) in part.terms {
                out.add_term(t, h);
            }
        }
        out
    }

    /// Numeric value at `z`, with `(U, V)` the implicit coordinates over `z`.
    pub fn eval(&self, m: f64, u: f64, v: f64, z1: Complex64, z2: Complex64) -> Complex64 {
        let e = (2.0 * m * (u - v)).exp();
        let mut s = Complex64::zero();
        for (&(k, n1, n2), f) in &self.terms {
            let mono = |z: Complex64, n: i32| if n >= 0 { z.powi(n) } else { z.conj().powi(-n) };
            let val = f.eval_f64(&[m, u, v, 0.0, 0.0]);
            s += mono(z1, n1) * mono(z2, n2) * (e.powi(k) * val);
        }
        s
    }

    pub fn substitute(&self, v: Var, p: &Poly) -> ExactScalar {
        self.map_coeffs(|f| f.substitute(v, p).expect("substitution keeps the denominator nonzero"))
    }
}

/// `(f_U + 2mk·f, f_V - 2mk·f)`, the partials of `E^k f` divided by `E^k`.
fn shifted_partials(k: i32, f: &RatFunc) -> (RatFunc, RatFunc) {
    let mk = RatFunc::from(Poly::parse("2m").unwrap().scale(&k.into()));
    let t = &mk * f;
    (&f.derivative(Var::U) + &t, &f.derivative(Var::V) - &t)
}

fn contract(n: i32, o: i32) -> (i32, u32) {
    if (n > 0 && o < 0) || (n < 0 && o > 0) {
        (n + o, n.abs().min(o.abs()) as u32)
    } else {
        (n + o, 0)
    }
}

impl Mul for &ExactScalar {
    type Output = ExactScalar;
    fn mul(self, o: &ExactScalar) -> ExactScalar {
        let mut out = ExactScalar::zero();
        let u = Poly::var(Var::U);
        let v = Poly::var(Var::V);
        for (&(ka, a1, a2), fa) in &self.terms {
            for (&(kb, b1, b2), fb) in &o.terms {
                let (n1, c1) = contract(a1, b1);
                let (n2, c2) = contract(a2, b2);
                let mut f = fa * fb;
                if c1 + c2 > 0 {
                    f = &f * &RatFunc::from(&u.pow(c1) * &v.pow(c2));
                }
                out.add_term((ka + kb + c1 as i32 - c2 as i32, n1, n2), f);
            }
        }
        out
    }
}

impl Add for &ExactScalar {
    type Output = ExactScalar;
    fn add(self, o: &ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        for (t, f) in &o.terms {
            out.add_term(*t, f.clone());
        }
        out
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar { terms: self.terms.iter().map(|(t, f)| (*t, -f)).collect() }
    }
}

impl Sub for &ExactScalar {
    type Output = ExactScalar;
    fn sub(self, o: &ExactScalar) -> ExactScalar {
        self + &(-o)
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub fn tag_string(tag: Tag) -> String {
    let (k, n1, n2) = tag;
    let mut parts = Vec::new();
    if k != 0 {
        parts.push(format!("E^{k}"));
    }
    for (n, name) in [(n1, "z1"), (n2, "z2")] {
        match n {
            0 => {}
            1 => parts.push(name.to_string()),
            -1 => parts.push(format!("conj({name})")),
            n if n > 0 => parts.push(format!("{name}^{n}")),
            n => parts.push(format!("conj({name})^{}", -n)),
        }
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(t, g)| format!("[{}]*{}", tag_string(*t), g)).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::{forward_map, ComplexPoint, Params, SigmaPoint};
    use proptest::prelude::*;

    fn rf(n: &str, d: &str) -> RatFunc {
        RatFunc::parse(n, d).unwrap()
    }

    #[test]
    fn contraction_rules() {
        let z1 = ExactScalar::monomial(1, 0);
        let x1 = &z1 * &z1.conj();
        assert_eq!(x1, ExactScalar::term((1, 0, 0), RatFunc::var(Var::U)));
        let z2 = ExactScalar::monomial(0, 1);
        assert_eq!(&z2.conj() * &z2, ExactScalar::term((-1, 0, 0), RatFunc::var(Var::V)));
        assert_eq!(&x1 * &(&z2 * &z2.conj()), ExactScalar::radial(rf("U*V", "1")));
    }

    #[test]
    fn derivative_examples() {
        assert!(ExactScalar::constant(7).dz(Coord::Z1).is_zero());
        let x1 = ExactScalar::term((1, 0, 0), RatFunc::var(Var::U));
        assert_eq!(x1.dz(Coord::Z1), ExactScalar::monomial(-1, 0));
        assert_eq!(x1.dz(Coord::Z1Bar), ExactScalar::monomial(1, 0));
        assert!(x1.dz(Coord::Z2).is_zero());
        let x2 = ExactScalar::term((-1, 0, 0), RatFunc::var(Var::V));
        assert_eq!(x2.dz(Coord::Z2Bar), ExactScalar::monomial(0, 1));
        assert!(x2.dz(Coord::Z1).is_zero());
        let z1sq = ExactScalar::monomial(2, 0);
        assert_eq!(z1sq.dz(Coord::Z1), ExactScalar::term((0, 1, 0), RatFunc::int(2)));
        assert!(z1sq.dz(Coord::Z1Bar).is_zero());
    }

    fn arb_scalar() -> impl Strategy<Value = ExactScalar> {
        let nums = ["U", "V", "1+m*U", "m*V^2 - U", "3", "U*V + 2m"];
        let dens = ["1", "1+2m(U+V)", "(1+2m(U+V))^2", "1+m*V"];
        prop::collection::vec((0usize..6, 0usize..4, -2i32..=2, -2i32..=2, -2i32..=2), 1..4).prop_map(move |ts| {
            let mut s = ExactScalar::zero();
            for (a, b, k, n1, n2) in ts {
                s = &s + &ExactScalar::term((k, n1, n2), rf(nums[a], dens[b]));
            }
            s
        })
    }

    fn point() -> (f64, f64, f64, Complex64, Complex64) {
        let (m, u, v) = (0.7, 0.4, 0.25);
        let x = forward_map(SigmaPoint::new(u, v).unwrap(), Params::new(m).unwrap()).unwrap();
        let z = ComplexPoint::with_phases(x, 0.6, -1.3);
        (m, u, v, z.z1, z.z2)
    }

    // Central difference of the numeric value along a Wirtinger direction.
    fn fd(s: &ExactScalar, c: Coord) -> Complex64 {
        let (m, _, _, z1, z2) = point();
        let prm = Params::new(m).unwrap();
        let f = |dz1: Complex64, dz2: Complex64| {
            let z = ComplexPoint { z1: z1 + dz1, z2: z2 + dz2 };
            let (_, p) = crate::coords::lift(z, prm, 1e-15).unwrap();
            s.eval(m, p.u, p.v, z.z1, z.z2)
        };
        let h = 1e-5;
        let (re, im) = match c {
            Coord::Z1 | Coord::Z1Bar => (
                (f(Complex64::new(h, 0.0), Complex64::zero()) - f(Complex64::new(-h, 0.0), Complex64::zero())) / (2.0 * h),
                (f(Complex64::new(0.0, h), Complex64::zero()) - f(Complex64::new(0.0, -h), Complex64::zero())) / (2.0 * h),
            ),
            Coord::Z2 | Coord::Z2Bar => (
                (f(Complex64::zero(), Complex64::new(h, 0.0)) - f(Complex64::zero(), Complex64::new(-h, 0.0))) / (2.0 * h),
                (f(Complex64::zero(), Complex64::new(0.0, h)) - f(Complex64::zero(), Complex64::new(0.0, -h))) / (2.0 * h),
            ),
        };
        let i = Complex64::new(0.0, 1.0);
        match c {
            Coord::Z1 | Coord::Z2 => (re - i * im) * 0.5,
            _ => (re + i * im) * 0.5,
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn leibniz_rule(a in arb_scalar(), b in arb_scalar()) {
            for c in [Coord::Z1, Coord::Z1Bar, Coord::Z2, Coord::Z2Bar] {
                let lhs = (&a * &b).dz(c);
                let rhs = &(&a.dz(c) * &b) + &(&a * &b.dz(c));
                prop_assert_eq!(lhs, rhs);
            }
        }

        #[test]
        fn derivative_matches_finite_differences(a in arb_scalar()) {
            let (m, u, v, z1, z2) = point();
            for c in [Coord::Z1, Coord::Z1Bar, Coord::Z2, Coord::Z2Bar] {
                let exact = a.dz(c).eval(m, u, v, z1, z2);
                let num = fd(&a, c);
                prop_assert!((exact - num).norm() < 1e-7 * (1.0 + exact.norm()), "{:?}: {} vs {}", c, exact, num);
            }
        }

        #[test]
        fn conj_is_an_involution_and_commutes_with_products(a in arb_scalar(), b in arb_scalar()) {
            prop_assert_eq!(a.conj().conj(), a.clone());
            prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
            prop_assert_eq!(a.dz(Coord::Z1).conj(), a.conj().dz(Coord::Z1Bar));
        }
    }
}
