//! Truncated power series in `(x1, x2)` with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: u32 = 8;

/// Parses a decimal or fraction literal (`"0.6"`, `"3/5"`, `"-2"`, `"1e-3"`) exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("not a rational literal: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}0").parse::<BigInt>().map_err(|_| bad())? / 10;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut q = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        q = -q;
    }
    Ok(q)
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Series in `(x1, x2)` truncated at total degree `order`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series2 {
    order: u32,
    coeffs: BTreeMap<(u32, u32), BigRational>,
}

impl Series2 {
    pub fn zero(order: u32) -> Self {
        Series2 { order, coeffs: BTreeMap::new() }
    }

    pub fn constant(order: u32, c: BigRational) -> Self {
        let mut s = Self::zero(order);
        s.set(0, 0, c);
        s
    }

    pub fn one(order: u32) -> Self {
        Self::constant(order, BigRational::one())
    }

    pub fn x1(order: u32) -> Self {
        let mut s = Self::zero(order);
        s.set(1, 0, BigRational::one());
        s
    }

    pub fn x2(order: u32) -> Self {
        let mut s = Self::zero(order);
        s.set(0, 1, BigRational::one());
        s
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coeff(&self, i: u32, j: u32) -> BigRational {
        self.coeffs.get(&(i, j)).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Sets a coefficient; terms above the truncation order are dropped.
    pub fn set(&mut self, i: u32, j: u32, c: BigRational) {
        if i + j > self.order {
            return;
        }
        if c.is_zero() {
            self.coeffs.remove(&(i, j));
        } else {
            self.coeffs.insert((i, j), c);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Nonzero terms in graded-lex order: by total degree, then `x1^d` before `x1^{d-1} x2`.
    pub fn terms(&self) -> Vec<((u32, u32), BigRational)> {
        let mut v: Vec<_> = self.coeffs.iter().map(|(k, c)| (*k, c.clone())).collect();
        v.sort_by_key(|((i, j), _)| (i + j, std::cmp::Reverse(*i)));
        v
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::zero(self.order);
        if !c.is_zero() {
            for (k, v) in &self.coeffs {
                out.coeffs.insert(*k, v * c);
            }
        }
        out
    }

    fn check_order(&self, other: &Self) {
        assert_eq!(self.order, other.order, "series orders differ");
    }

    fn homogeneous(&self, d: u32) -> Vec<((u32, u32), BigRational)> {
        (0..=d)
            .filter_map(|i| self.coeffs.get(&(i, d - i)).map(|c| ((i, d - i), c.clone())))
            .collect()
    }

    /// `exp(self)`; the constant term must vanish.
    ///
    /// Uses the homogeneous recurrence `n E_n = Σ_{k=1}^{n} k a_k E_{n-k}`.
    pub fn exp(&self) -> Result<Self> {
        if self.coeffs.contains_key(&(0, 0)) {
            return Err(Error::Domain("exp of a series with nonzero constant term".into()));
        }
        let d = self.order;
        let parts: Vec<Series2> = (0..=d)
            .map(|k| {
                let mut s = Series2::zero(d);
                for ((i, j), c) in self.homogeneous(k) {
                    s.set(i, j, c);
                }
                s
            })
            .collect();
        let mut e: Vec<Series2> = vec![Series2::one(d)];
        for n in 1..=d {
            let mut acc = Series2::zero(d);
            for k in 1..=n {
                if parts[k as usize].is_zero() {
                    continue;
                }
                let t = &parts[k as usize] * &e[(n - k) as usize];
                acc = &acc + &t.scale(&rat(k as i64));
            }
            e.push(acc.scale(&BigRational::new(BigInt::one(), BigInt::from(n))));
        }
        Ok(e.iter().fold(Series2::zero(d), |a, b| &a + b))
    }

    /// The `x2 = 0` restriction.
    pub fn restrict_x2_zero(&self) -> Series1 {
        let coeffs = (0..=self.order).map(|i| self.coeff(i, 0)).collect();
        Series1 { coeffs }
    }
}

impl Add for &Series2 {
    type Output = Series2;
    fn add(self, rhs: &Series2) -> Series2 {
        self.check_order(rhs);
        let mut out = self.clone();
        for (k, c) in &rhs.coeffs {
            let v = out.coeff(k.0, k.1) + c;
            out.set(k.0, k.1, v);
        }
        out
    }
}

impl Neg for &Series2 {
    type Output = Series2;
    fn neg(self) -> Series2 {
        self.scale(&-BigRational::one())
    }
}

impl Sub for &Series2 {
    type Output = Series2;
    fn sub(self, rhs: &Series2) -> Series2 {
        self + &(-rhs)
    }
}

impl Mul for &Series2 {
    type Output = Series2;
    fn mul(self, rhs: &Series2) -> Series2 {
        self.check_order(rhs);
        let d = self.order;
        let mut acc: BTreeMap<(u32, u32), BigRational> = BTreeMap::new();
        for ((i, j), a) in &self.coeffs {
            for ((k, l), b) in &rhs.coeffs {
                if i + j + k + l > d {
                    continue;
                }
                let e = acc.entry((i + k, j + l)).or_insert_with(BigRational::zero);
                *e += a * b;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Series2 { order: d, coeffs: acc }
    }
}

impl fmt::Display for Series2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return write!(f, "0 + O({})", self.order + 1);
        }
        for (n, ((i, j), c)) in terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            if *i > 0 {
                write!(f, "*x1^{i}")?;
            }
            if *j > 0 {
                write!(f, "*x2^{j}")?;
            }
        }
        write!(f, " + O({})", self.order + 1)
    }
}

/// Univariate truncated series; `coeffs[n]` multiplies `x^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series1 {
    pub coeffs: Vec<BigRational>,
}

/// Series of `U` and `V` as functions of `(x1, x2)`.
///
/// Graded fixed-point iteration of `U = x1 e^{-2m(U-V)}`, `V = x2 e^{2m(U-V)}`;
/// each round fixes one more total degree. Returns the pair and the number of
/// rounds until the iterate stopped changing.
pub fn revert_uv_counted(m: &BigRational, order: u32) -> Result<(Series2, Series2, u32)> {
    if order < 1 {
        return Err(Error::InvalidArgument("series order must be >= 1".into()));
    }
    let x1 = Series2::x1(order);
    let x2 = Series2::x2(order);
    let two_m = m * rat(2);
    let (mut u, mut v) = (x1.clone(), x2.clone());
    let mut rounds = 0;
    loop {
        let w = (&u - &v).scale(&two_m);
        let nu = &x1 * &(-&w).exp()?;
        let nv = &x2 * &w.exp()?;
        if nu == u && nv == v {
            break;
        }
        rounds += 1;
        u = nu;
        v = nv;
        if rounds > order + 1 {
            return Err(Error::Convergence { iterations: rounds as usize, residual: f64::NAN });
        }
    }
    Ok((u, v, rounds))
}

pub fn revert_uv(m: &BigRational, order: u32) -> Result<(Series2, Series2)> {
    revert_uv_counted(m, order).map(|(u, v, _)| (u, v))
}

/// `Φ = U + V + m(U² + V²)` as a series in `(x1, x2)`.
pub fn potential_series(m: &BigRational, order: u32) -> Result<Series2> {
    let (u, v) = revert_uv(m, order)?;
    let sq = &(&u * &u) + &(&v * &v);
    Ok(&(&u + &v) + &sq.scale(m))
}

/// `e^{αΦ}` as a series in `(x1, x2)`.
pub fn exp_alpha_phi(m: &BigRational, alpha: &BigRational, order: u32) -> Result<Series2> {
    if m.is_negative() {
        return Err(Error::InvalidArgument("m must be >= 0".into()));
    }
    if !alpha.is_positive() {
        return Err(Error::InvalidArgument("alpha must be > 0".into()));
    }
    potential_series(m, order)?.scale(alpha).exp()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CalabiVerdict {
    pub order: u32,
    /// First strictly negative coefficient of `e^{αΦ} - 1` in graded-lex order.
    pub first_negative: Option<((u32, u32), BigRational)>,
}

pub fn calabi_verdict(m: &BigRational, alpha: &BigRational, order: u32) -> Result<CalabiVerdict> {
    let s = exp_alpha_phi(m, alpha, order)?;
    let first_negative = s
        .terms()
        .into_iter()
        .filter(|((i, j), _)| i + j > 0)
        .find(|(_, c)| c.is_negative());
    Ok(CalabiVerdict { order, first_negative })
}

/// `e^{αΦ} - 1` restricted to `z2 = 0`, as a series in `x = |z1|²`.
///
/// Computed independently of the two-variable reversion: on `z2 = 0` the
/// implicit relation reduces to `U = x e^{-2mU}` and `Φ = U + mU²`.
pub fn diastasis_1d(m: &BigRational, alpha: &BigRational, order: u32) -> Result<Series1> {
    if !alpha.is_positive() {
        return Err(Error::InvalidArgument("alpha must be > 0".into()));
    }
    if order < 1 {
        return Err(Error::InvalidArgument("series order must be >= 1".into()));
    }
    let n = order as usize;
    let mul = |a: &[BigRational], b: &[BigRational]| -> Vec<BigRational> {
        let mut c = vec![BigRational::zero(); n + 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate().take(n + 1 - i) {
                c[i + j] += x * y;
            }
        }
        c
    };
    let exp = |a: &[BigRational]| -> Vec<BigRational> {
        let mut e = vec![BigRational::zero(); n + 1];
        e[0] = BigRational::one();
        for k in 1..=n {
            let mut acc = BigRational::zero();
            for j in 1..=k {
                acc += rat(j as i64) * &a[j] * &e[k - j];
            }
            e[k] = acc / rat(k as i64);
        }
        e
    };
    let mut x = vec![BigRational::zero(); n + 1];
    x[1] = BigRational::one();
    let mut u = x.clone();
    for _ in 0..=n {
        let w: Vec<BigRational> = u.iter().map(|c| -(c * m * rat(2))).collect();
        u = mul(&x, &exp(&w));
    }
    let u2 = mul(&u, &u);
    let phi: Vec<BigRational> = u.iter().zip(&u2).map(|(a, b)| (a + b * m) * alpha).collect();
    let mut e = exp(&phi);
    e[0] = BigRational::zero();
    Ok(Series1 { coeffs: e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_literals() {
        assert_eq!(q("0.6"), BigRational::new(3.into(), 5.into()));
        assert_eq!(q("3/5"), q("0.6"));
        assert_eq!(q("-2"), rat(-2));
        assert_eq!(q("1e-3"), BigRational::new(1.into(), 1000.into()));
        assert_eq!(q("2.5E2"), rat(250));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn exp_of_zero_and_unit_product() {
        let z = Series2::zero(6);
        assert_eq!(z.exp().unwrap(), Series2::one(6));
        let a = &Series2::x1(6) + &Series2::x2(6).scale(&q("2/3"));
        assert_eq!(&a * &Series2::one(6), a);
        assert!(Series2::one(3).exp().is_err());
    }

    #[test]
    fn exp_of_x1_is_exponential() {
        let e = Series2::x1(6).exp().unwrap();
        let mut f = BigInt::one();
        for n in 0..=6u32 {
            if n > 0 {
                f *= BigInt::from(n);
            }
            assert_eq!(e.coeff(n, 0), BigRational::new(BigInt::one(), f.clone()));
        }
    }

    #[test]
    fn reversion_flat_and_low_order() {
        let (u, v) = revert_uv(&rat(0), 5).unwrap();
        assert_eq!(u, Series2::x1(5));
        assert_eq!(v, Series2::x2(5));
        let m = q("3/7");
        let (u, v) = revert_uv(&m, 4).unwrap();
        let two_m = &m * rat(2);
        assert_eq!(u.coeff(1, 0), rat(1));
        assert_eq!(u.coeff(2, 0), -two_m.clone());
        assert_eq!(u.coeff(1, 1), two_m.clone());
        assert_eq!(u.coeff(0, 1), rat(0));
        assert_eq!(v.coeff(1, 1), two_m.clone());
        assert_eq!(v.coeff(0, 2), -two_m);
    }

    #[test]
    fn reversion_back_substitution() {
        let m = rat(1);
        let d = 6;
        let (u, v, rounds) = revert_uv_counted(&m, d).unwrap();
        assert!(rounds <= d);
        let w = (&u - &v).scale(&rat(2));
        let x1 = &u * &w.exp().unwrap();
        let x2 = &v * &(-&w).exp().unwrap();
        assert_eq!(x1, Series2::x1(d));
        assert_eq!(x2, Series2::x2(d));
    }

    #[test]
    fn exp_alpha_phi_low_coefficients() {
        let (m, a) = (q("3/10"), q("7/4"));
        let s = exp_alpha_phi(&m, &a, 4).unwrap();
        assert_eq!(s.coeff(1, 0), a.clone());
        assert_eq!(s.coeff(0, 1), a.clone());
        assert_eq!(s.coeff(2, 0), &a * (&a / rat(2) - &m));
        assert_eq!(s.coeff(1, 1), &a * &a + rat(4) * &m * &a);
    }

    #[test]
    fn calabi_examples() {
        let v = calabi_verdict(&q("0.6"), &rat(1), 2).unwrap();
        assert_eq!(v.first_negative, Some(((2, 0), q("-1/10"))));
        for a in ["1", "5/2", "10"] {
            assert_eq!(calabi_verdict(&rat(0), &q(a), 8).unwrap().first_negative, None);
        }
        let s = exp_alpha_phi(&q("0.5"), &rat(1), 6).unwrap();
        assert_eq!(s.coeff(2, 0), rat(0));
    }

    #[test]
    fn flat_coefficients_positive() {
        let s = exp_alpha_phi(&rat(0), &q("3/2"), 8).unwrap();
        for i in 0..=8u32 {
            for j in 0..=(8 - i) {
                assert!(s.coeff(i, j) > rat(0));
            }
        }
    }

    #[test]
    fn diastasis_examples() {
        let d = diastasis_1d(&rat(1), &rat(1), 3).unwrap();
        assert_eq!(d.coeffs[1], rat(1));
        assert_eq!(d.coeffs[2], q("-1/2"));
        let d = diastasis_1d(&rat(0), &rat(1), 4).unwrap();
        assert_eq!(d.coeffs, vec![rat(0), rat(1), q("1/2"), q("1/6"), q("1/24")]);
    }

    #[test]
    fn graded_lex_ordering() {
        let s = exp_alpha_phi(&rat(1), &rat(1), 2).unwrap();
        let keys: Vec<_> = s.terms().into_iter().map(|(k, _)| k).collect();
        assert_eq!(keys, vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
    }

    fn small_series(order: u32) -> impl Strategy<Value = Series2> {
        prop::collection::vec((0u32..=3, 0u32..=3, -5i64..=5, 1i64..=4), 0..6).prop_map(move |ts| {
            let mut s = Series2::zero(order);
            for (i, j, n, d) in ts {
                if i + j == 0 {
                    continue;
                }
                let c = s.coeff(i, j) + BigRational::new(n.into(), d.into());
                s.set(i, j, c);
            }
            s
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn exp_inverse_pair(a in small_series(5)) {
            let p = &a.exp().unwrap() * &(-&a).exp().unwrap();
            prop_assert_eq!(p, Series2::one(5));
        }

        #[test]
        fn diastasis_is_restriction(mn in 0i64..8, an in 1i64..6, d in 1u32..6) {
            let m = BigRational::new(mn.into(), 4.into());
            let a = BigRational::new(an.into(), 2.into());
            let two = exp_alpha_phi(&m, &a, d).unwrap().restrict_x2_zero();
            let mut one = diastasis_1d(&m, &a, d).unwrap();
            one.coeffs[0] = rat(1);
            prop_assert_eq!(two, one);
        }
    }
}
