//! Rational functions with integer-polynomial numerator and denominator.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::gcd::gcd;
use super::poly::{Poly, Var, NVARS};
use crate::error::{Error, Result};

/// `num/den` in lowest terms with the leading coefficient of `den` positive.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let g = gcd(&num, &den);
        let (mut n, mut d) = (num.exact_div(&g).unwrap(), den.exact_div(&g).unwrap());
        if d.leading_sign_negative() {
            n = -n;
            d = -d;
        }
        if n.is_zero() {
            d = Poly::one();
        }
        Ok(RatFunc { num: n, den: d })
    }

    pub fn zero() -> Self {
        RatFunc { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        RatFunc::from(Poly::one())
    }

    pub fn int(c: i64) -> Self {
        RatFunc::from(Poly::constant(c))
    }

    pub fn var(v: Var) -> Self {
        RatFunc::from(Poly::var(v))
    }

    pub fn parse(num: &str, den: &str) -> Result<Self> {
        RatFunc::new(Poly::parse(num)?, Poly::parse(den)?)
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// Total number of stored terms in numerator and denominator.
    pub fn size(&self) -> usize {
        self.num.num_terms() + self.den.num_terms()
    }

    pub fn inv(&self) -> Result<RatFunc> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (mut n, mut d) = (self.den.clone(), self.num.clone());
        if d.leading_sign_negative() {
            n = -n;
            d = -d;
        }
        Ok(RatFunc { num: n, den: d })
    }

    pub fn div(&self, o: &RatFunc) -> Result<RatFunc> {
        Ok(self * &o.inv()?)
    }

    pub fn pow(&self, n: u32) -> RatFunc {
        RatFunc { num: self.num.pow(n), den: self.den.pow(n) }
    }

    pub fn scale_int(&self, c: i64) -> RatFunc {
        self * &RatFunc::int(c)
    }

    pub fn derivative(&self, v: Var) -> RatFunc {
        let dn = self.num.derivative(v);
        let dd = self.den.derivative(v);
        if dd.is_zero() {
            return RatFunc::new(dn, self.den.clone()).unwrap();
        }
        // d(n/d) = (n'·d - n·d')/d²; dividing through by g = gcd(d, d') first keeps sizes down.
        let g = gcd(&self.den, &dd);
        let dg = self.den.exact_div(&g).unwrap();
        let ddg = dd.exact_div(&g).unwrap();
        let top = &(&dn * &dg) - &(&self.num * &ddg);
        RatFunc::new(top, &self.den * &dg).unwrap()
    }

    pub fn substitute(&self, v: Var, p: &Poly) -> Result<RatFunc> {
        RatFunc::new(self.num.substitute(v, p), self.den.substitute(v, p))
    }

    pub fn eval(&self, vals: &[BigRational; NVARS]) -> Result<BigRational> {
        let d = self.den.eval(vals);
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.num.eval(vals) / d)
    }

    pub fn eval_f64(&self, vals: &[f64; NVARS]) -> f64 {
        self.num.eval_f64(vals) / self.den.eval_f64(vals)
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        let n = self.num.as_constant()?;
        let d = self.den.as_constant()?;
        Some(BigRational::new(n, d))
    }
}

impl From<Poly> for RatFunc {
    fn from(p: Poly) -> Self {
        RatFunc { num: p, den: Poly::one() }
    }
}

impl From<BigRational> for RatFunc {
    fn from(q: BigRational) -> Self {
        RatFunc::new(Poly::constant(q.numer().clone()), Poly::constant(q.denom().clone())).unwrap()
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl Add for &RatFunc {
    type Output = RatFunc;
    fn add(self, o: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            return RatFunc::new(&self.num + &o.num, self.den.clone()).unwrap();
        }
        let g = gcd(&self.den, &o.den);
        if g.is_one() {
            return RatFunc {
                num: &(&self.num * &o.den) + &(&o.num * &self.den),
                den: &self.den * &o.den,
            };
        }
        let b1 = self.den.exact_div(&g).unwrap();
        let d1 = o.den.exact_div(&g).unwrap();
        let t = &(&self.num * &d1) + &(&o.num * &b1);
        if t.is_zero() {
            return RatFunc::zero();
        }
        let g2 = gcd(&t, &g);
        let num = t.exact_div(&g2).unwrap();
        let den = &b1 * &o.den.exact_div(&g2).unwrap();
        RatFunc::new(num, den).unwrap()
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }
}

impl Sub for &RatFunc {
    type Output = RatFunc;
    fn sub(self, o: &RatFunc) -> RatFunc {
        self + &(-o)
    }
}

impl Mul for &RatFunc {
    type Output = RatFunc;
    fn mul(self, o: &RatFunc) -> RatFunc {
        if self.is_zero() || o.is_zero() {
            return RatFunc::zero();
        }
        let g1 = gcd(&self.num, &o.den);
        let g2 = gcd(&o.num, &self.den);
        let num = &self.num.exact_div(&g1).unwrap() * &o.num.exact_div(&g2).unwrap();
        let den = &self.den.exact_div(&g2).unwrap() * &o.den.exact_div(&g1).unwrap();
        let (mut num, mut den) = (num, den);
        if den.leading_sign_negative() {
            num = -num;
            den = -den;
        }
        RatFunc { num, den }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr for RatFunc {
            type Output = RatFunc;
            fn $f(self, o: RatFunc) -> RatFunc { (&self).$f(&o) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        -&self
    }
}

impl Zero for RatFunc {
    fn zero() -> Self {
        RatFunc::zero()
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl One for RatFunc {
    fn one() -> Self {
        RatFunc::one()
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rf(n: &str, d: &str) -> RatFunc {
        RatFunc::parse(n, d).unwrap()
    }

    #[test]
    fn normalization() {
        assert_eq!(rf("U^2-V^2", "U-V"), rf("U+V", "1"));
        assert_eq!(rf("2U", "-4V"), rf("-U", "2V"));
        assert_eq!(rf("0", "U+3"), RatFunc::zero());
        assert!(RatFunc::parse("1", "0").is_err());
        assert!(RatFunc::zero().inv().is_err());
    }

    #[test]
    fn derivative_of_reciprocal() {
        let f = rf("1", "1+2m(U+V)");
        assert_eq!(f.derivative(Var::U), rf("-2m", "(1+2m(U+V))^2"));
        let g = rf("U^3", "(1+2m(U+V))^4");
        let want = rf("3U^2*(1+2m(U+V)) - 8m*U^3", "(1+2m(U+V))^5");
        assert_eq!(g.derivative(Var::U), want);
    }

    #[test]
    fn field_operations() {
        let a = rf("U", "1+m*V");
        let b = rf("V", "(1+m*V)^2");
        let s = &a + &b;
        assert_eq!(s, rf("U + m*U*V + V", "(1+m*V)^2"));
        assert_eq!(&(&s - &b) - &a, RatFunc::zero());
        assert_eq!(&a * &a.inv().unwrap(), RatFunc::one());
        assert_eq!(a.div(&b).unwrap(), rf("U*(1+m*V)", "V"));
    }

    fn arb_poly() -> impl Strategy<Value = Poly> {
        prop::collection::vec((-4i64..=4, 0u32..3, 0u32..3, 0u32..2), 1..5).prop_map(|ts| {
            let mut p = Poly::zero();
            for (c, a, b, m) in ts {
                p = &p + &Poly::monomial(BigInt::from(c), [m, a, b, 0, 0]);
            }
            p
        })
    }

    fn arb_rf() -> impl Strategy<Value = RatFunc> {
        (arb_poly(), arb_poly()).prop_filter_map("nonzero den", |(n, d)| RatFunc::new(n, d).ok())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn evaluation_commutes_with_normalization(a in arb_rf(), b in arb_rf(), c in arb_rf()) {
            let pt = [rat(3, 7), rat(-5, 3), rat(11, 13), rat(1, 1), rat(2, 1)];
            let expr = &(&a * &b) + &(&c - &a);
            let lhs = expr.eval(&pt);
            let raw = |r: &RatFunc| r.num().eval(&pt) / r.den().eval(&pt);
            if let (Ok(l), true, true, true) = (lhs, !a.den().eval(&pt).is_zero(), !b.den().eval(&pt).is_zero(), !c.den().eval(&pt).is_zero()) {
                prop_assert_eq!(l, raw(&a) * raw(&b) + raw(&c) - raw(&a));
            }
        }

        #[test]
        fn lowest_terms(a in arb_rf(), b in arb_rf()) {
            let s = &a * &b;
            prop_assert!(gcd(s.num(), s.den()).as_constant().is_some());
            prop_assert!(!s.den().leading_sign_negative());
            let t = &a + &b;
            prop_assert!(gcd(t.num(), t.den()).as_constant().is_some());
            prop_assert_eq!(&(&t - &b), &a);
        }
    }
}
