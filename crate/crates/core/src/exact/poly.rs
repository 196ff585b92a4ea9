//! Sparse multivariate polynomials over the integers.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub const NVARS: usize = 5;
pub type Exps = [u32; NVARS];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    M = 0,
    U = 1,
    V = 2,
    Alpha = 3,
    Y = 4,
}

impl Var {
    pub const ALL: [Var; NVARS] = [Var::M, Var::U, Var::V, Var::Alpha, Var::Y];

    pub fn name(self) -> &'static str {
        ["m", "U", "V", "a", "y"][self as usize]
    }

    fn from_name(s: &str) -> Option<Var> {
        match s {
            "m" => Some(Var::M),
            "U" | "u" => Some(Var::U),
            "V" | "v" => Some(Var::V),
            "a" | "alpha" => Some(Var::Alpha),
            "y" => Some(Var::Y),
            _ => None,
        }
    }
}

/// Terms keyed by exponent vector in lexicographic order; the last key is the
/// leading monomial. No stored coefficient is zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Exps, BigInt>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(BigInt::one())
    }

    pub fn constant<T: Into<BigInt>>(c: T) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert([0; NVARS], c);
        }
        Poly { terms }
    }

    pub fn var(v: Var) -> Self {
        Poly::monomial(BigInt::one(), unit(v, 1))
    }

    pub fn monomial(c: BigInt, e: Exps) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => self.terms.get(&[0; NVARS]).cloned(),
            _ => None,
        }
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &BigInt)> {
        self.terms.iter()
    }

    pub fn leading(&self) -> Option<(&Exps, &BigInt)> {
        self.terms.iter().next_back()
    }

    pub fn degree(&self, v: Var) -> u32 {
        self.terms.keys().map(|e| e[v as usize]).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn involves(&self, v: Var) -> bool {
        self.terms.keys().any(|e| e[v as usize] > 0)
    }

    fn add_term(&mut self, e: Exps, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(s) => {
                s.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(e, v)| (*e, v * c)).collect() }
    }

    pub fn mul_monomial(&self, c: &BigInt, e: &Exps) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(k, v)| {
                    let mut k2 = *k;
                    for i in 0..NVARS {
                        k2[i] += e[i];
                    }
                    (k2, v * c)
                })
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut out = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                out = &out * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        out
    }

    /// Positive gcd of the coefficients (zero for the zero polynomial).
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in self.terms.values() {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Exact division by a nonzero integer; `None` if some coefficient is not divisible.
    pub fn div_int(&self, c: &BigInt) -> Option<Poly> {
        let mut terms = BTreeMap::new();
        for (e, v) in &self.terms {
            let (q, r) = v.div_rem(c);
            if !r.is_zero() {
                return None;
            }
            terms.insert(*e, q);
        }
        Some(Poly { terms })
    }

    /// The polynomial divided by its content, with positive leading coefficient.
    pub fn primitive(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut c = self.content();
        if self.leading().unwrap().1.is_negative() {
            c = -c;
        }
        self.div_int(&c).unwrap()
    }

    pub fn leading_sign_negative(&self) -> bool {
        self.leading().is_some_and(|(_, c)| c.is_negative())
    }

    /// `Some(q)` with `self = q·d` over the integers, `None` when `d` does not divide.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = d.as_constant() {
            return self.div_int(&c);
        }
        let (de, dc) = d.leading().map(|(e, c)| (*e, c.clone())).unwrap();
        for v in Var::ALL {
            if d.degree(v) > self.degree(v) {
                return None;
            }
        }
        let mut r = self.clone();
        let mut q = Poly::zero();
        while let Some((re, rc)) = r.leading().map(|(e, c)| (*e, c.clone())) {
            let mut qe = [0; NVARS];
            for i in 0..NVARS {
                if re[i] < de[i] {
                    return None;
                }
                qe[i] = re[i] - de[i];
            }
            let (qc, rem) = rc.div_rem(&dc);
            if !rem.is_zero() {
                return None;
            }
            r = &r - &d.mul_monomial(&qc, &qe);
            q.add_term(qe, qc);
        }
        Some(q)
    }

    pub fn derivative(&self, v: Var) -> Poly {
        let i = v as usize;
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = *e;
                e2[i] -= 1;
                out.add_term(e2, c * BigInt::from(e[i]));
            }
        }
        out
    }

    /// Coefficients with respect to `v`, each free of `v`.
    pub fn coeffs_in(&self, v: Var) -> BTreeMap<u32, Poly> {
        let i = v as usize;
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut e2 = *e;
            e2[i] = 0;
            out.entry(e[i]).or_default().add_term(e2, c.clone());
        }
        out
    }

    pub fn from_coeffs_in(v: Var, coeffs: &BTreeMap<u32, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (d, p) in coeffs {
            for (e, c) in &p.terms {
                let mut e2 = *e;
                e2[v as usize] += d;
                out.add_term(e2, c.clone());
            }
        }
        out
    }

    /// Replaces `v` by `p`.
    pub fn substitute(&self, v: Var, p: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (d, c) in self.coeffs_in(v) {
            out = &out + &(&c * &p.pow(d));
        }
        out
    }

    pub fn eval(&self, vals: &[BigRational; NVARS]) -> BigRational {
        let mut s = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = BigRational::from_integer(c.clone());
            for i in 0..NVARS {
                if e[i] > 0 {
                    t *= num_traits::pow(vals[i].clone(), e[i] as usize);
                }
            }
            s += t;
        }
        s
    }

    pub fn eval_f64(&self, vals: &[f64; NVARS]) -> f64 {
        let mut s = 0.0;
        for (e, c) in &self.terms {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for i in 0..NVARS {
                if e[i] > 0 {
                    t *= vals[i].powi(e[i] as i32);
                }
            }
            s += t;
        }
        s
    }

    /// Value modulo the prime `p` at an integer point (residues in `[0, p)`).
    pub(crate) fn eval_mod(&self, pt: &[u64; NVARS], skip: Option<Var>, p: u64) -> BTreeMap<u32, u64> {
        let mut out: BTreeMap<u32, u64> = BTreeMap::new();
        let pb = BigInt::from(p);
        for (e, c) in &self.terms {
            let mut t = c.mod_floor(&pb).to_u64().unwrap();
            let mut key = 0;
            for i in 0..NVARS {
                if Some(Var::ALL[i]) == skip {
                    key = e[i];
                    continue;
                }
                t = mulmod(t, powmod(pt[i], e[i] as u64, p), p);
            }
            let slot = out.entry(key).or_insert(0);
            *slot = (*slot + t) % p;
        }
        out.retain(|_, v| *v != 0);
        out
    }

    /// Parses expressions over `m, U, V, a, y` with integer literals, `+ - * ^` and parentheses.
    pub fn parse(s: &str) -> Result<Poly> {
        let toks = tokenize(s)?;
        let mut p = Parser { toks, pos: 0 };
        let out = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(Error::InvalidArgument(format!("trailing input in polynomial '{s}'")));
        }
        Ok(out)
    }
}

pub(crate) fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub(crate) fn powmod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, p);
        }
        b = mulmod(b, b, p);
        e >>= 1;
    }
    r
}

fn unit(v: Var, d: u32) -> Exps {
    let mut e = [0; NVARS];
    e[v as usize] = d;
    e
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if n == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let vars: Vec<String> = (0..NVARS)
                .filter(|&i| e[i] > 0)
                .map(|i| {
                    let nm = Var::ALL[i].name();
                    if e[i] == 1 {
                        nm.to_string()
                    } else {
                        format!("{nm}^{}", e[i])
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{a}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let (mut big, small) = if self.terms.len() >= o.terms.len() { (self.clone(), o) } else { (o.clone(), self) };
        for (e, c) in &small.terms {
            big.add_term(*e, c.clone());
        }
        big
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(*e, -c);
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect() }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut out = Poly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let mut e = *ea;
                for i in 0..NVARS {
                    e[i] += eb[i];
                }
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr for Poly {
            type Output = Poly;
            fn $f(self, o: Poly) -> Poly { (&self).$f(&o) }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $f(self, o: &Poly) -> Poly { (&self).$f(o) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Var(Var),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let lit: String = cs[st..i].iter().collect();
            out.push(Tok::Num(lit.parse().unwrap()));
        } else if c.is_ascii_alphabetic() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_alphabetic() {
                i += 1;
            }
            let name: String = cs[st..i].iter().collect();
            let v = Var::from_name(&name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown variable '{name}' in '{s}'")))?;
            out.push(Tok::Var(v));
        } else if "+-*^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::InvalidArgument(format!("unexpected '{c}' in '{s}'")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = if self.eat('-') { -self.term()? } else { self.term()? };
        loop {
            if self.eat('+') {
                acc = acc + self.term()?;
            } else if self.eat('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.power()?;
        loop {
            if self.eat('*') {
                acc = acc * self.power()?;
            } else if matches!(self.peek(), Some(Tok::Var(_)) | Some(Tok::Num(_)) | Some(Tok::Op('('))) {
                acc = acc * self.power()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if self.eat('^') {
            match self.toks.get(self.pos).cloned() {
                Some(Tok::Num(n)) => {
                    self.pos += 1;
                    Ok(base.pow(n.to_u32().ok_or_else(|| Error::InvalidArgument("exponent too large".into()))?))
                }
                _ => Err(Error::InvalidArgument("expected integer exponent".into())),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Poly::constant(n))
            }
            Some(Tok::Var(v)) => {
                self.pos += 1;
                Ok(Poly::var(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::InvalidArgument("unbalanced parentheses".into()));
                }
                Ok(e)
            }
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(-self.atom()?)
            }
            other => Err(Error::InvalidArgument(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Poly {
        Poly::parse(s).unwrap()
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(p("(U+V)^2"), p("U^2 + 2*U*V + V^2"));
        assert_eq!(p("2m(U-V)"), p("2*m*U - 2*m*V"));
        assert_eq!(p("-3").as_constant(), Some(BigInt::from(-3)));
        assert_eq!(p("1 + 2*m*U").to_string(), "2*m*U + 1");
        assert!(Poly::parse("x+1").is_err());
        assert!(Poly::parse("(U").is_err());
    }

    #[test]
    fn exact_division() {
        let d = p("1+2m(U+V)");
        let q = p("U^3 - 7m*V + 2");
        assert_eq!((&d * &q).exact_div(&d), Some(q.clone()));
        assert_eq!((&d * &q + Poly::one()).exact_div(&d), None);
        assert_eq!(p("U^2-V^2").exact_div(&p("U-V")), Some(p("U+V")));
        assert_eq!(p("3U").exact_div(&p("2U")), None);
    }

    #[test]
    fn content_and_primitive() {
        let a = p("-6U^2 + 4V");
        assert_eq!(a.content(), BigInt::from(2));
        assert_eq!(a.primitive(), p("3U^2 - 2V"));
    }

    #[test]
    fn derivative_and_substitute() {
        let a = p("m*U^3 + V");
        assert_eq!(a.derivative(Var::U), p("3m*U^2"));
        assert_eq!(a.substitute(Var::U, &p("V+1")), p("m*(V+1)^3 + V"));
        assert_eq!(a.substitute(Var::M, &Poly::zero()), p("V"));
    }
}
