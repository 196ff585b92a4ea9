//! Multivariate polynomial gcd over the integers.
//!
//! Order of attempts: trivial cases, one argument dividing the other, a
//! modular coprimality certificate, then the subresultant remainder sequence
//! recursively in one variable at a time.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use super::poly::{mulmod, powmod, Poly, Var, NVARS};

const PRIME: u64 = 0x1fff_ffff_ffff_ffff; // 2^61 - 1

/// Greatest common divisor with positive leading coefficient (zero iff both are zero).
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.primitive_with_content();
    }
    if b.is_zero() {
        return a.primitive_with_content();
    }
    let (ca, cb) = (a.as_constant(), b.as_constant());
    if ca.is_some() || cb.is_some() {
        return Poly::constant(a.content().gcd(&b.content()));
    }
    let ic = a.content().gcd(&b.content());
    let (pa, pb) = (a.primitive(), b.primitive());
    if pa == pb {
        return pa.scale(&ic);
    }
    if pb.exact_div(&pa).is_some() {
        return pa.scale(&ic);
    }
    if pa.exact_div(&pb).is_some() {
        return pb.scale(&ic);
    }
    if certified_coprime(&pa, &pb) {
        return Poly::constant(ic);
    }
    gcd_primitive(&pa, &pb).scale(&ic)
}

trait PrimitiveWithContent {
    fn primitive_with_content(&self) -> Poly;
}

impl PrimitiveWithContent for Poly {
    fn primitive_with_content(&self) -> Poly {
        if self.leading_sign_negative() {
            -self
        } else {
            self.clone()
        }
    }
}

/// True only if `a` and `b` provably share no factor of positive degree.
///
/// A common factor must involve some variable `v` present in both. At a point
/// where the leading coefficients in `v` do not vanish mod p, that factor maps
/// to a common factor of positive degree of the univariate images, so a
/// constant image gcd for every shared variable rules it out.
fn certified_coprime(a: &Poly, b: &Poly) -> bool {
    let shared: Vec<Var> = Var::ALL.iter().copied().filter(|&v| a.involves(v) && b.involves(v)).collect();
    if shared.is_empty() {
        return true;
    }
    let mut seed = 0x9e37_79b9_7f4a_7c15u64;
    for v in shared {
        let mut ok = false;
        for _ in 0..4 {
            let mut pt = [0u64; NVARS];
            for x in pt.iter_mut() {
                seed ^= seed << 13;
                seed ^= seed >> 7;
                seed ^= seed << 17;
                *x = seed % PRIME;
            }
            let ia = a.eval_mod(&pt, Some(v), PRIME);
            let ib = b.eval_mod(&pt, Some(v), PRIME);
            if ia.keys().next_back() != Some(&a.degree(v)) || ib.keys().next_back() != Some(&b.degree(v)) {
                continue;
            }
            if univariate_gcd_degree(ia, ib) > 0 {
                return false;
            }
            ok = true;
            break;
        }
        if !ok {
            return false;
        }
    }
    true
}

fn univariate_gcd_degree(a: BTreeMap<u32, u64>, b: BTreeMap<u32, u64>) -> u32 {
    // Dense coefficient vectors over F_p, trailing entry nonzero (empty = zero polynomial).
    let to_vec = |m: BTreeMap<u32, u64>| {
        let d = m.keys().next_back().map_or(0, |&d| d as usize + 1);
        let mut v = vec![0u64; d];
        for (k, c) in m {
            v[k as usize] = c;
        }
        v
    };
    let (mut x, mut y) = (to_vec(a), to_vec(b));
    while !y.is_empty() {
        let inv = powmod(*y.last().unwrap(), PRIME - 2, PRIME);
        while x.len() >= y.len() {
            let f = mulmod(*x.last().unwrap(), inv, PRIME);
            let shift = x.len() - y.len();
            for (i, c) in y.iter().enumerate() {
                let t = mulmod(f, *c, PRIME);
                x[i + shift] = (x[i + shift] + PRIME - t) % PRIME;
            }
            while x.last() == Some(&0) {
                x.pop();
            }
        }
        std::mem::swap(&mut x, &mut y);
    }
    x.len().saturating_sub(1) as u32
}

fn main_var(a: &Poly, b: &Poly) -> Var {
    *Var::ALL.iter().find(|&&v| a.involves(v) || b.involves(v)).expect("non-constant input")
}

/// Content with respect to `v`: gcd of the coefficients in `v`.
fn content_in(p: &Poly, v: Var) -> Poly {
    let mut g = Poly::zero();
    for c in p.coeffs_in(v).values() {
        g = gcd(&g, c);
        if g.as_constant().is_some_and(|c| c.is_one()) {
            break;
        }
    }
    g
}

fn lc_in(p: &Poly, v: Var) -> Poly {
    p.coeffs_in(v).into_iter().next_back().map(|(_, c)| c).unwrap_or_default()
}

/// `lc(b)^{deg a - deg b + 1}·a` reduced modulo `b` in `v`.
fn prem(a: &Poly, b: &Poly, v: Var) -> Poly {
    let db = b.degree(v);
    let da = a.degree(v);
    let lb = lc_in(b, v);
    let mut r = a.clone();
    let mut steps = 0;
    while !r.is_zero() && r.degree(v) >= db {
        let dr = r.degree(v);
        let lr = lc_in(&r, v);
        let mut e = [0; NVARS];
        e[v as usize] = dr - db;
        r = &(&lb * &r) - &(&lr * &b.mul_monomial(&BigInt::one(), &e));
        steps += 1;
    }
    let need = da + 1 - db;
    if steps < need {
        r = &r * &lb.pow(need - steps);
    }
    r
}

fn gcd_primitive(a: &Poly, b: &Poly) -> Poly {
    let v = main_var(a, b);
    if !a.involves(v) {
        return gcd(a, &content_in(b, v));
    }
    if !b.involves(v) {
        return gcd(&content_in(a, v), b);
    }
    let (ca, cb) = (content_in(a, v), content_in(b, v));
    let c = gcd(&ca, &cb);
    let mut x = a.exact_div(&ca).expect("content divides");
    let mut y = b.exact_div(&cb).expect("content divides");
    if x.degree(v) < y.degree(v) {
        std::mem::swap(&mut x, &mut y);
    }
    let mut g = Poly::one();
    let mut h = Poly::one();
    loop {
        let delta = x.degree(v) - y.degree(v);
        let r = prem(&x, &y, v);
        if r.is_zero() {
            break;
        }
        if r.degree(v) == 0 {
            return c.primitive_with_content();
        }
        let denom = &g * &h.pow(delta);
        let next = r.exact_div(&denom).expect("subresultant division is exact");
        x = y;
        y = next;
        g = lc_in(&x, v);
        h = if delta == 0 {
            h
        } else {
            g.pow(delta).exact_div(&h.pow(delta - 1)).expect("subresultant division is exact")
        };
    }
    let pp = y.exact_div(&content_in(&y, v)).expect("content divides");
    (&c * &pp).primitive_with_content()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Poly {
        Poly::parse(s).unwrap()
    }

    #[test]
    fn basic_gcds() {
        assert_eq!(gcd(&p("U^2-V^2"), &p("U^2+2U*V+V^2")), p("U+V"));
        assert_eq!(gcd(&p("6U"), &p("4U^2")), p("2U"));
        assert_eq!(gcd(&p("U+1"), &p("V+1")), Poly::one());
        assert_eq!(gcd(&Poly::zero(), &p("-3U")), p("3U"));
    }

    #[test]
    fn hidden_common_factor() {
        let f = p("1+2m(U+V)");
        let a = &f * &p("U^3 + m*V - 1");
        let b = &f.pow(2) * &p("U*V + 3m");
        assert_eq!(gcd(&a, &b), f);
        let g = p("m*U - V^2 + 2");
        let a = &g.pow(2) * &p("U + V + m");
        let b = &g * &p("U - m^2");
        assert_eq!(gcd(&a, &b), g);
    }

    #[test]
    fn gcd_with_several_variables() {
        let f = p("a*y + m - 1");
        let a = &f * &p("y^2 + a");
        let b = &f * &p("m*y - a^2");
        assert_eq!(gcd(&a, &b), f);
        let c = p("3*(U*V + 1)");
        assert_eq!(gcd(&(&c * &p("U")), &(&c * &p("V"))), c);
    }
}
