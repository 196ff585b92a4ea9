//! Exact identities: det g = 1, the curvature components, |R|², Δ|R|², and the
//! quadratic satisfied by the first two monomial norms.

use rayon::prelude::*;

use super::poly::{Poly, Var};
use super::ratfunc::RatFunc;
use super::scalar::{tag_string, Coord, ExactScalar, Tag};

pub type ExactMat = [[ExactScalar; 2]; 2];
pub type ExactRiemann = [[[[ExactScalar; 2]; 2]; 2]; 2];

/// A deliberate single-sign corruption used to check that the identities bite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    None,
    /// Flip the sign of `g_{12̄}`.
    MetricOffDiagonal,
    /// Flip the sign of `R_{11̄11̄}`.
    CurvatureR1111,
}

fn p(s: &str) -> Poly {
    Poly::parse(s).expect("valid literal polynomial")
}

fn rf(n: &str, d: &str) -> RatFunc {
    RatFunc::new(p(n), p(d)).expect("nonzero literal denominator")
}

const D: &str = "(1+2m*(U+V))";

/// The metric as displayed: `g_{11̄} = (1+4mVk)/(DE)`, `g_{12̄} = 4mk/D·z̄1z2`,
/// `g_{22̄} = (1+4mUk)E/D` with `k = 1+m(U+V)`.
pub fn exact_metric() -> ExactMat {
    let k = "(1+m*U+m*V)";
    let g11 = ExactScalar::term((-1, 0, 0), rf(&format!("1+4m*V*{k}"), D));
    let g12 = ExactScalar::term((0, -1, 1), rf(&format!("4m*{k}"), D));
    let g22 = ExactScalar::term((1, 0, 0), rf(&format!("1+4m*U*{k}"), D));
    let g21 = g12.conj();
    [[g11, g12], [g21, g22]]
}

/// `g_{ij̄} = ∂_i ∂_{j̄} Φ` with `Φ = U + V + m(U² + V²)`.
pub fn exact_metric_from_potential() -> ExactMat {
    let phi = ExactScalar::radial(rf("U+V+m*(U^2+V^2)", "1"));
    let hol = [Coord::Z1, Coord::Z2];
    let anti = [Coord::Z1Bar, Coord::Z2Bar];
    let e = |i: usize, j: usize| phi.dz(anti[j]).dz(hol[i]);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn mutated_metric(mutation: Mutation) -> ExactMat {
    let mut g = exact_metric();
    if mutation == Mutation::MetricOffDiagonal {
        g[0][1] = -&g[0][1];
    }
    g
}

pub fn det(g: &ExactMat) -> ExactScalar {
    &(&g[0][0] * &g[1][1]) - &(&g[0][1] * &g[1][0])
}

/// Adjugate divided by the determinant; `None` unless the determinant is untagged and nonzero.
pub fn inverse(g: &ExactMat) -> Option<ExactMat> {
    let d = det(g).as_radial()?;
    let inv = d.inv().ok()?;
    Some([
        [g[1][1].scale(&inv), (-&g[0][1]).scale(&inv)],
        [(-&g[1][0]).scale(&inv), g[0][0].scale(&inv)],
    ])
}

#[derive(Clone, Debug)]
pub struct DetReport {
    /// `det g - 1` normalizes to zero.
    pub zero_remainder: bool,
    pub remainder: ExactScalar,
    /// Term count and total polynomial size of the unsimplified product `g11·g22`.
    pub product_terms: usize,
    pub product_size: usize,
    /// The displayed metric agrees with `∂∂̄Φ` entry by entry.
    pub matches_potential_hessian: bool,
}

pub fn exact_verify_det(mutation: Mutation) -> DetReport {
    let g = mutated_metric(mutation);
    let prod = &g[0][0] * &g[1][1];
    let remainder = &det(&g) - &ExactScalar::constant(1);
    let h = exact_metric_from_potential();
    let matches = (0..2).all(|i| (0..2).all(|j| g[i][j] == h[i][j]));
    DetReport {
        zero_remainder: remainder.is_zero(),
        remainder,
        product_terms: prod.num_terms(),
        product_size: prod.size(),
        matches_potential_hessian: matches,
    }
}

/// `R_{ij̄kl̄} = -∂_k∂_{j̄} g_{il̄} + Σ_{pq} (g⁻¹)_{pq} ∂_k g_{ip̄} ∂_{j̄} g_{ql̄}`.
pub fn curvature_tensor(g: &ExactMat, ginv: &ExactMat) -> ExactRiemann {
    let hol = [Coord::Z1, Coord::Z2];
    let anti = [Coord::Z1Bar, Coord::Z2Bar];
    let idx: Vec<(usize, usize, usize, usize)> = (0..16).map(|n| (n >> 3 & 1, n >> 2 & 1, n >> 1 & 1, n & 1)).collect();
    let comps: Vec<ExactScalar> = idx
        .par_iter()
        .map(|&(i, j, k, l)| {
            let mut acc = -&g[i][l].dz(anti[j]).dz(hol[k]);
            for pp in 0..2 {
                let a = g[i][pp].dz(hol[k]);
                for q in 0..2 {
                    let b = g[q][l].dz(anti[j]);
                    acc = &acc + &(&(&ginv[pp][q] * &a) * &b);
                }
            }
            acc
        })
        .collect();
    let mut r: ExactRiemann = Default::default();
    for (n, c) in comps.into_iter().enumerate() {
        let (i, j, k, l) = idx[n];
        r[i][j][k][l] = c;
    }
    r
}

pub fn ricci(r: &ExactRiemann, ginv: &ExactMat) -> ExactMat {
    let mut ric: ExactMat = Default::default();
    for k in 0..2 {
        for l in 0..2 {
            let mut acc = ExactScalar::zero();
            for i in 0..2 {
                for j in 0..2 {
                    acc = &acc + &(&ginv[j][i] * &r[i][j][k][l]);
                }
            }
            ric[k][l] = acc;
        }
    }
    ric
}

/// One curvature family: a representative display and the components it equals.
#[derive(Clone, Debug)]
pub struct Family {
    pub name: &'static str,
    /// Zero-based `(i, j, k, l, conjugated)` for `R_{ij̄kl̄}`; the first entry is the representative.
    pub members: Vec<(usize, usize, usize, usize, bool)>,
    pub printed: ExactScalar,
}

/// The seven displayed component families, transcribed as printed.
pub fn printed_families() -> Vec<Family> {
    let d5 = format!("{D}^5");
    let r1111 = ExactScalar::term(
        (-2, 0, 0),
        rf(
            "4m*(16m^4*V*(V^3-4U*V^2+U^2*V) + 32m^3*V^2*(V-2U) + 8m^2*V*(3V-2U) + 8m*V + 1)",
            &d5,
        ),
    );
    let r1112 = ExactScalar::term(
        (-1, 1, -1),
        rf("8m^2*(8m^3*V*(V^2-4U*V+U^2) + 4m^2*V*(V-5U) - 2m*(V+2U) - 1)", &d5),
    );
    let r1122 = ExactScalar::term(
        (0, 0, 0),
        rf(
            "4m*(16m^4*U*V*(U^2+V^2-4U*V) - 16m^3*U*V*(U+V) - 4m^2*(U^2+V^2+4U*V) - 4m*(U+V) - 1)",
            &d5,
        ),
    );
    let r1212 = ExactScalar::term((0, -2, 1), rf("32m^3*(2m^2*(V^2+U^2-4U*V) - 2m*(U+V) - 1)", &d5));
    let r2221 = ExactScalar::term(
        (1, -1, 1),
        rf("8m^2*(8m^3*U*(U^2-4V*U+V^2) + 4m^2*U*(U-5V) - 2m*(U+2V) - 1)", &d5),
    );
    let r2222 = ExactScalar::term(
        (2, 0, 0),
        rf(
            "4m*(16m^4*U*(U^3-4V*U^2+V^2*U) + 32m^3*U^2*(U-2V) + 8m^2*U*(3U-2V) + 8m*U + 1)",
            &d5,
        ),
    );
    vec![
        Family { name: "R_{1 1b 1 1b}", members: vec![(0, 0, 0, 0, false)], printed: r1111 },
        Family {
            name: "R_{1 1b 1 2b}",
            members: vec![(0, 0, 0, 1, false), (0, 1, 0, 0, false), (1, 0, 0, 0, true), (0, 0, 1, 0, true)],
            printed: r1112,
        },
        Family {
            name: "R_{1 1b 2 2b}",
            members: vec![(0, 0, 1, 1, false), (1, 1, 0, 0, false), (0, 1, 1, 0, false), (1, 0, 0, 1, false)],
            printed: r1122,
        },
        Family { name: "R_{1 2b 1 2b}", members: vec![(0, 1, 0, 1, false)], printed: r1212.clone() },
        Family { name: "R_{2 1b 2 1b}", members: vec![(1, 0, 1, 0, false)], printed: r1212.conj() },
        Family {
            name: "R_{2 2b 2 1b}",
            members: vec![(1, 1, 1, 0, false), (1, 0, 1, 1, false), (0, 1, 1, 1, true), (1, 1, 0, 1, true)],
            printed: r2221,
        },
        Family { name: "R_{2 2b 2 2b}", members: vec![(1, 1, 1, 1, false)], printed: r2222 },
    ]
}

#[derive(Clone, Debug)]
pub struct FamilyReport {
    pub name: &'static str,
    /// Computed representative equals the display exactly.
    pub identity_holds: bool,
    /// The rational coefficient agrees (ignoring the `E^k z`-monomial tag).
    pub rational_part_matches: bool,
    pub computed_tag: String,
    pub printed_tag: String,
    /// All listed equalities between components hold.
    pub equalities_hold: bool,
    /// `computed - printed`, empty when zero.
    pub remainder: String,
    pub computed: ExactScalar,
}

#[derive(Clone, Debug)]
pub struct CurvatureReport {
    pub families: Vec<FamilyReport>,
    pub ricci_zero: bool,
    pub all_identities_hold: bool,
    pub tensor: ExactRiemann,
    pub ginv: ExactMat,
}

fn get(r: &ExactRiemann, (i, j, k, l, c): (usize, usize, usize, usize, bool)) -> ExactScalar {
    if c {
        r[i][j][k][l].conj()
    } else {
        r[i][j][k][l].clone()
    }
}

fn single_tag(s: &ExactScalar) -> (Option<Tag>, Option<RatFunc>) {
    match s.single() {
        Some((t, f)) => (Some(t), Some(f.clone())),
        None => (None, None),
    }
}

pub fn exact_curvature(mutation: Mutation) -> CurvatureReport {
    let g = mutated_metric(mutation);
    let ginv = inverse(&g).expect("metric determinant is untagged and nonzero");
    let mut r = curvature_tensor(&g, &ginv);
    if mutation == Mutation::CurvatureR1111 {
        r[0][0][0][0] = -&r[0][0][0][0];
    }
    let ric = ricci(&r, &ginv);
    let ricci_zero = ric.iter().flatten().all(ExactScalar::is_zero);
    let families: Vec<FamilyReport> = printed_families()
        .into_par_iter()
        .map(|fam| {
            let computed = get(&r, fam.members[0]);
            let equalities_hold = fam.members.iter().all(|&m| get(&r, m) == computed);
            let diff = &computed - &fam.printed;
            let (ct, cf) = single_tag(&computed);
            let (pt, pf) = single_tag(&fam.printed);
            FamilyReport {
                name: fam.name,
                identity_holds: diff.is_zero(),
                rational_part_matches: cf.is_some() && cf == pf,
                computed_tag: ct.map(tag_string).unwrap_or_else(|| format!("{} terms", computed.num_terms())),
                printed_tag: pt.map(tag_string).unwrap_or_default(),
                equalities_hold,
                remainder: if diff.is_zero() { String::new() } else { diff.to_string() },
                computed,
            }
        })
        .collect();
    let all = families.iter().all(|f| f.identity_holds && f.equalities_hold);
    CurvatureReport { families, ricci_zero, all_identities_hold: all, tensor: r, ginv }
}

/// `Σ g^{pī} g^{jq̄} g^{rk̄} g^{ls̄} R_{ij̄kl̄} conj(R_{pq̄rs̄})`, raising one index at a time.
pub fn norm_squared(r: &ExactRiemann, h: &ExactMat) -> ExactScalar {
    let mut t = r.clone();
    for axis in 0..4 {
        let mut next: ExactRiemann = Default::default();
        for n in 0..16 {
            let idx = [n >> 3 & 1, n >> 2 & 1, n >> 1 & 1, n & 1];
            let mut acc = ExactScalar::zero();
            for x in 0..2 {
                let mut src = idx;
                src[axis] = x;
                let w = if axis % 2 == 0 { &h[idx[axis]][x] } else { &h[x][idx[axis]] };
                acc = &acc + &(w * &t[src[0]][src[1]][src[2]][src[3]]);
            }
            next[idx[0]][idx[1]][idx[2]][idx[3]] = acc;
        }
        t = next;
    }
    let mut s = ExactScalar::zero();
    for n in 0..16 {
        let [i, j, k, l] = [n >> 3 & 1, n >> 2 & 1, n >> 1 & 1, n & 1];
        s = &s + &(&t[i][j][k][l] * &r[i][j][k][l].conj());
    }
    s
}

/// `Δf = Σ (g⁻¹)_{ji} (δ_ij f_i + z̄_i z_j f_ij)` for radial `f`, `f_i = ∂f/∂x_i`.
pub fn radial_laplacian(f: &RatFunc, h: &ExactMat) -> ExactScalar {
    let f = ExactScalar::radial(f.clone());
    let d = [f.dx(0), f.dx(1)];
    let dd = [[d[0].dx(0), d[0].dx(1)], [d[1].dx(0), d[1].dx(1)]];
    let mut s = ExactScalar::zero();
    for i in 0..2 {
        for j in 0..2 {
            let zbar_i = if i == 0 { ExactScalar::monomial(-1, 0) } else { ExactScalar::monomial(0, -1) };
            let z_j = if j == 0 { ExactScalar::monomial(1, 0) } else { ExactScalar::monomial(0, 1) };
            let zz = &zbar_i * &z_j;
            let mut inner = &zz * &dd[i][j];
            if i == j {
                inner = &inner + &d[i];
            }
            s = &s + &(&h[j][i] * &inner);
        }
    }
    s
}

#[derive(Clone, Debug)]
pub struct InvariantsReport {
    pub norm_r2: RatFunc,
    pub lap_r2: RatFunc,
    /// Both contractions reduced to a single untagged term.
    pub fully_contracted: bool,
    pub norm_printed: RatFunc,
    pub norm_matches_printed: bool,
    pub norm_contracted_form: RatFunc,
    pub norm_matches_contracted_form: bool,
    pub lap_printed: RatFunc,
    pub lap_matches_printed: bool,
    pub lap_contracted_form: RatFunc,
    pub lap_matches_contracted_form: bool,
    /// `Δ|R|²` at `U = V = 0` (a polynomial in m).
    pub lap_origin: RatFunc,
    pub lap_origin_printed: RatFunc,
    /// `f_{x1}(0) + f_{x2}(0) = (∂_U + ∂_V) f` at the origin for `f = |R|²`.
    pub lap_origin_hand: RatFunc,
    /// Sum of `|R_{ij̄kl̄}|²` at the origin, where `g` is the identity.
    pub origin_brute_force: RatFunc,
    pub norm_remainder_vs_printed: String,
    pub lap_remainder_vs_printed: String,
}

fn at_origin(f: &RatFunc) -> RatFunc {
    f.substitute(Var::U, &Poly::zero())
        .and_then(|g| g.substitute(Var::V, &Poly::zero()))
        .expect("denominator nonzero at the origin")
}

pub fn exact_invariants_from(curv: &CurvatureReport) -> InvariantsReport {
    let h = &curv.ginv;
    let n = norm_squared(&curv.tensor, h);
    let norm_pure = n.as_radial();
    let norm_r2 = norm_pure.clone().unwrap_or_else(RatFunc::zero);
    let lap = radial_laplacian(&norm_r2, h);
    let lap_pure = lap.as_radial();
    let lap_r2 = lap_pure.clone().unwrap_or_else(RatFunc::zero);
    let norm_printed = rf("96m^2", &format!("{D}^8"));
    let norm_contracted_form = rf("96m^2", &format!("{D}^6"));
    let lap_printed = rf("3072m^3*(7m*(U+V)-1)", &format!("{D}^11"));
    let lap_contracted_form = rf("2304m^3*(5m*(U+V)-1)", &format!("{D}^9"));
    let lap_origin_hand = at_origin(&(&norm_r2.derivative(Var::U) + &norm_r2.derivative(Var::V)));
    let mut brute = RatFunc::zero();
    for c in curv.tensor.iter().flatten().flatten().flatten() {
        let mut v = RatFunc::zero();
        for (&(_, n1, n2), f) in c.terms() {
            if n1 == 0 && n2 == 0 {
                v = &v + &at_origin(f);
            }
        }
        brute = &brute + &(&v * &v);
    }
    let diff = |a: &RatFunc, b: &RatFunc| {
        let d = a - b;
        if d.is_zero() {
            String::new()
        } else {
            d.to_string()
        }
    };
    InvariantsReport {
        fully_contracted: norm_pure.is_some() && lap_pure.is_some(),
        norm_matches_printed: norm_r2 == norm_printed,
        norm_matches_contracted_form: norm_r2 == norm_contracted_form,
        lap_matches_printed: lap_r2 == lap_printed,
        lap_matches_contracted_form: lap_r2 == lap_contracted_form,
        lap_origin: at_origin(&lap_r2),
        lap_origin_printed: at_origin(&lap_printed),
        lap_origin_hand,
        origin_brute_force: brute,
        norm_remainder_vs_printed: diff(&norm_r2, &norm_printed),
        lap_remainder_vs_printed: diff(&lap_r2, &lap_printed),
        norm_r2,
        lap_r2,
        norm_printed,
        norm_contracted_form,
        lap_printed,
        lap_contracted_form,
    }
}

pub fn exact_invariants() -> InvariantsReport {
    exact_invariants_from(&exact_curvature(Mutation::None))
}

#[derive(Clone, Debug)]
pub struct HQuadratic {
    /// `4m²α·h_α = a2·y² + a1·y + a0` with `y = I(0,0,0)`.
    pub a2: RatFunc,
    pub a1: RatFunc,
    pub a0: RatFunc,
    /// `(a1/2)² - a2·a0`.
    pub discriminant: RatFunc,
    pub expected_discriminant: RatFunc,
    pub discriminant_matches: bool,
    /// The three coefficients equal `-4m²α+α³+4mα²`, `2(4m²-2mα-α²)`, `α`.
    pub coefficients_match: bool,
    pub polynomial_in_y: bool,
}

/// Eliminates `I(1,1,1) = (1 - αy)/(2αm)` and `I(2,1,1) = ((2m+α)y - 1)/(4m²α)` from
/// `h_α = I0² + 4m·I1·I0 - α²I1² - 4mα²·I2·I1`.
pub fn exact_h_quadratic() -> HQuadratic {
    let y = RatFunc::var(Var::Y);
    let i1 = rf("1 - a*y", "2a*m");
    let i2 = rf("(2m+a)*y - 1", "4m^2*a");
    let a2 = RatFunc::from(p("a^2"));
    let four_m = RatFunc::from(p("4m"));
    let h = &(&(&(&y * &y) + &(&four_m * &(&i1 * &y))) - &(&a2 * &(&i1 * &i1))) - &(&(&four_m * &a2) * &(&i2 * &i1));
    let scaled = &RatFunc::from(p("4m^2*a")) * &h;
    let polynomial_in_y = scaled.den().is_one() || scaled.den().as_constant().is_some();
    let (c2, c1, c0) = if polynomial_in_y {
        let by_y = scaled.num().coeffs_in(Var::Y);
        let den = scaled.den().clone();
        let get = |d: u32| RatFunc::new(by_y.get(&d).cloned().unwrap_or_default(), den.clone()).unwrap();
        (get(2), get(1), get(0))
    } else {
        (RatFunc::zero(), RatFunc::zero(), RatFunc::zero())
    };
    let half = rf("1", "2");
    let b = &c1 * &half;
    let discriminant = &(&b * &b) - &(&c2 * &c0);
    let expected = RatFunc::from(p("16m^3*(m-a)"));
    let coefficients_match = polynomial_in_y
        && scaled.den().degree(Var::Y) == 0
        && c2 == RatFunc::from(p("-4m^2*a + a^3 + 4m*a^2"))
        && c1 == RatFunc::from(p("2*(4m^2 - 2m*a - a^2)"))
        && c0 == RatFunc::var(Var::Alpha);
    HQuadratic {
        discriminant_matches: discriminant == expected,
        a2: c2,
        a1: c1,
        a0: c0,
        discriminant,
        expected_discriminant: expected,
        coefficients_match,
        polynomial_in_y,
    }
}
