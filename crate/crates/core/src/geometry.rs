//! Pointwise differential geometry of the LeBrun metrics.
//!
//! Derivatives `Φ_i`, `Φ_ij`, ... are taken with respect to `x1 = |z1|²` and
//! `x2 = |z2|²`. The metric is `g_{ij̄} = δ_ij Φ_i + z̄_i z_j Φ_ij` and the
//! curvature follows `R_{ij̄kl̄} = -∂_k∂_{j̄} g_{il̄} + g^{pq̄} ∂_k g_{ip̄} ∂_{j̄} g_{ql̄}`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive};

use crate::coords::{forward_map, lift, ComplexPoint, Params, RadialPoint, SigmaPoint, DEFAULT_TOL};
use crate::error::{Error, Result};

pub const DEFAULT_FD_STEP: f64 = 1e-4;

type C = Complex64;
pub type Mat2 = [[C; 2]; 2];
pub type Riemann = [[[[C; 2]; 2]; 2]; 2];

const ZERO: C = C::new(0.0, 0.0);

/// Potential and its `x`-derivatives through order four.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialJet {
    pub phi: f64,
    /// `(Φ1, Φ2)`
    pub d1: [f64; 2],
    /// `(Φ11, Φ12, Φ22)`
    pub d2: [f64; 3],
    /// `(Φ111, Φ112, Φ221, Φ222)`
    pub d3: [f64; 4],
    /// `(Φ1111, Φ1112, Φ1122, Φ2221, Φ2222)`
    pub d4: [f64; 5],
}

impl PotentialJet {
    /// Derivative along the index list (0 for `x1`, 1 for `x2`), order 1 to 4.
    pub fn d(&self, idx: &[usize]) -> f64 {
        let n2 = idx.iter().filter(|&&i| i == 1).count();
        match (idx.len(), n2) {
            (1, n) => self.d1[n],
            (2, n) => self.d2[n],
            (3, 0) => self.d3[0],
            (3, 1) => self.d3[1],
            (3, 2) => self.d3[2],
            (3, 3) => self.d3[3],
            (4, 0) => self.d4[0],
            (4, 1) => self.d4[1],
            (4, 2) => self.d4[2],
            (4, 3) => self.d4[3],
            (4, 4) => self.d4[4],
            _ => panic!("jet index out of range: {idx:?}"),
        }
    }
}

pub fn potential(p: SigmaPoint, prm: Params) -> f64 {
    let m = prm.m();
    p.u + p.v + m * (p.u * p.u + p.v * p.v)
}

pub fn potential_jet(p: SigmaPoint, prm: Params) -> PotentialJet {
    let m = prm.m();
    let (u, v) = (p.u, p.v);
    let e = (2.0 * m * (u - v)).exp();
    let ei = (2.0 * m * (v - u)).exp();
    let d = 1.0 + 2.0 * m * (u + v);
    let (d3, d5) = (d.powi(3), d.powi(5));
    let (m2, m3) = (m * m, m * m * m);
    PotentialJet {
        phi: potential(p, prm),
        d1: [(1.0 + 2.0 * m * v) * ei, (1.0 + 2.0 * m * u) * e],
        d2: [-2.0 * m * ei * ei / d, 4.0 * m * (1.0 + m * (u + v)) / d, -2.0 * m * e * e / d],
        d3: [
            4.0 * m2 * ei.powi(3) * (3.0 + 4.0 * m * (u + 2.0 * v)) / d3,
            -4.0 * m2 * ei * (1.0 + 4.0 * m * v) / d3,
            -4.0 * m2 * e * (1.0 + 4.0 * m * u) / d3,
            4.0 * m2 * e.powi(3) * (3.0 + 4.0 * m * (2.0 * u + v)) / d3,
        ],
        d4: [
            -16.0 * m3 * ei.powi(4)
                * (8.0 + 43.0 * m * v + 19.0 * m * u + 12.0 * m2 * (4.0 * u * v + 5.0 * v * v + u * u))
                / d5,
            16.0 * m3 * ei * ei * (2.0 + m * u + 13.0 * m * v + 24.0 * m2 * v * v) / d5,
            -16.0 * m2 * m2 * (4.0 * m * (u * u + v * v) - 16.0 * m * u * v - u - v) / d5,
            16.0 * m3 * e * e * (2.0 + m * v + 13.0 * m * u + 24.0 * m2 * u * u) / d5,
            -16.0 * m3 * e.powi(4)
                * (8.0 + 43.0 * m * u + 19.0 * m * v + 12.0 * m2 * (4.0 * u * v + 5.0 * u * u + v * v))
                / d5,
        ],
    }
}

/// The mixed fourth derivative `Φ1122` in the form `-8m³(1+2m(U+V)+8m²(U-V)²)/(1+2m(U+V))⁴`
/// that circulates in the literature; it disagrees with the true value (see
/// `potential_jet`), which vanishes at the origin.
pub fn phi_1122_printed(p: SigmaPoint, prm: Params) -> f64 {
    let m = prm.m();
    let d = 1.0 + 2.0 * m * p.sum();
    -8.0 * m.powi(3) * (d + 8.0 * m * m * (p.u - p.v).powi(2)) / d.powi(4)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricAt {
    pub g: Mat2,
    pub ginv: Mat2,
    pub det: f64,
}

fn metric_from_sigma(z: ComplexPoint, p: SigmaPoint, prm: Params) -> MetricAt {
    let m = prm.m();
    let (u, v) = (p.u, p.v);
    let e = (2.0 * m * (u - v)).exp();
    let ei = (2.0 * m * (v - u)).exp();
    let d = 1.0 + 2.0 * m * (u + v);
    let k = 1.0 + m * (u + v);
    let off = z.z1.conj() * z.z2 * (4.0 * m * k / d);
    let g = [
        [C::new((1.0 + 4.0 * m * v * k) / d * ei, 0.0), off],
        [off.conj(), C::new((1.0 + 4.0 * m * u * k) / d * e, 0.0)],
    ];
    let a = g[0][0].re;
    let b = g[1][1].re;
    let det = a.mul_add(b, -off.norm_sqr());
    let ginv = [
        [C::new(b / det, 0.0), -off / det],
        [-off.conj() / det, C::new(a / det, 0.0)],
    ];
    MetricAt { g, ginv, det }
}

pub fn metric_at(z: ComplexPoint, prm: Params) -> Result<MetricAt> {
    let (_, p) = lift(z, prm, DEFAULT_TOL)?;
    Ok(metric_from_sigma(z, p, prm))
}

/// `diag(e^{2m(V-U)}, e^{2m(U-V)}) / (1 + 2m(U+V))`.
pub fn comparison_metric_at(z: ComplexPoint, prm: Params) -> Result<MetricAt> {
    let (_, p) = lift(z, prm, DEFAULT_TOL)?;
    let m = prm.m();
    let d = 1.0 + 2.0 * m * p.sum();
    let a = (2.0 * m * (p.v - p.u)).exp() / d;
    let b = (2.0 * m * (p.u - p.v)).exp() / d;
    Ok(MetricAt {
        g: [[C::new(a, 0.0), ZERO], [ZERO, C::new(b, 0.0)]],
        ginv: [[C::new(1.0 / a, 0.0), ZERO], [ZERO, C::new(1.0 / b, 0.0)]],
        det: a * b,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureAt {
    /// `r[i][j][k][l] = R_{i j̄ k l̄}` with zero-based indices.
    pub r: Riemann,
    /// `Ric_{k l̄} = g^{i j̄}` contracted against the first index pair of `R`.
    pub ric: Mat2,
    pub rho: f64,
    pub norm_r2: f64,
    pub lap_r2: f64,
}

/// `Ric_{kl̄} = Σ_{ij} (g⁻¹)_{ji} R_{ij̄kl̄}`, i.e. the trace of `g⁻¹` against the
/// first index pair. With this placement `Ric = -∂∂̄ log det g`.
pub fn ricci_contract(r: &Riemann, h: &Mat2) -> Mat2 {
    let mut ric = [[ZERO; 2]; 2];
    for (k, row) in ric.iter_mut().enumerate() {
        for (l, out) in row.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    *out += h[j][i] * r[i][j][k][l];
                }
            }
        }
    }
    ric
}

pub fn scalar_contract(ric: &Mat2, h: &Mat2) -> f64 {
    let mut s = ZERO;
    for k in 0..2 {
        for l in 0..2 {
            s += h[l][k] * ric[k][l];
        }
    }
    s.re
}

/// `|R|² = Σ g^{pī} g^{jq̄} g^{rk̄} g^{ls̄} R_{ij̄kl̄} conj(R_{pq̄rs̄})`, with
/// `g^{ab̄} = h[a][b]`.
pub fn norm_contract(r: &Riemann, h: &Mat2) -> f64 {
    // Raise one index at a time: t[p][q][r][s] = Σ h[p][i] h[j][q] h[r][k] h[l][s] R_{ijkl}.
    let mut t = *r;
    for axis in 0..4 {
        let mut next = [[[[ZERO; 2]; 2]; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        let idx = [a, b, c, d];
                        let mut acc = ZERO;
                        for x in 0..2 {
                            let mut src = idx;
                            src[axis] = x;
                            let w = if axis % 2 == 0 { h[idx[axis]][x] } else { h[x][idx[axis]] };
                            acc += w * t[src[0]][src[1]][src[2]][src[3]];
                        }
                        next[a][b][c][d] = acc;
                    }
                }
            }
        }
        t = next;
    }
    let mut s = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    s += t[i][j][k][l] * r[i][j][k][l].conj();
                }
            }
        }
    }
    s.re
}

fn curvature_tensor(z: ComplexPoint, p: SigmaPoint, prm: Params) -> (Riemann, Mat2) {
    let jet = potential_jet(p, prm);
    let zz = [z.z1, z.z2];
    let zb = [z.z1.conj(), z.z2.conj()];
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let h = metric_from_sigma(z, p, prm).ginv;
    let mut dg = [[[ZERO; 2]; 2]; 2];
    let mut dbar = [[[ZERO; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for p in 0..2 {
                dg[k][i][p] = zb[k] * (delta(i, p) * jet.d(&[i, k]))
                    + zb[i] * (delta(k, p) * jet.d(&[i, p]))
                    + zb[i] * zz[p] * zb[k] * jet.d(&[i, p, k]);
                dbar[k][i][p] = zz[k] * (delta(i, p) * jet.d(&[i, k]))
                    + zz[p] * (delta(k, i) * jet.d(&[i, p]))
                    + zb[i] * zz[p] * zz[k] * jet.d(&[i, p, k]);
            }
        }
    }
    let mut r = [[[[ZERO; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let ddg = (delta(i, l) * delta(j, k) * jet.d(&[i, k])
                        + delta(i, j) * delta(k, l) * jet.d(&[i, l]))
                        + zz[j] * zb[k] * (delta(i, l) * jet.d(&[i, j, k]))
                        + zz[l] * zb[k] * (delta(i, j) * jet.d(&[i, l, k]))
                        + zb[i] * zz[j] * (delta(k, l) * jet.d(&[i, l, j]))
                        + zb[i] * zz[l] * (delta(j, k) * jet.d(&[i, l, k]))
                        + zb[i] * zz[l] * zb[k] * zz[j] * jet.d(&[i, l, k, j]);
                    let mut acc = -ddg;
                    for p in 0..2 {
                        for q in 0..2 {
                            acc += h[p][q] * dg[k][i][p] * dbar[j][q][l];
                        }
                    }
                    r[i][j][k][l] = acc;
                }
            }
        }
    }
    (r, h)
}

/// `|R|²` from the jet-assembled tensor at the real point over `x`.
pub fn norm_r2_at(x: RadialPoint, prm: Params) -> Result<f64> {
    let z = ComplexPoint::real(x);
    let (_, p) = lift(z, prm, DEFAULT_TOL)?;
    let (r, h) = curvature_tensor(z, p, prm);
    Ok(norm_contract(&r, &h))
}

#[derive(Clone, Copy, Debug)]
struct Stencil {
    offsets: [f64; 4],
    first: [f64; 4],
    second: [f64; 4],
}

const CENTRAL: Stencil = Stencil {
    offsets: [-1.0, 0.0, 1.0, 0.0],
    first: [-0.5, 0.0, 0.5, 0.0],
    second: [1.0, -2.0, 1.0, 0.0],
};

const FORWARD: Stencil = Stencil {
    offsets: [0.0, 1.0, 2.0, 3.0],
    first: [-1.5, 2.0, -0.5, 0.0],
    second: [2.0, -5.0, 4.0, -1.0],
};

/// Gradient and Hessian `(f11, f12, f22)` in `(x1, x2)`, by second-order
/// difference stencils (one-sided next to the boundary `x_i = 0`) with one
/// Richardson level.
pub fn radial_derivatives<F>(f: F, x: RadialPoint, prm: Params) -> Result<([f64; 2], [f64; 3])>
where
    F: Fn(RadialPoint) -> Result<f64>,
{
    let p = crate::coords::inverse_map(x, prm, DEFAULT_TOL)?;
    let m = prm.m();
    let e = (2.0 * m * (p.u - p.v)).exp();
    let c = 1.0 / (1.0 + 12.0 * m * (1.0 + p.sum()));
    let base = [1e-3 * (x.x1 + c * e), 1e-3 * (x.x2 + c / e)];
    let at = |h: [f64; 2]| -> Result<([f64; 2], [f64; 3])> {
        let st = [0, 1].map(|i| if x_i(x, i) >= 3.0 * h[i] { CENTRAL } else { FORWARD });
        let mut vals = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let used = |s: &Stencil, n: usize| s.first[n] != 0.0 || s.second[n] != 0.0 || s.offsets[n] == 0.0;
                if !(used(&st[0], a) && used(&st[1], b)) {
                    continue;
                }
                let q = RadialPoint {
                    x1: x.x1 + st[0].offsets[a] * h[0],
                    x2: x.x2 + st[1].offsets[b] * h[1],
                };
                vals[a][b] = f(q)?;
            }
        }
        let zero_idx = |s: &Stencil| s.offsets.iter().position(|&o| o == 0.0).unwrap();
        let (z0, z1) = (zero_idx(&st[0]), zero_idx(&st[1]));
        let mut g = [0.0; 2];
        let mut hs = [0.0; 3];
        for a in 0..4 {
            g[0] += st[0].first[a] * vals[a][z1];
            hs[0] += st[0].second[a] * vals[a][z1];
            g[1] += st[1].first[a] * vals[z0][a];
            hs[2] += st[1].second[a] * vals[z0][a];
            for b in 0..4 {
                hs[1] += st[0].first[a] * st[1].first[b] * vals[a][b];
            }
        }
        Ok(([g[0] / h[0], g[1] / h[1]], [hs[0] / (h[0] * h[0]), hs[1] / (h[0] * h[1]), hs[2] / (h[1] * h[1])]))
    };
    let (g1, h1) = at(base)?;
    let (g2, h2) = at([0.5 * base[0], 0.5 * base[1]])?;
    let rich = |a: f64, b: f64| b + (b - a) / 3.0;
    Ok((
        [rich(g1[0], g2[0]), rich(g1[1], g2[1])],
        [rich(h1[0], h2[0]), rich(h1[1], h2[1]), rich(h1[2], h2[2])],
    ))
}

fn x_i(x: RadialPoint, i: usize) -> f64 {
    if i == 0 {
        x.x1
    } else {
        x.x2
    }
}

/// `Δf = Σ g^{ij̄} ∂_i∂_{j̄} f` for `f` depending on `z` only through `(x1, x2)`,
/// using `∂_i∂_{j̄} f = δ_ij f_i + z̄_i z_j f_ij`.
pub fn radial_laplacian(grad: [f64; 2], hess: [f64; 3], z: ComplexPoint, ginv: &Mat2) -> f64 {
    let zz = [z.z1, z.z2];
    let zb = [z.z1.conj(), z.z2.conj()];
    let fij = |i: usize, j: usize| if i == j { hess[2 * i] } else { hess[1] };
    let mut s = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            let dd = if i == j { C::new(grad[i], 0.0) } else { ZERO } + zb[i] * zz[j] * fij(i, j);
            s += ginv[j][i] * dd;
        }
    }
    s.re
}

pub fn curvature_at(z: ComplexPoint, prm: Params) -> Result<CurvatureAt> {
    let (x, p) = lift(z, prm, DEFAULT_TOL)?;
    let (r, h) = curvature_tensor(z, p, prm);
    let ric = ricci_contract(&r, &h);
    let rho = scalar_contract(&ric, &h);
    let norm_r2 = norm_contract(&r, &h);
    let (grad, hess) = radial_derivatives(|q| norm_r2_at(q, prm), x, prm)?;
    let lap_r2 = radial_laplacian(grad, hess, z, &h);
    Ok(CurvatureAt { r, ric, rho, norm_r2, lap_r2 })
}

fn real_coords(z: ComplexPoint) -> [f64; 4] {
    [z.z1.re, z.z1.im, z.z2.re, z.z2.im]
}

fn from_real(r: [f64; 4]) -> ComplexPoint {
    ComplexPoint { z1: C::new(r[0], r[1]), z2: C::new(r[2], r[3]) }
}

struct RealDerivs {
    first: [Mat2; 4],
    second: [[Mat2; 4]; 4],
}

fn metric_real_derivs(z: ComplexPoint, prm: Params, h: f64) -> Result<RealDerivs> {
    let r0 = real_coords(z);
    let step = [h * z.z1.norm().max(1.0), h * z.z1.norm().max(1.0), h * z.z2.norm().max(1.0), h * z.z2.norm().max(1.0)];
    let eval = |da: &[(usize, f64)]| -> Result<Mat2> {
        let mut r = r0;
        for &(a, s) in da {
            r[a] += s * step[a];
        }
        Ok(metric_at(from_real(r), prm)?.g)
    };
    let comb = |terms: &[(f64, Mat2)], scale: f64| -> Mat2 {
        let mut out = [[ZERO; 2]; 2];
        for (w, g) in terms {
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += g[i][j] * *w;
                }
            }
        }
        for row in out.iter_mut() {
            for v in row.iter_mut() {
                *v /= scale;
            }
        }
        out
    };
    let g0 = eval(&[])?;
    let mut first = [[[ZERO; 2]; 2]; 4];
    let mut second = [[[[ZERO; 2]; 2]; 4]; 4];
    for a in 0..4 {
        let gp = eval(&[(a, 1.0)])?;
        let gm = eval(&[(a, -1.0)])?;
        first[a] = comb(&[(1.0, gp), (-1.0, gm)], 2.0 * step[a]);
        second[a][a] = comb(&[(1.0, gp), (-2.0, g0), (1.0, gm)], step[a] * step[a]);
        for b in 0..a {
            let pp = eval(&[(a, 1.0), (b, 1.0)])?;
            let pm = eval(&[(a, 1.0), (b, -1.0)])?;
            let mp = eval(&[(a, -1.0), (b, 1.0)])?;
            let mm = eval(&[(a, -1.0), (b, -1.0)])?;
            let v = comb(&[(1.0, pp), (-1.0, pm), (-1.0, mp), (1.0, mm)], 4.0 * step[a] * step[b]);
            second[a][b] = v;
            second[b][a] = v;
        }
    }
    Ok(RealDerivs { first, second })
}

fn curvature_from_real(d: &RealDerivs, ginv: &Mat2) -> Riemann {
    let half = C::new(0.5, 0.0);
    let i_unit = C::new(0.0, 1.0);
    let dz = |k: usize, a: usize, b: usize| (d.first[2 * k][a][b] - i_unit * d.first[2 * k + 1][a][b]) * half;
    let dzb = |k: usize, a: usize, b: usize| (d.first[2 * k][a][b] + i_unit * d.first[2 * k + 1][a][b]) * half;
    let ddz = |k: usize, j: usize, a: usize, b: usize| {
        let (ak, bk, aj, bj) = (2 * k, 2 * k + 1, 2 * j, 2 * j + 1);
        (d.second[ak][aj][a][b] + d.second[bk][bj][a][b] + i_unit * (d.second[ak][bj][a][b] - d.second[bk][aj][a][b]))
            * 0.25
    };
    let mut r = [[[[ZERO; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut acc = -ddz(k, j, i, l);
                    for p in 0..2 {
                        for q in 0..2 {
                            acc += ginv[p][q] * dz(k, i, p) * dzb(j, q, l);
                        }
                    }
                    r[i][j][k][l] = acc;
                }
            }
        }
    }
    r
}

fn check_fd_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("finite-difference step must be > 0, got {h}")));
    }
    if 4.0 * f64::EPSILON / (h * h) > 1e-4 {
        return Err(Error::Numerical(format!("finite-difference step {h:e} too small: rounding dominates")));
    }
    Ok(())
}

/// Central differences of the metric without extrapolation.
pub fn curvature_fd_plain(z: ComplexPoint, prm: Params, h: f64) -> Result<Riemann> {
    check_fd_step(h)?;
    let ginv = metric_at(z, prm)?.ginv;
    Ok(curvature_from_real(&metric_real_derivs(z, prm, h)?, &ginv))
}

/// Curvature from finite differences of the metric (steps `h` and `h/2`,
/// combined by one Richardson level). `lap_r2` is the radial Laplacian of the
/// jet-assembled `|R|²`.
pub fn curvature_fd(z: ComplexPoint, prm: Params, h: f64) -> Result<CurvatureAt> {
    check_fd_step(h)?;
    let (x, _) = lift(z, prm, DEFAULT_TOL)?;
    let met = metric_at(z, prm)?;
    let r1 = curvature_from_real(&metric_real_derivs(z, prm, h)?, &met.ginv);
    let r2 = curvature_from_real(&metric_real_derivs(z, prm, 0.5 * h)?, &met.ginv);
    let mut r = r2;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    r[i][j][k][l] = r2[i][j][k][l] + (r2[i][j][k][l] - r1[i][j][k][l]) / 3.0;
                }
            }
        }
    }
    let ric = ricci_contract(&r, &met.ginv);
    let rho = scalar_contract(&ric, &met.ginv);
    let norm_r2 = norm_contract(&r, &met.ginv);
    let (grad, hess) = radial_derivatives(|q| norm_r2_at(q, prm), x, prm)?;
    let lap_r2 = radial_laplacian(grad, hess, z, &met.ginv);
    Ok(CurvatureAt { r, ric, rho, norm_r2, lap_r2 })
}

/// `-∂_k∂_{l̄} log det g` by central differences of the determinant.
pub fn ricci_from_det_fd(z: ComplexPoint, prm: Params, h: f64) -> Result<Mat2> {
    check_fd_step(h)?;
    let r0 = real_coords(z);
    let step = h * z.z1.norm().max(z.z2.norm()).max(1.0);
    let f = |da: &[(usize, f64)]| -> Result<f64> {
        let mut r = r0;
        for &(a, s) in da {
            r[a] += s * step;
        }
        Ok(metric_at(from_real(r), prm)?.det.ln())
    };
    let f0 = f(&[])?;
    let mut hess = [[0.0; 4]; 4];
    for a in 0..4 {
        hess[a][a] = (f(&[(a, 1.0)])? - 2.0 * f0 + f(&[(a, -1.0)])?) / (step * step);
        for b in 0..a {
            let v = (f(&[(a, 1.0), (b, 1.0)])? - f(&[(a, 1.0), (b, -1.0)])? - f(&[(a, -1.0), (b, 1.0)])?
                + f(&[(a, -1.0), (b, -1.0)])?)
                / (4.0 * step * step);
            hess[a][b] = v;
            hess[b][a] = v;
        }
    }
    let mut ric = [[ZERO; 2]; 2];
    for k in 0..2 {
        for l in 0..2 {
            let (ak, bk, al, bl) = (2 * k, 2 * k + 1, 2 * l, 2 * l + 1);
            let v = C::new(hess[ak][al] + hess[bk][bl], hess[ak][bl] - hess[bk][al]) * 0.25;
            ric[k][l] = -v;
        }
    }
    Ok(ric)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedFormInvariants {
    pub norm_r2: f64,
    pub lap_r2: f64,
}

/// `|R|² = 96m²/D⁸` and `Δ|R|² = 3072m³(7m(U+V)-1)/D¹¹`, `D = 1 + 2m(U+V)`, as
/// printed in the literature.
pub fn closed_form_invariants(p: SigmaPoint, prm: Params) -> ClosedFormInvariants {
    let m = prm.m();
    let s = p.sum();
    let d = 1.0 + 2.0 * m * s;
    ClosedFormInvariants {
        norm_r2: 96.0 * m * m / d.powi(8),
        lap_r2: 3072.0 * m.powi(3) * (7.0 * m * s - 1.0) / d.powi(11),
    }
}

/// `|R|² = 96m²/D⁶` and `Δ|R|² = 2304m³(5m(U+V)-1)/D⁹`, the closed forms that
/// the full tensor contraction actually produces (proved in `exact`).
pub fn contracted_invariants(p: SigmaPoint, prm: Params) -> ClosedFormInvariants {
    let m = prm.m();
    let s = p.sum();
    let d = 1.0 + 2.0 * m * s;
    ClosedFormInvariants {
        norm_r2: 96.0 * m * m / d.powi(6),
        lap_r2: 2304.0 * m.powi(3) * (5.0 * m * s - 1.0) / d.powi(9),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletenessReport {
    /// Smallest eigenvalue of `g - g̃` over the grid.
    pub min_eig: f64,
    /// Smallest value over the grid of the tangent quadratic form on unit directions.
    pub min_quadform: f64,
    /// Same minimum as `min_eig` but from the naive f64 eigenvalue formula.
    pub min_eig_naive: f64,
    pub argmin_eig: SigmaPoint,
    pub argmin_quadform: SigmaPoint,
    pub points: usize,
}

fn q_of(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite")
}

fn lambda_min(a: f64, c: f64, det: f64) -> f64 {
    if det == 0.0 {
        return 0.0;
    }
    let tr = a + c;
    let disc = ((a - c) * (a - c) + 4.0 * (a * c - det)).max(0.0).sqrt();
    if tr > 0.0 {
        2.0 * det / (tr + disc)
    } else {
        0.5 * (tr - disc)
    }
}

/// `((1+2mu²)²+4m²u²v²-1)α² + ((1+2mv²)²+4m²u²v²-1)β² - 8muv(1+mu²+mv²)αβ`,
/// evaluated exactly at the given binary floating-point inputs.
pub fn completeness_form(m: f64, a: f64, b: f64, alpha: f64, beta: f64) -> f64 {
    let (qa, qc, qb) = form_coeffs(&q_of(m), &q_of(a), &q_of(b));
    let (al, be) = (q_of(alpha), q_of(beta));
    (qa * &al * &al + qc * &be * &be - qb * al * be).to_f64().unwrap()
}

fn form_coeffs(m: &BigRational, a: &BigRational, b: &BigRational) -> (BigRational, BigRational, BigRational) {
    let one = BigRational::from_integer(BigInt::from(1));
    let two = BigRational::from_integer(BigInt::from(2));
    let four = BigRational::from_integer(BigInt::from(4));
    let eight = BigRational::from_integer(BigInt::from(8));
    let (a2, b2) = (a * a, b * b);
    let cross = &four * m * m * &a2 * &b2;
    let ta = &one + &two * m * &a2;
    let tc = &one + &two * m * &b2;
    let qa = &ta * &ta + &cross - &one;
    let qc = &tc * &tc + &cross - &one;
    let qb = eight * m * a * b * (one + m * (a2 + b2));
    (qa, qc, qb)
}

/// Checks `g ≥ g̃` and the tangent form inequality at real points with
/// `U = a²`, `V = b²` for the given `(a, b)` roots.
///
/// Both matrices are rank-one deficient, so their smallest eigenvalue is a
/// cancellation of quantities of size up to `e^{2m|U-V|}`. The determinants are
/// therefore evaluated exactly in rationals at the (binary) sample points, in
/// the frame `S = diag(√(ED), √(D/E))` where `S(g - g̃)S` has polynomial entries
/// `4mVk`, `4mk·ab`, `4mUk` with `k = 1 + m(U+V)`; eigenvalues of `g - g̃` are then
/// recovered from the exact determinant and the f64 trace.
pub fn completeness_check(roots: &[(f64, f64)], prm: Params) -> Result<CompletenessReport> {
    if roots.is_empty() {
        return Err(Error::InvalidArgument("completeness grid is empty".into()));
    }
    let m = prm.m();
    let qm = q_of(m);
    let one = BigRational::from_integer(BigInt::from(1));
    let four = BigRational::from_integer(BigInt::from(4));
    let mut rep = CompletenessReport {
        min_eig: f64::INFINITY,
        min_quadform: f64::INFINITY,
        min_eig_naive: f64::INFINITY,
        argmin_eig: SigmaPoint::ORIGIN,
        argmin_quadform: SigmaPoint::ORIGIN,
        points: roots.len(),
    };
    for &(a, b) in roots {
        if !(a.is_finite() && b.is_finite()) || a < 0.0 || b < 0.0 {
            return Err(Error::InvalidArgument(format!("grid roots must be finite and >= 0, got ({a}, {b})")));
        }
        let (qa, qb) = (q_of(a), q_of(b));
        let (uu, vv) = (&qa * &qa, &qb * &qb);
        let k = &one + &qm * (&uu + &vv);
        let d = &one + &qm * (&uu + &vv) * BigRational::from_integer(BigInt::from(2));
        let n11 = &four * &qm * &vv * &k;
        let n22 = &four * &qm * &uu * &k;
        let n12 = &four * &qm * &k * &qa * &qb;
        let det_n = &n11 * &n22 - &n12 * &n12;
        let det_raw = (&det_n / (&d * &d)).to_f64().unwrap();
        let p = SigmaPoint::new(a * a, b * b)?;
        let x = forward_map(p, prm)?;
        let dd = 1.0 + 2.0 * m * p.sum();
        let e = (2.0 * m * (p.u - p.v)).exp();
        let (r11, r22) = (n11.to_f64().unwrap() / (dd * e), n22.to_f64().unwrap() * e / dd);
        let lam = lambda_min(r11, r22, det_raw);
        if lam < rep.min_eig {
            rep.min_eig = lam;
            rep.argmin_eig = p;
        }
        let z = ComplexPoint::real(x);
        let g = metric_from_sigma(z, p, prm);
        let gt = comparison_metric_at(z, prm)?;
        let (na, nc, nb) = (g.g[0][0].re - gt.g[0][0].re, g.g[1][1].re - gt.g[1][1].re, g.g[0][1].re);
        let naive = 0.5 * (na + nc - ((na - nc).powi(2) + 4.0 * nb * nb).sqrt());
        rep.min_eig_naive = rep.min_eig_naive.min(naive);
        let (fa, fc, fb) = form_coeffs(&qm, &qa, &qb);
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let fdet = &fa * &fc - &fb * &fb * &half * &half;
        let qlam = lambda_min(fa.to_f64().unwrap(), fc.to_f64().unwrap(), fdet.to_f64().unwrap());
        if qlam < rep.min_quadform {
            rep.min_quadform = qlam;
            rep.argmin_quadform = p;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::inverse_map;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn prm(m: f64) -> Params {
        Params::new(m).unwrap()
    }

    fn point(m: f64, u: f64, v: f64, t1: f64, t2: f64) -> ComplexPoint {
        let x = forward_map(SigmaPoint::new(u, v).unwrap(), prm(m)).unwrap();
        ComplexPoint::with_phases(x, t1, t2)
    }

    #[test]
    fn flat_jet() {
        let j = potential_jet(SigmaPoint::new(0.4, 1.3).unwrap(), prm(0.0));
        assert_eq!(j.d1, [1.0, 1.0]);
        assert!(j.d2.iter().chain(&j.d3).chain(&j.d4).all(|&v| v == 0.0));
    }

    #[test]
    fn jet_at_origin() {
        let j = potential_jet(SigmaPoint::ORIGIN, prm(1.0));
        assert_eq!(j.d1[0], 1.0);
        assert_eq!(j.d2, [-2.0, 4.0, -2.0]);
        assert_eq!(j.d3, [12.0, -4.0, -4.0, 12.0]);
        assert_eq!(j.d4[0], -128.0);
        assert_eq!(j.d4[1], 32.0);
        assert_eq!(j.d4[2], 0.0);
        assert_eq!(phi_1122_printed(SigmaPoint::ORIGIN, prm(1.0)), -8.0);
    }

    // Φ as a function of (x1, x2) through the numeric inverse map.
    fn phi_of_x(x1: f64, x2: f64, p: Params) -> f64 {
        let s = inverse_map(RadialPoint { x1, x2 }, p, 1e-15).unwrap();
        potential(s, p)
    }

    #[test]
    fn jet_matches_finite_differences() {
        let p = prm(0.7);
        let (x1, x2) = (0.9, 0.6);
        let s = inverse_map(RadialPoint { x1, x2 }, p, 1e-15).unwrap();
        let jet = potential_jet(s, p);
        // Richardson-extrapolated central differences of increasing order.
        let deriv = |n1: usize, n2: usize, h: f64| -> f64 {
            let w = |n: usize| -> Vec<(f64, f64)> {
                match n {
                    0 => vec![(0.0, 1.0)],
                    1 => vec![(-1.0, -0.5), (1.0, 0.5)],
                    2 => vec![(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
                    3 => vec![(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
                    4 => vec![(-2.0, 1.0), (-1.0, -4.0), (0.0, 6.0), (1.0, -4.0), (2.0, 1.0)],
                    _ => unreachable!(),
                }
            };
            let mut acc = 0.0;
            for (a, wa) in w(n1) {
                for (b, wb) in w(n2) {
                    acc += wa * wb * phi_of_x(x1 + a * h, x2 + b * h, p);
                }
            }
            acc / h.powi((n1 + n2) as i32)
        };
        let rich = |n1: usize, n2: usize, h: f64| {
            let a = deriv(n1, n2, h);
            let b = deriv(n1, n2, h / 2.0);
            b + (b - a) / 3.0
        };
        let cases: [(usize, usize, f64, f64, f64); 14] = [
            (1, 0, jet.d1[0], 1e-3, 1e-9),
            (0, 1, jet.d1[1], 1e-3, 1e-9),
            (2, 0, jet.d2[0], 1e-3, 1e-7),
            (1, 1, jet.d2[1], 1e-3, 1e-7),
            (0, 2, jet.d2[2], 1e-3, 1e-7),
            (3, 0, jet.d3[0], 1e-2, 1e-5),
            (2, 1, jet.d3[1], 1e-2, 1e-5),
            (1, 2, jet.d3[2], 1e-2, 1e-5),
            (0, 3, jet.d3[3], 1e-2, 1e-5),
            (4, 0, jet.d4[0], 2e-2, 1e-3),
            (3, 1, jet.d4[1], 2e-2, 1e-3),
            (2, 2, jet.d4[2], 2e-2, 1e-3),
            (1, 3, jet.d4[3], 2e-2, 1e-3),
            (0, 4, jet.d4[4], 2e-2, 1e-3),
        ];
        for (n1, n2, want, h, tol) in cases {
            let got = rich(n1, n2, h);
            assert!((got - want).abs() <= tol * want.abs().max(1.0), "d({n1},{n2}): fd {got} vs closed form {want}");
        }
        let printed = phi_1122_printed(s, p);
        assert!((rich(2, 2, 2e-2) - printed).abs() > 1e-2);
    }

    #[test]
    fn jet_swap_symmetry() {
        let p = prm(0.35);
        let a = potential_jet(SigmaPoint::new(0.2, 1.1).unwrap(), p);
        let b = potential_jet(SigmaPoint::new(1.1, 0.2).unwrap(), p);
        assert_relative_eq!(a.d1[0], b.d1[1], max_relative = 1e-14);
        assert_relative_eq!(a.d2[0], b.d2[2], max_relative = 1e-14);
        assert_relative_eq!(a.d3[1], b.d3[2], max_relative = 1e-14);
        assert_relative_eq!(a.d4[1], b.d4[3], max_relative = 1e-14);
        assert_relative_eq!(a.d4[2], b.d4[2], max_relative = 1e-14);
    }

    #[test]
    fn metric_examples() {
        let g = metric_at(ComplexPoint::ORIGIN, prm(3.0)).unwrap();
        assert_eq!(g.g, [[C::new(1.0, 0.0), ZERO], [ZERO, C::new(1.0, 0.0)]]);
        let z = point(1.0, 1.0, 2.0, 0.3, -1.2);
        assert!((metric_at(z, prm(1.0)).unwrap().det - 1.0).abs() < 1e-12);
        let g = metric_at(point(0.0, 1.0, 2.0, 0.5, 0.1), prm(0.0)).unwrap();
        assert!((g.g[0][0].re - 1.0).abs() < 1e-15 && g.g[0][1].norm() == 0.0);
        let gt = comparison_metric_at(point(1.0, 1.0, 0.0, 0.0, 0.0), prm(1.0)).unwrap();
        assert_relative_eq!(gt.g[0][0].re, (-2.0f64).exp() / 3.0, max_relative = 1e-13);
        assert_relative_eq!(gt.g[1][1].re, 2.0f64.exp() / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn metric_is_potential_hessian() {
        let p = prm(0.6);
        let s = SigmaPoint::new(0.8, 0.3).unwrap();
        let z = point(0.6, s.u, s.v, 0.7, 2.1);
        let jet = potential_jet(s, p);
        let g = metric_at(z, p).unwrap().g;
        let x = z.radial();
        assert_relative_eq!(g[0][0].re, jet.d2[0] * x.x1 + jet.d1[0], max_relative = 1e-13);
        assert_relative_eq!(g[1][1].re, jet.d2[2] * x.x2 + jet.d1[1], max_relative = 1e-13);
        let off = z.z1.conj() * z.z2 * jet.d2[1];
        assert!((g[0][1] - off).norm() < 1e-13);
    }

    #[test]
    fn curvature_origin_values() {
        let c = curvature_at(ComplexPoint::ORIGIN, prm(1.0)).unwrap();
        assert!((c.r[0][0][0][0] - C::new(4.0, 0.0)).norm() < 1e-13);
        assert!((c.r[0][0][1][1] - C::new(-4.0, 0.0)).norm() < 1e-13);
        assert!((c.norm_r2 - 96.0).abs() < 1e-12);
        let brute: f64 = c.r.iter().flatten().flatten().flatten().map(|v| v.norm_sqr()).sum();
        assert!((brute - 96.0).abs() < 1e-12);
        // Δf(0) = f_{x1}(0) + f_{x2}(0) for f = 96/D⁶ is 2·(-6·96·2) = -2304.
        assert!((c.lap_r2 + 2304.0).abs() < 1e-5 * 2304.0, "{}", c.lap_r2);
    }

    #[test]
    fn flat_curvature_vanishes() {
        let c = curvature_at(point(0.0, 0.5, 0.7, 0.2, 0.4), prm(0.0)).unwrap();
        assert!(c.r.iter().flatten().flatten().flatten().all(|v| v.norm() == 0.0));
        let f = curvature_fd(point(0.0, 0.5, 0.7, 0.2, 0.4), prm(0.0), DEFAULT_FD_STEP).unwrap();
        assert!(f.r.iter().flatten().flatten().flatten().all(|v| v.norm() < 1e-8));
    }

    #[test]
    fn fd_oracle_at_origin() {
        let f = curvature_fd(ComplexPoint::ORIGIN, prm(1.0), 1e-4).unwrap();
        assert!((f.r[0][0][0][0].re - 4.0).abs() < 1e-5);
        assert!(curvature_fd(ComplexPoint::ORIGIN, prm(1.0), 1e-7).is_err());
    }

    #[test]
    fn fd_convergence_order() {
        let p = prm(0.5);
        let z = point(0.5, 0.4, 0.3, 0.3, 1.0);
        let exact = curvature_at(z, p).unwrap().r;
        let err = |h: f64| {
            let r = curvature_fd_plain(z, p, h).unwrap();
            let mut e: f64 = 0.0;
            for (a, b) in r.iter().flatten().flatten().flatten().zip(exact.iter().flatten().flatten().flatten()) {
                e = e.max((a - b).norm());
            }
            e
        };
        let ratio = err(4e-3) / err(2e-3);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn fd_matches_jet_path() {
        let p = prm(0.8);
        let z = point(0.8, 0.5, 0.25, 0.9, -0.4);
        let a = curvature_at(z, p).unwrap();
        let b = curvature_fd(z, p, DEFAULT_FD_STEP).unwrap();
        for (x, y) in a.r.iter().flatten().flatten().flatten().zip(b.r.iter().flatten().flatten().flatten()) {
            assert!((x - y).norm() < 1e-6 * (1.0 + x.norm()), "{x} vs {y}");
        }
        for row in b.ric {
            for v in row {
                assert!(v.norm() < 1e-5);
            }
        }
        for row in ricci_from_det_fd(z, p, DEFAULT_FD_STEP).unwrap() {
            for v in row {
                assert!(v.norm() < 1e-5);
            }
        }
    }

    #[test]
    fn invariants_match_contracted_closed_forms() {
        for (m, u, v) in [(1.0, 0.5, 1.0 / 3.0), (0.3, 1.2, 0.1), (2.0, 0.05, 0.2)] {
            let p = prm(m);
            let s = SigmaPoint::new(u, v).unwrap();
            let c = curvature_at(point(m, u, v, 0.4, 1.7), p).unwrap();
            let cf = contracted_invariants(s, p);
            assert_relative_eq!(c.norm_r2, cf.norm_r2, max_relative = 1e-10);
            assert_relative_eq!(c.lap_r2, cf.lap_r2, max_relative = 1e-5);
            let printed = closed_form_invariants(s, p);
            let d = 1.0 + 2.0 * m * (u + v);
            assert_relative_eq!(printed.norm_r2 * d * d, cf.norm_r2, max_relative = 1e-12);
        }
    }

    #[test]
    fn closed_form_examples() {
        let c = closed_form_invariants(SigmaPoint::ORIGIN, prm(1.0));
        assert_eq!((c.norm_r2, c.lap_r2), (96.0, -3072.0));
        let c = closed_form_invariants(SigmaPoint::new(0.4, 0.2).unwrap(), prm(0.0));
        assert_eq!((c.norm_r2, c.lap_r2), (0.0, 0.0));
        let c = closed_form_invariants(SigmaPoint::new(1.0 / 14.0, 1.0 / 14.0).unwrap(), prm(1.0));
        assert!(c.lap_r2.abs() < 1e-12);
    }

    #[test]
    fn completeness_examples() {
        let grid: Vec<(f64, f64)> = (0..6).flat_map(|i| (0..6).map(move |j| (i as f64, j as f64))).collect();
        let r = completeness_check(&grid, prm(0.0)).unwrap();
        assert_eq!((r.min_eig, r.min_quadform), (0.0, 0.0));
        for m in [0.1, 1.0, 10.0] {
            let r = completeness_check(&grid, prm(m)).unwrap();
            assert!(r.min_eig >= -1e-12 && r.min_quadform >= -1e-12, "{r:?}");
        }
        assert_eq!(completeness_form(1.0, 0.0, 2.0, 1.0, 0.0), 0.0);
        assert!(completeness_form(1.0, 0.5, 2.0, 1.0, 0.0) > 0.0);
        assert!(completeness_check(&[], prm(1.0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn kahler_symmetries(m in 0.0..3.0f64, u in 0.0..1.5f64, v in 0.0..1.5f64, t1 in 0.0..6.3f64, t2 in 0.0..6.3f64) {
            let c = curvature_at(point(m, u, v, t1, t2), prm(m)).unwrap();
            let r = c.r;
            let scale = 1.0 + r.iter().flatten().flatten().flatten().map(|x| x.norm()).fold(0.0, f64::max);
            for i in 0..2 { for j in 0..2 { for k in 0..2 { for l in 0..2 {
                let a = r[i][j][k][l];
                prop_assert!((a - r[k][j][i][l]).norm() < 1e-12 * scale);
                prop_assert!((a - r[i][l][k][j]).norm() < 1e-12 * scale);
                prop_assert!((a - r[j][i][l][k].conj()).norm() < 1e-12 * scale);
            }}}}
            for row in c.ric { for x in row { prop_assert!(x.norm() < 1e-9 * scale); } }
        }

        #[test]
        fn metric_inverse_and_det(m in 0.0..10.0f64, u in 0.0..1.0f64, v in 0.0..1.0f64, t1 in 0.0..6.3f64) {
            let g = metric_at(point(m, u, v, t1, 0.3), prm(m)).unwrap();
            prop_assert!((g.det - 1.0).abs() < 1e-12);
            let norm = |a: &Mat2| a.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
            let cond = norm(&g.g) * norm(&g.ginv);
            for i in 0..2 { for k in 0..2 {
                let mut s = ZERO;
                for j in 0..2 { s += g.g[i][j] * g.ginv[j][k]; }
                let want = if i == k { 1.0 } else { 0.0 };
                prop_assert!((s - C::new(want, 0.0)).norm() < 4e-16 * cond);
            }}
        }

        #[test]
        fn phase_invariance_of_norm(m in 0.0..2.0f64, u in 0.0..1.0f64, v in 0.0..1.0f64, t1 in 0.0..6.3f64, t2 in 0.0..6.3f64) {
            let a = curvature_at(point(m, u, v, 0.0, 0.0), prm(m)).unwrap();
            let b = curvature_at(point(m, u, v, t1, t2), prm(m)).unwrap().norm_r2;
            let big = a.r.iter().flatten().flatten().flatten().map(|x| x.norm_sqr()).fold(0.0, f64::max);
            prop_assert!((a.norm_r2 - b).abs() <= 1e-12 * (a.norm_r2 + 16.0 * big));
        }
    }
}
