//! Symplectic potentials, inverse Hessians and the weighted scalar curvature.
//!
//! A potential is `u = u₀ + q` with the Guillemin potential
//! `u₀ = ½ Σ L_j log L_j` and a correction `q` (polynomial or sampled on a
//! lattice), or a bare convex function without the `u₀` part. Hessians are
//! handled through `M = 2ΠL · Hess u = Σ u_j u_jᵀ Π_{k≠j} L_k + 2ΠL Hess q`,
//! which is polynomial when `q` is; `H = (Hess u)^{-1} = 2ΠL adj(M) / det M`
//! is then a rational matrix and is reduced by cancelling label factors.
//!
//! With the convention `u̇ = -φ̇`, decreasing the Kähler potential
//! increases the symplectic one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AffineFunc, LabelledPolytope};
use crate::linalg;
use crate::poly::Poly;
use crate::quadrature::{integrate_boundary, integrate_interior, integrate_interior_fn, Node};
use crate::scalar::{to_f64_vec, Scalar};
use crate::stability::{futaki_fn, futaki_poly};
use crate::weights::{barycentric_grid, WeightSystem};

/// `num / den` with polynomial numerator and denominator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalFn {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFn {
    pub fn poly(p: Poly) -> Self {
        let n = p.nvars();
        RationalFn { num: p, den: Poly::one(n) }
    }

    pub fn eval(&self, x: &[Scalar]) -> Scalar {
        self.num.eval(x) / self.den.eval(x)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }

    /// The polynomial `num / den` when the division is exact.
    pub fn to_poly(&self) -> Option<Poly> {
        let (q, r) = self.num.div_rem(&self.den);
        r.is_negligible().then_some(q)
    }
}

fn divides(d: &Poly, p: &Poly) -> Option<Poly> {
    if p.is_zero() {
        return Some(p.clone());
    }
    let (q, r) = p.div_rem(d);
    r.is_negligible().then_some(q)
}

fn poly_det(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    let nv = m[0][0].nvars();
    match n {
        0 => Poly::one(nv),
        1 => m[0][0].clone(),
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        _ => {
            let mut acc = Poly::zero(nv);
            for c in 0..n {
                if m[0][c].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Poly>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(k, _)| *k != c).map(|(_, e)| e.clone()).collect())
                    .collect();
                let t = &m[0][c] * &poly_det(&minor);
                acc = if c % 2 == 0 { &acc + &t } else { &acc - &t };
            }
            acc
        }
    }
}

fn poly_adjugate(m: &[Vec<Poly>]) -> Vec<Vec<Poly>> {
    let n = m.len();
    let nv = m[0][0].nvars();
    if n == 1 {
        return vec![vec![Poly::one(nv)]];
    }
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    // adj_ab = (-1)^{a+b} det(minor with row b and column a removed)
                    let minor: Vec<Vec<Poly>> = m
                        .iter()
                        .enumerate()
                        .filter(|(r, _)| *r != b)
                        .map(|(_, row)| row.iter().enumerate().filter(|(k, _)| *k != a).map(|(_, e)| e.clone()).collect())
                        .collect();
                    let d = poly_det(&minor);
                    if (a + b) % 2 == 0 { d } else { -&d }
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    /// An inverse Hessian `H`.
    H,
    /// `Φ = vH`.
    Phi,
}

/// Symmetric matrix of rational functions `entries / den`, upper triangle
/// stored row by row. `weight` is the factor in the boundary derivative
/// condition: 1 for `H`, `v` for `Φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixField {
    pub dim: usize,
    pub role: FieldRole,
    pub weight: Poly,
    pub entries: Vec<Poly>,
    pub den: Poly,
}

fn tri_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

impl MatrixField {
    pub fn from_full(role: FieldRole, weight: Poly, full: &[Vec<Poly>], den: Poly) -> Self {
        let dim = full.len();
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                entries.push(full[i][j].clone());
            }
        }
        MatrixField { dim, role, weight, entries, den }
    }

    /// A polynomial field.
    pub fn polynomial(role: FieldRole, weight: Poly, full: &[Vec<Poly>]) -> Self {
        let nv = weight.nvars();
        Self::from_full(role, weight, full, Poly::one(nv))
    }

    pub fn entry(&self, i: usize, j: usize) -> &Poly {
        &self.entries[tri_index(self.dim, i, j)]
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == 0
    }

    /// Entries as polynomials when the denominator is constant.
    pub fn polynomial_entries(&self) -> Option<Vec<Vec<Poly>>> {
        if !self.is_polynomial() {
            return None;
        }
        let inv = self.den.coeff(&vec![0; self.dim]).recip();
        Some(
            (0..self.dim)
                .map(|i| (0..self.dim).map(|j| self.entry(i, j).scale(&inv)).collect())
                .collect(),
        )
    }

    pub fn eval(&self, x: &[Scalar]) -> Vec<Vec<Scalar>> {
        let d = self.den.eval(x);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.entry(i, j).eval(x) / d.clone()).collect())
            .collect()
    }

    /// Row-major values at `x`.
    pub fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        let d = self.den.eval_f64(x);
        let mut out = vec![0.0; self.dim * self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i * self.dim + j] = self.entry(i, j).eval_f64(x) / d;
            }
        }
        out
    }

    pub fn min_eigenvalue(&self, x: &[f64]) -> f64 {
        linalg::min_sym_eigenvalue(&self.eval_f64(x), self.dim)
    }

    /// `Φ = v·H` for an `H` field; a `Φ` field is returned unchanged.
    pub fn to_phi(&self, v: &Poly) -> MatrixField {
        match self.role {
            FieldRole::Phi => self.clone(),
            FieldRole::H => MatrixField {
                dim: self.dim,
                role: FieldRole::Phi,
                weight: v.clone(),
                entries: self.entries.iter().map(|e| e * v).collect(),
                den: self.den.clone(),
            },
        }
    }

    /// `-Σ_ij ∂_i∂_j A_ij` as a rational function.
    pub fn minus_double_divergence(&self) -> RationalFn {
        let n = self.dim;
        let nv = self.den.nvars();
        let d = &self.den;
        let dd: Vec<Poly> = (0..n).map(|i| d.partial(i)).collect();
        if self.is_polynomial() {
            let mut s = Poly::zero(nv);
            for i in 0..n {
                for j in 0..n {
                    s = &s + &self.entry(i, j).partial(i).partial(j);
                }
            }
            let c = d.coeff(&vec![0; nv]);
            return RationalFn::poly((-&s).scale(&c.recip()));
        }
        // D³ ∂a∂b(f/D) = f_ab D² - (f_a D_b + f_b D_a + f D_ab) D + 2 f D_a D_b
        let mut s1 = Poly::zero(nv);
        let mut s2 = Poly::zero(nv);
        let mut s4 = Poly::zero(nv);
        for a in 0..n {
            for b in 0..n {
                let f = self.entry(a, b);
                let fa = f.partial(a);
                let fb = f.partial(b);
                s1 = &s1 + &fa.partial(b);
                s2 = &(&s2 + &(&fa * &dd[b])) + &(&(&fb * &dd[a]) + &(f * &dd[a].partial(b)));
                s4 = &s4 + &(&(f * &dd[a]) * &dd[b]);
            }
        }
        let d2 = d * d;
        let num = &(&(&s1 * &d2) - &(&s2 * d)) + &s4.scale(&Scalar::int(2));
        let mut r = RationalFn { num: -&num, den: &d2 * d };
        for _ in 0..3 {
            match divides(d, &r.num) {
                Some(q) if r.den.degree() >= d.degree() && d.degree() > 0 => {
                    r.num = q;
                    r.den = divides(d, &r.den).expect("den is a power of d");
                }
                _ => break,
            }
        }
        r
    }
}

/// Lattice samples over the bounding box: `values[k]` belongs to the node
/// `origin + h * index`, row-major with the last axis fastest; `None`
/// outside the polytope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub origin: Vec<f64>,
    pub h: f64,
    pub shape: Vec<usize>,
    pub values: Vec<Option<f64>>,
}

impl GridFunction {
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn node(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().zip(&self.origin).map(|(&i, o)| o + i as f64 * self.h).collect()
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn value(&self, idx: &[usize]) -> Option<f64> {
        self.values[self.flat(idx)]
    }

    /// Tensor cubic Lagrange interpolation; NaN when a stencil node is
    /// missing.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let dim = self.dim();
        let mut base = Vec::with_capacity(dim);
        let mut weights: Vec<[f64; 4]> = Vec::with_capacity(dim);
        for a in 0..dim {
            let n = self.shape[a];
            let t = (x[a] - self.origin[a]) / self.h;
            let width = n.min(4);
            let i0 = ((t.floor() as isize) - 1).clamp(0, (n - width) as isize) as usize;
            let mut w = [0.0; 4];
            for k in 0..width {
                let mut l = 1.0;
                for m in 0..width {
                    if m != k {
                        l *= (t - (i0 + m) as f64) / (k as f64 - m as f64);
                    }
                }
                w[k] = l;
            }
            base.push((i0, width));
            weights.push(w);
        }
        let mut acc = 0.0;
        let mut idx = vec![0usize; dim];
        let total: usize = base.iter().map(|b| b.1).product();
        for flat in 0..total {
            let mut rem = flat;
            let mut w = 1.0;
            for a in (0..dim).rev() {
                let k = rem % base[a].1;
                rem /= base[a].1;
                idx[a] = base[a].0 + k;
                w *= weights[a][k];
            }
            match self.value(&idx) {
                Some(v) => acc += w * v,
                None => return f64::NAN,
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Correction {
    None,
    Poly(Poly),
    Grid(GridFunction),
}

#[derive(Clone, Debug)]
pub struct SymplecticPotential {
    polytope: LabelledPolytope,
    /// Whether `u₀` is part of `u`.
    guillemin: bool,
    correction: Correction,
    /// Pieces of a piecewise-linear potential (`u = max pieces`).
    pl: Option<Vec<AffineFunc>>,
}

/// Config form of a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialDoc {
    Guillemin,
    /// `u₀ + q`.
    Poly {
        coeffs: std::collections::BTreeMap<String, Scalar>,
    },
    /// `u₀ + q` with `q` sampled on a lattice.
    Grid {
        origin: Vec<f64>,
        h: f64,
        shape: Vec<usize>,
        values: Vec<Option<f64>>,
    },
    /// `max` of affine pieces, without `u₀`.
    Pl { pieces: Vec<AffineFunc> },
}

/// `u₀ = ½ Σ L_j log L_j`.
pub fn guillemin_potential(p: &LabelledPolytope) -> SymplecticPotential {
    SymplecticPotential::new(p, Correction::None)
}

fn xlogx(t: f64) -> f64 {
    if t > 0.0 { t * t.ln() } else { 0.0 }
}

impl SymplecticPotential {
    /// `u₀ + correction`.
    pub fn new(p: &LabelledPolytope, correction: Correction) -> Self {
        SymplecticPotential {
            polytope: p.clone(),
            guillemin: true,
            correction,
            pl: None,
        }
    }

    /// A convex polynomial without the `u₀` part.
    pub fn bare_poly(p: &LabelledPolytope, q: Poly) -> Self {
        SymplecticPotential {
            polytope: p.clone(),
            guillemin: false,
            correction: Correction::Poly(q),
            pl: None,
        }
    }

    pub fn piecewise_linear(p: &LabelledPolytope, pieces: Vec<AffineFunc>) -> Self {
        SymplecticPotential {
            polytope: p.clone(),
            guillemin: false,
            correction: Correction::None,
            pl: Some(pieces),
        }
    }

    pub fn from_doc(p: &LabelledPolytope, doc: &PotentialDoc) -> Result<Self> {
        Ok(match doc {
            PotentialDoc::Guillemin => guillemin_potential(p),
            PotentialDoc::Poly { coeffs } => {
                let q = Poly::from_table(p.dim(), coeffs).map_err(Error::InvalidInput)?;
                SymplecticPotential::new(p, Correction::Poly(q))
            }
            PotentialDoc::Grid { origin, h, shape, values } => {
                if origin.len() != p.dim() || shape.len() != p.dim() {
                    return Err(Error::InvalidInput("grid dimension does not match the polytope".into()));
                }
                if shape.iter().product::<usize>() != values.len() || *h <= 0.0 {
                    return Err(Error::InvalidInput("grid shape does not match its values".into()));
                }
                SymplecticPotential::new(
                    p,
                    Correction::Grid(GridFunction {
                        origin: origin.clone(),
                        h: *h,
                        shape: shape.clone(),
                        values: values.clone(),
                    }),
                )
            }
            PotentialDoc::Pl { pieces } => SymplecticPotential::piecewise_linear(p, pieces.clone()),
        })
    }

    pub fn to_doc(&self) -> PotentialDoc {
        if let Some(pieces) = &self.pl {
            return PotentialDoc::Pl { pieces: pieces.clone() };
        }
        match &self.correction {
            Correction::None => PotentialDoc::Guillemin,
            Correction::Poly(q) => PotentialDoc::Poly { coeffs: q.to_table() },
            Correction::Grid(g) => PotentialDoc::Grid {
                origin: g.origin.clone(),
                h: g.h,
                shape: g.shape.clone(),
                values: g.values.clone(),
            },
        }
    }

    pub fn polytope(&self) -> &LabelledPolytope {
        &self.polytope
    }

    pub fn correction(&self) -> &Correction {
        &self.correction
    }

    pub fn has_guillemin_part(&self) -> bool {
        self.guillemin
    }

    pub fn is_piecewise_linear(&self) -> bool {
        self.pl.is_some()
    }

    fn correction_value(&self, x: &[f64]) -> f64 {
        match &self.correction {
            Correction::None => 0.0,
            Correction::Poly(q) => q.eval_f64(x),
            Correction::Grid(g) => g.eval(x),
        }
    }

    fn value_from_labels(&self, x: &[f64], labels: &[f64]) -> f64 {
        if let Some(pieces) = &self.pl {
            return pieces.iter().map(|a| a.eval_f64(x)).fold(f64::NEG_INFINITY, f64::max);
        }
        let base = if self.guillemin {
            0.5 * labels.iter().map(|&l| xlogx(l)).sum::<f64>()
        } else {
            0.0
        };
        base + self.correction_value(x)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let labels: Vec<f64> = self.polytope.labels().iter().map(|l| l.eval_f64(x)).collect();
        self.value_from_labels(x, &labels)
    }

    fn correction_hessian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.polytope.dim();
        match &self.correction {
            Correction::None => vec![0.0; n * n],
            Correction::Poly(q) => {
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    let qi = q.partial(i);
                    for j in 0..n {
                        out[i * n + j] = qi.partial(j).eval_f64(x);
                    }
                }
                out
            }
            Correction::Grid(g) => fd_hessian(&|y: &[f64]| g.eval(y), x, g.h),
        }
    }

    /// `M = 2s·Hess u` and `M₀ = 2s·Hess u₀` (row-major) with `s` the
    /// smallest label value.
    fn scaled_hessians(&self, x: &[f64], labels: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.polytope.dim();
        // Scaling by the smallest label keeps every entry bounded; a product
        // of labels underflows near vertices.
        let s = labels.iter().copied().fold(f64::INFINITY, f64::min);
        let mut m0 = vec![0.0; n * n];
        for (nj, l) in self.polytope.normals().iter().zip(labels) {
            for a in 0..n {
                for b in 0..n {
                    m0[a * n + b] += (nj[a] * nj[b]) as f64 * (s / l);
                }
            }
        }
        let mut m = if self.guillemin && self.pl.is_none() { m0.clone() } else { vec![0.0; n * n] };
        if self.pl.is_none() {
            let hq = self.correction_hessian(x);
            for k in 0..n * n {
                m[k] += 2.0 * s * hq[k];
            }
        }
        (m, m0)
    }

    /// `Hess u` at an interior point (row-major).
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.polytope.dim();
        let mut out = vec![0.0; n * n];
        if self.pl.is_some() {
            return out;
        }
        if self.guillemin {
            for (j, lab) in self.polytope.labels().iter().enumerate() {
                let l = lab.eval_f64(x);
                let nj = self.polytope.normal(j);
                for a in 0..n {
                    for b in 0..n {
                        out[a * n + b] += 0.5 * (nj[a] * nj[b]) as f64 / l;
                    }
                }
            }
        }
        let hq = self.correction_hessian(x);
        for k in 0..n * n {
            out[k] += hq[k];
        }
        out
    }

    /// Closed-form `H = (Hess u)^{-1}` for `u₀` plus a polynomial.
    pub fn symbolic_inverse_hessian(&self) -> Option<MatrixField> {
        if !self.guillemin || self.pl.is_some() {
            return None;
        }
        let q = match &self.correction {
            Correction::None => None,
            Correction::Poly(q) => Some(q),
            Correction::Grid(_) => return None,
        };
        let p = &self.polytope;
        let n = p.dim();
        let labels: Vec<Poly> = p.labels().iter().map(AffineFunc::to_poly).collect();
        let prod = labels.iter().fold(Poly::one(n), |acc, l| &acc * l);
        let mut m: Vec<Vec<Poly>> = vec![vec![Poly::zero(n); n]; n];
        for (j, nj) in p.normals().iter().enumerate() {
            let others = labels
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .fold(Poly::one(n), |acc, (_, l)| &acc * l);
            for a in 0..n {
                for b in 0..n {
                    let c = Scalar::int(nj[a] * nj[b]);
                    if !c.is_exact_zero() {
                        m[a][b] = &m[a][b] + &others.scale(&c);
                    }
                }
            }
        }
        if let Some(q) = q {
            let two_prod = prod.scale(&Scalar::int(2));
            for a in 0..n {
                for b in 0..n {
                    m[a][b] = &m[a][b] + &(&two_prod * &q.partial(a).partial(b));
                }
            }
        }
        let adj = poly_adjugate(&m);
        let mut den = poly_det(&m);
        let two_prod = prod.scale(&Scalar::int(2));
        let mut num: Vec<Vec<Poly>> = adj
            .iter()
            .map(|row| row.iter().map(|e| &two_prod * e).collect())
            .collect();
        // cancel common label factors
        for l in &labels {
            loop {
                let Some(dq) = divides(l, &den) else { break };
                let reduced: Option<Vec<Vec<Poly>>> = num
                    .iter()
                    .map(|row| row.iter().map(|e| divides(l, e)).collect())
                    .collect();
                let Some(reduced) = reduced else { break };
                den = dq;
                num = reduced;
            }
        }
        if den.degree() == 0 {
            let inv = den.coeff(&vec![0; n]).recip();
            num = num.iter().map(|row| row.iter().map(|e| e.scale(&inv)).collect()).collect();
            den = Poly::one(n);
        }
        Some(MatrixField::from_full(FieldRole::H, Poly::one(n), &num, den))
    }
}

/// Second differences with step `h` (mixed terms on the 4-point stencil).
fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n * n];
    let shift = |d: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in d {
            y[i] += s;
        }
        f(&y)
    };
    let f0 = f(x);
    for i in 0..n {
        out[i * n + i] = (shift(&[(i, h)]) - 2.0 * f0 + shift(&[(i, -h)])) / (h * h);
        for j in i + 1..n {
            let v = (shift(&[(i, h), (j, h)]) - shift(&[(i, h), (j, -h)]) - shift(&[(i, -h), (j, h)])
                + shift(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    out
}

fn interior_check(p: &LabelledPolytope, x: &[f64], margin: f64) -> Result<()> {
    if x.len() != p.dim() {
        return Err(Error::WrongDimension {
            expected: p.dim().to_string(),
            got: x.len(),
        });
    }
    let dist = p
        .labels()
        .iter()
        .zip(p.normals())
        .map(|(l, n)| l.eval_f64(x) / (n.iter().map(|&a| (a * a) as f64).sum::<f64>()).sqrt())
        .fold(f64::INFINITY, f64::min);
    if dist <= 0.0 {
        return Err(Error::NotInterior { point: x.to_vec() });
    }
    if dist < margin {
        return Err(Error::ProbeTooClose {
            point: x.to_vec(),
            margin,
        });
    }
    Ok(())
}

/// `(Hess u)^{-1}` at an interior point, row-major.
pub fn inverse_hessian(u: &SymplecticPotential, x: &[f64]) -> Result<Vec<f64>> {
    let p = u.polytope();
    let margin = match &u.correction {
        Correction::Grid(g) => g.h,
        _ => 0.0,
    };
    interior_check(p, x, margin)?;
    let n = p.dim();
    let hess = u.hessian(x);
    let min_eig = linalg::min_sym_eigenvalue(&hess, n);
    if !(min_eig > 0.0) {
        return Err(Error::NotConvex {
            point: x.to_vec(),
            min_eig,
        });
    }
    linalg::invert_f64(&hess, n).ok_or(Error::NotConvex {
        point: x.to_vec(),
        min_eig,
    })
}

/// Residuals of the boundary conditions on one facet.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FacetResidual {
    pub facet: usize,
    /// `max |A u_j|` over facet samples.
    pub kernel: f64,
    /// `max |∇(A(u_j, u_j)) - 2 weight u_j|`.
    pub derivative: f64,
    /// Smallest eigenvalue of `A` on `u_j^⊥` at relative-interior samples;
    /// `+∞` in dimension 1.
    pub min_quotient_eig: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub facets: Vec<FacetResidual>,
    pub tol: f64,
    pub passed: bool,
}

impl BoundaryReport {
    pub fn max_residual(&self) -> f64 {
        self.facets
            .iter()
            .map(|f| f.kernel.max(f.derivative))
            .fold(0.0, f64::max)
    }
}

/// Sample points on facet `j`: a barycentric grid over its simplices.
pub fn facet_samples(p: &LabelledPolytope, j: usize, n: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for s in p.region().facet_simplices(j) {
        let corners: Vec<Vec<f64>> = s.iter().map(|q| to_f64_vec(q)).collect();
        for x in barycentric_grid(&corners, n) {
            if !out.iter().any(|y| y.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12)) {
                out.push(x);
            }
        }
    }
    out
}

fn orth_complement(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<f64>> = vec![u.iter().map(|a| a / nu).collect()];
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        for b in &basis {
            let d: f64 = e.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in e.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let ne = e.iter().map(|a| a * a).sum::<f64>().sqrt();
        if ne > 1e-8 {
            basis.push(e.iter().map(|a| a / ne).collect());
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Checks `A u_j = 0` and `∇(A(u_j,u_j)) = 2·weight·u_j` on every facet,
/// and positivity of `A` transverse to `u_j` inside each facet.
pub fn check_boundary_conditions(field: &MatrixField, p: &LabelledPolytope, tol: f64) -> BoundaryReport {
    let n = p.dim();
    let facets: Vec<FacetResidual> = (0..p.num_facets())
        .into_par_iter()
        .map(|j| {
            let u: Vec<Scalar> = p.normal(j).iter().map(|&a| Scalar::int(a)).collect();
            let uf: Vec<f64> = p.normal(j).iter().map(|&a| a as f64).collect();
            // A u_j and A(u_j, u_j) as numerators over the common denominator
            let au: Vec<Poly> = (0..n)
                .map(|a| {
                    (0..n).fold(Poly::zero(n), |acc, b| &acc + &field.entry(a, b).scale(&u[b]))
                })
                .collect();
            let auu = (0..n).fold(Poly::zero(n), |acc, a| &acc + &au[a].scale(&u[a]));
            let grad: Vec<Poly> = (0..n).map(|a| auu.partial(a)).collect();
            let mut kernel = 0.0f64;
            let mut derivative = 0.0f64;
            let mut min_q = f64::INFINITY;
            let others: Vec<&AffineFunc> = p.labels().iter().enumerate().filter(|(k, _)| *k != j).map(|(_, l)| l).collect();
            let complement = orth_complement(&uf);
            for x in facet_samples(p, j, 6) {
                let d = field.den.eval_f64(&x);
                for a in 0..n {
                    kernel = kernel.max((au[a].eval_f64(&x) / d).abs());
                }
                // the numerator of A(u_j,u_j) vanishes here, so ∇(num/den) = ∇num/den
                let w = field.weight.eval_f64(&x);
                let dev = (0..n)
                    .map(|a| (grad[a].eval_f64(&x) / d - 2.0 * w * uf[a]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                derivative = derivative.max(dev);
                let relative_interior = others.iter().all(|l| l.eval_f64(&x) > 1e-9);
                if n > 1 && relative_interior {
                    let a = field.eval_f64(&x);
                    let k = complement.len();
                    let mut q = vec![0.0; k * k];
                    for r in 0..k {
                        for s in 0..k {
                            let mut acc = 0.0;
                            for i in 0..n {
                                for t in 0..n {
                                    acc += complement[r][i] * a[i * n + t] * complement[s][t];
                                }
                            }
                            q[r * k + s] = acc;
                        }
                    }
                    min_q = min_q.min(linalg::min_sym_eigenvalue(&q, k));
                }
            }
            FacetResidual {
                facet: j,
                kernel,
                derivative,
                min_quotient_eig: min_q,
            }
        })
        .collect();
    let passed = facets
        .iter()
        .all(|f| f.kernel <= tol && f.derivative <= tol && f.min_quotient_eig > 0.0);
    BoundaryReport { facets, tol, passed }
}

/// How `Scal_v` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ScalMode {
    /// Symbolic when a closed-form `H` exists, else finite differences with
    /// the default step.
    Auto,
    Symbolic,
    FiniteDiff { h: f64 },
}

/// Default finite-difference step: 1/256 of the bounding-box diameter in
/// dimension 1 and 1/128 beyond.
pub fn default_fd_step(p: &LabelledPolytope) -> f64 {
    let verts = p.region().vertices_f64();
    let n = p.dim();
    let diam = (0..n)
        .map(|a| {
            let lo = verts.iter().map(|v| v[a]).fold(f64::INFINITY, f64::min);
            let hi = verts.iter().map(|v| v[a]).fold(f64::NEG_INFINITY, f64::max);
            (hi - lo).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    diam / if n == 1 { 256.0 } else { 128.0 }
}

/// `Scal_v(u) = -Σ (v H_ij)_{,ij}` in closed form.
pub fn v_scalar_curvature_symbolic(u: &SymplecticPotential, v: &Poly) -> Option<RationalFn> {
    u.symbolic_inverse_hessian().map(|h| h.to_phi(v).minus_double_divergence())
}

/// `Scal_v(u)` at each probe.
pub fn v_scalar_curvature(u: &SymplecticPotential, v: &Poly, probes: &[Vec<f64>], mode: ScalMode) -> Result<Vec<f64>> {
    let symbolic = match mode {
        ScalMode::FiniteDiff { .. } => None,
        _ => v_scalar_curvature_symbolic(u, v),
    };
    if let Some(s) = symbolic {
        for x in probes {
            interior_check(u.polytope(), x, 0.0)?;
        }
        return Ok(probes.iter().map(|x| s.eval_f64(x)).collect());
    }
    if mode == ScalMode::Symbolic {
        return Err(Error::InvalidInput("no closed-form inverse Hessian for this potential".into()));
    }
    let h = match (mode, &u.correction) {
        (ScalMode::FiniteDiff { h }, _) => h,
        (_, Correction::Grid(g)) => g.h,
        _ => default_fd_step(u.polytope()),
    };
    probes.par_iter().map(|x| scal_fd(u, v, x, h)).collect()
}

fn scal_fd(u: &SymplecticPotential, v: &Poly, x: &[f64], h: f64) -> Result<f64> {
    let p = u.polytope();
    interior_check(p, x, 4.0 * h)?;
    let n = p.dim();
    let f = |y: &[f64]| u.eval_f64(y);
    let phi = |y: &[f64]| -> Result<Vec<f64>> {
        let hess = fd_hessian(&f, y, h);
        let min_eig = linalg::min_sym_eigenvalue(&hess, n);
        let inv = linalg::invert_f64(&hess, n).filter(|_| min_eig > 0.0).ok_or(Error::NotConvex {
            point: y.to_vec(),
            min_eig,
        })?;
        let vy = v.eval_f64(y);
        Ok(inv.into_iter().map(|e| vy * e).collect())
    };
    let at = |d: &[(usize, f64)]| -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        for &(i, s) in d {
            y[i] += s;
        }
        phi(&y)
    };
    let c = phi(x)?;
    let mut acc = 0.0;
    for i in 0..n {
        let ii = i * n + i;
        acc += (at(&[(i, h)])?[ii] - 2.0 * c[ii] + at(&[(i, -h)])?[ii]) / (h * h);
        for j in i + 1..n {
            let ij = i * n + j;
            let mixed = (at(&[(i, h), (j, h)])?[ij] - at(&[(i, h), (j, -h)])?[ij] - at(&[(i, -h), (j, h)])?[ij]
                + at(&[(i, -h), (j, -h)])?[ij])
                / (4.0 * h * h);
            acc += 2.0 * mixed;
        }
    }
    Ok(-acc)
}

/// `|∫ Σ Φ_ij f_,ij - ∫ Σ Φ_ij,ij f - 2∫_{∂P} f v dσ|` with `Φ = vH`.
pub fn ibp_residual(p: &LabelledPolytope, v: &Poly, h: &MatrixField, f: &Poly) -> f64 {
    let n = p.dim();
    let phi = h.to_phi(v);
    let boundary = integrate_boundary(p, &(f * v)) * Scalar::int(2);
    let scal = phi.minus_double_divergence();
    if let Some(entries) = phi.polynomial_entries() {
        let mut lhs = Poly::zero(n);
        for i in 0..n {
            for j in 0..n {
                lhs = &lhs + &(&entries[i][j] * &f.partial(i).partial(j));
            }
        }
        let scal = scal.to_poly().expect("polynomial field");
        let r = integrate_interior(p, &lhs) + integrate_interior(p, &(&scal * f)) - boundary;
        return r.to_f64().abs();
    }
    let hess: Vec<Poly> = (0..n * n).map(|k| f.partial(k / n).partial(k % n)).collect();
    let lhs = integrate_interior_fn(p, &|node: &Node| {
        let a = phi.eval_f64(&node.x);
        (0..n * n).map(|k| a[k] * hess[k].eval_f64(&node.x)).sum()
    });
    let mid = integrate_interior_fn(p, &|node: &Node| scal.eval_f64(&node.x) * f.eval_f64(&node.x));
    (lhs + mid - boundary.to_f64()).abs()
}

/// Fraction of probes above which a vanishing `det Hess u` makes the
/// energy `+∞`.
pub const DEGENERATE_FRACTION: f64 = 0.01;
const DEGENERATE_DET: f64 = 1e-14;

fn interior_probes(p: &LabelledPolytope, n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for s in p.region().simplices() {
        let corners: Vec<Vec<f64>> = s.iter().map(|q| to_f64_vec(q)).collect();
        for x in barycentric_grid(&corners, n) {
            if p.region().contains_interior_f64(&x, 1e-9) {
                out.push(x);
            }
        }
    }
    out
}

/// `M(u) = F(u) - ∫_P v log det(Hess u · Hess u₀^{-1}) dx`, or `+∞` when
/// `Hess u` degenerates on a set of positive measure.
pub fn mabuchi_energy(p: &LabelledPolytope, ws: &WeightSystem, u: &SymplecticPotential) -> f64 {
    let n = p.dim();
    let probes = interior_probes(p, 10);
    let degenerate = probes
        .par_iter()
        .filter(|x| linalg::det_f64(&u.hessian(x), n) < DEGENERATE_DET)
        .count();
    if probes.is_empty() || degenerate as f64 > DEGENERATE_FRACTION * probes.len() as f64 {
        return f64::INFINITY;
    }
    let fut = match (&u.correction, u.guillemin) {
        (Correction::Poly(q), true) => {
            futaki_fn(p, ws, &|node: &Node| 0.5 * node.constraints.iter().map(|&l| xlogx(l)).sum::<f64>())
                + futaki_poly(p, ws, q).to_f64()
        }
        _ => futaki_fn(p, ws, &|node: &Node| u.value_from_labels(&node.x, &node.constraints)),
    };
    let logdet = integrate_interior_fn(p, &|node: &Node| {
        let (m, m0) = u.scaled_hessians(&node.x, &node.constraints);
        let d0 = linalg::det_f64(&m0, n);
        // Nodes this close to a facet carry negligible weight.
        if !(d0 > 1e-250) {
            return 0.0;
        }
        ws.v.eval_f64(&node.x) * (linalg::det_f64(&m, n) / d0).ln()
    });
    fut - logdet
}

/// Adds the constant that makes `∫ u v = ∫ u₀ v`.
pub fn normalize_potential(p: &LabelledPolytope, v: &Poly, u: &SymplecticPotential) -> SymplecticPotential {
    let n = p.dim();
    let vol = integrate_interior(p, v);
    let mut out = u.clone();
    match (&u.correction, u.guillemin, &u.pl) {
        (Correction::None, true, None) => {}
        (Correction::Poly(q), true, None) => {
            let shift = integrate_interior(p, &(q * v)) / vol;
            out.correction = Correction::Poly(q - &Poly::constant(n, shift));
        }
        _ => {
            let xlog = |node: &Node| 0.5 * node.constraints.iter().map(|&l| xlogx(l)).sum::<f64>();
            let target = integrate_interior_fn(p, &|node| xlog(node) * v.eval_f64(&node.x));
            let cur = integrate_interior_fn(p, &|node| u.value_from_labels(&node.x, &node.constraints) * v.eval_f64(&node.x));
            let shift = (cur - target) / vol.to_f64();
            if let Some(pieces) = &u.pl {
                let s = AffineFunc::constant(n, Scalar::Float(shift));
                out.pl = Some(pieces.iter().map(|a| a.sub(&s)).collect());
            } else {
                out.correction = match &u.correction {
                    Correction::None => Correction::Poly(Poly::constant(n, Scalar::Float(-shift))),
                    Correction::Poly(q) => Correction::Poly(q - &Poly::constant(n, Scalar::Float(shift))),
                    Correction::Grid(g) => {
                        let mut g = g.clone();
                        for val in g.values.iter_mut().flatten() {
                            *val -= shift;
                        }
                        Correction::Grid(g)
                    }
                };
            }
        }
    }
    out
}
