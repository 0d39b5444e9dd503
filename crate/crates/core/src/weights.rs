//! Fibration weights `(v, w)` and the extremal affine function.
//!
//! For base factors `(p_a, c_a, d_a, Scal_a)`:
//!
//! ```text
//! v(x) = prod_a (<p_a, x> + c_a)^{d_a}
//! w(x) = v(x) * l_ext(x) - v(x) * sum_a Scal_a / (<p_a, x> + c_a)
//! ```
//!
//! The second summand of `w` is a polynomial (`base_term`) because every
//! `d_a >= 1`. `l_ext` is pinned down by requiring the weighted Futaki
//! invariant to vanish on affine functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AffineFunc, LabelledPolytope};
use crate::linalg::{self, Matrix};
use crate::poly::Poly;
use crate::quadrature::{integrate_boundary, integrate_interior};
use crate::scalar::Scalar;
use crate::stability::{futaki, TestFunction};

/// One base factor `S_a` of the fibration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub p: Vec<i64>,
    pub c: Scalar,
    pub d: u32,
    pub scal: Scalar,
}

impl Factor {
    /// `<p, x> + c` as a polynomial.
    pub fn affine(&self) -> Poly {
        let normal: Vec<Scalar> = self.p.iter().map(|&a| Scalar::int(a)).collect();
        Poly::affine(&normal, &self.c)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FibrationData {
    pub factors: Vec<Factor>,
}

impl FibrationData {
    pub fn toric() -> Self {
        FibrationData::default()
    }

    pub fn single(p: Vec<i64>, c: Scalar, d: u32, scal: Scalar) -> Self {
        FibrationData {
            factors: vec![Factor { p, c, d, scal }],
        }
    }

    pub fn total_base_dim(&self) -> u32 {
        self.factors.iter().map(|f| f.d).sum()
    }

    /// Checks arities, `d >= 1`, and `<p_a, x> + c_a > 0` on every vertex.
    pub fn validate(&self, p: &LabelledPolytope) -> Result<()> {
        for (a, f) in self.factors.iter().enumerate() {
            if f.p.len() != p.dim() {
                return Err(Error::InvalidInput(format!(
                    "factor {a}: p has {} entries, polytope dimension is {}",
                    f.p.len(),
                    p.dim()
                )));
            }
            if f.d == 0 {
                return Err(Error::InvalidInput(format!("factor {a}: d must be >= 1")));
            }
            let aff = f.affine();
            for v in p.vertices() {
                let val = aff.eval(v);
                if val.sign() <= 0 {
                    return Err(Error::NonPositiveWeight {
                        vertex: crate::scalar::to_f64_vec(v),
                        value: val.to_f64(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Which sign the interior term of the Futaki invariant carries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FutakiSign {
    /// `2∫_{∂P} f v dσ - ∫_P f w dx`; vanishes on affine functions for the
    /// fibration weights and reproduces the unweighted toric functional.
    #[default]
    Consistent,
    /// `2∫_{∂P} f v dσ + ∫_P f w dx`, the sign as literally printed.
    Literal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightSystem {
    pub v: Poly,
    pub w: Poly,
    /// Present when the weights come from fibration data.
    pub ell_ext: Option<AffineFunc>,
    pub base_term: Poly,
    #[serde(default)]
    pub sign: FutakiSign,
}

/// `v = prod_a (<p_a, x> + c_a)^{d_a}`; the constant 1 for no factors.
pub fn make_v(p: &LabelledPolytope, fib: &FibrationData) -> Result<Poly> {
    fib.validate(p)?;
    Ok(fib
        .factors
        .iter()
        .fold(Poly::one(p.dim()), |acc, f| &acc * &f.affine().pow(f.d)))
}

/// `v * sum_a Scal_a / (<p_a,x> + c_a)`, expanded without division.
pub fn base_term(dim: usize, fib: &FibrationData) -> Poly {
    let mut out = Poly::zero(dim);
    for (a, fa) in fib.factors.iter().enumerate() {
        let mut t = fa.affine().pow(fa.d - 1).scale(&fa.scal);
        for (b, fb) in fib.factors.iter().enumerate() {
            if a != b {
                t = &t * &fb.affine().pow(fb.d);
            }
        }
        out = &out + &t;
    }
    out
}

fn affine_basis(dim: usize) -> Vec<Poly> {
    let mut b = vec![Poly::one(dim)];
    b.extend((0..dim).map(|i| Poly::var(dim, i)));
    b
}

/// Solves the Gram system `A z = b` for `l_ext = z_0 + sum_i z_i x_i`.
pub fn solve_extremal_affine(p: &LabelledPolytope, fib: &FibrationData) -> Result<AffineFunc> {
    let v = make_v(p, fib)?;
    let base = base_term(p.dim(), fib);
    extremal_affine_for(p, &v, &base)
}

fn extremal_affine_for(p: &LabelledPolytope, v: &Poly, base: &Poly) -> Result<AffineFunc> {
    let basis = affine_basis(p.dim());
    let n = basis.len();
    let a: Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| integrate_interior(p, &(&(&basis[i] * &basis[j]) * v)))
                .collect()
        })
        .collect();
    let b: Vec<Scalar> = basis
        .iter()
        .map(|f| {
            integrate_boundary(p, &(f * v)) * Scalar::int(2) + integrate_interior(p, &(f * base))
        })
        .collect();
    let af: Vec<f64> = a.iter().flatten().map(Scalar::to_f64).collect();
    let eig = nalgebra::DMatrix::from_row_slice(n, n, &af).symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 || hi / lo > 1e12 {
        return Err(Error::IllConditioned(if lo <= 0.0 { f64::INFINITY } else { hi / lo }));
    }
    let z = linalg::solve(&a, &b).ok_or(Error::IllConditioned(f64::INFINITY))?;
    Ok(AffineFunc::new(z[1..].to_vec(), z[0].clone()))
}

/// `w = v * l_ext - base_term`.
pub fn make_w(p: &LabelledPolytope, fib: &FibrationData, ell_ext: &AffineFunc) -> Result<Poly> {
    let v = make_v(p, fib)?;
    Ok(&(&v * &ell_ext.to_poly()) - &base_term(p.dim(), fib))
}

impl WeightSystem {
    /// Weights of a semi-simple principal toric fibration over `p`.
    pub fn from_fibration(p: &LabelledPolytope, fib: &FibrationData) -> Result<Self> {
        let v = make_v(p, fib)?;
        let base = base_term(p.dim(), fib);
        let ell = extremal_affine_for(p, &v, &base)?;
        let w = &(&v * &ell.to_poly()) - &base;
        Ok(WeightSystem {
            v,
            w,
            ell_ext: Some(ell),
            base_term: base,
            sign: FutakiSign::Consistent,
        })
    }

    /// Arbitrary polynomial weights; `v` must be positive on `p`.
    pub fn explicit(p: &LabelledPolytope, v: Poly, w: Poly) -> Result<Self> {
        if v.nvars() != p.dim() || w.nvars() != p.dim() {
            return Err(Error::InvalidInput("weight arity does not match polytope dimension".into()));
        }
        check_positive(p, &v)?;
        Ok(WeightSystem {
            base_term: Poly::zero(p.dim()),
            v,
            w,
            ell_ext: None,
            sign: FutakiSign::Consistent,
        })
    }

    pub fn with_sign(mut self, sign: FutakiSign) -> Self {
        self.sign = sign;
        self
    }

    pub fn is_fibration(&self) -> bool {
        self.ell_ext.is_some()
    }

    /// `F(1), F(x_1), ..., F(x_l)`.
    pub fn affine_residuals(&self, p: &LabelledPolytope) -> Vec<Scalar> {
        affine_basis(p.dim())
            .into_iter()
            .map(|f| futaki(p, self, &TestFunction::Poly(f)))
            .collect()
    }

    pub fn max_affine_residual(&self, p: &LabelledPolytope) -> f64 {
        self.affine_residuals(p)
            .iter()
            .map(|r| r.to_f64().abs())
            .fold(0.0, f64::max)
    }
}

/// Positivity of `v` at the vertices and on a barycentric grid of each
/// simplex of the fan triangulation.
pub fn check_positive(p: &LabelledPolytope, v: &Poly) -> Result<()> {
    for x in p.vertices() {
        let val = v.eval(x);
        if val.sign() <= 0 {
            return Err(Error::NonPositiveWeight {
                vertex: crate::scalar::to_f64_vec(x),
                value: val.to_f64(),
            });
        }
    }
    let n = 12;
    for s in p.region().simplices() {
        let corners: Vec<Vec<f64>> = s.iter().map(|q| crate::scalar::to_f64_vec(q)).collect();
        for x in barycentric_grid(&corners, n) {
            let val = v.eval_f64(&x);
            if val <= 0.0 {
                return Err(Error::NonPositiveWeight { vertex: x, value: val });
            }
        }
    }
    Ok(())
}

/// Points `sum_i (k_i / n) c_i` with `sum k_i = n`.
pub fn barycentric_grid(corners: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let k = corners.len();
    let dim = corners[0].len();
    let mut out = Vec::new();
    for e in Poly::exponents_up_to(k, n as u32) {
        if e.iter().sum::<u32>() as usize != n {
            continue;
        }
        let mut x = vec![0.0; dim];
        for (ki, c) in e.iter().zip(corners) {
            for d in 0..dim {
                x[d] += *ki as f64 / n as f64 * c[d];
            }
        }
        out.push(x);
    }
    out
}
