//! Integration over polytopes and their facets.
//!
//! Polynomials are integrated exactly: the region is fan-triangulated and
//! each simplex is pulled back to the standard simplex, where monomials
//! have closed-form integrals. Facets carry the measure `dσ` fixed by
//! `dL_j ∧ dσ = -dx`, i.e. Euclidean facet measure divided by `|u_j|`.
//!
//! Transcendental integrands (`L log L`, `log det`) go through a tensor
//! tanh-sinh rule on the same simplices; its nodes never touch the boundary.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{LabelledPolytope, Region, Simplex};
use crate::linalg;
use crate::poly::Poly;
use crate::scalar::{dot, Scalar};
use crate::stability::CreaseFunction;

fn diffs(s: &Simplex) -> Vec<Vec<Scalar>> {
    let p0 = &s[0];
    s[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect()
}

fn simplex_integral(s: &Simplex, f: &Poly) -> Scalar {
    let d = diffs(s);
    let jac = linalg::determinant(&d).abs();
    f.compose_affine(&s[0], &d).integrate_standard_simplex() * jac
}

/// `|det[e, t_1, .., t_{l-1}]|` with `e = n / |n|^2`; the dσ Jacobian of a
/// facet simplex for a constraint with normal `n`.
fn facet_jacobian(normal: &[Scalar], d: &[Vec<Scalar>]) -> Scalar {
    let nn = dot(normal, normal);
    let e: Vec<Scalar> = normal.iter().map(|a| a / &nn).collect();
    let mut m = vec![e];
    m.extend(d.iter().cloned());
    linalg::determinant(&m).abs()
}

fn facet_simplex_integral(s: &Simplex, normal: &[Scalar], f: &Poly) -> Scalar {
    let d = diffs(s);
    let jac = facet_jacobian(normal, &d);
    f.compose_affine(&s[0], &d).integrate_standard_simplex() * jac
}

/// `∫_R f dx` over a region.
pub fn integrate_region(r: &Region, f: &Poly) -> Scalar {
    r.simplices().iter().map(|s| simplex_integral(s, f)).sum()
}

pub fn volume(r: &Region) -> Scalar {
    integrate_region(r, &Poly::one(r.dim()))
}

/// `∫ f dσ` over the face of `r` cut out by constraint `k` (zero when that
/// face is not a facet), with dσ built from the constraint's normal.
pub fn integrate_region_face(r: &Region, k: usize, f: &Poly) -> Scalar {
    let normal = &r.constraints()[k].normal;
    r.facet_simplices(k)
        .iter()
        .map(|s| facet_simplex_integral(s, normal, f))
        .sum()
}

/// `∫_P f dx`.
pub fn integrate_interior(p: &LabelledPolytope, f: &Poly) -> Scalar {
    integrate_region(p.region(), f)
}

/// `∫_{F_j} f dσ`.
pub fn integrate_facet(p: &LabelledPolytope, j: usize, f: &Poly) -> Result<Scalar> {
    if j >= p.num_facets() {
        return Err(Error::InvalidFacet {
            index: j,
            count: p.num_facets(),
        });
    }
    Ok(integrate_region_face(p.region(), j, f))
}

/// `∫_{∂P} f dσ`.
pub fn integrate_boundary(p: &LabelledPolytope, f: &Poly) -> Scalar {
    (0..p.num_facets())
        .map(|j| integrate_region_face(p.region(), j, f))
        .sum()
}

/// Boundary integral restricted to the part of `∂P` inside a sub-region
/// built by adding constraints to `P`: only the first `labels` constraints
/// (the polytope's own) carry boundary mass.
pub fn integrate_sub_boundary(r: &Region, labels: usize, f: &Poly) -> Scalar {
    (0..labels).map(|k| integrate_region_face(r, k, f)).sum()
}

/// `∫_{P ∩ {<h,x> >= c}} (<h,x> - c) g dx`.
pub fn integrate_crease(p: &LabelledPolytope, crease: &CreaseFunction, g: &Poly) -> Scalar {
    let r = p.clip(&crease.h, &crease.c);
    if r.is_negligible() {
        return Scalar::zero();
    }
    let lin = Poly::affine(&crease.h, &-&crease.c);
    integrate_region(&r, &(&lin * g))
}

/// `∫_{∂P ∩ {<h,x> >= c}} (<h,x> - c) g dσ`.
pub fn integrate_crease_boundary(p: &LabelledPolytope, crease: &CreaseFunction, g: &Poly) -> Scalar {
    let r = p.clip(&crease.h, &crease.c);
    if r.vertices().is_empty() {
        return Scalar::zero();
    }
    let lin = Poly::affine(&crease.h, &-&crease.c);
    integrate_sub_boundary(&r, p.num_facets(), &(&lin * g))
}

// ---------------------------------------------------------------------------
// Numerical rule for non-polynomial integrands.

/// A quadrature node: coordinates plus the values of the region's
/// constraints, computed barycentrically so they keep relative accuracy
/// next to the boundary.
#[derive(Clone, Debug)]
pub struct Node {
    pub x: Vec<f64>,
    pub constraints: Vec<f64>,
}

struct TanhSinh {
    /// (x, 1 - x, weight) on [0, 1].
    nodes: Vec<(f64, f64, f64)>,
}

fn tanh_sinh() -> &'static TanhSinh {
    static RULE: OnceLock<TanhSinh> = OnceLock::new();
    RULE.get_or_init(|| {
        let h = 1.0 / 12.0;
        let tmax = 3.0;
        let n = (tmax / h) as i64;
        let half_pi = std::f64::consts::FRAC_PI_2;
        let nodes = (-n..=n)
            .map(|k| {
                let t = k as f64 * h;
                let s = half_pi * t.sinh();
                let x = 1.0 / (1.0 + (-2.0 * s).exp());
                let xc = 1.0 / (1.0 + (2.0 * s).exp());
                let w = h * half_pi * t.cosh() / (2.0 * s.cosh().powi(2));
                (x, xc, w)
            })
            .collect();
        TanhSinh { nodes }
    })
}

/// Integrates `f` over a `k`-simplex embedded in `R^dim` against the
/// standard-simplex measure (caller multiplies by the Jacobian).
fn simplex_numeric(
    corners: &[Vec<f64>],
    corner_constraints: &[Vec<f64>],
    f: &(dyn Fn(&Node) -> f64 + Sync),
) -> f64 {
    let k = corners.len() - 1;
    let dim = corners[0].len();
    let rule = &tanh_sinh().nodes;
    if k == 0 {
        return f(&Node {
            x: corners[0].clone(),
            constraints: corner_constraints[0].clone(),
        });
    }
    let mut idx = vec![0usize; k];
    let mut total = 0.0;
    let m = rule.len();
    loop {
        // stick-breaking: b_i = xi_i * prod_{j<i} (1 - xi_j), b_0 = prod (1 - xi_j)
        let mut rem = 1.0;
        let mut jac = 1.0;
        let mut w = 1.0;
        let mut bary = vec![0.0; k + 1];
        for i in 0..k {
            let (xi, xic, wi) = rule[idx[i]];
            bary[i + 1] = rem * xi;
            if i + 1 < k {
                jac *= xic.powi((k - i - 1) as i32);
            }
            rem *= xic;
            w *= wi;
        }
        bary[0] = rem;
        let mut x = vec![0.0; dim];
        for (b, c) in bary.iter().zip(corners) {
            for d in 0..dim {
                x[d] += b * c[d];
            }
        }
        let nc = corner_constraints[0].len();
        let mut cons = vec![0.0; nc];
        for (b, cc) in bary.iter().zip(corner_constraints) {
            for d in 0..nc {
                cons[d] += b * cc[d];
            }
        }
        if w * jac > 0.0 {
            total += w * jac * f(&Node { x, constraints: cons });
        }
        let mut i = 0;
        loop {
            idx[i] += 1;
            if idx[i] < m {
                break;
            }
            idx[i] = 0;
            i += 1;
            if i == k {
                return total;
            }
        }
    }
}

fn corner_data(r: &Region, s: &Simplex) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let corners: Vec<Vec<f64>> = s.iter().map(|p| crate::scalar::to_f64_vec(p)).collect();
    let cons = s
        .iter()
        .map(|p| r.constraints().iter().map(|c| c.eval(p).to_f64().max(0.0)).collect())
        .collect();
    (corners, cons)
}

/// Numerical `∫_R f dx`.
pub fn integrate_region_fn(r: &Region, f: &(dyn Fn(&Node) -> f64 + Sync)) -> f64 {
    use rayon::prelude::*;
    let simplices = r.simplices();
    simplices
        .par_iter()
        .map(|s| {
            let jac = linalg::determinant(&diffs(s)).abs().to_f64();
            let (corners, cons) = corner_data(r, s);
            jac * simplex_numeric(&corners, &cons, f)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// Numerical `∫ f dσ` over the facet of `r` cut out by constraint `k`.
pub fn integrate_region_face_fn(r: &Region, k: usize, f: &(dyn Fn(&Node) -> f64 + Sync)) -> f64 {
    let normal = &r.constraints()[k].normal;
    r.facet_simplices(k)
        .iter()
        .map(|s| {
            let jac = facet_jacobian(normal, &diffs(s)).to_f64();
            let (corners, mut cons) = corner_data(r, s);
            for c in cons.iter_mut() {
                c[k] = 0.0;
            }
            jac * simplex_numeric(&corners, &cons, f)
        })
        .sum()
}

pub fn integrate_interior_fn(p: &LabelledPolytope, f: &(dyn Fn(&Node) -> f64 + Sync)) -> f64 {
    integrate_region_fn(p.region(), f)
}

pub fn integrate_boundary_fn(p: &LabelledPolytope, f: &(dyn Fn(&Node) -> f64 + Sync)) -> f64 {
    (0..p.num_facets())
        .map(|j| integrate_region_face_fn(p.region(), j, f))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LabelledPolytope;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    fn unit() -> LabelledPolytope {
        LabelledPolytope::interval(Scalar::zero(), Scalar::one()).unwrap()
    }

    #[test]
    fn interior_examples() {
        let tri = LabelledPolytope::simplex(2).unwrap();
        assert_eq!(integrate_interior(&tri, &Poly::one(2)), q(1, 2));
        assert_eq!(integrate_interior(&tri, &Poly::var(2, 0)), q(1, 6));
        assert_eq!(integrate_interior(&unit(), &Poly::var(1, 0)), q(1, 2));
    }

    #[test]
    fn facet_examples() {
        let seg = unit();
        // facet 0 is {x = 0}
        assert_eq!(integrate_facet(&seg, 0, &Poly::one(1)).unwrap(), q(1, 1));
        let tri = LabelledPolytope::simplex(2).unwrap();
        assert_eq!(integrate_facet(&tri, 2, &Poly::one(2)).unwrap(), q(1, 1));
        let total: Scalar = (0..3).map(|j| integrate_facet(&tri, j, &Poly::one(2)).unwrap()).sum();
        assert_eq!(total, q(3, 1));
        assert!(matches!(
            integrate_facet(&tri, 3, &Poly::one(2)),
            Err(Error::InvalidFacet { index: 3, count: 3 })
        ));
    }

    #[test]
    fn boundary_examples() {
        let tri = LabelledPolytope::simplex(2).unwrap();
        assert_eq!(integrate_boundary(&tri, &Poly::one(2)), q(3, 1));
        assert_eq!(integrate_boundary(&unit(), &Poly::var(1, 0)), q(1, 1));
        assert_eq!(integrate_facet(&tri, 1, &Poly::var(2, 0)).unwrap(), q(1, 2));
        assert_eq!(integrate_facet(&tri, 2, &Poly::var(2, 0)).unwrap(), q(1, 2));
        assert_eq!(integrate_facet(&tri, 0, &Poly::var(2, 0)).unwrap(), q(0, 1));
        assert_eq!(integrate_boundary(&tri, &Poly::var(2, 0)), q(1, 1));
    }

    #[test]
    fn crease_examples() {
        let seg = unit();
        let cr = CreaseFunction::new(vec![Scalar::one()], q(1, 2));
        assert_eq!(integrate_crease(&seg, &cr, &Poly::one(1)), q(1, 8));
        assert_eq!(integrate_crease(&seg, &cr, &Poly::constant(1, Scalar::int(4))), q(1, 2));
        let tri = LabelledPolytope::simplex(2).unwrap();
        let cr = CreaseFunction::new(vec![Scalar::one(), Scalar::zero()], Scalar::int(2));
        assert_eq!(integrate_crease(&tri, &cr, &Poly::one(2)), q(0, 1));
    }

    #[test]
    fn scaled_label_keeps_dsigma() {
        let a = LabelledPolytope::new(&[vec![1, 0], vec![0, 1], vec![-1, -1]], &[Scalar::zero(), Scalar::zero(), Scalar::one()]).unwrap();
        let b = LabelledPolytope::new(&[vec![3, 0], vec![0, 1], vec![-2, -2]], &[Scalar::zero(), Scalar::zero(), Scalar::int(2)]).unwrap();
        let f = &Poly::var(2, 0) * &Poly::var(2, 1);
        for j in 0..3 {
            assert_eq!(integrate_facet(&a, j, &f).unwrap(), integrate_facet(&b, j, &f).unwrap());
        }
    }

    #[test]
    fn numeric_rule_matches_exact() {
        let tri = LabelledPolytope::simplex(2).unwrap();
        let f = &Poly::var(2, 0) * &Poly::var(2, 1);
        let exact = integrate_interior(&tri, &f).to_f64();
        let num = integrate_interior_fn(&tri, &|n: &Node| n.x[0] * n.x[1]);
        assert!((exact - num).abs() < 1e-13, "{exact} vs {num}");
        let exact_b = integrate_boundary(&tri, &f).to_f64();
        let num_b = integrate_boundary_fn(&tri, &|n: &Node| n.x[0] * n.x[1]);
        assert!((exact_b - num_b).abs() < 1e-13);
    }

    #[test]
    fn numeric_rule_handles_log_singularity() {
        // ∫_0^1 x ln x dx = -1/4
        let v = integrate_interior_fn(&unit(), &|n: &Node| {
            let x = n.constraints[0];
            if x > 0.0 { x * x.ln() } else { 0.0 }
        });
        assert!((v + 0.25).abs() < 1e-13, "{v}");
        // ∫_Δ ln x1 dx = -3/4
        let tri = LabelledPolytope::simplex(2).unwrap();
        let v = integrate_interior_fn(&tri, &|n: &Node| n.constraints[0].ln());
        assert!((v + 0.75).abs() < 1e-10, "{v}");
    }
}
