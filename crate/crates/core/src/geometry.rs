//! Labelled Delzant polytopes and general convex regions.
//!
//! A polytope is stored as its inequalities `L_j(x) = <u_j, x> + lambda_j >= 0`
//! together with the vertices found by intersecting every `dim`-subset of
//! the hyperplanes. Coordinates are in the standard lattice basis.

use std::collections::HashSet;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::poly::Poly;
use crate::scalar::{dot, Scalar};

pub const MAX_DIM: usize = 4;

pub type Point = Vec<Scalar>;

/// `x -> <normal, x> + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineFunc {
    pub normal: Vec<Scalar>,
    pub offset: Scalar,
}

impl AffineFunc {
    pub fn new(normal: Vec<Scalar>, offset: Scalar) -> Self {
        AffineFunc { normal, offset }
    }

    pub fn constant(dim: usize, c: Scalar) -> Self {
        AffineFunc::new(vec![Scalar::zero(); dim], c)
    }

    /// The coordinate function `x_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut n = vec![Scalar::zero(); dim];
        n[i] = Scalar::one();
        AffineFunc::new(n, Scalar::zero())
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn eval(&self, x: &[Scalar]) -> Scalar {
        dot(&self.normal, x) + &self.offset
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.normal
            .iter()
            .zip(x)
            .map(|(a, b)| a.to_f64() * b)
            .sum::<f64>()
            + self.offset.to_f64()
    }

    pub fn to_poly(&self) -> Poly {
        Poly::affine(&self.normal, &self.offset)
    }

    pub fn scale(&self, t: &Scalar) -> AffineFunc {
        AffineFunc::new(
            self.normal.iter().map(|a| a * t).collect(),
            &self.offset * t,
        )
    }

    pub fn add(&self, other: &AffineFunc) -> AffineFunc {
        AffineFunc::new(
            self.normal.iter().zip(&other.normal).map(|(a, b)| a + b).collect(),
            &self.offset + &other.offset,
        )
    }

    pub fn sub(&self, other: &AffineFunc) -> AffineFunc {
        self.add(&other.scale(&Scalar::int(-1)))
    }

    pub fn approx_eq(&self, other: &AffineFunc) -> bool {
        self.offset.approx_eq(&other.offset)
            && self.normal.iter().zip(&other.normal).all(|(a, b)| a.approx_eq(b))
    }
}

/// A compact convex region `{x : a_k(x) >= 0}` with its vertices. Clipping a
/// polytope by a halfspace yields one of these; it need not be Delzant and
/// may be empty or lower dimensional.
#[derive(Clone, Debug)]
pub struct Region {
    dim: usize,
    constraints: Vec<AffineFunc>,
    vertices: Vec<Point>,
}

/// An affine simplex given by its corner points.
pub type Simplex = Vec<Point>;

impl Region {
    /// Enumerates the vertices of a region assumed bounded.
    pub fn new(dim: usize, constraints: Vec<AffineFunc>) -> Self {
        let vertices = enumerate_vertices(dim, &constraints);
        Region {
            dim,
            constraints,
            vertices,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[AffineFunc] {
        &self.constraints
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| crate::scalar::to_f64_vec(v)).collect()
    }

    /// Affine dimension of the vertex set, -1 when empty.
    pub fn affine_dim(&self) -> isize {
        let idx: Vec<usize> = (0..self.vertices.len()).collect();
        self.affine_dim_of(&idx)
    }

    /// True when the region has zero `dim`-dimensional measure.
    pub fn is_negligible(&self) -> bool {
        self.affine_dim() < self.dim as isize
    }

    pub fn contains(&self, x: &[Scalar]) -> bool {
        self.constraints.iter().all(|c| c.eval(x).sign() >= 0)
    }

    /// Strict interior test with float margin `margin`.
    pub fn contains_interior_f64(&self, x: &[f64], margin: f64) -> bool {
        self.constraints.iter().all(|c| {
            let n: f64 = c.normal.iter().map(|a| a.to_f64().powi(2)).sum::<f64>().sqrt();
            c.eval_f64(x) > margin * n
        })
    }

    /// `self ∩ {<h, x> >= c}`.
    pub fn clip(&self, h: &[Scalar], c: &Scalar) -> Region {
        let mut cons = self.constraints.clone();
        cons.push(AffineFunc::new(h.to_vec(), -c));
        Region::new(self.dim, cons)
    }

    /// `self ∩ {a_k >= 0 for each extra}`.
    pub fn intersect(&self, extra: &[AffineFunc]) -> Region {
        let mut cons = self.constraints.clone();
        cons.extend(extra.iter().cloned());
        Region::new(self.dim, cons)
    }

    pub fn vertex_centroid(&self, idx: &[usize]) -> Point {
        let n = Scalar::int(idx.len() as i64);
        (0..self.dim)
            .map(|k| idx.iter().map(|&i| self.vertices[i][k].clone()).sum::<Scalar>() / &n)
            .collect()
    }

    fn affine_dim_of(&self, idx: &[usize]) -> isize {
        if idx.is_empty() {
            return -1;
        }
        let p0 = &self.vertices[idx[0]];
        let rows: Matrix = idx[1..]
            .iter()
            .map(|&i| self.vertices[i].iter().zip(p0).map(|(a, b)| a - b).collect())
            .collect();
        if rows.is_empty() {
            return 0;
        }
        linalg::rank(&rows) as isize
    }

    /// Vertex indices lying on the zero set of constraint `k`.
    pub fn face_vertices(&self, k: usize) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| self.constraints[k].eval(&self.vertices[i]).is_zero())
            .collect()
    }

    /// True when constraint `k` cuts out a facet of the region.
    pub fn is_facet(&self, k: usize) -> bool {
        self.affine_dim_of(&self.face_vertices(k)) == self.dim as isize - 1
    }

    /// Fan triangulation of the full-dimensional region from the vertex
    /// centroid, recursing through faces. Empty when the region is negligible.
    pub fn simplices(&self) -> Vec<Simplex> {
        if self.is_negligible() {
            return Vec::new();
        }
        let idx: Vec<usize> = (0..self.vertices.len()).collect();
        self.face_fan(&idx, self.dim)
    }

    /// Triangulation of the face cut out by constraint `k`, if it is a facet.
    pub fn facet_simplices(&self, k: usize) -> Vec<Simplex> {
        let idx = self.face_vertices(k);
        if self.affine_dim_of(&idx) != self.dim as isize - 1 {
            return Vec::new();
        }
        self.face_fan(&idx, self.dim - 1)
    }

    fn face_fan(&self, verts: &[usize], k: usize) -> Vec<Simplex> {
        if k == 0 {
            return vec![vec![self.vertices[verts[0]].clone()]];
        }
        let apex = self.vertex_centroid(verts);
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut out = Vec::new();
        for c in &self.constraints {
            let sub: Vec<usize> = verts
                .iter()
                .copied()
                .filter(|&i| c.eval(&self.vertices[i]).is_zero())
                .collect();
            if sub.is_empty() || sub.len() == verts.len() || seen.contains(&sub) {
                continue;
            }
            if self.affine_dim_of(&sub) != k as isize - 1 {
                continue;
            }
            seen.insert(sub.clone());
            for mut s in self.face_fan(&sub, k - 1) {
                s.push(apex.clone());
                out.push(s);
            }
        }
        out
    }
}

fn points_close(a: &[Scalar], b: &[Scalar]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.approx_eq(y))
}

fn enumerate_vertices(dim: usize, cons: &[AffineFunc]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    let m = cons.len();
    if m < dim {
        return out;
    }
    let mut combo: Vec<usize> = (0..dim).collect();
    loop {
        let a: Matrix = combo.iter().map(|&j| cons[j].normal.clone()).collect();
        let b: Vec<Scalar> = combo.iter().map(|&j| -&cons[j].offset).collect();
        if let Some(x) = linalg::solve(&a, &b) {
            if cons.iter().all(|c| c.eval(&x).sign() >= 0) && !out.iter().any(|v| points_close(v, &x)) {
                out.push(x);
            }
        }
        let mut i = dim;
        while i > 0 && combo[i - 1] == i - 1 + m - dim {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        combo[i - 1] += 1;
        for k in i..dim {
            combo[k] = combo[k - 1] + 1;
        }
    }
}

/// Compact Delzant-candidate polytope with primitive integer labels.
#[derive(Clone, Debug)]
pub struct LabelledPolytope {
    normals: Vec<Vec<i64>>,
    labels: Vec<AffineFunc>,
    region: Region,
    facet_density: Vec<f64>,
}

/// Serialized form: only the defining data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolytopeDoc {
    pub dim: usize,
    pub normals: Vec<Vec<i64>>,
    pub offsets: Vec<Scalar>,
}

impl LabelledPolytope {
    /// Builds `{x : <u_j, x> + offset_j >= 0}`. Normals are reduced to
    /// primitive vectors with offsets rescaled by the same factor.
    pub fn new(normals: &[Vec<i64>], offsets: &[Scalar]) -> Result<Self> {
        if normals.len() != offsets.len() {
            return Err(Error::InvalidInput(format!(
                "{} normals but {} offsets",
                normals.len(),
                offsets.len()
            )));
        }
        let dim = normals.first().map_or(0, Vec::len);
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if normals.iter().any(|n| n.len() != dim) {
            return Err(Error::InvalidInput("normals have inconsistent lengths".into()));
        }
        if normals.len() < dim + 1 {
            return Err(Error::InvalidInput(format!(
                "need at least {} labels in dimension {dim}",
                dim + 1
            )));
        }
        let mut prim = Vec::with_capacity(normals.len());
        let mut labels = Vec::with_capacity(normals.len());
        for (j, (n, off)) in normals.iter().zip(offsets).enumerate() {
            let g = n.iter().fold(0i64, |g, &a| g.gcd(&a));
            if g == 0 {
                return Err(Error::ZeroNormal(j));
            }
            let u: Vec<i64> = n.iter().map(|a| a / g).collect();
            let off = off / &Scalar::int(g);
            labels.push(AffineFunc::new(u.iter().map(|&a| Scalar::int(a)).collect(), off));
            prim.push(u);
        }
        if has_recession_direction(dim, &labels) {
            return Err(Error::Unbounded);
        }
        let region = Region::new(dim, labels.clone());
        if region.is_negligible() {
            return Err(Error::EmptyInterior);
        }
        let mut facet_sets: Vec<Vec<usize>> = Vec::new();
        for j in 0..labels.len() {
            let fv = region.face_vertices(j);
            if !region.is_facet(j) || facet_sets.contains(&fv) {
                return Err(Error::RedundantLabel(j));
            }
            facet_sets.push(fv);
        }
        let facet_density = prim
            .iter()
            .map(|u| 1.0 / (u.iter().map(|&a| (a * a) as f64).sum::<f64>()).sqrt())
            .collect();
        Ok(LabelledPolytope {
            normals: prim,
            labels,
            region,
            facet_density,
        })
    }

    pub fn from_doc(doc: &PolytopeDoc) -> Result<Self> {
        let p = LabelledPolytope::new(&doc.normals, &doc.offsets)?;
        if p.dim() != doc.dim {
            return Err(Error::InvalidInput(format!(
                "dim is {} but normals have length {}",
                doc.dim,
                p.dim()
            )));
        }
        Ok(p)
    }

    pub fn to_doc(&self) -> PolytopeDoc {
        PolytopeDoc {
            dim: self.dim(),
            normals: self.normals.clone(),
            offsets: self.labels.iter().map(|l| l.offset.clone()).collect(),
        }
    }

    /// The interval `[a, b]` with labels `x - a` and `b - x`.
    pub fn interval(a: Scalar, b: Scalar) -> Result<Self> {
        LabelledPolytope::new(&[vec![1], vec![-1]], &[-a, b])
    }

    /// The standard simplex of dimension `dim`.
    pub fn simplex(dim: usize) -> Result<Self> {
        let mut normals: Vec<Vec<i64>> = (0..dim)
            .map(|i| (0..dim).map(|k| i64::from(k == i)).collect())
            .collect();
        normals.push(vec![-1; dim]);
        let mut offsets = vec![Scalar::zero(); dim];
        offsets.push(Scalar::one());
        LabelledPolytope::new(&normals, &offsets)
    }

    /// The unit cube `[0,1]^dim`.
    pub fn cube(dim: usize) -> Result<Self> {
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for i in 0..dim {
            let e: Vec<i64> = (0..dim).map(|k| i64::from(k == i)).collect();
            normals.push(e.clone());
            offsets.push(Scalar::zero());
            normals.push(e.iter().map(|a| -a).collect());
            offsets.push(Scalar::one());
        }
        LabelledPolytope::new(&normals, &offsets)
    }

    pub fn dim(&self) -> usize {
        self.region.dim
    }

    pub fn num_facets(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[AffineFunc] {
        &self.labels
    }

    pub fn label(&self, j: usize) -> &AffineFunc {
        &self.labels[j]
    }

    /// Primitive inward normal `u_j`.
    pub fn normal(&self, j: usize) -> &[i64] {
        &self.normals[j]
    }

    pub fn normals(&self) -> &[Vec<i64>] {
        &self.normals
    }

    pub fn vertices(&self) -> &[Point] {
        self.region.vertices()
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// `1 / |u_j|`: ratio of dσ to Euclidean facet measure.
    pub fn facet_density(&self, j: usize) -> f64 {
        self.facet_density[j]
    }

    pub fn is_exact(&self) -> bool {
        self.labels.iter().all(|l| l.offset.is_exact())
    }

    /// Indices of labels vanishing at vertex `v`.
    pub fn active_labels(&self, v: &[Scalar]) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&j| self.labels[j].eval(v).is_zero())
            .collect()
    }

    pub fn facet_vertices(&self, j: usize) -> Vec<usize> {
        self.region.face_vertices(j)
    }

    pub fn clip(&self, h: &[Scalar], c: &Scalar) -> Region {
        self.region.clip(h, c)
    }

    pub fn translate(&self, t: &[Scalar]) -> Result<Self> {
        // L_j(x - t) = <u, x> + (offset - <u, t>)
        let offsets: Vec<Scalar> = self
            .labels
            .iter()
            .map(|l| &l.offset - &dot(&l.normal, t))
            .collect();
        LabelledPolytope::new(&self.normals, &offsets)
    }

    /// Range of `<h, x>` over the polytope.
    pub fn support_range(&self, h: &[f64]) -> (f64, f64) {
        self.region
            .vertices_f64()
            .iter()
            .map(|v| v.iter().zip(h).map(|(a, b)| a * b).sum::<f64>())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(x), hi.max(x))
            })
    }

    /// Lebesgue barycenter.
    pub fn barycenter(&self) -> Point {
        let vol = crate::quadrature::volume(self.region());
        (0..self.dim())
            .map(|i| {
                let xi = Poly::var(self.dim(), i);
                crate::quadrature::integrate_region(self.region(), &xi) / &vol
            })
            .collect()
    }
}

/// A nonzero `d` with `<u_j, d> >= 0` for all `j` exists iff the cone is
/// nontrivial; test via the vertices of the cone cut by the unit box.
fn has_recession_direction(dim: usize, labels: &[AffineFunc]) -> bool {
    let mut cons: Vec<AffineFunc> = labels
        .iter()
        .map(|l| AffineFunc::new(l.normal.clone(), Scalar::zero()))
        .collect();
    for i in 0..dim {
        let mut e = vec![Scalar::zero(); dim];
        e[i] = Scalar::one();
        cons.push(AffineFunc::new(e.clone(), Scalar::one()));
        e[i] = Scalar::int(-1);
        cons.push(AffineFunc::new(e, Scalar::one()));
    }
    enumerate_vertices(dim, &cons)
        .iter()
        .any(|v| v.iter().any(|x| !x.is_zero()))
}

/// Outcome of the Delzant test.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DelzantVerdict {
    Pass,
    Fail {
        vertex: Vec<Scalar>,
        facets: Vec<usize>,
        /// Determinant of the active normals; `None` when the vertex is not
        /// simple (more than `dim` facets meet).
        determinant: Option<i64>,
    },
}

impl DelzantVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, DelzantVerdict::Pass)
    }
}

/// Checks that the normals at every vertex form a lattice basis.
pub fn check_delzant(p: &LabelledPolytope) -> DelzantVerdict {
    for v in p.vertices() {
        let act = p.active_labels(v);
        if act.len() != p.dim() {
            return DelzantVerdict::Fail {
                vertex: v.clone(),
                facets: act,
                determinant: None,
            };
        }
        let m: Matrix = act
            .iter()
            .map(|&j| p.normal(j).iter().map(|&a| Scalar::int(a)).collect())
            .collect();
        let det = linalg::determinant(&m);
        let d = det.to_f64().round() as i64;
        if d.abs() != 1 {
            return DelzantVerdict::Fail {
                vertex: v.clone(),
                facets: act,
                determinant: Some(d),
            };
        }
    }
    DelzantVerdict::Pass
}
