//! Weighted Donaldson–Futaki invariant and the crease-function scan.
//!
//! `F(f) = 2∫_{∂P} f v dσ - ∫_P f w dx` (see [`FutakiSign`] for the other
//! reading). Uniform stability asks for `F(f) >= λ ‖f*‖_1` on convex `f`,
//! where `f*` is `f` minus a supporting affine function at a fixed interior
//! point. The scan probes creases `max(0, <h,x> - c)`, so the minimum ratio
//! it reports is an upper bound for the best λ, and any negative sample is
//! a genuine destabilizer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AffineFunc, LabelledPolytope, Region};
use crate::poly::Poly;
use crate::quadrature::{
    integrate_boundary, integrate_boundary_fn, integrate_crease, integrate_crease_boundary,
    integrate_interior, integrate_interior_fn, integrate_region, integrate_sub_boundary, Node,
};
use crate::scalar::{to_f64_vec, Scalar};
use crate::weights::{FutakiSign, WeightSystem};

/// `f(x) = max(0, <h, x> - c)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreaseFunction {
    pub h: Vec<Scalar>,
    pub c: Scalar,
}

impl CreaseFunction {
    pub fn new(h: Vec<Scalar>, c: Scalar) -> Self {
        CreaseFunction { h, c }
    }

    pub fn from_f64(h: &[f64], c: f64) -> Self {
        CreaseFunction::new(h.iter().map(|&x| Scalar::Float(x)).collect(), Scalar::Float(c))
    }

    /// The same function scaled so that `|h| = 1`.
    pub fn normalized(&self) -> CreaseFunction {
        let n = self.h.iter().map(|a| a.to_f64().powi(2)).sum::<f64>().sqrt();
        let s = Scalar::Float(1.0 / n);
        CreaseFunction::new(self.h.iter().map(|a| a * &s).collect(), &self.c * &s)
    }

    pub fn linear_piece(&self) -> AffineFunc {
        AffineFunc::new(self.h.clone(), -&self.c)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.linear_piece().eval_f64(x).max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Affine(AffineFunc),
    Crease(CreaseFunction),
    /// Pointwise maximum of affine pieces.
    PlMax { pieces: Vec<AffineFunc> },
    Poly(Poly),
}

impl TestFunction {
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Affine(a) => a.eval_f64(x),
            TestFunction::Crease(c) => c.eval_f64(x),
            TestFunction::PlMax { pieces } => pieces
                .iter()
                .map(|a| a.eval_f64(x))
                .fold(f64::NEG_INFINITY, f64::max),
            TestFunction::Poly(p) => p.eval_f64(x),
        }
    }

    pub fn eval(&self, x: &[Scalar]) -> Scalar {
        match self {
            TestFunction::Affine(a) => a.eval(x),
            TestFunction::Crease(c) => {
                let v = c.linear_piece().eval(x);
                if v.sign() > 0 { v } else { Scalar::zero() }
            }
            TestFunction::PlMax { pieces } => pieces
                .iter()
                .map(|a| a.eval(x))
                .max_by(|a, b| a.cmp_value(b))
                .unwrap_or_default(),
            TestFunction::Poly(p) => p.eval(x),
        }
    }

    /// True for test functions whose Hessian vanishes almost everywhere.
    pub fn is_piecewise_linear(&self) -> bool {
        !matches!(self, TestFunction::Poly(p) if p.degree() > 1)
    }

    pub fn scale(&self, t: &Scalar) -> TestFunction {
        match self {
            TestFunction::Affine(a) => TestFunction::Affine(a.scale(t)),
            TestFunction::Crease(c) => TestFunction::Crease(CreaseFunction::new(
                c.h.iter().map(|a| a * t).collect(),
                &c.c * t,
            )),
            TestFunction::PlMax { pieces } => TestFunction::PlMax {
                pieces: pieces.iter().map(|a| a.scale(t)).collect(),
            },
            TestFunction::Poly(p) => TestFunction::Poly(p.scale(t)),
        }
    }
}

fn combine(sign: FutakiSign, boundary: Scalar, interior: Scalar) -> Scalar {
    let b = boundary * Scalar::int(2);
    match sign {
        FutakiSign::Consistent => b - interior,
        FutakiSign::Literal => b + interior,
    }
}

/// Cells of `max(pieces)`: the part of `P` where piece `k` dominates.
/// Identical pieces are merged first.
fn dominance_cells(p: &LabelledPolytope, pieces: &[AffineFunc]) -> Vec<(AffineFunc, Region)> {
    let mut uniq: Vec<AffineFunc> = Vec::new();
    for a in pieces {
        if !uniq.iter().any(|b| b.approx_eq(a)) {
            uniq.push(a.clone());
        }
    }
    uniq.iter()
        .enumerate()
        .filter_map(|(k, a)| {
            let extra: Vec<AffineFunc> = uniq
                .iter()
                .enumerate()
                .filter(|(m, _)| *m != k)
                .map(|(_, b)| a.sub(b))
                .collect();
            let cell = p.region().intersect(&extra);
            (!cell.is_negligible()).then(|| (a.clone(), cell))
        })
        .collect()
}

/// Weighted Futaki invariant of a test function.
pub fn futaki(p: &LabelledPolytope, ws: &WeightSystem, f: &TestFunction) -> Scalar {
    match f {
        TestFunction::Affine(a) => futaki_poly(p, ws, &a.to_poly()),
        TestFunction::Poly(g) => futaki_poly(p, ws, g),
        TestFunction::Crease(c) => combine(
            ws.sign,
            integrate_crease_boundary(p, c, &ws.v),
            integrate_crease(p, c, &ws.w),
        ),
        TestFunction::PlMax { pieces } => {
            let mut bnd = Scalar::zero();
            let mut int = Scalar::zero();
            for (a, cell) in dominance_cells(p, pieces) {
                let ap = a.to_poly();
                bnd = bnd + integrate_sub_boundary(&cell, p.num_facets(), &(&ap * &ws.v));
                int = int + integrate_region(&cell, &(&ap * &ws.w));
            }
            combine(ws.sign, bnd, int)
        }
    }
}

pub fn futaki_poly(p: &LabelledPolytope, ws: &WeightSystem, f: &Poly) -> Scalar {
    combine(
        ws.sign,
        integrate_boundary(p, &(f * &ws.v)),
        integrate_interior(p, &(f * &ws.w)),
    )
}

/// Futaki invariant of an arbitrary continuous function, by numerical
/// quadrature. The callback sees the node's coordinates and label values.
pub fn futaki_fn(p: &LabelledPolytope, ws: &WeightSystem, f: &(dyn Fn(&Node) -> f64 + Sync)) -> f64 {
    let bnd = integrate_boundary_fn(p, &|n| f(n) * ws.v.eval_f64(&n.x));
    let int = integrate_interior_fn(p, &|n| f(n) * ws.w.eval_f64(&n.x));
    match ws.sign {
        FutakiSign::Consistent => 2.0 * bnd - int,
        FutakiSign::Literal => 2.0 * bnd + int,
    }
}

/// Supporting affine function of `f` at `x0`. For piecewise-linear `f` the
/// gradients of all pieces active within 1e-12 are averaged.
pub fn support_at(f: &TestFunction, x0: &[Scalar]) -> AffineFunc {
    let dim = x0.len();
    match f {
        TestFunction::Affine(a) => a.clone(),
        TestFunction::Poly(g) => {
            let val = g.eval(x0);
            let grad: Vec<Scalar> = (0..dim).map(|i| g.partial(i).eval(x0)).collect();
            let off = val - crate::scalar::dot(&grad, x0);
            AffineFunc::new(grad, off)
        }
        TestFunction::Crease(c) => {
            let pieces = [AffineFunc::constant(dim, Scalar::zero()), c.linear_piece()];
            average_active(&pieces, x0)
        }
        TestFunction::PlMax { pieces } => average_active(pieces, x0),
    }
}

fn average_active(pieces: &[AffineFunc], x0: &[Scalar]) -> AffineFunc {
    let vals: Vec<Scalar> = pieces.iter().map(|a| a.eval(x0)).collect();
    let top = vals
        .iter()
        .max_by(|a, b| a.cmp_value(b))
        .cloned()
        .unwrap_or_default();
    let active: Vec<&AffineFunc> = pieces
        .iter()
        .zip(&vals)
        .filter(|(_, v)| {
            let d = &top - *v;
            if d.is_exact() { d.is_exact_zero() } else { d.to_f64().abs() <= 1e-12 }
        })
        .map(|(a, _)| a)
        .collect();
    let n = Scalar::int(active.len() as i64);
    let dim = x0.len();
    let mut acc = AffineFunc::constant(dim, Scalar::zero());
    for a in &active {
        acc = acc.add(a);
    }
    acc.scale(&n.recip())
}

/// `f* = f - a` with `a` supporting `f` at the interior point `x0`.
pub fn normalize(p: &LabelledPolytope, f: &TestFunction, x0: &[Scalar]) -> Result<TestFunction> {
    let xf = to_f64_vec(x0);
    if x0.len() != p.dim() || !p.region().contains_interior_f64(&xf, 1e-12) {
        return Err(Error::NotInterior { point: xf });
    }
    let a = support_at(f, x0);
    let dim = p.dim();
    Ok(match f {
        TestFunction::Affine(_) => TestFunction::Affine(AffineFunc::constant(dim, Scalar::zero())),
        TestFunction::Poly(g) => TestFunction::Poly(g - &a.to_poly()),
        TestFunction::Crease(c) => {
            let zero = AffineFunc::constant(dim, Scalar::zero());
            let lin = c.linear_piece();
            if a.approx_eq(&zero) {
                f.clone()
            } else if a.approx_eq(&lin) {
                // max(0, l) - l = max(-l, 0)
                let neg: Vec<Scalar> = c.h.iter().map(|x| -x).collect();
                TestFunction::Crease(CreaseFunction::new(neg, -&c.c))
            } else {
                TestFunction::PlMax {
                    pieces: vec![zero.sub(&a), lin.sub(&a)],
                }
            }
        }
        TestFunction::PlMax { pieces } => TestFunction::PlMax {
            pieces: pieces.iter().map(|b| b.sub(&a)).collect(),
        },
    })
}

fn abs_affine_integral(r: &Region, a: &AffineFunc) -> Scalar {
    let pos = r.clip(&a.normal, &-&a.offset);
    let neg_h: Vec<Scalar> = a.normal.iter().map(|x| -x).collect();
    let neg = r.clip(&neg_h, &a.offset);
    let ap = a.to_poly();
    integrate_region(&pos, &ap) - integrate_region(&neg, &ap)
}

/// `∫_P |f| dx`.
pub fn l1_norm(p: &LabelledPolytope, f: &TestFunction) -> Scalar {
    match f {
        TestFunction::Affine(a) => {
            if a.normal.iter().all(Scalar::is_exact_zero) {
                return a.offset.abs() * crate::quadrature::volume(p.region());
            }
            abs_affine_integral(p.region(), a)
        }
        TestFunction::Crease(c) => integrate_crease(p, c, &Poly::one(p.dim())),
        TestFunction::PlMax { pieces } => dominance_cells(p, pieces)
            .iter()
            .map(|(a, cell)| {
                if a.normal.iter().all(Scalar::is_exact_zero) {
                    a.offset.abs() * crate::quadrature::volume(cell)
                } else {
                    abs_affine_integral(cell, a)
                }
            })
            .sum(),
        TestFunction::Poly(g) => {
            // exact when the sign is constant on a sample grid
            let mut pos = true;
            let mut neg = true;
            for s in p.region().simplices() {
                let corners: Vec<Vec<f64>> = s.iter().map(|q| to_f64_vec(q)).collect();
                for x in crate::weights::barycentric_grid(&corners, 8) {
                    let v = g.eval_f64(&x);
                    pos &= v >= -1e-14;
                    neg &= v <= 1e-14;
                }
            }
            if pos {
                integrate_interior(p, g)
            } else if neg {
                -integrate_interior(p, g)
            } else {
                Scalar::Float(integrate_interior_fn(p, &|n| g.eval_f64(&n.x).abs()))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanSample {
    pub h: Vec<f64>,
    pub c: f64,
    pub futaki: f64,
    pub l1: f64,
}

impl ScanSample {
    pub fn ratio(&self) -> f64 {
        self.futaki / self.l1
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Smallest observed `F(f) / ‖f*‖_1`.
    pub lambda_hat: f64,
    pub worst: CreaseFunction,
    pub worst_futaki: f64,
    pub samples: usize,
    /// Samples skipped because `‖f*‖_1 < 1e-14`.
    pub degenerate: usize,
    /// Creases with `F < 0`.
    pub negatives: Vec<ScanSample>,
}

impl StabilityReport {
    pub fn has_destabilizer(&self) -> bool {
        !self.negatives.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOptions {
    pub directions: usize,
    pub offsets: usize,
    pub refine: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            directions: 48,
            offsets: 33,
            refine: true,
        }
    }
}

/// Relative width of the excluded offset band at each end of the range.
pub const OFFSET_MARGIN: f64 = 1e-3;
const DEGENERATE_L1: f64 = 1e-14;
/// `F` below this counts as a destabilizer.
pub const NEGATIVE_TOL: f64 = -1e-10;

/// Unit directions: `±1` on the line, uniform angles in the plane, a
/// Fibonacci lattice on `S^2`, and seeded Gaussian samples beyond.
pub fn scan_directions(dim: usize, count: usize) -> Vec<Vec<Scalar>> {
    match dim {
        1 => vec![vec![Scalar::one()], vec![Scalar::int(-1)]],
        2 => (0..count)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / count as f64;
                exactish(&[t.cos(), t.sin()])
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    exactish(&[r * t.cos(), r * t.sin(), z])
                })
                .collect()
        }
        _ => {
            use rand::SeedableRng;
            use rand_distr::{Distribution, StandardNormal};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
            (0..count)
                .map(|_| {
                    let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                    exactish(&g.iter().map(|x| x / n).collect::<Vec<_>>())
                })
                .collect()
        }
    }
}

/// Axis directions stay exact so that their integrals do too.
fn exactish(h: &[f64]) -> Vec<Scalar> {
    h.iter()
        .map(|&x| {
            if x.abs() < 1e-15 {
                Scalar::zero()
            } else if (x.abs() - 1.0).abs() < 1e-15 {
                Scalar::int(x.signum() as i64)
            } else {
                Scalar::Float(x)
            }
        })
        .collect()
}

fn sample(
    p: &LabelledPolytope,
    ws: &WeightSystem,
    x0: &[Scalar],
    h: &[Scalar],
    c: Scalar,
) -> Option<ScanSample> {
    let cr = CreaseFunction::new(h.to_vec(), c);
    let f = TestFunction::Crease(cr.clone());
    let fut = futaki(p, ws, &f).to_f64();
    let star = normalize(p, &f, x0).ok()?;
    let l1 = l1_norm(p, &star).to_f64();
    Some(ScanSample {
        h: to_f64_vec(&cr.h),
        c: cr.c.to_f64(),
        futaki: fut,
        l1,
    })
}

/// Scans creases over a direction/offset grid and reports the minimum ratio
/// `F(f) / ‖f*‖_1` with `f*` normalized at the barycenter.
pub fn stability_scan(p: &LabelledPolytope, ws: &WeightSystem, opts: &ScanOptions) -> StabilityReport {
    let x0 = p.barycenter();
    let dirs = scan_directions(p.dim(), opts.directions.max(1));
    let m = opts.offsets.max(2);
    let mut grid: Vec<(usize, Vec<Scalar>, Scalar)> = Vec::new();
    for (di, h) in dirs.iter().enumerate() {
        let (lo, hi) = support_range_exact(p, h);
        let range = &hi - &lo;
        let eps = &range * &Scalar::ratio(1, 1000);
        let span = &range - &(&eps * &Scalar::int(2));
        for k in 0..m {
            let c = &(&lo + &eps) + &(&span * &Scalar::ratio(k as i64, (m - 1) as i64));
            grid.push((di, h.clone(), c));
        }
    }
    let results: Vec<Option<ScanSample>> = grid
        .par_iter()
        .map(|(_, h, c)| sample(p, ws, &x0, h, c.clone()))
        .collect();

    let mut samples = 0;
    let mut degenerate = 0;
    let mut best: Option<(usize, ScanSample)> = None;
    let mut negatives = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let Some(s) = r else {
            degenerate += 1;
            continue;
        };
        if s.l1 < DEGENERATE_L1 {
            degenerate += 1;
            continue;
        }
        samples += 1;
        if s.futaki < NEGATIVE_TOL {
            negatives.push(s.clone());
        }
        if best.as_ref().map_or(true, |(_, b)| s.ratio() < b.ratio()) {
            best = Some((i, s));
        }
    }

    let (bi, mut worst) = best.unwrap_or((
        0,
        ScanSample {
            h: vec![0.0; p.dim()],
            c: 0.0,
            futaki: 0.0,
            l1: 0.0,
        },
    ));
    if opts.refine && samples > 0 {
        let (di, ref h, _) = grid[bi];
        let (lo, hi) = support_range_exact(p, h);
        let (lo, hi) = (lo.to_f64(), hi.to_f64());
        let eps = OFFSET_MARGIN * (hi - lo);
        let step = (hi - lo - 2.0 * eps) / (m - 1) as f64;
        let a = (worst.c - step).max(lo + eps);
        let b = (worst.c + step).min(hi - eps);
        let eval = |c: f64| -> f64 {
            sample(p, ws, &x0, h, Scalar::Float(c))
                .filter(|s| s.l1 >= DEGENERATE_L1)
                .map_or(f64::INFINITY, |s| s.ratio())
        };
        let c = golden_section(eval, a, b, 1e-9);
        if let Some(s) = sample(p, ws, &x0, &dirs[di], Scalar::Float(c)) {
            if s.l1 >= DEGENERATE_L1 && s.ratio() < worst.ratio() {
                if s.futaki < NEGATIVE_TOL && worst.futaki >= NEGATIVE_TOL {
                    negatives.push(s.clone());
                }
                worst = s;
            }
        }
    }
    StabilityReport {
        lambda_hat: if samples > 0 { worst.ratio() } else { f64::NAN },
        worst: CreaseFunction::from_f64(&worst.h, worst.c),
        worst_futaki: worst.futaki,
        samples,
        degenerate,
        negatives,
    }
}

fn support_range_exact(p: &LabelledPolytope, h: &[Scalar]) -> (Scalar, Scalar) {
    let vals: Vec<Scalar> = p.vertices().iter().map(|v| crate::scalar::dot(h, v)).collect();
    let lo = vals.iter().min_by(|a, b| a.cmp_value(b)).cloned().unwrap_or_default();
    let hi = vals.iter().max_by(|a, b| a.cmp_value(b)).cloned().unwrap_or_default();
    (lo, hi)
}

/// Minimizes a unimodal function on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::FibrationData;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    fn unit() -> LabelledPolytope {
        LabelledPolytope::interval(Scalar::zero(), Scalar::one()).unwrap()
    }

    fn cp1() -> (LabelledPolytope, WeightSystem) {
        let p = unit();
        let ws = WeightSystem::from_fibration(&p, &FibrationData::toric()).unwrap();
        (p, ws)
    }

    #[test]
    fn futaki_examples() {
        let (p, ws) = cp1();
        let aff = TestFunction::Affine(AffineFunc::new(vec![q(3, 1)], q(-7, 2)));
        assert_eq!(futaki(&p, &ws, &aff), Scalar::zero());
        let cr = TestFunction::Crease(CreaseFunction::new(vec![Scalar::one()], q(1, 2)));
        assert_eq!(futaki(&p, &ws, &cr), q(1, 2));
    }

    #[test]
    fn futaki_of_guillemin_potential() {
        let (p, ws) = cp1();
        let xlogx = |t: f64| if t > 0.0 { t * t.ln() } else { 0.0 };
        let f = futaki_fn(&p, &ws, &|n| 0.5 * n.constraints.iter().map(|&l| xlogx(l)).sum::<f64>());
        assert!((f - 1.0).abs() < 1e-12, "{f}");
    }

    #[test]
    fn pl_max_agrees_with_crease() {
        let (p, ws) = cp1();
        let cr = CreaseFunction::new(vec![Scalar::one()], q(1, 3));
        let as_max = TestFunction::PlMax {
            pieces: vec![AffineFunc::constant(1, Scalar::zero()), cr.linear_piece()],
        };
        assert_eq!(futaki(&p, &ws, &as_max), futaki(&p, &ws, &TestFunction::Crease(cr)));
    }

    #[test]
    fn normalize_examples() {
        let p = unit();
        let x0 = vec![q(1, 2)];
        let aff = TestFunction::Affine(AffineFunc::new(vec![q(2, 1)], q(1, 1)));
        assert_eq!(
            normalize(&p, &aff, &x0).unwrap(),
            TestFunction::Affine(AffineFunc::constant(1, Scalar::zero()))
        );
        let cr = TestFunction::Crease(CreaseFunction::new(vec![Scalar::one()], q(1, 4)));
        let want = TestFunction::Crease(CreaseFunction::new(vec![Scalar::int(-1)], q(-1, 4)));
        assert_eq!(normalize(&p, &cr, &x0).unwrap(), want);
        let flat = TestFunction::Crease(CreaseFunction::new(vec![Scalar::one()], q(3, 4)));
        assert_eq!(normalize(&p, &flat, &x0).unwrap(), flat);
        assert!(matches!(normalize(&p, &flat, &[q(0, 1)]), Err(Error::NotInterior { .. })));
    }

    #[test]
    fn normalize_at_kink_splits_evenly() {
        let p = unit();
        let cr = TestFunction::Crease(CreaseFunction::new(vec![Scalar::one()], q(1, 2)));
        let star = normalize(&p, &cr, &[q(1, 2)]).unwrap();
        // ½|x - ½| has L1 norm 1/8
        assert_eq!(l1_norm(&p, &star), q(1, 8));
        let (_, ws) = cp1();
        assert_eq!(futaki(&p, &ws, &star), futaki(&p, &ws, &cr));
    }

    #[test]
    fn l1_examples() {
        let p = unit();
        let cr = TestFunction::Crease(CreaseFunction::new(vec![Scalar::one()], q(1, 2)));
        assert_eq!(l1_norm(&p, &cr), q(1, 8));
        assert_eq!(l1_norm(&p, &TestFunction::Poly(Poly::zero(1))), q(0, 1));
        let tri = LabelledPolytope::simplex(2).unwrap();
        assert_eq!(l1_norm(&tri, &TestFunction::Poly(Poly::one(2))), q(1, 2));
        // |x - 1/2| on [0,1] = 1/4
        let a = TestFunction::Affine(AffineFunc::new(vec![Scalar::one()], q(-1, 2)));
        assert_eq!(l1_norm(&p, &a), q(1, 4));
    }

    #[test]
    fn scan_cp1_finds_lambda_four() {
        let (p, ws) = cp1();
        let rep = stability_scan(&p, &ws, &ScanOptions { directions: 2, offsets: 21, refine: true });
        assert!(rep.negatives.is_empty());
        assert!((rep.lambda_hat - 4.0).abs() < 1e-3, "{}", rep.lambda_hat);
        assert!((rep.worst.c.to_f64().abs() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn scan_finds_destabilizer() {
        let p = unit();
        // w = 4 + 32 (6x^2 - 6x + 1)
        let x = Poly::var(1, 0);
        let w = &Poly::constant(1, Scalar::int(4))
            + &(&(&(&x * &x).scale(&Scalar::int(6)) - &x.scale(&Scalar::int(6))) + &Poly::one(1))
                .scale(&Scalar::int(32));
        let ws = WeightSystem::explicit(&p, Poly::one(1), w).unwrap();
        assert_eq!(ws.max_affine_residual(&p), 0.0);
        let rep = stability_scan(&p, &ws, &ScanOptions { directions: 2, offsets: 21, refine: false });
        assert!(rep.has_destabilizer());
        assert!(rep.lambda_hat < 0.0);
    }
}
