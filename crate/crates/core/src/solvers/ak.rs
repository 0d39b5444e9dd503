//! Involutive almost-Kähler solutions in dimension two.
//!
//! The unknown is a symmetric polynomial field `Φ = vH` of degree at most
//! `D`. The equation `-Σ Φ_ij,ij = w` is linear, and so are the boundary
//! conditions: on each facet `Φ u_j` and `∇(Φ(u_j,u_j)) - 2v u_j` must lie in
//! the ideal of `L_j`, i.e. vanish identically once restricted to the
//! facet's hyperplane. The system is underdetermined; any solution with
//! `Φ` positive definite inside `P` (and transversally positive on the
//! facets) certifies uniform K-stability, hence existence.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LabelledPolytope;
use crate::linalg::{self, Matrix};
use crate::poly::{Exponent, Poly};
use crate::potentials::{check_boundary_conditions, guillemin_potential, FieldRole, MatrixField};
use crate::scalar::{to_f64_vec, Scalar};
use crate::weights::{barycentric_grid, WeightSystem};

/// Residual bound for a positive certificate.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Iterations of the kernel search when the least-norm solution is not
/// positive.
pub const MAX_ASCENT_STEPS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AkVerdict {
    Positive,
    Indefinite,
    Infeasible,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AKCertificate {
    pub verdict: AkVerdict,
    /// Degree of the returned field (the last degree tried when infeasible).
    pub degree: u32,
    pub unknowns: usize,
    pub rank: usize,
    pub kernel_dim: usize,
    /// `Φ`, polynomial entries.
    pub phi_field: Option<MatrixField>,
    /// Largest coefficient of `-Σ Φ_ij,ij - w`.
    pub pde_residual: f64,
    /// Largest boundary-condition residual at facet samples.
    pub bc_residual: f64,
    /// Smallest eigenvalue of `H = Φ/v` over the interior grid.
    pub min_eig: f64,
    pub argmin: Vec<f64>,
    /// Smallest eigenvalue of `H` relative to the Guillemin `H₀`.
    pub min_relative_eig: f64,
    /// Smallest eigenvalue of `Φ` transverse to the facets.
    pub facet_min_quotient: f64,
    pub ascent_steps: usize,
    /// False when `(v, w)` are explicit weights rather than fibration data;
    /// the equivalence with existence is then only the sufficiency direction.
    pub fibration_weights: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AkOptions {
    /// Starting degree; `deg w + 2` when absent.
    pub degree: Option<u32>,
    /// Subdivisions of each simplex for the positivity scan.
    pub grid: usize,
}

impl Default for AkOptions {
    fn default() -> Self {
        AkOptions { degree: None, grid: 24 }
    }
}

struct FacetFrame {
    normal: Vec<Scalar>,
    origin: Vec<Scalar>,
    dirs: Vec<Vec<Scalar>>,
}

fn facet_frames(p: &LabelledPolytope) -> Vec<FacetFrame> {
    p.labels()
        .iter()
        .map(|l| {
            let nn = crate::scalar::dot(&l.normal, &l.normal);
            let t = -(&l.offset / &nn);
            let origin = l.normal.iter().map(|a| a * &t).collect();
            let dirs = linalg::nullspace(&vec![l.normal.clone()]);
            FacetFrame {
                normal: l.normal.clone(),
                origin,
                dirs,
            }
        })
        .collect()
}

/// Residual polynomials of the PDE and of the facet conditions.
fn residuals(phi: &[Vec<Poly>], v: &Poly, w: &Poly, frames: &[FacetFrame]) -> Vec<Poly> {
    let n = phi.len();
    let mut pde = -w;
    for a in 0..n {
        for b in 0..n {
            pde = &pde - &phi[a][b].partial(a).partial(b);
        }
    }
    let mut out = vec![pde];
    for f in frames {
        let u = &f.normal;
        let pu: Vec<Poly> = (0..n)
            .map(|a| (0..n).fold(Poly::zero(n), |acc, b| &acc + &phi[a][b].scale(&u[b])))
            .collect();
        let puu = (0..n).fold(Poly::zero(n), |acc, a| &acc + &pu[a].scale(&u[a]));
        for a in 0..n {
            out.push(pu[a].compose_affine(&f.origin, &f.dirs));
        }
        for a in 0..n {
            let g = &puu.partial(a) - &v.scale(&(&u[a] * &Scalar::int(2)));
            out.push(g.compose_affine(&f.origin, &f.dirs));
        }
    }
    out
}

struct System {
    a: Matrix,
    b: Vec<Scalar>,
    slots: Vec<(usize, usize, Exponent)>,
}

fn assemble(p: &LabelledPolytope, ws: &WeightSystem, degree: u32, frames: &[FacetFrame]) -> System {
    let n = p.dim();
    let monos = Poly::exponents_up_to(n, degree);
    let mut slots = Vec::new();
    for a in 0..n {
        for b in a..n {
            for e in &monos {
                slots.push((a, b, e.clone()));
            }
        }
    }
    let zero_field = vec![vec![Poly::zero(n); n]; n];
    let constant = residuals(&zero_field, &ws.v, &ws.w, frames);
    let columns: Vec<Vec<Poly>> = slots
        .par_iter()
        .map(|(a, b, e)| {
            let mut field = zero_field.clone();
            let m = Poly::monomial(e.clone(), Scalar::one());
            field[*a][*b] = m.clone();
            field[*b][*a] = m;
            residuals(&field, &Poly::zero(n), &Poly::zero(n), frames)
        })
        .collect();
    let mut rows: BTreeMap<(usize, Exponent), usize> = BTreeMap::new();
    let mut key = |k: (usize, Exponent)| {
        let len = rows.len();
        *rows.entry(k).or_insert(len)
    };
    let mut entries: Vec<(usize, usize, Scalar)> = Vec::new();
    for (col, polys) in columns.iter().enumerate() {
        for (g, poly) in polys.iter().enumerate() {
            for (e, c) in poly.terms() {
                if !c.is_exact_zero() {
                    entries.push((key((g, e.clone())), col, c.clone()));
                }
            }
        }
    }
    let mut rhs_terms = Vec::new();
    for (g, poly) in constant.iter().enumerate() {
        for (e, c) in poly.terms() {
            if !c.is_exact_zero() {
                rhs_terms.push((key((g, e.clone())), -c));
            }
        }
    }
    let nrows = rows.len();
    let mut a = vec![vec![Scalar::zero(); slots.len()]; nrows];
    for (r, c, v) in entries {
        a[r][c] = v;
    }
    let mut b = vec![Scalar::zero(); nrows];
    for (r, v) in rhs_terms {
        b[r] = v;
    }
    System { a, b, slots }
}

fn field_from(n: usize, slots: &[(usize, usize, Exponent)], x: &[Scalar]) -> Vec<Vec<Poly>> {
    let mut field = vec![vec![Poly::zero(n); n]; n];
    for ((a, b, e), c) in slots.iter().zip(x) {
        if c.is_exact_zero() {
            continue;
        }
        let m = Poly::monomial(e.clone(), c.clone());
        field[*a][*b] = &field[*a][*b] + &m;
        if a != b {
            field[*b][*a] = &field[*b][*a] + &m;
        }
    }
    field
}

/// Interior points of a barycentric grid on the fan triangulation.
pub fn interior_grid(p: &LabelledPolytope, n: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for s in p.region().simplices() {
        let corners: Vec<Vec<f64>> = s.iter().map(|q| to_f64_vec(q)).collect();
        for x in barycentric_grid(&corners, n) {
            if p.region().contains_interior_f64(&x, 1e-9)
                && !out.iter().any(|y| y.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12))
            {
                out.push(x);
            }
        }
    }
    out
}

struct Scanner {
    grid: Vec<Vec<f64>>,
    v: Vec<f64>,
    h0: Vec<Vec<f64>>,
    dim: usize,
}

struct Scan {
    min_eig: f64,
    argmin: Vec<f64>,
    min_relative: f64,
}

impl Scanner {
    fn new(p: &LabelledPolytope, ws: &WeightSystem, n: usize) -> Self {
        let grid = interior_grid(p, n);
        let h0_field = guillemin_potential(p)
            .symbolic_inverse_hessian()
            .expect("Guillemin inverse Hessian is closed-form");
        let v = grid.iter().map(|x| ws.v.eval_f64(x)).collect();
        let h0 = grid.iter().map(|x| h0_field.eval_f64(x)).collect();
        Scanner { grid, v, h0, dim: p.dim() }
    }

    fn scan(&self, phi: &[Vec<Poly>]) -> Scan {
        let n = self.dim;
        let fphi: Vec<Vec<Poly>> = phi.iter().map(|r| r.iter().map(Poly::to_float).collect()).collect();
        let vals: Vec<(f64, f64)> = self
            .grid
            .par_iter()
            .enumerate()
            .map(|(k, x)| {
                let mut h = vec![0.0; n * n];
                for a in 0..n {
                    for b in 0..n {
                        h[a * n + b] = fphi[a][b].eval_f64(x) / self.v[k];
                    }
                }
                let raw = linalg::min_sym_eigenvalue(&h, n);
                let rel = linalg::min_generalized_eigenvalue(&h, &self.h0[k], n).unwrap_or(f64::NEG_INFINITY);
                (raw, rel)
            })
            .collect();
        let (mut min_eig, mut arg, mut min_relative) = (f64::INFINITY, 0, f64::INFINITY);
        for (k, (raw, rel)) in vals.iter().enumerate() {
            if *raw < min_eig {
                min_eig = *raw;
                arg = k;
            }
            min_relative = min_relative.min(*rel);
        }
        Scan {
            min_eig,
            argmin: self.grid.get(arg).cloned().unwrap_or_default(),
            min_relative,
        }
    }
}

fn max_coeff(p: &Poly) -> f64 {
    p.max_abs_coeff()
}

/// Solves the linear AK system, escalating the degree from `deg w + 2` (or
/// `opts.degree`) up to `deg w + 6`.
pub fn solve_ak(p: &LabelledPolytope, ws: &WeightSystem, opts: &AkOptions) -> Result<AKCertificate> {
    if p.dim() != 2 {
        return Err(Error::WrongDimension {
            expected: "2".into(),
            got: p.dim(),
        });
    }
    let n = p.dim();
    let dw = ws.w.degree();
    let start = opts.degree.unwrap_or(dw + 2);
    let cap = (dw + 6).max(start);
    let frames = facet_frames(p);

    let mut last = (start, 0, 0);
    for degree in start..=cap {
        let sys = assemble(p, ws, degree, &frames);
        let ln = linalg::least_norm(&sys.a, &sys.b);
        last = (degree, sys.slots.len(), ln.rank);
        if !ln.consistent {
            continue;
        }
        let kernel = linalg::nullspace(&sys.a);
        let scanner = Scanner::new(p, ws, opts.grid);
        let mut x = ln.solution.clone();
        let mut scan = scanner.scan(&field_from(n, &sys.slots, &x));
        let mut steps = 0;
        if scan.min_relative <= 0.0 && !kernel.is_empty() {
            let (nx, ns, k) = kernel_ascent(&scanner, n, &sys.slots, x, &kernel, scan);
            x = nx;
            scan = ns;
            steps = k;
        }
        let field = field_from(n, &sys.slots, &x);
        let pde = residuals(&field, &ws.v, &ws.w, &[])[0].clone();
        let mf = MatrixField::polynomial(FieldRole::Phi, ws.v.clone(), &field);
        let bc = check_boundary_conditions(&mf, p, RESIDUAL_TOL);
        let facet_min_quotient = bc.facets.iter().map(|f| f.min_quotient_eig).fold(f64::INFINITY, f64::min);
        let pde_residual = max_coeff(&pde);
        let bc_residual = bc.max_residual();
        let positive = scan.min_eig > 0.0
            && scan.min_relative > 0.0
            && facet_min_quotient > 0.0
            && pde_residual <= RESIDUAL_TOL
            && bc_residual <= RESIDUAL_TOL;
        return Ok(AKCertificate {
            verdict: if positive { AkVerdict::Positive } else { AkVerdict::Indefinite },
            degree,
            unknowns: sys.slots.len(),
            rank: ln.rank,
            kernel_dim: kernel.len(),
            phi_field: Some(mf),
            pde_residual,
            bc_residual,
            min_eig: scan.min_eig,
            argmin: scan.argmin,
            min_relative_eig: scan.min_relative,
            facet_min_quotient,
            ascent_steps: steps,
            fibration_weights: ws.is_fibration(),
        });
    }
    Ok(AKCertificate {
        verdict: AkVerdict::Infeasible,
        degree: last.0,
        unknowns: last.1,
        rank: last.2,
        kernel_dim: 0,
        phi_field: None,
        pde_residual: f64::NAN,
        bc_residual: f64::NAN,
        min_eig: f64::NAN,
        argmin: Vec::new(),
        min_relative_eig: f64::NAN,
        facet_min_quotient: f64::NAN,
        ascent_steps: 0,
        fibration_weights: ws.is_fibration(),
    })
}

/// Coordinate ascent on the smallest relative eigenvalue over the kernel,
/// with power-of-two steps so the coefficients stay exact.
fn kernel_ascent(
    scanner: &Scanner,
    n: usize,
    slots: &[(usize, usize, Exponent)],
    mut x: Vec<Scalar>,
    kernel: &[Vec<Scalar>],
    mut best: Scan,
) -> (Vec<Scalar>, Scan, usize) {
    let mut steps: Vec<Scalar> = kernel
        .iter()
        .map(|k| {
            let m = k.iter().map(|c| c.to_f64().abs()).fold(0.0, f64::max).max(1e-300);
            let e = (-m.log2()).round() as i32;
            if e >= 0 {
                Scalar::int(1i64 << e.min(40))
            } else {
                Scalar::ratio(1, 1i64 << (-e).min(40))
            }
        })
        .collect();
    let mut taken = 0;
    for _ in 0..MAX_ASCENT_STEPS {
        if best.min_relative > 0.0 {
            break;
        }
        taken += 1;
        let candidates: Vec<(usize, Scalar)> = (0..kernel.len())
            .flat_map(|i| [(i, steps[i].clone()), (i, -&steps[i])])
            .collect();
        let results: Vec<(Vec<Scalar>, Scan)> = candidates
            .par_iter()
            .map(|(i, s)| {
                let y: Vec<Scalar> = x.iter().zip(&kernel[*i]).map(|(a, k)| a + &(k * s)).collect();
                let sc = scanner.scan(&field_from(n, slots, &y));
                (y, sc)
            })
            .collect();
        let mut improved = false;
        for (y, sc) in results {
            if sc.min_relative > best.min_relative {
                best = sc;
                x = y;
                improved = true;
            }
        }
        if !improved {
            for s in steps.iter_mut() {
                *s = &*s * &Scalar::ratio(1, 2);
            }
        }
    }
    (x, best, taken)
}

/// Independent re-check of a field at fresh points: the PDE at `samples`
/// interior points and the facet conditions at a finer facet grid.
pub fn reverify(p: &LabelledPolytope, ws: &WeightSystem, phi: &MatrixField, seed: u64) -> (f64, f64) {
    use rand::{Rng, SeedableRng};
    let n = p.dim();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let verts = p.region().vertices_f64();
    let second: Vec<Vec<Poly>> = (0..n)
        .map(|a| (0..n).map(|b| phi.entry(a, b).to_float().partial(a).partial(b)).collect())
        .collect();
    let w = ws.w.to_float();
    let mut pde: f64 = 0.0;
    for _ in 0..64 {
        let mut wts: Vec<f64> = (0..verts.len()).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let s: f64 = wts.iter().sum();
        wts.iter_mut().for_each(|t| *t /= s);
        let x: Vec<f64> = (0..n).map(|d| verts.iter().zip(&wts).map(|(v, t)| v[d] * t).sum()).collect();
        let lhs: f64 = second.iter().flatten().map(|g| g.eval_f64(&x)).sum();
        pde = pde.max((-lhs - w.eval_f64(&x)).abs());
    }
    let mut bc: f64 = 0.0;
    for j in 0..p.num_facets() {
        let u: Vec<f64> = p.normal(j).iter().map(|&a| a as f64).collect();
        for x in crate::potentials::facet_samples(p, j, 11) {
            let a = phi.eval_f64(&x);
            for r in 0..n {
                let val: f64 = (0..n).map(|c| a[r * n + c] * u[c]).sum();
                bc = bc.max(val.abs());
            }
            // ∇(Φ(u,u)) by central differences along the axes
            let step = 1e-5;
            let quad = |y: &[f64]| {
                let a = phi.eval_f64(y);
                (0..n).map(|r| (0..n).map(|c| a[r * n + c] * u[r] * u[c]).sum::<f64>()).sum::<f64>()
            };
            let vx = ws.v.eval_f64(&x);
            for r in 0..n {
                let mut yp = x.clone();
                let mut ym = x.clone();
                yp[r] += step;
                ym[r] -= step;
                let d = (quad(&yp) - quad(&ym)) / (2.0 * step);
                bc = bc.max((d - 2.0 * vx * u[r]).abs());
            }
        }
    }
    (pde, bc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::FibrationData;

    #[test]
    fn cp2_guillemin_field() {
        let p = LabelledPolytope::simplex(2).unwrap();
        let ws = WeightSystem::from_fibration(&p, &FibrationData::toric()).unwrap();
        let cert = solve_ak(&p, &ws, &AkOptions { degree: Some(2), grid: 16 }).unwrap();
        assert_eq!(cert.verdict, AkVerdict::Positive);
        assert_eq!(cert.pde_residual, 0.0);
        assert!(cert.bc_residual <= 1e-12);
        let phi = cert.phi_field.unwrap();
        let h0 = guillemin_potential(&p).symbolic_inverse_hessian().unwrap();
        assert_eq!(phi.entries, h0.entries);
    }

    #[test]
    fn wrong_dimension() {
        let p = LabelledPolytope::interval(Scalar::zero(), Scalar::one()).unwrap();
        let ws = WeightSystem::from_fibration(&p, &FibrationData::toric()).unwrap();
        assert!(matches!(solve_ak(&p, &ws, &AkOptions::default()), Err(Error::WrongDimension { .. })));
    }
}
