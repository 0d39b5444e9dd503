//! The generalized Abreu equation on an interval.
//!
//! On `[α, β]` the equation `-(vH)'' = w` with `Φ = vH`, `Φ(α) = 0` and
//! `Φ'(α) = 2v(α)` integrates to `Φ(x) = 2v(α)(x - α) - ∬_α^x w`. The
//! conditions at `β` are then redundant exactly when the Futaki invariant
//! vanishes on affine functions, and a solution exists iff `Φ > 0` inside.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LabelledPolytope;
use crate::poly::Poly;
use crate::potentials::{v_scalar_curvature, Correction, GridFunction, ScalMode, SymplecticPotential};
use crate::scalar::Scalar;
use crate::weights::WeightSystem;

/// Affine-vanishing residual above which the weights count as unnormalized.
pub const NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport1D {
    pub alpha: Scalar,
    pub beta: Scalar,
    /// `Φ = vH`.
    pub phi: Poly,
    /// `Φ(β)`.
    pub phi_at_beta: f64,
    /// `Φ'(β) + 2v(β)`.
    pub dphi_at_beta: f64,
    pub positive: bool,
    pub min_interior: f64,
    pub argmin: f64,
    /// Correction `u - u₀` on the recovery grid, when `Φ > 0`.
    pub u_recovered: Option<GridFunction>,
    /// `sup |Scal_v(u) - w|` over grid nodes in the middle three quarters
    /// of the interval (the stencil error blows up like `1/h` at a fixed
    /// number of nodes from the ends).
    pub scal_residual: Option<f64>,
}

impl SolveReport1D {
    pub fn recovered_potential(&self, p: &LabelledPolytope) -> Option<SymplecticPotential> {
        self.u_recovered
            .as_ref()
            .map(|g| SymplecticPotential::new(p, Correction::Grid(g.clone())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solve1DOptions {
    /// Cells of the recovery grid.
    pub grid_cells: usize,
}

impl Default for Solve1DOptions {
    fn default() -> Self {
        Solve1DOptions { grid_cells: 256 }
    }
}

pub fn solve_1d(p: &LabelledPolytope, ws: &WeightSystem) -> Result<SolveReport1D> {
    solve_1d_with(p, ws, &Solve1DOptions::default())
}

pub fn solve_1d_with(p: &LabelledPolytope, ws: &WeightSystem, opts: &Solve1DOptions) -> Result<SolveReport1D> {
    if p.dim() != 1 {
        return Err(Error::WrongDimension {
            expected: "1".into(),
            got: p.dim(),
        });
    }
    let residual = ws.max_affine_residual(p);
    if residual > NORMALIZATION_TOL {
        return Err(Error::NotNormalized(residual));
    }
    let (alpha, beta) = endpoints(p);
    let phi = abreu_profile(&ws.v, &ws.w, &alpha);
    let phi_at_beta = phi.eval(std::slice::from_ref(&beta)).to_f64();
    let dphi = phi.partial(0);
    let dphi_at_beta = (dphi.eval(std::slice::from_ref(&beta)) + ws.v.eval(std::slice::from_ref(&beta)) * Scalar::int(2)).to_f64();

    // Φ = (x - α)(β - x) q
    let x = Poly::var(1, 0);
    let la = &x - &Poly::constant(1, alpha.clone());
    let lb = &Poly::constant(1, beta.clone()) - &x;
    let ends = &la * &lb;
    let (q, rem) = phi.div_rem(&ends);
    let exact = phi.is_exact() && rem.is_zero();

    let (a, b) = (alpha.to_f64(), beta.to_f64());
    let (min_interior, argmin) = sample_min(&phi, a, b, 4000);
    let positive = if exact {
        let qa = q.eval(std::slice::from_ref(&alpha));
        qa.sign() > 0 && sturm_count(&to_coeffs(&q), &alpha, &beta) == 0
    } else {
        min_interior > 0.0 && sample_min(&q, a, b, 4000).0 > 0.0
    };

    let (u_recovered, scal_residual) = if positive {
        let g = recover_correction(&ws.v, &q, &alpha, &beta, opts.grid_cells);
        let u = SymplecticPotential::new(p, Correction::Grid(g.clone()));
        let h = g.h;
        let lo = (opts.grid_cells / 8).max(4);
        let probes: Vec<Vec<f64>> = (lo..=opts.grid_cells.saturating_sub(lo)).map(|k| vec![a + k as f64 * h]).collect();
        let scal = v_scalar_curvature(&u, &ws.v, &probes, ScalMode::FiniteDiff { h })?;
        let res = scal
            .iter()
            .zip(&probes)
            .map(|(s, x)| (s - ws.w.eval_f64(x)).abs())
            .fold(0.0, f64::max);
        (Some(g), Some(res))
    } else {
        (None, None)
    };

    Ok(SolveReport1D {
        alpha,
        beta,
        phi,
        phi_at_beta,
        dphi_at_beta,
        positive,
        min_interior,
        argmin,
        u_recovered,
        scal_residual,
    })
}

fn endpoints(p: &LabelledPolytope) -> (Scalar, Scalar) {
    let mut v: Vec<Scalar> = p.vertices().iter().map(|x| x[0].clone()).collect();
    v.sort_by(|a, b| a.cmp_value(b));
    (v[0].clone(), v[v.len() - 1].clone())
}

/// `Φ(x) = 2v(α)(x - α) - ∬_α^x w`.
pub fn abreu_profile(v: &Poly, w: &Poly, alpha: &Scalar) -> Poly {
    let at = |f: &Poly| Poly::constant(1, f.eval(std::slice::from_ref(alpha)));
    let w1 = w.antiderivative(0);
    let w1 = &w1 - &at(&w1);
    let w2 = w1.antiderivative(0);
    let w2 = &w2 - &at(&w2);
    let x = Poly::var(1, 0);
    let lin = (&x - &Poly::constant(1, alpha.clone())).scale(&(v.eval(std::slice::from_ref(alpha)) * Scalar::int(2)));
    &lin - &w2
}

fn sample_min(f: &Poly, a: f64, b: f64, n: usize) -> (f64, f64) {
    (1..n)
        .map(|k| {
            let x = a + (b - a) * k as f64 / n as f64;
            (f.eval_f64(&[x]), x)
        })
        .fold((f64::INFINITY, a), |acc, s| if s.0 < acc.0 { s } else { acc })
}

fn to_coeffs(p: &Poly) -> Vec<Scalar> {
    let mut c = vec![Scalar::zero(); p.degree() as usize + 1];
    for (e, v) in p.terms() {
        c[e[0] as usize] = v.clone();
    }
    trim(c)
}

fn trim(mut c: Vec<Scalar>) -> Vec<Scalar> {
    while c.len() > 1 && c.last().is_some_and(Scalar::is_exact_zero) {
        c.pop();
    }
    c
}

fn eval_coeffs(c: &[Scalar], x: &Scalar) -> Scalar {
    c.iter().rev().fold(Scalar::zero(), |acc, a| acc * x.clone() + a.clone())
}

fn derivative(c: &[Scalar]) -> Vec<Scalar> {
    if c.len() <= 1 {
        return vec![Scalar::zero()];
    }
    c.iter().enumerate().skip(1).map(|(k, a)| a * &Scalar::int(k as i64)).collect()
}

fn rem(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    let mut r = trim(a.to_vec());
    let db = b.len() - 1;
    let lead = &b[db];
    while r.len() > db && !is_zero_poly(&r) {
        let k = r.len() - 1 - db;
        let f = &r[r.len() - 1] / lead;
        for (i, bi) in b.iter().enumerate() {
            r[i + k] = &r[i + k] - &(&f * bi);
        }
        r.pop();
        if r.is_empty() {
            return vec![Scalar::zero()];
        }
        r = trim(r);
    }
    r
}

fn is_zero_poly(c: &[Scalar]) -> bool {
    c.iter().all(Scalar::is_exact_zero)
}

/// Number of distinct real roots in `(a, b]`, by Sturm's theorem.
pub fn sturm_count(c: &[Scalar], a: &Scalar, b: &Scalar) -> usize {
    let c = trim(c.to_vec());
    if c.len() <= 1 {
        return 0;
    }
    let mut seq = vec![c.clone(), derivative(&c)];
    loop {
        let n = seq.len();
        let r = rem(&seq[n - 2], &seq[n - 1]);
        if is_zero_poly(&r) {
            break;
        }
        seq.push(r.iter().map(|x| -x).collect());
    }
    let changes = |x: &Scalar| {
        let signs: Vec<i32> = seq.iter().map(|s| eval_coeffs(s, x).sign()).filter(|&s| s != 0).collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    };
    changes(a).saturating_sub(changes(b))
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// The correction `c = u - u₀` with `c'' = v/Φ - u₀''`, `c(α) = c'(α) = 0`.
/// Writing `Φ = (x-α)(β-x) q`, `c'' = r / (2q)` with the polynomial
/// `r = (2v - (β-α) q) / ((x-α)(β-x))`, which is smooth up to both ends.
fn recover_correction(v: &Poly, q: &Poly, alpha: &Scalar, beta: &Scalar, cells: usize) -> GridFunction {
    let x = Poly::var(1, 0);
    let ends = &(&x - &Poly::constant(1, alpha.clone())) * &(&Poly::constant(1, beta.clone()) - &x);
    let top = &v.scale(&Scalar::int(2)) - &q.scale(&(beta - alpha));
    let (r, _) = top.div_rem(&ends);
    let g = |s: f64| r.eval_f64(&[s]) / (2.0 * q.eval_f64(&[s]));
    let (a, b) = (alpha.to_f64(), beta.to_f64());
    let h = (b - a) / cells as f64;
    let mut values = Vec::with_capacity(cells + 1);
    let (mut int_g, mut int_sg) = (0.0, 0.0);
    values.push(Some(0.0));
    for k in 0..cells {
        let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let (mid, half) = (0.5 * (x0 + x1), 0.5 * h);
        for (t, w) in GAUSS5 {
            let s = mid + half * t;
            let gs = g(s);
            int_g += w * half * gs;
            int_sg += w * half * s * gs;
        }
        // c(x) = ∫_α^x (x - s) g(s) ds
        values.push(Some(x1 * int_g - int_sg));
    }
    GridFunction {
        origin: vec![a],
        h,
        shape: vec![cells + 1],
        values,
    }
}
