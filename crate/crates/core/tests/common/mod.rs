#![allow(dead_code)]

use proptest::prelude::*;
use toric_extremal::poly::Poly;
use toric_extremal::weights::{Factor, FibrationData};
use toric_extremal::{LabelledPolytope, Scalar};

pub fn q(n: i64, d: i64) -> Scalar {
    Scalar::ratio(n, d)
}

pub fn unit_interval() -> LabelledPolytope {
    LabelledPolytope::interval(Scalar::zero(), Scalar::one()).unwrap()
}

pub fn triangle() -> LabelledPolytope {
    LabelledPolytope::simplex(2).unwrap()
}

pub fn x(n: usize, i: usize) -> Poly {
    Poly::var(n, i)
}

pub fn constant(n: usize, c: Scalar) -> Poly {
    Poly::constant(n, c)
}

/// Interval `[a, a + len]`.
pub fn interval(a: Scalar, len: Scalar) -> LabelledPolytope {
    let b = &a + &len;
    LabelledPolytope::interval(a, b).unwrap()
}

/// `[0, a] x [0, b]`.
pub fn rectangle(a: Scalar, b: Scalar) -> LabelledPolytope {
    LabelledPolytope::new(
        &[vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]],
        &[Scalar::zero(), Scalar::zero(), a, b],
    )
    .unwrap()
}

/// `t·Δ_ℓ`.
pub fn scaled_simplex(dim: usize, t: Scalar) -> LabelledPolytope {
    let mut normals: Vec<Vec<i64>> = (0..dim)
        .map(|i| (0..dim).map(|j| (i == j) as i64).collect())
        .collect();
    normals.push(vec![-1; dim]);
    let mut offsets = vec![Scalar::zero(); dim];
    offsets.push(t);
    LabelledPolytope::new(&normals, &offsets).unwrap()
}

pub fn small_rational() -> impl Strategy<Value = Scalar> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| q(n, d))
}

pub fn positive_rational() -> impl Strategy<Value = Scalar> {
    (1i64..=8, 1i64..=4).prop_map(|(n, d)| q(n, d))
}

/// Intervals, triangles and rectangles with small rational sizes.
pub fn fixture_polytope() -> impl Strategy<Value = LabelledPolytope> {
    prop_oneof![
        (small_rational(), positive_rational()).prop_map(|(a, l)| interval(a, l)),
        positive_rational().prop_map(|t| scaled_simplex(2, t)),
        (positive_rational(), positive_rational()).prop_map(|(a, b)| rectangle(a, b)),
    ]
}

/// A fibration whose affine factors are positive on `p`: each `c_a` exceeds
/// the largest `-<p_a, vertex>` by a random positive margin.
pub fn fibration_on(p: &LabelledPolytope, raw: &[(Vec<i64>, Scalar, u32, Scalar)]) -> FibrationData {
    let factors = raw
        .iter()
        .map(|(pa, margin, d, scal)| {
            let pa: Vec<i64> = pa[..p.dim()].to_vec();
            let worst = p
                .vertices()
                .iter()
                .map(|v| {
                    let s = v
                        .iter()
                        .zip(&pa)
                        .fold(Scalar::zero(), |acc, (x, &a)| &acc + &(x * &Scalar::int(a)));
                    -&s
                })
                .max_by(|a, b| a.cmp_value(b))
                .unwrap();
            Factor {
                p: pa,
                c: &worst + margin,
                d: *d,
                scal: scal.clone(),
            }
        })
        .collect();
    FibrationData { factors }
}

pub fn raw_factors() -> impl Strategy<Value = Vec<(Vec<i64>, Scalar, u32, Scalar)>> {
    prop::collection::vec(
        (
            prop::collection::vec(-2i64..=2, 2),
            positive_rational(),
            1u32..=2,
            small_rational(),
        ),
        0..=2,
    )
}

/// Random polynomial with small rational coefficients and total degree
/// at most `deg`.
pub fn random_poly(nvars: usize, deg: u32) -> impl Strategy<Value = Poly> {
    let exps = Poly::exponents_up_to(nvars, deg);
    let n = exps.len();
    prop::collection::vec(small_rational(), n)
        .prop_map(move |cs| Poly::from_terms(nvars, exps.iter().cloned().zip(cs)))
}

/// Restriction of a bivariate polynomial to the first axis.
pub fn on_first_axis(f: &Poly) -> Poly {
    f.compose_affine(&[Scalar::zero(), Scalar::zero()], &[vec![Scalar::one(), Scalar::zero()]])
}

/// `lo + (hi - lo)·t` where `[lo, hi]` is the exact range of `<h, x>` on `p`.
pub fn exact_offset(p: &LabelledPolytope, h: &[Scalar], t: Scalar) -> Scalar {
    let vals: Vec<Scalar> = p
        .vertices()
        .iter()
        .map(|v| v.iter().zip(h).fold(Scalar::zero(), |acc, (x, a)| &acc + &(x * a)))
        .collect();
    let lo = vals.iter().min_by(|a, b| a.cmp_value(b)).unwrap().clone();
    let hi = vals.iter().max_by(|a, b| a.cmp_value(b)).unwrap().clone();
    &lo + &(&(&hi - &lo) * &t)
}
