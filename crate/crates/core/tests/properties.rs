mod common;

use common::*;
use proptest::prelude::*;
use toric_extremal::config::RunConfig;
use toric_extremal::fibration::{total_scalar, total_volume_factor};
use toric_extremal::geometry::AffineFunc;
use toric_extremal::poly::Poly;
use toric_extremal::potentials::{
    check_boundary_conditions, guillemin_potential, ibp_residual, mabuchi_energy, v_scalar_curvature_symbolic, Correction,
    ScalMode, SymplecticPotential,
};
use toric_extremal::quadrature::{integrate_boundary, integrate_facet, integrate_interior, integrate_region};
use toric_extremal::solvers::{abreu_profile, solve_1d_with, Solve1DOptions};
use toric_extremal::stability::{futaki, l1_norm, normalize, CreaseFunction, TestFunction};
use toric_extremal::weights::{solve_extremal_affine, FibrationData, WeightSystem};
use toric_extremal::{LabelledPolytope, Scalar};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn rescaled_labels_give_the_same_polytope(a in positive_rational(), b in positive_rational(), k in 2i64..6) {
        let p = rectangle(a.clone(), b.clone());
        let scaled = LabelledPolytope::new(
            &[vec![k, 0], vec![0, 1], vec![-1, 0], vec![0, -k]],
            &[Scalar::zero(), Scalar::zero(), a, &b * &Scalar::int(k)],
        ).unwrap();
        prop_assert_eq!(p.to_doc(), scaled.to_doc());
    }

    #[test]
    fn vertices_are_tight_exactly_on_their_facets(p in fixture_polytope()) {
        if p.dim() == 2 {
            prop_assert_eq!(p.vertices().len(), p.num_facets());
        }
        for v in p.vertices() {
            let act = p.active_labels(v);
            for (j, l) in p.labels().iter().enumerate() {
                let val = l.eval(v);
                prop_assert!(val.sign() >= 0);
                prop_assert_eq!(val.is_exact_zero(), act.contains(&j));
            }
        }
    }

    #[test]
    fn clipping_is_additive(p in fixture_polytope(), f in random_poly(2, 3), h in prop::collection::vec(-3i64..=3, 2), t in 1i64..8) {
        let n = p.dim();
        let f = if n == 1 { on_first_axis(&f) } else { f };
        let h: Vec<Scalar> = h[..n].iter().map(|&a| Scalar::int(a)).collect();
        prop_assume!(h.iter().any(|a| !a.is_zero()));
        let c = exact_offset(&p, &h, q(t, 8));
        let neg: Vec<Scalar> = h.iter().map(|a| -a).collect();
        let total = integrate_interior(&p, &f);
        let parts = &integrate_region(&p.clip(&h, &c), &f) + &integrate_region(&p.clip(&neg, &-&c), &f);
        prop_assert_eq!(total, parts);
    }

    #[test]
    fn divergence_identity(p in fixture_polytope(), f in random_poly(2, 3)) {
        let n = p.dim();
        let f = if n == 1 { on_first_axis(&f) } else { f };
        for i in 0..n {
            let lhs = integrate_interior(&p, &f.partial(i));
            let mut rhs = Scalar::zero();
            for j in 0..p.num_facets() {
                let s = integrate_facet(&p, j, &f).unwrap();
                rhs = &rhs - &(&s * &Scalar::int(p.normal(j)[i]));
            }
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn affine_vanishing_and_mass_identity(p in fixture_polytope(), raw in raw_factors()) {
        let fib = fibration_on(&p, &raw);
        let ws = WeightSystem::from_fibration(&p, &fib).unwrap();
        for r in ws.affine_residuals(&p) {
            prop_assert!(r.is_exact_zero(), "{r:?}");
        }
        let mass = integrate_interior(&p, &ws.w);
        let bdry = &integrate_boundary(&p, &ws.v) * &Scalar::int(2);
        prop_assert_eq!(mass, bdry);
    }

    #[test]
    fn extremal_affine_is_translation_covariant(p in fixture_polytope(), raw in raw_factors(), t in prop::collection::vec(small_rational(), 2)) {
        let n = p.dim();
        let t = &t[..n];
        let fib = fibration_on(&p, &raw);
        let ell = solve_extremal_affine(&p, &fib).unwrap();
        let moved = p.translate(t).unwrap();
        let mut fib_t = fib.clone();
        for f in &mut fib_t.factors {
            let shift = f.p.iter().zip(t).fold(Scalar::zero(), |acc, (&a, ti)| &acc + &(ti * &Scalar::int(a)));
            f.c = &f.c - &shift;
        }
        let ell_t = solve_extremal_affine(&moved, &fib_t).unwrap();
        for v in p.vertices() {
            let vt: Vec<Scalar> = v.iter().zip(t).map(|(a, b)| a + b).collect();
            prop_assert_eq!(ell.eval(v), ell_t.eval(&vt));
        }
    }

    #[test]
    fn futaki_ignores_affine_terms_and_is_homogeneous(
        p in fixture_polytope(),
        raw in raw_factors(),
        h in prop::collection::vec(-3i64..=3, 2),
        frac in 1i64..8,
        a in prop::collection::vec(small_rational(), 3),
        t in positive_rational(),
    ) {
        let n = p.dim();
        let ws = WeightSystem::from_fibration(&p, &fibration_on(&p, &raw)).unwrap();
        let h: Vec<Scalar> = h[..n].iter().map(|&a| Scalar::int(a)).collect();
        prop_assume!(h.iter().any(|a| !a.is_zero()));
        let c = exact_offset(&p, &h, q(frac, 8));
        let crease = CreaseFunction::new(h, c);
        let f = TestFunction::Crease(crease.clone());
        let affine = AffineFunc::new(a[1..=n].to_vec(), a[0].clone());
        let shifted = TestFunction::PlMax { pieces: vec![affine.clone(), crease.linear_piece().add(&affine)] };
        let base = futaki(&p, &ws, &f);
        prop_assert_eq!(futaki(&p, &ws, &shifted), base.clone());
        prop_assert_eq!(futaki(&p, &ws, &f.scale(&t)), &base * &t);
        let x0 = p.barycenter();
        let l1 = l1_norm(&p, &normalize(&p, &f, &x0).unwrap());
        let l1t = l1_norm(&p, &normalize(&p, &f.scale(&t), &x0).unwrap());
        prop_assert_eq!(l1t, &l1 * &t);
    }

    #[test]
    fn volume_factor_grows_with_c(p in fixture_polytope(), raw in raw_factors(), bump in positive_rational()) {
        prop_assume!(!raw.is_empty());
        let fib = fibration_on(&p, &raw);
        let v = WeightSystem::from_fibration(&p, &fib).unwrap().v;
        for a in 0..fib.factors.len() {
            let mut more = fib.clone();
            more.factors[a].c = &more.factors[a].c + &bump;
            let v2 = WeightSystem::from_fibration(&p, &more).unwrap().v;
            prop_assert!(total_volume_factor(&p, &v2).cmp_value(&total_volume_factor(&p, &v)).is_gt());
        }
    }

    #[test]
    fn scal_of_guillemin_integrates_to_boundary_mass(p in fixture_polytope(), raw in raw_factors()) {
        let v = WeightSystem::from_fibration(&p, &fibration_on(&p, &raw)).unwrap().v;
        let u = guillemin_potential(&p);
        let scal = v_scalar_curvature_symbolic(&u, &v).unwrap();
        if let Some(s) = scal.to_poly() {
            let lhs = integrate_interior(&p, &s);
            prop_assert_eq!(lhs, &integrate_boundary(&p, &v) * &Scalar::int(2));
        } else {
            // Rational Scal on the rectangle: the numeric rule is enough.
            let lhs = toric_extremal::quadrature::integrate_interior_fn(&p, &|n| scal.eval_f64(&n.x));
            let rhs = 2.0 * integrate_boundary(&p, &v).to_f64();
            prop_assert!((lhs - rhs).abs() < 1e-8 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn ibp_holds_for_random_polynomials(f in random_poly(2, 4), on_interval in any::<bool>()) {
        let p = if on_interval { unit_interval() } else { triangle() };
        let n = p.dim();
        let f = if n == 1 { on_first_axis(&f) } else { f };
        let h0 = guillemin_potential(&p).symbolic_inverse_hessian().unwrap();
        prop_assert!(ibp_residual(&p, &Poly::one(n), &h0, &f) <= 1e-10);
    }

    #[test]
    fn smooth_convex_corrections_keep_boundary_conditions(a in positive_rational(), b in positive_rational(), on_square in any::<bool>()) {
        let p = if on_square { rectangle(Scalar::one(), Scalar::one()) } else { triangle() };
        let corr = &(&x(2, 0) * &x(2, 0)).scale(&a) + &(&x(2, 1) * &x(2, 1)).scale(&b);
        let u = SymplecticPotential::new(&p, Correction::Poly(corr));
        let h = u.symbolic_inverse_hessian().unwrap();
        let rep = check_boundary_conditions(&h, &p, 1e-9);
        prop_assert!(rep.passed, "{:?}", rep.max_residual());
    }
}

/// `Σ_k a_k (x - s_k)^{2k}`: convex for non-negative `a_k`.
fn convex_poly(a: &[Scalar], s: &[Scalar]) -> Poly {
    let mut out = Poly::zero(1);
    for (k, (ak, sk)) in a.iter().zip(s).enumerate() {
        let shifted = &x(1, 0) - &constant(1, sk.clone());
        out = &out + &shifted.pow(2 * (k as u32 + 1)).scale(ak);
    }
    out
}

fn convex_coeffs() -> impl Strategy<Value = (Vec<Scalar>, Vec<Scalar>)> {
    (
        prop::collection::vec((0i64..=4, 1i64..=4).prop_map(|(n, d)| q(n, d)), 2),
        prop::collection::vec((0i64..=4, 1i64..=4).prop_map(|(n, d)| q(n, d)), 2),
    )
}

proptest! {
    #![proptest_config(cfg(12))]

    #[test]
    fn mabuchi_is_convex_along_lines((a, s) in convex_coeffs(), t in 1i64..=8) {
        prop_assume!(a.iter().any(|c| !c.is_zero()));
        let p = unit_interval();
        let ws = WeightSystem::from_fibration(&p, &FibrationData::toric()).unwrap();
        let f = convex_poly(&a, &s);
        let m = |t: f64| {
            let u = SymplecticPotential::new(&p, Correction::Poly(f.scale(&Scalar::from_f64_lossless(t))));
            mabuchi_energy(&p, &ws, &u)
        };
        let (t0, t1) = (t as f64 / 8.0, t as f64 / 4.0);
        let mid = m(0.5 * (t0 + t1));
        prop_assert!(mid <= 0.5 * (m(t0) + m(t1)) + 1e-8);
        prop_assert!(m(t0) >= m(0.0) - 1e-8);
    }

    #[test]
    fn profile_residuals_vanish_iff_weights_are_normalized(
        raw in prop::collection::vec(((-2i64..=2).prop_map(|a| vec![a, 0]), positive_rational(), 1u32..=2, small_rational()), 0..=2),
        eps in small_rational(),
        keep_normalized in any::<bool>(),
    ) {
        let p = unit_interval();
        let ws = WeightSystem::from_fibration(&p, &fibration_on(&p, &raw)).unwrap();
        let t = x(1, 0);
        // 6x^2 - 6x + 1 is orthogonal to 1 and x on [0, 1]; x^2 is not.
        let bump = if keep_normalized {
            &(&(&t * &t).scale(&Scalar::int(6)) - &t.scale(&Scalar::int(6))) + &Poly::one(1)
        } else {
            &t * &t
        };
        let w = &ws.w + &bump.scale(&eps);
        let perturbed = WeightSystem::explicit(&p, ws.v.clone(), w.clone()).unwrap();
        let affine_ok = perturbed.affine_residuals(&p).iter().all(Scalar::is_exact_zero);
        let phi = abreu_profile(&ws.v, &w, &Scalar::zero());
        let one = [Scalar::one()];
        let r0 = phi.eval(&one);
        let r1 = &phi.partial(0).eval(&one) + &(&ws.v.eval(&one) * &Scalar::int(2));
        let profile_ok = r0.to_f64().abs() <= 1e-10 && r1.to_f64().abs() <= 1e-10;
        prop_assert_eq!(affine_ok, profile_ok);
        prop_assert_eq!(affine_ok, keep_normalized || eps.is_zero());
    }

    #[test]
    fn config_round_trip(
        degree in prop::option::of(1u32..8),
        tol_exp in 3i32..14,
        grid in 16usize..512,
        directions in 1usize..100,
        offsets in 16usize..64,
        refine in any::<bool>(),
        offset in small_rational(),
        literal in any::<bool>(),
    ) {
        let s = serde_json::json!({
            "polytope": {"normals": [[1], [-1]], "offsets": [offset.clone(), &offset.abs() + &Scalar::one()]},
            "weights": {"v": {"0": 1}, "w": {"0": 4}},
            "solver": {"degree": degree, "tolerance": 10f64.powi(-tol_exp), "grid": grid, "futaki_sign": if literal { "literal" } else { "consistent" }},
            "scan": {"directions": directions, "offsets": offsets, "refine": refine},
            "output": {"formats": ["json", "csv"], "csv": "out.csv"}
        });
        let a = RunConfig::from_json_str(&s.to_string()).unwrap();
        let b = RunConfig::from_json_str(&a.to_json()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn total_scalar_of_the_solved_profile_is_extremal_to_second_order() {
    let p = unit_interval();
    let fib = FibrationData::single(vec![1], q(2, 1), 1, q(-3, 1));
    let ws = WeightSystem::from_fibration(&p, &fib).unwrap();
    let probes: Vec<Vec<f64>> = (0..=20).map(|i| vec![0.25 + 0.5 * i as f64 / 20.0]).collect();
    let dev = |cells: usize| {
        let r = solve_1d_with(&p, &ws, &Solve1DOptions { grid_cells: cells }).unwrap();
        let u = r.recovered_potential(&p).unwrap();
        total_scalar(&ws, &u, &probes, ScalMode::FiniteDiff { h: 1.0 / cells as f64 }).unwrap().deviation
    };
    let (coarse, fine) = (dev(128), dev(256));
    assert!(fine < 1e-2, "{fine}");
    assert!(coarse / fine > 2.5, "{coarse} / {fine}");
}
