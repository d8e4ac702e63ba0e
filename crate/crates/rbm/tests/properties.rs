//! Property-style invariants: kernel zeros and Vieta identities over large
//! random samples, curve residuals, unit-modulus jump values, domain
//! membership, and the complementarity step.

mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use rbm::curve;
use rbm::kernel;

use rbm::KernelGeometry;

type C = Complex64;

#[test]
fn kernel_zero_and_vieta_on_random_disk() {
    let mut rng = common::rng(0x5eed_1001);
    for _ in 0..3 {
        let p = common::random_valid_model(&mut rng);
        kernel_zero_and_vieta_for(p, &mut rng);
    }
}

fn kernel_zero_and_vieta_for(p: rbm::ModelParams, rng: &mut rand_chacha::ChaCha12Rng) {
    for _ in 0..10_000 {
        let r = 10.0 * rng.gen::<f64>().sqrt();
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let t2 = C::new(r * phi.cos(), r * phi.sin());
        let (lo, hi) = kernel::theta1_branches(&p, t2);
        let scale = 1.0 + t2.norm_sqr();
        assert!(
            kernel::gamma(&p, lo, t2).norm() <= 1e-10 * scale,
            "minus branch leaves the kernel zero set at {}",
            t2
        );
        assert!(kernel::gamma(&p, hi, t2).norm() <= 1e-10 * scale);
        let sum = lo + hi;
        let want_sum = -2.0 * (p.sigma12 * t2 + p.mu1) / p.sigma11;
        assert!((sum - want_sum).norm() <= 1e-10 * (1.0 + want_sum.norm()));
        let prod = lo * hi;
        let want_prod = (p.sigma22 * t2 * t2 + 2.0 * p.mu2 * t2) / p.sigma11;
        assert!((prod - want_prod).norm() <= 1e-10 * (1.0 + want_prod.norm()));
    }
}

#[test]
fn theta2_branches_real_inside_conjugate_outside() {
    let mut rng = common::rng(0x5eed_1002);
    for _ in 0..50 {
        let p = common::random_valid_model(&mut rng);
        let g = KernelGeometry::compute(&p).unwrap();
        for _ in 0..20 {
            let inside = rng.gen_range(g.theta1_minus..g.theta1_plus);
            let (lo, hi) = kernel::theta2_branches(&p, C::new(inside, 0.0));
            assert!(lo.im.abs() < 1e-9 && hi.im.abs() < 1e-9);
            let outside = g.theta1_minus - rng.gen_range(0.01..5.0);
            let (lo, hi) = kernel::theta2_branches(&p, C::new(outside, 0.0));
            assert!(lo.im < 0.0 || hi.im < 0.0);
            assert!((lo - hi.conj()).norm() < 1e-9 * (1.0 + lo.norm()));
        }
    }
}

#[test]
fn hyperbola_residual_and_unit_jump_on_random_models() {
    let mut rng = common::rng(0x5eed_1003);
    for _ in 0..60 {
        let p = common::random_valid_model(&mut rng);
        let geom = KernelGeometry::compute(&p).unwrap();
        let ctx = curve::CurveContext::new(&p, &geom).unwrap();
        for _ in 0..30 {
            let s = rng.gen_range(0.0..20.0_f64);
            let th = ctx.theta(s);
            assert!(th.im <= 0.0);
            assert!(curve::hyperbola_residual(&p, th) < 1e-9);
            if s > 1e-3 {
                let g = ctx.g_literal(s).unwrap();
                assert!(
                    (g.norm() - 1.0).abs() < 1e-10,
                    "|G| = {} at s = {}",
                    g.norm(),
                    s
                );
            }
        }
    }
}

#[test]
fn index_sign_rule_matches_tracking_on_random_models() {
    let mut rng = common::rng(0x5eed_1004);
    for _ in 0..100 {
        let p = common::random_valid_model(&mut rng);
        let idx = curve::compute_index(&p).unwrap();
        let geom = KernelGeometry::compute(&p).unwrap();
        let expected = if geom.gamma1_tangency_sign > 0 { -1 } else { 0 };
        assert_eq!(idx.chi, expected);
        if geom.gamma1_tangency_sign != 0 {
            assert!(
                idx.delta_cap.signum() == -(geom.gamma1_tangency_sign as f64).signum(),
                "sgn Delta must oppose the tangency sign"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn membership_splits_the_real_axis(seed in 0u64..1000, frac in 0.01f64..0.99) {
        let mut rng = common::rng(seed);
        let p = common::random_valid_model(&mut rng);
        let geom = KernelGeometry::compute(&p).unwrap();
        let ctx = curve::CurveContext::new(&p, &geom).unwrap();
        let vertex = geom.theta2_at_t1m;
        prop_assert!(ctx.contains(C::new(vertex * frac, 0.0)));
        prop_assert!(!ctx.contains(C::new(vertex + frac * geom.scale(), 0.0)));
    }

    #[test]
    fn lcp_step_is_complementary(
        zf1 in -3.0f64..3.0,
        zf2 in -3.0f64..3.0,
        r12 in -0.8f64..0.8,
        r21 in -0.8f64..0.8,
    ) {
        prop_assume!(1.0 - r12 * r21 > 0.1);
        let r = [[1.0, r12], [r21, 1.0]];
        let (z, dl) = rbm::mc::lcp_reflect(&r, [zf1, zf2]).unwrap();
        prop_assert!(z[0] >= 0.0 && z[1] >= 0.0);
        prop_assert!(dl[0] >= 0.0 && dl[1] >= 0.0);
        prop_assert!(dl[0] * z[0] <= 1e-9);
        prop_assert!(dl[1] * z[1] <= 1e-9);
        let back0 = z[0] - r[0][0] * dl[0] - r[0][1] * dl[1];
        let back1 = z[1] - r[1][0] * dl[0] - r[1][1] * dl[1];
        prop_assert!((back0 - zf1).abs() < 1e-10);
        prop_assert!((back1 - zf2).abs() < 1e-10);
    }

    #[test]
    fn gluing_identifies_conjugate_nodes(seed in 0u64..1000, s in 0.01f64..15.0) {
        let mut rng = common::rng(seed);
        let p = common::random_valid_model(&mut rng);
        let map = rbm::conformal::GluingMap::new(&p).unwrap();
        let th = curve::hyperbola_point(&p, s).unwrap();
        let a = map.w(th).unwrap();
        let b = map.w(th.conj()).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * (1.0 + a.norm()));
    }
}

#[test]
fn validation_is_strict_inequality_exact_away_from_boundaries() {
    // Inputs at least 1e-3 from every boundary: the floating checks decide
    // exactly as the real inequalities.
    let mut rng = common::rng(0x5eed_1005);
    for _ in 0..500 {
        let p = common::random_valid_model(&mut rng);
        let report = rbm::model::validate(&p).unwrap();
        assert!(report.ok);
        // flip one sign far across a boundary and the check must trip
        let mut bad = p;
        bad.mu1 = 0.5;
        assert!(!rbm::model::validate(&bad).unwrap().ok);
    }
}

#[test]
fn w_range_avoids_the_glued_ray_inside_the_domain() {
    let mut rng = common::rng(0x5eed_1006);
    for _ in 0..30 {
        let p = common::random_valid_model(&mut rng);
        let geom = KernelGeometry::compute(&p).unwrap();
        let ctx = curve::CurveContext::new(&p, &geom).unwrap();
        let map = rbm::conformal::GluingMap::new(&p).unwrap();
        for _ in 0..40 {
            let re = rng.gen_range((geom.theta2_minus - 2.0)..geom.theta2_at_t1m);
            let im = rng.gen_range(-2.0..2.0);
            let z = C::new(re, im);
            if !ctx.contains(z) || ctx.distance_to_curve(z) < 1e-3 * geom.scale() {
                continue;
            }
            let w = map.w(z).unwrap();
            assert!(
                w.im.abs() > 1e-12 || w.re > -1.0 - 1e-9,
                "interior point {} mapped onto the glued ray: w = {}",
                z,
                w
            );
        }
    }
}

#[test]
fn phi1_real_positive_increasing_on_negative_axis() {
    let mut rng = common::rng(0x5eed_1008);
    for _ in 0..5 {
        let p = common::random_valid_model(&mut rng);
        let ev = rbm::Evaluator::new(&p).unwrap();
        let mut prev = 0.0;
        for k in 0..6 {
            let t = -4.0 + 0.75 * k as f64;
            let v = ev.phi1(C::new(t, 0.0)).unwrap().value;
            assert!(v.im.abs() < 1e-8, "phi1 not real at {}: {}", t, v);
            assert!(v.re > prev, "phi1 not increasing at {}", t);
            prev = v.re;
        }
    }
}

#[test]
fn skew_symmetry_implies_dieker_moriarty_zero() {
    let mut rng = common::rng(0x5eed_1007);
    for _ in 0..100 {
        let p = common::random_skew_model(&mut rng);
        let (hit, n) = rbm::model::dieker_moriarty(&p, 1e-9).unwrap();
        assert!(hit);
        assert_eq!(n, Some(0));
    }
}
