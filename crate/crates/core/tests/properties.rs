use ewalk_core::cmv::{build_cmv, theta_block, VerblunskySeq};
use ewalk_core::dynamics::{evolve, EvolveOptions, RecordSchedule};
use ewalk_core::numtheory::cf_expand_rational;
use ewalk_core::restrict::build_restriction;
use ewalk_core::scalar::{cis, int_angle};
use ewalk_core::xfer::{cocycle_span, transfer_mat2};
use ewalk_core::{Coin, Cocycle2x2, Mat2, StateVector, WalkSpec};
use num_bigint::{BigInt, BigUint};
use num_complex::Complex;
use num_traits::Signed;
use proptest::prelude::*;

type C64 = Complex<f64>;

fn angle() -> impl Strategy<Value = f64> {
    -3.14f64..3.14
}

fn coin() -> impl Strategy<Value = Coin<f64>> {
    (0.05f64..0.999, angle(), angle(), angle()).prop_map(|(r, aa, ab, eta)| Coin::su2_polar(r, aa, ab, eta).unwrap())
}

fn spec() -> impl Strategy<Value = WalkSpec<f64>> {
    (coin(), angle(), angle()).prop_map(|(c, f, t)| WalkSpec::new(c, f, t))
}

fn cplx() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| C64::new(a, b))
}

fn mat2() -> impl Strategy<Value = Mat2<f64>> {
    (cplx(), cplx(), cplx(), cplx()).prop_map(|(a, b, c, d)| Mat2::new(a, b, c, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_preserves_norm(s in spec(), u in angle(), v in angle(), steps in 1usize..200) {
        let init = StateVector::localized(3, [C64::from_polar(0.6, u), C64::from_polar(0.8, v)]);
        let opts = EvolveOptions { schedule: RecordSchedule::Every(1), ..Default::default() };
        let tr = evolve(&s, &init, steps, &opts).unwrap();
        for n in &tr.norm {
            prop_assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_blocks_are_unitary(r in 0.0f64..0.999, ph in angle()) {
        let t = theta_block(C64::from_polar(r, ph)).unwrap();
        prop_assert!(t.unitarity_defect() < 1e-14);
    }

    #[test]
    fn cmv_interior_is_unitary(lam in 0.0f64..0.99, f in angle(), th in angle()) {
        let seq = VerblunskySeq::QuasiPeriodic { lambda: lam, field: f, theta: th };
        let e = build_cmv(&seq, -20..20).unwrap();
        prop_assert!(e.mat.unitarity_defect_on(e.interior(4)) < 1e-13);
    }

    #[test]
    fn convergents_obey_recursion_and_approximation(num in 1u64..1_000_000_000, extra in 1u64..1_000_000_000) {
        let den = num + extra;
        let cf = cf_expand_rational(&BigUint::from(num), &BigUint::from(den), 64).unwrap();
        prop_assert!(cf.terminated);
        let (x, y) = (BigInt::from(num), BigInt::from(den));
        for k in 0..cf.depth() {
            let c = BigInt::from(cf.coeffs[k].clone());
            let (p2, q2) = if k >= 1 { (cf.p[k - 1].clone(), cf.q[k - 1].clone()) } else { (BigInt::from(1), BigInt::from(0)) };
            let (p3, q3) = if k >= 2 { (cf.p[k - 2].clone(), cf.q[k - 2].clone()) } else if k == 1 { (BigInt::from(1), BigInt::from(0)) } else { (BigInt::from(0), BigInt::from(1)) };
            prop_assert_eq!(&cf.p[k], &(&c * &p2 + &p3));
            prop_assert_eq!(&cf.q[k], &(&c * &q2 + &q3));
            if k >= 2 {
                prop_assert!(cf.q[k] > cf.q[k - 1]);
            }
            if k + 1 < cf.depth() {
                // |x/y − p_k/q_k| < 1/(q_k q_{k+1})  ⇔  |x q_k − y p_k| q_{k+1} < y,
                // with equality once p_{k+1}/q_{k+1} is x/y itself
                let lhs = (&x * &cf.q[k] - &y * &cf.p[k]).abs() * &cf.q[k + 1];
                if k + 2 < cf.depth() {
                    prop_assert!(lhs < y);
                } else {
                    prop_assert_eq!(lhs, y.clone());
                }
            }
        }
        prop_assert_eq!(&(cf.p.last().unwrap() * &y), &(cf.q.last().unwrap() * &x));
    }

    #[test]
    fn op_norm_bounds(m in mat2()) {
        let n = m.op_norm();
        let f = m.frobenius_sqr();
        let d = m.det().norm();
        prop_assert!(n * n <= f * (1.0 + 1e-14) + 1e-300);
        prop_assert!(2.0 * n * n >= f * (1.0 - 1e-14));
        prop_assert!(d <= n * n * (1.0 + 1e-12) + 1e-300);
        let col = (m.m[0][0].norm_sqr() + m.m[1][0].norm_sqr()).sqrt();
        prop_assert!(col <= n * (1.0 + 1e-14) + 1e-300);
    }

    #[test]
    fn renormalized_cocycle_matches_plain_product(ms in prop::collection::vec(mat2(), 1..12)) {
        let mut c = Cocycle2x2::identity();
        let mut plain = Mat2::identity();
        for m in &ms {
            c.push(m);
            plain = *m * plain;
        }
        let scale = plain.max_abs().max(1e-300);
        prop_assert!(c.matrix().max_abs_diff(&plain) <= 1e-12 * scale);
    }

    #[test]
    fn transfer_determinant_is_d_over_a(s in spec(), x in -50i64..50, zr in 0.3f64..3.0, za in angle()) {
        let z = C64::from_polar(zr, za);
        let t = transfer_mat2(&s, x, z).unwrap();
        let cx = s.cell_coin(x).m;
        prop_assert!((t.det() - cx[1][1] / cx[0][0]).norm() < 1e-12 * (1.0 + t.frobenius_sqr()));
        // unimodular up to a phase on the circle
        let on = transfer_mat2(&s, x, C64::from_polar(1.0, za)).unwrap();
        prop_assert!((on.det().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn span_composes(s in spec(), x0 in -20i64..0, mid in 0i64..10, x1 in 10i64..20, za in angle()) {
        let z = C64::from_polar(1.0, za);
        let left = cocycle_span(&s, z, x0, mid).unwrap();
        let right = cocycle_span(&s, z, mid + 1, x1).unwrap();
        let all = cocycle_span(&s, z, x0, x1).unwrap();
        let comp = left.compose(&right);
        prop_assert!((comp.log_norm() - all.log_norm()).abs() < 1e-10);
    }

    #[test]
    fn restrictions_are_unitary(s in spec(), a in -30i64..30, len in 2i64..40, ua in angle(), ub in angle()) {
        let r = build_restriction(&s, a, a + len, C64::from_polar(1.0, ua), C64::from_polar(1.0, ub)).unwrap();
        prop_assert!(r.unitarity_defect() < 1e-12);
    }

    #[test]
    fn int_angle_matches_repeated_rotation(n in -10_000i64..10_000, phi in angle()) {
        let want = cis(phi).powi(n as i32);
        prop_assert!((cis(int_angle(n, phi)) - want).norm() < 1e-10);
    }
}
