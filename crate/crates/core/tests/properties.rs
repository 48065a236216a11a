use proptest::prelude::*;
use pv5_jacobi::ladder;
use pv5_jacobi::quadrature::{self, PrecisionContext};
use pv5_jacobi::verify::{self, z_samples, Snapshot};
use pv5_jacobi::{num, ModelParams, OrthoState};

const BITS: u32 = 128;

fn ctx() -> PrecisionContext {
    PrecisionContext::with_bits(BITS).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn norms_and_betas_positive(alpha in 0.2f64..3.0, k2 in -1.0f64..0.6, t in 0.0f64..1.5) {
        let p = ModelParams::from_f64(alpha, k2, t, BITS, 5).unwrap();
        let s = OrthoState::build(&p, &ctx()).unwrap();
        prop_assert!(s.h.iter().all(|h| *h > 0));
        prop_assert!(s.beta[1..].iter().all(|b| *b > 0));
        // even measure: odd moments vanish and z P_n^2 integrates to zero
        prop_assert!(s.symmetry_defect < 1e-25);
        prop_assert!(quadrature::moment(3, &p, &ctx()).unwrap().is_zero());
    }

    #[test]
    fn sum_rules_hold(alpha in 0.2f64..3.0, k2 in -1.0f64..0.6, t in 0.0f64..1.5) {
        let p = ModelParams::from_f64(alpha, k2, t, BITS, 5).unwrap();
        let s = OrthoState::build(&p, &ctx()).unwrap();
        prop_assert!(s.beta_route_defect() < 1e-20);
        prop_assert!(s.telescopic_defect() < 1e-20);
    }

    #[test]
    fn rational_forms_match_integrals(alpha in 0.3f64..2.5, k2 in -0.8f64..0.5, t in 0.05f64..1.0, seed in 0u64..1000) {
        let p = ModelParams::from_f64(alpha, k2, t, BITS, 3).unwrap();
        let c = ctx();
        let s = Snapshot::build(&p, &c, &p.t, 3).unwrap();
        for z in z_samples(&p, 2, seed).unwrap() {
            for n in 0..=3 {
                let ar = ladder::a_rational(n, &z, &s.ortho, &s.lad).unwrap();
                let ai = ladder::a_integral(n, &z, &s.ortho).unwrap();
                prop_assert!(num::normalized_diff(&ar, &ai) < 1e-20);
                let br = ladder::b_rational(n, &z, &s.ortho, &s.lad).unwrap();
                let bi = ladder::b_integral(n, &z, &s.ortho).unwrap();
                prop_assert!(num::normalized_diff(&br, &bi) < 1e-20);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalized_residual_is_bounded(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let (x, y) = (num::real(BITS, a), num::real(BITS, b));
        let d = num::normalized_diff(&x, &y);
        prop_assert!(d >= 0);
        prop_assert!(d <= 2);
        prop_assert_eq!(d.clone(), num::normalized_diff(&y, &x));
        prop_assert!(num::normalized_diff(&x, &x).is_zero());
    }

    #[test]
    fn z_samples_avoid_poles(k2 in -1.0f64..0.7, t in 0.0f64..2.0, seed in any::<u64>()) {
        let p = ModelParams::from_f64(1.0, k2, t, BITS, 2).unwrap();
        let zs = z_samples(&p, 20, seed).unwrap();
        prop_assert_eq!(zs.len(), 20);
        let again = z_samples(&p, 20, seed).unwrap();
        prop_assert_eq!(&zs, &again);
        let d = verify::POLE_DISTANCE - 1e-12;
        for z in &zs {
            let z = z.to_f64();
            prop_assert!(z.abs() <= 1.0 - d);
            if k2 > 0.0 {
                prop_assert!(z.abs() >= k2.sqrt() + d);
            }
        }
    }
}
