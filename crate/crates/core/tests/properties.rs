use num_complex::Complex64;
use proptest::prelude::*;

use folia_core::battery::{eta_equivalences, identity_battery};
use folia_core::catalog;
use folia_core::holomorphic::bott_invariant_formula;
use folia_core::invariants::Sampling;
use folia_core::reeb::{solve_cond2, StepControl};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn identities_hold_on_random_scenes(q in 1usize..=2, seed in 0u64..1000, amp in 0.05f64..0.25) {
        let s = catalog::random_scene(q, seed, amp, false);
        let sm = Sampling { count: 8, seed, ..Sampling::default() };
        let r = identity_battery(&s, &sm, 1e-9).unwrap();
        prop_assert!(r.pass, "{:?}", r.checks);
        prop_assert!(eta_equivalences(&s, &sm, 1e-8).unwrap().iter().all(|c| c.pass));
    }

    #[test]
    fn bott_formula_is_scale_and_order_invariant(
        w in prop::collection::vec((0.2f64..3.0, -1.0f64..1.0), 2..5),
        k in 0.1f64..10.0,
        turn in -3.0f64..3.0,
    ) {
        let l: Vec<Complex64> = w.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let b = bott_invariant_formula(&l).unwrap();
        let c = Complex64::from_polar(k, turn);
        let scaled: Vec<Complex64> = l.iter().map(|x| x * c).collect();
        let mut rev = l.clone();
        rev.reverse();
        prop_assert!((bott_invariant_formula(&scaled).unwrap() - b).norm() <= 1e-10 * b.norm().max(1.0));
        prop_assert!((bott_invariant_formula(&rev).unwrap() - b).norm() <= 1e-12 * b.norm().max(1.0));
    }

    #[test]
    fn cond2_profiles_blow_up_at_finite_radius(a1 in 0.05f64..0.6) {
        let p = solve_cond2(1.0, a1, 0.0, StepControl::default()).unwrap();
        prop_assert!(p.r0.is_finite() && p.r0 > 0.0);
        prop_assert!(p.residual_max <= 1e-6);
    }
}
