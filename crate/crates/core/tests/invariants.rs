use approx::assert_relative_eq;
use proptest::prelude::*;

use equipart::averaged::{functional_f, grad_f, integrate_averaged, rhs_averaged, stationary_profile, AveragedState};
use equipart::full::{integrate_full, IntegratorConfig, Sampler};
use equipart::spectral::{classical_energy, from_polar, state_support, to_polar, ModalState, ModeSet, Spectrum};
use equipart::sum;

fn lambdas(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..5.0, n).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

fn sparse(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), -1.5f64..1.5], n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rhs_is_bitwise_minus_gradient(rho in prop::collection::vec(0.0f64..3.0, 1..20)) {
        let g = grad_f(&rho);
        let r = rhs_averaged(&rho);
        for (k, (gk, rk)) in g.iter().zip(&r).enumerate() {
            if rho[k] == 0.0 {
                prop_assert_eq!(*rk, 0.0);
            } else {
                prop_assert_eq!(-gk, *rk);
            }
        }
    }

    #[test]
    fn stationary_profile_is_a_critical_point(n in 1usize..40, mask in prop::collection::vec(any::<bool>(), 40)) {
        let idx: Vec<usize> = (0..n).filter(|&k| mask[k]).collect();
        let profile = stationary_profile(&ModeSet::new(idx.clone()));
        let v = profile.vector(n);
        let j = idx.len() as f64;
        prop_assert!((v.iter().map(|x| x * x).sum::<f64>() - 4.0 * j / (2.0 * j + 1.0)).abs() < 1e-12);
        for r in rhs_averaged(&v) {
            prop_assert!(r.abs() < 1e-14);
        }
    }

    #[test]
    fn averaged_flow_keeps_support_and_decreases_f(rho in prop::collection::vec(prop_oneof![Just(0.0), 0.05f64..2.0], 1..8)) {
        prop_assume!(rho.iter().any(|r| *r > 0.0));
        let init = AveragedState::new(0.0, rho.clone()).unwrap();
        let traj = integrate_averaged(&init, 8.0, 1e-10).unwrap();
        let states = traj.averaged_states().unwrap();
        let mut last_f = f64::INFINITY;
        for s in states {
            for (k, r) in s.rho.iter().enumerate() {
                prop_assert_eq!(*r == 0.0, rho[k] == 0.0);
                prop_assert!(*r >= 0.0);
            }
            let f = functional_f(&s.rho);
            prop_assert!(f <= last_f + 1e-12);
            last_f = f;
        }
    }

    #[test]
    fn polar_round_trip(l in lambdas(5), u in sparse(5), du in sparse(5), t in 0.0f64..100.0) {
        let spec = Spectrum::new(l).unwrap();
        let state = ModalState::new(t, u, du).unwrap();
        let back = from_polar(&to_polar(&state, &spec).unwrap(), &spec).unwrap();
        assert_relative_eq!(back.t, state.t, max_relative = 1e-12, epsilon = 1e-12);
        for k in 0..5 {
            assert_relative_eq!(back.u[k], state.u[k], max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(back.du[k], state.du[k], max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn polar_energy_matches_classical(l in lambdas(4), u in sparse(4), du in sparse(4), t in 0.0f64..50.0) {
        let spec = Spectrum::new(l.clone()).unwrap();
        let state = ModalState::new(t, u.clone(), du.clone()).unwrap();
        let p = to_polar(&state, &spec).unwrap();
        let root = (1.0 + t).sqrt();
        for k in 0..4 {
            let v = root * u[k];
            let dv = u[k] / (2.0 * root) + root * du[k];
            let expected = (l[k] * v).powi(2) + dv * dv;
            assert_relative_eq!(p.rho[k] * p.rho[k], expected, max_relative = 1e-12, epsilon = 1e-300);
        }
    }

    #[test]
    fn full_flow_dissipates_and_keeps_support(l in lambdas(3), u in sparse(3), du in sparse(3)) {
        let spec = Spectrum::new(l).unwrap();
        let init = ModalState::new(0.0, u, du).unwrap();
        let cfg = IntegratorConfig::new(20.0, Sampler::LogSpaced { count: 60 }).with_tolerances(1e-9, 1e-12);
        let traj = integrate_full(&init, &spec, &cfg).unwrap();
        let j = state_support(&init);
        let mut last = f64::INFINITY;
        for s in traj.modal_states().unwrap() {
            let (e, _) = classical_energy(s, &spec).unwrap();
            prop_assert!(e <= last * (1.0 + 1e-8) + 1e-14);
            last = e;
            for k in 0..3 {
                if !j.contains(k) {
                    prop_assert_eq!(s.u[k], 0.0);
                    prop_assert_eq!(s.du[k], 0.0);
                }
            }
        }
    }

    #[test]
    fn compensated_sum_is_exact_on_cancelling_terms(xs in prop::collection::vec(-1e6f64..1e6, 0..50)) {
        let mut terms = xs.clone();
        terms.push(1.0);
        terms.extend(xs.iter().map(|x| -x));
        prop_assert_eq!(sum::compensated(terms.iter().copied()), 1.0);
    }
}
