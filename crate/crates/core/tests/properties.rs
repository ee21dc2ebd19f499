use proptest::prelude::*;
use ucbfw_core::diagnostics::{random_instance, random_simplex_point, stationarity_residual};
use ucbfw_core::feedback::deviation;
use ucbfw_core::losses::hard_quadratic_family;
use ucbfw_core::rng::CounterRng;
use ucbfw_core::simplex::Recurrence;
use ucbfw_core::{
    aggregate, fit_rate, DeltaSchedule, Deviation, DeviationSpec, LossKind, LossModel, OccupationState, SimplexPoint,
    TrialRecord,
};

fn record(seed: u64, errors: Vec<f64>) -> TrialRecord {
    let n = errors.len();
    TrialRecord {
        seed,
        horizons: (1..=n as u64).collect(),
        errors,
        sum_epsilon: None,
        excess_bound: None,
        counts: vec![vec![]; n],
    }
}

proptest! {
    #[test]
    fn occupation_matches_recurrence(k in 2usize..6, actions in prop::collection::vec(0usize..6, 1..2000)) {
        let mut occ = OccupationState::new(k);
        let mut rec = Recurrence::new(k);
        for a in actions.iter().map(|a| a % k) {
            occ.apply_action(a).unwrap();
            rec.step(a);
        }
        prop_assert_eq!(occ.counts().iter().sum::<u64>(), actions.len() as u64);
        let p = occ.occupation_vector().unwrap();
        prop_assert!((p.coords().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for (x, y) in p.coords().iter().zip(rec.point()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn out_of_range_action_is_rejected(k in 1usize..6, extra in 0usize..4) {
        let mut occ = OccupationState::new(k);
        prop_assert!(occ.apply_action(k + extra).is_err());
        prop_assert_eq!(occ.t(), 0);
    }

    #[test]
    fn normalized_vectors_are_simplex_points(w in prop::collection::vec(0.001f64..10.0, 1..8)) {
        let s: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / s).collect();
        prop_assert!(SimplexPoint::new(p).is_ok());
    }

    #[test]
    fn deviation_shrinks_with_pulls_and_grows_with_t(t in 2u64..1_000_000, n in 1u64..10_000) {
        let spec = DeviationSpec::theorem1();
        let at = |t: u64, n: u64| match deviation(&spec, t, n, DeltaSchedule::InverseTSquared.at(t)).unwrap() {
            Deviation::Bounded(a) => a,
            Deviation::Unbounded => f64::INFINITY,
        };
        prop_assert!(at(t, n + 1) <= at(t, n));
        prop_assert!(at(t + 1, n) >= at(t, n));
        prop_assert_eq!(deviation(&spec, t, 0, 0.5).unwrap(), Deviation::Unbounded);
    }

    #[test]
    fn aggregate_ignores_record_order(errors in prop::collection::vec(0.0f64..1.0, 2..30), rot in 0usize..30) {
        let recs: Vec<_> = errors.iter().enumerate().map(|(i, e)| record(i as u64, vec![*e])).collect();
        let mut shuffled = recs.clone();
        shuffled.rotate_left(rot % recs.len());
        shuffled.reverse();
        prop_assert_eq!(aggregate(&recs, &[1]).unwrap(), aggregate(&shuffled, &[1]).unwrap());
    }

    #[test]
    fn fit_recovers_power_laws(slope in -2.0f64..-0.1, c in 0.01f64..100.0) {
        let hs = [1_000u64, 3_000, 10_000, 30_000, 100_000];
        let errs: Vec<f64> = hs.iter().map(|&h| c * (h as f64).powf(slope)).collect();
        let fit = fit_rate(&hs, &errs).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        prop_assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn vertex_gaps_are_nonnegative(seed in any::<u64>(), k in 2usize..6, fam in 0usize..6) {
        let mut rng = CounterRng::new(seed, 0);
        let model = random_instance(LossKind::ALL[fam], k, &mut rng).unwrap();
        if let Some(g) = &model.minimizer().gaps {
            prop_assert!(g.iter().all(|x| *x >= -1e-12));
        }
        prop_assert!(stationarity_residual(&model, &model.minimizer().p_star).unwrap() <= 1e-8);
    }

    #[test]
    fn minimizer_beats_random_points(seed in any::<u64>(), k in 2usize..6, fam in 0usize..6) {
        let mut rng = CounterRng::new(seed, 1);
        let model = random_instance(LossKind::ALL[fam], k, &mut rng).unwrap();
        let star = model.minimizer().loss_star;
        for _ in 0..50 {
            let q = random_simplex_point(k, &mut rng);
            if let Ok(l) = model.loss_value(&q) {
                prop_assert!(star <= l + 1e-12 * (1.0 + star.abs()));
            }
        }
    }

    #[test]
    fn hard_family_stays_on_simplex(half in 1usize..6, signs in prop::collection::vec(prop::bool::ANY, 6), t in 1_000u64..1_000_000) {
        let k = 2 * half;
        let signs: Vec<i8> = signs[..half].iter().map(|&b| if b { 1 } else { -1 }).collect();
        let (model, _) = hard_quadratic_family(k, 0.01, t, &signs).unwrap();
        prop_assert_eq!(model.kind(), LossKind::Quadratic);
        prop_assert!((model.params().iter().sum::<f64>() - 1.0).abs() <= 1e-15);
        prop_assert_eq!(model.strong_convexity(), 1.0);
    }

    #[test]
    fn rng_draws_are_random_access(seed in any::<u64>(), stream in 0u64..1_000, n in 0u64..200) {
        let mut seq = CounterRng::new(seed, stream);
        for _ in 0..n {
            seq.next_pair();
        }
        prop_assert_eq!(seq.next_pair(), CounterRng::at(seed, stream, n).next_pair());
    }
}

#[test]
fn quadratic_minimizer_is_theta() {
    let m = LossModel::quadratic(vec![0.2, 0.3, 0.5]).unwrap();
    assert_eq!(m.minimizer().p_star.coords(), &[0.2, 0.3, 0.5]);
    assert_eq!(m.minimizer().loss_star, 0.0);
}
