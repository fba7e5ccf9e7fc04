use ndarray::Array2;
use proptest::prelude::*;
use sbdcal::calib::metrics::{quartile_stats, r2};
use sbdcal::datagen::lhs::{stratum, unit_hypercube};
use sbdcal::datagen::{add_noise_seeded, assign_splits, split_counts, NoiseModel, ScalerState, Split};
use sbdcal::nn::checkpoint::Checkpoint;
use sbdcal::nn::NetworkModel;
use sbdcal::phumob::PhuMobParams;
use sbdcal::pinn::PhysicsPenalty;
use sbdcal::rng;
use sbdcal::sbd_sim::{simulate, DeviceGeometry, DiodeModel, ParamVector, CURRENT_FLOOR, N_CURRENTS};

fn params() -> impl Strategy<Value = ParamVector> {
    (
        200.0..500.0f64,
        5.0..5.5f64,
        20.0..1810.0f64,
        2.0..1980.0f64,
        17.0..18.0f64,
        1.0..5.0f64,
        0.5..5.0f64,
    )
        .prop_map(|(t, wf, mu_min, delta, log_n, alpha, theta)| ParamVector {
            temperature: t,
            workfunction: wf,
            phumob: PhuMobParams {
                mu_max: (mu_min + delta).min(2000.0),
                mu_min,
                n_ref: 10f64.powf(log_n),
                alpha,
                theta,
            },
        })
}

fn penalty_scaler() -> ScalerState {
    ScalerState::MinMax {
        min: vec![200.0, 5.0, 22.0, 20.0, 17.0, 1.0, 0.5],
        max: vec![500.0, 5.5, 2000.0, 1810.0, 18.0, 5.0, 5.0],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solution_zeroes_the_residual_inside_the_bracket(p in params(), v in 0.0..4.0f64) {
        let m = DiodeModel::new(&p, &DeviceGeometry::default()).unwrap();
        let i = m.solve(v).unwrap();
        let (lo, hi) = m.bracket(v);
        prop_assert!(i >= lo && i <= hi * (1.0 + 1e-12));
        prop_assert!(m.residual(v, i).abs() <= 1e-9 * i.max(m.saturation_current));
    }

    #[test]
    fn curves_are_positive_increasing_and_above_the_floor(p in params()) {
        let c = simulate(&p, &DeviceGeometry::default()).unwrap();
        prop_assert_eq!(c.currents.len(), N_CURRENTS);
        prop_assert!(c.currents.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(c.floored().iter().all(|&i| i >= CURRENT_FLOOR));
    }

    #[test]
    fn every_lhs_column_is_a_permutation_of_strata(n in 1usize..400, seed in any::<u64>()) {
        let u = unit_hypercube(n, 7, &mut rng::stream(seed, &[0]));
        for d in 0..7 {
            let mut seen = vec![false; n];
            for row in &u {
                let k = stratum(row[d], n);
                prop_assert!(!seen[k]);
                seen[k] = true;
            }
        }
    }

    #[test]
    fn split_tags_match_counts(n in 10usize..3000, seed in any::<u64>()) {
        let f = [0.72, 0.13, 0.15];
        let tags = assign_splits(n, f, seed);
        let (tr, va, te) = split_counts(n, f);
        prop_assert_eq!(tags.iter().filter(|s| **s == Split::Train).count(), tr);
        prop_assert_eq!(tags.iter().filter(|s| **s == Split::Validation).count(), va);
        prop_assert_eq!(tags.iter().filter(|s| **s == Split::Test).count(), te);
    }

    #[test]
    fn noise_respects_the_floor_and_is_seeded(p in params(), snr in 0.0..60.0f64, seed in any::<u64>()) {
        let c = simulate(&p, &DeviceGeometry::default()).unwrap();
        for model in [NoiseModel::PerPoint, NoiseModel::PerCurve] {
            let a = add_noise_seeded(&c, snr, model, seed);
            let b = add_noise_seeded(&c, snr, model, seed);
            prop_assert_eq!(&a, &b);
            prop_assert!(a.currents.iter().all(|&i| i >= CURRENT_FLOOR));
        }
    }

    #[test]
    fn penalty_vanishes_on_ordered_rows_and_is_nonnegative(rows in prop::collection::vec(prop::array::uniform7(-0.5..1.5f64), 1..20)) {
        let s = penalty_scaler();
        let pen = PhysicsPenalty::new(&s, 1978.0);
        let pred = Array2::from_shape_fn((rows.len(), 7), |(i, j)| rows[i][j]);
        let (v, g) = pen.value_and_grad(pred.view());
        prop_assert!(v >= 0.0);
        let any_violation = rows.iter().any(|r| {
            let phys = s.inverse_transform(r).unwrap();
            phys[3] > phys[2]
        });
        prop_assert_eq!(v > 0.0, any_violation);
        if !any_violation {
            prop_assert!(g.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn r2_never_exceeds_one(actual in prop::collection::vec(-1e3..1e3f64, 3..60), noise in -1.0..1.0f64) {
        prop_assume!(actual.iter().any(|&a| (a - actual[0]).abs() > 1e-6));
        let pred: Vec<f64> = actual.iter().enumerate().map(|(i, a)| a + noise * (i as f64).sin()).collect();
        prop_assert!(r2(&actual, &pred).unwrap() <= 1.0);
        prop_assert_eq!(r2(&actual, &actual).unwrap(), 1.0);
    }

    #[test]
    fn quartiles_are_ordered(v in prop::collection::vec(-1e6..1e6f64, 1..100)) {
        let q = quartile_stats(&v).unwrap();
        prop_assert!(q.min <= q.q1 && q.q1 <= q.median && q.median <= q.q3 && q.q3 <= q.max);
    }

    #[test]
    fn checkpoints_round_trip_byte_identically(dims in prop::collection::vec(1usize..12, 2..5), seed in any::<u64>()) {
        let model = NetworkModel::mlp(&dims, &mut rng::stream(seed, &[1])).unwrap();
        let text = Checkpoint::new("head", "00", seed).with_network("head", &model).to_json().unwrap();
        let back = Checkpoint::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), text);
        prop_assert_eq!(back.network("head").unwrap(), model);
    }
}
