use sbdcal::calib::{self, generate_cohort, r2, Cohort, CohortSpec};
use sbdcal::config::RunConfig;
use sbdcal::datagen::{generate_dataset, SamplingConfig, Split};
use sbdcal::pinn::{feature_matrix, train_autoencoder, train_head, ModelScalers, TrainConfig};
use sbdcal::sbd_sim::DeviceGeometry;

fn short(max_epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        max_epochs,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn small_pipeline_produces_scored_reports() {
    let geom = DeviceGeometry::default();
    let sampling = SamplingConfig {
        n_samples: 400,
        seed: 11,
        ..SamplingConfig::default()
    };
    let ds = generate_dataset(&sampling, &geom).unwrap();
    let (ae, ae_hist) = train_autoencoder(&ds, &short(40, 11)).unwrap();
    assert!(ae_hist.last().unwrap().train < ae_hist[0].train);
    let (head, head_hist) = train_head(&ae, &ds, &short(40, 11)).unwrap();
    assert!(!head_hist.is_empty());

    let spec = CohortSpec {
        devices_per_group: 4,
        seed: 11,
        ..CohortSpec::default()
    };
    let (cohort, truth) = generate_cohort(&spec, &geom).unwrap();
    let scalers = ModelScalers::from_dataset(&ds);
    let pre = calib::calibrate(&ae, &head, &scalers, &cohort, "AE-PINN", Some(0.02)).unwrap();
    assert!(pre.median_linear.is_none());
    let rep = calib::verify(&pre, &cohort, &geom).unwrap();
    assert_eq!(rep.curves.len(), 12);
    assert_eq!(rep.groups.len(), 3);
    assert_eq!(rep.failed_curves, 0);
    assert!(rep.median_log.unwrap() <= 1.0);
    assert!(ds.sampling.ranges.contains(&rep.resim_params()[0]));

    let reference = calib::verify(&calib::reference_report(&cohort, &truth).unwrap(), &cohort, &geom).unwrap();
    assert_eq!(reference.label, "reference");
    assert!(reference.median_log.unwrap() > 0.99);
}

#[test]
fn calibration_sees_only_measured_curves() {
    let (cohort, truth) = generate_cohort(
        &CohortSpec {
            devices_per_group: 2,
            ..CohortSpec::default()
        },
        &DeviceGeometry::default(),
    )
    .unwrap();
    let text = serde_json::to_string(&cohort).unwrap();
    for hidden in ["mu_max", "mu_min", "temperature", "workfunction", "drift_thickness"] {
        assert!(!text.contains(hidden), "cohort exposes {hidden}");
    }
    let back: Cohort = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cohort);
    assert_eq!(truth.params.len(), cohort.curves.len());
}

#[test]
fn desk_autoencoder_reconstructs_held_out_curves() {
    let cfg = RunConfig::desk().resolve();
    let ds = generate_dataset(&cfg.sampling, &cfg.geometry).unwrap();
    let (ae, _) = train_autoencoder(&ds, &cfg.autoencoder).unwrap();
    let idx = ds.indices(Split::Test);
    let x = feature_matrix(&ds, &idx).unwrap();
    let y = ae.reconstruct_batch(x.view()).unwrap();
    let mut scores: Vec<f64> = x
        .rows()
        .into_iter()
        .zip(y.rows())
        .map(|(a, b)| r2(a.as_slice().unwrap(), b.as_slice().unwrap()).unwrap())
        .collect();
    scores.sort_by(f64::total_cmp);
    let median = scores[scores.len() / 2];
    assert!(median >= 0.95, "median held-out reconstruction R² {median}");
}
