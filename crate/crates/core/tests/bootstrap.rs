use jps_core::bootstrap::{bootstrap_drf, bootstrap_drf_at_level, BootstrapPlan};
use jps_core::synth::{generate, Scenario};
use jps_core::{Error, EstimatorKind, GridAxis, GridPolicy, JpsConfig, PanelDataset};

fn setup(n: usize, seed: u64) -> (PanelDataset, JpsConfig) {
    let sc = Scenario::confounded(n, seed);
    let config = JpsConfig {
        covariates_z: sc.covariate_names(),
        covariates_g: sc.covariate_names(),
        grid: GridPolicy {
            z: GridAxis::Quantiles { points: 4, lower: 0.2, upper: 0.8 },
            g: GridAxis::Quantiles { points: 3, lower: 0.2, upper: 0.8 },
        },
    };
    (generate(&sc).unwrap().dataset, config)
}

#[test]
fn same_seed_same_bands() {
    let (ds, config) = setup(200, 1);
    let a = bootstrap_drf(&ds, &config, EstimatorKind::Jps, 20, 42).unwrap();
    let b = bootstrap_drf(&ds, &config, EstimatorKind::Jps, 20, 42).unwrap();
    assert_eq!(a, b);
    let c = bootstrap_drf(&ds, &config, EstimatorKind::Jps, 20, 43).unwrap();
    assert_ne!(a.surface.lower, c.surface.lower);
    assert_eq!(a.effective + a.failures, a.replicates);
}

#[test]
fn replicates_are_order_free() {
    let (ds, config) = setup(150, 2);
    let plan = BootstrapPlan::new(&ds, &config, EstimatorKind::Jps, 9).unwrap();
    let forward: Vec<_> = (0..10).map(|r| plan.replicate(r)).collect();
    let mut backward: Vec<_> = (0..10).rev().map(|r| plan.replicate(r)).collect();
    backward.reverse();
    let fa = plan.aggregate(&forward, 0.95).unwrap();
    let fb = plan.aggregate(&backward, 0.95).unwrap();
    assert_eq!(fa, fb);
}

#[test]
fn noiseless_outcome_gives_zero_width() {
    let (mut ds, config) = setup(200, 3);
    ds.set_outcome(vec![1.75; ds.len()]).unwrap();
    let bands = bootstrap_drf(&ds, &config, EstimatorKind::Jps, 10, 5).unwrap();
    for band in [&bands.surface, &bands.marginal_z, &bands.marginal_g] {
        for (lo, hi) in band.lower.iter().zip(&band.upper) {
            assert!((hi - lo).abs() < 1e-9);
            assert!((lo - 1.75).abs() < 1e-9);
        }
    }
}

#[test]
fn wider_level_nests_narrower() {
    let (ds, config) = setup(200, 4);
    let b95 = bootstrap_drf_at_level(&ds, &config, EstimatorKind::Jps, 40, 6, 0.95).unwrap();
    let b99 = bootstrap_drf_at_level(&ds, &config, EstimatorKind::Jps, 40, 6, 0.99).unwrap();
    for (narrow, wide) in [
        (&b95.surface, &b99.surface),
        (&b95.marginal_z, &b99.marginal_z),
        (&b95.marginal_g, &b99.marginal_g),
    ] {
        for j in 0..narrow.lower.len() {
            assert!(wide.lower[j] <= narrow.lower[j]);
            assert!(wide.upper[j] >= narrow.upper[j]);
        }
    }
}

#[test]
fn naive_bootstrap_has_only_z_band() {
    let (ds, config) = setup(200, 5);
    let bands = bootstrap_drf(&ds, &config, EstimatorKind::Naive, 10, 1).unwrap();
    assert!(bands.surface.lower.is_empty());
    assert_eq!(bands.marginal_z.lower.len(), 4);
}

#[test]
fn failure_accounting() {
    let (ds, config) = setup(120, 6);
    let plan = BootstrapPlan::new(&ds, &config, EstimatorKind::Jps, 1).unwrap();
    let mut outputs: Vec<_> = (0..10).map(|r| plan.replicate(r)).collect();
    outputs[3] = Err(Error::DegenerateExposure);
    let bands = plan.aggregate(&outputs, 0.9).unwrap();
    assert_eq!((bands.effective, bands.failures, bands.replicates), (9, 1, 10));
    outputs[0] = Err(Error::DegenerateExposure);
    assert_eq!(plan.aggregate(&outputs, 0.9).unwrap().failures, 2);
    outputs[1] = Err(Error::DegenerateExposure);
    assert!(matches!(
        plan.aggregate(&outputs, 0.9),
        Err(Error::BootstrapAborted { failed: 3, total: 10 })
    ));
    assert!(bootstrap_drf(&ds, &config, EstimatorKind::Jps, 1, 0).is_err());
}
