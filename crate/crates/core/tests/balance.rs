use jps_core::balance::{balance_check, lr_test};
use jps_core::jps::{fit_treatment_models, predict_scores, PropensityScores};
use jps_core::synth::{generate, Scenario};
use jps_core::JpsConfig;

fn randomized(n: usize, seed: u64) -> Scenario {
    let mut sc = Scenario::confounded(n, seed);
    sc.treatment_coefs = vec![0.0; 5];
    sc.network.weight_loadings = vec![0.0; 5];
    sc
}

fn strongly_confounded(n: usize, seed: u64) -> Scenario {
    let mut sc = Scenario::confounded(n, seed);
    sc.treatment_coefs = vec![0.4, 0.3, 0.3, 0.2, 0.0];
    sc.network.weight_loadings = vec![0.0, 0.4, 0.0, 0.0, 0.4];
    sc
}

fn config(sc: &Scenario) -> JpsConfig {
    JpsConfig {
        covariates_z: sc.covariate_names(),
        covariates_g: sc.covariate_names(),
        ..Default::default()
    }
}

#[test]
fn few_rejections_under_randomization() {
    let reps = 40;
    let mut rejected = 0;
    for r in 0..reps {
        let sc = randomized(400, 100 + r);
        let ds = generate(&sc).unwrap().dataset;
        let gps = fit_treatment_models(&ds, &config(&sc)).unwrap();
        let scores = predict_scores(&gps, &ds).unwrap();
        let report = balance_check(&ds, &gps, &scores).unwrap();
        assert_eq!(report.individual.test.unwrap().df, 5);
        assert_eq!(report.neighborhood.test.unwrap().df, 5);
        if report.individual.rejects(0.05) || report.neighborhood.rejects(0.05) {
            rejected += 1;
        }
    }
    assert!(rejected <= 10, "{rejected} of {reps} rejected");
}

#[test]
fn withheld_scores_reveal_confounding() {
    let sc = strongly_confounded(600, 7);
    let ds = generate(&sc).unwrap().dataset;
    let gps = fit_treatment_models(&ds, &config(&sc)).unwrap();
    let flat = PropensityScores {
        individual: vec![1.0; ds.len()],
        neighborhood: vec![1.0; ds.len()],
    };
    let report = balance_check(&ds, &gps, &flat).unwrap();
    assert!(report.individual.rejects(0.05));
    assert!(report.neighborhood.rejects(0.05));
    assert!(report.individual.dropped_columns.iter().any(|c| c.starts_with("phi")));

    let scores = predict_scores(&gps, &ds).unwrap();
    let fitted = balance_check(&ds, &gps, &scores).unwrap();
    assert!(fitted.individual.dropped_columns.is_empty());
    assert_eq!(fitted.shrinkage.len(), 5);
}

#[test]
fn statistic_and_p_value() {
    let t = lr_test(10.0, 8.0, 100, 4).unwrap();
    assert!((t.statistic - 100.0 * (1.25f64).ln()).abs() < 1e-12);
    assert!(t.p_value > 0.0 && t.p_value < 1.0);
}
