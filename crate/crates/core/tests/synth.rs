use jps_core::jps;
use jps_core::network::{degree, Direction};
use jps_core::synth::{generate, oracle_drf, Scenario};
use jps_core::JpsConfig;

#[test]
fn same_seed_same_panel() {
    let sc = Scenario::confounded(300, 21);
    let a = generate(&sc).unwrap();
    let b = generate(&sc).unwrap();
    assert_eq!(a.dataset, b.dataset);
    assert_eq!(a.edges, b.edges);
    let mut other = sc.clone();
    other.seed = 22;
    assert_ne!(generate(&other).unwrap().dataset, a.dataset);
}

#[test]
fn complete_graph_degrees() {
    let mut sc = Scenario::confounded(10, 1);
    sc.network.edge_prob = 1.0;
    sc.network.communities = 1;
    let data = generate(&sc).unwrap();
    assert_eq!(sc.units_per_period, 5);
    for node in 0..data.adjacency.node_count() {
        assert_eq!(degree(&data.adjacency, node, Direction::In).unwrap(), 4);
        assert_eq!(degree(&data.adjacency, node, Direction::Out).unwrap(), 4);
    }
}

#[test]
fn degenerate_scenario_is_constant() {
    let mut sc = Scenario::confounded(20, 2);
    sc.network.edge_prob = 1.0;
    sc.network.communities = 1;
    sc.network.weight_log_sd = 0.0;
    sc.network.weight_loadings = vec![0.0; 5];
    sc.treatment_sd = 0.0;
    sc.treatment_coefs = vec![0.0; 5];
    sc.outcome_sd = 0.0;
    sc.outcome.covariates = vec![0.0; 5];
    let data = generate(&sc).unwrap();
    let z = data.dataset.treatment();
    let g = data.dataset.exposure().unwrap();
    assert!(z.iter().all(|&v| v == z[0]));
    assert!(g.iter().all(|&v| (v - g[0]).abs() < 1e-12 * g[0]));
    assert!(data.dataset.outcome().iter().all(|&v| (v - data.dataset.outcome()[0]).abs() < 1e-12));
    let config = JpsConfig {
        covariates_z: sc.covariate_names(),
        covariates_g: sc.covariate_names(),
        ..Default::default()
    };
    assert!(jps::estimate(&data.dataset, &config).is_err());
    sc.network.edge_prob = 0.0;
    assert!(generate(&sc).is_err());
}

#[test]
fn quadratic_truth_peaks_at_five_thirds() {
    let sc = Scenario::quadratic(200, 3);
    let z: Vec<f64> = (0..=3000).map(|i| 1.0 + i as f64 / 3000.0).collect();
    let oracle = oracle_drf(&sc, &z, &[0.5], 1000).unwrap();
    let best = jps::argmax(&oracle.marginal_z).unwrap();
    assert!((z[best] - 5.0 / 3.0).abs() < 1e-3);
    assert!(oracle.marginal_z_se.iter().all(|&s| s < 1e-12));
}

#[test]
fn oracle_surface_is_exact() {
    let sc = Scenario::confounded(200, 4);
    let oracle = oracle_drf(&sc, &[1.0, 2.0], &[0.5, 1.5], 500).unwrap();
    let mu = |z: f64, g: f64| 1.0 + z - 0.3 * z * z + 0.5 * g + 0.1 * z * g;
    assert!((oracle.at(1, 0) - mu(2.0, 0.5)).abs() < 1e-12);
    assert!((oracle.at(0, 1) - mu(1.0, 1.5)).abs() < 1e-12);
    assert!(oracle.draws >= 500);
}

#[test]
fn invalid_scenarios() {
    let mut sc = Scenario::confounded(100, 5);
    sc.shock_share = 1.5;
    assert!(generate(&sc).is_err());
    let mut sc = Scenario::confounded(100, 5);
    sc.treatment_coefs = vec![0.1];
    assert!(generate(&sc).is_err());
}
