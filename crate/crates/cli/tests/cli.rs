use std::path::Path;
use std::process::Command;

use jps_cli::commands::{bootstrap, load_inputs, scenario, simulated_config, surface_rows};
use jps_cli::RunConfig;
use jps_core::jps;
use jps_core::synth::generate;
use jps_core::EstimatorKind;
use serde_json::Value;

fn jps(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_jps"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn error_json(out: &std::process::Output) -> Value {
    serde_json::from_slice(out.stderr.trim_ascii()).expect("stderr is json")
}

const SIM: &str = "simulate.units = 300\nsimulate.oracle_draws = 2000\nsimulate.seed = 4\ngrid.z.points = 4\ngrid.g.points = 3\n";

fn simulate(dir: &Path) {
    write(&dir.join("sim.toml"), SIM);
    let out = jps(&[
        "simulate",
        "--config",
        dir.join("sim.toml").to_str().unwrap(),
        "--out",
        dir.join("sim").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_then_drf_reproduces_in_process_surface() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let sim = dir.path().join("sim");
    let out = jps(&["drf", "--config", sim.join("config.toml").to_str().unwrap(), "--out", sim.join("drf").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let cfg = RunConfig::parse(SIM).unwrap();
    let sc = scenario(&cfg);
    let data = generate(&sc).unwrap();
    let run = simulated_config(&cfg, &sc);
    let in_process = jps::estimate(&data.dataset, &run.jps_config()).unwrap();

    let (loaded, _) = RunConfig::load(&sim.join("config.toml")).unwrap();
    let (ds, _) = load_inputs(&loaded).unwrap();
    assert_eq!(ds.outcome(), data.dataset.outcome());
    assert_eq!(ds.exposure(), data.dataset.exposure());
    let reingested = jps::estimate(&ds, &loaded.jps_config()).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&reingested.drf.surface), bits(&in_process.drf.surface));

    let text = std::fs::read_to_string(sim.join("drf/drf_surface.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("z,g,mu"));
    let expected: Vec<String> = surface_rows(&in_process.drf, None).iter().map(|r| r.join(",")).collect();
    assert_eq!(lines.map(str::to_string).collect::<Vec<_>>(), expected);
    for f in ["drf_marginal_z.csv", "drf_marginal_g.csv", "effects.json", "fit_summary.json"] {
        assert!(sim.join("drf").join(f).exists(), "{f}");
    }
}

#[test]
fn fit_summary_has_sixteen_outcome_terms() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let sim = dir.path().join("sim");
    let out = jps(&["fit", "--config", sim.join("config.toml").to_str().unwrap(), "--out", sim.join("fit").to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(sim.join("fit/fit_summary.json")).unwrap()).unwrap();
    let terms: Vec<&str> = v["jps"]["outcome_model"]["terms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["term"].as_str().unwrap())
        .collect();
    assert_eq!(
        terms,
        [
            "z", "z^2", "z^3", "phi", "phi^2", "phi^3", "z*phi", "g", "g^2", "g^3", "lambda", "lambda^2",
            "lambda^3", "g*lambda", "z*g", "const"
        ]
    );
    assert_eq!(v["jps"]["individual_model"]["terms"].as_array().unwrap().len(), 6);
}

#[test]
fn balance_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let sim = dir.path().join("sim");
    let out = jps(&["balance", "--config", sim.join("config.toml").to_str().unwrap(), "--out", sim.join("bal").to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("individual") && stdout.contains("neighborhood"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(sim.join("bal/balance.json")).unwrap()).unwrap();
    assert_eq!(v["individual"]["test"]["df"], 5);
    assert_eq!(v["shrinkage"].as_array().unwrap().len(), 5);
}

#[test]
fn exposure_output_is_reingestible() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let sim = dir.path().join("sim");
    let out = jps(&["exposure", "--config", sim.join("config.toml").to_str().unwrap(), "--out", sim.join("exp").to_str().unwrap()]);
    assert!(out.status.success());
    let mut cfg = RunConfig::load(&sim.join("config.toml")).unwrap().0;
    cfg.data.panel = Some(sim.join("exp/exposure.csv"));
    cfg.columns.covariates_z = vec!["x1".into(), "exposure".into()];
    let (ds, _) = load_inputs(&cfg).unwrap();
    assert_eq!(ds.covariate("exposure").unwrap(), ds.exposure().unwrap());
}

#[test]
fn parallel_bootstrap_matches_sequential() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let (mut cfg, _) = RunConfig::load(&dir.path().join("sim/config.toml")).unwrap();
    let (ds, _) = load_inputs(&cfg).unwrap();
    cfg.bootstrap.replicates = 12;
    cfg.bootstrap.parallel = true;
    let par = bootstrap(&ds, &cfg, EstimatorKind::Jps).unwrap();
    cfg.bootstrap.parallel = false;
    let seq = bootstrap(&ds, &cfg, EstimatorKind::Jps).unwrap();
    assert_eq!(par, seq);
}

#[test]
fn malformed_row_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(&d.join("panel.csv"), "unit,period,outcome,treatment,x\na,1,1.0,2.0,0.5\nb,1,2.0,oops,0.1\n");
    write(&d.join("edges.csv"), "source,target,period,weight\na,b,1,1.0\n");
    write(
        &d.join("run.toml"),
        "data.panel = \"panel.csv\"\ndata.edges = \"edges.csv\"\ncolumns.covariates_z = [\"x\"]\ncolumns.covariates_g = [\"x\"]\n",
    );
    let out = jps(&["drf", "--config", d.join("run.toml").to_str().unwrap(), "--out", d.join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    let e = error_json(&out);
    assert_eq!(e["error"], "malformed_row");
    assert_eq!(e["row"], 3);
    assert!(e["message"].as_str().unwrap().contains("oops"));

    write(&d.join("panel.csv"), "unit,period,outcome,treatment,x\na,1,1.0,2.0\n");
    let out = jps(&["exposure", "--config", d.join("run.toml").to_str().unwrap(), "--out", d.join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(error_json(&out)["row"], 2);
}

#[test]
fn distinct_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("run.toml");
    let cfg_s = cfg.to_str().unwrap();
    let out_s = d.join("o");
    let out_s = out_s.to_str().unwrap();
    let base = "data.panel = \"panel.csv\"\ndata.edges = \"edges.csv\"\ncolumns.covariates_z = [\"x\"]\ncolumns.covariates_g = [\"x\"]\n";

    write(&cfg, base);
    let out = jps(&["drf", "--config", cfg_s, "--out", out_s]);
    assert_eq!(out.status.code(), Some(3), "missing panel");

    write(&d.join("panel.csv"), "unit,period,outcome,treatment,w\na,1,1.0,2.0,0.5\nb,1,2.0,1.0,0.1\n");
    write(&d.join("edges.csv"), "source,target,period,weight\na,b,1,1.0\n");
    let out = jps(&["drf", "--config", cfg_s, "--out", out_s]);
    assert_eq!(out.status.code(), Some(6), "unbound column");
    assert_eq!(error_json(&out)["column"], "x");

    write(&cfg, &format!("{base}bootstrap.replicates = 1\n"));
    let out = jps(&["drf", "--config", cfg_s, "--out", out_s]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_json(&out);
    assert_eq!(e["field"], "bootstrap.replicates");
    assert_eq!(e["line"], 5);

    write(&cfg, "data.panel = [\n");
    assert_eq!(jps(&["drf", "--config", cfg_s]).status.code(), Some(2));

    // A ring with equal treatments: every unit has the same exposure.
    let mut panel = String::from("unit,period,outcome,treatment,x\n");
    let mut edges = String::from("source,target,period,weight\n");
    for i in 0..12 {
        panel.push_str(&format!("u{i},1,{},2.0,{}\n", i % 3, (i * 3 % 7) as f64));
        edges.push_str(&format!("u{i},u{},1,1.5\n", (i + 1) % 12));
    }
    write(&d.join("panel.csv"), &panel);
    write(&d.join("edges.csv"), &edges);
    write(&cfg, base);
    let out = jps(&["drf", "--config", cfg_s, "--out", out_s]);
    assert_eq!(out.status.code(), Some(7));
    assert_eq!(error_json(&out)["error"], "degenerate_exposure");
}
