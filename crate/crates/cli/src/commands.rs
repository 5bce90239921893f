//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use jps_core::balance::{balance_check, BalanceReport, BalanceStep};
use jps_core::bootstrap::{Band, BootstrapBands, BootstrapPlan};
use jps_core::jps::{self, argmax, effects, ContrastSpec, EffectReport, JpsEstimate, NaiveEstimate};
use jps_core::linear_model::LinearFit;
use jps_core::math::{mean, variance};
use jps_core::network::{exposure, neighborhood_covariate};
use jps_core::synth::{generate, oracle_drf, Scenario};
use jps_core::{AdjacencyView, DrfGrid, EstimatorKind, PanelDataset};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Needs, RunConfig, ScenarioName};
use crate::error::{CliError, CliResult};
use crate::format::{round10, sig10};
use crate::io::{read_edges, read_panel, write_edges, write_json, write_panel, write_table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Exposure,
    Fit,
    Drf,
    Balance,
    Simulate,
}

impl Command {
    fn needs(self) -> Needs {
        match self {
            Self::Exposure => Needs::Data,
            Self::Fit | Self::Drf | Self::Balance => Needs::Estimation,
            Self::Simulate => Needs::Simulation,
        }
    }
}

/// Loads `config_path`, applies overrides, validates and runs `command`.
pub fn run(command: Command, config_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> CliResult<()> {
    let (mut cfg, text) = RunConfig::load(config_path)?;
    if let Some(dir) = out {
        cfg.output.dir = dir;
    }
    if let Some(seed) = seed {
        cfg.bootstrap.seed = seed;
        cfg.simulate.seed = seed;
    }
    cfg.validate(command.needs(), Some(&text))?;
    let out = cfg.output.dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| CliError::Write {
        path: out.clone(),
        message: e.to_string(),
    })?;
    log::info!("running {command:?}, output in {}", out.display());
    match command {
        Command::Exposure => cmd_exposure(&cfg, &out),
        Command::Fit => cmd_fit(&cfg, &out),
        Command::Drf => cmd_drf(&cfg, &out),
        Command::Balance => cmd_balance(&cfg, &out),
        Command::Simulate => cmd_simulate(&cfg, &out),
    }
}

/// Panel with exposure and neighborhood summaries attached.
pub fn load_inputs(cfg: &RunConfig) -> CliResult<(PanelDataset, AdjacencyView)> {
    let panel_path = cfg.data.panel.as_deref().expect("validated");
    let edge_path = cfg.data.edges.as_deref().expect("validated");
    let mut ds = read_panel(panel_path, &cfg.columns, &cfg.panel_covariates())?;
    let edges = read_edges(edge_path)?;
    let adj = AdjacencyView::for_dataset(&edges, &ds)?;
    let g = exposure(&adj, ds.treatment(), cfg.exposure.mode.into())?;
    ds.set_exposure(g)?;
    for s in &cfg.exposure.summaries {
        let summary = neighborhood_covariate(&adj, &ds, &s.spec())?;
        let isolated = summary.isolated.iter().filter(|&&b| b).count();
        if isolated > 0 {
            log::warn!("{isolated} units have no neighbors for summary `{}`", s.name);
        }
        ds.set_covariate(s.name.clone(), summary.values)?;
    }
    log::info!(
        "loaded {} rows, {} edges over {} periods",
        ds.len(),
        adj.edge_count(),
        adj.periods().len()
    );
    Ok((ds, adj))
}

pub fn cmd_exposure(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let (mut ds, adj) = load_inputs(cfg)?;
    let g = ds.exposure().expect("set by load_inputs").to_vec();
    let name = if ds.covariate_names().iter().any(|c| c == "exposure") {
        "exposure_g"
    } else {
        "exposure"
    };
    ds.set_covariate(name, g.clone())?;
    write_panel(&out.join("exposure.csv"), &ds, &cfg.columns)?;
    let isolated = (0..adj.node_count())
        .filter(|&i| adj.neighbors(i, jps_core::network::Direction::In).is_empty())
        .count();
    println!(
        "exposure: {} rows, mean {}, sd {}, {} units without in-neighbors",
        g.len(),
        sig10(mean(&g)),
        sig10(variance(&g).sqrt()),
        isolated
    );
    Ok(())
}

/// Estimates requested by `estimator.variant`.
#[derive(Debug, Clone)]
pub struct Estimates {
    pub jps: Option<JpsEstimate>,
    pub naive: Option<NaiveEstimate>,
}

pub fn estimate_all(ds: &PanelDataset, cfg: &RunConfig) -> CliResult<Estimates> {
    let config = cfg.jps_config();
    let variant = cfg.estimator.variant;
    let jps = variant.joint().then(|| jps::estimate(ds, &config)).transpose()?;
    let naive = variant
        .naive()
        .then(|| jps::naive_drf(ds, &config.covariates_z, &config.grid.z))
        .transpose()?;
    Ok(Estimates { jps, naive })
}

fn num(v: f64) -> Value {
    json!(round10(v))
}

fn fit_table(fit: &LinearFit) -> Value {
    let terms: Vec<Value> = fit
        .terms
        .iter()
        .zip(&fit.coefficients)
        .zip(&fit.std_errors)
        .map(|((t, c), s)| json!({ "term": t, "coefficient": num(*c), "std_error": num(*s) }))
        .collect();
    json!({ "n": fit.n, "sigma": num(fit.sigma), "rss": num(fit.rss), "terms": terms })
}

pub fn fit_summary(est: &Estimates, n: usize) -> Value {
    let mut v = json!({ "n": n });
    if let Some(e) = &est.jps {
        let bc = &e.gps.individual.boxcox;
        v["jps"] = json!({
            "boxcox": { "k": num(bc.k), "achieved_skewness": num(bc.achieved_skewness) },
            "individual_model": fit_table(&e.gps.individual.fit),
            "neighborhood_model": fit_table(&e.gps.neighborhood),
            "outcome_model": fit_table(&e.outcome.fit),
        });
    }
    if let Some(e) = &est.naive {
        v["naive"] = json!({
            "boxcox": { "k": num(e.individual.boxcox.k), "achieved_skewness": num(e.individual.boxcox.achieved_skewness) },
            "individual_model": fit_table(&e.individual.fit),
            "outcome_model": fit_table(&e.outcome.fit),
        });
    }
    v
}

fn print_fit(title: &str, fit: &LinearFit) {
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let _ = writeln!(w, "{title} (n = {}, sigma = {})", fit.n, sig10(fit.sigma));
    let _ = writeln!(w, "  {:<12} {:>18} {:>18}", "term", "coefficient", "std_error");
    for ((t, c), s) in fit.terms.iter().zip(&fit.coefficients).zip(&fit.std_errors) {
        let _ = writeln!(w, "  {:<12} {:>18} {:>18}", t, sig10(*c), sig10(*s));
    }
}

pub fn cmd_fit(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let (ds, _) = load_inputs(cfg)?;
    let est = estimate_all(&ds, cfg)?;
    write_json(&out.join("fit_summary.json"), &fit_summary(&est, ds.len()))?;
    if let Some(e) = &est.jps {
        print_fit("individual treatment model", &e.gps.individual.fit);
        print_fit("neighborhood treatment model", &e.gps.neighborhood);
        print_fit("outcome model", &e.outcome.fit);
    }
    if let Some(e) = &est.naive {
        print_fit("naive outcome model", &e.outcome.fit);
    }
    Ok(())
}

/// Percentile bands; replicates run on the rayon pool when
/// `bootstrap.parallel` is set. Output does not depend on the pool.
pub fn bootstrap(ds: &PanelDataset, cfg: &RunConfig, kind: EstimatorKind) -> CliResult<BootstrapBands> {
    let b = &cfg.bootstrap;
    let plan = BootstrapPlan::new(ds, &cfg.jps_config(), kind, b.seed)?;
    let outputs: Vec<_> = if b.parallel {
        (0..b.replicates as u64)
            .into_par_iter()
            .map(|r| plan.replicate(r))
            .collect()
    } else {
        (0..b.replicates as u64).map(|r| plan.replicate(r)).collect()
    };
    let bands = plan.aggregate(&outputs, b.level)?;
    if bands.failures > 0 {
        log::warn!("{} of {} bootstrap replicates failed", bands.failures, bands.replicates);
    }
    Ok(bands)
}

fn curve_rows(grid: &[f64], values: &[f64], band: Option<&Band>) -> Vec<Vec<String>> {
    grid.iter()
        .zip(values)
        .enumerate()
        .map(|(i, (x, y))| {
            let mut row = vec![sig10(*x), sig10(*y)];
            if let Some(b) = band {
                row.push(sig10(b.lower[i]));
                row.push(sig10(b.upper[i]));
            }
            row
        })
        .collect()
}

fn write_curve(path: &Path, axis: &'static str, grid: &[f64], values: &[f64], band: Option<&Band>) -> CliResult<()> {
    let header: &[&str] = if band.is_some() {
        &[axis, "mu", "mu_lo", "mu_hi"]
    } else {
        &[axis, "mu"]
    };
    write_table(path, header, &curve_rows(grid, values, band))
}

/// Rows of `drf_surface.csv`, z-major.
pub fn surface_rows(drf: &DrfGrid, band: Option<&Band>) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(drf.surface.len());
    for (iz, z) in drf.z_grid.iter().enumerate() {
        for (ig, g) in drf.g_grid.iter().enumerate() {
            let cell = iz * drf.g_grid.len() + ig;
            let mut row = vec![sig10(*z), sig10(*g), sig10(drf.surface[cell])];
            if let Some(b) = band {
                row.push(sig10(b.lower[cell]));
                row.push(sig10(b.upper[cell]));
            }
            rows.push(row);
        }
    }
    rows
}

fn contrast_spec(cfg: &RunConfig, joint: bool) -> ContrastSpec {
    ContrastSpec {
        z_pairs: cfg.effects.z_pairs.iter().map(|p| (p[0], p[1])).collect(),
        g_pairs: if joint {
            cfg.effects.g_pairs.iter().map(|p| (p[0], p[1])).collect()
        } else {
            Vec::new()
        },
    }
}

fn effects_json(drf: &DrfGrid, report: &EffectReport) -> Value {
    let contrasts = |cs: &[jps::Contrast]| -> Vec<Value> {
        cs.iter()
            .map(|c| json!({ "from": num(c.from), "to": num(c.to), "delta": num(c.delta) }))
            .collect()
    };
    let slopes = |grid: &[f64], d: &[f64], axis: &str| -> Vec<Value> {
        grid.iter()
            .zip(d)
            .map(|(x, s)| json!({ axis: num(*x), "slope": num(*s) }))
            .collect()
    };
    let at = |grid: &[f64], curve: &[f64]| argmax(curve).map(|i| round10(grid[i]));
    let mut v = json!({
        "direct": contrasts(&report.direct),
        "direct_derivative": slopes(&drf.z_grid, &report.direct_derivative, "z"),
        "argmax_z": at(&drf.z_grid, &drf.marginal_z),
        "z_grid_outside_support": drf.outside_support.0,
    });
    if drf.kind == EstimatorKind::Jps {
        v["spillover"] = json!(contrasts(&report.spillover));
        v["spillover_derivative"] = json!(slopes(&drf.g_grid, &report.spillover_derivative, "g"));
        v["argmax_g"] = json!(at(&drf.g_grid, &drf.marginal_g));
        v["g_grid_outside_support"] = json!(drf.outside_support.1);
        v["flagged_cells"] = json!(drf.flagged_cells);
    }
    v
}

pub fn cmd_drf(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let (ds, _) = load_inputs(cfg)?;
    let est = estimate_all(&ds, cfg)?;
    let boot = cfg.bootstrap.replicates >= 2;
    let mut effects_out = json!({});
    if let Some(e) = &est.jps {
        let bands = boot.then(|| bootstrap(&ds, cfg, EstimatorKind::Jps)).transpose()?;
        let drf = &e.drf;
        let header: &[&str] = if boot {
            &["z", "g", "mu", "mu_lo", "mu_hi"]
        } else {
            &["z", "g", "mu"]
        };
        write_table(
            &out.join("drf_surface.csv"),
            header,
            &surface_rows(drf, bands.as_ref().map(|b| &b.surface)),
        )?;
        write_curve(
            &out.join("drf_marginal_z.csv"),
            "z",
            &drf.z_grid,
            &drf.marginal_z,
            bands.as_ref().map(|b| &b.marginal_z),
        )?;
        write_curve(
            &out.join("drf_marginal_g.csv"),
            "g",
            &drf.g_grid,
            &drf.marginal_g,
            bands.as_ref().map(|b| &b.marginal_g),
        )?;
        let report = effects(drf, &contrast_spec(cfg, true))?;
        effects_out["jps"] = effects_json(drf, &report);
        if let Some(b) = &bands {
            effects_out["jps"]["bootstrap"] = bootstrap_json(b);
        }
        println!(
            "jps: {}x{} surface, argmax z = {}",
            drf.z_grid.len(),
            drf.g_grid.len(),
            argmax(&drf.marginal_z).map_or("-".into(), |i| sig10(drf.z_grid[i]))
        );
    }
    if let Some(e) = &est.naive {
        let bands = boot.then(|| bootstrap(&ds, cfg, EstimatorKind::Naive)).transpose()?;
        let name = if est.jps.is_some() {
            "drf_marginal_z_naive.csv"
        } else {
            "drf_marginal_z.csv"
        };
        let drf = &e.drf;
        write_curve(
            &out.join(name),
            "z",
            &drf.z_grid,
            &drf.marginal_z,
            bands.as_ref().map(|b| &b.marginal_z),
        )?;
        let report = effects(drf, &contrast_spec(cfg, false))?;
        effects_out["naive"] = effects_json(drf, &report);
        if let Some(b) = &bands {
            effects_out["naive"]["bootstrap"] = bootstrap_json(b);
        }
        println!(
            "naive: argmax z = {}",
            argmax(&drf.marginal_z).map_or("-".into(), |i| sig10(drf.z_grid[i]))
        );
    }
    write_json(&out.join("effects.json"), &effects_out)?;
    write_json(&out.join("fit_summary.json"), &fit_summary(&est, ds.len()))?;
    Ok(())
}

fn bootstrap_json(b: &BootstrapBands) -> Value {
    json!({
        "replicates": b.replicates,
        "effective": b.effective,
        "failures": b.failures,
        "level": b.level,
        "seed": b.seed,
    })
}

fn step_json(step: &BalanceStep, alpha: f64) -> Value {
    let test = step.test.map(|t| {
        json!({
            "statistic": num(t.statistic),
            "df": t.df,
            "p_value": num(t.p_value),
            "perfect_fit": t.perfect_fit,
        })
    });
    json!({
        "test": test,
        "reject": step.rejects(alpha),
        "rss_restricted": num(step.rss_restricted),
        "rss_full": num(step.rss_full),
        "dropped_columns": step.dropped_columns,
    })
}

pub fn balance_json(report: &BalanceReport, alpha: f64) -> Value {
    let shrink: Vec<Value> = report
        .shrinkage
        .iter()
        .map(|s| {
            json!({
                "covariate": s.covariate,
                "z_without": num(s.z_without),
                "z_with": num(s.z_with),
                "z_ratio": num(s.z_ratio()),
                "g_without": num(s.g_without),
                "g_with": num(s.g_with),
                "g_ratio": num(s.g_ratio()),
            })
        })
        .collect();
    json!({
        "alpha": alpha,
        "individual": step_json(&report.individual, alpha),
        "neighborhood": step_json(&report.neighborhood, alpha),
        "shrinkage": shrink,
    })
}

pub fn cmd_balance(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    if cfg.columns.covariates_g.is_empty() {
        return Err(CliError::config(
            "columns.covariates_g",
            None,
            "the balance check needs the exposure model covariates",
        ));
    }
    let (ds, _) = load_inputs(cfg)?;
    let config = cfg.jps_config();
    let gps = jps::fit_treatment_models(&ds, &config)?;
    let scores = jps::predict_scores(&gps, &ds)?;
    let report = balance_check(&ds, &gps, &scores)?;
    let alpha = cfg.balance.alpha;
    write_json(&out.join("balance.json"), &balance_json(&report, alpha))?;

    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let _ = writeln!(w, "{:<14} {:>16} {:>4} {:>16}  reject@{alpha}", "step", "LR", "df", "p-value");
    for (name, step) in [("individual", &report.individual), ("neighborhood", &report.neighborhood)] {
        match step.test {
            Some(t) => {
                let _ = writeln!(
                    w,
                    "{:<14} {:>16} {:>4} {:>16}  {}",
                    name,
                    sig10(t.statistic),
                    t.df,
                    sig10(t.p_value),
                    if step.rejects(alpha) { "yes" } else { "no" }
                );
            }
            None => {
                let _ = writeln!(w, "{name:<14} {:>16}", "(no covariates)");
            }
        }
    }
    let _ = writeln!(w);
    let _ = writeln!(w, "{:<12} {:>14} {:>14} {:>14} {:>14}", "covariate", "z without", "z with", "g without", "g with");
    for s in &report.shrinkage {
        let _ = writeln!(
            w,
            "{:<12} {:>14} {:>14} {:>14} {:>14}",
            s.covariate,
            sig10(s.z_without),
            sig10(s.z_with),
            sig10(s.g_without),
            sig10(s.g_with)
        );
    }
    Ok(())
}

/// Scenario named by `simulate.*`, with the configured exposure mode.
pub fn scenario(cfg: &RunConfig) -> Scenario {
    let s = &cfg.simulate;
    let mut sc = match s.scenario {
        ScenarioName::Confounded => Scenario::confounded(s.units, s.seed),
        ScenarioName::Quadratic => Scenario::quadratic(s.units, s.seed),
    };
    sc.exposure_mode = cfg.exposure.mode.into();
    sc
}

/// Config that points at the files `simulate` writes.
pub fn simulated_config(cfg: &RunConfig, sc: &Scenario) -> RunConfig {
    let mut run = cfg.clone();
    run.data.panel = Some("panel.csv".into());
    run.data.edges = Some("edges.csv".into());
    if run.columns.covariates_z.is_empty() {
        run.columns.covariates_z = sc.covariate_names();
    }
    if run.columns.covariates_g.is_empty() {
        run.columns.covariates_g = sc.covariate_names();
    }
    run.exposure.summaries.clear();
    run.output.dir = "drf".into();
    run
}

fn mean_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len().max(1) as f64
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let sc = scenario(cfg);
    let data = generate(&sc)?;
    let run = simulated_config(cfg, &sc);
    write_panel(&out.join("panel.csv"), &data.dataset, &run.columns)?;
    write_edges(&out.join("edges.csv"), &data.edges)?;
    std::fs::write(out.join("config.toml"), run.to_flat_string()).map_err(|e| CliError::Write {
        path: out.join("config.toml"),
        message: e.to_string(),
    })?;

    let config = run.jps_config();
    let joint = jps::estimate(&data.dataset, &config)?;
    let naive = jps::naive_drf(&data.dataset, &config.covariates_z, &config.grid.z)?;
    let drf = &joint.drf;
    let oracle = oracle_drf(&sc, &drf.z_grid, &drf.g_grid, cfg.simulate.oracle_draws)?;

    write_table(
        &out.join("oracle_surface.csv"),
        &["z", "g", "mu"],
        &surface_rows(
            &DrfGrid {
                surface: oracle.surface.clone(),
                ..drf.clone()
            },
            None,
        ),
    )?;
    for (name, axis, grid, mu, se) in [
        ("oracle_marginal_z.csv", "z", &oracle.z_grid, &oracle.marginal_z, &oracle.marginal_z_se),
        ("oracle_marginal_g.csv", "g", &oracle.g_grid, &oracle.marginal_g, &oracle.marginal_g_se),
    ] {
        let rows: Vec<Vec<String>> = grid
            .iter()
            .zip(mu.iter().zip(se))
            .map(|(x, (m, s))| vec![sig10(*x), sig10(*m), sig10(*s)])
            .collect();
        write_table(&out.join(name), &[axis, "mu", "mc_se"], &rows)?;
    }

    let at = |curve: &[f64]| argmax(curve).map(|i| round10(drf.z_grid[i]));
    let sd_y = variance(data.dataset.outcome()).sqrt();
    let report = json!({
        "scenario": format!("{:?}", cfg.simulate.scenario).to_lowercase(),
        "n": data.dataset.len(),
        "edges": data.edges.len(),
        "seed": sc.seed,
        "sd_outcome": num(sd_y),
        "oracle": {
            "argmax_z": at(&oracle.marginal_z),
            "draws": oracle.draws,
            "marginal_z_se_max": num(oracle.marginal_z_se.iter().copied().fold(0.0, f64::max)),
        },
        "jps": {
            "surface_max_abs_error": num(max_abs(&drf.surface, &oracle.surface)),
            "surface_mean_abs_error": num(mean_abs(&drf.surface, &oracle.surface)),
            "marginal_z_mean_abs_error": num(mean_abs(&drf.marginal_z, &oracle.marginal_z)),
            "marginal_g_mean_abs_error": num(mean_abs(&drf.marginal_g, &oracle.marginal_g)),
            "argmax_z": at(&drf.marginal_z),
        },
        "naive": {
            "marginal_z_mean_abs_error": num(mean_abs(&naive.drf.marginal_z, &oracle.marginal_z)),
            "argmax_z": at(&naive.drf.marginal_z),
        },
    });
    write_json(&out.join("comparison.json"), &report)?;
    println!(
        "simulated {} rows, {} edges; surface max |error| jps {}; marginal z mean |error| jps {} naive {}",
        data.dataset.len(),
        data.edges.len(),
        sig10(max_abs(&drf.surface, &oracle.surface)),
        sig10(mean_abs(&drf.marginal_z, &oracle.marginal_z)),
        sig10(mean_abs(&naive.drf.marginal_z, &oracle.marginal_z)),
    );
    Ok(())
}
