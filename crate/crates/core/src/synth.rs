//! Synthetic panels with known dose-response truth.
//!
//! Each period draws Gaussian covariates, a community-structured directed
//! network with log-normal weights, log-linear treatments
//! `Z = exp(α + βᵀx + ε)`, exposures, and outcomes from a polynomial rule in
//! `(z, g)` plus a linear covariate term. Covariates shared between the
//! treatment rule, the edge-weight rule and the outcome rule confound both
//! treatments. The treatment noise `ε` has a community component, so a
//! unit's exposure is correlated with its own treatment through its
//! neighbors; an estimator that leaves out exposure picks up part of the
//! spillover as a direct effect.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{NodeKey, PanelDataset};
use crate::error::{Error, Result};
use crate::math::{compensated_sum, exp, ln, sqrt, standard_normal};
use crate::network::{exposure, AdjacencyView, EdgeRecord, ExposureMode};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    /// Probability of a directed edge between two units of the same community.
    pub edge_prob: f64,
    pub communities: usize,
    /// Between-community edge probability as a multiple of `edge_prob`.
    pub between_ratio: f64,
    pub weight_log_mean: f64,
    pub weight_log_sd: f64,
    /// Receiver covariate loadings on the log weight (one per covariate, or empty).
    pub weight_loadings: Vec<f64>,
}

/// `y = c + b1 z + b2 z² + b3 z³ + c1 g + c2 g² + c3 g³ + d zg + γᵀx`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutcomeRule {
    pub intercept: f64,
    pub z: [f64; 3],
    pub g: [f64; 3],
    pub zg: f64,
    pub covariates: Vec<f64>,
}

impl OutcomeRule {
    /// The rule without its covariate term.
    pub fn structural(&self, z: f64, g: f64) -> f64 {
        self.intercept
            + self.z[0] * z
            + self.z[1] * z * z
            + self.z[2] * z * z * z
            + self.g[0] * g
            + self.g[1] * g * g
            + self.g[2] * g * g * g
            + self.zg * z * g
    }

    pub fn eval(&self, z: f64, g: f64, x: &[f64]) -> f64 {
        self.structural(z, g) + self.covariates.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub units_per_period: usize,
    pub periods: usize,
    pub network: NetworkModel,
    pub covariate_count: usize,
    pub covariate_mean: f64,
    pub covariate_sd: f64,
    /// Treatment rule on the log scale: `ln Z = α + βᵀx + ε`.
    pub treatment_intercept: f64,
    pub treatment_coefs: Vec<f64>,
    pub treatment_sd: f64,
    /// Share of the treatment noise variance that is common to a community.
    pub shock_share: f64,
    pub exposure_mode: ExposureMode,
    pub outcome: OutcomeRule,
    pub outcome_sd: f64,
    pub seed: u64,
}

impl Scenario {
    /// Confounded scenario with truth `μ(z, g) = 1 + z - 0.3 z² + 0.5 g + 0.1 zg`
    /// over `units` rows split across two periods.
    pub fn confounded(units: usize, seed: u64) -> Self {
        let per_period = units / 2;
        let communities = (per_period / 100).max(1);
        let edge_prob = 0.1f64.min(1.0);
        // Expected in-degree ~ edge_prob * community size; scale weights so
        // exposures are of the same order as treatments.
        let community_size = per_period as f64 / communities as f64;
        let expected_degree = edge_prob * (community_size - 1.0);
        let weight_log_sd = 0.5;
        let weight_log_mean =
            ln(per_period as f64 / expected_degree.max(1.0)) - 0.5 * weight_log_sd * weight_log_sd;
        Self {
            units_per_period: per_period,
            periods: 2,
            network: NetworkModel {
                edge_prob,
                communities,
                between_ratio: 0.01,
                weight_log_mean,
                weight_log_sd,
                weight_loadings: alloc::vec![0.0, 0.2, 0.0, 0.0, 0.2],
            },
            covariate_count: 5,
            covariate_mean: 0.0,
            covariate_sd: 1.0,
            treatment_intercept: 0.4,
            treatment_coefs: alloc::vec![0.15, 0.15, 0.1, 0.1, 0.0],
            treatment_sd: 0.35,
            shock_share: 0.6,
            exposure_mode: ExposureMode::Plain,
            outcome: OutcomeRule {
                intercept: 1.0,
                z: [1.0, -0.3, 0.0],
                g: [0.5, 0.0, 0.0],
                zg: 0.1,
                covariates: alloc::vec![0.03, 0.02, 0.0, 0.02, 0.03],
            },
            outcome_sd: 0.05,
            seed,
        }
    }

    /// Same treatment and network design with outcome `1 + z - 0.3 z²` plus
    /// noise: no spillover and no direct covariate effect on `Y`.
    pub fn quadratic(units: usize, seed: u64) -> Self {
        let mut s = Self::confounded(units, seed);
        s.outcome.g = [0.0; 3];
        s.outcome.zg = 0.0;
        s.outcome.covariates = Vec::new();
        s
    }

    pub fn rows(&self) -> usize {
        self.units_per_period * self.periods
    }

    pub fn covariate_names(&self) -> Vec<String> {
        (1..=self.covariate_count).map(|k| format!("x{k}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let net = &self.network;
        let bad = |msg| Err(Error::InvalidArgument(msg));
        if self.units_per_period < 2 || self.periods == 0 {
            return bad("scenario needs at least 2 units and 1 period");
        }
        if !(net.edge_prob > 0.0 && net.edge_prob <= 1.0) {
            return bad("edge probability must lie in (0, 1]");
        }
        if !(net.between_ratio >= 0.0 && net.edge_prob * net.between_ratio <= 1.0) {
            return bad("between-community probability must lie in [0, 1]");
        }
        if net.communities == 0 || net.communities > self.units_per_period {
            return bad("community count must lie in 1..=units_per_period");
        }
        if !(net.weight_log_sd >= 0.0 && self.covariate_sd >= 0.0)
            || !(self.treatment_sd >= 0.0 && self.outcome_sd >= 0.0)
        {
            return bad("standard deviations must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.shock_share) {
            return bad("shock share must lie in [0, 1]");
        }
        let k = self.covariate_count;
        if self.treatment_coefs.len() != k
            || !(net.weight_loadings.is_empty() || net.weight_loadings.len() == k)
            || !(self.outcome.covariates.is_empty() || self.outcome.covariates.len() == k)
        {
            return bad("coefficient vectors must match the covariate count");
        }
        Ok(())
    }

    fn community(&self, i: usize) -> usize {
        i * self.network.communities / self.units_per_period
    }

    fn period_label(t: usize) -> String {
        format!("{}", 2000 + t)
    }

    fn unit_label(i: usize) -> String {
        format!("u{i:05}")
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: PanelDataset,
    pub edges: Vec<EdgeRecord>,
    pub adjacency: AdjacencyView,
}

/// Draws a synthetic panel. Identical scenarios give identical output.
pub fn generate(scenario: &Scenario) -> Result<SyntheticData> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let n = scenario.units_per_period;
    let k = scenario.covariate_count;
    let net = &scenario.network;

    let mut keys = Vec::with_capacity(scenario.rows());
    let mut covariates: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(scenario.rows()); k];
    let mut treatment = Vec::with_capacity(scenario.rows());
    let mut edges = Vec::new();

    for t in 0..scenario.periods {
        let period = Scenario::period_label(t);
        let base = keys.len();
        for i in 0..n {
            keys.push(NodeKey::new(Scenario::unit_label(i), period.clone()));
            for col in covariates.iter_mut() {
                col.push(scenario.covariate_mean + scenario.covariate_sd * standard_normal(&mut rng));
            }
        }
        let shocks: Vec<f64> = (0..net.communities).map(|_| standard_normal(&mut rng)).collect();
        let common = sqrt(scenario.shock_share);
        let own = sqrt(1.0 - scenario.shock_share);
        for i in 0..n {
            let row = base + i;
            let index = scenario.treatment_intercept
                + scenario
                    .treatment_coefs
                    .iter()
                    .enumerate()
                    .map(|(c, b)| b * covariates[c][row])
                    .sum::<f64>();
            let noise = common * shocks[scenario.community(i)] + own * standard_normal(&mut rng);
            treatment.push(exp(index + scenario.treatment_sd * noise));
        }

        let mut members: Vec<Vec<usize>> = alloc::vec![Vec::new(); net.communities];
        for i in 0..n {
            members[scenario.community(i)].push(i);
        }
        for source in 0..n {
            let home = scenario.community(source);
            for (c, members) in members.iter().enumerate() {
                let p = if c == home {
                    net.edge_prob
                } else {
                    net.edge_prob * net.between_ratio
                };
                for target in bernoulli_subset(&mut rng, members.len(), p) {
                    let target = members[target];
                    if target == source {
                        continue;
                    }
                    let receiver = base + target;
                    let tilt = net
                        .weight_loadings
                        .iter()
                        .enumerate()
                        .map(|(c, l)| l * covariates[c][receiver])
                        .sum::<f64>();
                    let w = exp(net.weight_log_mean + net.weight_log_sd * standard_normal(&mut rng) + tilt);
                    edges.push(EdgeRecord {
                        source: Scenario::unit_label(source),
                        target: Scenario::unit_label(target),
                        period: period.clone(),
                        weight: w,
                    });
                }
            }
        }
    }

    let adjacency = AdjacencyView::build(&edges, &keys)?;
    let g = exposure(&adjacency, &treatment, scenario.exposure_mode)?;
    let outcome: Vec<f64> = (0..keys.len())
        .map(|row| {
            let x: Vec<f64> = covariates.iter().map(|c| c[row]).collect();
            scenario.outcome.eval(treatment[row], g[row], &x)
                + scenario.outcome_sd * standard_normal(&mut rng)
        })
        .collect();

    let mut dataset = PanelDataset::new(keys, outcome, treatment)?;
    for (name, col) in scenario.covariate_names().into_iter().zip(covariates) {
        dataset.set_covariate(name, col)?;
    }
    dataset.set_exposure(g)?;
    Ok(SyntheticData {
        dataset,
        edges,
        adjacency,
    })
}

/// Indices of a Bernoulli(p) subset of `0..len`, by geometric skipping.
fn bernoulli_subset<R: Rng>(rng: &mut R, len: usize, p: f64) -> Vec<usize> {
    if p <= 0.0 || len == 0 {
        return Vec::new();
    }
    if p >= 1.0 {
        return (0..len).collect();
    }
    let log_q = ln(1.0 - p);
    let mut out = Vec::new();
    let mut pos: f64 = -1.0;
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>();
        pos += 1.0 + libm::floor(ln(u) / log_q);
        if pos >= len as f64 {
            return out;
        }
        out.push(pos as usize);
    }
}

/// True dose-response surface and marginals on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleDrf {
    pub z_grid: Vec<f64>,
    pub g_grid: Vec<f64>,
    /// Row-major over `z_grid x g_grid`; exact.
    pub surface: Vec<f64>,
    /// Monte Carlo average of `μ(z, G)` over the scenario's exposure distribution.
    pub marginal_z: Vec<f64>,
    pub marginal_g: Vec<f64>,
    /// Monte Carlo standard errors of the marginals.
    pub marginal_z_se: Vec<f64>,
    pub marginal_g_se: Vec<f64>,
    pub draws: usize,
}

impl OracleDrf {
    pub fn at(&self, iz: usize, ig: usize) -> f64 {
        self.surface[iz * self.g_grid.len() + ig]
    }
}

/// Oracle for a scenario. The surface is exact since the rule is linear in
/// the covariates; the marginals average over at least `draws` fresh
/// `(Z, G)` pairs drawn from independent replications of the scenario.
pub fn oracle_drf(scenario: &Scenario, z_grid: &[f64], g_grid: &[f64], draws: usize) -> Result<OracleDrf> {
    scenario.validate()?;
    let mean_x = scenario.covariate_mean;
    let offset: f64 = scenario.outcome.covariates.iter().map(|c| c * mean_x).sum();
    let mu = |z: f64, g: f64| scenario.outcome.structural(z, g) + offset;

    let mut surface = Vec::with_capacity(z_grid.len() * g_grid.len());
    for &z in z_grid {
        for &g in g_grid {
            surface.push(mu(z, g));
        }
    }

    let mut zs = Vec::with_capacity(draws);
    let mut gs = Vec::with_capacity(draws);
    let mut replication = 0u64;
    while zs.len() < draws.max(1) {
        replication += 1;
        let mut fresh = scenario.clone();
        fresh.seed = scenario
            .seed
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(replication));
        let data = generate(&fresh)?;
        zs.extend_from_slice(data.dataset.treatment());
        gs.extend_from_slice(data.dataset.exposure().unwrap_or_default());
    }

    let average = |values: &mut dyn Iterator<Item = f64>| -> (f64, f64) {
        let v: Vec<f64> = values.collect();
        let m = compensated_sum(v.iter().copied()) / v.len() as f64;
        let var = compensated_sum(v.iter().map(|x| (x - m) * (x - m))) / (v.len() as f64 - 1.0).max(1.0);
        (m, sqrt(var / v.len() as f64))
    };
    let (marginal_z, marginal_z_se) = z_grid
        .iter()
        .map(|&z| average(&mut gs.iter().map(|&g| mu(z, g))))
        .unzip();
    let (marginal_g, marginal_g_se) = g_grid
        .iter()
        .map(|&g| average(&mut zs.iter().map(|&z| mu(z, g))))
        .unzip();

    Ok(OracleDrf {
        z_grid: z_grid.to_vec(),
        g_grid: g_grid.to_vec(),
        surface,
        marginal_z,
        marginal_g,
        marginal_z_se,
        marginal_g_se,
        draws: zs.len(),
    })
}
