//! Nonparametric percentile bootstrap for dose-response estimates.
//!
//! Replicates resample `(unit, period)` rows with replacement. Each row keeps
//! its precomputed exposure as a fixed attribute; the network is not rebuilt.
//! Replicate `r` draws from ChaCha8 stream `r` under the run seed, so
//! replicates can be computed in any order or in parallel with identical
//! results.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::PanelDataset;
use crate::error::{Error, Result};
use crate::jps::{self, DrfGrid, EstimatorKind, GridAxis, GridPolicy, JpsConfig};
use crate::math::quantile_sorted;

/// Largest tolerated share of failed replicates.
pub const MAX_FAILURE_SHARE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub estimate: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapBands {
    pub surface: Band,
    pub marginal_z: Band,
    pub marginal_g: Band,
    pub level: f64,
    pub replicates: usize,
    pub effective: usize,
    pub failures: usize,
    pub seed: u64,
}

/// A bootstrap run over fixed grids. Replicates are independent.
#[derive(Debug, Clone)]
pub struct BootstrapPlan<'a> {
    dataset: &'a PanelDataset,
    config: JpsConfig,
    kind: EstimatorKind,
    seed: u64,
    estimate: DrfGrid,
}

impl<'a> BootstrapPlan<'a> {
    /// Runs the point estimate on the full data and freezes its grids for
    /// every replicate.
    pub fn new(
        dataset: &'a PanelDataset,
        config: &JpsConfig,
        kind: EstimatorKind,
        seed: u64,
    ) -> Result<Self> {
        let estimate = run(dataset, config, kind)?;
        let mut config = config.clone();
        config.grid = GridPolicy {
            z: GridAxis::Explicit(estimate.z_grid.clone()),
            g: match kind {
                EstimatorKind::Jps => GridAxis::Explicit(estimate.g_grid.clone()),
                EstimatorKind::Naive => GridAxis::default(),
            },
        };
        Ok(Self {
            dataset,
            config,
            kind,
            seed,
            estimate,
        })
    }

    pub fn estimate(&self) -> &DrfGrid {
        &self.estimate
    }

    /// Row indices drawn for replicate `r`.
    pub fn resample(&self, r: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(r);
        let n = self.dataset.len();
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    }

    /// Re-estimates on replicate `r`, returning surface, z marginal and
    /// g marginal concatenated.
    pub fn replicate(&self, r: u64) -> Result<Vec<f64>> {
        let sample = self.dataset.select_rows(&self.resample(r));
        let drf = run(&sample, &self.config, self.kind)?;
        let mut out = drf.surface;
        out.extend(drf.marginal_z);
        out.extend(drf.marginal_g);
        Ok(out)
    }

    /// Percentile intervals at `level` (e.g. 0.95) from replicate outputs
    /// listed in replicate order.
    pub fn aggregate(&self, outputs: &[Result<Vec<f64>>], level: f64) -> Result<BootstrapBands> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidArgument("confidence level must be in (0, 1)"));
        }
        let total = outputs.len();
        let ok: Vec<&Vec<f64>> = outputs.iter().filter_map(|o| o.as_ref().ok()).collect();
        let failures = total - ok.len();
        if failures as f64 > MAX_FAILURE_SHARE * total as f64 || ok.len() < 2 {
            return Err(Error::BootstrapAborted {
                failed: failures,
                total,
            });
        }
        let est = &self.estimate;
        let (ns, nz) = (est.surface.len(), est.marginal_z.len());
        let width = ns + nz + est.marginal_g.len();
        let alpha = 1.0 - level;
        let mut lower = Vec::with_capacity(width);
        let mut upper = Vec::with_capacity(width);
        let mut column = Vec::with_capacity(ok.len());
        for j in 0..width {
            column.clear();
            column.extend(ok.iter().map(|o| o[j]));
            column.sort_by(f64::total_cmp);
            lower.push(quantile_sorted(&column, alpha / 2.0));
            upper.push(quantile_sorted(&column, 1.0 - alpha / 2.0));
        }
        let band = |range: core::ops::Range<usize>, estimate: &[f64]| Band {
            estimate: estimate.to_vec(),
            lower: lower[range.clone()].to_vec(),
            upper: upper[range].to_vec(),
        };
        Ok(BootstrapBands {
            surface: band(0..ns, &est.surface),
            marginal_z: band(ns..ns + nz, &est.marginal_z),
            marginal_g: band(ns + nz..width, &est.marginal_g),
            level,
            replicates: total,
            effective: ok.len(),
            failures,
            seed: self.seed,
        })
    }
}

fn run(dataset: &PanelDataset, config: &JpsConfig, kind: EstimatorKind) -> Result<DrfGrid> {
    match kind {
        EstimatorKind::Jps => Ok(jps::estimate(dataset, config)?.drf),
        EstimatorKind::Naive => Ok(jps::naive_drf(dataset, &config.covariates_z, &config.grid.z)?.drf),
    }
}

/// Sequential bootstrap with 95% percentile bands.
pub fn bootstrap_drf(
    dataset: &PanelDataset,
    config: &JpsConfig,
    kind: EstimatorKind,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapBands> {
    bootstrap_drf_at_level(dataset, config, kind, replicates, seed, 0.95)
}

pub fn bootstrap_drf_at_level(
    dataset: &PanelDataset,
    config: &JpsConfig,
    kind: EstimatorKind,
    replicates: usize,
    seed: u64,
    level: f64,
) -> Result<BootstrapBands> {
    if replicates < 2 {
        return Err(Error::InvalidArgument("bootstrap needs at least 2 replicates"));
    }
    let plan = BootstrapPlan::new(dataset, config, kind, seed)?;
    let outputs: Vec<_> = (0..replicates as u64).map(|r| plan.replicate(r)).collect();
    plan.aggregate(&outputs, level)
}
