//! Joint propensity score estimation of the bivariate dose-response surface.
//!
//! The estimator runs in five steps:
//!
//! 1. Fit a Gaussian model for the Box-Cox transformed individual treatment
//!    given `X^z`, and a Gaussian model for the neighborhood exposure given
//!    `X^g` and the raw individual treatment.
//! 2. Evaluate each unit's individual score `Φ_i` and neighborhood score
//!    `Λ_i` at its observed treatments.
//! 3. Regress the outcome on the cubic outcome design of `(Z, G, Φ, Λ)`.
//! 4. For every grid pair `(z, g)` re-evaluate both scores for every unit at
//!    that counterfactual level and impute `Y_i(z, g)`.
//! 5. Average the imputations over units.
//!
//! The individual score is the density of the transformed treatment `Z*`;
//! no Jacobian back to the raw scale is applied. The marginal curves average
//! imputations over the empirical distribution of the other treatment.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dataset::PanelDataset;
use crate::error::{Error, Result};
use crate::linear_model::{
    build_outcome_row, fit_ols, normal_density, DesignSpec, LinearFit, OutcomeVariant,
};
use crate::math::{abs, compensated_sum, linspace, quantile};
use crate::transforms::{boxcox_zero_skew, BoxCoxFit};

/// Design column name used for the individual treatment in the exposure model.
pub const TREATMENT_TERM: &str = "z";

#[derive(Debug, Clone, PartialEq)]
pub enum GridAxis {
    /// `points` equispaced values between two empirical quantiles.
    Quantiles { points: usize, lower: f64, upper: f64 },
    Explicit(Vec<f64>),
}

impl Default for GridAxis {
    fn default() -> Self {
        Self::Quantiles {
            points: 20,
            lower: 0.05,
            upper: 0.95,
        }
    }
}

impl GridAxis {
    pub fn resolve(&self, observed: &[f64]) -> Result<Vec<f64>> {
        let grid = match self {
            Self::Quantiles {
                points,
                lower,
                upper,
            } => {
                if !(0.0..=1.0).contains(lower) || !(0.0..=1.0).contains(upper) || lower >= upper {
                    return Err(Error::InvalidArgument("grid quantiles must satisfy 0 <= lower < upper <= 1"));
                }
                if observed.is_empty() {
                    return Err(Error::EmptyGrid);
                }
                linspace(quantile(observed, *lower), quantile(observed, *upper), *points)
            }
            Self::Explicit(values) => values.clone(),
        };
        validate_grid(&grid)?;
        Ok(grid)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("grid"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::UnsortedGrid);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridPolicy {
    pub z: GridAxis,
    pub g: GridAxis,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct JpsConfig {
    /// Covariates of the individual treatment model.
    pub covariates_z: Vec<String>,
    /// Covariates of the neighborhood exposure model.
    pub covariates_g: Vec<String>,
    pub grid: GridPolicy,
}

/// Gaussian model of the Box-Cox transformed individual treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualModel {
    pub boxcox: BoxCoxFit,
    pub fit: LinearFit,
    pub covariates: Vec<String>,
}

impl IndividualModel {
    /// Linear predictor of `Z*` for every unit.
    pub fn linear_predictor(&self, dataset: &PanelDataset) -> Result<Vec<f64>> {
        linear_predictor(&self.fit, &self.covariates, None, dataset)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpsFit {
    pub individual: IndividualModel,
    /// Exposure model; its design is `X^g`, then the raw treatment, then the intercept.
    pub neighborhood: LinearFit,
    pub covariates_g: Vec<String>,
}

impl GpsFit {
    /// Coefficient on the individual treatment in the exposure model.
    pub fn exposure_treatment_slope(&self) -> f64 {
        self.neighborhood.coefficient(TREATMENT_TERM).unwrap_or(0.0)
    }
}

/// Estimated scores at the observed treatments.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityScores {
    pub individual: Vec<f64>,
    pub neighborhood: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeFit {
    pub fit: LinearFit,
    pub variant: OutcomeVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Jps,
    /// Ignores interference: no exposure, no neighborhood score.
    Naive,
}

/// Imputed dose-response surface and its marginal curves.
///
/// `surface[iz * g_grid.len() + ig]` holds `μ(z_grid[iz], g_grid[ig])`.
/// Naive estimates carry only `z_grid` and `marginal_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrfGrid {
    pub kind: EstimatorKind,
    pub z_grid: Vec<f64>,
    pub g_grid: Vec<f64>,
    pub surface: Vec<f64>,
    pub marginal_z: Vec<f64>,
    pub marginal_g: Vec<f64>,
    /// Per cell, the `n` unit imputations (cell-major), when retained.
    pub imputations: Option<Vec<f64>>,
    /// Surface cells whose imputation was not finite.
    pub flagged_cells: Vec<usize>,
    /// Grid points outside the observed treatment range, per axis.
    pub outside_support: (usize, usize),
    pub n: usize,
}

impl DrfGrid {
    pub fn at(&self, iz: usize, ig: usize) -> f64 {
        self.surface[iz * self.g_grid.len() + ig]
    }

    pub fn unit_imputations(&self, iz: usize, ig: usize) -> Option<&[f64]> {
        let cell = iz * self.g_grid.len() + ig;
        self.imputations
            .as_deref()
            .map(|all| &all[cell * self.n..(cell + 1) * self.n])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contrast {
    pub from: f64,
    pub to: f64,
    /// `μ(from) - μ(to)`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContrastSpec {
    pub z_pairs: Vec<(f64, f64)>,
    pub g_pairs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectReport {
    pub direct: Vec<Contrast>,
    pub spillover: Vec<Contrast>,
    /// Finite-difference slope of the z marginal at each z grid point.
    pub direct_derivative: Vec<f64>,
    /// Finite-difference slope of the g marginal at each g grid point.
    pub spillover_derivative: Vec<f64>,
}

/// Everything produced by one run of the joint estimator.
#[derive(Debug, Clone)]
pub struct JpsEstimate {
    pub gps: GpsFit,
    pub scores: PropensityScores,
    pub outcome: OutcomeFit,
    pub drf: DrfGrid,
}

#[derive(Debug, Clone)]
pub struct NaiveEstimate {
    pub individual: IndividualModel,
    pub scores: Vec<f64>,
    pub outcome: OutcomeFit,
    pub drf: DrfGrid,
}

fn linear_predictor(
    fit: &LinearFit,
    covariates: &[String],
    treatment: Option<&[f64]>,
    dataset: &PanelDataset,
) -> Result<Vec<f64>> {
    let cols: Vec<&[f64]> = covariates
        .iter()
        .map(|c| dataset.covariate(c))
        .collect::<Result<_>>()?;
    let slope_z = fit.coefficient(TREATMENT_TERM);
    let intercept = fit.coefficients[fit.coefficients.len() - 1];
    Ok((0..dataset.len())
        .map(|i| {
            let mut acc = intercept;
            for (c, b) in cols.iter().zip(&fit.coefficients) {
                acc += b * c[i];
            }
            if let (Some(t), Some(b)) = (treatment, slope_z) {
                acc += b * t[i];
            }
            acc
        })
        .collect())
}

fn fit_linear_on_covariates(
    dataset: &PanelDataset,
    covariates: &[String],
    extra: Option<(&str, &[f64])>,
    response: &[f64],
) -> Result<LinearFit> {
    let mut names: Vec<String> = covariates.to_vec();
    if let Some((name, _)) = extra {
        names.push(name.to_string());
    }
    let spec = DesignSpec::linear(&names)?;
    let design = spec.build(dataset.len(), |name| match extra {
        Some((extra_name, values)) if name == extra_name => Some(values),
        _ => dataset.covariate(name).ok(),
    })?;
    fit_ols(&design, response, &spec.column_names())
}

/// Box-Cox transform of the treatment and its Gaussian model on `X^z`.
pub fn fit_individual_model(dataset: &PanelDataset, covariates: &[String]) -> Result<IndividualModel> {
    let (boxcox, zstar) = boxcox_zero_skew(dataset.treatment())?;
    let fit = fit_linear_on_covariates(dataset, covariates, None, &zstar)?;
    if !(fit.sigma > 0.0) {
        return Err(Error::DegenerateScale("individual treatment"));
    }
    Ok(IndividualModel {
        boxcox,
        fit,
        covariates: covariates.to_vec(),
    })
}

fn require_exposure(dataset: &PanelDataset) -> Result<&[f64]> {
    let g = dataset.exposure().ok_or(Error::MissingExposure)?;
    let (lo, hi) = g
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let scale = abs(lo).max(abs(hi));
    if g.is_empty() || hi - lo <= 1e-12 * scale {
        return Err(Error::DegenerateExposure);
    }
    Ok(g)
}

/// Fits both treatment models (step 1).
pub fn fit_treatment_models(dataset: &PanelDataset, config: &JpsConfig) -> Result<GpsFit> {
    let g = require_exposure(dataset)?;
    let individual = fit_individual_model(dataset, &config.covariates_z)?;
    let neighborhood = fit_linear_on_covariates(
        dataset,
        &config.covariates_g,
        Some((TREATMENT_TERM, dataset.treatment())),
        g,
    )?;
    if !(neighborhood.sigma > 0.0) {
        return Err(Error::DegenerateScale("neighborhood treatment"));
    }
    Ok(GpsFit {
        individual,
        neighborhood,
        covariates_g: config.covariates_g.clone(),
    })
}

fn individual_scores(model: &IndividualModel, dataset: &PanelDataset) -> Result<Vec<f64>> {
    let zstar = crate::transforms::boxcox_apply(dataset.treatment(), model.boxcox.k)?;
    let mean = model.linear_predictor(dataset)?;
    zstar
        .iter()
        .zip(&mean)
        .map(|(&x, &m)| checked_score(normal_density(x, m, model.fit.sigma)?))
        .collect()
}

fn checked_score(v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("propensity score"))
    }
}

/// Scores at the observed treatments (step 2).
pub fn predict_scores(gps: &GpsFit, dataset: &PanelDataset) -> Result<PropensityScores> {
    let g = dataset.exposure().ok_or(Error::MissingExposure)?;
    let individual = individual_scores(&gps.individual, dataset)?;
    let mean_g = linear_predictor(
        &gps.neighborhood,
        &gps.covariates_g,
        Some(dataset.treatment()),
        dataset,
    )?;
    let neighborhood = g
        .iter()
        .zip(&mean_g)
        .map(|(&x, &m)| checked_score(normal_density(x, m, gps.neighborhood.sigma)?))
        .collect::<Result<_>>()?;
    Ok(PropensityScores {
        individual,
        neighborhood,
    })
}

/// Outcome regression on the cubic design (step 3). The naive variant uses
/// only `Z` and `Φ`; `scores.neighborhood` is then ignored.
pub fn fit_outcome(
    dataset: &PanelDataset,
    scores: &PropensityScores,
    variant: OutcomeVariant,
) -> Result<OutcomeFit> {
    let n = dataset.len();
    let z = dataset.treatment();
    let g = match variant {
        OutcomeVariant::WithInterference => dataset.exposure().ok_or(Error::MissingExposure)?,
        OutcomeVariant::WithoutInterference => &[],
    };
    let mut data = Vec::with_capacity(n * variant.width());
    let mut row = Vec::with_capacity(variant.width());
    for i in 0..n {
        let (gi, li) = match variant {
            OutcomeVariant::WithInterference => (g[i], scores.neighborhood[i]),
            OutcomeVariant::WithoutInterference => (0.0, 0.0),
        };
        build_outcome_row(z[i], gi, scores.individual[i], li, variant, &mut row);
        data.extend_from_slice(&row);
    }
    let design = crate::linear_model::Matrix::from_row_major(n, variant.width(), data)?;
    let names = DesignSpec::outcome(variant).column_names();
    Ok(OutcomeFit {
        fit: fit_ols(&design, dataset.outcome(), &names)?,
        variant,
    })
}

/// Per-unit counterfactual predictor built from fitted models.
#[derive(Debug, Clone)]
pub struct Imputer {
    variant: OutcomeVariant,
    k: f64,
    sigma_z: f64,
    sigma_g: f64,
    slope_gz: f64,
    mean_zstar: Vec<f64>,
    /// Exposure-model linear predictor without the treatment term.
    mean_g_base: Vec<f64>,
    coefficients: Vec<f64>,
    observed_z: Vec<f64>,
    observed_g: Vec<f64>,
}

impl Imputer {
    pub fn new(gps: &GpsFit, outcome: &OutcomeFit, dataset: &PanelDataset) -> Result<Self> {
        Ok(Self {
            variant: outcome.variant,
            k: gps.individual.boxcox.k,
            sigma_z: gps.individual.fit.sigma,
            sigma_g: gps.neighborhood.sigma,
            slope_gz: gps.exposure_treatment_slope(),
            mean_zstar: gps.individual.linear_predictor(dataset)?,
            mean_g_base: linear_predictor(&gps.neighborhood, &gps.covariates_g, None, dataset)?,
            coefficients: outcome.fit.coefficients.clone(),
            observed_z: dataset.treatment().to_vec(),
            observed_g: dataset.exposure().ok_or(Error::MissingExposure)?.to_vec(),
        })
    }

    pub fn naive(individual: &IndividualModel, outcome: &OutcomeFit, dataset: &PanelDataset) -> Result<Self> {
        let n = dataset.len();
        Ok(Self {
            variant: OutcomeVariant::WithoutInterference,
            k: individual.boxcox.k,
            sigma_z: individual.fit.sigma,
            sigma_g: 1.0,
            slope_gz: 0.0,
            mean_zstar: individual.linear_predictor(dataset)?,
            mean_g_base: alloc::vec![0.0; n],
            coefficients: outcome.fit.coefficients.clone(),
            observed_z: dataset.treatment().to_vec(),
            observed_g: alloc::vec![0.0; n],
        })
    }

    pub fn len(&self) -> usize {
        self.observed_z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed_z.is_empty()
    }

    pub fn observed_z(&self) -> &[f64] {
        &self.observed_z
    }

    pub fn observed_g(&self) -> &[f64] {
        &self.observed_g
    }

    /// Counterfactual scores `(φ(z; X_i), λ(g; z; X_i))` for unit `i`.
    /// `zstar` must be the Box-Cox transform of `z`.
    pub fn scores_at(&self, i: usize, z: f64, zstar: f64, g: f64) -> (f64, f64) {
        let phi = density(zstar, self.mean_zstar[i], self.sigma_z);
        let lambda = match self.variant {
            OutcomeVariant::WithInterference => {
                density(g, self.mean_g_base[i] + self.slope_gz * z, self.sigma_g)
            }
            OutcomeVariant::WithoutInterference => 0.0,
        };
        (phi, lambda)
    }

    /// Imputed `Y_i(z, g)`; `row` is scratch space.
    pub fn predict(&self, i: usize, z: f64, zstar: f64, g: f64, row: &mut Vec<f64>) -> f64 {
        let (phi, lambda) = self.scores_at(i, z, zstar, g);
        build_outcome_row(z, g, phi, lambda, self.variant, row);
        crate::linear_model::dot(&self.coefficients, row)
    }

    fn transform(&self, z: f64) -> Result<f64> {
        BoxCoxFit {
            k: self.k,
            achieved_skewness: 0.0,
            source_min: 0.0,
        }
        .apply(z)
    }

    /// Mean imputation over all units at `(z, g)`.
    pub fn average_at(&self, z: f64, g: f64) -> Result<f64> {
        let zstar = self.transform(z)?;
        let mut row = Vec::with_capacity(16);
        Ok(compensated_sum(
            (0..self.len()).map(|i| self.predict(i, z, zstar, g, &mut row)),
        ) / self.len() as f64)
    }

    /// Unit imputations at `(z, g)`.
    pub fn impute_cell(&self, z: f64, g: f64) -> Result<Vec<f64>> {
        let zstar = self.transform(z)?;
        let mut row = Vec::with_capacity(16);
        Ok((0..self.len())
            .map(|i| self.predict(i, z, zstar, g, &mut row))
            .collect())
    }

    /// `μ^Z(z) = mean_i Y_i(z, G_i)` on each z grid point.
    pub fn marginal_z(&self, z_grid: &[f64]) -> Result<Vec<f64>> {
        let mut row = Vec::with_capacity(16);
        z_grid
            .iter()
            .map(|&z| {
                let zstar = self.transform(z)?;
                let total = compensated_sum(
                    (0..self.len()).map(|i| self.predict(i, z, zstar, self.observed_g[i], &mut row)),
                );
                Ok(total / self.len() as f64)
            })
            .collect()
    }

    /// `μ^G(g) = mean_i Y_i(Z_i, g)` on each g grid point.
    pub fn marginal_g(&self, g_grid: &[f64]) -> Result<Vec<f64>> {
        let zstars: Vec<f64> = self
            .observed_z
            .iter()
            .map(|&z| self.transform(z))
            .collect::<Result<_>>()?;
        let mut row = Vec::with_capacity(16);
        Ok(g_grid
            .iter()
            .map(|&g| {
                compensated_sum(
                    (0..self.len())
                        .map(|i| self.predict(i, self.observed_z[i], zstars[i], g, &mut row)),
                ) / self.len() as f64
            })
            .collect())
    }
}

fn density(x: f64, mean: f64, sd: f64) -> f64 {
    // sd > 0 is checked when the models are fitted.
    normal_density(x, mean, sd).unwrap_or(f64::NAN)
}

fn count_outside(grid: &[f64], observed: &[f64]) -> usize {
    let lo = observed.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = observed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    grid.iter().filter(|&&v| v < lo || v > hi).count()
}

/// Marginal dose-response curves (plug-in average over the other treatment).
pub fn marginals(imputer: &Imputer, z_grid: &[f64], g_grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((imputer.marginal_z(z_grid)?, imputer.marginal_g(g_grid)?))
}

/// Imputes the surface over the grid (steps 4 and 5) and its marginals.
pub fn impute_drf(
    gps: &GpsFit,
    outcome: &OutcomeFit,
    dataset: &PanelDataset,
    grid: &GridPolicy,
    retain_imputations: bool,
) -> Result<DrfGrid> {
    let imputer = Imputer::new(gps, outcome, dataset)?;
    let z_grid = grid.z.resolve(dataset.treatment())?;
    let g_grid = grid.g.resolve(imputer.observed_g())?;
    surface_from_imputer(&imputer, z_grid, g_grid, retain_imputations)
}

/// Fills a [`DrfGrid`] from an imputer on explicit grids.
pub fn surface_from_imputer(
    imputer: &Imputer,
    z_grid: Vec<f64>,
    g_grid: Vec<f64>,
    retain_imputations: bool,
) -> Result<DrfGrid> {
    validate_grid(&z_grid)?;
    validate_grid(&g_grid)?;
    let n = imputer.len();
    let mut surface = Vec::with_capacity(z_grid.len() * g_grid.len());
    let mut imputations = retain_imputations.then(|| Vec::with_capacity(surface.capacity() * n));
    let mut flagged_cells = Vec::new();
    for &z in &z_grid {
        for &g in &g_grid {
            let cell = imputer.impute_cell(z, g)?;
            let mu = compensated_sum(cell.iter().copied()) / n as f64;
            if !mu.is_finite() {
                flagged_cells.push(surface.len());
            }
            surface.push(mu);
            if let Some(all) = imputations.as_mut() {
                all.extend_from_slice(&cell);
            }
        }
    }
    let (marginal_z, marginal_g) = marginals(imputer, &z_grid, &g_grid)?;
    Ok(DrfGrid {
        kind: EstimatorKind::Jps,
        outside_support: (
            count_outside(&z_grid, imputer.observed_z()),
            count_outside(&g_grid, imputer.observed_g()),
        ),
        z_grid,
        g_grid,
        surface,
        marginal_z,
        marginal_g,
        imputations,
        flagged_cells,
        n,
    })
}

/// Full joint pipeline with grids resolved from `config.grid`.
pub fn estimate(dataset: &PanelDataset, config: &JpsConfig) -> Result<JpsEstimate> {
    let gps = fit_treatment_models(dataset, config)?;
    let scores = predict_scores(&gps, dataset)?;
    let outcome = fit_outcome(dataset, &scores, OutcomeVariant::WithInterference)?;
    let drf = impute_drf(&gps, &outcome, dataset, &config.grid, false)?;
    Ok(JpsEstimate {
        gps,
        scores,
        outcome,
        drf,
    })
}

/// Estimator that ignores interference: individual score only, outcome
/// design without exposure terms, z marginal only.
pub fn naive_drf(dataset: &PanelDataset, covariates_z: &[String], z_axis: &GridAxis) -> Result<NaiveEstimate> {
    let individual = fit_individual_model(dataset, covariates_z)?;
    let scores = individual_scores(&individual, dataset)?;
    let as_scores = PropensityScores {
        individual: scores,
        neighborhood: Vec::new(),
    };
    let outcome = fit_outcome(dataset, &as_scores, OutcomeVariant::WithoutInterference)?;
    let imputer = Imputer::naive(&individual, &outcome, dataset)?;
    let z_grid = z_axis.resolve(dataset.treatment())?;
    let marginal_z = imputer.marginal_z(&z_grid)?;
    let drf = DrfGrid {
        kind: EstimatorKind::Naive,
        outside_support: (count_outside(&z_grid, dataset.treatment()), 0),
        z_grid,
        g_grid: Vec::new(),
        surface: Vec::new(),
        marginal_z,
        marginal_g: Vec::new(),
        imputations: None,
        flagged_cells: Vec::new(),
        n: dataset.len(),
    };
    Ok(NaiveEstimate {
        individual,
        scores: as_scores.individual,
        outcome,
        drf,
    })
}

/// Piecewise-linear interpolation of `values` over `grid`.
pub fn interpolate(grid: &[f64], values: &[f64], x: f64) -> Result<f64> {
    if grid.is_empty() || grid.len() != values.len() {
        return Err(Error::EmptyGrid);
    }
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(x >= lo && x <= hi) {
        return Err(Error::OutsideGrid {
            value: x,
            lower: lo,
            upper: hi,
        });
    }
    let j = grid.partition_point(|&g| g < x);
    if j < grid.len() && grid[j] == x {
        return Ok(values[j]);
    }
    let (x0, x1) = (grid[j - 1], grid[j]);
    let t = (x - x0) / (x1 - x0);
    Ok(values[j - 1] + t * (values[j] - values[j - 1]))
}

/// Central differences, one-sided at the ends.
pub fn finite_difference(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let m = grid.len();
    if m < 2 {
        return alloc::vec![0.0; m];
    }
    (0..m)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == m - 1 => (m - 2, m - 1),
                _ => (i - 1, i + 1),
            };
            (values[b] - values[a]) / (grid[b] - grid[a])
        })
        .collect()
}

/// Direct and spillover contrasts plus derivative curves.
pub fn effects(drf: &DrfGrid, spec: &ContrastSpec) -> Result<EffectReport> {
    let contrast = |grid: &[f64], curve: &[f64], (a, b): (f64, f64)| -> Result<Contrast> {
        Ok(Contrast {
            from: a,
            to: b,
            delta: interpolate(grid, curve, a)? - interpolate(grid, curve, b)?,
        })
    };
    let direct = spec
        .z_pairs
        .iter()
        .map(|&p| contrast(&drf.z_grid, &drf.marginal_z, p))
        .collect::<Result<_>>()?;
    let spillover = spec
        .g_pairs
        .iter()
        .map(|&p| contrast(&drf.g_grid, &drf.marginal_g, p))
        .collect::<Result<_>>()?;
    Ok(EffectReport {
        direct,
        spillover,
        direct_derivative: finite_difference(&drf.z_grid, &drf.marginal_z),
        spillover_derivative: finite_difference(&drf.g_grid, &drf.marginal_g),
    })
}

/// Index of the largest value (first on ties).
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= *v => {}
            _ if v.is_nan() => {}
            _ => best = Some(i),
        }
    }
    best
}
