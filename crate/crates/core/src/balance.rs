//! Regression-based balance diagnostics for the two propensity scores.
//!
//! Step 1 compares `Z* ~ cubic(Φ)` with `Z* ~ cubic(Φ) + X^z`; step 2
//! compares `G ~ Z + cubic(Λ)` with `G ~ Z + cubic(Λ) + X^g`. Each pair is
//! tested with the Gaussian likelihood ratio `n ln(RSS_r / RSS_f)`, which is
//! asymptotically χ² with as many degrees of freedom as covariate columns
//! added. Small statistics mean the covariates carry little information about
//! the treatment once the score is conditioned on.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dataset::PanelDataset;
use crate::error::{Error, Result};
use crate::jps::{GpsFit, PropensityScores, TREATMENT_TERM};
use crate::linear_model::{fit_ols_pruned, DesignSpec, Term};
use crate::math::{ln, sqrt, variance};
use crate::special::chi_square_sf;
use crate::transforms::boxcox_apply;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// The full model fits exactly; the statistic is infinite.
    pub perfect_fit: bool,
}

/// Gaussian likelihood-ratio test of nested linear models.
pub fn lr_test(rss_restricted: f64, rss_full: f64, n: usize, df_added: usize) -> Result<LrTest> {
    if df_added == 0 || n <= df_added {
        return Err(Error::InvalidArgument("LR test needs 0 < df < n"));
    }
    if !(rss_full >= 0.0) || !(rss_restricted >= 0.0) {
        return Err(Error::InvalidArgument("residual sums of squares must be >= 0"));
    }
    // Round-off may leave the full model a hair worse than the restricted one.
    let slack = 1e-12 * rss_restricted.max(rss_full);
    if rss_full > rss_restricted + slack {
        return Err(Error::InvalidArgument("full model must nest the restricted model"));
    }
    if rss_full == 0.0 {
        let statistic = if rss_restricted == 0.0 { 0.0 } else { f64::INFINITY };
        return Ok(LrTest {
            statistic,
            df: df_added,
            p_value: chi_square_sf(statistic, df_added),
            perfect_fit: statistic.is_infinite(),
        });
    }
    let statistic = (n as f64 * ln(rss_restricted / rss_full)).max(0.0);
    Ok(LrTest {
        statistic,
        df: df_added,
        p_value: chi_square_sf(statistic, df_added),
        perfect_fit: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceStep {
    /// `None` when there is no covariate to add.
    pub test: Option<LrTest>,
    pub rss_restricted: f64,
    pub rss_full: f64,
    /// Columns removed because they were linearly dependent.
    pub dropped_columns: Vec<String>,
}

impl BalanceStep {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.test.is_some_and(|t| t.p_value < alpha)
    }
}

/// Treatment coefficients of a covariate regressed on `(Z, G)`, without
/// and with the score polynomials, standardized by `sd(T) / sd(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateShrinkage {
    pub covariate: String,
    pub z_without: f64,
    pub z_with: f64,
    pub g_without: f64,
    pub g_with: f64,
}

impl CovariateShrinkage {
    pub fn z_ratio(&self) -> f64 {
        libm::fabs(self.z_with) / libm::fabs(self.z_without)
    }

    pub fn g_ratio(&self) -> f64 {
        libm::fabs(self.g_with) / libm::fabs(self.g_without)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub individual: BalanceStep,
    pub neighborhood: BalanceStep,
    pub shrinkage: Vec<CovariateShrinkage>,
}

fn cubic(name: &str) -> [Term; 3] {
    [Term::raw(name), Term::square(name), Term::cube(name)]
}

fn nested_step<'a>(
    n: usize,
    response: &[f64],
    base_terms: Vec<Term>,
    covariates: &[String],
    lookup: impl Fn(&str) -> Option<&'a [f64]> + Copy,
) -> Result<BalanceStep> {
    let restricted = DesignSpec::new(base_terms.clone(), true)?;
    let (fit_r, mut dropped) = fit_ols_pruned(
        &restricted.build(n, lookup)?,
        response,
        &restricted.column_names(),
    )?;
    if covariates.is_empty() {
        return Ok(BalanceStep {
            test: None,
            rss_restricted: fit_r.rss,
            rss_full: fit_r.rss,
            dropped_columns: dropped,
        });
    }
    let mut terms = base_terms;
    terms.extend(covariates.iter().map(|c| Term::raw(c)));
    let full = DesignSpec::new(terms, true)?;
    let (fit_f, dropped_f) = fit_ols_pruned(&full.build(n, lookup)?, response, &full.column_names())?;
    for d in dropped_f {
        if !dropped.contains(&d) {
            dropped.push(d);
        }
    }
    let df = fit_f.coefficients.len().saturating_sub(fit_r.coefficients.len());
    let test = if df == 0 {
        None
    } else {
        Some(lr_test(fit_r.rss, fit_f.rss.min(fit_r.rss), n, df)?)
    };
    Ok(BalanceStep {
        test,
        rss_restricted: fit_r.rss,
        rss_full: fit_f.rss,
        dropped_columns: dropped,
    })
}

/// Two-step balance check plus per-covariate shrinkage.
pub fn balance_check(
    dataset: &PanelDataset,
    gps: &GpsFit,
    scores: &PropensityScores,
) -> Result<BalanceReport> {
    let n = dataset.len();
    let g = dataset.exposure().ok_or(Error::MissingExposure)?;
    let z = dataset.treatment();
    let zstar = boxcox_apply(z, gps.individual.boxcox.k)?;
    let phi = scores.individual.as_slice();
    let lambda = scores.neighborhood.as_slice();
    if phi.len() != n || lambda.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: phi.len().min(lambda.len()),
        });
    }
    let lookup = |name: &str| -> Option<&[f64]> {
        match name {
            "phi" => Some(phi),
            "lambda" => Some(lambda),
            "g" => Some(g),
            TREATMENT_TERM => Some(z),
            other => dataset.covariate(other).ok(),
        }
    };
    for c in gps.individual.covariates.iter().chain(&gps.covariates_g) {
        if matches!(c.as_str(), "phi" | "lambda" | "g" | TREATMENT_TERM) {
            return Err(Error::InvalidArgument("covariate name clashes with a reserved term"));
        }
        dataset.covariate(c)?;
    }

    let individual = nested_step(
        n,
        &zstar,
        cubic("phi").to_vec(),
        &gps.individual.covariates,
        lookup,
    )?;
    let mut base = alloc::vec![Term::raw(TREATMENT_TERM)];
    base.extend(cubic("lambda"));
    let neighborhood = nested_step(n, g, base, &gps.covariates_g, lookup)?;

    let mut names: Vec<String> = gps.individual.covariates.clone();
    for c in &gps.covariates_g {
        if !names.contains(c) {
            names.push(c.clone());
        }
    }
    let sd_z = sqrt(variance(z));
    let sd_g = sqrt(variance(g));
    let mut shrinkage = Vec::with_capacity(names.len());
    for name in names {
        let x = dataset.covariate(&name)?;
        let sd_x = sqrt(variance(x));
        let treatments = alloc::vec![Term::raw(TREATMENT_TERM), Term::raw("g")];
        let mut with_scores = treatments.clone();
        with_scores.extend(cubic("phi"));
        with_scores.extend(cubic("lambda"));
        let coefs = |terms: Vec<Term>| -> Result<(f64, f64)> {
            let spec = DesignSpec::new(terms, true)?;
            let (fit, _) = fit_ols_pruned(&spec.build(n, lookup)?, x, &spec.column_names())?;
            Ok((
                fit.coefficient(TREATMENT_TERM).unwrap_or(0.0) * sd_z / sd_x,
                fit.coefficient("g").unwrap_or(0.0) * sd_g / sd_x,
            ))
        };
        let (z_without, g_without) = coefs(treatments)?;
        let (z_with, g_with) = coefs(with_scores)?;
        shrinkage.push(CovariateShrinkage {
            covariate: name.to_string(),
            z_without,
            z_with,
            g_without,
            g_with,
        });
    }

    Ok(BalanceReport {
        individual,
        neighborhood,
        shrinkage,
    })
}
