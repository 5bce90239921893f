//! Unit-by-period panel records.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Identifies one row of the panel: a unit observed in a period.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeKey {
    pub unit: String,
    pub period: String,
}

impl NodeKey {
    pub fn new(unit: impl Into<String>, period: impl Into<String>) -> Self {
        Self {
            unit: unit.into(),
            period: period.into(),
        }
    }
}

/// Panel of `(unit, period)` rows with outcome, individual treatment,
/// named covariate columns and (once computed) the neighborhood exposure.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    keys: Vec<NodeKey>,
    outcome: Vec<f64>,
    treatment: Vec<f64>,
    covariate_names: Vec<String>,
    covariates: Vec<Vec<f64>>,
    exposure: Option<Vec<f64>>,
}

impl PanelDataset {
    pub fn new(keys: Vec<NodeKey>, outcome: Vec<f64>, treatment: Vec<f64>) -> Result<Self> {
        check_len(keys.len(), outcome.len())?;
        check_len(keys.len(), treatment.len())?;
        if outcome.iter().chain(&treatment).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("outcome or treatment"));
        }
        Ok(Self {
            keys,
            outcome,
            treatment,
            covariate_names: Vec::new(),
            covariates: Vec::new(),
            exposure: None,
        })
    }

    /// Adds or replaces a covariate column.
    pub fn set_covariate(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        check_len(self.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariate"));
        }
        let name = name.into();
        match self.covariate_names.iter().position(|n| *n == name) {
            Some(idx) => self.covariates[idx] = values,
            None => {
                self.covariate_names.push(name);
                self.covariates.push(values);
            }
        }
        Ok(())
    }

    pub fn set_exposure(&mut self, values: Vec<f64>) -> Result<()> {
        check_len(self.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("exposure"));
        }
        self.exposure = Some(values);
        Ok(())
    }

    pub fn set_outcome(&mut self, values: Vec<f64>) -> Result<()> {
        check_len(self.len(), values.len())?;
        self.outcome = values;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[NodeKey] {
        &self.keys
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn treatment(&self) -> &[f64] {
        &self.treatment
    }

    pub fn exposure(&self) -> Option<&[f64]> {
        self.exposure.as_deref()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn covariate(&self, name: &str) -> Result<&[f64]> {
        self.covariate_names
            .iter()
            .position(|n| n == name)
            .map(|idx| self.covariates[idx].as_slice())
            .ok_or_else(|| Error::MissingCovariate(name.into()))
    }

    /// New dataset made of the given rows (repeats allowed), carrying every
    /// column including the exposure as a fixed row attribute.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let pick = |col: &[f64]| rows.iter().map(|&r| col[r]).collect::<Vec<_>>();
        Self {
            keys: rows.iter().map(|&r| self.keys[r].clone()).collect(),
            outcome: pick(&self.outcome),
            treatment: pick(&self.treatment),
            covariate_names: self.covariate_names.clone(),
            covariates: self.covariates.iter().map(|c| pick(c)).collect(),
            exposure: self.exposure.as_deref().map(pick),
        }
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}
