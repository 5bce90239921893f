//! Run configuration: a flat `key = value` file with dotted keys.
//!
//! ```text
//! data.panel = "panel.csv"
//! data.edges = "edges.csv"
//! columns.covariates_z = ["x1", "x2"]
//! columns.covariates_g = ["x1", "x2"]
//! exposure.mode = "plain"
//! bootstrap.replicates = 200
//! ```
//!
//! Any valid TOML is accepted; [`RunConfig::to_flat_string`] writes the
//! dotted form back out.

use std::path::{Path, PathBuf};

use jps_core::network::{Direction, NeighborhoodSummarySpec, Summarizer};
use jps_core::{ExposureMode, GridAxis, GridPolicy, JpsConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataSection,
    pub columns: ColumnSection,
    pub exposure: ExposureSection,
    pub grid: GridSection,
    pub estimator: EstimatorSection,
    pub bootstrap: BootstrapSection,
    pub balance: BalanceSection,
    pub effects: EffectsSection,
    pub simulate: SimulateSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panel: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ColumnSection {
    pub unit: String,
    pub period: String,
    pub outcome: String,
    pub treatment: String,
    pub covariates_z: Vec<String>,
    pub covariates_g: Vec<String>,
}

impl Default for ColumnSection {
    fn default() -> Self {
        Self {
            unit: "unit".into(),
            period: "period".into(),
            outcome: "outcome".into(),
            treatment: "treatment".into(),
            covariates_z: Vec::new(),
            covariates_g: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    Plain,
    TradeNormalized,
}

impl From<ModeName> for ExposureMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Plain => ExposureMode::Plain,
            ModeName::TradeNormalized => ExposureMode::TradeNormalized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummarizerName {
    WeightedMean,
    Sum,
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionName {
    In,
    Out,
}

/// A neighborhood covariate added to the panel under `name`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryEntry {
    pub name: String,
    pub covariate: String,
    pub summarizer: SummarizerName,
    #[serde(default = "default_direction")]
    pub direction: DirectionName,
}

fn default_direction() -> DirectionName {
    DirectionName::In
}

impl SummaryEntry {
    pub fn spec(&self) -> NeighborhoodSummarySpec {
        NeighborhoodSummarySpec {
            covariate: self.covariate.clone(),
            summarizer: match self.summarizer {
                SummarizerName::WeightedMean => Summarizer::WeightedMean,
                SummarizerName::Sum => Summarizer::Sum,
                SummarizerName::Count => Summarizer::Count,
            },
            direction: match self.direction {
                DirectionName::In => Direction::In,
                DirectionName::Out => Direction::Out,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExposureSection {
    pub mode: ModeName,
    pub summaries: Vec<SummaryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AxisSection {
    pub points: usize,
    pub lower: f64,
    pub upper: f64,
    /// Explicit grid; overrides the quantile range.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Default for AxisSection {
    fn default() -> Self {
        Self {
            points: 20,
            lower: 0.05,
            upper: 0.95,
            values: None,
        }
    }
}

impl AxisSection {
    pub fn axis(&self) -> GridAxis {
        match &self.values {
            Some(v) => GridAxis::Explicit(v.clone()),
            None => GridAxis::Quantiles {
                points: self.points,
                lower: self.lower,
                upper: self.upper,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub z: AxisSection,
    pub g: AxisSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Jps,
    Naive,
    Both,
}

impl Variant {
    pub fn joint(self) -> bool {
        matches!(self, Self::Jps | Self::Both)
    }

    pub fn naive(self) -> bool {
        matches!(self, Self::Naive | Self::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    pub variant: Variant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapSection {
    /// 0 disables the bootstrap.
    pub replicates: usize,
    pub seed: u64,
    pub level: f64,
    pub parallel: bool,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        Self {
            replicates: 0,
            seed: 1,
            level: 0.95,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BalanceSection {
    pub alpha: f64,
}

impl Default for BalanceSection {
    fn default() -> Self {
        Self { alpha: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EffectsSection {
    /// `[from, to]` pairs for `μ^Z(from) - μ^Z(to)`.
    pub z_pairs: Vec<[f64; 2]>,
    pub g_pairs: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    #[default]
    Confounded,
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub scenario: ScenarioName,
    pub units: usize,
    pub seed: u64,
    pub oracle_draws: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            scenario: ScenarioName::Confounded,
            units: 2000,
            seed: 1,
            oracle_draws: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// What a subcommand needs from the config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Needs {
    /// Panel and edges only.
    Data,
    /// Data plus estimator settings.
    Estimation,
    Simulation,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_at(text, s.start));
            CliError::Config {
                field: None,
                line,
                message: e.message().trim().to_string(),
            }
        })
    }

    /// Reads and parses `path`. Relative data paths are resolved against
    /// the directory holding the file.
    pub fn load(path: &Path) -> CliResult<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::MissingFile {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.data.panel, &mut cfg.data.edges].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok((cfg, text))
    }

    /// Dotted `key = value` lines, one per leaf, in field order.
    pub fn to_flat_string(&self) -> String {
        let table = toml::Table::try_from(self).expect("config serializes to a table");
        let mut out = String::new();
        flatten("", &table, &mut out);
        out
    }

    /// Checks the invariants `needs` depends on. `text` is the source file,
    /// used to point at the offending line.
    pub fn validate(&self, needs: Needs, text: Option<&str>) -> CliResult<()> {
        let err = |field: &str, message: String| {
            Err(CliError::config(field, text.and_then(|t| line_of(t, field)), message))
        };
        if needs == Needs::Simulation {
            if self.simulate.units < 4 {
                return err("simulate.units", "needs at least 4 units".into());
            }
            if self.simulate.oracle_draws == 0 {
                return err("simulate.oracle_draws", "must be positive".into());
            }
        } else {
            if self.data.panel.is_none() {
                return err("data.panel", "panel file is required".into());
            }
            if self.data.edges.is_none() {
                return err("data.edges", "edge file is required".into());
            }
        }
        for (i, s) in self.exposure.summaries.iter().enumerate() {
            if s.name.is_empty() || self.bound_columns().contains(&s.name.as_str()) {
                return err(
                    "exposure.summaries",
                    format!("summary {} needs a name distinct from the bound columns", i + 1),
                );
            }
        }
        if needs == Needs::Data {
            return Ok(());
        }
        let variant = self.estimator.variant;
        if needs == Needs::Estimation && self.columns.covariates_z.is_empty() {
            return err("columns.covariates_z", "the treatment model needs at least one covariate".into());
        }
        if needs == Needs::Estimation && variant.joint() && self.columns.covariates_g.is_empty() {
            return err("columns.covariates_g", "the exposure model needs at least one covariate".into());
        }
        for (field, axis) in [("grid.z", &self.grid.z), ("grid.g", &self.grid.g)] {
            if let Some(values) = &axis.values {
                if values.is_empty() || values.windows(2).any(|w| !(w[0] < w[1])) {
                    return err(&format!("{field}.values"), "grid must be non-empty and strictly increasing".into());
                }
            } else {
                if axis.points == 0 {
                    return err(&format!("{field}.points"), "must be positive".into());
                }
                if !(0.0 <= axis.lower && axis.lower < axis.upper && axis.upper <= 1.0) {
                    return err(&format!("{field}.lower"), "quantiles must satisfy 0 <= lower < upper <= 1".into());
                }
            }
        }
        let b = &self.bootstrap;
        if b.replicates == 1 {
            return err("bootstrap.replicates", "use 0 to disable or at least 2".into());
        }
        if !(b.level > 0.0 && b.level < 1.0) {
            return err("bootstrap.level", "must lie in (0, 1)".into());
        }
        if !(self.balance.alpha > 0.0 && self.balance.alpha < 1.0) {
            return err("balance.alpha", "must lie in (0, 1)".into());
        }
        Ok(())
    }

    fn bound_columns(&self) -> [&str; 4] {
        let c = &self.columns;
        [&c.unit, &c.period, &c.outcome, &c.treatment]
    }

    pub fn jps_config(&self) -> JpsConfig {
        JpsConfig {
            covariates_z: self.columns.covariates_z.clone(),
            covariates_g: self.columns.covariates_g.clone(),
            grid: GridPolicy {
                z: self.grid.z.axis(),
                g: self.grid.g.axis(),
            },
        }
    }

    /// Covariate columns to read from the panel: those the models use,
    /// minus derived summaries, plus the summaries' sources.
    pub fn panel_covariates(&self) -> Vec<String> {
        let derived: Vec<&str> = self.exposure.summaries.iter().map(|s| s.name.as_str()).collect();
        let mut out: Vec<String> = Vec::new();
        let listed = self
            .columns
            .covariates_z
            .iter()
            .chain(&self.columns.covariates_g)
            .filter(|c| !derived.contains(&c.as_str()))
            .chain(self.exposure.summaries.iter().map(|s| &s.covariate));
        for c in listed {
            if !out.contains(c) {
                out.push(c.clone());
            }
        }
        out
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut String) {
    for (key, value) in table {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match value {
            toml::Value::Table(inner) => flatten(&path, inner, out),
            other => {
                out.push_str(&path);
                out.push_str(" = ");
                out.push_str(&other.to_string());
                out.push('\n');
            }
        }
    }
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line assigning the dotted `key`, if written in dotted form.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
# inputs
data.panel = "panel.csv"
data.edges = "edges.csv"
columns.covariates_z = ["x1", "x2"]
columns.covariates_g = ["x1", "nbr_x2"]
exposure.mode = "trade_normalized"
exposure.summaries = [{ name = "nbr_x2", covariate = "x2", summarizer = "weighted_mean" }]
grid.z.points = 5
grid.g.values = [0.5, 1.0, 1.5]
estimator.variant = "both"
bootstrap.replicates = 50
bootstrap.seed = 9
effects.z_pairs = [[2.0, 1.0]]
"#;

    #[test]
    fn parses_dotted_keys() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.exposure.mode, ModeName::TradeNormalized);
        assert_eq!(cfg.grid.z.points, 5);
        assert_eq!(cfg.grid.z.lower, 0.05);
        assert_eq!(cfg.grid.g.values.as_deref(), Some(&[0.5, 1.0, 1.5][..]));
        assert_eq!(cfg.estimator.variant, Variant::Both);
        assert_eq!(cfg.exposure.summaries[0].direction, DirectionName::In);
        assert_eq!(cfg.panel_covariates(), vec!["x1", "x2"]);
        cfg.validate(Needs::Estimation, Some(SAMPLE)).unwrap();
    }

    #[test]
    fn flat_round_trip() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        let flat = cfg.to_flat_string();
        assert!(flat.contains("bootstrap.seed = 9\n"));
        assert!(flat.lines().all(|l| !l.starts_with('[')));
        assert_eq!(RunConfig::parse(&flat).unwrap(), cfg);
        assert_eq!(RunConfig::parse(&RunConfig::default().to_flat_string()).unwrap(), RunConfig::default());
    }

    #[test]
    fn parse_errors_carry_line() {
        match RunConfig::parse("data.panel = \"a\"\nbootstrap.replicates = \"many\"\n") {
            Err(CliError::Config { line, .. }) => assert_eq!(line, Some(2)),
            other => panic!("{other:?}"),
        }
        match RunConfig::parse("\n\ncolumns.treatmnt = \"z\"\n") {
            Err(CliError::Config { line, message, .. }) => {
                assert_eq!(line, Some(3));
                assert!(message.contains("treatmnt"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_names_field_and_line() {
        let text = "data.panel = \"p\"\ndata.edges = \"e\"\ncolumns.covariates_z = [\"x\"]\ncolumns.covariates_g = [\"x\"]\nbootstrap.replicates = 1\n";
        let cfg = RunConfig::parse(text).unwrap();
        match cfg.validate(Needs::Estimation, Some(text)) {
            Err(CliError::Config { field, line, .. }) => {
                assert_eq!(field.as_deref(), Some("bootstrap.replicates"));
                assert_eq!(line, Some(5));
            }
            other => panic!("{other:?}"),
        }
        let mut cfg = cfg;
        cfg.bootstrap.replicates = 0;
        cfg.columns.covariates_g.clear();
        assert!(cfg.validate(Needs::Estimation, None).is_err());
        cfg.estimator.variant = Variant::Naive;
        assert!(cfg.validate(Needs::Estimation, None).is_ok());
    }
}
