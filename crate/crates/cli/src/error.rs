use std::path::PathBuf;

use serde_json::{json, Value};

pub type CliResult<T> = Result<T, CliError>;

/// Every failure the front end reports. Each variant has a stable exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {message}")]
    Config {
        field: Option<String>,
        line: Option<usize>,
        message: String,
    },

    #[error("cannot read `{}`: {source}", path.display())]
    MissingFile {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write `{}`: {message}", path.display())]
    Write { path: PathBuf, message: String },

    #[error("{}: row {row}: {message}", path.display())]
    MalformedRow {
        path: PathBuf,
        row: u64,
        message: String,
    },

    #[error("column `{column}` (bound by `{field}`) not found in `{}`", path.display())]
    UnboundColumn {
        field: String,
        column: String,
        path: PathBuf,
    },

    #[error("all exposures are identical; the joint model is unidentified (try estimator.variant = \"naive\")")]
    DegenerateExposure,

    #[error("singular design; offending columns: {}", columns.join(", "))]
    SingularDesign { columns: Vec<String> },

    #[error("bootstrap aborted: {failed} of {total} replicates failed")]
    BootstrapAborted { failed: usize, total: usize },

    #[error("{0}")]
    Estimation(jps_core::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> Self {
        Self::Config {
            field: Some(field.into()),
            line,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::MissingFile { .. } => 3,
            Self::Write { .. } => 4,
            Self::MalformedRow { .. } => 5,
            Self::UnboundColumn { .. } => 6,
            Self::DegenerateExposure => 7,
            Self::SingularDesign { .. } => 8,
            Self::BootstrapAborted { .. } => 9,
            Self::Estimation(_) => 10,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config { .. } => "config",
            Self::MissingFile { .. } => "missing_file",
            Self::Write { .. } => "write_failed",
            Self::MalformedRow { .. } => "malformed_row",
            Self::UnboundColumn { .. } => "unbound_column",
            Self::DegenerateExposure => "degenerate_exposure",
            Self::SingularDesign { .. } => "singular_design",
            Self::BootstrapAborted { .. } => "bootstrap_aborted",
            Self::Estimation(_) => "estimation",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "error": self.kind(),
            "code": self.exit_code(),
            "message": self.to_string(),
        });
        let extra = match self {
            Self::Config { field, line, .. } => json!({ "field": field, "line": line }),
            Self::MissingFile { path, .. } | Self::Write { path, .. } => json!({ "path": path }),
            Self::MalformedRow { path, row, .. } => json!({ "path": path, "row": row }),
            Self::UnboundColumn { field, column, path } => {
                json!({ "field": field, "column": column, "path": path })
            }
            Self::SingularDesign { columns } => json!({ "columns": columns }),
            Self::BootstrapAborted { failed, total } => json!({ "failed": failed, "total": total }),
            _ => json!({}),
        };
        if let (Some(obj), Value::Object(extra)) = (v.as_object_mut(), extra) {
            obj.extend(extra);
        }
        v
    }
}

impl From<jps_core::Error> for CliError {
    fn from(e: jps_core::Error) -> Self {
        match e {
            jps_core::Error::DegenerateExposure => Self::DegenerateExposure,
            jps_core::Error::SingularDesign { columns } => Self::SingularDesign { columns },
            jps_core::Error::BootstrapAborted { failed, total } => Self::BootstrapAborted { failed, total },
            other => Self::Estimation(other),
        }
    }
}
