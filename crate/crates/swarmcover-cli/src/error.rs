use thiserror::Error;

/// Every failure a subcommand can surface. Validation-class failures exit
/// with 2, I/O-class failures with 3; success is 0.
#[derive(Debug, Error)]
pub enum CliError {
    /// The scenario file is not valid JSON or does not deserialize; `path`
    /// names the file and, when known, the JSON path of the offending value.
    #[error("cannot parse {path}: {detail}")]
    Parse { path: String, detail: String },
    /// The document deserialized but a field value is out of range. `path`
    /// is the JSON path of the field, e.g. "obstacles[0].radius".
    #[error("schema violation at {path}: {detail}")]
    Schema { path: String, detail: String },
    /// The document is well-formed but the assembled scenario fails the
    /// pre-run checks (initial safety window, pairwise separation, ...).
    #[error("scenario invalid: {0}")]
    ScenarioInvalid(String),
    /// The plot target directory has no usable run artifacts.
    #[error("no run found in {0}")]
    MissingRun(String),
    /// Run artifacts exist but cannot be interpreted.
    #[error("malformed log in {path}: {detail}")]
    MalformedLog { path: String, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. }
            | CliError::Schema { .. }
            | CliError::ScenarioInvalid(_)
            | CliError::MalformedLog { .. } => 2,
            CliError::MissingRun(_) | CliError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}
