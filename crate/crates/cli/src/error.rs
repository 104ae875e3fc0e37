use std::path::Path;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] toprank::Error),
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    exit_code: u8,
    message: String,
}

#[derive(Serialize)]
struct ErrorObject<'a> {
    error: ErrorBody<'a>,
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Machine-readable category and process exit status.
    pub fn code(&self) -> (&'static str, u8) {
        use toprank::Error as E;
        match self {
            CliError::Config(_) => ("config", 2),
            CliError::Io { .. } | CliError::Core(E::Io(_)) => ("io", 3),
            CliError::Core(E::Parse { .. } | E::Csv(_) | E::InvalidRanking(_)) => ("parse", 4),
            CliError::Core(E::Dimension { .. } | E::IndexOutOfRange { .. }) => ("dimension", 5),
            CliError::Core(E::Capacity { .. }) => ("capacity", 6),
            CliError::Core(E::Domain(_)) => ("domain", 7),
            CliError::Core(E::DegenerateLikelihood { .. } | E::DegenerateCluster { .. } | E::Numeric(_)) => {
                ("numeric", 8)
            }
            CliError::Json(_) => ("serialization", 9),
        }
    }

    pub fn to_json(&self) -> String {
        let (code, exit_code) = self.code();
        serde_json::to_string(&ErrorObject {
            error: ErrorBody {
                code,
                exit_code,
                message: self.to_string(),
            },
        })
        .expect("error object serializes")
    }
}
