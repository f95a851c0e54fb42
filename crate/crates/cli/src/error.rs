use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: geodesica::Error },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] geodesica::Error),

    /// The neighborhood graph has more than one component in strict mode.
    #[error("{0}")]
    Disconnected(String),

    /// A strict audit could not certify the run.
    #[error("{0}")]
    Hypothesis(String),

    /// Certified hypotheses, yet some pair breaks the distance bounds.
    #[error("{0}")]
    BoundViolation(String),

    #[error("{0}")]
    Reproducibility(String),
}

fn core_kind(e: &geodesica::Error) -> &'static str {
    use geodesica::Error as E;
    match e {
        E::InvalidParameter(_) => "invalid-parameter",
        E::ShapeMismatch { .. } => "shape-mismatch",
        E::InvalidDissimilarity(_) => "invalid-dissimilarity",
        E::OutsideDomain { .. } => "outside-domain",
        E::Unsupported(_) => "unsupported",
        E::DisconnectedWeights { .. } => "disconnected",
        E::Parse { .. } | E::Json(_) => "parse",
        E::Empty(_) => "empty",
        E::Io(io) if io.kind() == std::io::ErrorKind::NotFound => "missing-file",
        E::Io(_) => "io",
    }
}

impl CliError {
    pub fn input(path: impl Into<PathBuf>) -> impl FnOnce(geodesica::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Input { path, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Input { source, .. } | CliError::Core(source) => core_kind(source),
            CliError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => "missing-file",
            CliError::Io { .. } => "io",
            CliError::Disconnected(_) => "disconnected",
            CliError::Hypothesis(_) => "hypothesis",
            CliError::BoundViolation(_) => "bound-violation",
            CliError::Reproducibility(_) => "reproducibility",
        }
    }

    /// 2 for command-line misuse, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        if let CliError::Input { path, .. } | CliError::Io { path, .. } = self {
            body["path"] = json!(path.display().to_string());
        }
        json!({ "error": body })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_and_codes() {
        let e = CliError::Input {
            path: "x.csv".into(),
            source: geodesica::Error::Parse { line: 3, message: "bad".into() },
        };
        let v = e.to_json();
        assert_eq!(v["error"]["kind"], "parse");
        assert_eq!(v["error"]["path"], "x.csv");
        assert!(v["error"]["message"].as_str().unwrap().contains("line 3"));
        assert_eq!(e.exit_code(), 1);
        assert_eq!(CliError::Usage("nope".into()).exit_code(), 2);
        let missing = CliError::io("gone")(std::io::Error::from(std::io::ErrorKind::NotFound));
        assert_eq!(missing.kind(), "missing-file");
    }
}
