use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing {what}: {}", path.display())]
    Missing { what: &'static str, path: PathBuf },
    #[error("unknown asset {asset}: no price file at {}", path.display())]
    UnknownAsset { asset: String, path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        source: trendcheck::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn core(context: impl Into<String>) -> impl FnOnce(trendcheck::Error) -> Self {
        let context = context.into();
        move |source| Self::Core { context, source }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Missing { .. } => "missing_input",
            Self::UnknownAsset { .. } => "unknown_asset",
            Self::Io { .. } => "io",
            Self::Core { .. } => "compute",
        }
    }

    fn path(&self) -> Option<&Path> {
        match self {
            Self::Missing { path, .. }
            | Self::UnknownAsset { path, .. }
            | Self::Io { path, .. } => Some(path),
            _ => None,
        }
    }
}

#[derive(Serialize)]
struct Record<'a> {
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
}

/// One JSON object per line.
pub fn json_lines(errors: &[CliError]) -> String {
    errors
        .iter()
        .map(|e| {
            let record = Record {
                kind: e.kind(),
                message: e.to_string(),
                path: e.path().map(|p| p.display().to_string()),
            };
            serde_json::to_string(&record).expect("plain record serializes") + "\n"
        })
        .collect()
}
