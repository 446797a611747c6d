use evl_core::EvlError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    Numeric(#[from] EvlError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn config(key: &str, message: String) -> Self {
        CliError::Config {
            key: key.to_string(),
            message,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Io { .. } | CliError::Csv(_) => "io",
        }
    }

    pub fn key(&self) -> &str {
        match self {
            CliError::Config { key, .. } => key,
            _ => "",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numeric(_) => 3,
            _ => 1,
        }
    }
}

/// Maps a serde error on the config file to the key it names, if any.
pub fn from_json_error(err: &serde_json::Error) -> CliError {
    let text = err.to_string();
    let key = text
        .split('`')
        .nth(1)
        .filter(|_| text.contains("field"))
        .unwrap_or("config")
        .to_string();
    CliError::Config { key, message: text }
}
