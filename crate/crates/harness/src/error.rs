use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// A config value is missing, malformed or out of range.
    #[error("config `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{key}: {source}")]
    Core {
        key: String,
        #[source]
        source: wqed_core::Error,
    },

    #[error("{key}: {source}")]
    Sim {
        key: String,
        #[source]
        source: wqed_krylovsim::SimError,
    },

    #[error("{experiment}: deviation {deviation:.6e} exceeds tolerance {tolerance:.3e}")]
    Tolerance {
        experiment: String,
        deviation: f64,
        tolerance: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<wqed_core::Error> for HarnessError {
    fn from(source: wqed_core::Error) -> Self {
        Self::Core {
            key: String::new(),
            source,
        }
    }
}

impl From<wqed_krylovsim::SimError> for HarnessError {
    fn from(source: wqed_krylovsim::SimError) -> Self {
        match source {
            wqed_krylovsim::SimError::Core(source) => Self::Core {
                key: String::new(),
                source,
            },
            source => Self::Sim {
                key: String::new(),
                source,
            },
        }
    }
}

impl HarnessError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Attaches a config key path to a numeric error that has none yet.
    pub fn at(mut self, path: &str) -> Self {
        match &mut self {
            Self::Core { key, .. } | Self::Sim { key, .. } if key.is_empty() => *key = path.to_string(),
            _ => {}
        }
        self
    }

    /// Process exit code: 2 config, 3 numeric failure, 4 tolerance failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Core { .. } | Self::Sim { .. } | Self::Io { .. } => 3,
            Self::Tolerance { .. } => 4,
        }
    }
}

pub trait Context<T> {
    fn at(self, key: &str) -> Result<T>;
}

impl<T, E: Into<HarnessError>> Context<T> for std::result::Result<T, E> {
    fn at(self, key: &str) -> Result<T> {
        self.map_err(|e| e.into().at(key))
    }
}
