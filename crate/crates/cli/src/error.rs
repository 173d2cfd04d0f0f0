use thiserror::Error;

use mediaseal::attack::AttackError;
use mediaseal::fingerprint::FingerprintError;
use mediaseal::manifest::ManifestError;
use mediaseal::media::MediaError;
use mediaseal::registry::RegistryError;
use mediaseal::trust::TrustError;
use mediaseal::watermark::WatermarkError;

/// Exit 1 for usage, 2 for anything the modules reject, 3 for I/O.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Validation(_) => 2,
            Self::Io(_) => 3,
        }
    }

    pub fn io(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        Self::Io(format!("{context}: {e}"))
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Validation(e.to_string())
            }
        }
    )*};
}

validation_from!(AttackError, FingerprintError, ManifestError, MediaError, TrustError, WatermarkError);

impl From<RegistryError> for CliError {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::Io(_) => Self::Io(e.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}
