//! Error classification into process exit codes.

use std::fmt;

use ars_core::error::StatsError;
use ars_core::Error;

#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input, exit code 2.
    Input(String),
    /// A sentiment, embedding or scoring backend failed, exit code 3.
    Provider(String),
    /// Statistics are undefined for the data, exit code 4.
    Degenerate(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Provider(_) => 3,
            Failure::Degenerate(_) => 4,
        }
    }

    pub fn input(message: impl fmt::Display) -> Self {
        Failure::Input(message.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Provider(m) | Failure::Degenerate(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e.root() {
            Error::Provider(_) => Failure::Provider(message),
            Error::Stats(
                StatsError::NonPositiveScale(_)
                | StatsError::DegenerateLengths(_)
                | StatsError::DegenerateTfIdf(_)
                | StatsError::EmptyCorpus,
            ) => Failure::Degenerate(message),
            _ => Failure::Input(message),
        }
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::from(Error::from(e))
            }
        }
    )*};
}

from_core!(
    ars_core::error::CorpusError,
    ars_core::error::StatsError,
    ars_core::error::ProviderError,
    ars_core::error::LossError
);
