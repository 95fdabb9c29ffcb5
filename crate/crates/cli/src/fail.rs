use std::fmt;

/// Bad or unreadable audio, configuration or arguments that parsed but make
/// no sense for the data.
pub const EXIT_DATA: u8 = 2;
/// Weight file missing, corrupt or inconsistent with its configuration.
pub const EXIT_WEIGHTS: u8 = 3;
/// Command line misuse (`EX_USAGE`).
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }

    pub fn weights(message: impl Into<String>) -> Self {
        Self { code: EXIT_WEIGHTS, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Engine errors: weight problems keep their own code, everything else is a
/// data error.
impl From<sfnet::Error> for Failure {
    fn from(e: sfnet::Error) -> Self {
        match e {
            sfnet::Error::Weights(_) => Self::weights(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;
