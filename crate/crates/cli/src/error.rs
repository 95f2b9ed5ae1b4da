use fgm_core::flamelet::FlameletError;
use fgm_core::library::LibraryError;
use fgm_core::mech::MechError;
use fgm_ml::MlError;
use thiserror::Error;

/// Exit code 1 for bad input, 2 when a computation failed on valid input.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("I/O error: {e}"))
    }
}

impl From<MechError> for CliError {
    fn from(e: MechError) -> Self {
        match e {
            MechError::TemperatureOutOfRange { .. } | MechError::InvalidState(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<FlameletError> for CliError {
    fn from(e: FlameletError) -> Self {
        match e {
            FlameletError::Domain(_) | FlameletError::InvalidInput(_) => {
                CliError::Input(e.to_string())
            }
            FlameletError::Mech(m) => m.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<LibraryError> for CliError {
    fn from(e: LibraryError) -> Self {
        match e {
            LibraryError::NotConverged { .. } => CliError::Numerical(e.to_string()),
            LibraryError::Flamelet(f) => f.into(),
            LibraryError::Io(io) => io.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<MlError> for CliError {
    fn from(e: MlError) -> Self {
        match e {
            MlError::Diverged { .. } | MlError::NotConverged { .. } => {
                CliError::Numerical(e.to_string())
            }
            MlError::Io(io) => io.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}
