use thiserror::Error;

use crate::cavity::CavityError;
use crate::config::ConfigError;
use crate::correlation::CorrelationError;
use crate::dispersion::DispersionError;
use crate::filter::FilterError;
use crate::plan::PlanError;
use crate::rb::RbError;
use crate::spectrum::SpectrumError;

/// Any failure surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Cavity(#[from] CavityError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    Rb(#[from] RbError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
