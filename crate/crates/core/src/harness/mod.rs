//! Parameter sweeps over quasicircle families, bound verification and report
//! output.

mod config;
mod export;
mod sweep;

pub use config::{parse_config, ConfigMap, FamilySpec, SweepSpec};
pub use export::{report_csv, report_json, report_svg, write_text};
pub use sweep::{
    fit_through_origin, run_row, run_sweep, verify_bound, RowMargin, RunRecord, VerificationReport,
    VerifySummary,
};

use thiserror::Error;

use crate::disc::DiscError;
use crate::infinity::InfinityError;
use crate::teich::TeichError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    Teich(#[from] TeichError),
    #[error(transparent)]
    Infinity(#[from] InfinityError),
    #[error(transparent)]
    Disc(#[from] DiscError),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("no sweep row converged")]
    EmptySweep,
    #[error("bound verification needs at least 3 converged rows with positive Bers norm, found {0}")]
    InsufficientRows(usize),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
