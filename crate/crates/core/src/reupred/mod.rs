//! Structure-based repeat unit and region detection.
//!
//! A master unit is found by searching the structural repeat unit library
//! (SRUL) against the whole chain; flanks are then searched recursively
//! against the units found so far. Regions are accepted by a length,
//! count and proximity test, relaxing the structural filters level by level
//! until a valid region appears.

mod detector;
mod output;
mod srul;
mod validate;

use thiserror::Error;

use crate::structmodel::StructError;

pub use detector::{
    divide_and_collect, find_master_unit, identify_chain, identify_repeats, identify_with, segment_regions,
    ChainOutcome, DetectorParams, IdentificationOutcome, RegionResult, RelaxationSchedule, UnitOrigin, UnitPrediction,
};
pub use output::{emit_region_outputs, RegionManifest};
pub use srul::{compact_unit, load_srul, radius_of_gyration, Srul, SrulEntry};
pub use validate::{conquer_validate, inter_unit_gaps, validate_spans, ProximityRule, Validity, ValidityParams};

/// Shortest accepted repeat unit, in residues.
pub const MIN_UNIT_LEN: usize = 13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReupredError {
    #[error("no library units left after subclass restriction")]
    EmptyLibrary,
    #[error("unit {0} has {1} residues, below the minimum")]
    UnitTooShort(String, usize),
    #[error("duplicate library unit id {0}")]
    DuplicateUnit(String),
    #[error("malformed library index at line {0}")]
    BadIndex(usize),
    #[error("relaxation levels must loosen monotonically")]
    BadSchedule,
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Struct(#[from] StructError),
}

impl From<std::io::Error> for ReupredError {
    fn from(e: std::io::Error) -> Self {
        ReupredError::Io(e.to_string())
    }
}
