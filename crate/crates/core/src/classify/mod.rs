//! Family scanning and repeat-subclass prediction.
//!
//! Chain sequences are scanned against a profile-HMM library, hit families
//! are mapped to repeat subclasses, and the subclasses whose normalized score
//! clears a threshold gate the repeat detector.

mod hmm;
mod mapping;
mod viterbi;

use thiserror::Error;

pub use hmm::{parse_hmm_library, residue_index, ProfileHmm, ALPHABET, T_DD, T_DM, T_II, T_IM, T_MD, T_MI, T_MM};
pub use mapping::{
    parse_external_hits, predict_chain_subclasses, select_execution_subclasses, Candidate, CandidateSet,
    ClassificationMap, SubclassId, SubclassInfo, Taxonomy,
};
pub use viterbi::{encode, scan_sequence, viterbi_local, FamilyHit};

use crate::structmodel::synth::SOLENOID_UNIT_SEQ;

pub const DEFAULT_BIT_THRESHOLD: f64 = 10.0;
pub const DEFAULT_PROBABILITY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("bad profile header: {0}")]
    BadHeader(String),
    #[error("profile {0}: emission/transition rows disagree with LENG")]
    LengthMismatch(String),
    #[error("class '{0}' is outside the supported classes 3, 4, 5")]
    BadClass(String),
    #[error("malformed subclass id '{0}'")]
    BadSubclass(String),
    #[error("malformed scan row at line {0}")]
    BadScanRow(usize),
}

/// Source of family hits for a chain.
pub trait FamilyScanner: Send + Sync {
    fn scan(&self, chain_id: char, sequence: &str) -> Vec<FamilyHit>;
}

/// Built-in local Viterbi scanner.
#[derive(Debug, Clone)]
pub struct ViterbiScanner {
    pub library: Vec<ProfileHmm>,
    pub bit_threshold: f64,
}

impl ViterbiScanner {
    pub fn new(library: Vec<ProfileHmm>, bit_threshold: f64) -> Self {
        ViterbiScanner { library, bit_threshold }
    }

    /// Scanner over the bundled synthetic profile library.
    pub fn builtin() -> Self {
        Self::new(builtin_profiles(), DEFAULT_BIT_THRESHOLD)
    }
}

impl FamilyScanner for ViterbiScanner {
    fn scan(&self, chain_id: char, sequence: &str) -> Vec<FamilyHit> {
        scan_sequence(chain_id, sequence, &self.library, self.bit_threshold)
    }
}

/// Hits computed elsewhere (e.g. a PfamScan run) and ingested from TSV.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedHits {
    pub hits: Vec<FamilyHit>,
}

impl FamilyScanner for PrecomputedHits {
    fn scan(&self, chain_id: char, _sequence: &str) -> Vec<FamilyHit> {
        self.hits.iter().filter(|h| h.chain_id == chain_id).cloned().collect()
    }
}

/// Profiles for the synthetic fixture families.
pub fn builtin_profiles() -> Vec<ProfileHmm> {
    vec![ProfileHmm::from_sequence("SynSolenoid", "SYN00001", SOLENOID_UNIT_SEQ)]
}
