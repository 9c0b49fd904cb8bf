//! Rigid superposition, RMSD, and template search over CA traces.

mod kabsch;
mod search;
mod views;

use thiserror::Error;

pub use kabsch::{compute_rmsd, kabsch_superpose, Superposition};
pub use search::{
    evaluate_placement, placement_pairs, qualifying_alignments, rank, structural_search, CaTrace, LevelParams,
    Placement, SearchCounter, StructuralAlignment, MAX_END_SHIFT, SCORE_EPS,
};
pub use views::{
    map_to_master, pair_rmsd, region_alignment_views, unit_similarity_matrix, AlignmentRow, AlignmentViews,
    SimilarityMatrix, ViewUnit,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlignError {
    #[error("superposition needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("point sets differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("similarity matrix needs at least 2 units, got {0}")]
    TooFewUnits(usize),
    #[error("master unit is not among the region units")]
    MasterNotInUnits,
    #[error("singular value decomposition failed")]
    Numerical,
}
