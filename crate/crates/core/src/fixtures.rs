//! Synthetic structures with known repeat ground truth, used by the offline
//! fixture catalog and by tests.

use crate::structmodel::synth::{
    build_backbone_seq, decoy_torsions, random_sequence, solenoid_unit, tandem_chain, two_block_chain, Torsions,
    SOLENOID_UNIT_SEQ,
};
use crate::structmodel::{Chain, ProteinStructure, StructureSource};

pub const SOLENOID_COPIES: usize = 6;
pub const SOLENOID_CAP: usize = 3;
pub const BLOCK_COPIES: usize = 4;
pub const LINKER_LEN: usize = 100;
pub const DECOY_LEN: usize = 120;

fn wrap(accession: &str, source: StructureSource, chains: Vec<Chain>) -> ProteinStructure {
    ProteinStructure {
        accession: accession.to_string(),
        source,
        chains,
        fetched_at: None,
    }
}

/// Six tandem copies of the 20-residue solenoid unit with short coil caps.
pub fn solenoid_chain(chain_id: char, copies: usize) -> Chain {
    tandem_chain(chain_id, &solenoid_unit(), SOLENOID_UNIT_SEQ, copies, SOLENOID_CAP)
}

pub fn solenoid(accession: &str, source: StructureSource) -> ProteinStructure {
    wrap(accession, source, vec![solenoid_chain('A', SOLENOID_COPIES)])
}

/// Non-repetitive linker: a straight, perturbed extended segment.
pub fn linker_torsions(len: usize) -> Vec<Torsions> {
    decoy_torsions(len, 77)
}

/// Two four-copy blocks joined by a 100-residue linker.
pub fn two_block(accession: &str, source: StructureSource) -> ProteinStructure {
    let chain = two_block_chain(
        'A',
        &solenoid_unit(),
        SOLENOID_UNIT_SEQ,
        BLOCK_COPIES,
        &linker_torsions(LINKER_LEN),
    );
    wrap(accession, source, vec![chain])
}

/// Extended-strand decoy with no repeat structure and a random sequence.
pub fn decoy(accession: &str, source: StructureSource) -> ProteinStructure {
    let chain = build_backbone_seq('A', &decoy_torsions(DECOY_LEN, 5), &random_sequence(DECOY_LEN, 5), 1);
    wrap(accession, source, vec![chain])
}
