//! Coordinate model for protein structures.
//!
//! Covers the fixed-column PDB subset used by both RCSB entries and AlphaFold
//! models, FASTA export, fragment slicing and a light-weight three-state
//! secondary-structure classifier.

mod pdb;
mod secondary;
pub mod synth;

use chrono::{DateTime, Utc};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pdb::{parse_pdb, write_pdb, write_pdb_models};
pub use secondary::{assign_secondary_structure, dihedral, SecondaryStructure, SsState};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructError {
    #[error("no ATOM records found")]
    NoAtoms,
    #[error("malformed ATOM record at line {0}")]
    MalformedLine(usize),
    #[error("fragment range {start}..={end} out of bounds for chain of {len} residues")]
    OutOfRange { start: usize, end: usize, len: usize },
    #[error("unknown chain '{0}'")]
    UnknownChain(char),
}

/// Database a structure was obtained from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StructureSource {
    Pdb,
    Alphafold,
}

impl StructureSource {
    pub fn as_str(self) -> &'static str {
        match self {
            StructureSource::Pdb => "PDB",
            StructureSource::Alphafold => "ALPHAFOLD",
        }
    }
}

impl std::fmt::Display for StructureSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub serial: u32,
    pub name: String,
    pub element: String,
    pub position: Vec3,
    pub occupancy: f64,
    /// B-factor, or pLDDT for AlphaFold models.
    pub temp_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residue {
    pub seq_num: i32,
    pub insertion_code: Option<char>,
    pub name3: String,
    pub code1: char,
    pub atoms: Vec<Atom>,
}

impl Residue {
    pub fn new(seq_num: i32, insertion_code: Option<char>, name3: &str) -> Self {
        Residue {
            seq_num,
            insertion_code,
            name3: name3.to_string(),
            code1: three_to_one(name3),
            atoms: Vec::new(),
        }
    }

    pub fn atom(&self, name: &str) -> Option<&Atom> {
        self.atoms.iter().find(|a| a.name == name)
    }

    pub fn ca(&self) -> Option<&Atom> {
        self.atom("CA")
    }

    /// Residues lacking a CA are kept in the sequence but never enter
    /// coordinate sets used for superposition.
    pub fn has_ca(&self) -> bool {
        self.ca().is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub id: char,
    pub residues: Vec<Residue>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn sequence(&self) -> String {
        self.residues.iter().map(|r| r.code1).collect()
    }

    /// CA coordinates paired with their residue order index.
    pub fn ca_trace(&self) -> Vec<(usize, Vec3)> {
        self.residues
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.ca().map(|a| (i, a.position)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProteinStructure {
    pub accession: String,
    pub source: StructureSource,
    pub chains: Vec<Chain>,
    pub fetched_at: Option<DateTime<Utc>>,
}

impl ProteinStructure {
    pub fn chain(&self, id: char) -> Option<&Chain> {
        self.chains.iter().find(|c| c.id == id)
    }

    pub fn residue_count(&self) -> usize {
        self.chains.iter().map(Chain::len).sum()
    }
}

const AMINO_ACIDS: [(&str, char); 20] = [
    ("ALA", 'A'),
    ("ARG", 'R'),
    ("ASN", 'N'),
    ("ASP", 'D'),
    ("CYS", 'C'),
    ("GLN", 'Q'),
    ("GLU", 'E'),
    ("GLY", 'G'),
    ("HIS", 'H'),
    ("ILE", 'I'),
    ("LEU", 'L'),
    ("LYS", 'K'),
    ("MET", 'M'),
    ("PHE", 'F'),
    ("PRO", 'P'),
    ("SER", 'S'),
    ("THR", 'T'),
    ("TRP", 'W'),
    ("TYR", 'Y'),
    ("VAL", 'V'),
];

/// Standard three-letter to one-letter code; anything else maps to `X`.
pub fn three_to_one(name3: &str) -> char {
    let upper = name3.trim().to_ascii_uppercase();
    AMINO_ACIDS
        .iter()
        .find(|(n, _)| *n == upper)
        .map(|&(_, c)| c)
        .unwrap_or('X')
}

pub fn one_to_three(code1: char) -> &'static str {
    AMINO_ACIDS
        .iter()
        .find(|(_, c)| *c == code1.to_ascii_uppercase())
        .map(|&(n, _)| n)
        .unwrap_or("UNK")
}

/// FASTA record for one chain, header `>{accession}_{chain}` and a 60-column body.
pub fn extract_sequence(chain: &Chain, accession: &str) -> String {
    let seq = chain.sequence();
    let mut out = format!(">{}_{}\n", accession, chain.id);
    let bytes = seq.as_bytes();
    for line in bytes.chunks(60) {
        // sequence is pure ASCII
        out.push_str(std::str::from_utf8(line).unwrap_or_default());
        out.push('\n');
    }
    out
}

/// Single-chain fragment holding residues `start..=end` by order index.
pub fn slice_fragment(
    structure: &ProteinStructure,
    chain_id: char,
    start: usize,
    end: usize,
) -> Result<ProteinStructure, StructError> {
    let chain = structure.chain(chain_id).ok_or(StructError::UnknownChain(chain_id))?;
    let residues = slice_residues(chain, start, end)?;
    Ok(ProteinStructure {
        accession: structure.accession.clone(),
        source: structure.source,
        chains: vec![Chain { id: chain_id, residues }],
        fetched_at: structure.fetched_at,
    })
}

pub(crate) fn slice_residues(chain: &Chain, start: usize, end: usize) -> Result<Vec<Residue>, StructError> {
    let len = chain.len();
    if start > end || end >= len {
        return Err(StructError::OutOfRange { start, end, len });
    }
    Ok(chain.residues[start..=end].to_vec())
}
