use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::detector::{RegionResult, UnitOrigin};
use super::ReupredError;
use crate::align::kabsch_superpose;
use crate::classify::SubclassId;
use crate::structmodel::{write_pdb, write_pdb_models, Chain, ProteinStructure, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestUnit {
    pub file: String,
    pub start: usize,
    pub end: usize,
    /// Author residue numbers of the first and last residue.
    pub first_residue: i32,
    pub last_residue: i32,
    pub template_id: String,
    pub origin: UnitOrigin,
    pub rmsd: f64,
}

/// Machine-readable summary written next to a region's files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionManifest {
    pub accession: String,
    pub chain_id: char,
    pub region_id: String,
    pub classification: SubclassId,
    pub relaxation_level: usize,
    pub rule_satisfied: super::ProximityRule,
    pub average_rmsd: f64,
    pub anchor_unit: String,
    pub units: Vec<ManifestUnit>,
    pub files: Vec<String>,
}

fn unit_structure(structure: &ProteinStructure, chain: &Chain, start: usize, end: usize) -> ProteinStructure {
    ProteinStructure {
        accession: structure.accession.clone(),
        source: structure.source,
        chains: vec![Chain {
            id: chain.id,
            residues: chain.residues[start..=end].to_vec(),
        }],
        fetched_at: None,
    }
}

fn ca(chain: &Chain, index: usize) -> Option<Vec3> {
    chain.residues.get(index).and_then(|r| r.ca()).map(|a| a.position)
}

/// Write unit PDBs, the superposed multi-model PDB, the alignment text, the
/// similarity matrix and a manifest into `dir/<region_id>/`.
pub fn emit_region_outputs(
    dir: &Path,
    structure: &ProteinStructure,
    region: &RegionResult,
) -> Result<PathBuf, ReupredError> {
    let chain = structure
        .chain(region.chain_id)
        .ok_or(crate::structmodel::StructError::UnknownChain(region.chain_id))?;
    let out = dir.join(&region.region_id);
    fs::create_dir_all(&out)?;

    let anchor = &region.units[region.anchor];
    let mut files = Vec::new();
    let mut units = Vec::new();
    let mut models = Vec::new();
    for (i, unit) in region.units.iter().enumerate() {
        let file = format!("unit_{}.pdb", i + 1);
        let mut piece = unit_structure(structure, chain, unit.start, unit.end);
        fs::write(out.join(&file), write_pdb(&piece))?;

        let pairs = &region.views.rows[i].pairs;
        let (mobile, target): (Vec<Vec3>, Vec<Vec3>) = pairs
            .iter()
            .filter_map(|&(u, m)| Some((ca(chain, unit.start + u)?, ca(chain, anchor.start + m)?)))
            .unzip();
        if let Ok(sup) = kabsch_superpose(&mobile, &target) {
            for atom in piece
                .chains
                .iter_mut()
                .flat_map(|c| c.residues.iter_mut())
                .flat_map(|r| r.atoms.iter_mut())
            {
                atom.position = sup.apply(&atom.position);
            }
        }
        models.push(piece);

        units.push(ManifestUnit {
            file: file.clone(),
            start: unit.start,
            end: unit.end,
            first_residue: chain.residues[unit.start].seq_num,
            last_residue: chain.residues[unit.end].seq_num,
            template_id: unit.template_id.clone(),
            origin: unit.origin,
            rmsd: unit.rmsd,
        });
        files.push(file);
    }

    fs::write(out.join("aligned_units.pdb"), write_pdb_models(&models))?;
    fs::write(out.join("alignment.txt"), region.views.to_text())?;
    fs::write(out.join("matrix.tsv"), region.views.matrix.to_tsv())?;
    files.extend(["aligned_units.pdb", "alignment.txt", "matrix.tsv", "manifest.json"].map(String::from));

    let manifest = RegionManifest {
        accession: structure.accession.clone(),
        chain_id: region.chain_id,
        region_id: region.region_id.clone(),
        classification: region.classification.clone(),
        relaxation_level: region.relaxation_level,
        rule_satisfied: region.rule_satisfied,
        average_rmsd: region.average_rmsd,
        anchor_unit: region.views.master_id.clone(),
        units,
        files,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| ReupredError::Io(e.to_string()))?;
    fs::write(out.join("manifest.json"), json + "\n")?;
    Ok(out)
}
