//! Offline fixture catalog: synthetic structures and one synthetic proteome
//! that can be served without any network access.

use crate::fixtures;
use crate::structmodel::{write_pdb, ProteinStructure, StructureSource};

use super::{AccessionKind, AccessionRef};

pub const FIXTURE_PROTEOME: &str = "UP999999901";

/// (component name, UniProt accession, PDB ids, AlphaFold model available)
const COMPONENTS: [(&str, &str, &[&str], bool); 5] = [
    ("Synthetic solenoid repeat protein", "Q0SYN1", &["9SY1"], true),
    ("Synthetic two-block repeat protein", "Q0SYN2", &["9SY2"], false),
    ("Synthetic extended decoy protein", "Q0SYN3", &["9SY3"], true),
    ("Predicted solenoid repeat protein", "Q0SYN4", &[], true),
    ("Predicted extended decoy protein", "Q0SYN5", &[], true),
];

fn build(value: &str) -> Option<ProteinStructure> {
    use StructureSource::{Alphafold, Pdb};
    let s = match value {
        "SYN1" | "9SY1" | "Q0SYN1" => fixtures::solenoid(value, Pdb),
        "SYN2" | "9SY2" | "Q0SYN2" => fixtures::two_block(value, Pdb),
        "SYN3" | "9SY3" | "Q0SYN3" => fixtures::decoy(value, Pdb),
        "Q0SYN4" => {
            let mut s = fixtures::solenoid(value, Alphafold);
            s.chains[0] = fixtures::solenoid_chain('A', 5);
            s
        }
        "Q0SYN5" => fixtures::decoy(value, Alphafold),
        _ => return None,
    };
    Some(s)
}

/// PDB text of a fixture structure, if the accession is in the catalog.
pub fn fixture_structure(r: &AccessionRef) -> Option<String> {
    let mut s = match r.kind {
        AccessionKind::ProteomeId => return None,
        _ => build(&r.value)?,
    };
    if r.kind == AccessionKind::UniprotAcc {
        s.source = StructureSource::Alphafold;
    }
    Some(write_pdb(&s))
}

/// Proteome listing in the same TSV layout the UniProt endpoint returns.
pub fn fixture_proteome(proteome_id: &str) -> Option<String> {
    if proteome_id != FIXTURE_PROTEOME {
        return None;
    }
    let mut out = String::from("Entry\tProtein names\tPDB\tAlphaFoldDB\n");
    for (name, acc, pdb, af) in COMPONENTS {
        let pdb: String = pdb.iter().map(|p| format!("{p};")).collect();
        let af = if af { format!("{acc};") } else { String::new() };
        out.push_str(&format!("{acc}\t{name}\t{pdb}\t{af}\n"));
    }
    Some(out)
}

/// Every structure accession the catalog can serve.
pub fn fixture_accessions() -> Vec<AccessionRef> {
    let mut out: Vec<AccessionRef> = ["SYN1", "SYN2", "SYN3"]
        .iter()
        .map(|v| AccessionRef {
            kind: AccessionKind::Synthetic,
            value: v.to_string(),
        })
        .collect();
    out.extend(["9SY1", "9SY2", "9SY3"].map(AccessionRef::pdb));
    out.extend(["Q0SYN4", "Q0SYN5"].map(AccessionRef::uniprot));
    out
}
