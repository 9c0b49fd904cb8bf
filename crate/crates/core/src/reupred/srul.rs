use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ReupredError, MIN_UNIT_LEN};
use crate::align::CaTrace;
use crate::classify::{SubclassId, Taxonomy};
use crate::structmodel::synth::{build_backbone_seq, random_sequence, solenoid_unit, Torsions, SOLENOID_UNIT_SEQ};
use crate::structmodel::{parse_pdb, write_pdb, Chain, ProteinStructure, StructureSource, Vec3};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// One template unit of the structural repeat unit library.
#[derive(Debug, Clone, PartialEq)]
pub struct SrulEntry {
    pub unit_id: String,
    pub subclass: SubclassId,
    pub unit: Chain,
    pub trace: CaTrace,
}

impl SrulEntry {
    pub fn new(unit_id: &str, subclass: SubclassId, unit: Chain) -> Result<Self, ReupredError> {
        let trace = CaTrace::from_chain(&unit);
        if trace.len() < MIN_UNIT_LEN {
            return Err(ReupredError::UnitTooShort(unit_id.to_string(), trace.len()));
        }
        Ok(SrulEntry {
            unit_id: unit_id.to_string(),
            subclass,
            unit,
            trace,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Srul {
    pub entries: Vec<SrulEntry>,
}

impl Srul {
    pub fn new(entries: Vec<SrulEntry>) -> Result<Self, ReupredError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.unit_id.clone()) {
                return Err(ReupredError::DuplicateUnit(e.unit_id.clone()));
            }
        }
        Ok(Srul { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn subclasses(&self) -> BTreeSet<SubclassId> {
        self.entries.iter().map(|e| e.subclass.clone()).collect()
    }

    pub fn entry(&self, unit_id: &str) -> Option<&SrulEntry> {
        self.entries.iter().find(|e| e.unit_id == unit_id)
    }

    /// Entries whose subclass is in `filter`; an empty filter keeps everything.
    pub fn restricted(&self, filter: &BTreeSet<SubclassId>) -> Srul {
        Srul {
            entries: self
                .entries
                .iter()
                .filter(|e| filter.is_empty() || filter.contains(&e.subclass))
                .cloned()
                .collect(),
        }
    }

    /// Directory layout: `index.tsv` (`unit_id subclass filename`) plus one PDB per unit.
    pub fn load_dir(dir: &Path) -> Result<Srul, ReupredError> {
        let index = fs::read_to_string(dir.join("index.tsv"))?;
        let mut entries = Vec::new();
        for (lineno, line) in index.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(ReupredError::BadIndex(lineno + 1));
            }
            if cols[0] == "unit_id" {
                continue;
            }
            let subclass: SubclassId = cols[1].parse().map_err(|_| ReupredError::BadIndex(lineno + 1))?;
            let text = fs::read_to_string(dir.join(cols[2]))?;
            let structure = parse_pdb(&text)?;
            let chain = structure
                .chains
                .into_iter()
                .next()
                .ok_or(ReupredError::BadIndex(lineno + 1))?;
            entries.push(SrulEntry::new(cols[0], subclass, chain)?);
        }
        Srul::new(entries)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), ReupredError> {
        fs::create_dir_all(dir)?;
        let mut index = String::from("unit_id\tsubclass\tfilename\n");
        for e in &self.entries {
            let file = format!("{}.pdb", e.unit_id);
            let s = ProteinStructure {
                accession: e.unit_id.clone(),
                source: StructureSource::Pdb,
                chains: vec![e.unit.clone()],
                fetched_at: None,
            };
            fs::write(dir.join(&file), write_pdb(&s))?;
            let _ = writeln!(index, "{}\t{}\t{}", e.unit_id, e.subclass, file);
        }
        fs::write(dir.join("index.tsv"), index)?;
        Ok(())
    }

    /// Bundled desk-scale library: the fixture solenoid unit plus compact
    /// synthetic units for every subclass of the taxonomy.
    pub fn builtin() -> Srul {
        let taxonomy = Taxonomy::builtin();
        let mut entries = vec![SrulEntry::new(
            "syn_solenoid",
            "3.3".parse().expect("valid id"),
            build_backbone_seq('A', &solenoid_unit(), SOLENOID_UNIT_SEQ, 1),
        )
        .expect("unit long enough")];
        for (i, info) in taxonomy.subclasses.iter().enumerate() {
            for j in 0..BUILTIN_UNITS_PER_SUBCLASS {
                let seed = 1000 + (i * 100 + j) as u64;
                entries.push(
                    SrulEntry::new(
                        &format!("u{}_{}", info.id.to_string().replace('.', "_"), j + 1),
                        info.id.clone(),
                        compact_unit(20 + (j % 3) * 2, seed),
                    )
                    .expect("unit long enough"),
                );
            }
        }
        Srul::new(entries).expect("unique ids")
    }
}

const BUILTIN_UNITS_PER_SUBCLASS: usize = 3;

/// Radius of gyration of a CA trace.
pub fn radius_of_gyration(coords: &[Vec3]) -> f64 {
    let c = coords.iter().fold(Vec3::zeros(), |a, p| a + p) / coords.len() as f64;
    (coords.iter().map(|p| (p - c).norm_squared()).sum::<f64>() / coords.len() as f64).sqrt()
}

/// Helix-rich random unit, resampled until its CA radius of gyration is at
/// most 7.5 Å so it stays globular.
pub fn compact_unit(len: usize, seed: u64) -> Chain {
    let mut rng = StdRng::seed_from_u64(seed);
    loop {
        let torsions: Vec<Torsions> = (0..len)
            .map(|_| {
                let (phi, psi) = match rng.gen_range(0..10) {
                    0..=5 => (-63.0, -42.0),
                    6..=7 => (-120.0, 130.0),
                    8 => (-75.0, 145.0),
                    _ => (60.0, 40.0),
                };
                Torsions::new(phi + rng.gen_range(-20.0..20.0), psi + rng.gen_range(-20.0..20.0))
            })
            .collect();
        let chain = build_backbone_seq('A', &torsions, &random_sequence(len, rng.gen()), 1);
        let coords: Vec<Vec3> = chain.ca_trace().into_iter().map(|(_, p)| p).collect();
        if radius_of_gyration(&coords) <= 7.5 {
            return chain;
        }
    }
}

/// Restrict `library` to `filter`; `EmptyLibrary` when nothing is left.
pub fn load_srul(library: &Srul, filter: &BTreeSet<SubclassId>) -> Result<Srul, ReupredError> {
    let srul = library.restricted(filter);
    if srul.is_empty() {
        return Err(ReupredError::EmptyLibrary);
    }
    Ok(srul)
}
