use std::fmt::Write as _;

use super::{Atom, Chain, ProteinStructure, Residue, StructError, StructureSource, Vec3};

fn field(line: &str, start: usize, end: usize) -> &str {
    // 1-based inclusive column range; short lines yield empty/partial fields
    let bytes = line.as_bytes();
    let s = (start - 1).min(bytes.len());
    let e = end.min(bytes.len());
    line.get(s..e).unwrap_or("")
}

fn column_char(line: &str, col: usize) -> Option<char> {
    line.as_bytes().get(col - 1).map(|&b| b as char)
}

fn infer_element(name: &str) -> String {
    name.chars()
        .find(|c| c.is_ascii_alphabetic())
        .map(|c| c.to_string())
        .unwrap_or_default()
}

/// Parse the fixed-column ATOM subset of a PDB file.
///
/// Only the first model is read. Alternate locations other than blank/`A`
/// are dropped. A `TER` record or a change of chain identifier closes the
/// current chain.
pub fn parse_pdb(text: &str) -> Result<ProteinStructure, StructError> {
    let mut accession = String::new();
    let mut source = StructureSource::Pdb;
    let mut chains: Vec<Chain> = Vec::new();
    let mut current: Option<Chain> = None;
    let mut fallback_serial = 0u32;

    let close = |current: &mut Option<Chain>, chains: &mut Vec<Chain>| {
        if let Some(chain) = current.take() {
            if chain.residues.is_empty() {
                return;
            }
            match chains.iter_mut().find(|c| c.id == chain.id) {
                Some(existing) => existing.residues.extend(chain.residues),
                None => chains.push(chain),
            }
        }
    };

    for (lineno, line) in text.lines().enumerate() {
        let record = field(line, 1, 6).trim_end();
        match record {
            "HEADER" => {
                accession = field(line, 63, 66).trim().to_string();
                if line.to_ascii_uppercase().contains("ALPHAFOLD") {
                    source = StructureSource::Alphafold;
                }
            }
            "TITLE" | "REMARK" | "SOURCE" | "EXPDTA" => {
                if line.to_ascii_uppercase().contains("ALPHAFOLD") {
                    source = StructureSource::Alphafold;
                }
            }
            "ENDMDL" => break,
            "TER" => close(&mut current, &mut chains),
            "ATOM" => {
                let altloc = column_char(line, 17).unwrap_or(' ');
                if altloc != ' ' && altloc != 'A' {
                    continue;
                }
                let coord = |a, b| {
                    field(line, a, b)
                        .trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or(StructError::MalformedLine(lineno + 1))
                };
                let position = Vec3::new(coord(31, 38)?, coord(39, 46)?, coord(47, 54)?);
                let seq_num: i32 = field(line, 23, 26)
                    .trim()
                    .parse()
                    .map_err(|_| StructError::MalformedLine(lineno + 1))?;
                fallback_serial += 1;
                let serial = field(line, 7, 11)
                    .trim()
                    .parse::<u32>()
                    .ok()
                    .filter(|&s| s >= 1)
                    .unwrap_or(fallback_serial);
                let name = field(line, 13, 16).trim().to_string();
                let res_name = field(line, 18, 20).trim();
                let chain_id = column_char(line, 22).unwrap_or(' ');
                let icode = column_char(line, 27).filter(|c| *c != ' ');
                let occupancy = field(line, 55, 60).trim().parse().unwrap_or(1.0);
                let temp_factor = field(line, 61, 66).trim().parse().unwrap_or(0.0);
                let element = match field(line, 77, 78).trim() {
                    "" => infer_element(&name),
                    e => e.to_string(),
                };

                if current.as_ref().is_some_and(|c| c.id != chain_id) {
                    close(&mut current, &mut chains);
                }
                let chain = current.get_or_insert_with(|| Chain {
                    id: chain_id,
                    residues: Vec::new(),
                });
                let same_residue = chain
                    .residues
                    .last()
                    .is_some_and(|r| r.seq_num == seq_num && r.insertion_code == icode && r.name3 == res_name);
                if !same_residue {
                    chain.residues.push(Residue::new(seq_num, icode, res_name));
                }
                let residue = chain.residues.last_mut().expect("residue pushed above");
                if residue.atom(&name).is_some() {
                    // duplicate atom name (e.g. second altloc written as blank)
                    continue;
                }
                residue.atoms.push(Atom {
                    serial,
                    name,
                    element,
                    position,
                    occupancy,
                    temp_factor,
                });
            }
            _ => {}
        }
    }
    close(&mut current, &mut chains);

    if chains.is_empty() {
        return Err(StructError::NoAtoms);
    }
    Ok(ProteinStructure {
        accession,
        source,
        chains,
        fetched_at: None,
    })
}

fn atom_name_field(name: &str) -> String {
    if name.len() >= 4 {
        name[..4].to_string()
    } else {
        format!(" {name:<3}")
    }
}

fn write_chains(out: &mut String, chains: &[Chain], serial: &mut u32) {
    for chain in chains {
        let mut last: Option<&Residue> = None;
        for residue in &chain.residues {
            for atom in &residue.atoms {
                *serial = atom.serial;
                let _ = writeln!(
                    out,
                    "ATOM  {:>5} {} {:>3} {}{:>4}{}   {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}",
                    atom.serial % 100_000,
                    atom_name_field(&atom.name),
                    residue.name3,
                    chain.id,
                    residue.seq_num,
                    residue.insertion_code.unwrap_or(' '),
                    atom.position.x,
                    atom.position.y,
                    atom.position.z,
                    atom.occupancy,
                    atom.temp_factor,
                    atom.element,
                );
            }
            last = Some(residue);
        }
        if let Some(r) = last {
            *serial += 1;
            let _ = writeln!(
                out,
                "TER   {:>5}      {:>3} {}{:>4}{}",
                *serial % 100_000,
                r.name3,
                chain.id,
                r.seq_num,
                r.insertion_code.unwrap_or(' ')
            );
        }
    }
}

fn header_line(structure: &ProteinStructure) -> String {
    let title = match structure.source {
        StructureSource::Alphafold => "ALPHAFOLD MODEL",
        StructureSource::Pdb => "PROTEIN",
    };
    format!("HEADER    {:<40}{:>9}   {:<4}", title, "", structure.accession)
}

/// Render a structure as fixed-column ATOM records (3-decimal coordinates).
pub fn write_pdb(structure: &ProteinStructure) -> String {
    let mut out = header_line(structure);
    out.push('\n');
    let mut serial = 0;
    write_chains(&mut out, &structure.chains, &mut serial);
    out.push_str("END\n");
    out
}

/// Several structures as consecutive MODEL blocks in one file.
pub fn write_pdb_models(models: &[ProteinStructure]) -> String {
    let mut out = String::new();
    for (i, model) in models.iter().enumerate() {
        let _ = writeln!(out, "MODEL     {:>4}", i + 1);
        let mut serial = 0;
        write_chains(&mut out, &model.chains, &mut serial);
        out.push_str("ENDMDL\n");
    }
    out.push_str("END\n");
    out
}
