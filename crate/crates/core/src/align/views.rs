use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::kabsch::kabsch_superpose;
use super::search::{structural_search, CaTrace, LevelParams, SearchCounter, StructuralAlignment};
use super::AlignError;

/// One unit as seen by the region views: local residue indices start at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewUnit {
    pub id: String,
    pub trace: CaTrace,
    pub sequence: Vec<char>,
    pub secondary: Vec<char>,
}

/// Pairwise post-superposition RMSD between units (Å).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    /// Mean of the strict upper triangle.
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.size();
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += self.values[i][j];
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("unit");
        for l in &self.labels {
            out.push('\t');
            out.push_str(l);
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.values) {
            out.push_str(label);
            for v in row {
                let _ = write!(out, "\t{v:.3}");
            }
            out.push('\n');
        }
        out
    }
}

/// Superpose two units on their CA sets paired by order, truncated to the shorter.
pub fn pair_rmsd(a: &CaTrace, b: &CaTrace) -> Result<f64, AlignError> {
    let n = a.len().min(b.len());
    Ok(kabsch_superpose(&a.coords[..n], &b.coords[..n])?.rmsd)
}

pub fn unit_similarity_matrix(units: &[ViewUnit]) -> Result<SimilarityMatrix, AlignError> {
    if units.len() < 2 {
        return Err(AlignError::TooFewUnits(units.len()));
    }
    let n = units.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let r = pair_rmsd(&units[i].trace, &units[j].trace)?;
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(SimilarityMatrix {
        labels: units.iter().map(|u| u.id.clone()).collect(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub unit_id: String,
    pub sequence: String,
    pub secondary: String,
    /// (unit residue index, master residue index)
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentViews {
    pub master_id: String,
    pub rows: Vec<AlignmentRow>,
    pub average_rmsd: f64,
    pub matrix: SimilarityMatrix,
}

impl AlignmentViews {
    /// Plain-text block: sequence rows, then secondary-structure rows.
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.unit_id.len()).max().unwrap_or(4).max(4);
        let mut out = String::new();
        let _ = writeln!(out, "# master {}", self.master_id);
        let _ = writeln!(out, "# average_rmsd {:.3}", self.average_rmsd);
        out.push_str("# sequence\n");
        for row in &self.rows {
            let _ = writeln!(out, "{:<width$}  {}", row.unit_id, row.sequence);
        }
        out.push_str("# secondary_structure\n");
        for row in &self.rows {
            let _ = writeln!(out, "{:<width$}  {}", row.unit_id, row.secondary);
        }
        out
    }
}

/// Pair map of `unit` onto `master`, falling back to order pairing when no
/// placement with three or more pairs exists.
pub fn map_to_master(unit: &ViewUnit, master: &ViewUnit) -> Vec<(usize, usize)> {
    if unit.id == master.id {
        return master.trace.indices.iter().map(|&i| (i, i)).collect();
    }
    let mut scratch = SearchCounter::new();
    structural_search(&unit.trace, &master.trace, &LevelParams::permissive(), 0, &mut scratch)
        .map(|a: StructuralAlignment| a.pairs)
        .unwrap_or_else(|| {
            unit.trace
                .indices
                .iter()
                .zip(&master.trace.indices)
                .map(|(&u, &m)| (u, m))
                .collect()
        })
}

fn render(pairs: &[(usize, usize)], master_len: usize, symbols: &[char]) -> String {
    let mut row = vec!['-'; master_len];
    for &(u, m) in pairs {
        if let (Some(slot), Some(&c)) = (row.get_mut(m), symbols.get(u)) {
            *slot = c;
        }
    }
    row.into_iter().collect()
}

/// Master-anchored sequence and secondary-structure rows plus the region's
/// average pairwise RMSD.
pub fn region_alignment_views(units: &[ViewUnit], master_index: usize) -> Result<AlignmentViews, AlignError> {
    let master = units.get(master_index).ok_or(AlignError::MasterNotInUnits)?;
    let matrix = unit_similarity_matrix(units)?;
    let master_len = master.sequence.len();
    let rows = units
        .iter()
        .map(|unit| {
            let pairs = map_to_master(unit, master);
            AlignmentRow {
                unit_id: unit.id.clone(),
                sequence: render(&pairs, master_len, &unit.sequence),
                secondary: render(&pairs, master_len, &unit.secondary),
                pairs,
            }
        })
        .collect();
    Ok(AlignmentViews {
        master_id: master.id.clone(),
        rows,
        average_rmsd: matrix.mean_off_diagonal(),
        matrix,
    })
}
