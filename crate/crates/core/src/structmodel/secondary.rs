use serde::{Deserialize, Serialize};

use super::{Chain, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SsState {
    Helix,
    Strand,
    Coil,
}

impl SsState {
    pub fn code(self) -> char {
        match self {
            SsState::Helix => 'H',
            SsState::Strand => 'E',
            SsState::Coil => 'C',
        }
    }
}

/// Per-residue three-state annotation, one entry per residue of the chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecondaryStructure {
    pub states: Vec<SsState>,
}

impl SecondaryStructure {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn as_string(&self) -> String {
        self.states.iter().map(|s| s.code()).collect()
    }
}

const MIN_HELIX_RUN: usize = 4;
const MIN_STRAND_RUN: usize = 3;
const MAX_PEPTIDE_BOND: f64 = 2.0;

/// Signed dihedral angle in degrees for four points.
pub fn dihedral(p0: &Vec3, p1: &Vec3, p2: &Vec3, p3: &Vec3) -> f64 {
    let b0 = p0 - p1;
    let b1 = p2 - p1;
    let b2 = p3 - p2;
    let b1n = b1.normalize();
    let v = b0 - b1n * b0.dot(&b1n);
    let w = b2 - b1n * b2.dot(&b1n);
    let x = v.dot(&w);
    let y = b1n.cross(&v).dot(&w);
    y.atan2(x).to_degrees()
}

fn is_helical(phi: f64, psi: f64) -> bool {
    (-90.0..=-30.0).contains(&phi) && (-77.0..=-17.0).contains(&psi)
}

fn is_extended(phi: f64, psi: f64) -> bool {
    (-170.0..=-80.0).contains(&phi) && ((80.0..=180.0).contains(&psi) || (-180.0..=-170.0).contains(&psi))
}

type Backbone = (Vec3, Vec3, Vec3);

fn backbone(chain: &Chain) -> Vec<Option<Backbone>> {
    chain
        .residues
        .iter()
        .map(|r| Some((r.atom("N")?.position, r.atom("CA")?.position, r.atom("C")?.position)))
        .collect()
}

/// Dihedral-window classifier: runs of helical (φ, ψ) of length ≥ 4 become
/// `H`, runs of extended (φ, ψ) of length ≥ 3 become `E`, everything else `C`.
///
/// Chains with fewer than three residues carrying N, CA and C are all coil.
pub fn assign_secondary_structure(chain: &Chain) -> SecondaryStructure {
    let n = chain.len();
    let mut states = vec![SsState::Coil; n];
    let bb = backbone(chain);
    if bb.iter().filter(|b| b.is_some()).count() < 3 {
        return SecondaryStructure { states };
    }

    let mut raw = vec![SsState::Coil; n];
    for i in 1..n.saturating_sub(1) {
        let (Some(prev), Some(cur), Some(next)) = (bb[i - 1], bb[i], bb[i + 1]) else {
            continue;
        };
        if (cur.0 - prev.2).norm() > MAX_PEPTIDE_BOND || (next.0 - cur.2).norm() > MAX_PEPTIDE_BOND {
            continue;
        }
        let phi = dihedral(&prev.2, &cur.0, &cur.1, &cur.2);
        let psi = dihedral(&cur.0, &cur.1, &cur.2, &next.0);
        raw[i] = if is_helical(phi, psi) {
            SsState::Helix
        } else if is_extended(phi, psi) {
            SsState::Strand
        } else {
            SsState::Coil
        };
    }

    let mut i = 0;
    while i < n {
        let state = raw[i];
        let mut j = i;
        while j < n && raw[j] == state {
            j += 1;
        }
        let min = match state {
            SsState::Helix => MIN_HELIX_RUN,
            SsState::Strand => MIN_STRAND_RUN,
            SsState::Coil => usize::MAX,
        };
        if j - i >= min {
            states[i..j].fill(state);
        }
        i = j;
    }
    SecondaryStructure { states }
}
