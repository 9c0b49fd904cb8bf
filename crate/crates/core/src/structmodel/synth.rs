//! Backbone construction from torsion angles.
//!
//! Used for the offline fixtures and the bundled unit library: repeating a
//! torsion pattern yields copies that are exact rigid images of each other,
//! which gives repeat structures with a known ground truth.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::{one_to_three, Atom, Chain, Residue, Vec3};

const N_CA: f64 = 1.458;
const CA_C: f64 = 1.525;
const C_N: f64 = 1.329;
const C_O: f64 = 1.231;
const ANGLE_N_CA_C: f64 = 111.2;
const ANGLE_CA_C_N: f64 = 116.2;
const ANGLE_C_N_CA: f64 = 121.7;
const ANGLE_CA_C_O: f64 = 120.5;

/// Backbone torsions of one residue, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Torsions {
    pub phi: f64,
    pub psi: f64,
    pub omega: f64,
}

impl Torsions {
    pub const HELIX: Torsions = Torsions {
        phi: -57.0,
        psi: -47.0,
        omega: 180.0,
    };
    pub const EXTENDED: Torsions = Torsions {
        phi: -139.0,
        psi: 135.0,
        omega: 180.0,
    };

    pub const fn new(phi: f64, psi: f64) -> Self {
        Torsions { phi, psi, omega: 180.0 }
    }
}

/// Place a fourth atom from three predecessors (natural extension reference frame).
fn place(a: &Vec3, b: &Vec3, c: &Vec3, bond: f64, angle_deg: f64, torsion_deg: f64) -> Vec3 {
    let angle = angle_deg.to_radians();
    let torsion = torsion_deg.to_radians();
    let bc = (c - b).normalize();
    let n = (b - a).cross(&bc).normalize();
    let m = n.cross(&bc);
    let d = Vec3::new(
        -bond * angle.cos(),
        bond * angle.sin() * torsion.cos(),
        bond * angle.sin() * torsion.sin(),
    );
    c + bc * d.x + m * d.y + n * d.z
}

fn atom(serial: &mut u32, name: &str, element: &str, position: Vec3) -> Atom {
    *serial += 1;
    Atom {
        serial: *serial,
        name: name.to_string(),
        element: element.to_string(),
        position,
        occupancy: 1.0,
        temp_factor: 0.0,
    }
}

/// N, CA, C, O backbone for `torsions.len()` alanines, numbered from `first_seq`.
pub fn build_backbone(chain_id: char, torsions: &[Torsions], first_seq: i32) -> Chain {
    let seq = "A".repeat(torsions.len());
    build_backbone_seq(chain_id, torsions, &seq, first_seq)
}

/// Like [`build_backbone`] with residue names taken from a one-letter sequence.
pub fn build_backbone_seq(chain_id: char, torsions: &[Torsions], seq: &str, first_seq: i32) -> Chain {
    let codes: Vec<char> = seq.chars().collect();
    assert_eq!(codes.len(), torsions.len(), "sequence and torsion lengths differ");
    let mut residues = Vec::with_capacity(torsions.len());
    let mut serial = 0u32;
    let mut prev: Option<(Vec3, Vec3, Vec3)> = None;

    for (i, t) in torsions.iter().enumerate() {
        let (n, ca, c) = match prev {
            None => {
                let n = Vec3::zeros();
                let ca = Vec3::new(N_CA, 0.0, 0.0);
                let angle = (180.0 - ANGLE_N_CA_C).to_radians();
                let c = ca + Vec3::new(CA_C * angle.cos(), CA_C * angle.sin(), 0.0);
                (n, ca, c)
            }
            Some((pn, pca, pc)) => {
                let pt = torsions[i - 1];
                let n = place(&pn, &pca, &pc, C_N, ANGLE_CA_C_N, pt.psi);
                let ca = place(&pca, &pc, &n, N_CA, ANGLE_C_N_CA, pt.omega);
                let c = place(&pc, &n, &ca, CA_C, ANGLE_N_CA_C, t.phi);
                (n, ca, c)
            }
        };
        let o = place(&n, &ca, &c, C_O, ANGLE_CA_C_O, t.psi + 180.0);
        let mut residue = Residue::new(first_seq + i as i32, None, one_to_three(codes[i]));
        residue.atoms = vec![
            atom(&mut serial, "N", "N", n),
            atom(&mut serial, "CA", "C", ca),
            atom(&mut serial, "C", "C", c),
            atom(&mut serial, "O", "O", o),
        ];
        residues.push(residue);
        prev = Some((n, ca, c));
    }
    Chain { id: chain_id, residues }
}

const HYDROPHOBIC: &[char] = &['A', 'V', 'L', 'I', 'F', 'M'];
const POLAR: &[char] = &['S', 'T', 'N', 'Q', 'D', 'E', 'K', 'R', 'G', 'P', 'H', 'Y', 'W', 'C'];

/// Random Ramachandran-plausible torsions (helix, strand, PPII, αL basins).
pub fn random_torsions(len: usize, seed: u64) -> Vec<Torsions> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let (phi, psi) = match rng.gen_range(0..10) {
                0..=3 => (-63.0, -42.0),
                4..=6 => (-120.0, 130.0),
                7..=8 => (-75.0, 145.0),
                _ => (60.0, 40.0),
            };
            Torsions::new(phi + rng.gen_range(-15.0..15.0), psi + rng.gen_range(-15.0..15.0))
        })
        .collect()
}

pub fn random_sequence(len: usize, seed: u64) -> String {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed_5eed);
    (0..len)
        .map(|_| {
            let pool = if rng.gen_bool(0.4) { HYDROPHOBIC } else { POLAR };
            pool[rng.gen_range(0..pool.len())]
        })
        .collect()
}

/// Designed 20-residue repeat motif: helix, tight turn, strand, loop.
pub fn solenoid_unit() -> Vec<Torsions> {
    let mut t = vec![Torsions::HELIX; 8];
    t.extend([
        Torsions::new(-90.0, 0.0),
        Torsions::new(70.0, 30.0),
        Torsions::new(-100.0, 150.0),
    ]);
    t.extend(vec![Torsions::new(-120.0, 130.0); 5]);
    t.extend([
        Torsions::new(-70.0, 140.0),
        Torsions::new(-60.0, -30.0),
        Torsions::new(-90.0, 10.0),
        Torsions::new(80.0, 10.0),
    ]);
    t
}

pub const SOLENOID_UNIT_SEQ: &str = "AEELLKKALGNKVTVKPEDG";

/// Chain of `copies` tandem repeats of `unit`, flanked by `cap`-residue termini.
pub fn tandem_chain(chain_id: char, unit: &[Torsions], unit_seq: &str, copies: usize, cap: usize) -> Chain {
    let mut torsions = vec![Torsions::new(-75.0, 145.0); cap];
    let mut seq = "S".repeat(cap);
    for _ in 0..copies {
        torsions.extend_from_slice(unit);
        seq.push_str(unit_seq);
    }
    torsions.extend(vec![Torsions::new(-75.0, 145.0); cap]);
    seq.push_str(&"S".repeat(cap));
    build_backbone_seq(chain_id, &torsions, &seq, 1)
}

/// Two tandem blocks joined by a non-repetitive linker.
pub fn two_block_chain(
    chain_id: char,
    unit: &[Torsions],
    unit_seq: &str,
    copies_per_block: usize,
    linker: &[Torsions],
) -> Chain {
    let mut torsions = Vec::new();
    let mut seq = String::new();
    for block in 0..2 {
        for _ in 0..copies_per_block {
            torsions.extend_from_slice(unit);
            seq.push_str(unit_seq);
        }
        if block == 0 {
            torsions.extend_from_slice(linker);
            seq.push_str(&"G".repeat(linker.len()));
        }
    }
    build_backbone_seq(chain_id, &torsions, &seq, 1)
}

/// Non-repetitive decoy: a straight, slightly perturbed extended chain whose
/// windows are far too elongated to superpose on compact repeat units.
pub fn decoy_torsions(len: usize, seed: u64) -> Vec<Torsions> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..len)
        .map(|_| Torsions::new(-139.0 + rng.gen_range(-8.0..8.0), 135.0 + rng.gen_range(-8.0..8.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bond_geometry() {
        let chain = build_backbone('A', &random_torsions(15, 3), 1);
        for w in chain.residues.windows(2) {
            let c = w[0].atom("C").unwrap().position;
            let n = w[1].atom("N").unwrap().position;
            assert!(((n - c).norm() - C_N).abs() < 1e-9);
            let ca = w[1].ca().unwrap().position;
            assert!(((ca - n).norm() - N_CA).abs() < 1e-9);
        }
    }

    #[test]
    fn consecutive_ca_spacing() {
        let chain = build_backbone('A', &[Torsions::EXTENDED; 6], 1);
        let trace = chain.ca_trace();
        for w in trace.windows(2) {
            let d = (w[1].1 - w[0].1).norm();
            assert!((3.7..3.9).contains(&d), "CA-CA distance {d}");
        }
    }
}
