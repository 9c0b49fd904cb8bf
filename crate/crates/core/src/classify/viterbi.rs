use serde::{Deserialize, Serialize};

use super::hmm::{residue_index, ProfileHmm, ALPHABET, T_DD, T_DM, T_II, T_IM, T_MD, T_MI, T_MM};

/// A profile hit on one chain; envelope indices are residue order indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyHit {
    pub family_accession: String,
    pub chain_id: char,
    pub env_start: usize,
    pub env_end: usize,
    pub bit_score: f64,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    score: f64,
    start: usize,
}

const NONE: Cell = Cell {
    score: f64::NEG_INFINITY,
    start: 0,
};

fn best(a: Cell, b: Cell) -> Cell {
    if b.score > a.score {
        b
    } else {
        a
    }
}

fn step(c: Cell, t: f64) -> Cell {
    Cell {
        score: c.score + t,
        start: c.start,
    }
}

/// Map residues to emission columns; X and unknown letters become `None`.
pub fn encode(seq: &str) -> Vec<Option<usize>> {
    debug_assert_eq!(ALPHABET.len(), 20);
    seq.chars().map(residue_index).collect()
}

/// Best local alignment of `seq` to `profile`: (score in bits, first residue, last residue).
///
/// Paths may begin at any match state on any residue and end after any match
/// state. Inserts and unknown residues score as background (0 bits).
pub fn viterbi_local(profile: &ProfileHmm, seq: &[Option<usize>]) -> Option<(f64, usize, usize)> {
    let m = profile.len();
    if m == 0 || seq.is_empty() {
        return None;
    }
    let emit = |k: usize, x: Option<usize>| x.map_or(0.0, |r| profile.match_emissions[k][r]);
    let t = &profile.transitions;

    let mut prev_m = vec![NONE; m];
    let mut prev_i = vec![NONE; m];
    let mut prev_d = vec![NONE; m];
    let mut top: Option<(f64, usize, usize)> = None;

    for (i, &x) in seq.iter().enumerate() {
        let mut cur_m = vec![NONE; m];
        let mut cur_i = vec![NONE; m];
        let mut cur_d = vec![NONE; m];
        for k in 0..m {
            let mut from = Cell { score: 0.0, start: i };
            if k > 0 {
                from = best(from, step(prev_m[k - 1], t[k - 1][T_MM]));
                from = best(from, step(prev_i[k - 1], t[k - 1][T_IM]));
                from = best(from, step(prev_d[k - 1], t[k - 1][T_DM]));
            }
            cur_m[k] = step(from, emit(k, x));
            cur_i[k] = best(step(prev_m[k], t[k][T_MI]), step(prev_i[k], t[k][T_II]));
            if k > 0 {
                cur_d[k] = best(step(cur_m[k - 1], t[k - 1][T_MD]), step(cur_d[k - 1], t[k - 1][T_DD]));
            }
        }
        for cell in &cur_m {
            if cell.score.is_finite() && top.is_none_or(|(b, _, _)| cell.score > b) {
                top = Some((cell.score, cell.start, i));
            }
        }
        prev_m = cur_m;
        prev_i = cur_i;
        prev_d = cur_d;
    }
    top
}

/// Scan one sequence against every profile; hits at or above `bit_threshold`,
/// best first.
pub fn scan_sequence(chain_id: char, seq: &str, library: &[ProfileHmm], bit_threshold: f64) -> Vec<FamilyHit> {
    let encoded = encode(seq);
    let mut hits: Vec<FamilyHit> = library
        .iter()
        .filter_map(|p| {
            let (score, start, end) = viterbi_local(p, &encoded)?;
            (score >= bit_threshold).then(|| FamilyHit {
                family_accession: p.accession.clone(),
                chain_id,
                env_start: start,
                env_end: end,
                bit_score: score,
            })
        })
        .collect();
    hits.sort_by(|a, b| {
        b.bit_score
            .total_cmp(&a.bit_score)
            .then_with(|| a.family_accession.cmp(&b.family_accession))
    });
    hits
}
