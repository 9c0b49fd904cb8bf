use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::kabsch::kabsch_superpose;
use crate::structmodel::{Chain, Vec3};

/// Maximum per-end shift explored when refining a seed window.
pub const MAX_END_SHIFT: isize = 2;

/// Scores closer than this are treated as equal before tie-breaking.
pub const SCORE_EPS: f64 = 1e-9;

/// CA coordinates of a structure segment with their residue order indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CaTrace {
    pub indices: Vec<usize>,
    pub coords: Vec<Vec3>,
}

impl CaTrace {
    pub fn from_chain(chain: &Chain) -> Self {
        let (indices, coords) = chain.ca_trace().into_iter().unzip();
        CaTrace { indices, coords }
    }

    /// Sub-trace covering residue order indices `start..=end`.
    pub fn span(&self, start: usize, end: usize) -> Self {
        let (indices, coords) = self
            .indices
            .iter()
            .zip(&self.coords)
            .filter(|(i, _)| (start..=end).contains(*i))
            .map(|(i, c)| (*i, *c))
            .unzip();
        CaTrace { indices, coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// One relaxation level of the structural filters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelParams {
    pub rmsd_cutoff: f64,
    pub min_coverage: f64,
}

impl LevelParams {
    pub fn permissive() -> Self {
        LevelParams {
            rmsd_cutoff: f64::INFINITY,
            min_coverage: 0.0,
        }
    }
}

/// Per-run count of structural search invocations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchCounter {
    calls: u64,
}

impl SearchCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    fn bump(&mut self) {
        self.calls += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralAlignment {
    /// (query residue index, template residue index), strictly increasing in both.
    pub pairs: Vec<(usize, usize)>,
    pub rmsd: f64,
    pub coverage: f64,
    pub score: f64,
}

impl StructuralAlignment {
    pub fn query_start(&self) -> usize {
        self.pairs.first().map(|p| p.0).unwrap_or(0)
    }

    pub fn query_end(&self) -> usize {
        self.pairs.last().map(|p| p.0).unwrap_or(0)
    }

    /// Number of query residues between the first and last paired residue.
    pub fn query_span(&self) -> usize {
        if self.pairs.is_empty() {
            0
        } else {
            self.query_end() - self.query_start() + 1
        }
    }
}

/// Placement of the template on the query: start offset `s` and independent
/// shifts for the N-terminal (`a`) and C-terminal (`b`) halves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub start: isize,
    pub n_shift: isize,
    pub c_shift: isize,
}

/// Positions (query trace index, template trace index) paired by a placement.
pub fn placement_pairs(placement: Placement, query_len: usize, template_len: usize) -> Vec<(usize, usize)> {
    let half = template_len / 2;
    let mut pairs = Vec::with_capacity(template_len);
    let mut last: isize = -1;
    for k in 0..template_len {
        let shift = if k < half { placement.n_shift } else { placement.c_shift };
        let q = placement.start + shift + k as isize;
        if q < 0 || q >= query_len as isize || q <= last {
            continue;
        }
        last = q;
        pairs.push((q as usize, k));
    }
    pairs
}

/// Score an explicit placement; `None` when it pairs fewer than three residues.
pub fn evaluate_placement(query: &CaTrace, template: &CaTrace, placement: Placement) -> Option<StructuralAlignment> {
    let pos = placement_pairs(placement, query.len(), template.len());
    if pos.len() < 3 {
        return None;
    }
    let q: Vec<Vec3> = pos.iter().map(|&(i, _)| query.coords[i]).collect();
    let t: Vec<Vec3> = pos.iter().map(|&(_, k)| template.coords[k]).collect();
    let rmsd = kabsch_superpose(&q, &t).ok()?.rmsd;
    let coverage = pos.len() as f64 / template.len() as f64;
    Some(StructuralAlignment {
        pairs: pos
            .iter()
            .map(|&(i, k)| (query.indices[i], template.indices[k]))
            .collect(),
        rmsd,
        coverage,
        score: coverage / (1.0 + rmsd),
    })
}

fn qualifies(aln: &StructuralAlignment, level: &LevelParams, min_span: usize) -> bool {
    aln.rmsd <= level.rmsd_cutoff && aln.coverage >= level.min_coverage && aln.query_span() >= min_span
}

/// Ordering used to pick the best alignment: higher score first, then the
/// smaller query start.
pub fn rank(a: &StructuralAlignment, b: &StructuralAlignment) -> Ordering {
    if (a.score - b.score).abs() > SCORE_EPS {
        return b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal);
    }
    a.query_start().cmp(&b.query_start())
}

/// Every alignment that passes `level`: full-length seed windows (stride 1,
/// allowed to overhang either end by [`MAX_END_SHIFT`]) that pass the RMSD
/// cutoff are refined with end shifts in `-2..=2`.
pub fn qualifying_alignments(
    query: &CaTrace,
    template: &CaTrace,
    level: &LevelParams,
    min_span: usize,
) -> Vec<StructuralAlignment> {
    let n = query.len() as isize;
    let m = template.len() as isize;
    let mut out = Vec::new();
    if n < 3 || m < 3 {
        return out;
    }
    for start in -MAX_END_SHIFT..=(n - m + MAX_END_SHIFT) {
        let seed = Placement {
            start,
            n_shift: 0,
            c_shift: 0,
        };
        let Some(seed_aln) = evaluate_placement(query, template, seed) else {
            continue;
        };
        if seed_aln.rmsd > level.rmsd_cutoff {
            continue;
        }
        for n_shift in -MAX_END_SHIFT..=MAX_END_SHIFT {
            for c_shift in -MAX_END_SHIFT..=MAX_END_SHIFT {
                let aln = if n_shift == 0 && c_shift == 0 {
                    Some(seed_aln.clone())
                } else {
                    evaluate_placement(
                        query,
                        template,
                        Placement {
                            start,
                            n_shift,
                            c_shift,
                        },
                    )
                };
                if let Some(aln) = aln.filter(|a| qualifies(a, level, min_span)) {
                    out.push(aln);
                }
            }
        }
    }
    out
}

/// Best alignment of `template` inside `query` at the given level, if any.
pub fn structural_search(
    query: &CaTrace,
    template: &CaTrace,
    level: &LevelParams,
    min_span: usize,
    counter: &mut SearchCounter,
) -> Option<StructuralAlignment> {
    counter.bump();
    qualifying_alignments(query, template, level, min_span)
        .into_iter()
        .min_by(rank)
}
