use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::srul::Srul;
use super::validate::{conquer_validate, ProximityRule, ValidityParams};
use super::{ReupredError, MIN_UNIT_LEN};
use crate::align::{
    region_alignment_views, structural_search, AlignmentViews, CaTrace, LevelParams, SearchCounter,
    StructuralAlignment, ViewUnit, SCORE_EPS,
};
use crate::classify::SubclassId;
use crate::structmodel::{assign_secondary_structure, Chain, ProteinStructure};

/// Four increasingly permissive search levels; level 0 is the strictest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSchedule {
    levels: [LevelParams; 4],
}

impl RelaxationSchedule {
    pub fn new(levels: [LevelParams; 4]) -> Result<Self, ReupredError> {
        for w in levels.windows(2) {
            if w[1].rmsd_cutoff < w[0].rmsd_cutoff || w[1].min_coverage > w[0].min_coverage {
                return Err(ReupredError::BadSchedule);
            }
        }
        Ok(RelaxationSchedule { levels })
    }

    pub fn levels(&self) -> &[LevelParams; 4] {
        &self.levels
    }
}

impl Default for RelaxationSchedule {
    fn default() -> Self {
        let lv = |rmsd_cutoff, min_coverage| LevelParams {
            rmsd_cutoff,
            min_coverage,
        };
        RelaxationSchedule {
            levels: [lv(2.0, 0.85), lv(3.0, 0.75), lv(4.0, 0.65), lv(5.0, 0.55)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UnitOrigin {
    Master,
    Derived,
}

/// A detected repeat unit; `start`/`end` are residue order indices, inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitPrediction {
    pub chain_id: char,
    pub start: usize,
    pub end: usize,
    pub template_id: String,
    pub rmsd: f64,
    pub origin: UnitOrigin,
}

impl UnitPrediction {
    pub fn new(
        chain_id: char,
        start: usize,
        end: usize,
        template_id: &str,
        rmsd: f64,
        origin: UnitOrigin,
    ) -> Result<Self, ReupredError> {
        if end < start || end - start + 1 < MIN_UNIT_LEN {
            return Err(ReupredError::UnitTooShort(
                template_id.to_string(),
                end.saturating_sub(start) + 1,
            ));
        }
        Ok(UnitPrediction {
            chain_id,
            start,
            end,
            template_id: template_id.to_string(),
            rmsd,
            origin,
        })
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn from_hit(chain_id: char, hit: &StructuralAlignment, template_id: &str, origin: UnitOrigin) -> Option<Self> {
        Self::new(
            chain_id,
            hit.query_start(),
            hit.query_end(),
            template_id,
            hit.rmsd,
            origin,
        )
        .ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionResult {
    pub region_id: String,
    pub chain_id: char,
    pub units: Vec<UnitPrediction>,
    pub classification: SubclassId,
    pub average_rmsd: f64,
    pub rule_satisfied: ProximityRule,
    pub relaxation_level: usize,
    /// Index into `units` of the unit the alignment views are anchored on.
    pub anchor: usize,
    pub views: AlignmentViews,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutcome {
    pub chain_id: char,
    pub subclasses: Vec<SubclassId>,
    pub regions: Vec<RegionResult>,
    pub relaxation_level_used: Option<usize>,
    pub search_call_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationOutcome {
    pub chains: Vec<ChainOutcome>,
    /// Loosest level any chain needed; `None` when no chain has a region.
    pub relaxation_level_used: Option<usize>,
    pub search_call_count: u64,
    pub elapsed_seconds: f64,
}

impl IdentificationOutcome {
    pub fn regions(&self) -> impl Iterator<Item = &RegionResult> {
        self.chains.iter().flat_map(|c| c.regions.iter())
    }

    pub fn region_count(&self) -> usize {
        self.chains.iter().map(|c| c.regions.len()).sum()
    }
}

/// Detector configuration shared by every chain of a run.
#[derive(Debug, Clone, Default)]
pub struct DetectorParams {
    pub schedule: RelaxationSchedule,
    pub validity: ValidityParams,
}

fn better_master(a: &(StructuralAlignment, usize), b: &(StructuralAlignment, usize)) -> Ordering {
    let (ha, hb) = (&a.0, &b.0);
    if (ha.score - hb.score).abs() > SCORE_EPS {
        return hb.score.total_cmp(&ha.score);
    }
    ha.query_start()
        .cmp(&hb.query_start())
        .then_with(|| hb.query_span().cmp(&ha.query_span()))
        .then_with(|| a.1.cmp(&b.1))
}

/// Best SRUL hit on `fragment` at `level`, returned with the template's subclass.
pub fn find_master_unit(
    chain_id: char,
    fragment: &CaTrace,
    srul: &Srul,
    level: &LevelParams,
    counter: &mut SearchCounter,
) -> Option<(UnitPrediction, SubclassId)> {
    if fragment.len() < MIN_UNIT_LEN {
        return None;
    }
    let best = srul
        .entries
        .iter()
        .enumerate()
        .filter_map(|(i, e)| structural_search(fragment, &e.trace, level, MIN_UNIT_LEN, counter).map(|h| (h, i)))
        .min_by(better_master)?;
    let entry = &srul.entries[best.1];
    let unit = UnitPrediction::from_hit(chain_id, &best.0, &entry.unit_id, UnitOrigin::Master)?;
    Some((unit, entry.subclass.clone()))
}

/// Recursively search the flanks of `master` against the growing ad hoc
/// library (the master plus every accepted unit). Fragments shorter than the
/// minimum unit length are not searched.
pub fn divide_and_collect(
    chain: &CaTrace,
    chain_id: char,
    master: &UnitPrediction,
    level: &LevelParams,
    counter: &mut SearchCounter,
) -> Vec<UnitPrediction> {
    let (Some(&first), Some(&last)) = (chain.indices.first(), chain.indices.last()) else {
        return Vec::new();
    };
    let mut library: Vec<(String, CaTrace)> = vec![("master".to_string(), chain.span(master.start, master.end))];
    let mut found = Vec::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    let push_flanks = |queue: &mut VecDeque<(usize, usize)>, lo: usize, hi: usize, unit: &UnitPrediction| {
        if unit.start > lo {
            queue.push_back((lo, unit.start - 1));
        }
        if unit.end < hi {
            queue.push_back((unit.end + 1, hi));
        }
    };
    push_flanks(&mut queue, first, last, master);

    while let Some((lo, hi)) = queue.pop_front() {
        if hi + 1 - lo < MIN_UNIT_LEN {
            continue;
        }
        let fragment = chain.span(lo, hi);
        if fragment.len() < MIN_UNIT_LEN {
            continue;
        }
        let best = library
            .iter()
            .enumerate()
            .filter_map(|(i, (_, t))| structural_search(&fragment, t, level, MIN_UNIT_LEN, counter).map(|h| (h, i)))
            .min_by(better_master);
        let Some((hit, idx)) = best else { continue };
        let Some(unit) = UnitPrediction::from_hit(chain_id, &hit, &library[idx].0, UnitOrigin::Derived) else {
            continue;
        };
        library.push((format!("unit_{}", found.len() + 1), chain.span(unit.start, unit.end)));
        push_flanks(&mut queue, lo, hi, &unit);
        found.push(unit);
    }
    found
}

/// Split sorted units into regions wherever the gap reaches `split_gap` residues.
pub fn segment_regions(units: &[UnitPrediction], split_gap: usize) -> Vec<Vec<UnitPrediction>> {
    let mut regions: Vec<Vec<UnitPrediction>> = Vec::new();
    for u in units {
        match regions.last_mut() {
            Some(r) if u.start - (r.last().expect("non-empty region").end + 1) < split_gap => r.push(u.clone()),
            _ => regions.push(vec![u.clone()]),
        }
    }
    regions
}

fn view_units(chain: &Chain, secondary: &[char], units: &[UnitPrediction]) -> Vec<ViewUnit> {
    let trace = CaTrace::from_chain(chain);
    units
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let mut t = trace.span(u.start, u.end);
            t.indices.iter_mut().for_each(|x| *x -= u.start);
            ViewUnit {
                id: format!("unit_{}", i + 1),
                trace: t,
                sequence: chain.residues[u.start..=u.end].iter().map(|r| r.code1).collect(),
                secondary: secondary[u.start..=u.end].to_vec(),
            }
        })
        .collect()
}

/// Run the level loop on one chain against an already restricted library.
pub fn identify_chain(
    chain: &Chain,
    srul: &Srul,
    subclasses: &[SubclassId],
    params: &DetectorParams,
    counter: &mut SearchCounter,
) -> ChainOutcome {
    let start_calls = counter.calls();
    let trace = CaTrace::from_chain(chain);
    let mut outcome = ChainOutcome {
        chain_id: chain.id,
        subclasses: subclasses.to_vec(),
        regions: Vec::new(),
        relaxation_level_used: None,
        search_call_count: 0,
    };

    for (level_index, level) in params.schedule.levels().iter().enumerate() {
        let Some((master, subclass)) = find_master_unit(chain.id, &trace, srul, level, counter) else {
            continue;
        };
        let mut units = divide_and_collect(&trace, chain.id, &master, level, counter);
        units.push(master);
        units.sort_by_key(|u| u.start);

        let valid: Vec<(Vec<UnitPrediction>, ProximityRule)> = segment_regions(&units, params.validity.max_total_gap)
            .into_iter()
            .filter_map(|r| {
                let v = conquer_validate(&r, &params.validity);
                v.valid.then_some((r, v.rule_satisfied))
            })
            .collect();
        if valid.is_empty() {
            continue;
        }

        let secondary: Vec<char> = assign_secondary_structure(chain).as_string().chars().collect();
        for (k, (region_units, rule)) in valid.into_iter().enumerate() {
            let anchor = region_units
                .iter()
                .position(|u| u.origin == UnitOrigin::Master)
                .unwrap_or(0);
            let views = region_alignment_views(&view_units(chain, &secondary, &region_units), anchor)
                .expect("valid regions hold at least three units");
            outcome.regions.push(RegionResult {
                region_id: format!("{}{}", chain.id, k + 1),
                chain_id: chain.id,
                average_rmsd: views.average_rmsd,
                units: region_units,
                classification: subclass.clone(),
                rule_satisfied: rule,
                relaxation_level: level_index,
                anchor,
                views,
            });
        }
        outcome.relaxation_level_used = Some(level_index);
        break;
    }
    outcome.search_call_count = counter.calls() - start_calls;
    outcome
}

/// Detect repeat regions on every chain with the same subclass restriction.
pub fn identify_repeats(
    structure: &ProteinStructure,
    filter: &BTreeSet<SubclassId>,
    params: &DetectorParams,
    srul: &Srul,
) -> IdentificationOutcome {
    let restricted = srul.restricted(filter);
    let subclasses: Vec<SubclassId> = restricted.subclasses().into_iter().collect();
    identify_with(structure, |_| (restricted.clone(), subclasses.clone()), params)
}

/// Like [`identify_repeats`] with a per-chain library choice.
pub fn identify_with<F>(
    structure: &ProteinStructure,
    mut library_for: F,
    params: &DetectorParams,
) -> IdentificationOutcome
where
    F: FnMut(&Chain) -> (Srul, Vec<SubclassId>),
{
    let started = Instant::now();
    let mut chains = Vec::new();
    for chain in &structure.chains {
        let (srul, subclasses) = library_for(chain);
        let mut counter = SearchCounter::new();
        chains.push(identify_chain(chain, &srul, &subclasses, params, &mut counter));
    }
    IdentificationOutcome {
        relaxation_level_used: chains.iter().filter_map(|c| c.relaxation_level_used).max(),
        search_call_count: chains.iter().map(|c| c.search_call_count).sum(),
        chains,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    }
}
