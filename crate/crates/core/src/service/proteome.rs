use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::pipeline::Pipeline;
use super::{RequestStatus, ServiceError};
use crate::clients::{AccessionKind, AccessionRef, PlannedStructure, ProteomeManifest};
use crate::structmodel::StructureSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProteomeEntry {
    pub accession: String,
    pub source: StructureSource,
    pub component: String,
    pub has_trr: bool,
    pub region_count: usize,
    pub exec_seconds: f64,
    /// Set when the structure could not be processed; such entries are
    /// excluded from the statistics.
    pub error: Option<String>,
}

impl ProteomeEntry {
    pub fn processed(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProteomeStats {
    pub processed_total: usize,
    pub processed_pdb: usize,
    pub processed_alphafold: usize,
    pub pdb_percent: f64,
    pub alphafold_percent: f64,
    pub apt_all: f64,
    pub structures_with_trr: usize,
    pub apt_with_trr: Option<f64>,
    pub apt_without_trr: Option<f64>,
    pub apt_pdb_trr: Option<f64>,
    pub apt_af_trr: Option<f64>,
    pub avg_regions_per_trr_structure: Option<f64>,
    /// Total time of structures with regions over their total region count.
    pub apt_per_region: Option<f64>,
}

fn mean<'a>(xs: impl Iterator<Item = &'a ProteomeEntry>) -> Option<f64> {
    let (n, sum) = xs.fold((0usize, 0.0), |(n, s), e| (n + 1, s + e.exec_seconds));
    (n > 0).then(|| sum / n as f64)
}

/// Table-1 statistics over the successfully processed entries.
pub fn compute_proteome_stats(entries: &[ProteomeEntry]) -> Result<ProteomeStats, ServiceError> {
    let done: Vec<&ProteomeEntry> = entries.iter().filter(|e| e.processed()).collect();
    if done.is_empty() {
        return Err(ServiceError::EmptyRun);
    }
    let total = done.len();
    let pdb = done.iter().filter(|e| e.source == StructureSource::Pdb).count();
    let trr: Vec<&ProteomeEntry> = done.iter().copied().filter(|e| e.has_trr).collect();
    let regions: usize = trr.iter().map(|e| e.region_count).sum();
    let trr_time: f64 = trr.iter().map(|e| e.exec_seconds).sum();
    Ok(ProteomeStats {
        processed_total: total,
        processed_pdb: pdb,
        processed_alphafold: total - pdb,
        pdb_percent: 100.0 * pdb as f64 / total as f64,
        alphafold_percent: 100.0 * (total - pdb) as f64 / total as f64,
        apt_all: mean(done.iter().copied()).expect("non-empty"),
        structures_with_trr: trr.len(),
        apt_with_trr: mean(trr.iter().copied()),
        apt_without_trr: mean(done.iter().copied().filter(|e| !e.has_trr)),
        apt_pdb_trr: mean(trr.iter().copied().filter(|e| e.source == StructureSource::Pdb)),
        apt_af_trr: mean(trr.iter().copied().filter(|e| e.source == StructureSource::Alphafold)),
        avg_regions_per_trr_structure: (!trr.is_empty()).then(|| regions as f64 / trr.len() as f64),
        apt_per_region: (regions > 0).then(|| trr_time / regions as f64),
    })
}

impl ProteomeStats {
    /// Plain-text report with one labelled row per statistic.
    pub fn to_table(&self, proteome_id: &str) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        let rows: Vec<(&str, String)> = vec![
            ("Proteome ID", proteome_id.to_string()),
            ("Processed structures", self.processed_total.to_string()),
            (
                "Processed structures (PDB)",
                format!("{} ({:.2}%)", self.processed_pdb, self.pdb_percent),
            ),
            (
                "Processed structures (AlphaFold)",
                format!("{} ({:.2}%)", self.processed_alphafold, self.alphafold_percent),
            ),
            ("APT (seconds)", format!("{:.2}", self.apt_all)),
            ("Structures with TRR", self.structures_with_trr.to_string()),
            ("APT for structures with TRR (seconds)", opt(self.apt_with_trr)),
            ("APT for structures without TRR (seconds)", opt(self.apt_without_trr)),
            ("APT for PDB structures with TRR (seconds)", opt(self.apt_pdb_trr)),
            ("APT for AlphaFold structures with TRR (seconds)", opt(self.apt_af_trr)),
            (
                "Average number of regions for structures with TRR",
                opt(self.avg_regions_per_trr_structure),
            ),
            ("APT for each TRR (seconds)", opt(self.apt_per_region)),
        ];
        let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (label, value) in rows {
            let _ = writeln!(out, "{label:<width$}  {value}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProteomeRun {
    pub run_id: String,
    pub proteome_id: String,
    pub status: RequestStatus,
    pub submitted_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    pub entries: Vec<ProteomeEntry>,
    /// Components that had no structure to process, with the reason.
    pub skipped: Vec<PlannedStructure>,
    pub stats: Option<ProteomeStats>,
    pub error: Option<String>,
}

fn source_of(r: &AccessionRef) -> StructureSource {
    match r.kind {
        AccessionKind::UniprotAcc => StructureSource::Alphafold,
        _ => StructureSource::Pdb,
    }
}

/// Process every planned structure with up to `parallelism` threads. Entry
/// order follows the manifest regardless of completion order.
pub fn process_manifest(
    pipeline: &Pipeline,
    manifest: &ProteomeManifest,
    parallelism: usize,
    artifacts: &Path,
) -> (Vec<ProteomeEntry>, Vec<PlannedStructure>) {
    let plan = manifest.structure_plan();
    let (todo, skipped): (Vec<PlannedStructure>, Vec<PlannedStructure>) =
        plan.into_iter().partition(|p| p.structure.is_some());
    let slots: Vec<Mutex<Option<ProteomeEntry>>> = todo.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..parallelism.clamp(1, todo.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(planned) = todo.get(i) else { break };
                let r = planned.structure.as_ref().expect("partitioned on structure");
                let out = artifacts.join(&r.value);
                let result = catch_unwind(AssertUnwindSafe(|| pipeline.run(r, None, &out)));
                let mut entry = ProteomeEntry {
                    accession: r.value.clone(),
                    source: source_of(r),
                    component: planned.component.clone(),
                    has_trr: false,
                    region_count: 0,
                    exec_seconds: 0.0,
                    error: None,
                };
                match result {
                    Ok(Ok(res)) => {
                        entry.region_count = res.bundle.region_count();
                        entry.has_trr = entry.region_count > 0;
                        entry.exec_seconds = res.exec_seconds;
                    }
                    Ok(Err(e)) => entry.error = Some(e.to_string()),
                    Err(_) => entry.error = Some("pipeline panicked".to_string()),
                }
                *slots[i].lock().expect("slot lock") = Some(entry);
            });
        }
    });
    let entries = slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every slot filled"))
        .collect();
    (entries, skipped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderBy {
    ExecSeconds,
    Component,
    Db,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Asc,
    Desc,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultQuery {
    pub db: Option<StructureSource>,
    pub has_trr: Option<bool>,
    /// Case-insensitive substring of the component name.
    pub component: Option<String>,
    pub order_by: Option<OrderBy>,
    #[serde(default)]
    pub dir: Direction,
}

/// Conjunctive filters followed by a stable sort.
pub fn list_proteome_results(run: &ProteomeRun, q: &ResultQuery) -> Vec<ProteomeEntry> {
    let needle = q.component.as_ref().map(|c| c.to_lowercase());
    let mut out: Vec<ProteomeEntry> = run
        .entries
        .iter()
        .filter(|e| q.db.is_none_or(|d| e.source == d))
        .filter(|e| q.has_trr.is_none_or(|t| e.has_trr == t))
        .filter(|e| needle.as_ref().is_none_or(|n| e.component.to_lowercase().contains(n)))
        .cloned()
        .collect();
    if let Some(order) = q.order_by {
        out.sort_by(|a, b| {
            let ord = match order {
                OrderBy::ExecSeconds => a.exec_seconds.total_cmp(&b.exec_seconds),
                OrderBy::Component => a.component.cmp(&b.component),
                OrderBy::Db => a.source.cmp(&b.source),
            };
            match q.dir {
                Direction::Asc => ord,
                Direction::Desc => ord.reverse(),
            }
        });
    }
    out
}
