use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::classify::{
    predict_chain_subclasses, select_execution_subclasses, CandidateSet, ClassificationMap, FamilyHit, FamilyScanner,
    SubclassId, Taxonomy, ViterbiScanner, DEFAULT_PROBABILITY_THRESHOLD,
};
use crate::clients::{AccessionRef, Clients};
use crate::reupred::{emit_region_outputs, identify_with, DetectorParams, ProximityRule, Srul, UnitPrediction};
use crate::structmodel::{extract_sequence, ProteinStructure, StructureSource};

/// Everything a pipeline run needs besides the request itself.
pub struct Pipeline {
    pub clients: Arc<Clients>,
    pub scanner: Arc<dyn FamilyScanner>,
    pub map: ClassificationMap,
    pub taxonomy: Taxonomy,
    pub srul: Arc<Srul>,
    pub params: DetectorParams,
    pub threshold: f64,
}

impl Pipeline {
    /// Bundled scanner, mapping, taxonomy and library with default parameters.
    pub fn with_defaults(clients: Arc<Clients>) -> Self {
        Pipeline {
            clients,
            scanner: Arc::new(ViterbiScanner::builtin()),
            map: ClassificationMap::builtin(),
            taxonomy: Taxonomy::builtin(),
            srul: Arc::new(Srul::builtin()),
            params: DetectorParams::default(),
            threshold: DEFAULT_PROBABILITY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub region_id: String,
    pub classification: SubclassId,
    pub units: Vec<UnitPrediction>,
    pub average_rmsd: f64,
    pub rule_satisfied: ProximityRule,
    pub relaxation_level: usize,
    pub directory: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain_id: char,
    pub length: usize,
    pub hits: Vec<FamilyHit>,
    pub candidates: CandidateSet,
    /// Subclasses the detector was restricted to.
    pub executed_subclasses: Vec<SubclassId>,
    pub user_selection: bool,
    pub relaxation_level_used: Option<usize>,
    pub search_call_count: u64,
    pub regions: Vec<RegionSummary>,
}

/// Deterministic description of one request's results; written as
/// `summary.json` inside the output bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub accession: AccessionRef,
    pub source: StructureSource,
    pub structure_file: String,
    pub chains: Vec<ChainReport>,
    /// Bundle-relative paths of every emitted file.
    pub artifacts: Vec<String>,
}

impl ResultBundle {
    pub fn region_count(&self) -> usize {
        self.chains.iter().map(|c| c.regions.len()).sum()
    }

    pub fn regions(&self) -> impl Iterator<Item = &RegionSummary> {
        self.chains.iter().flat_map(|c| c.regions.iter())
    }
}

/// Bundle plus the timings measured while producing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub bundle: ResultBundle,
    /// Wall-clock time excluding any cache-miss download.
    pub exec_seconds: f64,
    pub download_seconds: f64,
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const STRUCTURE_FILE: &str = "structure.pdb";
pub const SEQUENCES_FILE: &str = "sequences.fasta";

fn relative_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            relative_files(root, &path, out)?;
        } else if let Ok(rel) = path.strip_prefix(root) {
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

/// Remove a previous bundle's files from `dir`, leaving anything else alone.
fn clear_bundle(dir: &Path) -> std::io::Result<()> {
    let regions = dir.join("regions");
    if regions.is_dir() {
        fs::remove_dir_all(regions)?;
    }
    for f in [STRUCTURE_FILE, SEQUENCES_FILE, SUMMARY_FILE] {
        match fs::remove_file(dir.join(f)) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e),
            _ => {}
        }
    }
    Ok(())
}

impl Pipeline {
    /// Fetch, scan, select subclasses, detect and emit into `out_dir`.
    /// `selection` bypasses the classifier when present.
    pub fn run(
        &self,
        accession: &AccessionRef,
        selection: Option<&BTreeSet<SubclassId>>,
        out_dir: &Path,
    ) -> Result<PipelineResult, ServiceError> {
        let started = Instant::now();
        let (structure, record) = self.clients.load_structure(accession)?;
        let bundle = self.process(accession, &structure, selection, out_dir)?;
        let total = started.elapsed().as_secs_f64();
        Ok(PipelineResult {
            bundle,
            exec_seconds: (total - record.download_seconds).max(0.0),
            download_seconds: record.download_seconds,
        })
    }

    /// The pipeline after retrieval, on an already parsed structure.
    pub fn process(
        &self,
        accession: &AccessionRef,
        structure: &ProteinStructure,
        selection: Option<&BTreeSet<SubclassId>>,
        out_dir: &Path,
    ) -> Result<ResultBundle, ServiceError> {
        clear_bundle(out_dir)?;
        fs::create_dir_all(out_dir)?;
        fs::write(out_dir.join(STRUCTURE_FILE), crate::structmodel::write_pdb(structure))?;
        let fasta: String = structure
            .chains
            .iter()
            .map(|c| extract_sequence(c, &structure.accession))
            .collect();
        fs::write(out_dir.join(SEQUENCES_FILE), fasta)?;

        let mut reports: BTreeMap<char, ChainReport> = BTreeMap::new();
        for chain in &structure.chains {
            let hits = self.scanner.scan(chain.id, &chain.sequence());
            let candidates = predict_chain_subclasses(&hits, &self.map, &self.taxonomy);
            let executed = match selection {
                Some(sel) => sel.iter().cloned().collect(),
                None => select_execution_subclasses(&candidates, self.threshold, &self.taxonomy),
            };
            reports.insert(
                chain.id,
                ChainReport {
                    chain_id: chain.id,
                    length: chain.len(),
                    hits,
                    candidates,
                    executed_subclasses: executed,
                    user_selection: selection.is_some(),
                    relaxation_level_used: None,
                    search_call_count: 0,
                    regions: Vec::new(),
                },
            );
        }

        let outcome = identify_with(
            structure,
            |chain| {
                let executed = &reports[&chain.id].executed_subclasses;
                if executed.is_empty() {
                    return (Srul::default(), Vec::new());
                }
                let filter: BTreeSet<SubclassId> = executed.iter().cloned().collect();
                (self.srul.restricted(&filter), executed.clone())
            },
            &self.params,
        );

        let regions_dir = out_dir.join("regions");
        for chain_outcome in &outcome.chains {
            let report = reports.get_mut(&chain_outcome.chain_id).expect("report per chain");
            report.relaxation_level_used = chain_outcome.relaxation_level_used;
            report.search_call_count = chain_outcome.search_call_count;
            for region in &chain_outcome.regions {
                emit_region_outputs(&regions_dir, structure, region)?;
                report.regions.push(RegionSummary {
                    region_id: region.region_id.clone(),
                    classification: region.classification.clone(),
                    units: region.units.clone(),
                    average_rmsd: region.average_rmsd,
                    rule_satisfied: region.rule_satisfied,
                    relaxation_level: region.relaxation_level,
                    directory: format!("regions/{}", region.region_id),
                });
            }
        }

        let mut artifacts = vec![
            STRUCTURE_FILE.to_string(),
            SEQUENCES_FILE.to_string(),
            SUMMARY_FILE.to_string(),
        ];
        if regions_dir.is_dir() {
            relative_files(out_dir, &regions_dir, &mut artifacts)?;
        }
        artifacts.sort();
        let bundle = ResultBundle {
            accession: accession.clone(),
            source: structure.source,
            structure_file: STRUCTURE_FILE.to_string(),
            chains: reports.into_values().collect(),
            artifacts,
        };
        let json = serde_json::to_string_pretty(&bundle).map_err(|e| ServiceError::Io(e.to_string()))?;
        fs::write(out_dir.join(SUMMARY_FILE), json + "\n")?;
        Ok(bundle)
    }
}
