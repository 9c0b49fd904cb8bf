use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::viterbi::FamilyHit;
use super::ClassifyError;

/// Repeat subclass identifier `class.subclass`, class restricted to III–V.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SubclassId {
    class: u8,
    subclass: u16,
}

impl SubclassId {
    pub fn new(class: u8, subclass: u16) -> Result<Self, ClassifyError> {
        if !(3..=5).contains(&class) {
            return Err(ClassifyError::BadClass(class.to_string()));
        }
        if subclass == 0 {
            return Err(ClassifyError::BadSubclass(format!("{class}.{subclass}")));
        }
        Ok(SubclassId { class, subclass })
    }

    pub fn class(&self) -> u8 {
        self.class
    }
}

impl fmt::Display for SubclassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.subclass)
    }
}

impl FromStr for SubclassId {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (c, sc) = s
            .trim()
            .split_once('.')
            .ok_or_else(|| ClassifyError::BadSubclass(s.to_string()))?;
        let class: u8 = c.parse().map_err(|_| ClassifyError::BadClass(c.to_string()))?;
        let subclass: u16 = sc.parse().map_err(|_| ClassifyError::BadSubclass(s.to_string()))?;
        SubclassId::new(class, subclass)
    }
}

impl TryFrom<String> for SubclassId {
    type Error = ClassifyError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SubclassId> for String {
    fn from(id: SubclassId) -> String {
        id.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubclassInfo {
    pub id: SubclassId,
    pub name: String,
}

/// The set of subclasses the detector can run on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub subclasses: Vec<SubclassInfo>,
}

impl Taxonomy {
    pub fn parse(text: &str) -> Result<Self, ClassifyError> {
        let mut subclasses = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            let mut cols = line.split('\t');
            let id: SubclassId = cols.next().unwrap_or("").parse()?;
            let name = cols.next().unwrap_or("").trim().to_string();
            subclasses.push(SubclassInfo { id, name });
        }
        subclasses.sort_by(|a, b| a.id.cmp(&b.id));
        subclasses.dedup_by(|a, b| a.id == b.id);
        Ok(Taxonomy { subclasses })
    }

    pub fn builtin() -> Self {
        Self::parse(include_str!("../../data/taxonomy.tsv")).expect("bundled taxonomy is valid")
    }

    pub fn ids(&self) -> Vec<SubclassId> {
        self.subclasses.iter().map(|s| s.id.clone()).collect()
    }

    pub fn contains(&self, id: &SubclassId) -> bool {
        self.subclasses.iter().any(|s| &s.id == id)
    }
}

/// Family accession to repeat subclasses.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassificationMap {
    families: BTreeMap<String, Vec<SubclassId>>,
    repeat_families: BTreeSet<String>,
}

impl ClassificationMap {
    /// TSV rows `family<TAB>class<TAB>subclass`; an empty subclass records a
    /// repeat family with no curated subclass.
    pub fn parse(tsv: &str) -> Result<Self, ClassifyError> {
        let mut map = ClassificationMap::default();
        for line in tsv.lines() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            let family = cols[0];
            if family.eq_ignore_ascii_case("family") {
                continue;
            }
            let class_text = cols.get(1).copied().unwrap_or("");
            let class: u8 = class_text
                .parse()
                .map_err(|_| ClassifyError::BadClass(class_text.to_string()))?;
            if !(3..=5).contains(&class) {
                return Err(ClassifyError::BadClass(class_text.to_string()));
            }
            map.repeat_families.insert(family.to_string());
            let entry = map.families.entry(family.to_string()).or_default();
            match cols.get(2).copied().unwrap_or("") {
                "" => {}
                sub => {
                    let subclass: u16 = sub
                        .parse()
                        .map_err(|_| ClassifyError::BadSubclass(format!("{class}.{sub}")))?;
                    let id = SubclassId::new(class, subclass)?;
                    if !entry.contains(&id) {
                        entry.push(id);
                    }
                }
            }
        }
        for list in map.families.values_mut() {
            list.sort();
        }
        Ok(map)
    }

    pub fn builtin() -> Self {
        Self::parse(include_str!("../../data/classification_map.tsv")).expect("bundled map is valid")
    }

    pub fn subclasses(&self, family: &str) -> &[SubclassId] {
        self.families.get(family).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_repeat_family(&self, family: &str) -> bool {
        self.repeat_families.contains(family)
    }

    pub fn family_count(&self) -> usize {
        self.repeat_families.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub subclass: SubclassId,
    pub score: f64,
}

/// Candidate subclasses for one chain, best first; the best score is 1.0.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    pub used_fallback: bool,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Union of subclasses reached by the hit families, each scored by its best
/// contributing bit score divided by the best mapped score.
pub fn predict_chain_subclasses(hits: &[FamilyHit], map: &ClassificationMap, taxonomy: &Taxonomy) -> CandidateSet {
    let mut raw: BTreeMap<SubclassId, f64> = BTreeMap::new();
    let mut repeat_family_hit = false;
    for hit in hits {
        if map.is_repeat_family(&hit.family_accession) {
            repeat_family_hit = true;
        }
        for sc in map.subclasses(&hit.family_accession) {
            let slot = raw.entry(sc.clone()).or_insert(f64::NEG_INFINITY);
            *slot = slot.max(hit.bit_score);
        }
    }

    if raw.is_empty() {
        if repeat_family_hit {
            return CandidateSet {
                candidates: taxonomy
                    .ids()
                    .into_iter()
                    .map(|subclass| Candidate { subclass, score: 1.0 })
                    .collect(),
                used_fallback: true,
            };
        }
        return CandidateSet::default();
    }

    let top = raw.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut candidates: Vec<Candidate> = raw
        .into_iter()
        .map(|(subclass, s)| Candidate {
            subclass,
            score: if top > 0.0 { (s / top).clamp(0.0, 1.0) } else { 1.0 },
        })
        .collect();
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.subclass.cmp(&b.subclass)));
    CandidateSet {
        candidates,
        used_fallback: false,
    }
}

/// Subclasses the detector will run: candidates at or above `threshold`, or
/// the whole taxonomy when there are no candidates at all.
pub fn select_execution_subclasses(candidates: &CandidateSet, threshold: f64, taxonomy: &Taxonomy) -> Vec<SubclassId> {
    if candidates.is_empty() {
        return taxonomy.ids();
    }
    candidates
        .candidates
        .iter()
        .filter(|c| c.score >= threshold)
        .map(|c| c.subclass.clone())
        .collect()
}

/// Hits produced by an external scanner: TSV `family chain start end bit_score`.
pub fn parse_external_hits(tsv: &str) -> Result<Vec<FamilyHit>, ClassifyError> {
    let mut hits = Vec::new();
    for (lineno, line) in tsv.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        let bad = || ClassifyError::BadScanRow(lineno + 1);
        if cols.len() != 5 {
            return Err(bad());
        }
        if cols[0].eq_ignore_ascii_case("family") {
            continue;
        }
        let mut chain = cols[1].chars();
        let chain_id = chain.next().filter(|_| chain.next().is_none()).ok_or_else(bad)?;
        let env_start: usize = cols[2].parse().map_err(|_| bad())?;
        let env_end: usize = cols[3].parse().map_err(|_| bad())?;
        let bit_score: f64 = cols[4].parse().map_err(|_| bad())?;
        if env_start > env_end || !bit_score.is_finite() {
            return Err(bad());
        }
        hits.push(FamilyHit {
            family_accession: cols[0].to_string(),
            chain_id,
            env_start,
            env_end,
            bit_score,
        });
    }
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hit(fam: &str, score: f64) -> FamilyHit {
        FamilyHit {
            family_accession: fam.into(),
            chain_id: 'A',
            env_start: 0,
            env_end: 10,
            bit_score: score,
        }
    }

    fn sc(s: &str) -> SubclassId {
        s.parse().unwrap()
    }

    #[test]
    fn map_rows() {
        let map =
            ClassificationMap::parse("FAM001\t4\t4\nFAM002\t3\t3\nFAM002\t3\t4\nFAM002\t3\t4\nFAM009\t5\t\n").unwrap();
        assert_eq!(map.subclasses("FAM001"), &[sc("4.4")]);
        assert_eq!(map.subclasses("FAM002"), &[sc("3.3"), sc("3.4")]);
        assert!(map.subclasses("FAM009").is_empty());
        assert!(map.is_repeat_family("FAM009"));
        assert!(!map.is_repeat_family("FAM404"));
    }

    #[test]
    fn class_outside_scope() {
        assert_eq!(
            ClassificationMap::parse("FAM003\t2\t1\n"),
            Err(ClassifyError::BadClass("2".into()))
        );
        assert!("2.1".parse::<SubclassId>().is_err());
        assert!("4.0".parse::<SubclassId>().is_err());
    }

    #[test]
    fn single_hit_normalizes_to_one() {
        let map = ClassificationMap::parse("FAM001\t4\t4\n").unwrap();
        let set = predict_chain_subclasses(&[hit("FAM001", 37.5)], &map, &Taxonomy::builtin());
        assert_eq!(
            set.candidates,
            vec![Candidate {
                subclass: sc("4.4"),
                score: 1.0
            }]
        );
        assert!(!set.used_fallback);
    }

    #[test]
    fn repeat_family_without_subclass_falls_back() {
        let map = ClassificationMap::parse("FAM009\t3\t\n").unwrap();
        let tax = Taxonomy::builtin();
        let set = predict_chain_subclasses(&[hit("FAM009", 12.0)], &map, &tax);
        assert!(set.used_fallback);
        assert_eq!(set.candidates.len(), tax.subclasses.len());
        assert!(set.candidates.iter().all(|c| c.score == 1.0));
    }

    #[test]
    fn unmapped_hits_give_empty_set() {
        let map = ClassificationMap::parse("FAM001\t4\t4\n").unwrap();
        let set = predict_chain_subclasses(&[hit("OTHER", 50.0)], &map, &Taxonomy::builtin());
        assert!(set.is_empty());
        assert!(!set.used_fallback);
    }

    #[test]
    fn selection() {
        let tax = Taxonomy::builtin();
        let set = CandidateSet {
            candidates: vec![
                Candidate {
                    subclass: sc("4.4"),
                    score: 1.0,
                },
                Candidate {
                    subclass: sc("3.3"),
                    score: 0.4,
                },
            ],
            used_fallback: false,
        };
        assert_eq!(select_execution_subclasses(&set, 0.5, &tax), vec![sc("4.4")]);
        assert_eq!(select_execution_subclasses(&set, 0.0, &tax).len(), 2);
        assert_eq!(
            select_execution_subclasses(&CandidateSet::default(), 0.5, &tax),
            tax.ids()
        );
    }

    #[test]
    fn multiple_families_take_max() {
        let map = ClassificationMap::parse("F1\t3\t3\nF2\t3\t3\nF2\t4\t4\n").unwrap();
        let set = predict_chain_subclasses(&[hit("F1", 10.0), hit("F2", 40.0)], &map, &Taxonomy::builtin());
        let scores: Vec<(String, f64)> = set
            .candidates
            .iter()
            .map(|c| (c.subclass.to_string(), c.score))
            .collect();
        assert_eq!(scores, vec![("3.3".to_string(), 1.0), ("4.4".to_string(), 1.0)]);
    }

    #[test]
    fn external_hits() {
        let hits = parse_external_hits("family\tchain\tstart\tend\tbit_score\nPF00400\tA\t3\t40\t55.2\n").unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].chain_id, 'A');
        assert_eq!(
            parse_external_hits("PF1\tA\t9\t3\t1.0\n"),
            Err(ClassifyError::BadScanRow(1))
        );
    }

    #[test]
    fn bundled_tables_load() {
        assert!(Taxonomy::builtin().contains(&sc("3.3")));
        let map = ClassificationMap::builtin();
        assert_eq!(map.subclasses("SYN00001"), &[sc("3.3")]);
        assert!(map.is_repeat_family("SYN00002"));
    }
}
