use serde::{Deserialize, Serialize};

use super::UnitPrediction;

/// Thresholds of the region validity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityParams {
    pub min_units: usize,
    /// Rule 1 holds when the summed inter-unit gap is strictly below this.
    pub max_total_gap: usize,
    /// Rule 2 holds when non-adjacent / total is at most this.
    pub max_nonadjacent_ratio: f64,
    pub min_unit_len: usize,
}

impl Default for ValidityParams {
    fn default() -> Self {
        ValidityParams {
            min_units: 3,
            max_total_gap: 40,
            max_nonadjacent_ratio: 0.25,
            min_unit_len: super::MIN_UNIT_LEN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProximityRule {
    GapRule,
    AdjacencyRule,
    Both,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validity {
    pub valid: bool,
    pub rule_satisfied: ProximityRule,
}

/// Gap (in residues) before each unit after the first.
pub fn inter_unit_gaps(spans: &[(usize, usize)]) -> Vec<usize> {
    spans.windows(2).map(|w| w[1].0.saturating_sub(w[0].1 + 1)).collect()
}

/// Validity on raw `(start, end)` spans, sorted and non-overlapping.
pub fn validate_spans(spans: &[(usize, usize)], params: &ValidityParams) -> Validity {
    let gaps = inter_unit_gaps(spans);
    let total_gap: usize = gaps.iter().sum();
    let non_adjacent = gaps.iter().filter(|&&g| g > 0).count();
    let gap_rule = total_gap < params.max_total_gap;
    let adjacency_rule = !spans.is_empty() && non_adjacent as f64 / spans.len() as f64 <= params.max_nonadjacent_ratio;
    let rule_satisfied = match (gap_rule, adjacency_rule) {
        (true, true) => ProximityRule::Both,
        (true, false) => ProximityRule::GapRule,
        (false, true) => ProximityRule::AdjacencyRule,
        (false, false) => ProximityRule::None,
    };
    let long_enough = spans.iter().all(|(s, e)| e + 1 - s >= params.min_unit_len);
    Validity {
        valid: spans.len() >= params.min_units && long_enough && (gap_rule || adjacency_rule),
        rule_satisfied,
    }
}

/// Region validity: enough units, each long enough, and at least one proximity rule.
pub fn conquer_validate(units: &[UnitPrediction], params: &ValidityParams) -> Validity {
    let spans: Vec<(usize, usize)> = units.iter().map(|u| (u.start, u.end)).collect();
    validate_spans(&spans, params)
}
