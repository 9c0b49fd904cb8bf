use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ClientError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AccessionKind {
    PdbId,
    UniprotAcc,
    ProteomeId,
    /// `SYN<digits>`: bundled synthetic fixtures, never fetched remotely.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AccessionRef {
    pub kind: AccessionKind,
    pub value: String,
}

impl AccessionRef {
    pub fn pdb(id: &str) -> Self {
        AccessionRef {
            kind: AccessionKind::PdbId,
            value: id.to_ascii_uppercase(),
        }
    }

    pub fn uniprot(acc: &str) -> Self {
        AccessionRef {
            kind: AccessionKind::UniprotAcc,
            value: acc.to_ascii_uppercase(),
        }
    }
}

impl fmt::Display for AccessionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.value)
    }
}

struct Grammar {
    pdb: Regex,
    uniprot: Regex,
    proteome: Regex,
    synthetic: Regex,
}

fn grammar() -> &'static Grammar {
    static G: OnceLock<Grammar> = OnceLock::new();
    G.get_or_init(|| Grammar {
        pdb: Regex::new(r"^[0-9][A-Z0-9]{3}$").expect("static regex"),
        uniprot: Regex::new(r"^([OPQ][0-9][A-Z0-9]{3}[0-9]|[A-NR-Z][0-9]([A-Z][A-Z0-9]{2}[0-9]){1,2})$")
            .expect("static regex"),
        proteome: Regex::new(r"^UP[0-9]{9}$").expect("static regex"),
        synthetic: Regex::new(r"^SYN[0-9]+$").expect("static regex"),
    })
}

/// Classify an accession by its grammar, upper-casing it first.
pub fn resolve_accession(text: &str) -> Result<AccessionRef, ClientError> {
    let value = text.trim().to_ascii_uppercase();
    let g = grammar();
    let kind = if g.proteome.is_match(&value) {
        AccessionKind::ProteomeId
    } else if g.pdb.is_match(&value) {
        AccessionKind::PdbId
    } else if g.synthetic.is_match(&value) {
        AccessionKind::Synthetic
    } else if g.uniprot.is_match(&value) {
        AccessionKind::UniprotAcc
    } else {
        return Err(ClientError::Unrecognized(text.to_string()));
    };
    Ok(AccessionRef { kind, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(s: &str) -> Option<AccessionKind> {
        resolve_accession(s).ok().map(|r| r.kind)
    }

    #[test]
    fn grammar_cases() {
        let r = resolve_accession("4f47").unwrap();
        assert_eq!((r.kind, r.value.as_str()), (AccessionKind::PdbId, "4F47"));
        assert_eq!(kind("P12345"), Some(AccessionKind::UniprotAcc));
        assert_eq!(kind("a0a023gpi8"), Some(AccessionKind::UniprotAcc));
        assert_eq!(kind("UP000000625"), Some(AccessionKind::ProteomeId));
        assert_eq!(kind("SYN1"), Some(AccessionKind::Synthetic));
        for bad in ["banana!", "??", "", "ABCD", "UP00000062", "P1234"] {
            assert_eq!(kind(bad), None, "{bad}");
        }
    }
}
