use std::fmt::Write as _;

use super::ClassifyError;

/// Residue order of emission columns.
pub const ALPHABET: &str = "ACDEFGHIKLMNPQRSTVWY";

pub const T_MM: usize = 0;
pub const T_MI: usize = 1;
pub const T_MD: usize = 2;
pub const T_IM: usize = 3;
pub const T_II: usize = 4;
pub const T_DM: usize = 5;
pub const T_DD: usize = 6;

/// Column of a residue in [`ALPHABET`]; `None` for X and anything unknown.
pub fn residue_index(c: char) -> Option<usize> {
    ALPHABET.find(c.to_ascii_uppercase())
}

/// Profile HMM with log-odds match emissions and log transition scores, all in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileHmm {
    pub name: String,
    pub accession: String,
    pub match_emissions: Vec<[f64; 20]>,
    /// Per match state: (m→m, m→i, m→d, i→m, i→i, d→m, d→d).
    pub transitions: Vec<[f64; 7]>,
    pub background: [f64; 20],
}

impl ProfileHmm {
    pub fn len(&self) -> usize {
        self.match_emissions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.match_emissions.is_empty()
    }

    /// Argmax emission per match state.
    pub fn consensus(&self) -> String {
        self.match_emissions
            .iter()
            .map(|row| {
                let best = row
                    .iter()
                    .enumerate()
                    .fold(0, |b, (i, v)| if *v > row[b] { i } else { b });
                ALPHABET.as_bytes()[best] as char
            })
            .collect()
    }

    /// Simple profile rewarding one residue per position.
    pub fn from_sequence(name: &str, accession: &str, seq: &str) -> Self {
        let match_emissions = seq
            .chars()
            .map(|c| {
                let mut row = [-1.0; 20];
                if let Some(i) = residue_index(c) {
                    row[i] = 3.0;
                }
                row
            })
            .collect();
        let transitions = vec![[-0.1, -5.0, -5.0, -0.5, -1.0, -0.5, -1.0]; seq.chars().count()];
        ProfileHmm {
            name: name.to_string(),
            accession: accession.to_string(),
            match_emissions,
            transitions,
            background: [0.05; 20],
        }
    }

    pub fn to_text(&self) -> String {
        fn join(values: &[f64]) -> String {
            values
                .iter()
                .map(|v| if v.is_finite() { format!("{v}") } else { "*".to_string() })
                .collect::<Vec<_>>()
                .join(" ")
        }
        let mut out = String::new();
        let _ = writeln!(out, "NAME {}", self.name);
        let _ = writeln!(out, "ACC {}", self.accession);
        let _ = writeln!(out, "LENG {}", self.len());
        let _ = writeln!(out, "BACKGROUND {}", join(&self.background));
        for row in &self.match_emissions {
            let _ = writeln!(out, "MATCH {}", join(row));
        }
        for row in &self.transitions {
            let _ = writeln!(out, "TRANS {}", join(row));
        }
        out.push_str("//\n");
        out
    }
}

fn parse_values<const N: usize>(rest: &str, what: &str) -> Result<[f64; N], ClassifyError> {
    let values: Vec<f64> = rest
        .split_whitespace()
        .map(|tok| match tok {
            "*" => Ok(f64::NEG_INFINITY),
            _ => tok.parse::<f64>(),
        })
        .collect::<Result<_, _>>()
        .map_err(|_| ClassifyError::BadHeader(format!("unparseable {what} values")))?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| ClassifyError::BadHeader(format!("{what} expects {N} values, got {}", v.len())))
}

#[derive(Default)]
struct Block {
    name: Option<String>,
    accession: Option<String>,
    length: Option<usize>,
    background: Option<[f64; 20]>,
    matches: Vec<[f64; 20]>,
    trans: Vec<[f64; 7]>,
}

impl Block {
    fn finish(self) -> Result<ProfileHmm, ClassifyError> {
        let name = self
            .name
            .ok_or_else(|| ClassifyError::BadHeader("missing NAME".into()))?;
        let length = self
            .length
            .ok_or_else(|| ClassifyError::BadHeader(format!("{name}: missing LENG")))?;
        let background = self
            .background
            .ok_or_else(|| ClassifyError::BadHeader(format!("{name}: missing BACKGROUND")))?;
        if length == 0 {
            return Err(ClassifyError::BadHeader(format!("{name}: LENG must be positive")));
        }
        if (background.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(ClassifyError::BadHeader(format!(
                "{name}: background does not sum to 1"
            )));
        }
        if self.matches.len() != length || self.trans.len() != length {
            return Err(ClassifyError::LengthMismatch(name));
        }
        Ok(ProfileHmm {
            accession: self.accession.unwrap_or_else(|| name.clone()),
            name,
            match_emissions: self.matches,
            transitions: self.trans,
            background,
        })
    }
}

/// Parse the block format: `NAME`, `ACC`, `LENG`, `BACKGROUND`, `LENG` x
/// `MATCH`, `LENG` x `TRANS`, terminated by `//`.
pub fn parse_hmm_library(text: &str) -> Result<Vec<ProfileHmm>, ClassifyError> {
    let mut profiles = Vec::new();
    let mut block: Option<Block> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "//" {
            if let Some(b) = block.take() {
                profiles.push(b.finish()?);
            }
            continue;
        }
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let b = block.get_or_insert_with(Block::default);
        match key {
            "NAME" => b.name = Some(rest.trim().to_string()),
            "ACC" => b.accession = Some(rest.trim().to_string()),
            "LENG" => {
                b.length = Some(
                    rest.trim()
                        .parse()
                        .map_err(|_| ClassifyError::BadHeader(format!("bad LENG '{}'", rest.trim())))?,
                )
            }
            "BACKGROUND" => b.background = Some(parse_values::<20>(rest, "BACKGROUND")?),
            "MATCH" => b.matches.push(parse_values::<20>(rest, "MATCH")?),
            "TRANS" => b.trans.push(parse_values::<7>(rest, "TRANS")?),
            other => return Err(ClassifyError::BadHeader(format!("unknown record '{other}'"))),
        }
    }
    if let Some(b) = block {
        profiles.push(b.finish()?);
    }
    Ok(profiles)
}
