use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-6;

/// One SentiWordNet 3.0 record. `obj_score` is derived as `1 - pos - neg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentiSynset {
    pub synset_id: String,
    pub pos: String,
    pub pos_score: f64,
    pub neg_score: f64,
    pub obj_score: f64,
    /// Member words with their `#n` sense numbers stripped.
    pub terms: Vec<String>,
}

impl SentiSynset {
    /// Adjective synsets, including WordNet satellites (`s`).
    pub fn is_adjective(&self) -> bool {
        matches!(self.pos.as_str(), "a" | "s")
    }
}

fn parse_score(field: &str, name: &str, synset_id: &str, line: usize) -> Result<f64> {
    let value: f64 = field.trim().parse().map_err(|_| Error::InvalidSynset {
        synset_id: synset_id.to_string(),
        line,
        message: format!("{name} {field:?} is not a number"),
    })?;
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidSynset {
            synset_id: synset_id.to_string(),
            line,
            message: format!("{name} {value} outside [0, 1]"),
        });
    }
    Ok(value)
}

/// Reads the tab-separated `POS ID PosScore NegScore SynsetTerms Gloss`
/// format. Lines starting with `#` and blank lines are skipped.
pub fn read_sentiwordnet<R: Read>(reader: R) -> Result<Vec<SentiSynset>> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 5 {
            return Err(Error::parse(
                line_no,
                format!("expected 6 tab-separated columns, found {}", fields.len()),
            ));
        }
        let pos = fields[0].trim().to_string();
        let synset_id = fields[1].trim().to_string();
        let pos_score = parse_score(fields[2], "PosScore", &synset_id, line_no)?;
        let neg_score = parse_score(fields[3], "NegScore", &synset_id, line_no)?;
        if pos_score + neg_score > 1.0 + SUM_TOLERANCE {
            return Err(Error::InvalidSynset {
                synset_id,
                line: line_no,
                message: format!("PosScore + NegScore = {} exceeds 1", pos_score + neg_score),
            });
        }
        let obj_score = (1.0 - pos_score - neg_score).max(0.0);
        let terms = fields[4]
            .split_whitespace()
            .map(|t| t.split('#').next().unwrap_or(t).to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        out.push(SentiSynset {
            synset_id,
            pos,
            pos_score,
            neg_score,
            obj_score,
            terms,
        });
    }
    Ok(out)
}

pub fn parse_sentiwordnet(path: impl AsRef<Path>) -> Result<Vec<SentiSynset>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_sentiwordnet(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "# SentiWordNet fixture\n\
# POS\tID\tPosScore\tNegScore\tSynsetTerms\tGloss\n\
a\t00001740\t0.125\t0\table#1\t(usually followed by `to') having the necessary means\n\
a\t00002098\t0\t0.75\tunable#1\t(usually followed by `to') not having the necessary means\n\
a\t01800349\t0.625\t0\tgood#1 full#6\thaving desirable or positive qualities\n\
a\t00005205\t0\t0\tabsolute#1\tperfect or complete or pure\n\
n\t00001740\t0\t0\tentity#1\tthat which is perceived\n";

    #[test]
    fn parses_fixture_in_order() {
        let synsets = read_sentiwordnet(FIXTURE.as_bytes()).unwrap();
        let ids: Vec<_> = synsets.iter().map(|s| s.synset_id.as_str()).collect();
        assert_eq!(ids, ["00001740", "00002098", "01800349", "00005205", "00001740"]);
        assert_eq!(synsets[2].terms, ["good", "full"]);
        assert!(!synsets[4].is_adjective());
    }

    #[test]
    fn obj_score_is_the_remainder() {
        let synsets = read_sentiwordnet(FIXTURE.as_bytes()).unwrap();
        assert_eq!(synsets[2].obj_score, 0.375);
        assert_eq!(synsets[3].obj_score, 1.0);
        for s in &synsets {
            assert!((s.pos_score + s.neg_score + s.obj_score - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_scores_that_do_not_sum_to_one() {
        let bad = "a\t00000001\t0.75\t0.5\tweird#1\tbroken record\n";
        match read_sentiwordnet(bad.as_bytes()) {
            Err(Error::InvalidSynset { synset_id, line, .. }) => {
                assert_eq!(synset_id, "00000001");
                assert_eq!(line, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        let out_of_range = "a\t00000002\t1.5\t0\tweird#1\tbroken\n";
        assert!(matches!(
            read_sentiwordnet(out_of_range.as_bytes()),
            Err(Error::InvalidSynset { .. })
        ));
    }
}
