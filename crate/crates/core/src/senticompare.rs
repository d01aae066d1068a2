//! Subjectivity of adjectives according to SentiWordNet, and its overlap
//! with Mental/Physical labels.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::lexicon::SentiSynset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SynsetClass {
    SubSyn,
    ObjSyn,
}

/// SubSyn when the larger of the positive and negative scores strictly beats
/// the objective score. A tie is ObjSyn.
pub fn classify_synset(s: &SentiSynset) -> SynsetClass {
    if s.pos_score.max(s.neg_score) > s.obj_score {
        SynsetClass::SubSyn
    } else {
        SynsetClass::ObjSyn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subjectivity {
    Subjective,
    Objective,
    Dual,
}

impl Subjectivity {
    pub const ALL: [Subjectivity; 3] = [Subjectivity::Subjective, Subjectivity::Objective, Subjectivity::Dual];

    pub fn as_str(&self) -> &'static str {
        match self {
            Subjectivity::Subjective => "Subjective",
            Subjectivity::Objective => "Objective",
            Subjectivity::Dual => "Dual",
        }
    }
}

impl fmt::Display for Subjectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSubjectivity {
    pub word: String,
    pub label: Subjectivity,
    pub subsyn_count: usize,
    pub objsyn_count: usize,
}

/// Classifies a word from its adjective synsets.
pub fn classify_word<'a, I>(word: &str, synsets: I) -> Result<WordSubjectivity>
where
    I: IntoIterator<Item = &'a SentiSynset>,
{
    let (mut sub, mut obj) = (0, 0);
    for s in synsets {
        match classify_synset(s) {
            SynsetClass::SubSyn => sub += 1,
            SynsetClass::ObjSyn => obj += 1,
        }
    }
    let label = match (sub > 0, obj > 0) {
        (true, false) => Subjectivity::Subjective,
        (false, true) => Subjectivity::Objective,
        (true, true) => Subjectivity::Dual,
        (false, false) => return Err(Error::NotInLexicon(word.to_string())),
    };
    Ok(WordSubjectivity {
        word: word.to_string(),
        label,
        subsyn_count: sub,
        objsyn_count: obj,
    })
}

/// Adjective synsets grouped by member word. Other parts of speech are ignored.
pub fn adjective_index(synsets: &[SentiSynset]) -> BTreeMap<String, Vec<&SentiSynset>> {
    let mut index: BTreeMap<String, Vec<&SentiSynset>> = BTreeMap::new();
    for s in synsets.iter().filter(|s| s.is_adjective()) {
        for term in &s.terms {
            let entry = index.entry(term.to_lowercase()).or_default();
            // a word listed twice in one synset still belongs to it once
            if !entry.iter().any(|e| e.synset_id == s.synset_id && e.pos == s.pos) {
                entry.push(s);
            }
        }
    }
    index
}

/// Subjectivity of every adjective in the resource.
pub fn word_subjectivity(synsets: &[SentiSynset]) -> BTreeMap<String, WordSubjectivity> {
    adjective_index(synsets)
        .into_iter()
        .map(|(word, group)| {
            let ws = classify_word(&word, group).expect("index groups are non-empty");
            (word, ws)
        })
        .collect()
}

/// Counts of one MPC class across the three subjectivity columns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTabRow {
    pub subjective: usize,
    pub objective: usize,
    pub dual: usize,
}

impl CrossTabRow {
    pub fn total(&self) -> usize {
        self.subjective + self.objective + self.dual
    }

    fn bump(&mut self, s: Subjectivity) {
        match s {
            Subjectivity::Subjective => self.subjective += 1,
            Subjectivity::Objective => self.objective += 1,
            Subjectivity::Dual => self.dual += 1,
        }
    }

    /// Row-normalised fractions; zeros for an empty row.
    pub fn fractions(&self) -> [f64; 3] {
        let n = self.total();
        if n == 0 {
            return [0.0; 3];
        }
        let n = n as f64;
        [self.subjective as f64 / n, self.objective as f64 / n, self.dual as f64 / n]
    }

    /// Fractions as whole percentages (round half away from zero).
    pub fn percentages(&self) -> [u32; 3] {
        self.fractions().map(|f| (f * 100.0).round() as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTab {
    pub mental: CrossTabRow,
    pub physical: CrossTabRow,
    /// Labeled words with no adjective synset.
    pub missing_subjectivity: usize,
    /// Adjectives with no MPC label.
    pub missing_label: usize,
}

impl CrossTab {
    pub fn row(&self, label: Label) -> &CrossTabRow {
        match label {
            Label::Mental => &self.mental,
            Label::Physical => &self.physical,
        }
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<10}{:>12}{:>12}{:>8}{:>8}\n", "", "Subjective", "Objective", "Dual", "n");
        for label in [Label::Mental, Label::Physical] {
            let row = self.row(label);
            let [s, o, d] = row.percentages();
            out.push_str(&format!(
                "{:<10}{:>11}%{:>11}%{:>7}%{:>8}\n",
                match label {
                    Label::Mental => "Mental",
                    Label::Physical => "Physical",
                },
                s,
                o,
                d,
                row.total()
            ));
        }
        out.push_str(&format!(
            "excluded: {} labeled words without synsets, {} adjectives without labels\n",
            self.missing_subjectivity, self.missing_label
        ));
        out
    }
}

/// Distribution of subjectivity classes per MPC class over the words present
/// in both maps.
pub fn cross_tab(
    mpc_labels: &BTreeMap<String, Label>,
    subjectivity: &BTreeMap<String, WordSubjectivity>,
) -> Result<CrossTab> {
    let mut tab = CrossTab {
        mental: CrossTabRow::default(),
        physical: CrossTabRow::default(),
        missing_subjectivity: 0,
        missing_label: subjectivity.keys().filter(|w| !mpc_labels.contains_key(*w)).count(),
    };
    for (word, label) in mpc_labels {
        match subjectivity.get(word) {
            Some(ws) => match label {
                Label::Mental => tab.mental.bump(ws.label),
                Label::Physical => tab.physical.bump(ws.label),
            },
            None => tab.missing_subjectivity += 1,
        }
    }
    if tab.mental.total() + tab.physical.total() == 0 {
        return Err(Error::EmptyIntersection);
    }
    Ok(tab)
}
