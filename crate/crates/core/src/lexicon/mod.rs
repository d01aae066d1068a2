//! Lexical resources: a WordNet-style gloss lexicon, SentiWordNet records,
//! and the review-to-adjective extraction pipeline.
//!
//! The gloss lexicon is a UTF-8 text file with one sense per line:
//!
//! ```text
//! shining<TAB>a<TAB>marked by exceptional merit
//! shining<TAB>a<TAB>reflecting light
//! ```
//!
//! A word may span many lines; glosses keep file order.

mod pipeline;
mod sentiwordnet;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pipeline::{
    extract_candidate_pairs, ingest_corpus, is_adjective_tag, is_noun_tag, tag_tokens, tokenize,
    validate_and_dedup, CandidatePair, IngestOutput, TaggedToken,
};
pub use sentiwordnet::{parse_sentiwordnet, read_sentiwordnet, SentiSynset};

/// Separator used when a word's glosses are joined into one text.
pub const GLOSS_SEPARATOR: &str = "; ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PartOfSpeech {
    Adjective,
    Noun,
    Verb,
    Adverb,
}

impl PartOfSpeech {
    pub fn code(self) -> char {
        match self {
            PartOfSpeech::Adjective => 'a',
            PartOfSpeech::Noun => 'n',
            PartOfSpeech::Verb => 'v',
            PartOfSpeech::Adverb => 'r',
        }
    }
}

impl FromStr for PartOfSpeech {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "a" => Ok(PartOfSpeech::Adjective),
            "n" => Ok(PartOfSpeech::Noun),
            "v" => Ok(PartOfSpeech::Verb),
            "r" => Ok(PartOfSpeech::Adverb),
            other => Err(format!("unknown part of speech {other:?}")),
        }
    }
}

impl fmt::Display for PartOfSpeech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// One definition of a word under a given part of speech.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sense {
    pub pos: PartOfSpeech,
    pub gloss: String,
}

/// A word together with every gloss the lexicon lists for it, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    word: String,
    senses: Vec<Sense>,
}

impl LexiconEntry {
    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn senses(&self) -> &[Sense] {
        &self.senses
    }

    pub fn has_pos(&self, pos: PartOfSpeech) -> bool {
        self.senses.iter().any(|s| s.pos == pos)
    }

    pub fn pos_flags(&self) -> Vec<PartOfSpeech> {
        let mut flags: Vec<_> = self.senses.iter().map(|s| s.pos).collect();
        flags.sort();
        flags.dedup();
        flags
    }

    pub fn glosses(&self, pos: PartOfSpeech) -> impl Iterator<Item = &str> {
        self.senses
            .iter()
            .filter(move |s| s.pos == pos)
            .map(|s| s.gloss.as_str())
    }

    /// The text fed to the classifier: adjective glosses when the word has
    /// any, otherwise every gloss, joined with `"; "` in file order.
    pub fn aggregated_gloss(&self) -> String {
        let parts: Vec<&str> = if self.has_pos(PartOfSpeech::Adjective) {
            self.glosses(PartOfSpeech::Adjective).collect()
        } else {
            self.senses.iter().map(|s| s.gloss.as_str()).collect()
        };
        parts.join(GLOSS_SEPARATOR)
    }
}

/// An immutable word → entry map. Keys are lowercase and unique.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, LexiconEntry>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&LexiconEntry> {
        self.entries.get(word)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Adds a sense, creating the entry if needed. The word is lowercased
    /// and the gloss trimmed.
    pub fn insert(&mut self, word: &str, pos: PartOfSpeech, gloss: &str) -> Result<()> {
        let word = normalize_word(word).map_err(|m| Error::parse(0, m))?;
        let gloss = gloss.trim();
        if gloss.is_empty() {
            return Err(Error::parse(0, format!("empty gloss for {word:?}")));
        }
        self.push_sense(word, pos, gloss.to_string());
        Ok(())
    }

    fn push_sense(&mut self, word: String, pos: PartOfSpeech, gloss: String) {
        self.entries
            .entry(word.clone())
            .or_insert_with(|| LexiconEntry {
                word,
                senses: Vec::new(),
            })
            .senses
            .push(Sense { pos, gloss });
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut lexicon = Lexicon::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.splitn(3, '\t');
            let (Some(word), Some(pos), Some(gloss)) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::parse(line_no, "expected word<TAB>pos<TAB>gloss"));
            };
            let word = normalize_word(word).map_err(|m| Error::parse(line_no, m))?;
            let pos: PartOfSpeech = pos.trim().parse().map_err(|m| Error::parse(line_no, m))?;
            let gloss = gloss.trim();
            if gloss.is_empty() {
                return Err(Error::parse(line_no, "empty gloss"));
            }
            lexicon.push_sense(word, pos, gloss.to_string());
        }
        Ok(lexicon)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for entry in self.entries.values() {
            for sense in &entry.senses {
                writeln!(out, "{}\t{}\t{}", entry.word, sense.pos, sense.gloss)?;
            }
        }
        Ok(())
    }
}

fn normalize_word(raw: &str) -> std::result::Result<String, String> {
    let word = raw.trim().to_lowercase();
    if word.is_empty() {
        return Err("empty word".into());
    }
    if word.chars().any(char::is_whitespace) {
        return Err(format!("word {word:?} contains whitespace"));
    }
    Ok(word)
}

/// Loads a gloss lexicon from disk. Repeated words merge their glosses in
/// file order.
pub fn parse_gloss_lexicon(path: impl AsRef<Path>) -> Result<Lexicon> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Lexicon::from_reader(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SHINING: &str = "shining\ta\tmarked by exceptional merit\n\
shining\ta\t made smooth and bright by or as if by rubbing; reflecting a sheen or glow \n\
shining\ta\treflecting light\n";

    #[test]
    fn shining_has_three_adjective_glosses() {
        let lex = Lexicon::from_reader(SHINING.as_bytes()).unwrap();
        let entry = lex.get("shining").unwrap();
        assert_eq!(entry.glosses(PartOfSpeech::Adjective).count(), 3);
        assert_eq!(
            entry.senses()[1].gloss,
            "made smooth and bright by or as if by rubbing; reflecting a sheen or glow"
        );
    }

    #[test]
    fn empty_input_gives_empty_lexicon() {
        let lex = Lexicon::from_reader("".as_bytes()).unwrap();
        assert!(lex.is_empty());
    }

    #[test]
    fn duplicates_merge_in_file_order() {
        let text = "Blue\ta\tof the color intermediate between green and violet\n\
angry\ta\tfeeling or showing anger\n\
blue\ta\thaving a color similar to that of a clear unclouded sky\n";
        let lex = Lexicon::from_reader(text.as_bytes()).unwrap();
        assert_eq!(lex.len(), 2);
        let blue: Vec<_> = lex.get("blue").unwrap().glosses(PartOfSpeech::Adjective).collect();
        assert_eq!(
            blue,
            [
                "of the color intermediate between green and violet",
                "having a color similar to that of a clear unclouded sky"
            ]
        );
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "good\ta\thaving desirable qualities\nbroken line without tabs\n";
        match Lexicon::from_reader(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let bad_pos = "good\tx\tsomething\n";
        assert!(matches!(
            Lexicon::from_reader(bad_pos.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn aggregated_gloss_prefers_adjective_senses() {
        let text = "cold\tn\ta mild viral infection\n\
cold\ta\thaving a low or inadequate temperature\n\
cold\ta\tfeeling or showing no enthusiasm\n";
        let lex = Lexicon::from_reader(text.as_bytes()).unwrap();
        let cold = lex.get("cold").unwrap();
        assert_eq!(
            cold.aggregated_gloss(),
            "having a low or inadequate temperature; feeling or showing no enthusiasm"
        );
        assert_eq!(cold.pos_flags(), [PartOfSpeech::Adjective, PartOfSpeech::Noun]);
    }

    fn arb_lexicon() -> impl Strategy<Value = Vec<(String, PartOfSpeech, String)>> {
        let pos = prop_oneof![
            Just(PartOfSpeech::Adjective),
            Just(PartOfSpeech::Noun),
            Just(PartOfSpeech::Verb),
            Just(PartOfSpeech::Adverb),
        ];
        proptest::collection::vec(
            ("[a-z][a-z-]{0,8}", pos, "[a-z][a-z ;,()]{0,30}[a-z]"),
            0..40,
        )
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(rows in arb_lexicon()) {
            let mut lex = Lexicon::new();
            for (w, p, g) in &rows {
                lex.insert(w, *p, g).unwrap();
            }
            let mut buf = Vec::new();
            lex.write_to(&mut buf).unwrap();
            let back = Lexicon::from_reader(buf.as_slice()).unwrap();
            prop_assert_eq!(back, lex);
        }
    }
}
