//! Review text → candidate (adjective, noun) pairs → validated adjectives.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use super::{Lexicon, PartOfSpeech};
use crate::error::Result;

/// Splits on whitespace; every non-alphanumeric character becomes its own
/// token. Case is preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.push(ch);
            continue;
        }
        if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        if !ch.is_whitespace() {
            tokens.push(ch.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// A token with a Penn Treebank style tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub text: String,
    pub tag: String,
}

impl TaggedToken {
    pub fn new(text: impl Into<String>, tag: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            tag: tag.into(),
        }
    }
}

pub fn is_adjective_tag(tag: &str) -> bool {
    matches!(tag, "JJ" | "JJR" | "JJS")
}

pub fn is_noun_tag(tag: &str) -> bool {
    matches!(tag, "NN" | "NNS" | "NNP" | "NNPS")
}

pub const TAG_ADJECTIVE: &str = "JJ";
pub const TAG_NOUN: &str = "NN";
pub const TAG_OTHER: &str = "OTHER";

/// Lexicon-backed tagger.
///
/// Adjective-only words get `JJ`, noun-only words `NN`. A word flagged as
/// both is `JJ` when the next token is noun-flagged and `NN` otherwise.
/// Everything else is `OTHER`.
pub fn tag_tokens<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Vec<TaggedToken> {
    let flags: Vec<(bool, bool)> = tokens
        .iter()
        .map(|t| {
            lexicon
                .get(&t.as_ref().to_lowercase())
                .map(|e| (e.has_pos(PartOfSpeech::Adjective), e.has_pos(PartOfSpeech::Noun)))
                .unwrap_or((false, false))
        })
        .collect();

    tokens
        .iter()
        .enumerate()
        .map(|(i, token)| {
            let next_is_noun = flags.get(i + 1).is_some_and(|&(_, noun)| noun);
            let tag = match flags[i] {
                (true, false) => TAG_ADJECTIVE,
                (false, true) => TAG_NOUN,
                (true, true) if next_is_noun => TAG_ADJECTIVE,
                (true, true) => TAG_NOUN,
                (false, false) => TAG_OTHER,
            };
            TaggedToken::new(token.as_ref(), tag)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub adjective: String,
    pub noun: String,
    pub source_review_id: String,
}

/// Every adjective-tagged token immediately followed by a noun-tagged token.
pub fn extract_candidate_pairs(tokens: &[TaggedToken], review_id: &str) -> Vec<CandidatePair> {
    tokens
        .windows(2)
        .filter(|w| is_adjective_tag(&w[0].tag) && is_noun_tag(&w[1].tag))
        .map(|w| CandidatePair {
            adjective: w[0].text.to_lowercase(),
            noun: w[1].text.to_lowercase(),
            source_review_id: review_id.to_string(),
        })
        .collect()
}

/// Keeps adjectives that carry at least one adjective gloss. Output is
/// sorted and free of duplicates.
pub fn validate_and_dedup(pairs: &[CandidatePair], lexicon: &Lexicon) -> Vec<String> {
    pairs
        .iter()
        .filter(|p| {
            lexicon
                .get(&p.adjective)
                .is_some_and(|e| e.has_pos(PartOfSpeech::Adjective))
        })
        .map(|p| p.adjective.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOutput {
    pub reviews: usize,
    pub pairs: Vec<CandidatePair>,
    pub adjectives: Vec<String>,
}

/// Runs the full pipeline over a corpus with one review per line. Review
/// ids are 1-based line numbers.
pub fn ingest_corpus<R: Read>(corpus: R, lexicon: &Lexicon) -> Result<IngestOutput> {
    let mut out = IngestOutput::default();
    for (idx, line) in BufReader::new(corpus).lines().enumerate() {
        let line = line?;
        out.reviews += 1;
        let tokens = tokenize(&line);
        let tagged = tag_tokens(&tokens, lexicon);
        out.pairs
            .extend(extract_candidate_pairs(&tagged, &(idx + 1).to_string()));
    }
    out.adjectives = validate_and_dedup(&out.pairs, lexicon);
    Ok(out)
}
