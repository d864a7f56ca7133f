use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::CandidateSet;

/// A labelled span reported by a tagger. Labels follow the usual NER
/// conventions (`PER`, `ORG`, `LOC`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl TaggedSpan {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        Self {
            start,
            end,
            label: label.into(),
        }
    }
}

pub trait NerTagger {
    /// Spans use char offsets into `sentence`.
    fn tag(&self, sentence: &str) -> Result<Vec<TaggedSpan>, String>;

    /// Whether one instance may be shared across threads for concurrent
    /// tagging.
    fn is_shareable(&self) -> bool {
        false
    }
}

/// Longest-match, left-to-right dictionary tagger.
///
/// Latin-script names only match at word boundaries; CJK names match
/// anywhere.
#[derive(Debug, Clone, Default)]
pub struct GazetteerTagger {
    entries: Vec<(Vec<char>, String)>,
}

impl GazetteerTagger {
    pub fn new<I, S, L>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, L)>,
        S: AsRef<str>,
        L: Into<String>,
    {
        let mut entries: Vec<(Vec<char>, String)> = entries
            .into_iter()
            .map(|(name, label)| (name.as_ref().chars().collect(), label.into()))
            .filter(|(name, _): &(Vec<char>, String)| !name.is_empty())
            .collect();
        // longest first; stable so earlier entries win among equal lengths
        entries.sort_by_key(|e| std::cmp::Reverse(e.0.len()));
        Self { entries }
    }

    /// Player titles as `PER`, team titles as `ORG`.
    pub fn from_candidates(candidates: &CandidateSet) -> Self {
        Self::new(
            candidates
                .players
                .iter()
                .map(|p| (p.title.as_str(), "PER"))
                .chain(candidates.teams.iter().map(|t| (t.title.as_str(), "ORG"))),
        )
    }

    pub fn add(&mut self, name: &str, label: &str) {
        let mut entries = std::mem::take(&mut self.entries);
        entries.push((name.chars().collect(), label.to_string()));
        entries.sort_by_key(|e| std::cmp::Reverse(e.0.len()));
        self.entries = entries;
    }
}

fn is_latin_word(c: char) -> bool {
    c.is_alphanumeric() && !crate::text::is_cjk(c)
}

impl NerTagger for GazetteerTagger {
    fn tag(&self, sentence: &str) -> Result<Vec<TaggedSpan>, String> {
        let chars: Vec<char> = sentence.chars().collect();
        let mut spans = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let hit = self.entries.iter().find(|(name, _)| {
                let end = i + name.len();
                if end > chars.len() || chars[i..end] != name[..] {
                    return false;
                }
                let left_ok = i == 0 || !(is_latin_word(chars[i - 1]) && is_latin_word(name[0]));
                let right_ok = end == chars.len()
                    || !(is_latin_word(chars[end]) && is_latin_word(name[name.len() - 1]));
                left_ok && right_ok
            });
            match hit {
                Some((name, label)) => {
                    spans.push(TaggedSpan::new(i, i + name.len(), label.clone()));
                    i += name.len();
                }
                None => i += 1,
            }
        }
        Ok(spans)
    }

    fn is_shareable(&self) -> bool {
        true
    }
}

/// Replays spans produced offline by an external NER model, keyed by
/// sentence text. Unknown sentences are a tagger failure.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PrecomputedTagger {
    pub predictions: HashMap<String, Vec<TaggedSpan>>,
}

impl NerTagger for PrecomputedTagger {
    fn tag(&self, sentence: &str) -> Result<Vec<TaggedSpan>, String> {
        self.predictions
            .get(sentence)
            .cloned()
            .ok_or_else(|| "no precomputed prediction".to_string())
    }

    fn is_shareable(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn longest_match_wins() {
        let g = GazetteerTagger::new([("De Yang", "PER"), ("Yang", "PER")]);
        let spans = g.tag("De Yang was replaced").unwrap();
        assert_eq!(spans, [TaggedSpan::new(0, 7, "PER")]);
    }

    #[test]
    fn word_boundaries_for_latin_only() {
        let g = GazetteerTagger::new([("Lee", "PER"), ("巴萨", "ORG")]);
        assert!(g.tag("Leeds attacked").unwrap().is_empty());
        assert_eq!(g.tag("Lee, again").unwrap().len(), 1);
        assert_eq!(g.tag("对阵巴萨的比赛").unwrap(), [TaggedSpan::new(2, 4, "ORG")]);
    }
}
