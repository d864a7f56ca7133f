//! Weak-supervision alignment of news sentences to commentary sentences.
//!
//! A news sentence that opens with a minute marker ("In the 27th minute, ...")
//! is compared against every commentary whose timeline falls in
//! `[minute, minute + window]`; the most similar one becomes its pair. Paired
//! commentaries are the positive labels for the selector, and the pairs are
//! the rewriter's training data.

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{Commentary, GameRecord};
use crate::encoder::EncoderBackend;
use crate::error::{Error, Result};
use crate::text::{BasicTokenizer, Tokenizer};

/// Minute marker found at the start of a news sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimePrefix {
    pub minute: u32,
    /// Char span of the matched marker.
    pub raw_span: (usize, usize),
}

/// Default marker patterns. Each needs a `min` group; an `extra` group holds
/// stoppage time and is added to `min`.
pub const DEFAULT_PREFIX_PATTERNS: &[&str] = &[
    r"(?i)^in\s+the\s+(?P<min>\d{1,3})(?:\s*\+\s*(?P<extra>\d{1,2}))?\s*(?:st|nd|rd|th)?[\s-]*minutes?\b",
    r"^第\s*(?P<min>\d{1,3})(?:\s*\+\s*(?P<extra>\d{1,2}))?\s*分钟",
];

#[derive(Debug, Clone)]
pub struct PrefixMatcher {
    patterns: Vec<Regex>,
    max_leading: usize,
}

impl Default for PrefixMatcher {
    fn default() -> Self {
        Self::new(DEFAULT_PREFIX_PATTERNS, 3).expect("default patterns compile")
    }
}

fn is_separator(c: char) -> bool {
    c.is_whitespace() || matches!(c, ',' | '，' | '、' | ';' | '；')
}

impl PrefixMatcher {
    /// `max_leading` connective tokens may precede the marker.
    pub fn new<S: AsRef<str>>(patterns: &[S], max_leading: usize) -> Result<Self> {
        let patterns = patterns
            .iter()
            .map(|p| {
                let re = Regex::new(p.as_ref())
                    .map_err(|e| Error::Config(format!("prefix pattern: {e}")))?;
                if re.capture_names().all(|n| n != Some("min")) {
                    return Err(Error::Config(format!(
                        "prefix pattern `{}` has no `min` group",
                        p.as_ref()
                    )));
                }
                Ok(re)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            patterns,
            max_leading,
        })
    }

    /// Byte offsets where the sentence, or one of its first `max_leading`
    /// connective tokens' successors, starts.
    fn starts(&self, sentence: &str) -> Vec<usize> {
        let mut starts = Vec::new();
        let mut in_token = false;
        for (i, c) in sentence.char_indices() {
            let sep = is_separator(c);
            if !sep && !in_token {
                starts.push(i);
                if starts.len() > self.max_leading {
                    break;
                }
            }
            in_token = !sep;
        }
        starts
    }

    pub fn extract(&self, sentence: &str) -> Option<TimePrefix> {
        for start in self.starts(sentence) {
            let rest = &sentence[start..];
            for re in &self.patterns {
                let Some(caps) = re.captures(rest) else {
                    continue;
                };
                let Some(minute) = caps.name("min").and_then(|m| m.as_str().parse::<u32>().ok())
                else {
                    continue;
                };
                let extra = caps
                    .name("extra")
                    .and_then(|m| m.as_str().parse::<u32>().ok())
                    .unwrap_or(0);
                let whole = caps.get(0).expect("group 0");
                let to_chars = |byte: usize| sentence[..byte].chars().count();
                return Some(TimePrefix {
                    minute: minute + extra,
                    raw_span: (to_chars(start + whole.start()), to_chars(start + whole.end())),
                });
            }
        }
        None
    }
}

/// [`PrefixMatcher::extract`] with the default patterns.
pub fn extract_time_prefix(news_sentence: &str) -> Option<TimePrefix> {
    static MATCHER: OnceLock<PrefixMatcher> = OnceLock::new();
    MATCHER.get_or_init(PrefixMatcher::default).extract(news_sentence)
}

/// Indices of commentaries with `minute <= t <= minute + span`, in document
/// order. Commentaries must be sorted by `t`.
pub fn candidate_window(minute: u32, span: u32, commentaries: &[Commentary]) -> Vec<usize> {
    let lo = commentaries.partition_point(|c| c.t < minute);
    let hi = commentaries.partition_point(|c| c.t <= minute.saturating_add(span));
    (lo..hi.max(lo)).collect()
}

pub trait SentenceSimilarity: Send + Sync {
    fn similarity(&self, a: &str, b: &str) -> f64;
}

/// F1 of clipped token overlap: symmetric, in [0, 1], 1 on identical input.
#[derive(Debug, Clone, Copy)]
pub struct TokenF1Similarity<T = BasicTokenizer> {
    pub tokenizer: T,
}

impl Default for TokenF1Similarity {
    fn default() -> Self {
        Self {
            tokenizer: BasicTokenizer::lowercased(),
        }
    }
}

impl<T: Tokenizer> SentenceSimilarity for TokenF1Similarity<T> {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        let ta = self.tokenizer.strings(a);
        let tb = self.tokenizer.strings(b);
        if ta.is_empty() || tb.is_empty() {
            return if ta.is_empty() && tb.is_empty() { 1.0 } else { 0.0 };
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in &ta {
            *counts.entry(t).or_default() += 1;
        }
        let mut overlap = 0usize;
        for t in &tb {
            if let Some(c) = counts.get_mut(t.as_str()) {
                if *c > 0 {
                    *c -= 1;
                    overlap += 1;
                }
            }
        }
        2.0 * overlap as f64 / (ta.len() + tb.len()) as f64
    }
}

/// Greedy-matching F1 of token embedding cosines (BERTScore without idf or
/// baseline rescaling) over any [`EncoderBackend`].
pub struct EmbeddingSimilarity<E> {
    pub encoder: E,
}

impl<E: EncoderBackend> EmbeddingSimilarity<E> {
    fn normalized(&self, text: &str) -> Vec<Vec<f64>> {
        let toks: Vec<String> = self
            .encoder
            .tokenize(text)
            .into_iter()
            .take(self.encoder.max_len())
            .map(|t| t.text)
            .collect();
        self.encoder
            .encode(&toks)
            .into_iter()
            .map(|v| {
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                v.into_iter().map(|x| x / norm).collect()
            })
            .collect()
    }
}

impl<E: EncoderBackend> SentenceSimilarity for EmbeddingSimilarity<E> {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        let ea = self.normalized(a);
        let eb = self.normalized(b);
        if ea.is_empty() || eb.is_empty() {
            return 0.0;
        }
        let cos = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        let greedy = |from: &[Vec<f64>], to: &[Vec<f64>]| {
            from.iter()
                .map(|x| to.iter().map(|y| cos(x, y)).fold(f64::NEG_INFINITY, f64::max))
                .sum::<f64>()
                / from.len() as f64
        };
        let p = greedy(&ea, &eb);
        let r = greedy(&eb, &ea);
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedPair {
    pub game_id: String,
    pub news_index: usize,
    pub commentary_index: usize,
    pub minute: u32,
    pub similarity: f64,
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub matcher: PrefixMatcher,
    /// Window length in minutes after the marker minute.
    pub window_span: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            matcher: PrefixMatcher::default(),
            window_span: 3,
        }
    }
}

/// Pairs every time-prefixed news sentence with its most similar commentary
/// in the candidate window. Ties go to the smaller timeline, then the
/// smaller index.
pub fn map_article(
    game: &GameRecord,
    sim: &dyn SentenceSimilarity,
    cfg: &OracleConfig,
) -> Vec<MappedPair> {
    let mut pairs = Vec::new();
    for (news_index, sentence) in game.news.iter().enumerate() {
        let Some(prefix) = cfg.matcher.extract(sentence) else {
            continue;
        };
        let mut best: Option<(usize, f64)> = None;
        for j in candidate_window(prefix.minute, cfg.window_span, &game.commentaries) {
            let score = sim.similarity(sentence, &game.commentaries[j].c);
            let better = match best {
                None => true,
                Some((bj, bs)) => {
                    score > bs
                        || (score == bs && game.commentaries[j].t < game.commentaries[bj].t)
                }
            };
            if better {
                best = Some((j, score));
            }
        }
        if let Some((commentary_index, similarity)) = best {
            pairs.push(MappedPair {
                game_id: game.game_id.clone(),
                news_index,
                commentary_index,
                minute: prefix.minute,
                similarity,
            });
        }
    }
    pairs
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportanceLabels {
    pub game_id: String,
    pub labels: Vec<u8>,
}

impl ImportanceLabels {
    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }
}

pub fn derive_labels(game: &GameRecord, pairs: &[MappedPair]) -> Result<ImportanceLabels> {
    let m = game.commentaries.len();
    let mut labels = vec![0u8; m];
    for p in pairs {
        if p.commentary_index >= m {
            return Err(Error::OutOfRange {
                index: p.commentary_index,
                len: m,
            });
        }
        if p.news_index >= game.news.len() {
            return Err(Error::OutOfRange {
                index: p.news_index,
                len: game.news.len(),
            });
        }
        labels[p.commentary_index] = 1;
    }
    Ok(ImportanceLabels {
        game_id: game.game_id.clone(),
        labels,
    })
}

/// Distinct commentary indices used by a set of pairs.
pub fn paired_indices(pairs: &[MappedPair]) -> BTreeSet<usize> {
    pairs.iter().map(|p| p.commentary_index).collect()
}
