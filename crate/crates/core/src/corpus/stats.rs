use serde::{Deserialize, Serialize};

use super::GameRecord;
use crate::error::{Error, Result};
use crate::text::Tokenizer;

/// Value at rank `ceil(q * N)` of the sorted sample (1-based).
pub fn percentile_nearest_rank(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub mean: f64,
    pub p95: f64,
}

impl FieldStats {
    fn of(values: &[f64]) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Self {
            mean,
            p95: percentile_nearest_rank(values, 0.95).unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextStats {
    pub tokens: FieldStats,
    pub words: FieldStats,
    pub sentences: FieldStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub example_count: usize,
    pub news: TextStats,
    pub commentary: TextStats,
}

struct Counts {
    tokens: Vec<f64>,
    words: Vec<f64>,
    sentences: Vec<f64>,
}

impl Counts {
    fn new(n: usize) -> Self {
        Self {
            tokens: Vec::with_capacity(n),
            words: Vec::with_capacity(n),
            sentences: Vec::with_capacity(n),
        }
    }

    fn push<'a>(&mut self, tokenizer: &dyn Tokenizer, sentences: impl Iterator<Item = &'a str>) {
        let (mut toks, mut words, mut sents) = (0usize, 0usize, 0usize);
        for s in sentences {
            let t = tokenizer.tokenize(s);
            toks += t.len();
            words += t.iter().filter(|t| t.is_word()).count();
            sents += 1;
        }
        self.tokens.push(toks as f64);
        self.words.push(words as f64);
        self.sentences.push(sents as f64);
    }

    fn finish(&self) -> TextStats {
        TextStats {
            tokens: FieldStats::of(&self.tokens),
            words: FieldStats::of(&self.words),
            sentences: FieldStats::of(&self.sentences),
        }
    }
}

/// Per-game length statistics. Tokens come from `tokenizer`; words are the
/// tokens containing a letter or digit; each news line and each commentary
/// line counts as one sentence.
pub fn corpus_stats(dataset: &[GameRecord], tokenizer: &dyn Tokenizer) -> Result<StatsReport> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut news = Counts::new(dataset.len());
    let mut commentary = Counts::new(dataset.len());
    for game in dataset {
        news.push(tokenizer, game.news.iter().map(String::as_str));
        commentary.push(tokenizer, game.commentaries.iter().map(|c| c.c.as_str()));
    }
    Ok(StatsReport {
        example_count: dataset.len(),
        news: news.finish(),
        commentary: commentary.finish(),
    })
}
