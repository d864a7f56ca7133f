//! ROUGE-1/2/L scoring and run-level aggregation.
//!
//! Texts are tokenized with a pluggable [`Tokenizer`]; tokens without any
//! letter or digit are dropped. The default tokenizer lowercases Latin words
//! and splits CJK text into characters.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::GameRecord;
use crate::error::{Error, Result};
use crate::text::{BasicTokenizer, Tokenizer};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub fn from_counts(overlap: usize, candidate: usize, reference: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(overlap, candidate);
        let recall = ratio(overlap, reference);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeTriple {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore,
}

pub fn default_tokenizer() -> BasicTokenizer {
    BasicTokenizer::lowercased()
}

pub fn rouge_tokens(text: &str, tokenizer: &dyn Tokenizer) -> Vec<String> {
    tokenizer
        .tokenize(text)
        .into_iter()
        .filter(|t| t.is_word())
        .map(|t| t.text)
        .collect()
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap over pre-tokenized sequences.
pub fn rouge_n_tokens<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> Result<RougeScore> {
    if !(1..=2).contains(&n) {
        return Err(Error::Invalid(format!("ROUGE-N supports n = 1 or 2, got {n}")));
    }
    if reference.is_empty() {
        return Err(Error::Empty("reference"));
    }
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let overlap = cand
        .iter()
        .map(|(g, c)| refs.get(g).map_or(0, |r| (*c).min(*r)))
        .sum();
    let total = |m: &HashMap<Vec<&str>, usize>| m.values().sum::<usize>();
    Ok(RougeScore::from_counts(overlap, total(&cand), total(&refs)))
}

pub fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l_tokens<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Result<RougeScore> {
    if reference.is_empty() {
        return Err(Error::Empty("reference"));
    }
    let lcs = lcs_len(candidate, reference);
    Ok(RougeScore::from_counts(lcs, candidate.len(), reference.len()))
}

pub fn rouge_n(candidate: &str, reference: &str, n: usize, tokenizer: &dyn Tokenizer) -> Result<RougeScore> {
    rouge_n_tokens(
        &rouge_tokens(candidate, tokenizer),
        &rouge_tokens(reference, tokenizer),
        n,
    )
}

pub fn rouge_l(candidate: &str, reference: &str, tokenizer: &dyn Tokenizer) -> Result<RougeScore> {
    rouge_l_tokens(&rouge_tokens(candidate, tokenizer), &rouge_tokens(reference, tokenizer))
}

pub fn rouge_all(candidate: &str, reference: &str, tokenizer: &dyn Tokenizer) -> Result<RougeTriple> {
    let cand = rouge_tokens(candidate, tokenizer);
    let refs = rouge_tokens(reference, tokenizer);
    Ok(RougeTriple {
        rouge1: rouge_n_tokens(&cand, &refs, 1)?,
        rouge2: rouge_n_tokens(&cand, &refs, 2)?,
        rouge_l: rouge_l_tokens(&cand, &refs)?,
    })
}

/// One generated article.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub game_id: String,
    /// Generated news sentences, in commentary order.
    pub sentences: Vec<String>,
    pub article: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameScore {
    pub game_id: String,
    #[serde(flatten)]
    pub scores: RougeTriple,
}

/// Corpus means of the F1 scores and their unweighted average.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanScores {
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
    pub avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Sorted by game id.
    pub per_game: Vec<GameScore>,
    pub mean: MeanScores,
}

/// Scores every output against its game's reference article. Results do not
/// depend on the order of `outputs` or `references`.
pub fn evaluate_run(
    outputs: &[SummaryRecord],
    references: &[GameRecord],
    tokenizer: &dyn Tokenizer,
) -> Result<EvalReport> {
    if outputs.is_empty() {
        return Err(Error::Empty("summaries"));
    }
    let refs: HashMap<&str, &GameRecord> = references.iter().map(|g| (g.game_id.as_str(), g)).collect();
    let mut by_id = BTreeMap::new();
    for out in outputs {
        let game = refs
            .get(out.game_id.as_str())
            .ok_or_else(|| Error::UnknownGame(out.game_id.clone()))?;
        let reference = game.reference_article();
        let scores = rouge_all(&out.article, &reference, tokenizer).map_err(|e| match e {
            Error::Empty(_) => Error::Invalid(format!("game {} has an empty reference", out.game_id)),
            other => other,
        })?;
        if by_id.insert(out.game_id.clone(), scores).is_some() {
            return Err(Error::DuplicateId(out.game_id.clone()));
        }
    }
    let n = by_id.len() as f64;
    let mean_of = |f: fn(&RougeTriple) -> f64| by_id.values().map(f).sum::<f64>() / n;
    let rouge1 = mean_of(|s| s.rouge1.f1);
    let rouge2 = mean_of(|s| s.rouge2.f1);
    let rouge_l = mean_of(|s| s.rouge_l.f1);
    let mean = MeanScores {
        rouge1,
        rouge2,
        rouge_l,
        avg: (rouge1 + rouge2 + rouge_l) / 3.0,
    };
    let per_game = by_id
        .into_iter()
        .map(|(game_id, scores)| GameScore { game_id, scores })
        .collect();
    Ok(EvalReport { per_game, mean })
}

/// One row of an ablation table: a variant's means and its difference from
/// the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub mean: MeanScores,
    pub delta: MeanScores,
}

pub fn compare(baseline: &EvalReport, variants: &[(String, EvalReport)]) -> Vec<ComparisonRow> {
    let b = baseline.mean;
    variants
        .iter()
        .map(|(name, r)| {
            let m = r.mean;
            ComparisonRow {
                name: name.clone(),
                mean: m,
                delta: MeanScores {
                    rouge1: m.rouge1 - b.rouge1,
                    rouge2: m.rouge2 - b.rouge2,
                    rouge_l: m.rouge_l - b.rouge_l,
                    avg: m.avg - b.avg,
                },
            }
        })
        .collect()
}

/// Plain-text table with scores in percent.
pub fn format_comparison(rows: &[ComparisonRow]) -> String {
    let mut out = format!("{:<24} {:>8} {:>8} {:>8} {:>8}\n", "variant", "R-1", "R-2", "R-L", "Avg");
    for row in rows {
        let m = row.mean;
        let d = row.delta;
        out.push_str(&format!(
            "{:<24} {:>8.2} {:>8.2} {:>8.2} {:>8.2} ({:+.2})\n",
            row.name,
            100.0 * m.rouge1,
            100.0 * m.rouge2,
            100.0 * m.rouge_l,
            100.0 * m.avg,
            100.0 * d.avg
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Commentary;
    use proptest::prelude::*;

    fn tok() -> BasicTokenizer {
        default_tokenizer()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn unigram_example() {
        let s = rouge_n("a b c", "a b d", 1, &tok()).unwrap();
        assert!(close(s.precision, 2.0 / 3.0) && close(s.recall, 2.0 / 3.0) && close(s.f1, 2.0 / 3.0));
    }

    #[test]
    fn lcs_example() {
        let s = rouge_l("a b c d", "a c d", &tok()).unwrap();
        assert!(close(s.precision, 0.75));
        assert!(close(s.recall, 1.0));
        assert!(close(s.f1, 6.0 / 7.0));
        let r = rouge_l("c b a", "a b c", &tok()).unwrap();
        assert!(close(r.f1, 1.0 / 3.0));
    }

    #[test]
    fn identical_and_disjoint() {
        let t = rouge_all("Messi scored twice", "Messi scored twice", &tok()).unwrap();
        assert_eq!(t.rouge1.f1, 1.0);
        assert_eq!(t.rouge2.f1, 1.0);
        assert_eq!(t.rouge_l.f1, 1.0);
        let d = rouge_all("x y z", "a b c", &tok()).unwrap();
        assert_eq!(d, RougeTriple::default());
    }

    #[test]
    fn chinese_is_character_level() {
        let s = rouge_n("梅西进球", "梅西射门", 1, &tok()).unwrap();
        assert!(close(s.f1, 0.5));
    }

    #[test]
    fn errors() {
        assert!(matches!(rouge_n("a", "", 1, &tok()), Err(Error::Empty(_))));
        assert!(matches!(rouge_n("a", "!!", 1, &tok()), Err(Error::Empty(_))));
        assert!(rouge_n("a", "a", 3, &tok()).is_err());
        assert!(rouge_l("a", " ", &tok()).is_err());
        // single-token texts have no bigrams
        assert_eq!(rouge_n("a", "a", 2, &tok()).unwrap().f1, 0.0);
    }

    fn game(id: &str, news: &str) -> GameRecord {
        GameRecord::new(id, vec![Commentary::new(1, "0-0", "kick off")], vec![news.to_string()])
    }

    fn summary(id: &str, article: &str) -> SummaryRecord {
        SummaryRecord {
            game_id: id.into(),
            sentences: vec![article.into()],
            article: article.into(),
        }
    }

    #[test]
    fn run_means() {
        let games = vec![game("g1", "a b c"), game("g2", "d e f")];
        let single = evaluate_run(&[summary("g1", "a b c")], &games, &tok()).unwrap();
        assert_eq!(single.mean.avg, 1.0);
        let both = evaluate_run(&[summary("g1", "a b c"), summary("g2", "x y z")], &games, &tok()).unwrap();
        assert_eq!(both.mean.rouge1, 0.5);
        assert_eq!(both.mean.avg, 0.5);
        assert!(matches!(
            evaluate_run(&[summary("g9", "a")], &games, &tok()),
            Err(Error::UnknownGame(_))
        ));
        let json = serde_json::to_value(&both).unwrap();
        assert!(json["mean"]["rougeL"].is_number());
        assert!(json["per_game"][0]["rouge1"]["f1"].is_number());
    }

    #[test]
    fn comparison_deltas() {
        let games = vec![game("g1", "a b c")];
        let base = evaluate_run(&[summary("g1", "a b c")], &games, &tok()).unwrap();
        let var = evaluate_run(&[summary("g1", "a b")], &games, &tok()).unwrap();
        let rows = compare(&base, &[("w/o seg".into(), var.clone())]);
        assert!(close(rows[0].delta.avg, var.mean.avg - 1.0));
        assert!(format_comparison(&rows).contains("w/o seg"));
    }

    fn seq() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..8)
            .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn scores_are_bounded(c in seq(), r in seq()) {
            prop_assume!(!r.is_empty());
            for s in [rouge_n_tokens(&c, &r, 1).unwrap(), rouge_n_tokens(&c, &r, 2).unwrap(), rouge_l_tokens(&c, &r).unwrap()] {
                for v in [s.precision, s.recall, s.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                prop_assert!(s.f1 <= s.precision.max(s.recall) + 1e-12);
            }
        }

        #[test]
        fn unigram_f1_symmetric_for_equal_lengths(
            (c, r) in (1usize..8).prop_flat_map(|n| {
                let side = || prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), n)
                    .prop_map(|v| v.into_iter().map(String::from).collect::<Vec<_>>());
                (side(), side())
            })
        ) {
            let a = rouge_n_tokens(&c, &r, 1).unwrap().f1;
            let b = rouge_n_tokens(&r, &c, 1).unwrap().f1;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn run_is_order_invariant(texts in prop::collection::vec(seq(), 1..6), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let games: Vec<GameRecord> = texts.iter().enumerate()
                .map(|(i, t)| game(&format!("g{i}"), &format!("a {}", t.join(" ")))).collect();
            let mut outs: Vec<SummaryRecord> = texts.iter().enumerate()
                .map(|(i, t)| summary(&format!("g{i}"), &t.iter().rev().cloned().collect::<Vec<_>>().join(" "))).collect();
            let a = evaluate_run(&outs, &games, &tok()).unwrap();
            outs.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = evaluate_run(&outs, &games, &tok()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
