//! Key commentary sentence selection.
//!
//! Each commentary sentence is encoded inside a window of its document
//! centred on it; the sentence representation is the mean of its token
//! outputs, scored by a logistic classifier.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::GameRecord;
use crate::encoder::{EncoderBackend, MockEncoder};
use crate::error::{Error, Result};
pub use crate::nn::TrainingCurve;
use crate::nn::{self, Adam};
use crate::oracle::ImportanceLabels;

/// A commentary document tokenized once, with each sentence's token span.
#[derive(Debug, Clone)]
pub struct SelectorDoc {
    pub tokens: Vec<String>,
    pub spans: Vec<(usize, usize)>,
}

impl SelectorDoc {
    pub fn new(game: &GameRecord, encoder: &dyn EncoderBackend) -> Self {
        Self::from_sentences(game.commentaries.iter().map(|c| c.c.as_str()), encoder)
    }

    pub fn from_sentences<'a>(
        sentences: impl IntoIterator<Item = &'a str>,
        encoder: &dyn EncoderBackend,
    ) -> Self {
        let mut tokens = Vec::new();
        let mut spans = Vec::new();
        for s in sentences {
            let start = tokens.len();
            tokens.extend(encoder.tokenize(s).into_iter().map(|t| t.text));
            spans.push((start, tokens.len()));
        }
        Self { tokens, spans }
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }
}

/// Token range `[start, end)` fed to the encoder, and the target span inside
/// it (possibly truncated).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: usize,
    pub end: usize,
    pub target: (usize, usize),
    pub truncated: bool,
}

/// Window of at most `max_len` tokens centred on the target span and clamped
/// to the document. With odd slack the extra token goes to the right. A
/// target longer than `max_len` keeps its first `max_len` tokens.
pub fn window_for_target(doc_len: usize, target: (usize, usize), max_len: usize) -> Window {
    let (s, e) = target;
    let tlen = e - s;
    if tlen > max_len {
        log::warn!("target sentence of {tlen} tokens exceeds window {max_len}; truncating");
        return Window {
            start: s,
            end: s + max_len,
            target: (s, s + max_len),
            truncated: true,
        };
    }
    if doc_len <= max_len {
        return Window {
            start: 0,
            end: doc_len,
            target,
            truncated: false,
        };
    }
    let left = (max_len - tlen) / 2;
    let start = s.saturating_sub(left).min(doc_len - max_len);
    Window {
        start,
        end: start + max_len,
        target,
        truncated: false,
    }
}

/// Mean of the rows `span.0..span.1` of a window encoding.
pub fn sentence_representation(encoding: &[Vec<f64>], span: (usize, usize)) -> Result<Vec<f64>> {
    if span.0 >= span.1 {
        return Err(Error::Empty("target span"));
    }
    if span.1 > encoding.len() {
        return Err(Error::OutOfRange {
            index: span.1,
            len: encoding.len(),
        });
    }
    Ok(nn::mean_of(&encoding[span.0..span.1]).expect("non-empty span"))
}

/// Encodes sentence `index` in its window and returns its representation.
pub fn represent(encoder: &dyn EncoderBackend, doc: &SelectorDoc, index: usize) -> Result<Vec<f64>> {
    let &target = doc.spans.get(index).ok_or(Error::OutOfRange {
        index,
        len: doc.len(),
    })?;
    let w = window_for_target(doc.tokens.len(), target, encoder.max_len());
    let encoding = encoder.encode(&doc.tokens[w.start..w.end]);
    sentence_representation(&encoding, (w.target.0 - w.start, w.target.1 - w.start))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorModel<E = MockEncoder> {
    pub encoder: E,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Decision threshold on the predicted probability.
    pub tau: f64,
}

impl<E: EncoderBackend> SelectorModel<E> {
    pub fn new(encoder: E, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Config(format!("tau = {tau} must lie in (0, 1)")));
        }
        let dim = encoder.dim();
        Ok(Self {
            encoder,
            weights: vec![0.0; dim],
            bias: 0.0,
            tau,
        })
    }

    pub fn logit(&self, rep: &[f64]) -> f64 {
        nn::dot(&self.weights, rep) + self.bias
    }

    pub fn predict_importance(&self, doc: &SelectorDoc, index: usize) -> Result<f64> {
        let rep = represent(&self.encoder, doc, index)?;
        Ok(nn::sigmoid(self.logit(&rep)))
    }

    pub fn probabilities(&self, doc: &SelectorDoc) -> Result<Vec<f64>> {
        (0..doc.len()).map(|i| self.predict_importance(doc, i)).collect()
    }

    /// Indices whose probability reaches `tau`, in document order.
    pub fn select_key_sentences(&self, game: &GameRecord) -> Result<Selection> {
        if game.commentaries.is_empty() {
            return Err(Error::Empty("commentary document"));
        }
        let doc = SelectorDoc::new(game, &self.encoder);
        let probabilities = self.probabilities(&doc)?;
        Ok(Selection {
            game_id: game.game_id.clone(),
            selected_indices: threshold_indices(&probabilities, self.tau),
            probabilities,
        })
    }
}

pub fn threshold_indices(probabilities: &[f64], tau: f64) -> Vec<usize> {
    probabilities
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= tau)
        .map(|(i, _)| i)
        .collect()
}

/// One row of `selected.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub game_id: String,
    pub selected_indices: Vec<usize>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorHyper {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub tau: f64,
    /// Weight of positive examples in the loss; `None` is plain cross-entropy.
    #[serde(default)]
    pub pos_weight: Option<f64>,
}

impl Default for SelectorHyper {
    fn default() -> Self {
        Self {
            lr: 0.05,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            tau: 0.5,
            pos_weight: None,
        }
    }
}

/// Binary cross-entropy of one logit, computed without forming the
/// probability.
pub fn bce_with_logit(logit: f64, label: f64, pos_weight: f64) -> f64 {
    pos_weight * label * (nn::softplus(logit) - logit) + (1.0 - label) * nn::softplus(logit)
}

/// Mean binary cross-entropy over a batch of probabilities.
pub fn cross_entropy(probabilities: &[f64], labels: &[u8]) -> f64 {
    let n = probabilities.len() as f64;
    probabilities
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(1e-12, 1.0 - 1e-12);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n
}

struct Example {
    rep: Vec<f64>,
    label: f64,
}

fn evaluate<E: EncoderBackend>(model: &SelectorModel<E>, data: &[Example], pos_weight: f64) -> (f64, f64) {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for ex in data {
        let z = model.logit(&ex.rep);
        loss += bce_with_logit(z, ex.label, pos_weight);
        let predicted = nn::sigmoid(z) >= model.tau;
        correct += usize::from(predicted == (ex.label == 1.0));
    }
    let n = data.len() as f64;
    (loss / n, correct as f64 / n)
}

/// Trains the classifier head with the encoder frozen. Sentence
/// representations are computed once up front.
pub fn train_selector<E: EncoderBackend>(
    encoder: E,
    data: &[(GameRecord, ImportanceLabels)],
    hp: &SelectorHyper,
) -> Result<(SelectorModel<E>, TrainingCurve)> {
    if data.is_empty() {
        return Err(Error::Empty("selector training set"));
    }
    if hp.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let mut model = SelectorModel::new(encoder, hp.tau)?;
    let mut examples = Vec::new();
    for (game, labels) in data {
        if labels.labels.len() != game.commentaries.len() {
            return Err(Error::Invalid(format!(
                "game `{}`: {} labels for {} commentaries",
                game.game_id,
                labels.labels.len(),
                game.commentaries.len()
            )));
        }
        let doc = SelectorDoc::new(game, &model.encoder);
        for (i, &y) in labels.labels.iter().enumerate() {
            examples.push(Example {
                rep: represent(&model.encoder, &doc, i)?,
                label: f64::from(y),
            });
        }
    }
    if examples.is_empty() {
        return Err(Error::Empty("selector training set"));
    }

    let pos_weight = hp.pos_weight.unwrap_or(1.0);
    let dim = model.weights.len();
    let mut params = vec![0.0; dim + 1];
    let mut opt = Adam::new(hp.lr, dim + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut curve = TrainingCurve::default();
    let (l, a) = evaluate(&model, &examples, pos_weight);
    curve.loss.push(l);
    curve.accuracy.push(a);

    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.batch_size) {
            let mut grad = vec![0.0; dim + 1];
            for &i in batch {
                let ex = &examples[i];
                let p = nn::sigmoid(model.logit(&ex.rep));
                // d/dz of the weighted BCE
                let w = if ex.label == 1.0 { pos_weight } else { 1.0 };
                let dz = w * (p - ex.label);
                for (g, x) in grad[..dim].iter_mut().zip(&ex.rep) {
                    *g += dz * x;
                }
                grad[dim] += dz;
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            opt.step(&mut params, &grad);
            model.weights.copy_from_slice(&params[..dim]);
            model.bias = params[dim];
        }
        let (l, a) = evaluate(&model, &examples, pos_weight);
        curve.loss.push(l);
        curve.accuracy.push(a);
    }
    Ok((model, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Commentary;

    /// Enumerates every feasible window start and keeps the most balanced
    /// one (ties: larger start).
    fn oracle_window(doc_len: usize, target: (usize, usize), max_len: usize) -> (usize, usize) {
        if doc_len <= max_len {
            return (0, doc_len);
        }
        let mut best: Option<(usize, i64)> = None;
        for start in 0..=doc_len - max_len {
            let end = start + max_len;
            if start > target.0 || end < target.1 {
                continue;
            }
            let imbalance = ((target.0 - start) as i64 - (end - target.1) as i64).abs();
            if best.is_none_or(|(_, b)| imbalance <= b) {
                best = Some((start, imbalance));
            }
        }
        let s = best.unwrap().0;
        (s, s + max_len)
    }

    #[test]
    fn window_examples() {
        let w = window_for_target(1000, (500, 520), 512);
        assert_eq!((w.start, w.end), (254, 766));
        assert_eq!((w.start, w.end), oracle_window(1000, (500, 520), 512));
        let w = window_for_target(1000, (0, 10), 512);
        assert_eq!((w.start, w.end), (0, 512));
        let w = window_for_target(100, (40, 50), 512);
        assert_eq!((w.start, w.end), (0, 100));
        let w = window_for_target(1000, (100, 700), 512);
        assert!(w.truncated);
        assert_eq!(w.target, (100, 612));
    }

    #[test]
    fn windows_match_enumeration_oracle() {
        for doc_len in [1, 7, 20, 33] {
            for max_len in [1, 4, 9, 16, 40] {
                for s in 0..doc_len {
                    for e in s + 1..=doc_len.min(s + max_len) {
                        let w = window_for_target(doc_len, (s, e), max_len);
                        assert_eq!((w.start, w.end), oracle_window(doc_len, (s, e), max_len));
                        assert!(w.start <= s && e <= w.end && w.end - w.start <= max_len);
                    }
                }
            }
        }
    }

    #[test]
    fn representation_is_mean() {
        let enc = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![5.0, 5.0]];
        assert_eq!(sentence_representation(&enc, (0, 2)).unwrap(), [0.5, 0.5]);
        assert_eq!(sentence_representation(&enc, (2, 3)).unwrap(), [5.0, 5.0]);
        let rev: Vec<Vec<f64>> = enc[..2].iter().rev().cloned().collect();
        assert_eq!(sentence_representation(&rev, (0, 2)).unwrap(), [0.5, 0.5]);
        assert!(sentence_representation(&enc, (1, 1)).is_err());
    }

    fn game(texts: &[&str]) -> GameRecord {
        GameRecord::new(
            "g",
            texts.iter().enumerate().map(|(i, t)| Commentary::new(i as u32, "0-0", *t)).collect(),
            vec![],
        )
    }

    #[test]
    fn zero_model_predicts_half() {
        let model = SelectorModel::new(MockEncoder::default(), 0.5).unwrap();
        let g = game(&["a b", "c d e"]);
        let doc = SelectorDoc::new(&g, &model.encoder);
        assert_eq!(model.predict_importance(&doc, 1).unwrap(), 0.5);
        assert!(model.predict_importance(&doc, 2).is_err());
    }

    #[test]
    fn edits_outside_window_do_not_matter() {
        let mut model = SelectorModel::new(MockEncoder::new(16, 6), 0.5).unwrap();
        model.weights = (0..16).map(|i| (i as f64 - 7.5) / 8.0).collect();
        let a = game(&["far away words here", "x y", "target goes", "z w", "more far words", "end"]);
        let mut b = a.clone();
        b.commentaries[0].c = "totally other new text".into();
        b.commentaries[5].c = "changed".into();
        let (da, db) = (SelectorDoc::new(&a, &model.encoder), SelectorDoc::new(&b, &model.encoder));
        let target = 2;
        let w = window_for_target(da.tokens.len(), da.spans[target], 6);
        assert!(w.start >= da.spans[0].1 && w.end <= da.spans[5].0);
        assert_eq!(
            model.predict_importance(&da, target).unwrap(),
            model.predict_importance(&db, target).unwrap()
        );
    }

    #[test]
    fn thresholding() {
        assert_eq!(threshold_indices(&[0.9, 0.2, 0.7], 0.5), [0, 2]);
        assert!(threshold_indices(&[0.1, 0.2], 0.5).is_empty());
    }

    #[test]
    fn cross_entropy_hand_computed() {
        // -(ln 0.8 + ln(1 - 0.3)) / 2
        let want = -(0.8f64.ln() + 0.7f64.ln()) / 2.0;
        assert!((cross_entropy(&[0.8, 0.3], &[1, 0]) - want).abs() < 1e-12);
        let z = 0.8f64.ln() - 0.2f64.ln();
        assert!((bce_with_logit(z, 1.0, 1.0) + 0.8f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let g = game(&["a", "b"]);
        let labels = ImportanceLabels { game_id: "g".into(), labels: vec![1, 0] };
        let hp = SelectorHyper { epochs: 0, ..Default::default() };
        let (m, curve) = train_selector(MockEncoder::default(), &[(g.clone(), labels)], &hp).unwrap();
        assert_eq!(m, SelectorModel::new(MockEncoder::default(), 0.5).unwrap());
        assert_eq!(curve.loss.len(), 1);

        let bad = ImportanceLabels { game_id: "g".into(), labels: vec![1] };
        assert!(train_selector(MockEncoder::default(), &[(g, bad)], &hp).is_err());
        assert!(train_selector(MockEncoder::default(), &[], &hp).is_err());
    }
}
