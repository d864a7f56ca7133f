//! A small attention seq2seq model trained from scratch, standing in for a
//! pretrained encoder-decoder at desk scale.
//!
//! Encoder: the fused input embeddings themselves. Decoder step `i` forms a
//! query from the previous piece and the step position, attends over the
//! encoder outputs, and predicts the next piece through one tanh layer.
//! Gradients are hand-derived; see the finite-difference tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fusion::{layer_norm_backward, layer_norm_forward, sum_components, LayerNorm, LnCache};
use super::vocab::Vocab;
use super::{AblationFlags, DecodeOptions, Generation, RewriterInput, Seq2SeqBackend, SegmentId};
use crate::error::{Error, Result};
use crate::nn::{self, Adam, TrainingCurve};
use crate::text::{PieceTokenizer, Tokenizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub max_input_len: usize,
    pub max_output_len: usize,
    /// Dimension of incoming knowledge vectors; projected when it differs
    /// from `embed_dim`.
    pub knowledge_dim: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            hidden: 64,
            max_input_len: 256,
            max_output_len: 64,
            knowledge_dim: 16,
        }
    }
}

/// A row-major block inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Block {
    offset: usize,
    rows: usize,
    cols: usize,
}

impl Block {
    fn len(&self) -> usize {
        self.rows * self.cols
    }

    fn all<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.offset..self.offset + self.len()]
    }

    fn all_mut<'a>(&self, p: &'a mut [f64]) -> &'a mut [f64] {
        &mut p[self.offset..self.offset + self.len()]
    }

    fn row<'a>(&self, p: &'a [f64], r: usize) -> &'a [f64] {
        let s = self.offset + r * self.cols;
        &p[s..s + self.cols]
    }

    fn row_mut<'a>(&self, p: &'a mut [f64], r: usize) -> &'a mut [f64] {
        let s = self.offset + r * self.cols;
        &mut p[s..s + self.cols]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layout {
    token: Block,
    position: Block,
    segment: Block,
    projection: Option<Block>,
    ln_gain: Block,
    ln_offset: Block,
    dec_token: Block,
    dec_position: Block,
    w_hidden: Block,
    b_hidden: Block,
    w_out: Block,
    b_out: Block,
    total: usize,
}

impl Layout {
    fn new(cfg: &ToyConfig, vocab: usize) -> Self {
        let d = cfg.embed_dim;
        let mut offset = 0;
        let mut block = |rows: usize, cols: usize| {
            let b = Block { offset, rows, cols };
            offset += rows * cols;
            b
        };
        let token = block(vocab, d);
        let position = block(cfg.max_input_len, d);
        let segment = block(SegmentId::COUNT, d);
        let projection = (cfg.knowledge_dim != d).then(|| block(d, cfg.knowledge_dim));
        let ln_gain = block(1, d);
        let ln_offset = block(1, d);
        let dec_token = block(vocab, d);
        let dec_position = block(cfg.max_output_len, d);
        let w_hidden = block(cfg.hidden, 2 * d);
        let b_hidden = block(1, cfg.hidden);
        let w_out = block(vocab, cfg.hidden);
        let b_out = block(1, vocab);
        Self {
            token,
            position,
            segment,
            projection,
            ln_gain,
            ln_offset,
            dec_token,
            dec_position,
            w_hidden,
            b_hidden,
            w_out,
            b_out,
            total: offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySeq2Seq {
    pub config: ToyConfig,
    pub flags: AblationFlags,
    pub vocab: Vocab,
    layout: Layout,
    pub params: Vec<f64>,
}

struct Encoded {
    ids: Vec<usize>,
    segments: Vec<SegmentId>,
    caches: Vec<LnCache>,
    z: Vec<Vec<f64>>,
}

struct Step {
    prev: usize,
    position: usize,
    q: Vec<f64>,
    attn: Vec<f64>,
    hin: Vec<f64>,
    u: Vec<f64>,
    probs: Vec<f64>,
}

impl ToySeq2Seq {
    pub fn new(config: ToyConfig, vocab: Vocab, flags: AblationFlags, seed: u64) -> Result<Self> {
        if config.embed_dim == 0 || config.hidden == 0 || config.max_output_len == 0 {
            return Err(Error::Config("rewriter dimensions must be positive".into()));
        }
        let layout = Layout::new(&config, vocab.len());
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |b: Block, scale: f64, p: &mut [f64]| {
            for v in b.all_mut(p) {
                *v = rng.random_range(-scale..scale);
            }
        };
        let d = config.embed_dim as f64;
        fill(layout.token, 0.5, &mut params);
        fill(layout.position, 0.5, &mut params);
        fill(layout.segment, 0.5, &mut params);
        if let Some(b) = layout.projection {
            fill(b, 1.0 / (config.knowledge_dim as f64).sqrt(), &mut params);
        }
        fill(layout.dec_token, 0.5, &mut params);
        fill(layout.dec_position, 0.5, &mut params);
        fill(layout.w_hidden, 1.0 / (2.0 * d).sqrt(), &mut params);
        fill(layout.w_out, 1.0 / (config.hidden as f64).sqrt(), &mut params);
        layout.ln_gain.all_mut(&mut params).fill(1.0);
        Ok(Self {
            config,
            flags,
            vocab,
            layout,
            params,
        })
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn token_embedding(&self, id: usize) -> &[f64] {
        self.layout.token.row(&self.params, id)
    }

    pub fn position_embedding(&self, k: usize) -> &[f64] {
        self.layout.position.row(&self.params, k)
    }

    pub fn segment_embedding(&self, seg: SegmentId) -> &[f64] {
        self.layout.segment.row(&self.params, seg.index())
    }

    pub fn layer_norm(&self) -> LayerNorm {
        LayerNorm {
            gain: self.layout.ln_gain.all(&self.params).to_vec(),
            offset: self.layout.ln_offset.all(&self.params).to_vec(),
            eps: super::LN_EPS,
        }
    }

    /// Knowledge vector mapped into the embedding space.
    pub fn project_knowledge(&self, raw: &[f64]) -> Vec<f64> {
        match self.layout.projection {
            Some(b) => {
                let mut out = vec![0.0; self.config.embed_dim];
                nn::matvec(b.all(&self.params), raw, &mut out);
                out
            }
            None => raw.to_vec(),
        }
    }

    pub fn input_ids(&self, input: &RewriterInput) -> Vec<usize> {
        input.pieces.iter().map(|p| self.vocab.id(p)).collect()
    }

    fn check_input(&self, input: &RewriterInput) -> Result<()> {
        if input.is_empty() {
            return Err(Error::Empty("rewriter input"));
        }
        if input.segment_ids.len() != input.len() || input.knowledge.len() != input.len() {
            return Err(Error::Invalid("rewriter input columns differ in length".into()));
        }
        if let Some(v) = input.knowledge.iter().find(|v| v.len() != self.config.knowledge_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.config.knowledge_dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    fn encode(&self, input: &RewriterInput) -> Result<Encoded> {
        self.check_input(input)?;
        let n = input.len().min(self.config.max_input_len);
        if n < input.len() {
            log::warn!("rewriter input truncated to {n} pieces");
        }
        let ids: Vec<usize> = self.input_ids(input).into_iter().take(n).collect();
        let gain = self.layout.ln_gain.all(&self.params);
        let offset = self.layout.ln_offset.all(&self.params);
        let mut caches = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        for k in 0..n {
            let seg = (!self.flags.no_segment).then(|| self.segment_embedding(input.segment_ids[k]));
            let know = (!self.flags.no_knowledge).then(|| self.project_knowledge(&input.knowledge[k]));
            let sum = sum_components(
                self.token_embedding(ids[k]),
                self.position_embedding(k),
                seg,
                know.as_deref(),
            );
            let (y, cache) = layer_norm_forward(&sum, gain, offset, super::LN_EPS);
            z.push(y);
            caches.push(cache);
        }
        Ok(Encoded {
            ids,
            segments: input.segment_ids[..n].to_vec(),
            caches,
            z,
        })
    }

    /// Fused per-piece input embeddings, as seen by the decoder.
    pub fn input_embeddings(&self, input: &RewriterInput) -> Result<Vec<Vec<f64>>> {
        Ok(self.encode(input)?.z)
    }

    fn step(&self, z: &[Vec<f64>], prev: usize, position: usize) -> Step {
        let d = self.config.embed_dim;
        let l = &self.layout;
        let q: Vec<f64> = l
            .dec_token
            .row(&self.params, prev)
            .iter()
            .zip(l.dec_position.row(&self.params, position))
            .map(|(a, b)| a + b)
            .collect();
        let scale = 1.0 / (d as f64).sqrt();
        let mut attn: Vec<f64> = z.iter().map(|zk| nn::dot(&q, zk) * scale).collect();
        nn::softmax_in_place(&mut attn);
        let mut hin = q.clone();
        hin.resize(2 * d, 0.0);
        for (a, zk) in attn.iter().zip(z) {
            for (h, v) in hin[d..].iter_mut().zip(zk) {
                *h += a * v;
            }
        }
        let mut u = vec![0.0; self.config.hidden];
        nn::matvec(l.w_hidden.all(&self.params), &hin, &mut u);
        for (x, b) in u.iter_mut().zip(l.b_hidden.all(&self.params)) {
            *x = (*x + b).tanh();
        }
        let mut probs = vec![0.0; self.vocab.len()];
        nn::matvec(l.w_out.all(&self.params), &u, &mut probs);
        for (x, b) in probs.iter_mut().zip(l.b_out.all(&self.params)) {
            *x += b;
        }
        nn::softmax_in_place(&mut probs);
        Step {
            prev,
            position,
            q,
            attn,
            hin,
            u,
            probs,
        }
    }

    /// Target piece ids ending in the end-of-sequence id, clipped to the
    /// output length limit.
    pub fn target_ids(&self, target: &str) -> Vec<usize> {
        let mut ids: Vec<usize> = PieceTokenizer
            .strings(target)
            .iter()
            .map(|p| self.vocab.id(p))
            .take(self.config.max_output_len - 1)
            .collect();
        ids.push(Vocab::EOS_ID);
        ids
    }

    /// Summed negative log-likelihood of the target under teacher forcing.
    pub fn nll(&self, input: &RewriterInput, target: &[usize]) -> Result<f64> {
        let enc = self.encode(input)?;
        let mut prev = Vocab::BOS_ID;
        let mut loss = 0.0;
        for (i, &y) in target.iter().enumerate() {
            let s = self.step(&enc.z, prev, i);
            loss -= s.probs[y].max(f64::MIN_POSITIVE).ln();
            prev = y;
        }
        Ok(loss)
    }

    /// Summed NLL, the number of correctly predicted pieces, and the gradient
    /// accumulated into `grad`.
    pub fn accumulate_gradient(
        &self,
        input: &RewriterInput,
        target: &[usize],
        grad: &mut [f64],
    ) -> Result<(f64, usize)> {
        let d = self.config.embed_dim;
        let l = &self.layout;
        let p = &self.params;
        let enc = self.encode(input)?;
        let n = enc.z.len();
        let scale = 1.0 / (d as f64).sqrt();
        let mut dz = vec![vec![0.0; d]; n];
        let mut loss = 0.0;
        let mut correct = 0;
        let mut prev = Vocab::BOS_ID;

        for (i, &y) in target.iter().enumerate() {
            let s = self.step(&enc.z, prev, i);
            loss -= s.probs[y].max(f64::MIN_POSITIVE).ln();
            correct += usize::from(argmax(&s.probs) == y);

            let mut dlogits = s.probs.clone();
            dlogits[y] -= 1.0;
            nn::add_assign(l.b_out.all_mut(grad), &dlogits);
            nn::outer_acc(l.w_out.all_mut(grad), &dlogits, &s.u);
            let mut du = vec![0.0; self.config.hidden];
            nn::matvec_t_acc(l.w_out.all(p), &dlogits, &mut du);

            let dpre: Vec<f64> = du.iter().zip(&s.u).map(|(g, u)| g * (1.0 - u * u)).collect();
            nn::add_assign(l.b_hidden.all_mut(grad), &dpre);
            nn::outer_acc(l.w_hidden.all_mut(grad), &dpre, &s.hin);
            let mut dhin = vec![0.0; 2 * d];
            nn::matvec_t_acc(l.w_hidden.all(p), &dpre, &mut dhin);

            let (dq_direct, dctx) = dhin.split_at(d);
            let mut dq = dq_direct.to_vec();
            let dattn: Vec<f64> = enc.z.iter().map(|zk| nn::dot(dctx, zk)).collect();
            let weighted = nn::dot(&s.attn, &dattn);
            for k in 0..n {
                let a = s.attn[k];
                let dscore = a * (dattn[k] - weighted) * scale;
                for j in 0..d {
                    dz[k][j] += a * dctx[j] + dscore * s.q[j];
                    dq[j] += dscore * enc.z[k][j];
                }
            }
            nn::add_assign(l.dec_token.row_mut(grad, s.prev), &dq);
            nn::add_assign(l.dec_position.row_mut(grad, s.position), &dq);
            prev = y;
        }

        let gain = l.ln_gain.all(p).to_vec();
        for k in 0..n {
            let (dsum, dgain, doffset) = layer_norm_backward(&enc.caches[k], &gain, &dz[k]);
            nn::add_assign(l.ln_gain.all_mut(grad), &dgain);
            nn::add_assign(l.ln_offset.all_mut(grad), &doffset);
            nn::add_assign(l.token.row_mut(grad, enc.ids[k]), &dsum);
            nn::add_assign(l.position.row_mut(grad, k), &dsum);
            if !self.flags.no_segment {
                nn::add_assign(l.segment.row_mut(grad, enc.segments[k].index()), &dsum);
            }
            if !self.flags.no_knowledge {
                if let Some(b) = l.projection {
                    nn::outer_acc(b.all_mut(grad), &dsum, &input.knowledge[k]);
                }
            }
        }
        Ok((loss, correct))
    }

    fn greedy(&self, z: &[Vec<f64>], max_len: usize) -> (Vec<usize>, bool) {
        let mut out = Vec::new();
        let mut prev = Vocab::BOS_ID;
        for i in 0..max_len {
            let mut s = self.step(z, prev, i);
            if i == 0 {
                s.probs[Vocab::EOS_ID] = 0.0;
            }
            let next = argmax(&s.probs);
            if next == Vocab::EOS_ID {
                return (out, false);
            }
            out.push(next);
            prev = next;
        }
        (out, true)
    }

    fn beam(&self, z: &[Vec<f64>], max_len: usize, width: usize) -> (Vec<usize>, bool) {
        // (pieces, log-prob, finished)
        let mut beams: Vec<(Vec<usize>, f64, bool)> = vec![(Vec::new(), 0.0, false)];
        for i in 0..max_len {
            if beams.iter().all(|b| b.2) {
                break;
            }
            let mut next = Vec::new();
            for (seq, lp, done) in &beams {
                if *done {
                    next.push((seq.clone(), *lp, true));
                    continue;
                }
                let prev = seq.last().copied().unwrap_or(Vocab::BOS_ID);
                let s = self.step(z, prev, i);
                let mut ranked: Vec<usize> = (0..s.probs.len())
                    .filter(|&t| !(i == 0 && t == Vocab::EOS_ID))
                    .collect();
                ranked.sort_by(|&a, &b| s.probs[b].total_cmp(&s.probs[a]).then(a.cmp(&b)));
                for &t in ranked.iter().take(width) {
                    let lp = lp + s.probs[t].max(f64::MIN_POSITIVE).ln();
                    if t == Vocab::EOS_ID {
                        next.push((seq.clone(), lp, true));
                    } else {
                        let mut seq = seq.clone();
                        seq.push(t);
                        next.push((seq, lp, false));
                    }
                }
            }
            next.sort_by(|a, b| b.1.total_cmp(&a.1));
            next.truncate(width);
            beams = next;
        }
        let best = beams
            .iter()
            .filter(|b| b.2)
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .or_else(|| beams.iter().max_by(|a, b| a.1.total_cmp(&b.1)))
            .cloned()
            .expect("at least one beam");
        (best.0, !best.2)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

impl Seq2SeqBackend for ToySeq2Seq {
    fn embed_dim(&self) -> usize {
        self.config.embed_dim
    }

    fn generate(&self, input: &RewriterInput, opts: &DecodeOptions) -> Result<Generation> {
        let enc = self.encode(input)?;
        let max_len = opts.max_len.min(self.config.max_output_len);
        let (ids, truncated) = if opts.beam_width <= 1 {
            self.greedy(&enc.z, max_len)
        } else {
            self.beam(&enc.z, max_len, opts.beam_width)
        };
        let pieces: Vec<String> = ids.iter().map(|&i| self.vocab.piece(i).to_string()).collect();
        Ok(Generation {
            text: PieceTokenizer::detokenize(&pieces),
            pieces,
            truncated,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriterExample {
    pub input: RewriterInput,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriterHyper {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub model: ToyConfig,
}

impl Default for RewriterHyper {
    fn default() -> Self {
        Self {
            lr: 0.01,
            epochs: 60,
            batch_size: 4,
            seed: 0,
            model: ToyConfig::default(),
        }
    }
}

fn dataset_metrics(model: &ToySeq2Seq, data: &[(RewriterInput, Vec<usize>)]) -> Result<(f64, f64)> {
    let mut scratch = vec![0.0; model.num_params()];
    let (mut loss, mut correct, mut total) = (0.0, 0usize, 0usize);
    for (input, target) in data {
        let (l, c) = model.accumulate_gradient(input, target, &mut scratch)?;
        loss += l;
        correct += c;
        total += target.len();
    }
    Ok((loss / total as f64, correct as f64 / total as f64))
}

/// Trains a [`ToySeq2Seq`] from scratch. The vocabulary covers every input
/// and target piece. The curve records per-piece NLL and teacher-forced
/// accuracy before training and after each epoch.
pub fn train_rewriter(
    examples: &[RewriterExample],
    hp: &RewriterHyper,
    flags: AblationFlags,
) -> Result<(ToySeq2Seq, TrainingCurve)> {
    if examples.is_empty() {
        return Err(Error::Empty("rewriter training pairs"));
    }
    if hp.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let mut config = hp.model.clone();
    config.knowledge_dim = examples[0].input.knowledge_dim();
    let targets: Vec<Vec<String>> = examples.iter().map(|e| PieceTokenizer.strings(&e.target)).collect();
    let vocab = Vocab::build(
        examples
            .iter()
            .flat_map(|e| e.input.pieces.iter().map(String::as_str))
            .chain(targets.iter().flatten().map(String::as_str)),
    );
    let mut model = ToySeq2Seq::new(config, vocab, flags, hp.seed)?;
    let data: Vec<(RewriterInput, Vec<usize>)> = examples
        .iter()
        .map(|e| (e.input.clone(), model.target_ids(&e.target)))
        .collect();

    let mut curve = TrainingCurve::default();
    let (l, a) = dataset_metrics(&model, &data)?;
    curve.loss.push(l);
    curve.accuracy.push(a);

    let mut opt = Adam::new(hp.lr, model.num_params());
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; model.num_params()];
    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.batch_size) {
            grad.fill(0.0);
            let mut pieces = 0;
            for &i in batch {
                let (input, target) = &data[i];
                model.accumulate_gradient(input, target, &mut grad)?;
                pieces += target.len();
            }
            let scale = 1.0 / pieces as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            opt.step(&mut model.params, &grad);
        }
        let (l, a) = dataset_metrics(&model, &data)?;
        curve.loss.push(l);
        curve.accuracy.push(a);
    }
    Ok((model, curve))
}
