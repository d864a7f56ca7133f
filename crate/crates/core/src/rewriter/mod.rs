//! Commentary-to-news rewriting with knowledge-fused input embeddings.
//!
//! Input layout: `<s> In the {t}th minute </s> {commentary} </s>`. Every
//! token carries one of four segment ids and a knowledge vector: the linked
//! passage's embedding for tokens inside a linked mention, zero elsewhere.

mod fusion;
mod model;
mod vocab;

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::encoder::EncoderBackend;
use crate::error::{Error, Result};
use crate::retriever::{EntityKind, Knowledge, MentionLink};
use crate::text::{PieceTokenizer, Tokenizer};

pub use fusion::{fuse_embeddings, FusedEmbedding, LayerNorm, LnCache, LN_EPS};
pub use model::{train_rewriter, RewriterExample, RewriterHyper, ToyConfig, ToySeq2Seq};
pub use vocab::{Vocab, BOS, EOS, PAD, UNK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentId {
    Player = 0,
    Team = 1,
    Time = 2,
    Other = 3,
}

impl SegmentId {
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationFlags {
    pub no_segment: bool,
    pub no_knowledge: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriterInput {
    pub pieces: Vec<String>,
    pub segment_ids: Vec<SegmentId>,
    /// One vector per piece; all zeros outside linked mentions.
    pub knowledge: Vec<Vec<f64>>,
    pub minute: u32,
    /// Piece range of the temporal phrase.
    pub phrase: (usize, usize),
    /// Piece range of the commentary sentence.
    pub commentary: (usize, usize),
}

impl RewriterInput {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn knowledge_dim(&self) -> usize {
        self.knowledge.first().map_or(0, Vec::len)
    }
}

pub fn temporal_phrase(minute: u32) -> String {
    format!("In the {minute}th minute")
}

/// Produces the knowledge vector of a linked passage or article.
pub trait KnowledgeEmbedder: Sync {
    fn dim(&self) -> usize;
    fn embed(&self, knowledge: &Knowledge<'_>) -> Result<Vec<f64>>;
}

/// Mean of per-sentence summary embeddings of a passage.
pub fn passage_embedding<S: AsRef<str>>(
    sentences: &[S],
    encoder: &dyn EncoderBackend,
) -> Result<Vec<f64>> {
    if sentences.is_empty() {
        return Err(Error::Empty("passage"));
    }
    let embeddings: Vec<Vec<f64>> = sentences
        .iter()
        .map(|s| encoder.sentence_embedding(s.as_ref()))
        .collect();
    Ok(crate::nn::mean_of(&embeddings).expect("non-empty"))
}

/// [`passage_embedding`] over a frozen encoder, memoized per entity.
pub struct PassageEmbedder<E> {
    pub encoder: E,
    cache: Mutex<HashMap<(EntityKind, String), Vec<f64>>>,
}

impl<E: EncoderBackend> PassageEmbedder<E> {
    pub fn new(encoder: E) -> Self {
        Self {
            encoder,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl<E: EncoderBackend> KnowledgeEmbedder for PassageEmbedder<E> {
    fn dim(&self) -> usize {
        self.encoder.dim()
    }

    fn embed(&self, knowledge: &Knowledge<'_>) -> Result<Vec<f64>> {
        let key = (knowledge.kind(), knowledge.id().to_string());
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v.clone());
        }
        let v = passage_embedding(knowledge.sentences(), &self.encoder)?;
        self.cache.lock().expect("cache lock").insert(key, v.clone());
        Ok(v)
    }
}

/// Builds the rewriter input for one commentary sentence. Mention spans are
/// char offsets into `commentary`; every piece overlapping a span takes the
/// span's segment and knowledge vector.
pub fn assemble_input(
    minute: u32,
    commentary: &str,
    links: &[MentionLink<'_>],
    kb: &dyn KnowledgeEmbedder,
) -> Result<RewriterInput> {
    if commentary.trim().is_empty() {
        return Err(Error::Empty("commentary sentence"));
    }
    let len = commentary.chars().count();
    for (i, l) in links.iter().enumerate() {
        let m = &l.mention;
        if m.start >= m.end || m.end > len {
            return Err(Error::Invalid(format!(
                "mention `{}` span {}..{} outside commentary of length {len}",
                m.surface, m.start, m.end
            )));
        }
        if links[..i].iter().any(|o| o.mention.overlaps(m)) {
            return Err(Error::Invalid(format!("mention `{}` overlaps another", m.surface)));
        }
    }
    let link_vectors = links
        .iter()
        .map(|l| kb.embed(&l.knowledge))
        .collect::<Result<Vec<_>>>()?;
    let kdim = kb.dim();
    let zero = vec![0.0; kdim];

    let phrase = PieceTokenizer.strings(&temporal_phrase(minute));
    let body = PieceTokenizer.tokenize(commentary);

    let mut input = RewriterInput {
        pieces: Vec::with_capacity(phrase.len() + body.len() + 3),
        segment_ids: Vec::new(),
        knowledge: Vec::new(),
        minute,
        phrase: (1, 1 + phrase.len()),
        commentary: (0, 0),
    };
    let push = |input: &mut RewriterInput, piece: String, seg: SegmentId, know: &[f64]| {
        input.pieces.push(piece);
        input.segment_ids.push(seg);
        input.knowledge.push(know.to_vec());
    };
    push(&mut input, BOS.into(), SegmentId::Other, &zero);
    for p in phrase {
        push(&mut input, p, SegmentId::Time, &zero);
    }
    push(&mut input, EOS.into(), SegmentId::Other, &zero);
    let body_start = input.pieces.len();
    for tok in body {
        let hit = links
            .iter()
            .position(|l| tok.start < l.mention.end && l.mention.start < tok.end);
        match hit {
            Some(i) => {
                let seg = match links[i].mention.kind {
                    EntityKind::Per => SegmentId::Player,
                    EntityKind::Org => SegmentId::Team,
                };
                push(&mut input, tok.text, seg, &link_vectors[i]);
            }
            None => push(&mut input, tok.text, SegmentId::Other, &zero),
        }
    }
    input.commentary = (body_start, input.pieces.len());
    push(&mut input, EOS.into(), SegmentId::Other, &zero);
    Ok(input)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeOptions {
    pub max_len: usize,
    pub beam_width: usize,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            max_len: 64,
            beam_width: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub text: String,
    pub pieces: Vec<String>,
    /// The length limit was hit before an end-of-sequence token.
    pub truncated: bool,
}

/// A sequence-to-sequence generator over assembled rewriter inputs.
pub trait Seq2SeqBackend: Send + Sync {
    fn embed_dim(&self) -> usize;
    fn generate(&self, input: &RewriterInput, opts: &DecodeOptions) -> Result<Generation>;
}

pub fn rewrite_sentence(
    model: &dyn Seq2SeqBackend,
    input: &RewriterInput,
    opts: &DecodeOptions,
) -> Result<Generation> {
    let generation = model.generate(input, opts)?;
    if generation.truncated {
        log::warn!("generation hit the {}-piece limit", opts.max_len);
    }
    Ok(generation)
}

/// Copies the commentary pieces back out. Useful as a baseline and for
/// plumbing tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityBackend;

impl Seq2SeqBackend for IdentityBackend {
    fn embed_dim(&self) -> usize {
        0
    }

    fn generate(&self, input: &RewriterInput, opts: &DecodeOptions) -> Result<Generation> {
        let first = input.pieces.iter().position(|p| p == EOS);
        let last = input.pieces.iter().rposition(|p| p == EOS);
        let body = match (first, last) {
            (Some(a), Some(b)) if a < b => &input.pieces[a + 1..b],
            _ => return Err(Error::Invalid("input lacks two separators".into())),
        };
        let truncated = body.len() > opts.max_len;
        let pieces: Vec<String> = body.iter().take(opts.max_len).cloned().collect();
        Ok(Generation {
            text: PieceTokenizer::detokenize(&pieces),
            pieces,
            truncated,
        })
    }
}

/// Joins generated sentences with single spaces.
pub fn compose_news<S: AsRef<str>>(sentences: &[S]) -> String {
    sentences
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CandidateSet, PlayerPassage, TeamArticle};
    use crate::encoder::MockEncoder;
    use crate::retriever::{retrieve_for_sentence, GazetteerTagger, LinkerConfig};

    const TABLE4: &str = "Barcelona attacked on the left side, Semedo passed the ball to the front of the small restricted area, Suarez scored the ball!!!";

    fn candidates() -> CandidateSet {
        CandidateSet {
            players: vec![
                PlayerPassage::new("p1", "Semedo", vec!["Semedo is a defender".into()]),
                PlayerPassage::new("p2", "Suarez", vec!["Suarez is a striker".into()]),
            ],
            teams: vec![TeamArticle::new(
                "t1",
                "Barcelona",
                vec!["Barcelona is the defending champion".into()],
            )],
        }
    }

    /// Char span → piece indices by brute-force overlap on an independent
    /// offset map built from the piece texts.
    fn oracle_pieces(input: &RewriterInput, commentary: &str, span: (usize, usize)) -> Vec<usize> {
        let chars: Vec<char> = commentary.chars().collect();
        let mut cursor = 0;
        let mut hits = Vec::new();
        for k in input.commentary.0..input.commentary.1 {
            let piece = input.pieces[k].trim_start_matches(crate::text::SPACE_MARK);
            while chars[cursor].is_whitespace() {
                cursor += 1;
            }
            let (s, e) = (cursor, cursor + piece.chars().count());
            assert_eq!(chars[s..e].iter().collect::<String>(), piece);
            if s < span.1 && span.0 < e {
                hits.push(k);
            }
            cursor = e;
        }
        hits
    }

    #[test]
    fn no_links_means_time_and_other_only() {
        let kb = PassageEmbedder::new(MockEncoder::default());
        let input = assemble_input(45, "De Yang was replaced", &[], &kb).unwrap();
        assert!(input
            .segment_ids
            .iter()
            .all(|s| matches!(s, SegmentId::Time | SegmentId::Other)));
        assert!(input.knowledge.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(input.pieces[0], BOS);
        assert_eq!(
            PieceTokenizer::detokenize(&input.pieces[input.phrase.0..input.phrase.1]),
            "In the 45th minute"
        );
        assert_eq!(input.pieces.iter().filter(|p| *p == EOS).count(), 2);
    }

    #[test]
    fn table4_segments_follow_links() {
        let c = candidates();
        let links = retrieve_for_sentence(
            TABLE4,
            &c,
            &LinkerConfig::default(),
            &GazetteerTagger::from_candidates(&c),
        )
        .unwrap();
        assert_eq!(links.len(), 3);
        let kb = PassageEmbedder::new(MockEncoder::default());
        let input = assemble_input(27, TABLE4, &links, &kb).unwrap();
        for (k, seg) in input.segment_ids.iter().enumerate() {
            let in_phrase = k >= input.phrase.0 && k < input.phrase.1;
            assert_eq!(*seg == SegmentId::Time, in_phrase);
        }
        for link in &links {
            let want = oracle_pieces(&input, TABLE4, (link.mention.start, link.mention.end));
            assert!(!want.is_empty());
            let seg = if link.mention.kind == EntityKind::Per {
                SegmentId::Player
            } else {
                SegmentId::Team
            };
            for &k in &want {
                assert_eq!(input.segment_ids[k], seg);
                assert_eq!(input.knowledge[k], kb.embed(&link.knowledge).unwrap());
            }
        }
        let linked: usize = input
            .segment_ids
            .iter()
            .filter(|s| matches!(s, SegmentId::Player | SegmentId::Team))
            .count();
        assert_eq!(linked, 3);
        for (k, v) in input.knowledge.iter().enumerate() {
            let nonzero = v.iter().any(|x| *x != 0.0);
            assert_eq!(
                nonzero,
                matches!(input.segment_ids[k], SegmentId::Player | SegmentId::Team)
            );
        }
    }

    #[test]
    fn empty_commentary_and_bad_spans() {
        let kb = PassageEmbedder::new(MockEncoder::default());
        assert!(assemble_input(1, "  ", &[], &kb).is_err());
        let c = candidates();
        let mut links = retrieve_for_sentence(
            TABLE4,
            &c,
            &LinkerConfig::default(),
            &GazetteerTagger::from_candidates(&c),
        )
        .unwrap();
        links[0].mention.end = 10_000;
        assert!(assemble_input(1, TABLE4, &links, &kb).is_err());
    }

    #[test]
    fn passage_embedding_is_a_mean() {
        struct Fixed;
        impl EncoderBackend for Fixed {
            fn max_len(&self) -> usize {
                8
            }
            fn dim(&self) -> usize {
                2
            }
            fn encode(&self, tokens: &[String]) -> Vec<Vec<f64>> {
                let v = if tokens.iter().any(|t| t == "a") { vec![2.0, 0.0] } else { vec![0.0, 2.0] };
                vec![v; tokens.len()]
            }
        }
        assert_eq!(passage_embedding(&["a"], &Fixed).unwrap(), [2.0, 0.0]);
        assert_eq!(passage_embedding(&["a", "b"], &Fixed).unwrap(), [1.0, 1.0]);
        assert_eq!(passage_embedding(&["b", "a"], &Fixed).unwrap(), [1.0, 1.0]);
        assert!(passage_embedding::<&str>(&[], &Fixed).is_err());

        let enc = MockEncoder::default();
        let s = ["Semedo is a defender", "He was born in Lisbon", "He plays for Barcelona"];
        let a = passage_embedding(&s, &enc).unwrap();
        let b = passage_embedding(&[s[2], s[0], s[1]], &enc).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_backend_copies_commentary() {
        let kb = PassageEmbedder::new(MockEncoder::default());
        let input = assemble_input(27, TABLE4, &[], &kb).unwrap();
        let out = rewrite_sentence(&IdentityBackend, &input, &DecodeOptions { max_len: 200, beam_width: 1 }).unwrap();
        assert_eq!(out.text, TABLE4);
        assert!(!out.truncated);
        let short = IdentityBackend.generate(&input, &DecodeOptions { max_len: 3, beam_width: 1 }).unwrap();
        assert!(short.truncated);
    }

    #[test]
    fn compose() {
        assert_eq!(compose_news(&["A.", "B."]), "A. B.");
        assert_eq!(compose_news::<&str>(&[]), "");
        assert_eq!(compose_news(&["B.", "A."]), "B. A.");
    }
}
