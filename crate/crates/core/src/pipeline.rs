//! Stage glue: rewriter training pairs from the oracle, and end-to-end
//! summarization of a game (select, retrieve, rewrite, compose).

use std::collections::HashMap;

use crate::corpus::{candidate_knowledge, CandidateSet, GameRecord, KnowledgeCorpus, LinkPolicy};
use crate::encoder::EncoderBackend;
use crate::error::{Error, Result};
use crate::eval::SummaryRecord;
use crate::oracle::MappedPair;
use crate::retriever::{debug_links, retrieve_for_sentence, GazetteerTagger, LinkDebug, LinkerConfig, NerTagger};
use crate::rewriter::{
    assemble_input, compose_news, rewrite_sentence, DecodeOptions, KnowledgeEmbedder, RewriterExample,
    RewriterInput, Seq2SeqBackend,
};
use crate::selector::{Selection, SelectorModel};

/// Knowledge lookup shared by training and inference.
#[derive(Clone, Copy)]
pub struct KnowledgeContext<'a> {
    pub corpus: &'a KnowledgeCorpus,
    pub policy: LinkPolicy,
    pub linker: &'a LinkerConfig,
    pub embedder: &'a dyn KnowledgeEmbedder,
    /// Tagger to use for every game; `None` builds a gazetteer from each
    /// game's candidates.
    pub ner: Option<&'a (dyn NerTagger + Sync)>,
    /// Extra `(name, label)` entries for the per-game gazetteer.
    pub aliases: &'a [(String, String)],
}

impl<'a> KnowledgeContext<'a> {
    pub fn candidates(&self, game_id: &str) -> Result<CandidateSet> {
        let (set, warnings) = candidate_knowledge(game_id, self.corpus, self.policy)?;
        for w in warnings {
            log::warn!("{w}");
        }
        Ok(set)
    }

    fn tagger<'b>(&'b self, candidates: &CandidateSet, local: &'b mut Option<GazetteerTagger>) -> &'b dyn NerTagger {
        match self.ner {
            Some(n) => n,
            None => {
                let mut g = GazetteerTagger::from_candidates(candidates);
                for (name, label) in self.aliases {
                    g.add(name, label);
                }
                local.insert(g)
            }
        }
    }

    /// Rewriter input for one commentary sentence of a game, plus its link
    /// dump.
    pub fn input_for(
        &self,
        minute: u32,
        sentence: &str,
        candidates: &CandidateSet,
    ) -> Result<(RewriterInput, LinkDebug)> {
        let mut local = None;
        let ner = self.tagger(candidates, &mut local);
        let links = retrieve_for_sentence(sentence, candidates, self.linker, ner)?;
        let input = assemble_input(minute, sentence, &links, self.embedder)?;
        let debug = debug_links(sentence, candidates, self.linker, ner)?;
        Ok((input, debug))
    }
}

/// One training pair per mapped (news, commentary) alignment. The target is
/// the full news sentence.
pub fn rewriter_examples(
    games: &[GameRecord],
    pairs: &[MappedPair],
    ctx: &KnowledgeContext<'_>,
) -> Result<Vec<RewriterExample>> {
    let by_id: HashMap<&str, &GameRecord> = games.iter().map(|g| (g.game_id.as_str(), g)).collect();
    let mut cache: HashMap<&str, CandidateSet> = HashMap::new();
    let mut out = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let game = by_id
            .get(pair.game_id.as_str())
            .ok_or_else(|| Error::UnknownGame(pair.game_id.clone()))?;
        let commentary = game.commentaries.get(pair.commentary_index).ok_or(Error::OutOfRange {
            index: pair.commentary_index,
            len: game.commentaries.len(),
        })?;
        let target = game.news.get(pair.news_index).ok_or(Error::OutOfRange {
            index: pair.news_index,
            len: game.news.len(),
        })?;
        if !cache.contains_key(game.game_id.as_str()) {
            cache.insert(&game.game_id, ctx.candidates(&game.game_id)?);
        }
        let (input, _) = ctx.input_for(commentary.t, &commentary.c, &cache[game.game_id.as_str()])?;
        out.push(RewriterExample {
            input,
            target: target.clone(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSummary {
    pub summary: SummaryRecord,
    pub selection: Selection,
    /// One entry per selected sentence.
    pub links: Vec<LinkDebug>,
}

/// Selects key sentences, links their mentions, rewrites each, and joins
/// the results.
pub fn summarize_game<E: EncoderBackend>(
    game: &GameRecord,
    selector: &SelectorModel<E>,
    ctx: &KnowledgeContext<'_>,
    rewriter: &dyn Seq2SeqBackend,
    opts: &DecodeOptions,
) -> Result<GameSummary> {
    let selection = selector.select_key_sentences(game)?;
    if selection.selected_indices.is_empty() {
        log::warn!("game `{}`: no sentence reached the selection threshold", game.game_id);
    }
    let candidates = ctx.candidates(&game.game_id)?;
    let mut sentences = Vec::with_capacity(selection.selected_indices.len());
    let mut links = Vec::with_capacity(selection.selected_indices.len());
    for &i in &selection.selected_indices {
        let c = &game.commentaries[i];
        let (input, debug) = ctx.input_for(c.t, &c.c, &candidates)?;
        sentences.push(rewrite_sentence(rewriter, &input, opts)?.text);
        links.push(debug);
    }
    Ok(GameSummary {
        summary: SummaryRecord {
            game_id: game.game_id.clone(),
            article: compose_news(&sentences),
            sentences,
        },
        selection,
        links,
    })
}
