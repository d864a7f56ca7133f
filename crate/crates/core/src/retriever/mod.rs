//! Player and team mention recognition and linking against the game's
//! knowledge candidates.

mod levenshtein;
mod ner;

use serde::{Deserialize, Serialize};

use crate::corpus::{CandidateSet, KnowledgeEntry, PlayerPassage, TeamArticle};
use crate::error::{Error, Result};
use crate::text::char_slice;

pub use levenshtein::{levenshtein, normalized_levenshtein};
pub use ner::{GazetteerTagger, NerTagger, PrecomputedTagger, TaggedSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "ORG")]
    Org,
}

impl EntityKind {
    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "PER" | "B-PER" | "I-PER" => Some(EntityKind::Per),
            "ORG" | "B-ORG" | "I-ORG" => Some(EntityKind::Org),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub kind: EntityKind,
}

impl Mention {
    pub fn overlaps(&self, other: &Mention) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Runs the tagger, keeps `PER`/`ORG` spans and resolves overlaps in favour
/// of the longer span, then the earlier one. Output is ordered by start.
pub fn recognize_mentions(sentence: &str, ner: &dyn NerTagger) -> Result<Vec<Mention>> {
    let len = sentence.chars().count();
    let spans = ner.tag(sentence).map_err(|message| Error::Tagger {
        sentence: sentence.to_string(),
        message,
    })?;
    let mut candidates = Vec::new();
    for span in spans {
        if span.start >= span.end || span.end > len {
            return Err(Error::Tagger {
                sentence: sentence.to_string(),
                message: format!("invalid span {}..{} (length {len})", span.start, span.end),
            });
        }
        if let Some(kind) = EntityKind::from_label(&span.label) {
            candidates.push(Mention {
                surface: char_slice(sentence, span.start, span.end),
                start: span.start,
                end: span.end,
                kind,
            });
        }
    }
    candidates.sort_by_key(|m| (std::cmp::Reverse(m.end - m.start), m.start));
    let mut kept: Vec<Mention> = Vec::new();
    for m in candidates {
        if kept.iter().all(|k| !k.overlaps(&m)) {
            kept.push(m);
        }
    }
    kept.sort_by_key(|m| m.start);
    Ok(kept)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkerConfig {
    pub lambda_p: f64,
    pub lambda_o: f64,
    /// Lowercase both sides before comparing; meant for Latin scripts.
    #[serde(default)]
    pub case_fold: bool,
}

impl Default for LinkerConfig {
    fn default() -> Self {
        Self {
            lambda_p: 0.2,
            lambda_o: 0.25,
            case_fold: false,
        }
    }
}

impl LinkerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_p", self.lambda_p), ("lambda_o", self.lambda_o)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("linker.{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn threshold(&self, kind: EntityKind) -> f64 {
        match kind {
            EntityKind::Per => self.lambda_p,
            EntityKind::Org => self.lambda_o,
        }
    }

    fn distance(&self, mention: &str, title: &str) -> Option<f64> {
        if self.case_fold {
            normalized_levenshtein(&mention.to_lowercase(), &title.to_lowercase()).ok()
        } else {
            normalized_levenshtein(mention, title).ok()
        }
    }
}

/// The passage or article a mention was linked to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Knowledge<'a> {
    Player(&'a PlayerPassage),
    Team(&'a TeamArticle),
}

impl<'a> Knowledge<'a> {
    fn entry(&self) -> &'a dyn KnowledgeEntry {
        match *self {
            Knowledge::Player(p) => p,
            Knowledge::Team(t) => t,
        }
    }

    pub fn id(&self) -> &'a str {
        self.entry().id()
    }

    pub fn title(&self) -> &'a str {
        self.entry().title()
    }

    pub fn sentences(&self) -> &'a [String] {
        self.entry().sentences()
    }

    pub fn kind(&self) -> EntityKind {
        match self {
            Knowledge::Player(_) => EntityKind::Per,
            Knowledge::Team(_) => EntityKind::Org,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MentionLink<'a> {
    pub mention: Mention,
    pub distance: f64,
    pub knowledge: Knowledge<'a>,
}

impl MentionLink<'_> {
    pub fn entity_id(&self) -> &str {
        self.knowledge.id()
    }

    pub fn title(&self) -> &str {
        self.knowledge.title()
    }
}

fn nearest<'a, T: KnowledgeEntry>(
    mention: &str,
    pool: &'a [T],
    cfg: &LinkerConfig,
) -> Option<(&'a T, f64)> {
    let mut best: Option<(&T, f64)> = None;
    for cand in pool {
        let Some(d) = cfg.distance(mention, cand.title()) else {
            continue;
        };
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((cand, d));
        }
    }
    best
}

/// Links a mention to the candidate of its kind whose title is nearest in
/// normalized edit distance, if that distance is within the kind's
/// threshold. Ties go to the earlier candidate.
pub fn link_mention<'a>(
    mention: &Mention,
    candidates: &'a CandidateSet,
    cfg: &LinkerConfig,
) -> Option<MentionLink<'a>> {
    let (knowledge, distance) = match mention.kind {
        EntityKind::Per => nearest(&mention.surface, &candidates.players, cfg)
            .map(|(p, d)| (Knowledge::Player(p), d))?,
        EntityKind::Org => nearest(&mention.surface, &candidates.teams, cfg)
            .map(|(t, d)| (Knowledge::Team(t), d))?,
    };
    (distance <= cfg.threshold(mention.kind)).then(|| MentionLink {
        mention: mention.clone(),
        distance,
        knowledge,
    })
}

/// Recognizes and links every mention in a sentence, dropping unlinked ones.
pub fn retrieve_for_sentence<'a>(
    sentence: &str,
    candidates: &'a CandidateSet,
    cfg: &LinkerConfig,
    ner: &dyn NerTagger,
) -> Result<Vec<MentionLink<'a>>> {
    Ok(recognize_mentions(sentence, ner)?
        .iter()
        .filter_map(|m| link_mention(m, candidates, cfg))
        .collect())
}

/// One row of the `links.debug.jsonl` dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDebug {
    pub sentence: String,
    pub mentions: Vec<DebugMention>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebugMention {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub kind: EntityKind,
    pub entity_id: Option<String>,
    pub distance: Option<f64>,
}

/// Every recognized mention with its link, or nulls when unlinked.
pub fn debug_links(
    sentence: &str,
    candidates: &CandidateSet,
    cfg: &LinkerConfig,
    ner: &dyn NerTagger,
) -> Result<LinkDebug> {
    let mentions = recognize_mentions(sentence, ner)?
        .into_iter()
        .map(|m| {
            let link = link_mention(&m, candidates, cfg);
            DebugMention {
                entity_id: link.as_ref().map(|l| l.entity_id().to_string()),
                distance: link.as_ref().map(|l| l.distance),
                surface: m.surface,
                start: m.start,
                end: m.end,
                kind: m.kind,
            }
        })
        .collect();
    Ok(LinkDebug {
        sentence: sentence.to_string(),
        mentions,
    })
}
