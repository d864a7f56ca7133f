//! Games, knowledge corpus, knowledge-card templating and corpus statistics.

mod cards;
mod io;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub use cards::{card_to_passage, MAX_CARD_ASPECTS};
pub use io::{
    load_cards, load_dataset, load_players, load_teams, read_jsonl, save_dataset, write_jsonl,
    CorpusPaths, Dataset,
};
pub use stats::{corpus_stats, percentile_nearest_rank, FieldStats, StatsReport, TextStats};

/// One line of a live commentary document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Commentary {
    /// Timeline minute.
    pub t: u32,
    /// Score at that moment, e.g. "1-0". Kept but unused by the models.
    pub s: String,
    pub c: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Commentary {
    pub fn new(t: u32, s: impl Into<String>, c: impl Into<String>) -> Self {
        Self {
            t,
            s: s.into(),
            c: c.into(),
            extra: Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_id: String,
    pub commentaries: Vec<Commentary>,
    #[serde(default)]
    pub news: Vec<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl GameRecord {
    pub fn new(
        game_id: impl Into<String>,
        commentaries: Vec<Commentary>,
        news: Vec<String>,
    ) -> Self {
        Self {
            game_id: game_id.into(),
            commentaries,
            news,
            extra: Map::new(),
        }
    }

    /// Checks the record invariants: at least one commentary, non-empty
    /// commentary text and timelines in non-decreasing order.
    pub fn validate(&self) -> Result<()> {
        let id = &self.game_id;
        if id.is_empty() {
            return Err(Error::Invalid("empty game_id".into()));
        }
        if self.commentaries.is_empty() {
            return Err(Error::Invalid(format!("game `{id}` has no commentaries")));
        }
        for (j, com) in self.commentaries.iter().enumerate() {
            if com.c.trim().is_empty() {
                return Err(Error::Invalid(format!(
                    "game `{id}`: commentary {j} has empty text"
                )));
            }
        }
        if let Some(j) = self
            .commentaries
            .windows(2)
            .position(|w| w[1].t < w[0].t)
        {
            return Err(Error::Invalid(format!(
                "game `{id}`: commentaries out of time order at index {} (t={} after t={})",
                j + 1,
                self.commentaries[j + 1].t,
                self.commentaries[j].t
            )));
        }
        Ok(())
    }

    /// The reference article: news sentences joined with single spaces.
    pub fn reference_article(&self) -> String {
        self.news.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    All,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::All => "all",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            "all" => Ok(Split::All),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// Structured player profile, as crawled from player pages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeCard {
    pub player_id: String,
    pub title: String,
    /// (aspect, value) pairs in source order.
    pub attributes: Vec<(String, String)>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// Anything in the knowledge corpus that can be linked and embedded.
pub trait KnowledgeEntry {
    fn id(&self) -> &str;
    fn title(&self) -> &str;
    fn sentences(&self) -> &[String];
}

macro_rules! knowledge_entry {
    ($name:ident, $id_field:literal, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            #[serde(rename = $id_field)]
            pub id: String,
            pub title: String,
            pub sentences: Vec<String>,
            #[serde(flatten)]
            pub extra: Map<String, Value>,
        }

        impl $name {
            pub fn new(
                id: impl Into<String>,
                title: impl Into<String>,
                sentences: Vec<String>,
            ) -> Self {
                Self {
                    id: id.into(),
                    title: title.into(),
                    sentences,
                    extra: Map::new(),
                }
            }

            pub fn validate(&self) -> Result<()> {
                if self.title.trim().is_empty() {
                    return Err(Error::Invalid(format!("`{}` has an empty title", self.id)));
                }
                if self.sentences.is_empty() {
                    return Err(Error::Invalid(format!("`{}` has no sentences", self.id)));
                }
                Ok(())
            }
        }

        impl KnowledgeEntry for $name {
            fn id(&self) -> &str {
                &self.id
            }
            fn title(&self) -> &str {
                &self.title
            }
            fn sentences(&self) -> &[String] {
                &self.sentences
            }
        }
    };
}

knowledge_entry!(PlayerPassage, "player_id", "Player passage templated from a knowledge card.");
knowledge_entry!(TeamArticle, "team_id", "Team article (plain text of the aligned encyclopedia page).");

/// Link relations of one game's metadata page.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GameLinks {
    pub game_id: String,
    #[serde(default)]
    pub team_ids: Vec<String>,
    #[serde(default)]
    pub player_ids: Vec<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// What to do with link ids that resolve to nothing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkPolicy {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeCorpus {
    pub players: BTreeMap<String, PlayerPassage>,
    pub teams: BTreeMap<String, TeamArticle>,
    pub game_links: BTreeMap<String, GameLinks>,
}

impl KnowledgeCorpus {
    /// Builds the corpus, rejecting duplicate keys. Dangling link ids are an
    /// error under [`LinkPolicy::Strict`] and a returned warning otherwise.
    pub fn from_parts(
        players: Vec<PlayerPassage>,
        teams: Vec<TeamArticle>,
        links: Vec<GameLinks>,
        policy: LinkPolicy,
    ) -> Result<(Self, Vec<String>)> {
        let mut corpus = KnowledgeCorpus::default();
        for p in players {
            p.validate()?;
            if corpus.players.contains_key(&p.id) {
                return Err(Error::DuplicateId(p.id));
            }
            corpus.players.insert(p.id.clone(), p);
        }
        for t in teams {
            t.validate()?;
            if corpus.teams.contains_key(&t.id) {
                return Err(Error::DuplicateId(t.id));
            }
            corpus.teams.insert(t.id.clone(), t);
        }
        for l in links {
            if corpus.game_links.contains_key(&l.game_id) {
                return Err(Error::DuplicateId(l.game_id));
            }
            corpus.game_links.insert(l.game_id.clone(), l);
        }
        let warnings = corpus.check_links(policy)?;
        Ok((corpus, warnings))
    }

    fn check_links(&self, policy: LinkPolicy) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        for links in self.game_links.values() {
            for err in self.dangling(links) {
                match policy {
                    LinkPolicy::Strict => return Err(err),
                    LinkPolicy::Lenient => warnings.push(err.to_string()),
                }
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(warnings)
    }

    fn dangling(&self, links: &GameLinks) -> Vec<Error> {
        let teams = links
            .team_ids
            .iter()
            .filter(|id| !self.teams.contains_key(*id))
            .map(|id| ("team", id));
        let players = links
            .player_ids
            .iter()
            .filter(|id| !self.players.contains_key(*id))
            .map(|id| ("player", id));
        teams
            .chain(players)
            .map(|(kind, id)| Error::DanglingLink {
                game_id: links.game_id.clone(),
                kind,
                entity_id: id.clone(),
            })
            .collect()
    }
}

/// Game-scoped knowledge candidates for entity linking.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    pub players: Vec<PlayerPassage>,
    pub teams: Vec<TeamArticle>,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.players.is_empty() && self.teams.is_empty()
    }
}

/// Returns the passages and articles linked from the game's metadata, in
/// link order, along with any diagnostics.
pub fn candidate_knowledge(
    game_id: &str,
    corpus: &KnowledgeCorpus,
    policy: LinkPolicy,
) -> Result<(CandidateSet, Vec<String>)> {
    let links = corpus
        .game_links
        .get(game_id)
        .ok_or_else(|| Error::UnknownGame(game_id.to_string()))?;
    let mut warnings = Vec::new();
    let mut set = CandidateSet::default();

    let report = |err: Error, warnings: &mut Vec<String>| -> Result<()> {
        match policy {
            LinkPolicy::Strict => Err(err),
            LinkPolicy::Lenient => {
                log::warn!("{err}");
                warnings.push(err.to_string());
                Ok(())
            }
        }
    };

    let mut seen = BTreeSet::new();
    for id in &links.team_ids {
        if !seen.insert(("team", id.as_str())) {
            warnings.push(format!("game `{game_id}` lists team `{id}` twice"));
            continue;
        }
        match corpus.teams.get(id) {
            Some(t) => set.teams.push(t.clone()),
            None => report(
                Error::DanglingLink {
                    game_id: game_id.into(),
                    kind: "team",
                    entity_id: id.clone(),
                },
                &mut warnings,
            )?,
        }
    }
    for id in &links.player_ids {
        if !seen.insert(("player", id.as_str())) {
            warnings.push(format!("game `{game_id}` lists player `{id}` twice"));
            continue;
        }
        match corpus.players.get(id) {
            Some(p) => set.players.push(p.clone()),
            None => report(
                Error::DanglingLink {
                    game_id: game_id.into(),
                    kind: "player",
                    entity_id: id.clone(),
                },
                &mut warnings,
            )?,
        }
    }
    if set.is_empty() {
        let msg = format!("game `{game_id}` has no knowledge candidates");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok((set, warnings))
}
