//! Deterministic synthetic data: the bundled three-game fixture and random
//! generators used by tests and benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    card_to_passage, CandidateSet, Commentary, GameLinks, GameRecord, KnowledgeCard, KnowledgeCorpus,
    LinkPolicy, PlayerPassage, TeamArticle,
};
use crate::error::Result;
use crate::oracle::ImportanceLabels;
use crate::retriever::{EntityKind, Mention};

struct PlayerSpec {
    id: &'static str,
    title: &'static str,
    /// How commentaries write the name.
    surface: &'static str,
    team: usize,
    nationality: &'static str,
    position: &'static str,
    number: u32,
    height: u32,
}

struct TeamSpec {
    id: &'static str,
    title: &'static str,
    surface: &'static str,
    city: &'static str,
    founded: u32,
    stadium: &'static str,
    /// Players of this team come as knowledge cards rather than passages.
    cards: bool,
}

const TEAMS: [TeamSpec; 4] = [
    TeamSpec { id: "t_bar", title: "Barcelona", surface: "Barcelona", city: "Barcelona", founded: 1899, stadium: "Camp Nou", cards: true },
    TeamSpec { id: "t_rma", title: "Real Madrid", surface: "Real Madrid CF", city: "Madrid", founded: 1902, stadium: "Bernabeu", cards: false },
    TeamSpec { id: "t_sev", title: "Sevilla", surface: "Sevilla", city: "Seville", founded: 1890, stadium: "Sanchez Pizjuan", cards: true },
    TeamSpec { id: "t_val", title: "Valencia", surface: "Valencia", city: "Valencia", founded: 1919, stadium: "Mestalla", cards: false },
];

const PLAYERS: [PlayerSpec; 16] = [
    PlayerSpec { id: "p_suarez", title: "Suárez", surface: "Suarez", team: 0, nationality: "Uruguayan", position: "striker", number: 9, height: 182 },
    PlayerSpec { id: "p_semedo", title: "Semedo", surface: "Semedo", team: 0, nationality: "Portuguese", position: "defender", number: 2, height: 177 },
    PlayerSpec { id: "p_busquets", title: "Busquets", surface: "Busquets", team: 0, nationality: "Spanish", position: "midfielder", number: 5, height: 189 },
    PlayerSpec { id: "p_terstegen", title: "Ter Stegen", surface: "Ter Stegen", team: 0, nationality: "German", position: "goalkeeper", number: 1, height: 187 },
    PlayerSpec { id: "p_benzema", title: "Benzema", surface: "Benzema", team: 1, nationality: "French", position: "striker", number: 9, height: 185 },
    PlayerSpec { id: "p_modric", title: "Modrić", surface: "Modric", team: 1, nationality: "Croatian", position: "midfielder", number: 10, height: 172 },
    PlayerSpec { id: "p_ramos", title: "Ramos", surface: "Ramos", team: 1, nationality: "Spanish", position: "defender", number: 4, height: 184 },
    PlayerSpec { id: "p_courtois", title: "Courtois", surface: "Courtois", team: 1, nationality: "Belgian", position: "goalkeeper", number: 1, height: 199 },
    PlayerSpec { id: "p_ennesyri", title: "En-Nesyri", surface: "En-Nesyri", team: 2, nationality: "Moroccan", position: "striker", number: 15, height: 189 },
    PlayerSpec { id: "p_navas", title: "Navas", surface: "Navas", team: 2, nationality: "Spanish", position: "defender", number: 16, height: 172 },
    PlayerSpec { id: "p_rakitic", title: "Rakitić", surface: "Rakitic", team: 2, nationality: "Croatian", position: "midfielder", number: 10, height: 184 },
    PlayerSpec { id: "p_bono", title: "Bono", surface: "Bono", team: 2, nationality: "Moroccan", position: "goalkeeper", number: 13, height: 192 },
    PlayerSpec { id: "p_gaya", title: "Gayà", surface: "Gaya", team: 3, nationality: "Spanish", position: "defender", number: 14, height: 172 },
    PlayerSpec { id: "p_soler", title: "Soler", surface: "Soler", team: 3, nationality: "Spanish", position: "midfielder", number: 10, height: 180 },
    PlayerSpec { id: "p_guedes", title: "Guedes", surface: "Guedes", team: 3, nationality: "Portuguese", position: "winger", number: 7, height: 179 },
    PlayerSpec { id: "p_cillessen", title: "Cillessen", surface: "Cillessen", team: 3, nationality: "Dutch", position: "goalkeeper", number: 13, height: 185 },
];

/// (game id, home team, away team)
const GAMES: [(&str, usize, usize); 3] = [("g001", 0, 1), ("g002", 2, 3), ("g003", 0, 2)];

/// Everything needed to run the pipeline on the bundled fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub games: Vec<GameRecord>,
    pub players: Vec<PlayerPassage>,
    pub cards: Vec<KnowledgeCard>,
    pub teams: Vec<TeamArticle>,
    pub links: Vec<GameLinks>,
    /// Commentary spellings that differ from knowledge titles.
    pub aliases: Vec<(String, String)>,
}

impl Fixture {
    pub fn corpus(&self) -> Result<KnowledgeCorpus> {
        let mut players = self.players.clone();
        for card in &self.cards {
            players.push(card_to_passage(card)?);
        }
        let (corpus, _) = KnowledgeCorpus::from_parts(players, self.teams.clone(), self.links.clone(), LinkPolicy::Strict)?;
        Ok(corpus)
    }
}

pub fn ordinal(n: u32) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

fn card_for(p: &PlayerSpec) -> KnowledgeCard {
    let attrs = [
        ("name", p.title.to_string()),
        ("nationality", p.nationality.to_string()),
        ("position", p.position.to_string()),
        ("club", TEAMS[p.team].title.to_string()),
        ("number", p.number.to_string()),
        ("height", format!("{} cm", p.height)),
    ];
    KnowledgeCard {
        player_id: p.id.into(),
        title: p.title.into(),
        attributes: attrs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        extra: Default::default(),
    }
}

fn passage_for(p: &PlayerSpec) -> PlayerPassage {
    let t = TEAMS[p.team].title;
    PlayerPassage::new(
        p.id,
        p.title,
        vec![
            format!("{} is a {} professional footballer.", p.title, p.nationality),
            format!("{} plays as a {} for {t}.", p.title, p.position),
            format!("{} wears the number {} shirt and is {} cm tall.", p.title, p.number, p.height),
        ],
    )
}

fn team_article(t: &TeamSpec) -> TeamArticle {
    TeamArticle::new(
        t.id,
        t.title,
        vec![
            format!("{} is a professional football club based in {}.", t.title, t.city),
            format!("The club was founded in {}.", t.founded),
            format!("{} play their home matches at the {}.", t.title, t.stadium),
        ],
    )
}

enum Event {
    Attack { team: usize, passer: usize, receiver: usize },
    Shot { player: usize },
    Goal { player: usize },
    Booking { player: usize },
    Corner { team: usize },
    Save { keeper: usize, shooter: usize },
}

fn squad(team: usize) -> Vec<usize> {
    (0..PLAYERS.len()).filter(|&i| PLAYERS[i].team == team).collect()
}

fn outfield(team: usize) -> Vec<usize> {
    squad(team).into_iter().filter(|&i| PLAYERS[i].position != "goalkeeper").collect()
}

fn keeper(team: usize) -> usize {
    squad(team).into_iter().find(|&i| PLAYERS[i].position == "goalkeeper").expect("keeper")
}

fn build_game(index: usize, rng: &mut ChaCha8Rng) -> (GameRecord, GameLinks) {
    let (id, home, away) = GAMES[index];
    let mut minutes: Vec<u32> = Vec::new();
    while minutes.len() < 14 {
        let m = rng.random_range(1..=90);
        if !minutes.contains(&m) {
            minutes.push(m);
        }
    }
    minutes.sort_unstable();

    let mut score = [0u32; 2];
    let mut commentaries = vec![Commentary::new(0, "0-0", "The match kicked off")];
    let mut news = vec![format!("{} hosted {} in the league.", TEAMS[home].title, TEAMS[away].title)];
    for (k, &t) in minutes.iter().enumerate() {
        let side = rng.random_range(0..2usize);
        let (team, other) = if side == 0 { (home, away) } else { (away, home) };
        let pick = |rng: &mut ChaCha8Rng, team: usize| *outfield(team).choose(rng).expect("players");
        // guarantee a few goals and bookings per game
        let event = match (k % 5, rng.random_range(0..3)) {
            (1, _) => Event::Goal { player: pick(rng, team) },
            (3, 0) => Event::Booking { player: pick(rng, team) },
            (3, _) => Event::Save { keeper: keeper(other), shooter: pick(rng, team) },
            (_, 0) => {
                let passer = pick(rng, team);
                let receiver = outfield(team).into_iter().find(|&r| r != passer).expect("two players");
                Event::Attack { team, passer, receiver }
            }
            (_, 1) => Event::Shot { player: pick(rng, team) },
            _ => Event::Corner { team },
        };
        let p = |i: usize| &PLAYERS[i];
        let tm = |i: usize| &TEAMS[i];
        let text = match &event {
            Event::Attack { team, passer, receiver } => format!(
                "{} attacked on the left side, {} passed the ball to {}",
                tm(*team).surface,
                p(*passer).surface,
                p(*receiver).surface
            ),
            Event::Shot { player } => format!("{} shot from outside the box, wide of the post", p(*player).surface),
            Event::Goal { player } => {
                score[side] += 1;
                format!("{} scored the ball!!!", p(*player).surface)
            }
            Event::Booking { player } => format!("{} received a yellow card for a foul", p(*player).surface),
            Event::Corner { team } => format!("Corner kick for {}", tm(*team).surface),
            Event::Save { keeper, shooter } => {
                format!("{} saved the shot from {}", p(*keeper).surface, p(*shooter).surface)
            }
        };
        let s = format!("{}-{}", score[0], score[1]);
        let when = format!("In the {} minute", ordinal(t));
        match &event {
            Event::Goal { player } => news.push(format!(
                "{when}, {} {} {} scored for {}, making it {s}.",
                p(*player).nationality,
                p(*player).position,
                p(*player).title,
                tm(team).title
            )),
            Event::Booking { player } => news.push(format!(
                "{when}, {} of {} was booked for a foul.",
                p(*player).title,
                tm(team).title
            )),
            Event::Save { keeper, shooter } => news.push(format!(
                "{when}, {} goalkeeper {} denied {}.",
                p(*keeper).nationality,
                p(*keeper).title,
                p(*shooter).title
            )),
            _ => {}
        }
        commentaries.push(Commentary::new(t, s, text));
    }
    news.push(format!("The match ended {}-{}.", score[0], score[1]));

    let players: Vec<String> = squad(home)
        .into_iter()
        .chain(squad(away))
        .map(|i| PLAYERS[i].id.to_string())
        .collect();
    let links = GameLinks {
        game_id: id.into(),
        team_ids: vec![TEAMS[home].id.into(), TEAMS[away].id.into()],
        player_ids: players,
        extra: Default::default(),
    };
    (GameRecord::new(id, commentaries, news), links)
}

/// The bundled three-game fixture. Identical on every call.
pub fn toy_fixture() -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(20_201);
    let (games, links) = (0..GAMES.len()).map(|i| build_game(i, &mut rng)).unzip();
    let (card_players, plain): (Vec<&PlayerSpec>, Vec<&PlayerSpec>) =
        PLAYERS.iter().partition(|p| TEAMS[p.team].cards);
    let mut aliases: Vec<(String, String)> = PLAYERS
        .iter()
        .filter(|p| p.surface != p.title)
        .map(|p| (p.surface.to_string(), "PER".to_string()))
        .collect();
    aliases.extend(
        TEAMS
            .iter()
            .filter(|t| t.surface != t.title)
            .map(|t| (t.surface.to_string(), "ORG".to_string())),
    );
    Fixture {
        games,
        players: plain.into_iter().map(passage_for).collect(),
        cards: card_players.into_iter().map(card_for).collect(),
        teams: TEAMS.iter().map(team_article).collect(),
        links,
        aliases,
    }
}

const NAMES: [&str; 5] = ["Pedri", "Gavi", "Koke", "Isco", "Oyarzabal"];
const NEGATIVE_VERBS: [&str; 5] = ["passed", "crossed", "cleared", "headed", "controlled"];

/// A single game whose sentences are important exactly when they use the
/// planted verb "scored". About a third are positive.
pub fn separable_selector_set(seed: u64, n: usize) -> (GameRecord, ImportanceLabels) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut commentaries = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let name = NAMES.choose(&mut rng).expect("names");
        let positive = rng.random_range(0..3) == 0;
        let verb = if positive {
            "scored"
        } else {
            NEGATIVE_VERBS.choose(&mut rng).expect("verbs")
        };
        commentaries.push(Commentary::new(i as u32, "0-0", format!("{name} {verb} the ball")));
        labels.push(u8::from(positive));
    }
    let game = GameRecord::new(format!("sep{seed}"), commentaries, Vec::new());
    let labels = ImportanceLabels {
        game_id: game.game_id.clone(),
        labels,
    };
    (game, labels)
}

/// A commentary sentence and the news sentence it should become.
#[derive(Debug, Clone, PartialEq)]
pub struct RewritePair {
    pub minute: u32,
    pub commentary: String,
    pub target: String,
}

const AREAS: [&str; 4] = ["box", "corner flag", "halfway line", "penalty spot"];

/// `n` distinct (commentary, news) pairs over a small vocabulary.
pub fn memorization_pairs(n: usize) -> Vec<RewritePair> {
    let mut out = Vec::with_capacity(n);
    let past = ["passed", "crossed", "cleared", "headed", "controlled"];
    let news_verb = ["played it", "delivered a cross", "cleared the danger", "flicked it on", "took it down"];
    'outer: for (ai, area) in AREAS.iter().enumerate() {
        for (ni, name) in NAMES.iter().enumerate() {
            for (vi, verb) in past.iter().enumerate() {
                if (ni + vi + ai) % 2 == 1 {
                    continue;
                }
                if out.len() == n {
                    break 'outer;
                }
                let minute = 5 + out.len() as u32 * 4;
                out.push(RewritePair {
                    minute,
                    commentary: format!("{name} {verb} the ball near the {area}"),
                    target: format!("In the {} minute, {name} {} near the {area}.", ordinal(minute), news_verb[vi]),
                });
            }
        }
    }
    out
}

const WORDS: [&str; 12] = [
    "goal", "pass", "shot", "corner", "foul", "save", "header", "cross", "wide", "keeper", "ball", "post",
];

fn random_sentence(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len).map(|_| *WORDS.choose(rng).expect("words")).collect::<Vec<_>>().join(" ")
}

/// A game with a random non-decreasing timeline (duplicates allowed) and
/// news sentences carrying random time prefixes, some outside the timeline.
pub fn random_game(rng: &mut ChaCha8Rng, id: &str) -> GameRecord {
    let n = rng.random_range(1..40);
    let mut t = 0;
    let commentaries = (0..n)
        .map(|_| {
            t += rng.random_range(0..4);
            let len = rng.random_range(1..8);
            Commentary::new(t, "0-0", random_sentence(rng, len))
        })
        .collect();
    let news = (0..rng.random_range(0..8))
        .map(|_| {
            let len = rng.random_range(1..8);
            let body = random_sentence(rng, len);
            if rng.random_range(0..4) == 0 {
                body
            } else {
                format!("In the {} minute, {body}", ordinal(rng.random_range(0..t + 6)))
            }
        })
        .collect();
    GameRecord::new(id, commentaries, news)
}

const SYLLABLES: [&str; 12] = ["ka", "ro", "mi", "te", "lu", "sa", "no", "vi", "de", "gar", "ez", "on"];

fn random_name(rng: &mut ChaCha8Rng) -> String {
    let k = rng.random_range(2..5);
    let mut s: String = (0..k).map(|_| *SYLLABLES.choose(rng).expect("syllables")).collect();
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s
}

/// Applies up to `edits` random character substitutions, insertions or
/// deletions.
pub fn perturb(rng: &mut ChaCha8Rng, s: &str, edits: usize) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    for _ in 0..edits {
        let c = (b'a' + rng.random_range(0..26u8)) as char;
        match rng.random_range(0..3) {
            0 if !chars.is_empty() => {
                let i = rng.random_range(0..chars.len());
                chars[i] = c;
            }
            1 if chars.len() > 1 => {
                let i = rng.random_range(0..chars.len());
                chars.remove(i);
            }
            _ => {
                let i = rng.random_range(0..=chars.len());
                chars.insert(i, c);
            }
        }
    }
    chars.into_iter().collect()
}

/// Random candidates plus `n` mentions, each a perturbed candidate title.
pub fn mention_fixture(seed: u64, n: usize) -> (CandidateSet, Vec<Mention>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let players: Vec<PlayerPassage> = (0..12)
        .map(|i| {
            let name = random_name(&mut rng);
            PlayerPassage::new(format!("p{i}"), name.clone(), vec![format!("{name} is a player.")])
        })
        .collect();
    let teams: Vec<TeamArticle> = (0..6)
        .map(|i| {
            let name = format!("{} {}", random_name(&mut rng), ["FC", "United", "City"][i % 3]);
            TeamArticle::new(format!("t{i}"), name.clone(), vec![format!("{name} is a club.")])
        })
        .collect();
    let mentions = (0..n)
        .map(|_| {
            let kind = if rng.random_range(0..2) == 0 { EntityKind::Per } else { EntityKind::Org };
            let title = match kind {
                EntityKind::Per => players.choose(&mut rng).expect("players").title.clone(),
                EntityKind::Org => teams.choose(&mut rng).expect("teams").title.clone(),
            };
            let edits = rng.random_range(0..4);
            let surface = perturb(&mut rng, &title, edits);
            let end = surface.chars().count();
            Mention {
                surface,
                start: 0,
                end,
                kind,
            }
        })
        .collect();
    (CandidateSet { players, teams }, mentions)
}
