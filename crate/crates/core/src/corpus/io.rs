use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{
    card_to_passage, GameLinks, GameRecord, KnowledgeCard, KnowledgeCorpus, LinkPolicy,
    PlayerPassage, Split, TeamArticle,
};
use crate::error::{Error, Result};

/// Reads a line-delimited JSON file. Blank lines are skipped; parse errors
/// carry the 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(mut out: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

/// Validated games plus non-fatal diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub games: Vec<GameRecord>,
    pub warnings: Vec<String>,
}

/// Loads games from a `games.jsonl` file, or from `<split>.jsonl` inside a
/// dataset directory (`all` concatenates train, dev and test).
pub fn load_dataset(path: &Path, split: Split) -> Result<Dataset> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let names = match split {
            Split::All => vec!["train", "dev", "test"],
            s => vec![s.as_str()],
        };
        names
            .iter()
            .map(|n| path.join(format!("{n}.jsonl")))
            .collect()
    } else if split == Split::All {
        vec![path.to_path_buf()]
    } else {
        return Err(Error::Config(format!(
            "split `{split}` needs a dataset directory, got file {}",
            path.display()
        )));
    };

    let mut dataset = Dataset::default();
    let mut seen = HashSet::new();
    for file in files {
        let rows: Vec<(usize, GameRecord)> = read_jsonl(&file)?;
        if rows.is_empty() {
            let msg = format!("{}: no records", file.display());
            log::warn!("{msg}");
            dataset.warnings.push(msg);
        }
        for (line, game) in rows {
            game.validate().map_err(|e| Error::Parse {
                path: file.clone(),
                line,
                message: e.to_string(),
            })?;
            if !seen.insert(game.game_id.clone()) {
                return Err(Error::Parse {
                    path: file.clone(),
                    line,
                    message: Error::DuplicateId(game.game_id).to_string(),
                });
            }
            dataset.games.push(game);
        }
    }
    Ok(dataset)
}

pub fn save_dataset(path: &Path, games: &[GameRecord]) -> Result<()> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, games)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn load_validated<T: DeserializeOwned>(
    path: &Path,
    validate: impl Fn(&T) -> Result<()>,
) -> Result<Vec<T>> {
    read_jsonl::<T>(path)?
        .into_iter()
        .map(|(line, v)| {
            validate(&v).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
            Ok(v)
        })
        .collect()
}

pub fn load_players(path: &Path) -> Result<Vec<PlayerPassage>> {
    load_validated(path, PlayerPassage::validate)
}

pub fn load_teams(path: &Path) -> Result<Vec<TeamArticle>> {
    load_validated(path, TeamArticle::validate)
}

pub fn load_cards(path: &Path) -> Result<Vec<KnowledgeCard>> {
    load_validated(path, |_: &KnowledgeCard| Ok(()))
}

/// File locations of a knowledge corpus. Player passages come from
/// `players`, templated from `cards`, or both.
#[derive(Debug, Clone, Default)]
pub struct CorpusPaths {
    pub players: Option<PathBuf>,
    pub cards: Option<PathBuf>,
    pub teams: PathBuf,
    pub links: PathBuf,
}

impl KnowledgeCorpus {
    pub fn load(paths: &CorpusPaths, policy: LinkPolicy) -> Result<(Self, Vec<String>)> {
        let mut players = match &paths.players {
            Some(p) => load_players(p)?,
            None => Vec::new(),
        };
        if let Some(cards) = &paths.cards {
            for card in load_cards(cards)? {
                players.push(card_to_passage(&card)?);
            }
        }
        let teams = load_teams(&paths.teams)?;
        let links: Vec<GameLinks> = read_jsonl(&paths.links)?
            .into_iter()
            .map(|(_, l)| l)
            .collect();
        KnowledgeCorpus::from_parts(players, teams, links, policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    const TWO_GAMES: &str = r#"{"game_id":"a","commentaries":[{"t":1,"s":"0-0","c":"kick off","who":"x"}],"news":["In the 1st minute, kick off."],"venue":"Camp Nou"}
{"game_id":"b","commentaries":[{"t":0,"s":"0-0","c":"start"},{"t":3,"s":"1-0","c":"goal"}],"news":[]}
"#;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_two_games() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "games.jsonl", TWO_GAMES);
        let ds = load_dataset(&p, Split::All).unwrap();
        assert_eq!(ds.games.len(), 2);
        assert_eq!(ds.games[1].commentaries[1].s, "1-0");
        assert!(ds.warnings.is_empty());
    }

    #[test]
    fn round_trip_preserves_unknown_fields() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "games.jsonl", TWO_GAMES);
        let ds = load_dataset(&p, Split::All).unwrap();
        let out = dir.path().join("out.jsonl");
        save_dataset(&out, &ds.games).unwrap();
        let saved = fs::read_to_string(&out).unwrap();
        for (a, b) in TWO_GAMES.lines().zip(saved.lines()) {
            let a: Value = serde_json::from_str(a).unwrap();
            let b: Value = serde_json::from_str(b).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(saved, TWO_GAMES);
    }

    #[test]
    fn empty_file_warns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "games.jsonl", "");
        let ds = load_dataset(&p, Split::All).unwrap();
        assert!(ds.games.is_empty());
        assert_eq!(ds.warnings.len(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let bad = format!("{}{{not json\n", TWO_GAMES);
        let p = write(dir.path(), "games.jsonl", &bad);
        match load_dataset(&p, Split::All) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }

        let unordered = r#"{"game_id":"late","commentaries":[{"t":9,"s":"","c":"a"},{"t":2,"s":"","c":"b"}],"news":[]}"#;
        let p = write(dir.path(), "u.jsonl", unordered);
        let err = load_dataset(&p, Split::All).unwrap_err().to_string();
        assert!(err.contains("late") && err.contains(":1:"), "{err}");

        let dup = format!("{TWO_GAMES}{}", TWO_GAMES.lines().next().unwrap());
        let p = write(dir.path(), "d.jsonl", &dup);
        let err = load_dataset(&p, Split::All).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");

        assert!(matches!(
            load_dataset(&dir.path().join("missing.jsonl"), Split::All),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn split_directory_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut lines = TWO_GAMES.lines();
        write(dir.path(), "train.jsonl", lines.next().unwrap());
        write(dir.path(), "dev.jsonl", lines.next().unwrap());
        write(dir.path(), "test.jsonl", "");
        assert_eq!(load_dataset(dir.path(), Split::Dev).unwrap().games[0].game_id, "b");
        let all = load_dataset(dir.path(), Split::All).unwrap();
        assert_eq!(all.games.len(), 2);
        assert_eq!(all.warnings.len(), 1);
        let file = dir.path().join("train.jsonl");
        assert!(load_dataset(&file, Split::Test).is_err());
    }

    #[test]
    fn corpus_from_files_with_cards() {
        let dir = tempfile::tempdir().unwrap();
        let cards = write(
            dir.path(),
            "cards.jsonl",
            r#"{"player_id":"p1","title":"Ronaldo","attributes":[["birthday","September 18, 1976"]]}"#,
        );
        let teams = write(
            dir.path(),
            "teams.jsonl",
            r#"{"team_id":"t1","title":"Barcelona","sentences":["A club."]}"#,
        );
        let links = write(
            dir.path(),
            "links.jsonl",
            r#"{"game_id":"g","team_ids":["t1"],"player_ids":["p1"]}"#,
        );
        let paths = CorpusPaths {
            players: None,
            cards: Some(cards),
            teams,
            links,
        };
        let (corpus, _) = KnowledgeCorpus::load(&paths, LinkPolicy::Strict).unwrap();
        assert_eq!(
            corpus.players["p1"].sentences,
            ["Ronaldo's birthday is September 18, 1976"]
        );
    }
}
