//! The bundled fixture files are the serialized output of
//! `ksum_core::synth::toy_fixture`. Set `REGENERATE_FIXTURE=1` to rewrite
//! them after changing the generator.

use std::path::{Path, PathBuf};

use ksum_core::corpus::write_jsonl;
use ksum_core::synth::toy_fixture;
use serde::Serialize;

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy")
}

fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, items).unwrap();
    buf
}

#[test]
fn bundled_fixture_matches_generator() {
    let fx = toy_fixture();
    let files = [
        ("games.jsonl", jsonl(&fx.games)),
        ("players.jsonl", jsonl(&fx.players)),
        ("cards.jsonl", jsonl(&fx.cards)),
        ("teams.jsonl", jsonl(&fx.teams)),
        ("links.jsonl", jsonl(&fx.links)),
    ];
    let regenerate = std::env::var_os("REGENERATE_FIXTURE").is_some();
    for (name, bytes) in files {
        let path = dir().join(name);
        if regenerate {
            std::fs::write(&path, &bytes).unwrap();
        }
        let on_disk = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(on_disk == bytes, "{name} is stale; rerun with REGENERATE_FIXTURE=1");
    }

    let config = std::fs::read_to_string(dir().join("ksum.toml")).unwrap();
    let table: toml::Table = toml::from_str(&config).unwrap();
    let aliases: Vec<(String, String)> = table["ner"]["aliases"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| {
            let a = v.as_array().unwrap();
            (a[0].as_str().unwrap().to_string(), a[1].as_str().unwrap().to_string())
        })
        .collect();
    assert_eq!(aliases, fx.aliases);
}
