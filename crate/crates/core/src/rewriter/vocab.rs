use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const PAD: &str = "<pad>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// Piece vocabulary; ids follow first appearance after the four specials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    pieces: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::from(vec![PAD.into(), BOS.into(), EOS.into(), UNK.into()])
    }
}

impl From<Vec<String>> for Vocab {
    fn from(pieces: Vec<String>) -> Self {
        let index = pieces
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        Self { pieces, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.pieces
    }
}

impl Vocab {
    pub const BOS_ID: usize = 1;
    pub const EOS_ID: usize = 2;
    pub const UNK_ID: usize = 3;

    pub fn build<'a>(pieces: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Self::default();
        for p in pieces {
            v.insert(p);
        }
        v
    }

    pub fn insert(&mut self, piece: &str) -> usize {
        if let Some(&i) = self.index.get(piece) {
            return i;
        }
        self.pieces.push(piece.to_string());
        self.index.insert(piece.to_string(), self.pieces.len() - 1);
        self.pieces.len() - 1
    }

    pub fn id(&self, piece: &str) -> usize {
        self.index.get(piece).copied().unwrap_or(Self::UNK_ID)
    }

    pub fn piece(&self, id: usize) -> &str {
        self.pieces.get(id).map_or(UNK, String::as_str)
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
}
