use super::{KnowledgeCard, PlayerPassage};
use crate::error::{Error, Result};

/// Player pages describe players in at most this many aspects.
pub const MAX_CARD_ASPECTS: usize = 10;

/// Aspect name → sentence template. `{title}` and `{value}` are substituted.
const TEMPLATES: &[(&str, &str)] = &[
    ("name", "{title}'s full name is {value}"),
    ("birthday", "{title}'s birthday is {value}"),
    ("age", "{title} is {value} years old"),
    ("height", "{title}'s height is {value}"),
    ("weight", "{title}'s weight is {value}"),
    ("nationality", "{title}'s nationality is {value}"),
    ("position", "{title} plays as {value}"),
    ("club", "{title} plays for {value}"),
    ("number", "{title} wears the number {value} shirt"),
    ("foot", "{title}'s preferred foot is {value}"),
];

const GENERIC: &str = "{title}'s {aspect} is {value}";

fn template_for(aspect: &str) -> &'static str {
    let key = aspect.trim().to_lowercase();
    TEMPLATES
        .iter()
        .find(|(name, _)| *name == key)
        .map_or(GENERIC, |(_, t)| t)
}

/// Renders a knowledge card as a passage: one sentence per non-empty
/// attribute, in attribute order.
pub fn card_to_passage(card: &KnowledgeCard) -> Result<PlayerPassage> {
    let title = card.title.trim();
    if title.is_empty() {
        return Err(Error::Invalid(format!(
            "card `{}` has an empty title",
            card.player_id
        )));
    }
    if card.attributes.len() > MAX_CARD_ASPECTS {
        return Err(Error::Invalid(format!(
            "card `{}` has {} aspects (max {MAX_CARD_ASPECTS})",
            card.player_id,
            card.attributes.len()
        )));
    }
    let sentences: Vec<String> = card
        .attributes
        .iter()
        .filter(|(_, value)| !value.trim().is_empty())
        .map(|(aspect, value)| {
            template_for(aspect)
                .replace("{title}", title)
                .replace("{aspect}", aspect.trim())
                .replace("{value}", value.trim())
        })
        .collect();
    if sentences.is_empty() {
        return Err(Error::Empty("knowledge card has no non-empty attributes"));
    }
    Ok(PlayerPassage {
        id: card.player_id.clone(),
        title: title.to_string(),
        sentences,
        extra: card.extra.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Map;

    fn card(title: &str, attrs: &[(&str, &str)]) -> KnowledgeCard {
        KnowledgeCard {
            player_id: "p".into(),
            title: title.into(),
            attributes: attrs
                .iter()
                .map(|(a, v)| (a.to_string(), v.to_string()))
                .collect(),
            extra: Map::new(),
        }
    }

    #[test]
    fn birthday_sentence() {
        let p = card_to_passage(&card("Ronaldo", &[("birthday", "September 18, 1976")])).unwrap();
        assert_eq!(p.sentences, ["Ronaldo's birthday is September 18, 1976"]);
    }

    #[test]
    fn empty_values_are_skipped() {
        let p = card_to_passage(&card(
            "Rooney",
            &[("age", "36"), ("height", " "), ("club", "Everton")],
        ))
        .unwrap();
        assert_eq!(p.sentences, ["Rooney is 36 years old", "Rooney plays for Everton"]);
    }

    #[test]
    fn full_card_gives_ten_sentences() {
        let attrs: Vec<(&str, &str)> = TEMPLATES.iter().map(|(a, _)| (*a, "v")).collect();
        let p = card_to_passage(&card("X", &attrs)).unwrap();
        assert_eq!(p.sentences.len(), 10);
        for s in &p.sentences {
            assert!(s.contains('X') && s.contains('v'), "{s}");
        }
    }

    #[test]
    fn unknown_aspect_uses_generic_template() {
        let p = card_to_passage(&card("Song Boxuan", &[("Nickname", "Song")])).unwrap();
        assert_eq!(p.sentences, ["Song Boxuan's Nickname is Song"]);
    }

    #[test]
    fn invalid_cards() {
        assert!(card_to_passage(&card("X", &[("age", "")])).is_err());
        assert!(card_to_passage(&card("", &[("age", "3")])).is_err());
        let many: Vec<(&str, &str)> = (0..11).map(|_| ("age", "1")).collect();
        assert!(card_to_passage(&card("X", &many)).is_err());
    }

    #[test]
    fn title_change_only_changes_title_tokens() {
        let attrs = [("birthday", "May 1"), ("club", "Inter"), ("rank", "2")];
        let a = card_to_passage(&card("Alpha", &attrs)).unwrap();
        let b = card_to_passage(&card("Beta", &attrs)).unwrap();
        for (x, y) in a.sentences.iter().zip(&b.sentences) {
            assert_eq!(x.replace("Alpha", "Beta"), *y);
        }
    }
}
