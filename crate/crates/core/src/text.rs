//! Tokenizers shared by statistics, similarity, ROUGE and the rewriter.
//!
//! All offsets are in unicode scalar values (chars), not bytes.

/// A token with its char span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl Token {
    /// True when the token carries at least one letter or digit.
    pub fn is_word(&self) -> bool {
        self.text.chars().any(char::is_alphanumeric)
    }
}

pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<Token>;

    fn count(&self, text: &str) -> usize {
        self.tokenize(text).len()
    }

    fn strings(&self, text: &str) -> Vec<String> {
        self.tokenize(text).into_iter().map(|t| t.text).collect()
    }
}

pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2EBEF
        | 0x3040..=0x30FF
        | 0xAC00..=0xD7AF)
}

/// Splits on whitespace and punctuation; every CJK character is its own token
/// and every punctuation character is its own token.
#[derive(Debug, Clone, Copy, Default)]
pub struct BasicTokenizer {
    pub lowercase: bool,
}

impl BasicTokenizer {
    pub fn lowercased() -> Self {
        Self { lowercase: true }
    }
}

impl Tokenizer for BasicTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token> {
        let mut out = Vec::new();
        let mut word: Option<(usize, String)> = None;
        let flush = |word: &mut Option<(usize, String)>, end: usize, out: &mut Vec<Token>| {
            if let Some((start, text)) = word.take() {
                out.push(Token { text, start, end });
            }
        };
        for (i, c) in text.chars().enumerate() {
            if c.is_alphanumeric() && !is_cjk(c) {
                let piece = word.get_or_insert_with(|| (i, String::new()));
                if self.lowercase {
                    piece.1.extend(c.to_lowercase());
                } else {
                    piece.1.push(c);
                }
                continue;
            }
            flush(&mut word, i, &mut out);
            if !c.is_whitespace() {
                out.push(Token {
                    text: c.to_string(),
                    start: i,
                    end: i + 1,
                });
            }
        }
        let len = text.chars().count();
        flush(&mut word, len, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token> {
        let mut out = Vec::new();
        let mut cur: Option<(usize, String)> = None;
        let mut n = 0;
        for (i, c) in text.chars().enumerate() {
            n = i + 1;
            if c.is_whitespace() {
                if let Some((start, t)) = cur.take() {
                    out.push(Token { text: t, start, end: i });
                }
            } else {
                cur.get_or_insert_with(|| (i, String::new())).1.push(c);
            }
        }
        if let Some((start, t)) = cur {
            out.push(Token { text: t, start, end: n });
        }
        out
    }
}

/// One token per non-whitespace character.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharTokenizer;

impl Tokenizer for CharTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token> {
        text.chars()
            .enumerate()
            .filter(|(_, c)| !c.is_whitespace())
            .map(|(i, c)| Token {
                text: c.to_string(),
                start: i,
                end: i + 1,
            })
            .collect()
    }
}

/// Marks a piece that was preceded by whitespace in the source text.
pub const SPACE_MARK: char = '\u{2581}';

/// Lossless (modulo whitespace runs) subword-style tokenizer for the rewriter.
///
/// Pieces follow [`BasicTokenizer`] boundaries; a piece preceded by whitespace
/// carries a leading [`SPACE_MARK`]. Spans refer to the unmarked text.
#[derive(Debug, Clone, Copy, Default)]
pub struct PieceTokenizer;

impl PieceTokenizer {
    pub fn detokenize<S: AsRef<str>>(pieces: &[S]) -> String {
        let joined: String = pieces.iter().map(AsRef::as_ref).collect();
        joined.replace(SPACE_MARK, " ").trim().to_string()
    }
}

impl Tokenizer for PieceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token> {
        let chars: Vec<char> = text.chars().collect();
        BasicTokenizer::default()
            .tokenize(text)
            .into_iter()
            .map(|mut tok| {
                if tok.start > 0 && chars[tok.start - 1].is_whitespace() {
                    tok.text.insert(0, SPACE_MARK);
                }
                tok
            })
            .collect()
    }
}

/// Char-offset slice of a string.
pub fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end.saturating_sub(start)).collect()
}

pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_splits_words_punct_and_cjk() {
        let toks = BasicTokenizer::default().strings("Suarez scored!!! 第27分钟");
        assert_eq!(
            toks,
            ["Suarez", "scored", "!", "!", "!", "第", "27", "分", "钟"]
        );
    }

    #[test]
    fn basic_offsets_are_chars() {
        let toks = BasicTokenizer::default().tokenize("é ab");
        assert_eq!((toks[1].start, toks[1].end), (2, 4));
        assert_eq!(char_slice("é ab", 2, 4), "ab");
    }

    #[test]
    fn pieces_round_trip() {
        let text = "In the 27th minute, Semedo crossed.";
        let pieces = PieceTokenizer.strings(text);
        assert_eq!(PieceTokenizer::detokenize(&pieces), text);
        let zh = "第27分钟，巴萨破门";
        assert_eq!(PieceTokenizer::detokenize(&PieceTokenizer.strings(zh)), zh);
    }

    #[test]
    fn whitespace_and_char() {
        assert_eq!(WhitespaceTokenizer.strings(" a  b,c "), ["a", "b,c"]);
        assert_eq!(CharTokenizer.count("a b"), 2);
    }
}
