//! Splitting text into words before subword matching.

use unicode_general_category::{get_general_category, GeneralCategory};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PreTokenization {
    /// Split on Unicode whitespace only.
    #[default]
    Whitespace,
    /// Split on whitespace and emit every punctuation character as its own
    /// word.
    WhitespacePunctuation,
}

/// A word of the source text. Offsets count characters, not bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Word<'a> {
    pub text: &'a str,
    pub char_start: usize,
    pub char_end: usize,
}

/// ASCII symbol ranges count as punctuation even where Unicode files them
/// under symbols (`$`, `+`, `^`, ...), as BERT's basic tokenizer does.
pub fn is_punctuation(ch: char) -> bool {
    if ch.is_ascii() {
        return ch.is_ascii_punctuation();
    }
    matches!(
        get_general_category(ch),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

pub fn split_words(text: &str, mode: PreTokenization) -> Vec<Word<'_>> {
    let mut words = Vec::new();
    // (byte offset, char offset) where the pending word starts
    let mut pending: Option<(usize, usize)> = None;
    let mut char_index = 0;
    for (byte, ch) in text.char_indices() {
        let punct = mode == PreTokenization::WhitespacePunctuation && is_punctuation(ch);
        if ch.is_whitespace() || punct {
            if let Some((b, c)) = pending.take() {
                words.push(Word { text: &text[b..byte], char_start: c, char_end: char_index });
            }
            if punct {
                words.push(Word {
                    text: &text[byte..byte + ch.len_utf8()],
                    char_start: char_index,
                    char_end: char_index + 1,
                });
            }
        } else if pending.is_none() {
            pending = Some((byte, char_index));
        }
        char_index += 1;
    }
    if let Some((b, c)) = pending {
        words.push(Word { text: &text[b..], char_start: c, char_end: char_index });
    }
    words
}

/// Lowercases `word`, returning the lowered characters and, for each, the
/// index of the source character it came from.
pub fn lowercase_with_map(word: &str) -> (Vec<char>, Vec<usize>) {
    let mut chars = Vec::with_capacity(word.len());
    let mut origin = Vec::with_capacity(word.len());
    for (i, ch) in word.chars().enumerate() {
        for lower in ch.to_lowercase() {
            chars.push(lower);
            origin.push(i);
        }
    }
    (chars, origin)
}
