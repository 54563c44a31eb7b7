//! BPE-Dropout: applying a merge table with randomly skipped merges.
//!
//! Each round collects every adjacent symbol pair present in the merge
//! table, scanning left to right and drawing a fresh skip decision (with
//! probability `p`) for each one. The surviving pair of highest priority is
//! merged, leftmost occurrence first. The word is done once a round has no
//! surviving pair. At `p = 0` this is plain BPE.

use std::collections::{HashMap, HashSet};
use std::io::{self, BufRead, BufReader, Read};

use thiserror::Error;

use crate::maxmatch::{Token, TokenSequence};
use crate::pretokenize::{split_words, PreTokenization};
use crate::rng::{AlwaysKeep, RandomSource};

#[derive(Debug, Error)]
pub enum MergesError {
    #[error("malformed merge on line {0}")]
    MalformedLine(usize),
    #[error("duplicate merge on line {0}")]
    DuplicateMerge(usize),
    #[error("merge table is not valid UTF-8")]
    InvalidEncoding,
    #[error(transparent)]
    Io(io::Error),
}

/// Ordered merge rules; earlier rules take priority.
#[derive(Clone, Debug, Default)]
pub struct MergeTable {
    merges: Vec<(String, String)>,
    rank: HashMap<(String, String), usize>,
}

impl MergeTable {
    /// Reads a `merges.txt` stream: an optional `#version` header, then one
    /// `left right` pair per line. Blank lines are skipped.
    pub fn load<R: Read>(source: R) -> Result<Self, MergesError> {
        let mut table = MergeTable::default();
        for (index, line) in BufReader::new(source).lines().enumerate() {
            let line_no = index + 1;
            let line = line.map_err(|e| match e.kind() {
                io::ErrorKind::InvalidData => MergesError::InvalidEncoding,
                _ => MergesError::Io(e),
            })?;
            if index == 0 && line.starts_with("#version") {
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let (Some(left), Some(right), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(MergesError::MalformedLine(line_no));
            };
            if left.is_empty() || right.is_empty() {
                return Err(MergesError::MalformedLine(line_no));
            }
            if !table.push(left, right) {
                return Err(MergesError::DuplicateMerge(line_no));
            }
        }
        Ok(table)
    }

    /// Builds a table from pairs in priority order. Later duplicates are
    /// ignored.
    pub fn from_pairs<I, L, R>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (L, R)>,
        L: Into<String>,
        R: Into<String>,
    {
        let mut table = MergeTable::default();
        for (l, r) in pairs {
            table.push(&l.into(), &r.into());
        }
        table
    }

    fn push(&mut self, left: &str, right: &str) -> bool {
        let key = (left.to_string(), right.to_string());
        if self.rank.contains_key(&key) {
            return false;
        }
        self.rank.insert(key.clone(), self.merges.len());
        self.merges.push(key);
        true
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn rank(&self, left: &str, right: &str) -> Option<usize> {
        self.rank.get(&(left.to_string(), right.to_string())).copied()
    }

    /// Index of the first merge whose operands are not single characters or
    /// products of earlier merges, if any.
    pub fn first_unproducible(&self) -> Option<usize> {
        let mut produced: HashSet<String> = HashSet::new();
        let available =
            |s: &str, produced: &HashSet<String>| s.chars().count() == 1 || produced.contains(s);
        for (i, (l, r)) in self.merges.iter().enumerate() {
            if !available(l, &produced) || !available(r, &produced) {
                return Some(i);
            }
            produced.insert(format!("{l}{r}"));
        }
        None
    }

    /// Every symbol the table can produce: operands and merge results.
    pub fn symbols(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        for (l, r) in &self.merges {
            out.insert(l.clone());
            out.insert(r.clone());
            out.insert(format!("{l}{r}"));
        }
        out
    }
}

/// Applies a merge table to words.
#[derive(Clone, Debug)]
pub struct BpeTokenizer {
    table: MergeTable,
    // interned symbol ids keep the per-round scans allocation-free
    symbol_ids: HashMap<String, u32>,
    pair_merge: HashMap<(u32, u32), (usize, u32)>,
    symbols: Vec<String>,
    dropout: f64,
    pre_tokenization: PreTokenization,
}

impl BpeTokenizer {
    pub fn new(table: MergeTable, dropout: f64) -> Self {
        let mut tokenizer = BpeTokenizer {
            table: MergeTable::default(),
            symbol_ids: HashMap::new(),
            pair_merge: HashMap::new(),
            symbols: Vec::new(),
            dropout,
            pre_tokenization: PreTokenization::Whitespace,
        };
        for (rank, (l, r)) in table.merges().iter().enumerate() {
            let left = tokenizer.intern(l);
            let right = tokenizer.intern(r);
            let merged = tokenizer.intern(&format!("{l}{r}"));
            tokenizer.pair_merge.entry((left, right)).or_insert((rank, merged));
        }
        tokenizer.table = table;
        tokenizer
    }

    pub fn with_pre_tokenization(mut self, mode: PreTokenization) -> Self {
        self.pre_tokenization = mode;
        self
    }

    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.symbol_ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(s.to_string());
        self.symbol_ids.insert(s.to_string(), id);
        id
    }

    pub fn table(&self) -> &MergeTable {
        &self.table
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    /// Segments `word` into pieces, returned as `(start, end)` character
    /// ranges.
    fn segment<R: RandomSource + ?Sized>(&self, chars: &[char], dropout: f64, rng: &mut R) -> Vec<(usize, usize)> {
        // (symbol id or None for characters outside the table, start, end)
        let mut pieces: Vec<(Option<u32>, usize, usize)> = {
            let mut buf = [0u8; 4];
            chars
                .iter()
                .enumerate()
                .map(|(i, c)| (self.symbol_ids.get(&*c.encode_utf8(&mut buf)).copied(), i, i + 1))
                .collect()
        };
        let keep = 1.0 - dropout;
        loop {
            // (rank, position, merged id)
            let mut best: Option<(usize, usize, u32)> = None;
            for pos in 0..pieces.len().saturating_sub(1) {
                let (Some(left), Some(right)) = (pieces[pos].0, pieces[pos + 1].0) else {
                    continue;
                };
                let Some(&(rank, merged)) = self.pair_merge.get(&(left, right)) else {
                    continue;
                };
                if !rng.bernoulli(keep) {
                    continue;
                }
                if best.is_none_or(|(r, _, _)| rank < r) {
                    best = Some((rank, pos, merged));
                }
            }
            let Some((_, pos, merged)) = best else {
                break;
            };
            let end = pieces[pos + 1].2;
            pieces[pos] = (Some(merged), pieces[pos].1, end);
            pieces.remove(pos + 1);
        }
        pieces.into_iter().map(|(_, s, e)| (s, e)).collect()
    }

    pub fn tokenize_word<R: RandomSource + ?Sized>(&self, word: &str, rng: &mut R) -> TokenSequence {
        self.tokenize_word_with(word, self.dropout, rng)
    }

    pub fn tokenize_word_with<R: RandomSource + ?Sized>(
        &self,
        word: &str,
        dropout: f64,
        rng: &mut R,
    ) -> TokenSequence {
        let chars: Vec<char> = word.chars().collect();
        let mut out = TokenSequence::new();
        for (s, e) in self.segment(&chars, dropout, rng) {
            out.push(Token {
                surface: chars[s..e].iter().collect(),
                id: None,
                span: (s, e),
            });
        }
        out
    }

    pub fn tokenize_word_deterministic(&self, word: &str) -> TokenSequence {
        self.tokenize_word_with(word, 0.0, &mut AlwaysKeep)
    }

    pub fn tokenize_text<R: RandomSource + ?Sized>(&self, text: &str, rng: &mut R) -> TokenSequence {
        self.tokenize_text_with(text, self.dropout, rng)
    }

    pub fn tokenize_text_with<R: RandomSource + ?Sized>(
        &self,
        text: &str,
        dropout: f64,
        rng: &mut R,
    ) -> TokenSequence {
        let mut out = TokenSequence::new();
        for word in split_words(text, self.pre_tokenization) {
            let chars: Vec<char> = word.text.chars().collect();
            for (s, e) in self.segment(&chars, dropout, rng) {
                out.push(Token {
                    surface: chars[s..e].iter().collect(),
                    id: None,
                    span: (word.char_start + s, word.char_start + e),
                });
            }
        }
        out
    }

    pub fn tokenize_text_deterministic(&self, text: &str) -> TokenSequence {
        self.tokenize_text_with(text, 0.0, &mut AlwaysKeep)
    }

    pub fn count_words(&self, text: &str) -> usize {
        split_words(text, self.pre_tokenization).len()
    }
}
