//! Greedy maximum matching with MaxMatch-Dropout.
//!
//! Each word is segmented left to right by repeatedly taking the longest
//! vocabulary entry at the current position. With dropout rate `q > 0`, each
//! accepting trie state of length two or more is demoted with probability
//! `q` for the current query, so a shorter subword may be taken instead. If
//! some position admits no subword at all, the whole word becomes the
//! unknown token.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::pretokenize::{lowercase_with_map, split_words, PreTokenization};
use crate::rng::{AlwaysKeep, RandomSource};
use crate::trie::Trie;
use crate::vocab::{
    PositionClass, TokenId, VocabConfig, Vocabulary, DEFAULT_CONTINUATION_PREFIX,
    DEFAULT_UNK_TOKEN,
};

pub const DEFAULT_MAX_WORD_CHARS: usize = 100;

/// Longest word accepted by [`MaxMatchTokenizer::enumerate_distribution`].
pub const ENUMERATION_MAX_CHARS: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("dropout rate {0} is outside [0, 1]")]
    InvalidDropout(f64),
    #[error("max_word_chars must be at least 1")]
    InvalidMaxWordChars,
    #[error("vocabulary uses continuation prefix {vocab:?}, config expects {config:?}")]
    PrefixMismatch { vocab: String, config: String },
    #[error("vocabulary uses unknown token {vocab:?}, config expects {config:?}")]
    UnkMismatch { vocab: String, config: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenizeError {
    #[error("word has {0} characters; enumeration is limited to {ENUMERATION_MAX_CHARS}")]
    WordTooLong(usize),
}

pub fn check_rate(rate: f64) -> Result<f64, ConfigError> {
    if (0.0..=1.0).contains(&rate) {
        Ok(rate)
    } else {
        Err(ConfigError::InvalidDropout(rate))
    }
}

#[derive(Clone, Debug)]
pub struct TokenizerConfig {
    /// Probability of dropping an accepting state.
    pub dropout: f64,
    pub continuation_prefix: String,
    pub unk_token: String,
    /// Words longer than this many characters become the unknown token.
    pub max_word_chars: usize,
    pub pre_tokenization: PreTokenization,
    pub lowercase: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            dropout: 0.0,
            continuation_prefix: DEFAULT_CONTINUATION_PREFIX.to_string(),
            unk_token: DEFAULT_UNK_TOKEN.to_string(),
            max_word_chars: DEFAULT_MAX_WORD_CHARS,
            pre_tokenization: PreTokenization::Whitespace,
            lowercase: false,
        }
    }
}

impl TokenizerConfig {
    pub fn with_dropout(mut self, dropout: f64) -> Self {
        self.dropout = dropout;
        self
    }

    pub fn with_prefix(mut self, prefix: &str) -> Self {
        self.continuation_prefix = prefix.to_string();
        self
    }

    pub fn with_pre_tokenization(mut self, mode: PreTokenization) -> Self {
        self.pre_tokenization = mode;
        self
    }

    /// Vocabulary settings consistent with this config.
    pub fn vocab_config(&self) -> VocabConfig {
        VocabConfig {
            continuation_prefix: self.continuation_prefix.clone(),
            unk_token: self.unk_token.clone(),
            ..VocabConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_rate(self.dropout)?;
        if self.max_word_chars == 0 {
            return Err(ConfigError::InvalidMaxWordChars);
        }
        Ok(())
    }
}

/// One emitted token.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Token {
    /// Text as emitted, including any continuation prefix.
    pub surface: String,
    /// Vocabulary id; absent for BPE pieces, which have no vocabulary.
    pub id: Option<TokenId>,
    /// `[start, end)` in characters of the source word or text.
    pub span: (usize, usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn ids(&self) -> Vec<Option<TokenId>> {
        self.tokens.iter().map(|t| t.id).collect()
    }

    pub fn spans(&self) -> Vec<(usize, usize)> {
        self.tokens.iter().map(|t| t.span).collect()
    }

    pub fn push(&mut self, token: Token) {
        self.tokens.push(token);
    }

    pub fn extend(&mut self, other: TokenSequence) {
        self.tokens.extend(other.tokens);
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a Token;
    type IntoIter = std::slice::Iter<'a, Token>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

/// Vocabulary plus the two tries (word-initial and continuation) and the
/// tokenization policy. Immutable and shareable across threads.
#[derive(Clone, Debug)]
pub struct MaxMatchTokenizer {
    vocab: Vocabulary,
    initial: Trie,
    continuation: Trie,
    config: TokenizerConfig,
}

impl MaxMatchTokenizer {
    pub fn new(vocab: Vocabulary, config: TokenizerConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        if vocab.continuation_prefix() != config.continuation_prefix {
            return Err(ConfigError::PrefixMismatch {
                vocab: vocab.continuation_prefix().to_string(),
                config: config.continuation_prefix,
            });
        }
        if vocab.unk_token() != config.unk_token {
            return Err(ConfigError::UnkMismatch {
                vocab: vocab.unk_token().to_string(),
                config: config.unk_token,
            });
        }
        let initial = Trie::build(&vocab, PositionClass::Initial);
        let continuation = Trie::build(&vocab, PositionClass::Continuation);
        Ok(Self {
            vocab,
            initial,
            continuation,
            config,
        })
    }

    /// Convenience constructor: builds the vocabulary from `tokens` using the
    /// prefix and unknown token of `config`.
    pub fn from_tokens<I, S>(tokens: I, config: TokenizerConfig) -> Result<Self, crate::Error>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let vocab = Vocabulary::from_tokens(tokens, &config.vocab_config())?;
        Ok(Self::new(vocab, config)?)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    pub fn dropout(&self) -> f64 {
        self.config.dropout
    }

    pub fn trie(&self, class: PositionClass) -> &Trie {
        match class {
            PositionClass::Initial => &self.initial,
            PositionClass::Continuation => &self.continuation,
        }
    }

    fn unk(&self, span: (usize, usize)) -> Token {
        Token {
            surface: self.vocab.unk_token().to_string(),
            id: Some(self.vocab.unk_id()),
            span,
        }
    }

    /// Segments `chars` at dropout rate `dropout`, appending to `out`.
    /// `origin[i]` maps character `i` to its offset in the caller's source,
    /// and `source_end` is the offset just past the word.
    fn segment<R: RandomSource + ?Sized>(
        &self,
        chars: &[char],
        origin: &dyn Fn(usize) -> usize,
        source_end: usize,
        dropout: f64,
        rng: &mut R,
        out: &mut Vec<Token>,
    ) {
        let span_of = |start: usize, end: usize| {
            let s = origin(start);
            let e = if end == chars.len() { source_end } else { origin(end) };
            (s, e)
        };
        if chars.is_empty() {
            return;
        }
        if chars.len() > self.config.max_word_chars {
            out.push(self.unk(span_of(0, chars.len())));
            return;
        }
        let mark = out.len();
        let mut start = 0;
        while start < chars.len() {
            let trie = if start == 0 { &self.initial } else { &self.continuation };
            match trie.longest_match(chars, start, dropout, rng) {
                Some(m) => {
                    let end = start + m.length;
                    out.push(Token {
                        surface: self
                            .vocab
                            .token_of(m.token_id)
                            .expect("trie ids come from the vocabulary")
                            .to_string(),
                        id: Some(m.token_id),
                        span: span_of(start, end),
                    });
                    start = end;
                }
                None => {
                    out.truncate(mark);
                    out.push(self.unk(span_of(0, chars.len())));
                    return;
                }
            }
        }
    }

    /// Tokenizes a single word at the configured dropout rate. Spans are
    /// character offsets into `word`.
    pub fn tokenize_word<R: RandomSource + ?Sized>(&self, word: &str, rng: &mut R) -> TokenSequence {
        self.tokenize_word_with(word, self.config.dropout, rng)
    }

    /// Tokenizes a single word at an explicit dropout rate.
    pub fn tokenize_word_with<R: RandomSource + ?Sized>(
        &self,
        word: &str,
        dropout: f64,
        rng: &mut R,
    ) -> TokenSequence {
        let chars: Vec<char> = word.chars().collect();
        let mut out = Vec::new();
        self.segment(&chars, &|i| i, chars.len(), dropout, rng, &mut out);
        TokenSequence { tokens: out }
    }

    /// Vanilla maximum matching, no dropout.
    pub fn tokenize_word_deterministic(&self, word: &str) -> TokenSequence {
        self.tokenize_word_with(word, 0.0, &mut AlwaysKeep)
    }

    /// Pre-tokenizes `text` and tokenizes every word. Spans are character
    /// offsets into `text`.
    pub fn tokenize_text<R: RandomSource + ?Sized>(&self, text: &str, rng: &mut R) -> TokenSequence {
        self.tokenize_text_with(text, self.config.dropout, rng)
    }

    pub fn tokenize_text_with<R: RandomSource + ?Sized>(
        &self,
        text: &str,
        dropout: f64,
        rng: &mut R,
    ) -> TokenSequence {
        let mut out = Vec::new();
        let mut chars = Vec::new();
        for word in split_words(text, self.config.pre_tokenization) {
            if self.config.lowercase {
                let (lowered, origin) = lowercase_with_map(word.text);
                let base = word.char_start;
                self.segment(&lowered, &|i| base + origin[i], word.char_end, dropout, rng, &mut out);
            } else {
                chars.clear();
                chars.extend(word.text.chars());
                let base = word.char_start;
                self.segment(&chars, &|i| base + i, word.char_end, dropout, rng, &mut out);
            }
        }
        TokenSequence { tokens: out }
    }

    pub fn tokenize_text_deterministic(&self, text: &str) -> TokenSequence {
        self.tokenize_text_with(text, 0.0, &mut AlwaysKeep)
    }

    pub fn encode<R: RandomSource + ?Sized>(&self, text: &str, rng: &mut R) -> Vec<TokenId> {
        self.tokenize_text(text, rng)
            .tokens
            .into_iter()
            .map(|t| t.id.expect("maxmatch tokens carry ids"))
            .collect()
    }

    /// Number of words `text` splits into under the configured
    /// pre-tokenization.
    pub fn count_words(&self, text: &str) -> usize {
        split_words(text, self.config.pre_tokenization).len()
    }

    /// Exact output distribution of [`tokenize_word`](Self::tokenize_word)
    /// for `word` at the configured dropout rate.
    ///
    /// Explores every keep/drop outcome by direct substring lookups in the
    /// vocabulary, without the tries. Outcomes of probability zero are
    /// omitted.
    pub fn enumerate_distribution(&self, word: &str) -> Result<BTreeMap<TokenSequence, f64>, TokenizeError> {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() > ENUMERATION_MAX_CHARS {
            return Err(TokenizeError::WordTooLong(chars.len()));
        }
        let mut dist = BTreeMap::new();
        if chars.is_empty() {
            dist.insert(TokenSequence::new(), 1.0);
            return Ok(dist);
        }
        let whole = (0, chars.len());
        if chars.len() > self.config.max_word_chars {
            dist.insert(TokenSequence { tokens: vec![self.unk(whole)] }, 1.0);
            return Ok(dist);
        }
        let mut prefix = Vec::new();
        self.explore(&chars, 0, 1.0, &mut prefix, &mut dist);
        Ok(dist)
    }

    fn explore(
        &self,
        chars: &[char],
        start: usize,
        prob: f64,
        prefix: &mut Vec<Token>,
        dist: &mut BTreeMap<TokenSequence, f64>,
    ) {
        let q = self.config.dropout;
        if start == chars.len() {
            *dist.entry(TokenSequence { tokens: prefix.clone() }).or_insert(0.0) += prob;
            return;
        }
        let class = if start == 0 { PositionClass::Initial } else { PositionClass::Continuation };
        let candidates: Vec<(usize, TokenId)> = (1..=chars.len() - start)
            .filter_map(|len| {
                let s: String = chars[start..start + len].iter().collect();
                self.vocab.lookup(&s, class).map(|id| (len, id))
            })
            .collect();
        let long = candidates.iter().filter(|(len, _)| *len >= 2).count();
        let mut longer = long;
        let mut all_dropped = true;
        for &(len, id) in &candidates {
            let p = if len == 1 {
                all_dropped = false;
                q.powi(long as i32)
            } else {
                longer -= 1;
                (1.0 - q) * q.powi(longer as i32)
            };
            if p == 0.0 {
                continue;
            }
            prefix.push(Token {
                surface: self.vocab.token_of(id).unwrap().to_string(),
                id: Some(id),
                span: (start, start + len),
            });
            self.explore(chars, start + len, prob * p, prefix, dist);
            prefix.pop();
        }
        if all_dropped {
            let p = q.powi(long as i32);
            if p > 0.0 {
                let unk = TokenSequence { tokens: vec![self.unk((0, chars.len()))] };
                *dist.entry(unk).or_insert(0.0) += prob * p;
            }
        }
    }
}
