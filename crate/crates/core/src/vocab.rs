//! Vocabulary storage in the BERT `vocab.txt` convention.
//!
//! A vocabulary file holds one token per line; a token's id is its zero-based
//! line number. Tokens that start with the continuation prefix (`##` by
//! default) may only be matched in the middle of a word.

use std::collections::{HashMap, HashSet};
use std::io::{self, Read, Write};

use thiserror::Error;

pub type TokenId = u32;

pub const DEFAULT_CONTINUATION_PREFIX: &str = "##";
pub const DEFAULT_UNK_TOKEN: &str = "[UNK]";
pub const DEFAULT_SPECIAL_TOKENS: [&str; 5] = ["[UNK]", "[CLS]", "[SEP]", "[PAD]", "[MASK]"];

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("duplicate token on line {0}")]
    DuplicateToken(usize),
    #[error("empty token on line {0}")]
    EmptyToken(usize),
    #[error("unknown token is missing from the vocabulary")]
    MissingUnkToken,
    #[error("vocabulary is not valid UTF-8")]
    InvalidEncoding,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Where in a word a subword is being matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PositionClass {
    /// The first subword of a word.
    Initial,
    /// Any subword after the first.
    Continuation,
}

/// Prefix, unknown-token and special-token settings shared by vocabulary
/// construction and loading.
#[derive(Clone, Debug)]
pub struct VocabConfig {
    pub continuation_prefix: String,
    pub unk_token: String,
    /// Tokens exempt from matching. The unknown token is always treated as
    /// special, whether or not it is listed here.
    pub special_tokens: Vec<String>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            continuation_prefix: DEFAULT_CONTINUATION_PREFIX.to_string(),
            unk_token: DEFAULT_UNK_TOKEN.to_string(),
            special_tokens: DEFAULT_SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl VocabConfig {
    /// Default settings with a given continuation prefix. An empty prefix
    /// disables the initial/continuation distinction.
    pub fn with_prefix(prefix: &str) -> Self {
        Self {
            continuation_prefix: prefix.to_string(),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct Vocabulary {
    tokens: Vec<String>,
    id_by_token: HashMap<String, TokenId>,
    continuation_prefix: String,
    unk_token: String,
    unk_id: TokenId,
    special_tokens: HashSet<String>,
}

impl Vocabulary {
    /// Reads a `vocab.txt` stream.
    ///
    /// A single trailing newline is ignored; any other blank line is an
    /// error. Line numbers in errors are one-based.
    pub fn load<R: Read>(mut source: R, config: &VocabConfig) -> Result<Self, VocabError> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        let text = String::from_utf8(bytes).map_err(|_| VocabError::InvalidEncoding)?;
        let body = text.strip_suffix('\n').unwrap_or(&text);
        if body.is_empty() {
            return Err(VocabError::MissingUnkToken);
        }
        let tokens: Vec<String> = body.split('\n').map(str::to_string).collect();
        let vocab = Self::build(tokens, config)?;
        Ok(vocab)
    }

    /// Builds a vocabulary from tokens in id order, appending the unknown
    /// token when it is absent.
    pub fn from_tokens<I, S>(tokens: I, config: &VocabConfig) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if !tokens.iter().any(|t| *t == config.unk_token) {
            tokens.push(config.unk_token.clone());
        }
        Self::build(tokens, config)
    }

    fn build(tokens: Vec<String>, config: &VocabConfig) -> Result<Self, VocabError> {
        let mut id_by_token = HashMap::with_capacity(tokens.len());
        for (index, token) in tokens.iter().enumerate() {
            let line = index + 1;
            if token.is_empty() {
                return Err(VocabError::EmptyToken(line));
            }
            if id_by_token.insert(token.clone(), index as TokenId).is_some() {
                return Err(VocabError::DuplicateToken(line));
            }
        }
        let unk_id = *id_by_token
            .get(&config.unk_token)
            .ok_or(VocabError::MissingUnkToken)?;
        let mut special_tokens: HashSet<String> = config.special_tokens.iter().cloned().collect();
        special_tokens.insert(config.unk_token.clone());
        Ok(Self {
            tokens,
            id_by_token,
            continuation_prefix: config.continuation_prefix.clone(),
            unk_token: config.unk_token.clone(),
            unk_id,
            special_tokens,
        })
    }

    /// Writes the vocabulary back out, one token per line.
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        for token in &self.tokens {
            out.write_all(token.as_bytes())?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.id_by_token.get(token).copied()
    }

    pub fn token_of(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> impl Iterator<Item = (TokenId, &str)> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (i as TokenId, t.as_str()))
    }

    pub fn continuation_prefix(&self) -> &str {
        &self.continuation_prefix
    }

    pub fn unk_token(&self) -> &str {
        &self.unk_token
    }

    pub fn unk_id(&self) -> TokenId {
        self.unk_id
    }

    pub fn is_special(&self, token: &str) -> bool {
        self.special_tokens.contains(token)
    }

    /// A continuation token starts with the prefix, is longer than it and is
    /// not special. With an empty prefix no token is a continuation token.
    pub fn is_continuation(&self, token: &str) -> bool {
        !self.continuation_prefix.is_empty()
            && token.len() > self.continuation_prefix.len()
            && token.starts_with(&self.continuation_prefix)
            && !self.is_special(token)
    }

    /// The matchable surface of `token` in the given position class, with any
    /// continuation prefix removed. Returns `None` for special tokens and for
    /// tokens of the other class.
    pub fn surface_in_class<'a>(&self, token: &'a str, class: PositionClass) -> Option<&'a str> {
        if self.is_special(token) {
            return None;
        }
        if self.continuation_prefix.is_empty() {
            return Some(token);
        }
        match (class, self.is_continuation(token)) {
            (PositionClass::Initial, false) => Some(token),
            (PositionClass::Continuation, true) => Some(&token[self.continuation_prefix.len()..]),
            _ => None,
        }
    }

    /// Id of the vocabulary entry matching subword `s` in the given position.
    pub fn lookup(&self, s: &str, class: PositionClass) -> Option<TokenId> {
        if s.is_empty() {
            return None;
        }
        let id = match class {
            PositionClass::Continuation if !self.continuation_prefix.is_empty() => {
                let mut key = String::with_capacity(self.continuation_prefix.len() + s.len());
                key.push_str(&self.continuation_prefix);
                key.push_str(s);
                self.id_of(&key)?
            }
            _ => self.id_of(s)?,
        };
        let token = &self.tokens[id as usize];
        self.surface_in_class(token, class).map(|_| id)
    }

    pub fn contains(&self, s: &str, class: PositionClass) -> bool {
        self.lookup(s, class).is_some()
    }
}
