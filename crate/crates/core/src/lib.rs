//! Subword tokenization by greedy maximum matching (WordPiece style) with
//! MaxMatch-Dropout subword regularization, a BPE-Dropout baseline, and
//! token-length statistics for comparing the two.
//!
//! ```
//! use maxmatch_dropout::{MaxMatchTokenizer, SeededRng, TokenizerConfig};
//!
//! let config = TokenizerConfig::default().with_prefix("").with_dropout(0.1);
//! let tokenizer = MaxMatchTokenizer::from_tokens(["a", "b", "c", "d", "abc", "bcd"], config)?;
//! assert_eq!(tokenizer.tokenize_text_deterministic("abcd").surfaces(), ["abc", "d"]);
//!
//! let mut rng = SeededRng::new(0);
//! let sampled = tokenizer.tokenize_text("abcd", &mut rng);
//! assert!(!sampled.is_empty());
//! # Ok::<(), maxmatch_dropout::Error>(())
//! ```

pub mod bpe;
pub mod maxmatch;
pub mod pretokenize;
pub mod rng;
pub mod stats;
pub mod trie;
pub mod vocab;

pub use bpe::{BpeTokenizer, MergeTable, MergesError};
pub use maxmatch::{ConfigError, MaxMatchTokenizer, Token, TokenSequence, TokenizeError, TokenizerConfig};
pub use pretokenize::PreTokenization;
pub use rng::{derive_seed, AlwaysKeep, RandomSource, ScriptedSource, SeededRng};
pub use stats::{LengthHistogram, SamplingPlan, Segmenter, StatsError, Summary};
pub use trie::{MatchResult, Trie};
pub use vocab::{PositionClass, TokenId, VocabConfig, VocabError, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Merges(#[from] MergesError),
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}
