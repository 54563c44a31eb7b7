//! Token-length statistics over repeatedly sampled tokenizations of a corpus.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bpe::BpeTokenizer;
use crate::maxmatch::{MaxMatchTokenizer, Token, TokenSequence};
use crate::rng::{derive_seed, SeededRng};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("could not build worker pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A tokenizer whose output can be measured.
pub trait Segmenter: Sync {
    fn segment_text(&self, text: &str, rate: f64, rng: &mut SeededRng) -> TokenSequence;

    fn count_words(&self, text: &str) -> usize;

    /// Length of `token` in characters, without any continuation prefix.
    /// `None` marks the unknown token.
    fn token_length(&self, token: &Token) -> Option<usize>;
}

impl Segmenter for MaxMatchTokenizer {
    fn segment_text(&self, text: &str, rate: f64, rng: &mut SeededRng) -> TokenSequence {
        self.tokenize_text_with(text, rate, rng)
    }

    fn count_words(&self, text: &str) -> usize {
        MaxMatchTokenizer::count_words(self, text)
    }

    fn token_length(&self, token: &Token) -> Option<usize> {
        let vocab = self.vocab();
        if token.id == Some(vocab.unk_id()) {
            return None;
        }
        let chars = token.surface.chars().count();
        if vocab.is_continuation(&token.surface) {
            Some(chars - vocab.continuation_prefix().chars().count())
        } else {
            Some(chars)
        }
    }
}

impl Segmenter for BpeTokenizer {
    fn segment_text(&self, text: &str, rate: f64, rng: &mut SeededRng) -> TokenSequence {
        self.tokenize_text_with(text, rate, rng)
    }

    fn count_words(&self, text: &str) -> usize {
        BpeTokenizer::count_words(self, text)
    }

    fn token_length(&self, token: &Token) -> Option<usize> {
        Some(token.surface.chars().count())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LengthHistogram {
    /// Token length in characters to occurrence count. Unknown tokens are not
    /// included.
    pub counts: BTreeMap<usize, u64>,
    pub trials: u64,
    /// All emitted tokens, unknown tokens included.
    pub total_tokens: u64,
    pub unk_count: u64,
    /// Words seen, summed over trials.
    pub words: u64,
}

impl LengthHistogram {
    pub fn add_sequence<S: Segmenter + ?Sized>(&mut self, segmenter: &S, seq: &TokenSequence) {
        for token in seq {
            self.total_tokens += 1;
            match segmenter.token_length(token) {
                Some(len) => *self.counts.entry(len).or_insert(0) += 1,
                None => self.unk_count += 1,
            }
        }
    }

    /// Element-wise sum. Trial counts add too.
    pub fn merge(&mut self, other: &LengthHistogram) {
        for (&len, &n) in &other.counts {
            *self.counts.entry(len).or_insert(0) += n;
        }
        self.trials += other.trials;
        self.total_tokens += other.total_tokens;
        self.unk_count += other.unk_count;
        self.words += other.words;
    }

    pub fn count(&self, len: usize) -> u64 {
        self.counts.get(&len).copied().unwrap_or(0)
    }

    /// Tokens counted in `counts`, i.e. excluding unknown tokens.
    pub fn measured_tokens(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Fraction of measured tokens with length `len`.
    pub fn share(&self, len: usize) -> f64 {
        let measured = self.measured_tokens();
        if measured == 0 {
            0.0
        } else {
            self.count(len) as f64 / measured as f64
        }
    }

    /// `length<TAB>count` rows in ascending length order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (len, n) in &self.counts {
            writeln!(out, "{len}\t{n}")?;
        }
        Ok(())
    }

    pub fn summary(&self) -> Result<Summary, StatsError> {
        if self.total_tokens == 0 {
            return Err(StatsError::EmptyHistogram);
        }
        let measured = self.measured_tokens();
        let (mean_token_length, mode_length) = if measured == 0 {
            (None, None)
        } else {
            let weighted: f64 = self.counts.iter().map(|(&l, &n)| l as f64 * n as f64).sum();
            // ties go to the shorter length
            let mode = self
                .counts
                .iter()
                .fold(None, |best: Option<(usize, u64)>, (&l, &n)| match best {
                    Some((_, bn)) if bn >= n => best,
                    _ => Some((l, n)),
                })
                .map(|(l, _)| l);
            (Some(weighted / measured as f64), mode)
        };
        let relative_frequency = self
            .counts
            .iter()
            .map(|(&l, &n)| (l, n as f64 / measured.max(1) as f64))
            .collect();
        Ok(Summary {
            trials: self.trials,
            words: self.words,
            total_tokens: self.total_tokens,
            unk_count: self.unk_count,
            mean_token_length,
            mean_tokens_per_word: if self.words == 0 {
                None
            } else {
                Some(self.total_tokens as f64 / self.words as f64)
            },
            unk_rate: self.unk_count as f64 / self.total_tokens as f64,
            mode_length,
            counts: self.counts.clone(),
            relative_frequency,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub trials: u64,
    pub words: u64,
    pub total_tokens: u64,
    pub unk_count: u64,
    pub mean_token_length: Option<f64>,
    pub mean_tokens_per_word: Option<f64>,
    pub unk_rate: f64,
    pub mode_length: Option<usize>,
    pub counts: BTreeMap<usize, u64>,
    pub relative_frequency: BTreeMap<usize, f64>,
}

/// Sampling parameters for [`length_histogram`].
#[derive(Clone, Copy, Debug)]
pub struct SamplingPlan {
    pub rate: f64,
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

/// Seed line `line` gets in a sampling pass seeded with `pass_seed`.
pub fn line_seed(pass_seed: u64, line: usize) -> u64 {
    derive_seed(pass_seed, line as u64)
}

/// One pass over the corpus with every line seeded from `trial_seed`.
pub fn trial_histogram<S, L>(segmenter: &S, lines: &[L], rate: f64, trial_seed: u64) -> LengthHistogram
where
    S: Segmenter + ?Sized,
    L: AsRef<str> + Sync,
{
    let mut hist = lines
        .par_iter()
        .enumerate()
        .fold(LengthHistogram::default, |mut hist, (i, line)| {
            let line = line.as_ref();
            let mut rng = SeededRng::new(line_seed(trial_seed, i));
            let seq = segmenter.segment_text(line, rate, &mut rng);
            hist.add_sequence(segmenter, &seq);
            hist.words += segmenter.count_words(line) as u64;
            hist
        })
        .reduce(LengthHistogram::default, |mut a, b| {
            a.merge(&b);
            a
        });
    hist.trials = 1;
    hist
}

/// Tokenizes the corpus `plan.trials` times, trial `t` seeded with
/// `derive_seed(plan.seed, t)`, and sums the histograms.
pub fn length_histogram<S, L>(segmenter: &S, lines: &[L], plan: SamplingPlan) -> Result<LengthHistogram, StatsError>
where
    S: Segmenter + ?Sized,
    L: AsRef<str> + Sync,
{
    if plan.trials == 0 {
        return Err(StatsError::NoTrials);
    }
    let run = || {
        let mut total = LengthHistogram::default();
        for t in 0..plan.trials {
            total.merge(&trial_histogram(segmenter, lines, plan.rate, derive_seed(plan.seed, t)));
        }
        total
    };
    match plan.workers {
        None => Ok(run()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| StatsError::ThreadPool(e.to_string()))?;
            Ok(pool.install(run))
        }
    }
}

/// Reads a newline-delimited corpus.
pub fn read_lines<R: BufRead>(reader: R) -> Result<Vec<String>, StatsError> {
    Ok(reader.lines().collect::<Result<_, _>>()?)
}
