//! `maxmatch` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or file errors.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use maxmatch_dropout::maxmatch::check_rate;
use maxmatch_dropout::stats::{self, SamplingPlan};
use maxmatch_dropout::{
    derive_seed, BpeTokenizer, LengthHistogram, MaxMatchTokenizer, MergeTable, PreTokenization,
    SeededRng, Summary, TokenSequence, TokenizerConfig, Vocabulary,
};

const CHUNK_LINES: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

fn data<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Data(format!("{context}: {e}"))
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "maxmatch", version, about = "Maximum matching tokenizer with MaxMatch-Dropout")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tokenize text, one output line per input line.
    Tokenize(TokenizeArgs),
    /// Write one sampled tokenization of a corpus per epoch.
    Sample(SampleArgs),
    /// Token-length histogram of repeatedly sampled tokenizations.
    Stats(StatsArgs),
    /// Token-length histograms of MaxMatch-Dropout and BPE-Dropout side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Maxmatch,
    Bpe,
}

#[derive(Debug, Args)]
struct VocabArgs {
    /// Continuation prefix marking word-internal vocabulary entries.
    #[arg(long, default_value = "##")]
    prefix: String,
    #[arg(long, default_value = "[UNK]")]
    unk: String,
    /// Words longer than this become the unknown token.
    #[arg(long, default_value_t = 100)]
    max_word_chars: usize,
    /// Also split punctuation characters into their own words.
    #[arg(long)]
    punctuation: bool,
    #[arg(long)]
    lowercase: bool,
}

#[derive(Debug, Args)]
struct SamplingArgs {
    /// Dropout rate in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: one per core). Output does not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct TokenizeArgs {
    #[arg(long)]
    vocab: PathBuf,
    /// Input file; standard input when absent.
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[command(flatten)]
    vocab_args: VocabArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    vocab: PathBuf,
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    epochs: u64,
    /// Output path prefix; epoch k goes to `<output>.epoch<k>`. Defaults to
    /// the input path.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[command(flatten)]
    vocab_args: VocabArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Corpus file; standard input when absent.
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "maxmatch")]
    method: Method,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    merges: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    trials: u64,
    /// Write the JSON summary here instead of standard error.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    vocab_args: VocabArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    input: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    merges: Option<PathBuf>,
    /// BPE dropout rate; `--dropout` when absent.
    #[arg(long)]
    bpe_dropout: Option<f64>,
    #[arg(long, default_value_t = 10)]
    trials: u64,
    /// Output prefix for `<out>.{maxmatch,bpe}.{tsv,json}`.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    vocab_args: VocabArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Tokenize(args) => cmd_tokenize(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn rate(value: f64) -> Result<f64> {
    check_rate(value).map_err(|e| CliError::Usage(e.to_string()))
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("worker pool: {e}")))
}

fn announce_seed(seed: u64) {
    eprintln!("seed: {seed}");
}

fn pre_tokenization(args: &VocabArgs) -> PreTokenization {
    if args.punctuation {
        PreTokenization::WhitespacePunctuation
    } else {
        PreTokenization::Whitespace
    }
}

fn load_tokenizer(path: &Path, args: &VocabArgs, dropout: f64) -> Result<MaxMatchTokenizer> {
    let config = TokenizerConfig {
        dropout,
        continuation_prefix: args.prefix.clone(),
        unk_token: args.unk.clone(),
        max_word_chars: args.max_word_chars,
        pre_tokenization: pre_tokenization(args),
        lowercase: args.lowercase,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let file = File::open(path).map_err(data(path.display()))?;
    let vocab = Vocabulary::load(BufReader::new(file), &config.vocab_config()).map_err(data(path.display()))?;
    MaxMatchTokenizer::new(vocab, config).map_err(|e| CliError::Usage(e.to_string()))
}

fn load_bpe(path: &Path, args: &VocabArgs, dropout: f64) -> Result<BpeTokenizer> {
    let file = File::open(path).map_err(data(path.display()))?;
    let table = MergeTable::load(BufReader::new(file)).map_err(data(path.display()))?;
    Ok(BpeTokenizer::new(table, dropout).with_pre_tokenization(pre_tokenization(args)))
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(File::open(p).map_err(data(p.display()))?)),
        None => Box::new(io::stdin().lock()),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(data(path.display()))?))
}

#[derive(Serialize)]
struct Record<'a> {
    tokens: Vec<&'a str>,
    ids: Vec<Option<u32>>,
    spans: Vec<(usize, usize)>,
}

fn render(seq: &TokenSequence, format: Format) -> String {
    match format {
        Format::Text => seq.surfaces().join(" "),
        Format::Jsonl => serde_json::to_string(&Record {
            tokens: seq.surfaces(),
            ids: seq.ids(),
            spans: seq.spans(),
        })
        .expect("records serialize"),
    }
}

/// Tokenizes every line of `input` with line `i` seeded by
/// `derive_seed(pass_seed, i)`, writing results in input order.
fn tokenize_stream(
    tokenizer: &MaxMatchTokenizer,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    pass_seed: u64,
    format: Format,
    pool: &rayon::ThreadPool,
) -> Result<()> {
    let mut chunk: Vec<String> = Vec::with_capacity(CHUNK_LINES);
    let mut base = 0usize;
    let mut lines = input.lines();
    loop {
        chunk.clear();
        for line in lines.by_ref().take(CHUNK_LINES) {
            chunk.push(line.map_err(data("input"))?);
        }
        if chunk.is_empty() {
            break;
        }
        let rendered: Vec<String> = pool.install(|| {
            chunk
                .par_iter()
                .enumerate()
                .map(|(i, line)| {
                    let mut rng = SeededRng::new(stats::line_seed(pass_seed, base + i));
                    render(&tokenizer.tokenize_text(line, &mut rng), format)
                })
                .collect()
        });
        for line in rendered {
            writeln!(out, "{line}").map_err(data("output"))?;
        }
        base += chunk.len();
    }
    out.flush().map_err(data("output"))
}

fn cmd_tokenize(args: TokenizeArgs) -> Result<()> {
    announce_seed(args.sampling.seed);
    let dropout = rate(args.sampling.dropout)?;
    let tokenizer = load_tokenizer(&args.vocab, &args.vocab_args, dropout)?;
    let pool = pool(args.sampling.workers)?;
    let mut input = open_input(args.input.as_deref())?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    tokenize_stream(&tokenizer, &mut *input, &mut out, args.sampling.seed, args.format, &pool)
}

pub fn epoch_path(prefix: &Path, epoch: u64) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(format!(".epoch{epoch}"));
    PathBuf::from(name)
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    announce_seed(args.sampling.seed);
    if args.epochs == 0 {
        return Err(CliError::Usage("--epochs must be at least 1".into()));
    }
    let dropout = rate(args.sampling.dropout)?;
    let tokenizer = load_tokenizer(&args.vocab, &args.vocab_args, dropout)?;
    let pool = pool(args.sampling.workers)?;
    let prefix = args.output.clone().unwrap_or_else(|| args.input.clone());
    for epoch in 1..=args.epochs {
        let mut input = open_input(Some(&args.input))?;
        let path = epoch_path(&prefix, epoch);
        let mut out = create(&path)?;
        let epoch_seed = derive_seed(args.sampling.seed, epoch);
        tokenize_stream(&tokenizer, &mut *input, &mut out, epoch_seed, args.format, &pool)?;
    }
    Ok(())
}

fn histogram<S: stats::Segmenter>(
    segmenter: &S,
    lines: &[String],
    rate: f64,
    trials: u64,
    sampling: &SamplingArgs,
) -> Result<(LengthHistogram, Summary)> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let plan = SamplingPlan {
        rate,
        trials,
        seed: sampling.seed,
        workers: sampling.workers,
    };
    let hist = stats::length_histogram(segmenter, lines, plan).map_err(data("stats"))?;
    let summary = hist.summary().map_err(data("stats"))?;
    Ok((hist, summary))
}

fn read_corpus(path: Option<&Path>) -> Result<Vec<String>> {
    stats::read_lines(open_input(path)?).map_err(data("input"))
}

fn to_json(summary: &Summary) -> String {
    serde_json::to_string(summary).expect("summaries serialize")
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    announce_seed(args.sampling.seed);
    let dropout = rate(args.sampling.dropout)?;
    let lines = read_corpus(args.input.as_deref())?;
    let (hist, summary) = match args.method {
        Method::Maxmatch => {
            let vocab = args
                .vocab
                .as_deref()
                .ok_or_else(|| CliError::Usage("--vocab is required for --method maxmatch".into()))?;
            let tokenizer = load_tokenizer(vocab, &args.vocab_args, dropout)?;
            histogram(&tokenizer, &lines, dropout, args.trials, &args.sampling)?
        }
        Method::Bpe => {
            let merges = args
                .merges
                .as_deref()
                .ok_or_else(|| CliError::Usage("missing merges: --merges is required for --method bpe".into()))?;
            let bpe = load_bpe(merges, &args.vocab_args, dropout)?;
            histogram(&bpe, &lines, dropout, args.trials, &args.sampling)?
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    hist.write_tsv(&mut out).map_err(data("output"))?;
    match &args.summary {
        Some(path) => {
            let mut f = create(path)?;
            writeln!(f, "{}", to_json(&summary)).map_err(data(path.display()))?;
        }
        None => eprintln!("{}", to_json(&summary)),
    }
    Ok(())
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

#[derive(Serialize)]
struct Comparison<'a> {
    maxmatch: &'a Summary,
    bpe: &'a Summary,
    length1_share: LengthOneShare,
}

#[derive(Serialize)]
struct LengthOneShare {
    maxmatch: f64,
    bpe: f64,
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    announce_seed(args.sampling.seed);
    let q = rate(args.sampling.dropout)?;
    let p = rate(args.bpe_dropout.unwrap_or(args.sampling.dropout))?;
    let merges = args
        .merges
        .as_deref()
        .ok_or_else(|| CliError::Usage("missing merges: --merges is required for compare".into()))?;
    let tokenizer = load_tokenizer(&args.vocab, &args.vocab_args, q)?;
    let bpe = load_bpe(merges, &args.vocab_args, p)?;
    let lines = read_corpus(Some(&args.input))?;

    let (mm_hist, mm_summary) = histogram(&tokenizer, &lines, q, args.trials, &args.sampling)?;
    let (bpe_hist, bpe_summary) = histogram(&bpe, &lines, p, args.trials, &args.sampling)?;

    for (name, hist, summary) in [("maxmatch", &mm_hist, &mm_summary), ("bpe", &bpe_hist, &bpe_summary)] {
        let tsv = suffixed(&args.out, &format!(".{name}.tsv"));
        let mut f = create(&tsv)?;
        hist.write_tsv(&mut f).map_err(data(tsv.display()))?;
        let json = suffixed(&args.out, &format!(".{name}.json"));
        let mut f = create(&json)?;
        writeln!(f, "{}", to_json(summary)).map_err(data(json.display()))?;
    }
    let comparison = Comparison {
        maxmatch: &mm_summary,
        bpe: &bpe_summary,
        length1_share: LengthOneShare {
            maxmatch: mm_hist.share(1),
            bpe: bpe_hist.share(1),
        },
    };
    println!("{}", serde_json::to_string(&comparison).expect("comparison serializes"));
    Ok(())
}
