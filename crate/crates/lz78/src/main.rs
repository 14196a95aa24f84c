//! Command-line front end: train / loss / oracle / sample / codebook-sim /
//! generate / classify. Machine-readable reports go to stdout (JSON for
//! single runs, CSV for tables); human summaries go to stderr. Exit code 2
//! for usage errors, 1 for runtime errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use lz78::classify::{self, LabeledCorpus};
use lz78::codebook::{self, TargetKind};
use lz78::generate::{generate, GenConfig};
use lz78::oracle;
use lz78::sequence::{ingest_text, Alphabet, Sequence};
use lz78::source::{bernoulli_source_check, Lz78Source};
use lz78::spa::{Lz78Spa, PriorSpec};
use lz78::storage;
use lz78::tree::{codelength_proxy, parse};

#[derive(Parser)]
#[command(
    name = "lz78",
    version,
    about = "LZ78 sequential probability assignment toolkit"
)]
struct Cli {
    /// PRNG seed for anything stochastic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// How input files are turned into symbols (default: byte; `loss` and
    /// `classify predict` infer the mode from the model when unset).
    #[arg(long, global = true, value_enum)]
    alphabet: Option<AlphabetMode>,

    /// Dirichlet prior parameter (default 0.5). On `loss`, overriding this
    /// re-scores the loaded tree under a different prior.
    #[arg(long, global = true)]
    gamma: Option<f64>,

    /// Output path for commands that produce a file (defaults to stdout).
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlphabetMode {
    /// 0/1 symbols; accepts ASCII '0'/'1' (whitespace ignored) or raw bytes.
    Binary,
    /// Raw bytes, alphabet size 256 (or 2^B with --quantize-bits B).
    Byte,
    /// UTF-8 text filtered through the fixed character map.
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Train an LZ78 SPA on a file and save the model.
    Train(TrainArgs),
    /// Log loss of a file against a trained model (frozen evaluation).
    Loss(LossArgs),
    /// Optimal Markov / finite-state losses of a file (CSV table).
    Oracle(OracleArgs),
    /// Sample the LZ78 probability source.
    Sample(SampleArgs),
    /// Codebook-compression simulation (CSV table).
    CodebookSim(CodebookArgs),
    /// Generate symbols from a trained model.
    Generate(GenerateArgs),
    /// Train or apply a per-class classifier.
    #[command(subcommand)]
    Classify(ClassifyCommand),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    /// Where to write the model.
    #[arg(long)]
    out: PathBuf,
    /// Quantize 8-bit bytes down to this many high bits (byte mode only).
    #[arg(long)]
    quantize_bits: Option<u8>,
}

#[derive(Args)]
struct LossArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Back-shift window for missing children during the frozen walk.
    #[arg(long, default_value_t = classify::DEFAULT_INFERENCE_BACKSHIFT)]
    backshift: usize,
    #[arg(long)]
    quantize_bits: Option<u8>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    /// Largest Markov order to evaluate.
    #[arg(long, default_value_t = 3)]
    kmax: usize,
    /// Also brute-force the optimal M-state machine loss.
    #[arg(long = "bruteforce-M")]
    bruteforce_m: Option<u32>,
    #[arg(long)]
    quantize_bits: Option<u8>,
}

#[derive(Args)]
struct SampleArgs {
    /// Prior: "dirichlet:G", "bernoulli-half", or "uniform".
    #[arg(long)]
    prior: String,
    #[arg(long)]
    length: usize,
    /// Alphabet size of the source (binary-only priors require 2).
    #[arg(long, default_value_t = 2)]
    alphabet_size: u32,
    /// Sampling construction: per-node mixture parameters, or direct draws
    /// from the sequential assignment.
    #[arg(long, value_enum, default_value_t = SampleMethod::Mixture)]
    method: SampleMethod,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleMethod {
    Mixture,
    Spa,
}

#[derive(Args)]
struct CodebookArgs {
    /// Target sequence family: "zeros", "blz", or "ber:P".
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 30)]
    kmax: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Write the CSV here (defaults to stdout).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = codebook::DEFAULT_MAX_DRAWS)]
    max_draws: u64,
    /// Prior parameter for the codeword source.
    #[arg(long, default_value_t = 0.1)]
    codebook_gamma: f64,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 5)]
    topk: u32,
    #[arg(long, default_value_t = 0.1)]
    temperature: f64,
    /// Back-shift window.
    #[arg(long, default_value_t = 500)]
    backshift: usize,
    /// Seed the cursor by walking this text before generating.
    #[arg(long)]
    seed_text: Option<String>,
}

#[derive(Subcommand)]
enum ClassifyCommand {
    /// Train one model per label; --corpus holds one subdirectory per label.
    Train(ClassifyTrainArgs),
    /// Classify a file with a trained classifier.
    Predict(ClassifyPredictArgs),
}

#[derive(Args)]
struct ClassifyTrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    epochs: u32,
    #[arg(long)]
    quantize_bits: Option<u8>,
}

#[derive(Args)]
struct ClassifyPredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = classify::DEFAULT_INFERENCE_BACKSHIFT)]
    backshift: usize,
    #[arg(long)]
    quantize_bits: Option<u8>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Train(args) => cmd_train(&cli, args),
        Command::Loss(args) => cmd_loss(&cli, args),
        Command::Oracle(args) => cmd_oracle(&cli, args),
        Command::Sample(args) => cmd_sample(&cli, args),
        Command::CodebookSim(args) => cmd_codebook(&cli, args),
        Command::Generate(args) => cmd_generate(&cli, args),
        Command::Classify(ClassifyCommand::Train(args)) => cmd_classify_train(&cli, args),
        Command::Classify(ClassifyCommand::Predict(args)) => cmd_classify_predict(&cli, args),
    }
}

/// Reads a file into a symbol sequence per the alphabet mode.
fn read_sequence(
    path: &Path,
    mode: AlphabetMode,
    quantize_bits: Option<u8>,
) -> anyhow::Result<Sequence> {
    let data = fs::read(path)?;
    match mode {
        AlphabetMode::Binary => {
            let ascii = data
                .iter()
                .all(|&b| b == b'0' || b == b'1' || b.is_ascii_whitespace());
            let symbols: Vec<u32> = if ascii {
                data.iter()
                    .filter(|b| !b.is_ascii_whitespace())
                    .map(|&b| u32::from(b == b'1'))
                    .collect()
            } else if data.iter().all(|&b| b <= 1) {
                data.iter().map(|&b| b as u32).collect()
            } else {
                anyhow::bail!(
                    "{} is not binary: expected ASCII 0/1 or raw 0x00/0x01 bytes",
                    path.display()
                );
            };
            Ok(Sequence::new(symbols, Alphabet::binary())?)
        }
        AlphabetMode::Byte => match quantize_bits {
            None => Ok(Sequence::from_bytes(&data)),
            Some(bits) => {
                anyhow::ensure!((1..=8).contains(&bits), "--quantize-bits must be in 1..=8");
                let shift = 8 - bits;
                let symbols = data.iter().map(|&b| (b >> shift) as u32).collect();
                Ok(Sequence::new(symbols, Alphabet::new(1 << bits)?)?)
            }
        },
        AlphabetMode::Text => {
            let text = String::from_utf8_lossy(&data);
            Ok(ingest_text(&text, &Alphabet::text())?)
        }
    }
}

/// Infers the ingestion mode for a model trained by this CLI, from its
/// alphabet size; a --quantize-bits override wins.
fn mode_for_alphabet(size: u32, quantize_bits: Option<u8>) -> (AlphabetMode, Option<u8>) {
    if let Some(b) = quantize_bits {
        return (AlphabetMode::Byte, Some(b));
    }
    match size {
        2 => (AlphabetMode::Binary, None),
        256 => (AlphabetMode::Byte, None),
        75 => (AlphabetMode::Text, None),
        s if s.is_power_of_two() && s < 256 => (AlphabetMode::Byte, Some(s.trailing_zeros() as u8)),
        _ => (AlphabetMode::Byte, None),
    }
}

fn write_symbols(seq: &Sequence, out: Option<&PathBuf>) -> anyhow::Result<()> {
    let bytes: Vec<u8> = if seq.alphabet().has_charmap() {
        seq.render()?.into_bytes()
    } else if seq.alphabet().size() == 2 {
        seq.symbols().iter().map(|&s| b'0' + s as u8).collect()
    } else {
        seq.symbols().iter().map(|&s| s as u8).collect()
    };
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn emit_table(csv: String, out: Option<&PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

const DEFAULT_GAMMA: f64 = 0.5;

fn parse_prior(spec: &str, gamma_flag: f64) -> anyhow::Result<PriorSpec> {
    if spec == "bernoulli-half" {
        return Ok(PriorSpec::BernoulliHalf);
    }
    if spec == "uniform" {
        return Ok(PriorSpec::uniform_binary());
    }
    if let Some(g) = spec.strip_prefix("dirichlet:") {
        return Ok(PriorSpec::dirichlet(g.parse()?));
    }
    if spec == "dirichlet" {
        return Ok(PriorSpec::dirichlet(gamma_flag));
    }
    anyhow::bail!("unknown prior {spec:?}; expected dirichlet[:G], bernoulli-half, or uniform")
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> anyhow::Result<()> {
    let mode = cli.alphabet.unwrap_or(AlphabetMode::Byte);
    let x = read_sequence(&args.input, mode, args.quantize_bits)?;
    let gamma = cli.gamma.unwrap_or(DEFAULT_GAMMA);
    let mut spa = Lz78Spa::new(x.alphabet().size(), PriorSpec::dirichlet(gamma))?;
    let total_bits = spa.train_sequence(&x)?;
    let (_, summary) = parse(&x)?;
    fs::write(&args.out, storage::save(&spa)?)?;
    let n = x.len().max(1) as f64;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "input": args.input.display().to_string(),
            "model": args.out.display().to_string(),
            "n": x.len(),
            "alphabet_size": x.alphabet().size(),
            "gamma": gamma,
            "total_bits": total_bits,
            "bits_per_symbol": total_bits / n,
            "phrase_count": summary.phrase_count,
            "codelength_proxy_per_symbol": codelength_proxy(&summary) / n,
        }))?
    );
    eprintln!(
        "trained on {} symbols: {:.4} bits/symbol, C = {}",
        x.len(),
        total_bits / n,
        summary.phrase_count
    );
    Ok(())
}

fn cmd_loss(cli: &Cli, args: &LossArgs) -> anyhow::Result<()> {
    let mut model = storage::load(&fs::read(&args.model)?)?;
    if let Some(gamma) = cli.gamma {
        let tree = model.tree().clone();
        model = Lz78Spa::from_tree(tree, PriorSpec::dirichlet(gamma))?;
    }
    model.freeze();
    let (inferred, qb) = mode_for_alphabet(model.alphabet_size(), args.quantize_bits);
    let mode = cli.alphabet.unwrap_or(inferred);
    let x = read_sequence(&args.input, mode, qb)?;
    anyhow::ensure!(
        x.alphabet().size() == model.alphabet_size(),
        "input alphabet ({}) does not match the model ({})",
        x.alphabet().size(),
        model.alphabet_size()
    );
    let total_bits = model.frozen_loss(&x, args.backshift)?;
    let (_, summary) = parse(&x)?;
    let n = x.len().max(1) as f64;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "model": args.model.display().to_string(),
            "input": args.input.display().to_string(),
            "n": x.len(),
            "total_bits": total_bits,
            "bits_per_symbol": total_bits / n,
            "phrase_count": summary.phrase_count,
            "codelength_proxy_per_symbol": codelength_proxy(&summary) / n,
        }))?
    );
    eprintln!(
        "{:.2} bits total over {} symbols ({:.4} bits/symbol)",
        total_bits,
        x.len(),
        total_bits / n
    );
    Ok(())
}

fn cmd_oracle(cli: &Cli, args: &OracleArgs) -> anyhow::Result<()> {
    let mode = cli.alphabet.unwrap_or(AlphabetMode::Byte);
    let x = read_sequence(&args.input, mode, args.quantize_bits)?;
    let report = oracle::oracle_report(&x, args.kmax, args.bruteforce_m)?;
    let mut csv = String::from("quantity,k,bits_per_symbol\n");
    for (k, mu) in report.mu.iter().enumerate() {
        csv.push_str(&format!("mu,{k},{mu}\n"));
    }
    for (k, h) in report.conditional_entropy_circular.iter().enumerate() {
        csv.push_str(&format!("conditional_entropy_circular,{k},{h}\n"));
    }
    if let Some((m, lambda)) = report.lambda_bruteforce {
        csv.push_str(&format!("lambda_bruteforce,{m},{lambda}\n"));
    }
    emit_table(csv, cli.output.as_ref())?;
    eprintln!(
        "n = {}, mu_0 = {:.4}, mu_{} = {:.4}",
        report.n, report.mu[0], args.kmax, report.mu[args.kmax]
    );
    Ok(())
}

fn cmd_sample(cli: &Cli, args: &SampleArgs) -> anyhow::Result<()> {
    let prior = parse_prior(&args.prior, cli.gamma.unwrap_or(DEFAULT_GAMMA))?;
    let mut source = Lz78Source::new(args.alphabet_size, prior.clone(), cli.seed)?;
    let x = match args.method {
        SampleMethod::Mixture => source.sample_mixture(args.length)?,
        SampleMethod::Spa => source.sample_spa(args.length)?,
    };
    write_symbols(&x, cli.output.as_ref())?;
    let report = json!({
        "prior": args.prior,
        "length": args.length,
        "seed": cli.seed,
        "phrase_count": source.tree().phrase_count(),
        "self_loss_bits": source.self_loss_bits(),
        "normalized_self_loss": source.normalized_self_loss(),
        "bernoulli_structure_ok": matches!(prior, PriorSpec::BernoulliHalf)
            .then(|| bernoulli_source_check(&x).is_ok()),
    });
    eprintln!("{report}");
    Ok(())
}

fn cmd_codebook(cli: &Cli, args: &CodebookArgs) -> anyhow::Result<()> {
    let kind = if args.target == "zeros" {
        TargetKind::AllZeros
    } else if args.target == "blz" {
        TargetKind::BernoulliLz78
    } else if let Some(p) = args.target.strip_prefix("ber:") {
        TargetKind::IidBernoulli(p.parse()?)
    } else {
        anyhow::bail!(
            "unknown target {:?}; expected zeros, blz, or ber:P",
            args.target
        )
    };
    let prior = PriorSpec::dirichlet(args.codebook_gamma);
    let rows = codebook::run_experiment(
        kind,
        args.kmax,
        args.trials,
        &prior,
        cli.seed,
        args.max_draws,
    )?;
    let mut csv = String::from("k,median,q25,q75,censored_count\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.k, row.median, row.q25, row.q75, row.censored
        ));
    }
    emit_table(csv, args.csv.as_ref().or(cli.output.as_ref()))?;
    eprintln!(
        "codebook simulation: target {}, k <= {}, {} trials",
        args.target, args.kmax, args.trials
    );
    Ok(())
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> anyhow::Result<()> {
    let mut model = storage::load(&fs::read(&args.model)?)?;
    model.freeze();
    let (mode, _) = mode_for_alphabet(model.alphabet_size(), None);
    let seed_text = match (&args.seed_text, mode) {
        (None, _) => None,
        (Some(text), AlphabetMode::Text) => Some(ingest_text(text, &Alphabet::text())?),
        (Some(text), AlphabetMode::Binary) => {
            let symbols = text
                .chars()
                .filter(|c| *c == '0' || *c == '1')
                .map(|c| u32::from(c == '1'))
                .collect();
            Some(Sequence::new(symbols, Alphabet::binary())?)
        }
        (Some(text), AlphabetMode::Byte) => Some(Sequence::from_bytes(text.as_bytes())),
    };
    let cfg = GenConfig {
        len: args.length,
        top_k: args.topk.min(model.alphabet_size()),
        temperature: args.temperature,
        backshift: args.backshift,
        seed_text,
    };
    let out = generate(&model, &cfg, cli.seed)?;
    if out.degenerate_model {
        eprintln!("warning: model has no phrases; generation is uniform sampling");
    }
    let rendered = if mode == AlphabetMode::Text {
        Sequence::new(out.sequence.symbols().to_vec(), Alphabet::text())?
    } else {
        out.sequence.clone()
    };
    write_symbols(&rendered, cli.output.as_ref())?;
    eprintln!(
        "generated {} symbols, {:.4} bits/symbol under the model",
        out.sequence.len(),
        out.log_loss_bits / out.sequence.len().max(1) as f64
    );
    Ok(())
}

fn cmd_classify_train(cli: &Cli, args: &ClassifyTrainArgs) -> anyhow::Result<()> {
    let mut labels: Vec<PathBuf> = fs::read_dir(&args.corpus)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    labels.sort();
    anyhow::ensure!(!labels.is_empty(), "corpus has no label subdirectories");
    let mut samples = Vec::new();
    for (label, dir) in labels.iter().enumerate() {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        let mode = cli.alphabet.unwrap_or(AlphabetMode::Byte);
        for file in files {
            samples.push((read_sequence(&file, mode, args.quantize_bits)?, label));
        }
    }
    let corpus = LabeledCorpus::new(samples, labels.len())?;
    let gamma = cli.gamma.unwrap_or(DEFAULT_GAMMA);
    let clf = classify::train(&corpus, args.epochs, gamma)?;
    fs::write(&args.out, storage::save_classifier(&clf)?)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "model": args.out.display().to_string(),
            "classes": labels
                .iter()
                .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
                .collect::<Vec<_>>(),
            "epochs": args.epochs,
            "gamma": gamma,
            "samples": corpus.samples().len(),
        }))?
    );
    Ok(())
}

fn cmd_classify_predict(cli: &Cli, args: &ClassifyPredictArgs) -> anyhow::Result<()> {
    let mut clf = storage::load_classifier(&fs::read(&args.model)?)?;
    clf.set_backshift(args.backshift);
    let size = clf.models()[0].alphabet_size();
    let (inferred, qb) = mode_for_alphabet(size, args.quantize_bits);
    let mode = cli.alphabet.unwrap_or(inferred);
    let x = read_sequence(&args.input, mode, qb)?;
    anyhow::ensure!(
        x.alphabet().size() == size,
        "input alphabet ({}) does not match the classifier ({size})",
        x.alphabet().size()
    );
    let (label, losses) = clf.predict(&x)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "input": args.input.display().to_string(),
            "label": label,
            "losses_bits": losses,
        }))?
    );
    eprintln!("label {label}");
    Ok(())
}
