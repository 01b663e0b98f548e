//! Command-line interface: `simulate`, `parse`, `estimate`, `exact`,
//! `audit`, and `experiment converge|blocks|wz`.
//!
//! Exit codes: 0 success, 2 configuration/input error, 3 support violation,
//! 4 enumeration budget exceeded, 1 other failures.

use crate::analytics;
use crate::audit::{self, KbOptions};
use crate::error::{Error, Result};
use crate::estimators::{estimate_all, Lz78Norm};
use crate::harness::{self, ExperimentConfig};
use crate::parse::{block_parse, classify_blocks, lz78_parse, threshold_parse, zm_parse};
use crate::rng::RngStream;
use crate::seq::{read_sequence, write_sequence, Alphabet, Sequence};
use crate::sources::{CylinderMeasure, Model, DEFAULT_ENUM_BUDGET};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "crossent",
    version,
    about = "Cross-entropy estimation between symbol sequences via cross parsing"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a sequence from a model and write it as text.
    Simulate(SimulateArgs),
    /// Run one of the sequential parsers and emit JSON.
    Parse(ParseArgs),
    /// Cross-parsing and phrase-count estimates for an (x, y) pair.
    Estimate(EstimateArgs),
    /// Exact (or truncated) entropy references for a model pair.
    Exact(ExactArgs),
    /// Decoupling-condition audit for one model.
    Audit(AuditArgs),
    /// Seeded experiment runs with CSV/JSON outputs.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Sequence length.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stream id within the seed.
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// How to resolve the alphabet of bare sequence files.
#[derive(Args)]
struct AlphabetArgs {
    /// Alphabet glyphs, e.g. "012".
    #[arg(long)]
    glyphs: Option<String>,
    /// Alphabet size for comma-separated index files.
    #[arg(long)]
    size: Option<usize>,
    /// Take the alphabet from a model JSON file.
    #[arg(long)]
    model: Option<PathBuf>,
}

impl AlphabetArgs {
    fn resolve(&self) -> Result<Alphabet> {
        if let Some(g) = &self.glyphs {
            return Alphabet::with_glyphs(g);
        }
        if let Some(s) = self.size {
            return Alphabet::indexed(s);
        }
        if let Some(path) = &self.model {
            return Ok(Model::load(path)?.alphabet().clone());
        }
        Err(Error::Config(
            "alphabet: supply --glyphs, --size, or --model".into(),
        ))
    }
}

#[derive(Args)]
struct ParseArgs {
    #[command(subcommand)]
    parser: ParseCommand,
}

#[derive(Subcommand)]
enum ParseCommand {
    /// Greedy cross parsing of y against the substrings of x.
    Zm {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[command(flatten)]
        alphabet: AlphabetArgs,
    },
    /// Incremental self-parsing of y.
    Lz78 {
        #[arg(long)]
        y: PathBuf,
        #[command(flatten)]
        alphabet: AlphabetArgs,
    },
    /// Shortest-prefix parsing under a probability threshold.
    Threshold {
        #[arg(long)]
        y: PathBuf,
        /// Model supplying the cylinder probabilities.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        theta: f64,
    },
    /// Block-and-buffer parsing with theta = N^(-1-epsilon).
    Block {
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long)]
        alpha: f64,
    },
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[command(flatten)]
    alphabet: AlphabetArgs,
    #[arg(long, value_enum, default_value_t = NormArg::PhraseLog)]
    lz78_norm: NormArg,
    /// Emit JSON instead of plain lines.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    /// c ln c / N.
    PhraseLog,
    /// c (ln c + ln #alphabet) / N.
    PhraseLogPlusAlphabet,
}

impl From<NormArg> for Lz78Norm {
    fn from(v: NormArg) -> Lz78Norm {
        match v {
            NormArg::PhraseLog => Lz78Norm::PhraseLog,
            NormArg::PhraseLogPlusAlphabet => Lz78Norm::PhraseLogPlusAlphabet,
        }
    }
}

#[derive(Args)]
struct ExactArgs {
    /// Reference model P.
    #[arg(long)]
    p: PathBuf,
    /// Source model Q.
    #[arg(long)]
    q: PathBuf,
    /// Truncation level; exact closed forms when absent and both models are
    /// Markov.
    #[arg(long)]
    trunc: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ENUM_BUDGET)]
    budget: u64,
    /// Also print entropies in bits (display only; JSON stays in nats).
    #[arg(long)]
    bits: bool,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 8)]
    nmax: usize,
    #[arg(long, default_value_t = 8)]
    mmax: usize,
    #[arg(long, default_value_t = DEFAULT_ENUM_BUDGET)]
    budget: u64,
    /// Word (in the model's text format) for the waiting-time tail check.
    #[arg(long)]
    kb: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0.0)]
    k_ell: f64,
    #[arg(long, default_value_t = 0.0)]
    tau_ell: f64,
    /// Comma-separated r grid for the tail check.
    #[arg(long, value_delimiter = ',')]
    r_grid: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(subcommand)]
    kind: ExperimentKind,
}

#[derive(Subcommand)]
enum ExperimentKind {
    /// Estimator convergence sweep over the N grid.
    Converge(RunArgs),
    /// Good/bad block diagnostics.
    Blocks(RunArgs),
    /// Waiting-time estimates over an ell grid.
    Wz(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON; every field can be overridden by flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p_model: Option<PathBuf>,
    #[arg(long)]
    q_model: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    ell_grid: Option<Vec<usize>>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_enum)]
    lz78_norm: Option<NormArg>,
    /// Record wall-clock times (breaks byte-for-byte reproducibility).
    #[arg(long)]
    record_timing: bool,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

impl RunArgs {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig {
                p_model: PathBuf::new(),
                q_model: PathBuf::new(),
                n_grid: Vec::new(),
                trials: 16,
                base_seed: 0,
                epsilon: 0.1,
                alpha: None,
                ell_grid: Vec::new(),
                horizon: None,
                lz78_norm: Lz78Norm::PhraseLog,
                record_timing: false,
                workers: None,
            },
        };
        if let Some(p) = &self.p_model {
            cfg.p_model = p.clone();
        }
        if let Some(q) = &self.q_model {
            cfg.q_model = q.clone();
        }
        if let Some(g) = &self.n_grid {
            cfg.n_grid = g.clone();
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = Some(a);
        }
        if let Some(g) = &self.ell_grid {
            cfg.ell_grid = g.clone();
        }
        if let Some(h) = self.horizon {
            cfg.horizon = Some(h);
        }
        if let Some(n) = self.lz78_norm {
            cfg.lz78_norm = n.into();
        }
        if self.record_timing {
            cfg.record_timing = true;
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        if cfg.p_model.as_os_str().is_empty() || cfg.q_model.as_os_str().is_empty() {
            return Err(Error::Config(
                "p_model/q_model: supply via --config or flags".into(),
            ));
        }
        Ok(cfg)
    }
}

/// Parses arguments, dispatches, and maps errors to exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Parse(args) => run_parse(args),
        Command::Estimate(args) => estimate(args),
        Command::Exact(args) => exact(args),
        Command::Audit(args) => run_audit(args),
        Command::Experiment(args) => experiment(args),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let model = Model::load(&args.model)?;
    let mut rng = RngStream::new(args.seed, args.stream);
    let seq = model.sample(args.n, &mut rng);
    match args.out {
        Some(path) => write_sequence(&seq, &path)?,
        None => println!("{seq}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct ParseOutput {
    c: usize,
    boundaries: Vec<usize>,
    flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blocks: Option<Vec<BlockOutput>>,
}

#[derive(Serialize)]
struct BlockOutput {
    span: [usize; 2],
    word_ends: Vec<usize>,
    buffer: [usize; 2],
    good: bool,
}

fn run_parse(args: ParseArgs) -> Result<()> {
    let output = match args.parser {
        ParseCommand::Zm { x, y, alphabet } => {
            let ab = alphabet.resolve()?;
            let x = read_sequence(&x, &ab)?;
            let y = read_sequence(&y, &ab)?;
            let parse = zm_parse(&x, &y)?;
            let mut flags: Vec<String> = parse
                .singleton_flags()
                .iter()
                .enumerate()
                .filter(|(_, s)| **s)
                .map(|(j, _)| format!("singleton:{j}"))
                .collect();
            if parse.final_exhausted() {
                flags.push("final-exhausted".into());
            }
            ParseOutput {
                c: parse.word_count(),
                boundaries: parse.boundaries().to_vec(),
                flags,
                blocks: None,
            }
        }
        ParseCommand::Lz78 { y, alphabet } => {
            let ab = alphabet.resolve()?;
            let y = read_sequence(&y, &ab)?;
            let parse = lz78_parse(&y)?;
            let flags = if parse.final_incomplete() {
                vec!["final-incomplete".to_string()]
            } else {
                vec![]
            };
            ParseOutput {
                c: parse.phrase_count(),
                boundaries: parse.boundaries().to_vec(),
                flags,
                blocks: None,
            }
        }
        ParseCommand::Threshold { y, model, theta } => {
            let model = Model::load(&model)?;
            let y = read_sequence(&y, model.alphabet())?;
            let parse = threshold_parse(&y, &model, theta)?;
            let flags = if parse.last_word_complete() {
                vec![]
            } else {
                vec!["last-word-incomplete".to_string()]
            };
            ParseOutput {
                c: parse.word_count(),
                boundaries: parse.boundaries().to_vec(),
                flags,
                blocks: None,
            }
        }
        ParseCommand::Block {
            y,
            model,
            epsilon,
            alpha,
        } => {
            let model = Model::load(&model)?;
            let y = read_sequence(&y, model.alphabet())?;
            let bp = block_parse(&y, &model, epsilon, alpha)?;
            let (good, _) = classify_blocks(&bp, &y);
            let good_set: std::collections::HashSet<usize> = good.into_iter().collect();
            let blocks: Vec<BlockOutput> = bp
                .blocks()
                .iter()
                .enumerate()
                .map(|(s, b)| BlockOutput {
                    span: [b.span().start, b.span().end],
                    word_ends: b.words(&y).scan(b.span().start, |pos, w| {
                        *pos += w.len();
                        Some(*pos)
                    }).collect(),
                    buffer: [b.buffer_range().start, b.buffer_range().end],
                    good: good_set.contains(&s),
                })
                .collect();
            let boundaries: Vec<usize> = blocks.iter().flat_map(|b| b.word_ends.clone()).collect();
            ParseOutput {
                c: bp.total_word_count(),
                boundaries,
                flags: vec![format!("block_len:{}", bp.block_len())],
                blocks: Some(blocks),
            }
        }
    };
    println!("{}", serde_json::to_string_pretty(&output)?);
    Ok(())
}

#[derive(Serialize)]
struct EstimateOutput {
    n: usize,
    c_n: usize,
    q_hat: f64,
    lz78_phrases: usize,
    h_hat: f64,
    h_r_hat: f64,
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let ab = args.alphabet.resolve()?;
    let x = read_sequence(&args.x, &ab)?;
    let y = read_sequence(&args.y, &ab)?;
    let record = estimate_all(&x, &y, args.lz78_norm.into())?;
    let out = EstimateOutput {
        n: record.n,
        c_n: record.c_n,
        q_hat: record.q_hat,
        lz78_phrases: record.lz78_phrases,
        h_hat: record.h_hat,
        h_r_hat: record.h_r_hat,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("n {}", out.n);
        println!("c_n {}", out.c_n);
        println!("q_hat {}", out.q_hat);
        println!("lz78_phrases {}", out.lz78_phrases);
        println!("h_hat {}", out.h_hat);
        println!("h_r_hat {}", out.h_r_hat);
    }
    Ok(())
}

fn exact(args: ExactArgs) -> Result<()> {
    let p = Model::load(&args.p)?;
    let q = Model::load(&args.q)?;
    let report = analytics::entropy_report(&q, &p, args.trunc, args.budget)?;
    if args.bits {
        let ln2 = 2.0f64.ln();
        eprintln!(
            "bits: h={} h_cross={} h_rel={}",
            report.h / ln2,
            report.h_cross / ln2,
            report.h_rel / ln2
        );
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn run_audit(args: AuditArgs) -> Result<()> {
    let model = Model::load(&args.model)?;
    let kb_word;
    let kb = match &args.kb {
        Some(text) => {
            kb_word = Sequence::from_text(text, model.alphabet())?;
            let r_grid = args.r_grid.clone().unwrap_or_else(|| {
                (0..10).map(|i| 1usize << (2 * i)).collect()
            });
            Some((
                &kb_word,
                KbOptions {
                    r_grid,
                    k_ell: args.k_ell,
                    tau_ell: args.tau_ell,
                    trials: args.trials,
                    seed: args.seed,
                },
            ))
        }
        None => None,
    };
    let report = audit::audit_model(&model, args.nmax, args.mmax, args.budget, kb)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    match args.kind {
        ExperimentKind::Converge(run) => {
            let cfg = run.build()?;
            let out = harness::run_convergence(&cfg)?;
            let csv_path = run.out_csv.unwrap_or_else(|| PathBuf::from("converge.csv"));
            let json_path = run
                .out_json
                .unwrap_or_else(|| PathBuf::from("converge_summary.json"));
            write_text(&csv_path, &out.csv)?;
            write_text(
                &json_path,
                &format!("{}\n", serde_json::to_string_pretty(&out.summary)?),
            )?;
            println!(
                "wrote {} rows to {} and summary to {}",
                out.rows.len(),
                csv_path.display(),
                json_path.display()
            );
            for s in &out.summary.per_n {
                println!(
                    "n {}: q_hat median {} (target {})",
                    s.n,
                    s.q_hat_median,
                    if out.summary.h_c_exact.is_finite() {
                        out.summary.h_c_exact.to_string()
                    } else {
                        "inf".to_string()
                    }
                );
            }
            Ok(())
        }
        ExperimentKind::Blocks(run) => {
            let cfg = run.build()?;
            let report = harness::run_block_diagnostics(&cfg)?;
            let json_path = run.out_json.unwrap_or_else(|| PathBuf::from("blocks.json"));
            write_text(
                &json_path,
                &format!("{}\n", serde_json::to_string_pretty(&report)?),
            )?;
            if let Some(w) = &report.warning {
                eprintln!("warning: {w}");
            }
            println!(
                "wrote block diagnostics to {} (alpha {}, derived {})",
                json_path.display(),
                report.alpha,
                report.alpha_derived
            );
            for s in &report.per_n {
                println!(
                    "n {}: bad-block fraction below epsilon in {} of trials; inequality {}",
                    s.n,
                    s.frac_trials_bad_below_eps,
                    if s.inequality_all { "holds" } else { "VIOLATED" }
                );
            }
            Ok(())
        }
        ExperimentKind::Wz(run) => {
            let cfg = run.build()?;
            let out = harness::run_wz(&cfg)?;
            let csv_path = run.out_csv.unwrap_or_else(|| PathBuf::from("wz.csv"));
            let json_path = run
                .out_json
                .unwrap_or_else(|| PathBuf::from("wz_summary.json"));
            write_text(&csv_path, &out.csv)?;
            write_text(
                &json_path,
                &format!("{}\n", serde_json::to_string_pretty(&out.summary)?),
            )?;
            println!(
                "wrote {} rows to {} and summary to {}",
                out.rows.len(),
                csv_path.display(),
                json_path.display()
            );
            for s in &out.summary.per_ell {
                println!(
                    "ell {}: median ln W / ell = {} ({} of {} found)",
                    s.ell, s.estimate_median, s.found, s.trials
                );
            }
            Ok(())
        }
    }
}
