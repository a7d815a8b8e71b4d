//! `stackptr` command line: train, finetune, parse, eval, surgery-inspect.
//!
//! Exit status is 0 on success, 1 on runtime failure and 2 on usage errors.
//! Commands that write an artifact also write `<artifact>.run` with the
//! configuration, seed and SHA-256 digests of every input file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use stackptr::metrics::{score_corpus, DomainReport, EvalReport};
use stackptr::trainer::{train_with, TrainOptions};
use stackptr::transfer::{finetune, inspect, transplant, SurgeryPlan, TensorStatus};
use stackptr::treebank::{parse_conll, parse_conll_sentences, parse_conll_with, write_conll, Pair, ReadOptions, RootPolicy};
use stackptr::{Checkpoint, Error, Result, TrainConfig};

#[derive(Parser, Debug)]
#[command(name = "stackptr", version, about = "Stack-pointer dependency parser")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a parser from scratch.
    Train(TrainArgs),
    /// Transplant a trained parser to a new treebank and fine-tune it.
    Finetune(FinetuneArgs),
    /// Parse a CoNLL file, overwriting HEAD and DEPREL.
    Parse(ParseArgs),
    /// Score predictions against gold trees.
    Eval(EvalArgs),
    /// Compare the tensors of two checkpoints.
    SurgeryInspect(InspectArgs),
}

#[derive(Args, Debug)]
struct Overrides {
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Configuration override, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Per-epoch progress on stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct FinetuneArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated parameter-name prefixes copied from the source.
    #[arg(long)]
    retain: Option<String>,
    /// Comma-separated parameter-name prefixes initialized afresh.
    #[arg(long)]
    reinit: Option<String>,
    /// Seed for reinitialized tensors; defaults to the configured seed.
    #[arg(long)]
    surgery_seed: Option<u64>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct ParseArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, requires = "pred")]
    gold: Option<PathBuf>,
    #[arg(long, requires = "gold")]
    pred: Option<PathBuf>,
    /// Additional domain as NAME=GOLD:PRED; repeatable.
    #[arg(long = "domains", value_name = "NAME=GOLD:PRED", num_args = 1..)]
    domains: Vec<String>,
    /// Comma-separated POS tags left out of the scores.
    #[arg(long, default_value = "")]
    exclude_pos: String,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Finetune(a) => cmd_finetune(a),
        Command::Parse(a) => cmd_parse(a),
        Command::Eval(a) => cmd_eval(a),
        Command::SurgeryInspect(a) => cmd_inspect(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("stackptr: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("stackptr: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_treebank(path: &Path) -> Result<Vec<Pair>> {
    parse_conll(&read_text(path)?)
}

fn digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn build_config(base: TrainConfig, o: &Overrides) -> std::result::Result<TrainConfig, Failure> {
    let mut config = base;
    if let Some(path) = &o.config {
        config.apply_text(&read_text(path)?)?;
    }
    let mut map = BTreeMap::new();
    for kv in &o.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        map.insert(k.to_string(), v.to_string());
    }
    config.apply_overrides(&map)?;
    Ok(config)
}

fn run_record_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".run");
    PathBuf::from(name)
}

/// Writes `artifact` and its run record; removes both if either write fails.
fn commit(out: &Path, artifact: &[u8], verb: &str, config: Option<&TrainConfig>, inputs: &[&Path]) -> Result<()> {
    let record = run_record_path(out);
    let write = || -> Result<()> {
        let mut text = format!("verb={verb}\n");
        if let Some(c) = config {
            text.push_str(&format!("seed={}\n", c.seed));
            for (k, v) in c.entries() {
                text.push_str(&format!("config.{k}={v}\n"));
            }
        }
        for p in inputs {
            text.push_str(&format!("input={}\tsha256={}\n", p.display(), digest(p)?));
        }
        fs::write(out, artifact)?;
        text.push_str(&format!("output={}\tsha256={}\n", out.display(), hex::encode(Sha256::digest(artifact))));
        fs::write(&record, text)?;
        Ok(())
    };
    write().inspect_err(|_| {
        let _ = fs::remove_file(out);
        let _ = fs::remove_file(&record);
    })
}

fn cmd_train(a: TrainArgs) -> CmdResult {
    let config = build_config(TrainConfig::default(), &a.overrides)?;
    let train = read_treebank(&a.train)?;
    let dev = read_treebank(&a.dev)?;
    let options = TrainOptions {
        label: a.train.display().to_string(),
        verbose: a.overrides.verbose,
    };
    let outcome = train_with(&config, &train, &dev, &options)?;
    eprintln!(
        "best dev LAS {:.2} at epoch {} of {}",
        outcome.best_dev_las,
        outcome.best_epoch,
        outcome.history.len()
    );
    let mut inputs = vec![a.train.as_path(), a.dev.as_path()];
    if let Some(c) = &a.overrides.config {
        inputs.push(c);
    }
    let emb = PathBuf::from(&config.embeddings);
    if !config.embeddings.is_empty() {
        inputs.push(&emb);
    }
    commit(&a.out, &outcome.checkpoint.to_bytes(), "train", Some(&config), &inputs)?;
    Ok(())
}

fn cmd_finetune(a: FinetuneArgs) -> CmdResult {
    let source = Checkpoint::load(&a.source)?;
    let mut config = build_config(source.config.clone(), &a.overrides)?;
    if let Some(r) = &a.retain {
        config.set("retain_prefixes", r)?;
    }
    if let Some(r) = &a.reinit {
        config.set("reinit_prefixes", r)?;
    }
    let train = read_treebank(&a.train)?;
    let dev = read_treebank(&a.dev)?;
    let plan = SurgeryPlan::from_config(&config);
    let seed = a.surgery_seed.unwrap_or(config.seed);
    let transplanted = transplant(&source, &train, &plan, seed)?;
    let mut config = config;
    config.retain_prefixes = plan.retain_prefixes.clone();
    config.reinit_prefixes = plan.reinit_prefixes.clone();
    let options = TrainOptions {
        label: a.train.display().to_string(),
        verbose: a.overrides.verbose,
    };
    let outcome = finetune(&transplanted, &train, &dev, &config, &options)?;
    eprintln!(
        "best target dev LAS {:.2} at epoch {} of {}",
        outcome.best_dev_las,
        outcome.best_epoch,
        outcome.history.len()
    );
    let mut inputs = vec![a.source.as_path(), a.train.as_path(), a.dev.as_path()];
    if let Some(c) = &a.overrides.config {
        inputs.push(c);
    }
    commit(&a.out, &outcome.checkpoint.to_bytes(), "finetune", Some(&config), &inputs)?;
    Ok(())
}

fn cmd_parse(a: ParseArgs) -> CmdResult {
    let ckpt = Checkpoint::load(&a.model)?;
    let sentences = parse_conll_sentences(&read_text(&a.input)?)?;
    let refs: Vec<_> = sentences.iter().collect();
    let trees = ckpt.parse_all(&refs)?;
    let pairs: Vec<Pair> = sentences.into_iter().zip(trees).collect();
    let text = write_conll(&pairs)?;
    commit(&a.output, text.as_bytes(), "parse", Some(&ckpt.config), &[&a.model, &a.input])?;
    Ok(())
}

fn parse_domain(spec: &str) -> std::result::Result<(String, PathBuf, PathBuf), Failure> {
    let bad = || Failure::Usage(format!("--domains expects NAME=GOLD:PRED, got {spec:?}"));
    let (name, files) = spec.split_once('=').ok_or_else(bad)?;
    let (gold, pred) = files.split_once(':').ok_or_else(bad)?;
    if name.is_empty() || gold.is_empty() || pred.is_empty() {
        return Err(bad());
    }
    Ok((name.to_string(), gold.into(), pred.into()))
}

fn cmd_eval(a: EvalArgs) -> CmdResult {
    let mut jobs = Vec::new();
    if let (Some(g), Some(p)) = (&a.gold, &a.pred) {
        jobs.push(("all".to_string(), g.clone(), p.clone()));
    }
    for d in &a.domains {
        jobs.push(parse_domain(d)?);
    }
    if jobs.is_empty() {
        return Err(Failure::Usage("eval needs --gold and --pred, or --domains".into()));
    }
    let exclude: Vec<String> = a
        .exclude_pos
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    let lenient = ReadOptions {
        root_policy: RootPolicy::Multiple,
    };
    let mut report = EvalReport { domains: Vec::new() };
    for (name, gold, pred) in jobs {
        let gold = parse_conll_with(&read_text(&gold)?, lenient)?;
        let pred = parse_conll_with(&read_text(&pred)?, lenient)?;
        let pred: Vec<_> = pred.into_iter().map(|(_, t)| t).collect();
        let counts = score_corpus(&gold, &pred, &exclude)?;
        report.domains.push(DomainReport { name, counts });
    }
    print!("{report}\n{}", report.key_values());
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> CmdResult {
    let source = Checkpoint::load(&a.source)?;
    let target = Checkpoint::load(&a.target)?;
    for (name, status) in inspect(&source.params, &target.params) {
        let s = match status {
            TensorStatus::Equal => "bitwise-equal",
            TensorStatus::Changed => "changed",
            TensorStatus::Resized { prefix_equal: true } => "resized (old rows bitwise-equal)",
            TensorStatus::Resized { prefix_equal: false } => "resized (old rows changed)",
            TensorStatus::New => "new",
            TensorStatus::Removed => "removed",
        };
        println!("{name}\t{s}");
    }
    Ok(())
}
