//! Training loop, loss and checkpoints.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::config::TrainConfig;
use crate::decoder::ParseStep;
use crate::diffcore::serialize::{escape, read_archive, unescape, write_archive, FORMAT_VERSION};
use crate::diffcore::{adam_step, AdamState, Gradients, ParameterStore, RngStream};
use crate::error::{Error, Result};
use crate::metrics::{score_corpus, AttachmentCounts};
use crate::parser::ParserModel;
use crate::treebank::{
    build_vocabulary, load_pretrained_embeddings, DependencyTree, EncodedSentence, Pair, SymbolTable, Vocabulary,
};

/// A trained model with everything needed to rebuild it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ParameterStore,
    pub vocab: Vocabulary,
    pub config: TrainConfig,
    pub format_version: String,
    /// One entry per run that produced these weights, oldest first.
    pub provenance: Vec<String>,
}

const TABLES: [&str; 4] = ["words", "chars", "pos", "labels"];

impl Checkpoint {
    pub fn new(params: ParameterStore, vocab: Vocabulary, config: TrainConfig, provenance: Vec<String>) -> Self {
        Checkpoint {
            params,
            vocab,
            config,
            format_version: FORMAT_VERSION.to_string(),
            provenance,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = Vec::new();
        for (k, v) in self.config.entries() {
            header.push(format!("config\t{k}\t{}", escape(&v)));
        }
        let tables = [&self.vocab.words, &self.vocab.chars, &self.vocab.pos, &self.vocab.labels];
        for (name, table) in TABLES.iter().zip(tables) {
            for s in table.symbols() {
                header.push(format!("vocab\t{name}\t{}", escape(s)));
            }
        }
        for p in &self.provenance {
            header.push(format!("provenance\t{}", escape(p)));
        }
        write_archive(&header, &self.params)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, params) = read_archive(bytes)?;
        let mut config = TrainConfig::default();
        let mut symbols: [Vec<String>; 4] = Default::default();
        let mut provenance = Vec::new();
        for line in header {
            let fields: Vec<&str> = line.splitn(3, '\t').collect();
            match fields.as_slice() {
                ["config", k, v] => config.set(k, &unescape(v)?)?,
                ["vocab", table, s] => {
                    let i = TABLES
                        .iter()
                        .position(|t| t == table)
                        .ok_or_else(|| Error::Checkpoint(format!("unknown vocabulary table {table:?}")))?;
                    symbols[i].push(unescape(s)?);
                }
                ["provenance", rest @ ..] => provenance.push(unescape(&rest.join("\t"))?),
                _ => return Err(Error::Checkpoint(format!("unrecognized manifest line {line:?}"))),
            }
        }
        config.validate()?;
        let [w, c, p, l] = symbols;
        let vocab = Vocabulary::from_tables(
            SymbolTable::from_symbols(w)?,
            SymbolTable::from_symbols(c)?,
            SymbolTable::from_symbols(p)?,
            SymbolTable::from_symbols(l)?,
        )?;
        let ckpt = Checkpoint::new(params, vocab, config, provenance);
        ckpt.model()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Checkpoint::from_bytes(&fs::read(path)?)
    }

    /// Model view bound to these parameters.
    pub fn model(&self) -> Result<ParserModel> {
        ParserModel::bind(&self.params, &self.config, &self.vocab)
    }

    /// Greedy parses, decoded in parallel.
    pub fn parse_all(&self, sentences: &[&crate::treebank::Sentence]) -> Result<Vec<DependencyTree>> {
        let model = self.model()?;
        sentences
            .par_iter()
            .map(|s| model.parse(&self.params, &self.vocab, s))
            .collect()
    }

    /// Attachment counts on a gold corpus, honouring `config.exclude_pos`.
    pub fn evaluate(&self, gold: &[Pair]) -> Result<AttachmentCounts> {
        let sentences: Vec<_> = gold.iter().map(|(s, _)| s).collect();
        let predicted = self.parse_all(&sentences)?;
        score_corpus(gold, &predicted, &self.config.exclude_pos)
    }
}

/// Encoded sentence with its gold step sequence.
pub struct Prepared {
    pub sentence: EncodedSentence,
    pub steps: Vec<ParseStep>,
}

pub fn prepare(model: &ParserModel, vocab: &Vocabulary, corpus: &[Pair]) -> Result<Vec<Prepared>> {
    corpus
        .iter()
        .map(|(s, t)| {
            Ok(Prepared {
                sentence: vocab.encode(s),
                steps: model.gold_steps(vocab, t)?,
            })
        })
        .collect()
}

/// Mean loss over `batch` and the gradient of that mean. Sentence `k` draws
/// dropout masks from `rng.split(k)`; gradients are summed in batch order so
/// the result does not depend on thread scheduling.
pub fn batch_gradient(
    model: &ParserModel,
    store: &ParameterStore,
    batch: &[&Prepared],
    training: bool,
    rng: &RngStream,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Empty("empty batch".into()));
    }
    let parts: Vec<(f64, Gradients)> = batch
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let mut r = rng.split(k as u64);
            model.sentence_loss(store, &p.sentence, &p.steps, training, &mut r)
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut grads = Gradients::zeros_like(store);
    for (loss, g) in &parts {
        total += loss;
        grads.accumulate(g);
    }
    let scale = 1.0 / batch.len() as f64;
    grads.scale(scale);
    Ok((total * scale, grads))
}

/// Mean per-sentence loss `-(arc + label log-likelihood) / n` over `batch`.
pub fn compute_loss(
    batch: &[Pair],
    model: &ParserModel,
    store: &ParameterStore,
    vocab: &Vocabulary,
    training: bool,
    rng: &RngStream,
) -> Result<f64> {
    let prepared = prepare(model, vocab, batch)?;
    let refs: Vec<&Prepared> = prepared.iter().collect();
    Ok(batch_gradient(model, store, &refs, training, rng)?.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub dev_uas: f64,
    pub dev_las: f64,
    pub learning_rate: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best dev LAS.
    pub checkpoint: Checkpoint,
    pub best_epoch: usize,
    pub best_dev_las: f64,
    pub history: Vec<EpochRecord>,
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Name recorded in the provenance entry.
    pub label: String,
    /// Per-epoch progress on stderr.
    pub verbose: bool,
}

/// Trains from scratch with a vocabulary built on `train`.
pub fn train(config: &TrainConfig, train: &[Pair], dev: &[Pair]) -> Result<TrainOutcome> {
    train_with(config, train, dev, &TrainOptions::default())
}

pub fn train_with(config: &TrainConfig, train: &[Pair], dev: &[Pair], options: &TrainOptions) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training corpus".into()));
    }
    let vocab = build_vocabulary(train, config.min_word_count);
    let (_, mut store) = ParserModel::initialize(config, &vocab, config.seed)?;
    if !config.embeddings.is_empty() {
        let mut rng = RngStream::new(config.seed).split_named("pretrained");
        let table = load_pretrained_embeddings(Path::new(&config.embeddings), &vocab, config.d_w, &mut rng)?;
        let slot = store
            .by_name_mut("embeddings.word")
            .ok_or_else(|| Error::UnknownParameter("embeddings.word".into()))?;
        if slot.shape() != table.shape() {
            return Err(Error::Shape(format!(
                "pretrained table {:?} vs {:?}",
                table.shape(),
                slot.shape()
            )));
        }
        *slot = table;
    }
    let start = Checkpoint::new(store, vocab, config.clone(), Vec::new());
    train_from(&start, config, train, dev, options)
}

/// Continues training from `start` (whole network trainable, fresh optimizer
/// state). The outcome's provenance extends that of `start`.
pub fn train_from(
    start: &Checkpoint,
    config: &TrainConfig,
    train: &[Pair],
    dev: &[Pair],
    options: &TrainOptions,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training corpus".into()));
    }
    if dev.is_empty() {
        return Err(Error::Empty("development corpus".into()));
    }
    let vocab = &start.vocab;
    let model = ParserModel::bind(&start.params, config, vocab)?;
    let data = prepare(&model, vocab, train)?;
    let mut store = start.params.clone();
    let mut adam = AdamState::new(&store, config.adam_beta1, config.adam_beta2, config.adam_epsilon);
    let mut lr = config.learning_rate;
    let root = RngStream::new(config.seed).split_named("train");

    let mut best_store = store.clone();
    let mut best_las = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut since_decay = 0;
    let mut history = Vec::new();

    for epoch in 1..=config.max_epochs {
        let mut rng = root.split(epoch as u64);
        let mut order: Vec<usize> = (0..data.len()).collect();
        rng.shuffle(&mut order);
        order.sort_by_key(|&i| data[i].sentence.positions());
        let mut batches: Vec<&[usize]> = order.chunks(config.batch_size).collect();
        rng.shuffle(&mut batches);

        let mut loss_sum = 0.0;
        for (b, batch) in batches.iter().enumerate() {
            let items: Vec<&Prepared> = batch.iter().map(|&i| &data[i]).collect();
            let batch_rng = rng.split(b as u64);
            let (loss, mut grads) = match batch_gradient(&model, &store, &items, true, &batch_rng) {
                Ok(x) => x,
                Err(Error::NonFinite(msg)) => return Err(non_finite(epoch, b, &msg, &store)),
                Err(e) => return Err(e),
            };
            if !loss.is_finite() || !grads.is_finite() {
                return Err(non_finite(epoch, b, &format!("batch loss {loss}"), &store));
            }
            grads.clip_global_norm(config.clip_norm);
            adam_step(&mut store, &grads, &mut adam, lr)?;
            loss_sum += loss * items.len() as f64;
        }
        let mean_loss = loss_sum / data.len() as f64;

        let snapshot = Checkpoint::new(store.clone(), vocab.clone(), config.clone(), Vec::new());
        let counts = snapshot.evaluate(dev)?;
        let (dev_uas, dev_las) = (counts.uas(), counts.las());
        history.push(EpochRecord {
            epoch,
            mean_loss,
            dev_uas,
            dev_las,
            learning_rate: lr,
        });
        if options.verbose {
            eprintln!("epoch {epoch}: loss {mean_loss:.4} dev UAS {dev_uas:.2} LAS {dev_las:.2} lr {lr:.3e}");
        }
        if dev_las > best_las {
            best_las = dev_las;
            best_epoch = epoch;
            best_store = snapshot.params;
            stale = 0;
            since_decay = 0;
        } else {
            stale += 1;
            since_decay += 1;
            if since_decay >= config.decay_patience {
                lr *= config.decay_rate;
                since_decay = 0;
            }
            if stale >= config.patience {
                break;
            }
        }
    }

    let mut provenance = start.provenance.clone();
    if config.max_epochs > 0 {
        let label = if options.label.is_empty() { "corpus" } else { &options.label };
        provenance.push(format!(
            "train source={label} sentences={} epochs={} best_epoch={best_epoch} dev_las={best_las:.2}",
            train.len(),
            history.len()
        ));
    }
    Ok(TrainOutcome {
        checkpoint: Checkpoint::new(best_store, vocab.clone(), config.clone(), provenance),
        best_epoch,
        best_dev_las: best_las,
        history,
    })
}

fn non_finite(epoch: usize, batch: usize, msg: &str, store: &ParameterStore) -> Error {
    let norms: Vec<String> = store
        .iter()
        .map(|(_, name, t)| {
            let n = t.values().iter().map(|v| v * v).sum::<f64>().sqrt();
            format!("{name}={n:.3e}")
        })
        .collect();
    Error::NonFinite(format!("epoch {epoch} batch {batch}: {msg}; parameter norms: {}", norms.join(" ")))
}
