mod common;

use common::{conll, tiny_config};
use stackptr::diffcore::RngStream;
use stackptr::synthetic::toy_treebank;
use stackptr::trainer::{compute_loss, train, train_from, Checkpoint, TrainOptions};
use stackptr::treebank::build_vocabulary;
use stackptr::ParserModel;

#[test]
fn zero_weight_single_word_loss() {
    let corpus = conll(&[&[("雨", "N", 0, "root")], &[("a", "X", 0, "top"), ("b", "Y", 1, "dep")]]);
    let vocab = build_vocabulary(&corpus, 1);
    let config = tiny_config();
    let (model, mut store) = ParserModel::initialize(&config, &vocab, 5).unwrap();
    let names: Vec<String> = store.names().map(String::from).collect();
    for n in names {
        store.by_name_mut(&n).unwrap().values_mut().fill(0.0);
    }
    let rng = RngStream::new(0);
    let loss = compute_loss(&corpus[..1], &model, &store, &vocab, false, &rng).unwrap();
    // the only legal pointer at each step has probability one, so only the
    // uniform label term remains
    let labels = vocab.labels.len() as f64;
    assert_eq!(labels, 3.0);
    assert!((loss - labels.ln()).abs() < 1e-12, "{loss}");
}

#[test]
fn loss_is_a_mean_over_sentences() {
    let corpus = toy_treebank();
    let config = tiny_config();
    let vocab = build_vocabulary(&corpus, 1);
    let (model, store) = ParserModel::initialize(&config, &vocab, 2).unwrap();
    let rng = RngStream::new(0);
    let one = compute_loss(&corpus[..1], &model, &store, &vocab, false, &rng).unwrap();
    let twice = vec![corpus[0].clone(), corpus[0].clone()];
    let two = compute_loss(&twice, &model, &store, &vocab, false, &rng).unwrap();
    assert!(one > 0.0);
    assert!((one - two).abs() < 1e-12);
    let training = compute_loss(&corpus[..8], &model, &store, &vocab, true, &rng).unwrap();
    assert!(training >= 0.0);
}

#[test]
fn checkpoint_names_and_round_trip() {
    let corpus = toy_treebank();
    let mut config = tiny_config();
    config.max_epochs = 1;
    let out = train(&config, &corpus[..20], &corpus[20..30]).unwrap();
    let ckpt = out.checkpoint;
    for name in ckpt.params.names() {
        assert!(
            ["embeddings.", "encoder.", "decoder.", "biaffine."].iter().any(|p| name.starts_with(p)),
            "{name}"
        );
    }
    let bytes = ckpt.to_bytes();
    let loaded = Checkpoint::from_bytes(&bytes).unwrap();
    assert_eq!(loaded.to_bytes(), bytes);
    assert_eq!(loaded.vocab, ckpt.vocab);
    assert_eq!(loaded.config, ckpt.config);
    assert_eq!(loaded.provenance, ckpt.provenance);
    assert_eq!(ckpt.provenance.len(), 1);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    loaded.save(&path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
    assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
}

#[test]
fn evaluation_is_deterministic() {
    let corpus = toy_treebank();
    let mut config = tiny_config();
    config.max_epochs = 1;
    let ckpt = train(&config, &corpus[..20], &corpus[20..30]).unwrap().checkpoint;
    let a = ckpt.evaluate(&corpus).unwrap();
    let b = ckpt.evaluate(&corpus).unwrap();
    assert_eq!(a, b);
    assert!(a.las() <= a.uas());
}

#[test]
fn early_epochs_lower_the_loss() {
    let corpus = toy_treebank();
    let mut config = tiny_config();
    for (k, v) in [("d_w", "16"), ("d_h", "16"), ("decoder_hidden", "16"), ("arc_mlp", "16"), ("max_epochs", "5"), ("patience", "10")] {
        config.set(k, v).unwrap();
    }
    let out = train(&config, &corpus, &corpus[..10]).unwrap();
    let losses: Vec<f64> = out.history.iter().map(|h| h.mean_loss).collect();
    assert_eq!(losses.len(), 5);
    let inversions = losses.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(inversions <= 1, "{losses:?}");
}

#[test]
fn zero_epochs_return_the_start() {
    let corpus = toy_treebank();
    let mut config = tiny_config();
    config.max_epochs = 1;
    let start = train(&config, &corpus[..10], &corpus[10..15]).unwrap().checkpoint;
    config.max_epochs = 0;
    let out = train_from(&start, &config, &corpus[..10], &corpus[10..15], &TrainOptions::default()).unwrap();
    assert!(out.checkpoint.params.bitwise_eq(&start.params));
    assert_eq!(out.checkpoint.provenance, start.provenance);
    assert!(out.history.is_empty());
}

#[test]
fn learning_rate_decays_without_improvement() {
    let corpus = toy_treebank();
    let mut config = tiny_config();
    config.max_epochs = 6;
    config.patience = 100;
    let out = train(&config, &corpus[..10], &corpus[10..20]).unwrap();
    let mut lr = config.learning_rate;
    let mut best = f64::NEG_INFINITY;
    for h in &out.history {
        assert_eq!(h.learning_rate, lr);
        if h.dev_las > best {
            best = h.dev_las;
        } else {
            lr *= 0.75;
        }
    }
    assert_eq!(out.best_dev_las, best);
}

#[test]
fn patience_stops_training() {
    let corpus = toy_treebank();
    let mut config = tiny_config();
    config.max_epochs = 50;
    config.patience = 1;
    let out = train(&config, &corpus[..10], &corpus[10..20]).unwrap();
    assert!(out.history.len() < 50);
    let last = out.history.last().unwrap();
    assert!(last.dev_las <= out.best_dev_las);
}

#[test]
fn empty_corpus_rejected() {
    assert!(train(&tiny_config(), &[], &toy_treebank()).is_err());
}
