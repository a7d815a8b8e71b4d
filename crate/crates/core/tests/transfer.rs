mod common;

use common::{conll, tiny_config};
use stackptr::diffcore::{Graph, RngStream};
use stackptr::synthetic::toy_treebank;
use stackptr::trainer::{train, TrainOptions};
use stackptr::transfer::{finetune, inspect, transplant, SurgeryPlan, TensorStatus};
use stackptr::{Error, ParserModel};

fn source() -> stackptr::Checkpoint {
    let corpus = toy_treebank();
    let mut config = tiny_config();
    config.max_epochs = 1;
    train(&config, &corpus[..20], &corpus[20..25]).unwrap().checkpoint
}

#[test]
fn one_new_word_adds_one_row() {
    let src = source();
    let known = src.vocab.words.symbol(5).to_string();
    let target = conll(&[&[("魔幻", "NOUN", 2, "nsubj"), (known.as_str(), "VERB", 0, "root")]]);
    let out = transplant(&src, &target, &SurgeryPlan::default(), 99).unwrap();
    let old = src.params.by_name("embeddings.word").unwrap();
    let new = out.params.by_name("embeddings.word").unwrap();
    assert_eq!(new.shape()[0], old.shape()[0] + 1);
    assert_eq!(&new.values()[..old.len()], old.values());
    assert_eq!(out.vocab.words.get("魔幻"), Some(old.shape()[0]));
    // two new characters
    let chars = out.params.by_name("embeddings.char").unwrap();
    assert_eq!(chars.shape()[0], src.vocab.chars.len() + 2);
}

#[test]
fn retained_copied_and_scorer_reset() {
    let src = source();
    let target = conll(&[&[("x", "NEW", 0, "fresh_label")]]);
    let out = transplant(&src, &target, &SurgeryPlan::default(), 99).unwrap();
    assert_eq!(out.vocab.labels.len(), src.vocab.labels.len() + 1);
    for (name, status) in inspect(&src.params, &out.params) {
        if name.starts_with("biaffine.") {
            assert!(
                matches!(status, TensorStatus::Changed | TensorStatus::Resized { .. }),
                "{name}: {status:?}"
            );
        } else {
            assert!(
                matches!(status, TensorStatus::Equal | TensorStatus::Resized { prefix_equal: true }),
                "{name}: {status:?}"
            );
        }
    }
    let label_bias = out.params.by_name("biaffine.label.bias").unwrap();
    assert_eq!(label_bias.shape(), &[out.vocab.labels.len()]);
    assert_eq!(out.provenance.len(), 2);
    assert!(out.provenance[1].starts_with("transplant"));
    ParserModel::bind(&out.params, &out.config, &out.vocab).unwrap();
}

#[test]
fn transplant_is_repeatable() {
    let src = source();
    let target = toy_treebank()[30..].to_vec();
    let a = transplant(&src, &target, &SurgeryPlan::default(), 4).unwrap();
    let b = transplant(&src, &target, &SurgeryPlan::default(), 4).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
}

#[test]
fn retained_encoder_computes_the_same_states() {
    let src = source();
    let target = conll(&[&[("新词", "NEW", 0, "other")]]);
    let out = transplant(&src, &target, &SurgeryPlan::default(), 17).unwrap();
    let sentence = &toy_treebank()[3].0;
    let states = |ck: &stackptr::Checkpoint| {
        let model = ck.model().unwrap();
        let mut g = Graph::new(&ck.params);
        let enc = model
            .encoder
            .encode(&mut g, &ck.vocab.encode(sentence), false, &mut RngStream::new(0))
            .unwrap();
        g.value(enc.states).to_vec()
    };
    let (a, b) = (states(&src), states(&out));
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn incomplete_plans_rejected() {
    let src = source();
    let target = toy_treebank()[..2].to_vec();
    let plan = SurgeryPlan {
        retain_prefixes: vec!["embeddings.".into(), "encoder.".into()],
        reinit_prefixes: vec!["biaffine.".into()],
    };
    assert!(matches!(transplant(&src, &target, &plan, 1), Err(Error::IncompleteSurgeryPlan(_))));
    let plan = SurgeryPlan {
        retain_prefixes: vec!["embeddings.".into(), "encoder.".into(), "decoder.".into(), "biaffine.".into()],
        reinit_prefixes: vec!["biaffine.".into()],
    };
    assert!(matches!(transplant(&src, &target, &plan, 1), Err(Error::IncompleteSurgeryPlan(_))));
    assert!(transplant(&src, &[], &SurgeryPlan::default(), 1).is_err());
}

#[test]
fn finetune_records_provenance_and_zero_epochs_is_identity() {
    let src = source();
    let corpus = toy_treebank();
    let t = transplant(&src, &corpus[30..40], &SurgeryPlan::default(), 3).unwrap();
    let mut config = t.config.clone();
    config.max_epochs = 0;
    let same = finetune(&t, &corpus[30..40], &corpus[40..], &config, &TrainOptions::default()).unwrap();
    assert!(same.checkpoint.params.bitwise_eq(&t.params));
    config.max_epochs = 1;
    let tuned = finetune(&t, &corpus[30..40], &corpus[40..], &config, &TrainOptions::default()).unwrap();
    let p = &tuned.checkpoint.provenance;
    assert_eq!(p.len(), 3);
    assert!(p[0].starts_with("train"));
    assert!(p[1].starts_with("transplant"));
    assert!(p[2].contains("source=finetune"));
}
