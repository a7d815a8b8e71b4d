#![allow(dead_code)]

use stackptr::treebank::{parse_conll, Pair};
use stackptr::TrainConfig;

/// Small dimensions so tests run in seconds.
pub fn tiny_config() -> TrainConfig {
    let mut c = TrainConfig::default();
    for (k, v) in [
        ("d_w", "8"),
        ("char_dim", "4"),
        ("pos_dim", "4"),
        ("num_filters", "4"),
        ("d_h", "8"),
        ("decoder_hidden", "8"),
        ("arc_mlp", "8"),
        ("label_mlp", "4"),
        ("batch_size", "8"),
        ("max_epochs", "3"),
        ("min_word_count", "1"),
    ] {
        c.set(k, v).unwrap();
    }
    c.validate().unwrap();
    c
}

pub fn conll(rows: &[&[(&str, &str, usize, &str)]]) -> Vec<Pair> {
    let mut text = String::new();
    for sent in rows {
        for (i, (form, pos, head, label)) in sent.iter().enumerate() {
            text.push_str(&format!("{}\t{form}\t_\t{pos}\t{pos}\t_\t{head}\t{label}\t_\t_\n", i + 1));
        }
        text.push('\n');
    }
    parse_conll(&text).unwrap()
}
