//! Model and training hyper-parameters with their flat `key=value` file form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Order in which the gold oracle visits a head's children.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ChildOrder {
    /// Increasing distance from the head; ties go to the left child.
    #[default]
    InsideOut,
    LeftToRight,
    RightToLeft,
}

/// Denominator of the scaled dot product in self-attention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AttentionScale {
    /// √(d_model / heads)
    #[default]
    PerHead,
    /// √d_model
    ModelDim,
}

impl FromStr for ChildOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inside_out" => Ok(ChildOrder::InsideOut),
            "left2right" => Ok(ChildOrder::LeftToRight),
            "right2left" => Ok(ChildOrder::RightToLeft),
            _ => Err(Error::Config(format!("unknown child_order {s:?}"))),
        }
    }
}

impl fmt::Display for ChildOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChildOrder::InsideOut => "inside_out",
            ChildOrder::LeftToRight => "left2right",
            ChildOrder::RightToLeft => "right2left",
        })
    }
}

impl FromStr for AttentionScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_head" => Ok(AttentionScale::PerHead),
            "model_dim" => Ok(AttentionScale::ModelDim),
            _ => Err(Error::Config(format!("unknown attention_scale {s:?}"))),
        }
    }
}

impl fmt::Display for AttentionScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttentionScale::PerHead => "per_head",
            AttentionScale::ModelDim => "model_dim",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Word embedding size.
    pub d_w: usize,
    pub char_dim: usize,
    pub pos_dim: usize,
    /// Attention heads.
    pub r: usize,
    /// Hidden units per direction in the encoder BiLSTM.
    pub d_h: usize,
    pub batch_size: usize,
    pub num_filters: usize,
    pub learning_rate: f64,
    pub decay_rate: f64,
    pub p_rnn: f64,
    pub p_in: f64,
    pub p_out: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Consecutive epochs without dev improvement before each decay.
    pub decay_patience: usize,
    pub seed: u64,
    pub child_order: ChildOrder,
    pub attention_scale: AttentionScale,
    pub single_root: bool,

    pub kernel_width: usize,
    pub decoder_hidden: usize,
    pub arc_mlp: usize,
    pub label_mlp: usize,
    pub min_word_count: usize,
    pub clip_norm: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Pretrained word vectors; empty for random initialization.
    pub embeddings: String,
    pub retain_prefixes: Vec<String>,
    pub reinit_prefixes: Vec<String>,
    /// POS tags excluded from attachment scores.
    pub exclude_pos: Vec<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            d_w: 300,
            char_dim: 50,
            pos_dim: 50,
            r: 4,
            d_h: 256,
            batch_size: 64,
            num_filters: 50,
            learning_rate: 0.001,
            decay_rate: 0.75,
            p_rnn: 0.5,
            p_in: 0.5,
            p_out: 0.5,
            max_epochs: 100,
            patience: 10,
            decay_patience: 1,
            seed: 1,
            child_order: ChildOrder::InsideOut,
            attention_scale: AttentionScale::PerHead,
            single_root: false,
            kernel_width: 3,
            decoder_hidden: 512,
            arc_mlp: 512,
            label_mlp: 128,
            min_word_count: 2,
            clip_norm: 5.0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            embeddings: String::new(),
            retain_prefixes: vec!["embeddings.".into(), "encoder.".into(), "decoder.".into()],
            reinit_prefixes: vec!["biaffine.".into()],
            exclude_pos: Vec::new(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl TrainConfig {
    /// Width of a token representation row.
    pub fn d_model(&self) -> usize {
        self.d_w + self.num_filters + self.pos_dim
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "d_w" => self.d_w = parse_num(key, v)?,
            "char_dim" => self.char_dim = parse_num(key, v)?,
            "pos_dim" => self.pos_dim = parse_num(key, v)?,
            "r" => self.r = parse_num(key, v)?,
            "d_h" => self.d_h = parse_num(key, v)?,
            "batch_size" => self.batch_size = parse_num(key, v)?,
            "num_filters" => self.num_filters = parse_num(key, v)?,
            "learning_rate" => self.learning_rate = parse_num(key, v)?,
            "decay_rate" => self.decay_rate = parse_num(key, v)?,
            "p_rnn" => self.p_rnn = parse_num(key, v)?,
            "p_in" => self.p_in = parse_num(key, v)?,
            "p_out" => self.p_out = parse_num(key, v)?,
            "max_epochs" => self.max_epochs = parse_num(key, v)?,
            "patience" => self.patience = parse_num(key, v)?,
            "decay_patience" => self.decay_patience = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "child_order" => self.child_order = v.parse()?,
            "attention_scale" => self.attention_scale = v.parse()?,
            "single_root" => self.single_root = parse_num(key, v)?,
            "kernel_width" => self.kernel_width = parse_num(key, v)?,
            "decoder_hidden" => self.decoder_hidden = parse_num(key, v)?,
            "arc_mlp" => self.arc_mlp = parse_num(key, v)?,
            "label_mlp" => self.label_mlp = parse_num(key, v)?,
            "min_word_count" => self.min_word_count = parse_num(key, v)?,
            "clip_norm" => self.clip_norm = parse_num(key, v)?,
            "adam_beta1" => self.adam_beta1 = parse_num(key, v)?,
            "adam_beta2" => self.adam_beta2 = parse_num(key, v)?,
            "adam_epsilon" => self.adam_epsilon = parse_num(key, v)?,
            "embeddings" => self.embeddings = v.to_string(),
            "retain_prefixes" => self.retain_prefixes = parse_list(v),
            "reinit_prefixes" => self.reinit_prefixes = parse_list(v),
            "exclude_pos" => self.exclude_pos = parse_list(v),
            other => return Err(Error::Config(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Ordered `(key, value)` pairs; [`TrainConfig::set`] accepts each back.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("d_w", self.d_w.to_string()),
            ("char_dim", self.char_dim.to_string()),
            ("pos_dim", self.pos_dim.to_string()),
            ("r", self.r.to_string()),
            ("d_h", self.d_h.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("num_filters", self.num_filters.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("decay_rate", self.decay_rate.to_string()),
            ("p_rnn", self.p_rnn.to_string()),
            ("p_in", self.p_in.to_string()),
            ("p_out", self.p_out.to_string()),
            ("max_epochs", self.max_epochs.to_string()),
            ("patience", self.patience.to_string()),
            ("decay_patience", self.decay_patience.to_string()),
            ("seed", self.seed.to_string()),
            ("child_order", self.child_order.to_string()),
            ("attention_scale", self.attention_scale.to_string()),
            ("single_root", self.single_root.to_string()),
            ("kernel_width", self.kernel_width.to_string()),
            ("decoder_hidden", self.decoder_hidden.to_string()),
            ("arc_mlp", self.arc_mlp.to_string()),
            ("label_mlp", self.label_mlp.to_string()),
            ("min_word_count", self.min_word_count.to_string()),
            ("clip_norm", self.clip_norm.to_string()),
            ("adam_beta1", self.adam_beta1.to_string()),
            ("adam_beta2", self.adam_beta2.to_string()),
            ("adam_epsilon", self.adam_epsilon.to_string()),
            ("embeddings", self.embeddings.clone()),
            ("retain_prefixes", self.retain_prefixes.join(",")),
            ("reinit_prefixes", self.reinit_prefixes.join(",")),
            ("exclude_pos", self.exclude_pos.join(",")),
        ]
    }

    /// Parses `key=value` lines over the defaults. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = TrainConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
                line: i + 1,
                message: format!("expected key=value, found {line:?}"),
            })?;
            self.set(k, v)?;
        }
        self.validate()
    }

    pub fn apply_overrides(&mut self, overrides: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in overrides {
            self.set(k, v)?;
        }
        self.validate()
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_w", self.d_w),
            ("char_dim", self.char_dim),
            ("pos_dim", self.pos_dim),
            ("r", self.r),
            ("d_h", self.d_h),
            ("batch_size", self.batch_size),
            ("num_filters", self.num_filters),
            ("kernel_width", self.kernel_width),
            ("decoder_hidden", self.decoder_hidden),
            ("arc_mlp", self.arc_mlp),
            ("label_mlp", self.label_mlp),
            ("decay_patience", self.decay_patience),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{k} must be positive")));
        }
        if self.d_model() % self.r != 0 {
            return Err(Error::Config(format!(
                "token width {} is not divisible by {} heads",
                self.d_model(),
                self.r
            )));
        }
        for (k, p) in [("p_rnn", self.p_rnn), ("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("{k}={p} outside [0, 1)")));
            }
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate <= 1.0) {
            return Err(Error::Config("decay_rate must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_published_settings() {
        let c = TrainConfig::default();
        assert_eq!((c.d_w, c.char_dim, c.pos_dim), (300, 50, 50));
        assert_eq!((c.r, c.d_h, c.batch_size, c.num_filters), (4, 256, 64, 50));
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!(c.decay_rate, 0.75);
        assert_eq!((c.p_rnn, c.p_in, c.p_out), (0.5, 0.5, 0.5));
        assert_eq!(c.d_model(), 400);
        assert_eq!(c.d_model() / c.r, 100);
    }

    #[test]
    fn text_round_trip() {
        let mut c = TrainConfig::default();
        c.d_w = 32;
        c.child_order = ChildOrder::RightToLeft;
        c.exclude_pos = vec!["PU".into()];
        assert_eq!(TrainConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn unknown_key_and_bad_values_rejected() {
        assert!(TrainConfig::parse("nope=1").is_err());
        assert!(TrainConfig::parse("d_w=abc").is_err());
        assert!(TrainConfig::parse("p_in=1.0").is_err());
        assert!(TrainConfig::parse("d_w=301").is_err());
        assert!(TrainConfig::parse("just a line").is_err());
    }
}
