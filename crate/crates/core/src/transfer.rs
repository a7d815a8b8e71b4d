//! Moving a trained network to a new treebank: keep the encoder and decoder,
//! start the biaffine scorers over, then fine-tune.

use crate::config::TrainConfig;
use crate::diffcore::{ParameterStore, Tensor};
use crate::error::{Error, Result};
use crate::parser::ParserModel;
use crate::trainer::{train_from, Checkpoint, TrainOptions, TrainOutcome};
use crate::treebank::Pair;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurgeryPlan {
    pub retain_prefixes: Vec<String>,
    pub reinit_prefixes: Vec<String>,
}

impl Default for SurgeryPlan {
    fn default() -> Self {
        SurgeryPlan::from_config(&TrainConfig::default())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Retain,
    Reinit,
}

impl SurgeryPlan {
    pub fn from_config(config: &TrainConfig) -> Self {
        SurgeryPlan {
            retain_prefixes: config.retain_prefixes.clone(),
            reinit_prefixes: config.reinit_prefixes.clone(),
        }
    }

    /// The single action whose prefix matches `name`.
    pub fn action(&self, name: &str) -> Result<Action> {
        let retain = self.retain_prefixes.iter().filter(|p| name.starts_with(p.as_str())).count();
        let reinit = self.reinit_prefixes.iter().filter(|p| name.starts_with(p.as_str())).count();
        match (retain, reinit) {
            (1, 0) => Ok(Action::Retain),
            (0, 1) => Ok(Action::Reinit),
            (0, 0) => Err(Error::IncompleteSurgeryPlan(format!("no prefix covers {name}"))),
            _ => Err(Error::IncompleteSurgeryPlan(format!("{name} matches more than one prefix"))),
        }
    }

    /// Every name must match exactly one prefix, and the two sets must not
    /// share a prefix.
    pub fn check_coverage<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Result<()> {
        if let Some(p) = self.retain_prefixes.iter().find(|p| self.reinit_prefixes.contains(p)) {
            return Err(Error::IncompleteSurgeryPlan(format!("prefix {p:?} is both retained and reinitialized")));
        }
        for name in names {
            self.action(name)?;
        }
        Ok(())
    }
}

/// Copies the rows of `source` over the leading rows of `fresh`. Trailing
/// dimensions must agree and `fresh` may only be taller.
fn graft_rows(source: &Tensor, fresh: &Tensor, name: &str) -> Result<Tensor> {
    let (s, f) = (source.shape(), fresh.shape());
    if s == f {
        return Ok(source.clone());
    }
    if s.len() != f.len() || s.is_empty() || s[1..] != f[1..] || s[0] > f[0] {
        return Err(Error::Shape(format!("{name}: cannot graft {s:?} into {f:?}")));
    }
    let mut values = fresh.values().to_vec();
    values[..source.len()].copy_from_slice(source.values());
    Tensor::new(f.to_vec(), values)
}

/// Builds the target-domain starting point. The vocabulary is extended with
/// target-only symbols; retained tensors are copied (embedding tables gain
/// fresh rows for new symbols); reinitialized tensors are drawn from `seed`
/// at the new label inventory size.
pub fn transplant(source: &Checkpoint, target_train: &[Pair], plan: &SurgeryPlan, seed: u64) -> Result<Checkpoint> {
    if target_train.is_empty() {
        return Err(Error::Empty("target training corpus".into()));
    }
    plan.check_coverage(source.params.names())?;
    let vocab = source.vocab.extended(target_train, source.config.min_word_count);
    if vocab.labels.len() < source.vocab.labels.len() {
        return Err(Error::Config("label inventory cannot shrink".into()));
    }
    let mut config = source.config.clone();
    config.retain_prefixes = plan.retain_prefixes.clone();
    config.reinit_prefixes = plan.reinit_prefixes.clone();
    let (_, fresh) = ParserModel::initialize(&config, &vocab, seed)?;
    plan.check_coverage(fresh.names())?;

    let mut params = ParameterStore::new(seed);
    let (mut retained, mut reinit) = (0, 0);
    for (_, name, tensor) in fresh.iter() {
        let t = match plan.action(name)? {
            Action::Retain => {
                retained += 1;
                let src = source
                    .params
                    .by_name(name)
                    .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
                graft_rows(src, tensor, name)?
            }
            Action::Reinit => {
                reinit += 1;
                tensor.clone()
            }
        };
        params.insert(name, t)?;
    }
    let mut provenance = source.provenance.clone();
    provenance.push(format!(
        "transplant seed={seed} retained={retained} reinitialized={reinit} new_words={} new_labels={}",
        vocab.words.len() - source.vocab.words.len(),
        vocab.labels.len() - source.vocab.labels.len()
    ));
    Ok(Checkpoint::new(params, vocab, config, provenance))
}

/// Trains the whole transplanted network on the target domain with a fresh
/// optimizer state.
pub fn finetune(
    transplanted: &Checkpoint,
    target_train: &[Pair],
    target_dev: &[Pair],
    config: &TrainConfig,
    options: &TrainOptions,
) -> Result<TrainOutcome> {
    let options = TrainOptions {
        label: if options.label.is_empty() { "finetune".into() } else { options.label.clone() },
        verbose: options.verbose,
    };
    train_from(transplanted, config, target_train, target_dev, &options)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorStatus {
    Equal,
    Changed,
    /// Shape differs; the overlapping leading rows are compared.
    Resized { prefix_equal: bool },
    New,
    Removed,
}

/// Per-tensor comparison of two stores, in the order of `target` followed by
/// names only in `source`.
pub fn inspect(source: &ParameterStore, target: &ParameterStore) -> Vec<(String, TensorStatus)> {
    let mut out = Vec::new();
    for (_, name, t) in target.iter() {
        let status = match source.by_name(name) {
            None => TensorStatus::New,
            Some(s) if s.bitwise_eq(t) => TensorStatus::Equal,
            Some(s) if s.shape() == t.shape() => TensorStatus::Changed,
            Some(s) => {
                let n = s.len().min(t.len());
                let prefix_equal = s.shape()[1..] == t.shape()[1..]
                    && s.values()[..n]
                        .iter()
                        .zip(&t.values()[..n])
                        .all(|(a, b)| a.to_bits() == b.to_bits());
                TensorStatus::Resized { prefix_equal }
            }
        };
        out.push((name.to_string(), status));
    }
    for name in source.names() {
        if target.by_name(name).is_none() {
            out.push((name.to_string(), TensorStatus::Removed));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan_covers_model_names() {
        let plan = SurgeryPlan::default();
        for name in ["embeddings.word", "encoder.attn.output", "decoder.lstm.bias", "biaffine.arc.u"] {
            assert!(plan.action(name).is_ok());
        }
        assert_eq!(plan.action("biaffine.label.bias").unwrap(), Action::Reinit);
        assert!(matches!(plan.action("other.w"), Err(Error::IncompleteSurgeryPlan(_))));
    }

    #[test]
    fn overlapping_prefixes_rejected() {
        let plan = SurgeryPlan {
            retain_prefixes: vec!["encoder.".into()],
            reinit_prefixes: vec!["encoder.attn.".into()],
        };
        assert!(plan.check_coverage(["encoder.attn.output"]).is_err());
        assert!(plan.check_coverage(["encoder.bilstm.forward.bias"]).is_ok());
    }

    #[test]
    fn graft_keeps_old_rows() {
        let src = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let fresh = Tensor::new(vec![3, 2], vec![9.0; 6]).unwrap();
        let t = graft_rows(&src, &fresh, "e").unwrap();
        assert_eq!(t.values(), &[1.0, 2.0, 3.0, 4.0, 9.0, 9.0]);
        assert!(graft_rows(&fresh, &src, "e").is_err());
    }
}
