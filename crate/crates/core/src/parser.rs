//! The full parser: encoder plus pointer decoder over one parameter store.

use crate::config::{ChildOrder, TrainConfig};
use crate::decoder::{decode_greedy, gold_path, NeuralScorer, ParseStep, PointerDecoder, StepTrace};
use crate::diffcore::{Gradients, Graph, ParameterStore, RngStream};
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::params::{Binder, Initializer, ParamSource};
use crate::treebank::{DependencyTree, EncodedSentence, Sentence, Vocabulary};

#[derive(Clone, Debug)]
pub struct ParserModel {
    pub encoder: Encoder,
    pub decoder: PointerDecoder,
    pub child_order: ChildOrder,
    pub single_root: bool,
}

/// Everything observed while parsing one sentence.
#[derive(Clone, Debug)]
pub struct ParseTrace {
    /// Per head, a `T × T` row-major attention matrix.
    pub attention: Vec<Vec<f64>>,
    pub positions: usize,
    pub steps: Vec<StepTrace>,
    pub heads: Vec<usize>,
    pub labels: Vec<usize>,
}

impl ParserModel {
    pub fn new(src: &mut impl ParamSource, config: &TrainConfig, vocab: &Vocabulary) -> Result<Self> {
        if vocab.labels.is_empty() {
            return Err(Error::Config("vocabulary has no dependency labels".into()));
        }
        let encoder = Encoder::new(src, config, vocab)?;
        let decoder = PointerDecoder::new(src, config, encoder.output_dim(), vocab.labels.len())?;
        Ok(ParserModel {
            encoder,
            decoder,
            child_order: config.child_order,
            single_root: config.single_root,
        })
    }

    /// Fresh parameters drawn from `seed`.
    pub fn initialize(config: &TrainConfig, vocab: &Vocabulary, seed: u64) -> Result<(Self, ParameterStore)> {
        config.validate()?;
        let mut store = ParameterStore::new(seed);
        let model = ParserModel::new(&mut Initializer::new(&mut store, seed), config, vocab)?;
        Ok((model, store))
    }

    /// Model view over an existing store; every tensor must be present with
    /// the expected shape.
    pub fn bind(store: &ParameterStore, config: &TrainConfig, vocab: &Vocabulary) -> Result<Self> {
        ParserModel::new(&mut Binder::new(store), config, vocab)
    }

    /// Label ids of `tree`, failing on labels outside the vocabulary.
    pub fn label_ids(vocab: &Vocabulary, tree: &DependencyTree) -> Result<Vec<usize>> {
        tree.labels()
            .iter()
            .map(|l| {
                vocab
                    .labels
                    .get(l)
                    .ok_or_else(|| Error::Config(format!("label {l:?} is not in the vocabulary")))
            })
            .collect()
    }

    pub fn gold_steps(&self, vocab: &Vocabulary, tree: &DependencyTree) -> Result<Vec<ParseStep>> {
        gold_path(tree, &Self::label_ids(vocab, tree)?, self.child_order)
    }

    /// Per-sentence loss `-(arc + label log-likelihood) / n` and its gradient.
    pub fn sentence_loss(
        &self,
        store: &ParameterStore,
        sentence: &EncodedSentence,
        steps: &[ParseStep],
        training: bool,
        rng: &mut RngStream,
    ) -> Result<(f64, Gradients)> {
        let mut g = Graph::new(store);
        let n = sentence.positions() - 1;
        let enc = self.encoder.encode(&mut g, sentence, training, rng)?;
        let ll = self
            .decoder
            .path_log_likelihood(&mut g, enc.states, steps, self.single_root, training, rng)?;
        let total = g.add(ll.arc, ll.label);
        let loss = g.scale(total, -1.0 / n as f64);
        let value = g.scalar(loss);
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("sentence loss {value}")));
        }
        Ok((value, g.backward(loss)))
    }

    /// Arc and label log-likelihoods of a path without building gradients.
    pub fn path_log_likelihood(&self, store: &ParameterStore, sentence: &EncodedSentence, steps: &[ParseStep]) -> Result<(f64, f64)> {
        let mut g = Graph::new(store);
        let mut rng = RngStream::new(0);
        let enc = self.encoder.encode(&mut g, sentence, false, &mut rng)?;
        let ll = self
            .decoder
            .path_log_likelihood(&mut g, enc.states, steps, self.single_root, false, &mut rng)?;
        Ok((g.scalar(ll.arc), g.scalar(ll.label)))
    }

    pub fn trace(&self, store: &ParameterStore, sentence: &EncodedSentence) -> Result<ParseTrace> {
        let mut g = Graph::new(store);
        let mut rng = RngStream::new(0);
        let enc = self.encoder.encode(&mut g, sentence, false, &mut rng)?;
        let attention: Vec<Vec<f64>> = enc.attention.iter().map(|&a| g.value(a).to_vec()).collect();
        let n = sentence.positions() - 1;
        let mut scorer = NeuralScorer::new(&self.decoder, &mut g, enc.states);
        let state = decode_greedy(n, &mut scorer, self.single_root)?;
        let steps = std::mem::take(&mut scorer.trace);
        let (heads, labels) = state.heads_and_labels()?;
        Ok(ParseTrace {
            attention,
            positions: n + 1,
            steps,
            heads,
            labels,
        })
    }

    /// Greedy parse of `sentence` as a tree with label strings.
    pub fn parse(&self, store: &ParameterStore, vocab: &Vocabulary, sentence: &Sentence) -> Result<DependencyTree> {
        let t = self.trace(store, &vocab.encode(sentence))?;
        let labels = t.labels.iter().map(|&l| vocab.labels.symbol(l).to_string()).collect();
        Ok(DependencyTree::new(t.heads, labels))
    }
}
