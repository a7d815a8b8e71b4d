//! Pointer-network decoder over the stack-pointer transition system.

mod biaffine;
mod greedy;
mod transition;

pub use biaffine::{biaffine_score, ArcScorer, BiaffineWeights, LabelScorer, Mlp};
pub use greedy::{argmax_legal, decode_greedy, OracleScorer, TransitionScorer};
pub use transition::{gold_path, ordered_children, replay, DecoderState, ParseStep};

use crate::config::TrainConfig;
use crate::diffcore::{softmax, Graph, RngStream, Var};
use crate::encoder::{LstmCarry, LstmParams};
use crate::error::Result;
use crate::params::ParamSource;

#[derive(Clone, Debug)]
pub struct PointerDecoder {
    pub lstm: LstmParams,
    pub arc: ArcScorer,
    pub label: LabelScorer,
    pub p_rnn: f64,
}

/// Encoder-side projections shared by every step of one sentence.
#[derive(Clone, Copy, Debug)]
pub struct DecoderInputs {
    /// Input projections of the decoder LSTM for every position.
    pub projected: Var,
    pub arc_enc: Var,
    pub label_enc: Var,
}

/// Log-likelihood terms of a teacher-forced path.
#[derive(Clone, Copy, Debug)]
pub struct PathLikelihood {
    pub arc: Var,
    pub label: Var,
}

impl PointerDecoder {
    pub fn new(src: &mut impl ParamSource, config: &TrainConfig, enc_dim: usize, labels: usize) -> Result<Self> {
        let h = config.decoder_hidden;
        Ok(PointerDecoder {
            lstm: LstmParams::new(src, "decoder.lstm", enc_dim, h)?,
            arc: ArcScorer::new(src, h, enc_dim, config.arc_mlp)?,
            label: LabelScorer::new(src, h, enc_dim, config.label_mlp, labels)?,
            p_rnn: config.p_rnn,
        })
    }

    pub fn labels(&self) -> usize {
        self.label.labels
    }

    pub fn prepare(&self, g: &mut Graph<'_>, states: Var) -> DecoderInputs {
        DecoderInputs {
            projected: self.lstm.project_inputs(g, states),
            arc_enc: self.arc.enc_mlp.forward(g, states),
            label_enc: self.label.enc_mlp.forward(g, states),
        }
    }

    /// Feeds the encoder state of `top` into the decoder LSTM.
    pub fn advance(&self, g: &mut Graph<'_>, inputs: &DecoderInputs, top: usize, carry: LstmCarry, mask: Option<&[f64]>) -> LstmCarry {
        let x = g.rows(inputs.projected, &[top]);
        self.lstm.step(g, x, carry, mask)
    }

    /// `1 × T` raw pointer scores.
    pub fn pointer_scores(&self, g: &mut Graph<'_>, inputs: &DecoderInputs, h: Var) -> Var {
        let hd = self.arc.dec_mlp.forward(g, h);
        self.arc.scores(g, hd, inputs.arc_enc)
    }

    /// `1 × labels` raw label scores for the arc from the decoder state `h`
    /// to `child`.
    pub fn label_scores(&self, g: &mut Graph<'_>, inputs: &DecoderInputs, h: Var, child: usize) -> Var {
        let hd = self.label.dec_mlp.forward(g, h);
        let he = g.rows(inputs.label_enc, &[child]);
        self.label.scores(g, hd, he)
    }

    /// Log-probability of following `steps` from the initial state, with
    /// arc and label terms kept apart.
    pub fn path_log_likelihood(
        &self,
        g: &mut Graph<'_>,
        states: Var,
        steps: &[ParseStep],
        single_root: bool,
        training: bool,
        rng: &mut RngStream,
    ) -> Result<PathLikelihood> {
        let n = g.shape(states).0 - 1;
        let inputs = self.prepare(g, states);
        let mask = self.lstm.recurrent_mask(self.p_rnn, training, rng);
        let mut carry = self.lstm.zero_carry(g);
        let mut state = DecoderState::new(n, single_root);
        let mut arc_terms = Vec::with_capacity(steps.len());
        let mut label_terms = Vec::new();
        for &step in steps {
            let top = state
                .top()
                .ok_or_else(|| crate::error::Error::IllegalTransition("path continues past the final pop".into()))?;
            carry = self.advance(g, &inputs, top, carry, mask.as_deref());
            let scores = self.pointer_scores(g, &inputs, carry.h);
            let scores = g.mask_fill(scores, &state.legal_mask());
            let logp = g.log_softmax_rows(scores);
            state.apply(step)?;
            arc_terms.push(g.pick(logp, step.target));
            if let Some(label) = step.label {
                let ls = self.label_scores(g, &inputs, carry.h, step.target);
                let lp = g.log_softmax_rows(ls);
                label_terms.push(g.pick(lp, label));
            }
        }
        let arc = g.add_all(&arc_terms);
        let label = if label_terms.is_empty() {
            g.zeros(1, 1)
        } else {
            g.add_all(&label_terms)
        };
        Ok(PathLikelihood { arc, label })
    }
}

/// Distributions observed at one decoding step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepTrace {
    pub top: usize,
    /// Pointer distribution over positions `0..=n`, zero on illegal ones.
    pub pointer: Vec<f64>,
    /// Label distribution when the step created an arc.
    pub label: Option<Vec<f64>>,
}

/// [`TransitionScorer`] backed by the network, recording every distribution.
pub struct NeuralScorer<'d, 'g, 'p> {
    decoder: &'d PointerDecoder,
    graph: &'g mut Graph<'p>,
    inputs: DecoderInputs,
    carry: LstmCarry,
    pub trace: Vec<StepTrace>,
}

impl<'d, 'g, 'p> NeuralScorer<'d, 'g, 'p> {
    pub fn new(decoder: &'d PointerDecoder, graph: &'g mut Graph<'p>, states: Var) -> Self {
        let inputs = decoder.prepare(graph, states);
        let carry = decoder.lstm.zero_carry(graph);
        NeuralScorer {
            decoder,
            graph,
            inputs,
            carry,
            trace: Vec::new(),
        }
    }
}

impl TransitionScorer for NeuralScorer<'_, '_, '_> {
    fn pointer_scores(&mut self, state: &DecoderState) -> Result<Vec<f64>> {
        let top = state.top().expect("scoring a terminal state");
        self.carry = self.decoder.advance(self.graph, &self.inputs, top, self.carry, None);
        let v = self.decoder.pointer_scores(self.graph, &self.inputs, self.carry.h);
        let scores = self.graph.value(v).to_vec();
        let masked: Vec<f64> = scores
            .iter()
            .zip(state.legal_mask())
            .map(|(&s, ok)| if ok { s } else { f64::NEG_INFINITY })
            .collect();
        self.trace.push(StepTrace {
            top,
            pointer: softmax(&masked)?,
            label: None,
        });
        Ok(scores)
    }

    fn label(&mut self, _state: &DecoderState, child: usize) -> Result<usize> {
        let v = self.decoder.label_scores(self.graph, &self.inputs, self.carry.h, child);
        let scores = self.graph.value(v).to_vec();
        let legal = vec![true; scores.len()];
        let best = argmax_legal(&scores, &legal).ok_or_else(|| crate::error::Error::Empty("no labels".into()))?;
        if let Some(last) = self.trace.last_mut() {
            last.label = Some(softmax(&scores)?);
        }
        Ok(best)
    }
}
