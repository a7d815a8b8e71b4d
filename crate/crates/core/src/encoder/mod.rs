//! Token representation, self-attention and the BiLSTM contextual encoder.

mod attention;
mod char_cnn;
mod lstm;

pub use attention::{AttentionOutput, HeadParams, SelfAttention};
pub use char_cnn::CharCnn;
pub use lstm::{BiLstm, LstmCarry, LstmParams};

use crate::config::TrainConfig;
use crate::diffcore::{dropout, Graph, ParamId, RngStream, Var};
use crate::error::Result;
use crate::params::{Init, ParamSource};
use crate::treebank::{EncodedSentence, Vocabulary};

#[derive(Clone, Debug)]
pub struct Encoder {
    pub word_embedding: ParamId,
    pub char_embedding: ParamId,
    pub pos_embedding: ParamId,
    pub char_cnn: CharCnn,
    pub attention: SelfAttention,
    pub bilstm: BiLstm,
    pub p_in: f64,
    pub p_rnn: f64,
    pub p_out: f64,
}

pub struct EncoderOutput {
    /// `T × d_model` token rows before attention.
    pub tokens: Var,
    /// `T × d_model` attention output.
    pub attended: Var,
    /// `T × 2·d_h` encoder states, one per position including ROOT.
    pub states: Var,
    pub attention: Vec<Var>,
}

impl Encoder {
    pub fn new(src: &mut impl ParamSource, config: &TrainConfig, vocab: &Vocabulary) -> Result<Self> {
        let word_embedding = src.param("embeddings.word", &[vocab.words.len(), config.d_w], Init::Embedding)?;
        let char_embedding = src.param("embeddings.char", &[vocab.chars.len(), config.char_dim], Init::Embedding)?;
        let pos_embedding = src.param("embeddings.pos", &[vocab.pos.len(), config.pos_dim], Init::Embedding)?;
        let char_cnn = CharCnn::new(src, char_embedding, config.char_dim, config.num_filters, config.kernel_width)?;
        let attention = SelfAttention::new(src, config.d_model(), config.r, config.attention_scale)?;
        let bilstm = BiLstm::new(src, "encoder.bilstm", config.d_model(), config.d_h)?;
        Ok(Encoder {
            word_embedding,
            char_embedding,
            pos_embedding,
            char_cnn,
            attention,
            bilstm,
            p_in: config.p_in,
            p_rnn: config.p_rnn,
            p_out: config.p_out,
        })
    }

    pub fn d_model(&self) -> usize {
        self.attention.d_model
    }

    pub fn output_dim(&self) -> usize {
        self.bilstm.output_dim()
    }

    /// `[word ; char-CNN ; POS]` per position.
    pub fn embed_tokens(&self, g: &mut Graph<'_>, sentence: &EncodedSentence) -> Result<Var> {
        let words = g.param(self.word_embedding);
        let words = g.rows(words, &sentence.words);
        let char_seqs: Vec<&[usize]> = sentence.chars.iter().map(Vec::as_slice).collect();
        let chars = self.char_cnn.forward(g, &char_seqs)?;
        let pos = g.param(self.pos_embedding);
        let pos = g.rows(pos, &sentence.pos);
        Ok(g.concat_cols(&[words, chars, pos]))
    }

    pub fn encode(&self, g: &mut Graph<'_>, sentence: &EncodedSentence, training: bool, rng: &mut RngStream) -> Result<EncoderOutput> {
        let tokens = self.embed_tokens(g, sentence)?;
        let dropped = dropout(g, tokens, self.p_in, training, rng);
        let attn = self.attention.forward(g, dropped);
        let states = self.bilstm.encode(g, attn.output, self.p_rnn, training, rng);
        let states = dropout(g, states, self.p_out, training, rng);
        Ok(EncoderOutput {
            tokens,
            attended: attn.output,
            states,
            attention: attn.probabilities,
        })
    }
}
