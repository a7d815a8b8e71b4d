use crate::diffcore::{Graph, ParamId, Var};
use crate::error::{Error, Result};
use crate::params::{Init, ParamSource};
use crate::treebank::PAD;

/// Convolution over character embeddings followed by max-over-time pooling
/// and `tanh`.
#[derive(Clone, Debug)]
pub struct CharCnn {
    pub embedding: ParamId,
    pub filters: ParamId,
    pub bias: ParamId,
    pub char_dim: usize,
    pub num_filters: usize,
    pub width: usize,
}

impl CharCnn {
    pub fn new(
        src: &mut impl ParamSource,
        embedding: ParamId,
        char_dim: usize,
        num_filters: usize,
        width: usize,
    ) -> Result<Self> {
        Ok(CharCnn {
            embedding,
            filters: src.param("encoder.char_cnn.filters", &[width * char_dim, num_filters], Init::Xavier)?,
            bias: src.param("encoder.char_cnn.bias", &[num_filters], Init::Zeros)?,
            char_dim,
            num_filters,
            width,
        })
    }

    /// Window start offsets per word; words shorter than the kernel are
    /// right-padded with PAD.
    fn windows(&self, words: &[&[usize]]) -> Result<(Vec<usize>, Vec<(usize, usize)>)> {
        let mut gather = Vec::new();
        let mut spans = Vec::with_capacity(words.len());
        let mut windows = 0;
        for chars in words {
            if chars.is_empty() {
                return Err(Error::Empty("character sequence".into()));
            }
            let mut padded = chars.to_vec();
            padded.resize(padded.len().max(self.width), PAD);
            let count = padded.len() - self.width + 1;
            for start in 0..count {
                gather.extend_from_slice(&padded[start..start + self.width]);
            }
            spans.push((windows, count));
            windows += count;
        }
        Ok((gather, spans))
    }

    /// One `1 × num_filters` row per word, stacked.
    pub fn forward(&self, g: &mut Graph<'_>, words: &[&[usize]]) -> Result<Var> {
        let (gather, spans) = self.windows(words)?;
        let total: usize = spans.iter().map(|s| s.1).sum();
        let table = g.param(self.embedding);
        let chars = g.rows(table, &gather);
        let windows = g.reshape(chars, total, self.width * self.char_dim);
        let w = g.param(self.filters);
        let b = g.param(self.bias);
        let conv = g.matmul(windows, w);
        let conv = g.add_broadcast(conv, b);
        let pooled: Vec<Var> = spans
            .iter()
            .map(|&(start, count)| {
                let idx: Vec<usize> = (start..start + count).collect();
                let rows = g.rows(conv, &idx);
                g.max_rows(rows)
            })
            .collect();
        let stacked = g.concat_rows(&pooled);
        Ok(g.tanh(stacked))
    }
}
