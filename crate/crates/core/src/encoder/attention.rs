use crate::config::AttentionScale;
use crate::diffcore::{Graph, ParamId, Var};
use crate::error::Result;
use crate::params::{Init, ParamSource};

#[derive(Clone, Debug)]
pub struct HeadParams {
    /// Each `(d_model / heads) × d_model`.
    pub query: ParamId,
    pub key: ParamId,
    pub value: ParamId,
}

/// Multi-head scaled dot-product self-attention without residual or
/// normalization.
#[derive(Clone, Debug)]
pub struct SelfAttention {
    pub heads: Vec<HeadParams>,
    /// `d_model × d_model`
    pub output: ParamId,
    pub d_model: usize,
    pub scale: AttentionScale,
}

pub struct AttentionOutput {
    pub output: Var,
    /// Row-stochastic `T × T` attention matrix per head.
    pub probabilities: Vec<Var>,
}

impl SelfAttention {
    pub fn new(src: &mut impl ParamSource, d_model: usize, heads: usize, scale: AttentionScale) -> Result<Self> {
        let d_head = d_model / heads;
        let heads = (0..heads)
            .map(|i| {
                Ok(HeadParams {
                    query: src.param(&format!("encoder.attn.head{i}.query"), &[d_head, d_model], Init::Xavier)?,
                    key: src.param(&format!("encoder.attn.head{i}.key"), &[d_head, d_model], Init::Xavier)?,
                    value: src.param(&format!("encoder.attn.head{i}.value"), &[d_head, d_model], Init::Xavier)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SelfAttention {
            output: src.param("encoder.attn.output", &[d_model, d_model], Init::Xavier)?,
            heads,
            d_model,
            scale,
        })
    }

    pub fn d_head(&self) -> usize {
        self.d_model / self.heads.len()
    }

    pub fn scale_factor(&self) -> f64 {
        match self.scale {
            AttentionScale::PerHead => 1.0 / (self.d_head() as f64).sqrt(),
            AttentionScale::ModelDim => 1.0 / (self.d_model as f64).sqrt(),
        }
    }

    /// Rows of `x` attend to each other; output has the shape of `x`.
    pub fn forward(&self, g: &mut Graph<'_>, x: Var) -> AttentionOutput {
        let factor = self.scale_factor();
        let mut outputs = Vec::with_capacity(self.heads.len());
        let mut probabilities = Vec::with_capacity(self.heads.len());
        for head in &self.heads {
            let wq = g.param(head.query);
            let wk = g.param(head.key);
            let wv = g.param(head.value);
            let q = g.matmul_bt(x, wq);
            let k = g.matmul_bt(x, wk);
            let v = g.matmul_bt(x, wv);
            let scores = g.matmul_bt(q, k);
            let scores = g.scale(scores, factor);
            let p = g.softmax_rows(scores);
            outputs.push(g.matmul(p, v));
            probabilities.push(p);
        }
        let concat = g.concat_cols(&outputs);
        let wm = g.param(self.output);
        AttentionOutput {
            output: g.matmul_bt(concat, wm),
            probabilities,
        }
    }
}
