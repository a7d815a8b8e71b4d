//! Biaffine arc scoring and the biaffine label classifier.

use crate::diffcore::{Graph, ParamId, Var};
use crate::error::Result;
use crate::params::{Init, ParamSource};

/// Plain-value arc scorer weights for [`biaffine_score`]. `u` is
/// `d_dec × d_enc`, row-major.
#[derive(Clone, Copy, Debug)]
pub struct BiaffineWeights<'a> {
    pub u: &'a [f64],
    pub u_dec: &'a [f64],
    pub u_enc: &'a [f64],
    pub bias: f64,
}

/// `dᵀ U eᵢ + u_decᵀ d + u_encᵀ eᵢ + b` for each legal position `i`;
/// negative infinity where `mask` is false.
pub fn biaffine_score(d: &[f64], enc: &[&[f64]], mask: &[bool], w: &BiaffineWeights<'_>) -> Vec<f64> {
    let d_enc = w.u_enc.len();
    assert_eq!(w.u.len(), d.len() * d_enc, "U must be d_dec × d_enc");
    // dᵀ U, shared by all positions
    let mut du = vec![0.0; d_enc];
    for (k, dk) in d.iter().enumerate() {
        for (j, x) in du.iter_mut().enumerate() {
            *x += dk * w.u[k * d_enc + j];
        }
    }
    let dec_term: f64 = d.iter().zip(w.u_dec).map(|(a, b)| a * b).sum::<f64>() + w.bias;
    enc.iter()
        .zip(mask)
        .map(|(e, &legal)| {
            if !legal {
                return f64::NEG_INFINITY;
            }
            let bilinear: f64 = du.iter().zip(e.iter()).map(|(a, b)| a * b).sum();
            let enc_term: f64 = w.u_enc.iter().zip(e.iter()).map(|(a, b)| a * b).sum();
            bilinear + enc_term + dec_term
        })
        .collect()
}

/// One-layer ELU projection.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Mlp {
    pub fn new(src: &mut impl ParamSource, prefix: &str, input: usize, output: usize) -> Result<Self> {
        Ok(Mlp {
            weight: src.param(&format!("{prefix}.weight"), &[input, output], Init::Xavier)?,
            bias: src.param(&format!("{prefix}.bias"), &[output], Init::Zeros)?,
        })
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: Var) -> Var {
        let w = g.param(self.weight);
        let b = g.param(self.bias);
        let h = g.matmul(x, w);
        let h = g.add_broadcast(h, b);
        g.elu(h)
    }
}

/// Network arc scorer. The constant term `b` of [`biaffine_score`] is left
/// out: the pointer softmax cancels any shift shared by all positions.
#[derive(Clone, Debug)]
pub struct ArcScorer {
    pub dec_mlp: Mlp,
    pub enc_mlp: Mlp,
    pub u: ParamId,
    pub u_dec: ParamId,
    pub u_enc: ParamId,
}

impl ArcScorer {
    pub fn new(src: &mut impl ParamSource, dec_dim: usize, enc_dim: usize, mlp: usize) -> Result<Self> {
        Ok(ArcScorer {
            dec_mlp: Mlp::new(src, "biaffine.arc.dec_mlp", dec_dim, mlp)?,
            enc_mlp: Mlp::new(src, "biaffine.arc.enc_mlp", enc_dim, mlp)?,
            u: src.param("biaffine.arc.u", &[mlp, mlp], Init::Xavier)?,
            u_dec: src.param("biaffine.arc.u_dec", &[mlp], Init::Xavier)?,
            u_enc: src.param("biaffine.arc.u_enc", &[mlp], Init::Xavier)?,
        })
    }

    /// `1 × T` raw scores of the projected decoder row `hd` against every
    /// projected encoder row of `he`.
    pub fn scores(&self, g: &mut Graph<'_>, hd: Var, he: Var) -> Var {
        let u = g.param(self.u);
        let hdu = g.matmul(hd, u);
        let bilinear = g.matmul_bt(hdu, he);
        let u_enc = g.param(self.u_enc);
        let enc_term = g.matmul_bt(u_enc, he);
        let u_dec = g.param(self.u_dec);
        let dec_term = g.matmul_bt(hd, u_dec);
        let s = g.add(bilinear, enc_term);
        g.add_broadcast(s, dec_term)
    }
}

#[derive(Clone, Debug)]
pub struct LabelScorer {
    pub dec_mlp: Mlp,
    pub enc_mlp: Mlp,
    /// `mlp × labels × mlp`
    pub bilinear: ParamId,
    /// `2·mlp × labels`
    pub linear: ParamId,
    pub bias: ParamId,
    pub labels: usize,
    pub mlp: usize,
}

impl LabelScorer {
    pub fn new(src: &mut impl ParamSource, dec_dim: usize, enc_dim: usize, mlp: usize, labels: usize) -> Result<Self> {
        Ok(LabelScorer {
            dec_mlp: Mlp::new(src, "biaffine.label.dec_mlp", dec_dim, mlp)?,
            enc_mlp: Mlp::new(src, "biaffine.label.enc_mlp", enc_dim, mlp)?,
            bilinear: src.param("biaffine.label.bilinear", &[mlp, labels, mlp], Init::Xavier)?,
            linear: src.param("biaffine.label.linear", &[2 * mlp, labels], Init::Xavier)?,
            bias: src.param("biaffine.label.bias", &[labels], Init::Zeros)?,
            labels,
            mlp,
        })
    }

    /// `1 × labels` scores for one arc from projected rows `hd` (head side)
    /// and `he` (child side).
    pub fn scores(&self, g: &mut Graph<'_>, hd: Var, he: Var) -> Var {
        let u = g.param(self.bilinear);
        let hdu = g.matmul(hd, u);
        let hdu = g.reshape(hdu, self.labels, self.mlp);
        let bilinear = g.matmul_bt(hdu, he);
        let bilinear = g.reshape(bilinear, 1, self.labels);
        let both = g.concat_cols(&[hd, he]);
        let w = g.param(self.linear);
        let linear = g.matmul(both, w);
        let b = g.param(self.bias);
        let linear = g.add(linear, b);
        g.add(bilinear, linear)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_toy() {
        let w = BiaffineWeights {
            u: &[2.0],
            u_dec: &[0.0],
            u_enc: &[0.0],
            bias: 1.0,
        };
        let s = biaffine_score(&[3.0], &[&[5.0]], &[true], &w);
        assert_eq!(s, vec![31.0]);
    }

    #[test]
    fn zero_weights_give_equal_legal_scores() {
        let w = BiaffineWeights {
            u: &[0.0; 4],
            u_dec: &[0.0; 2],
            u_enc: &[0.0; 2],
            bias: 0.0,
        };
        let s = biaffine_score(&[1.0, 2.0], &[&[1.0, 0.0], &[3.0, 3.0], &[-1.0, 2.0]], &[true, false, true], &w);
        assert_eq!(s[0], s[2]);
        assert_eq!(s[1], f64::NEG_INFINITY);
        let p = crate::diffcore::softmax(&s).unwrap();
        assert_eq!(p[1], 0.0);
        assert_eq!(p[0], 0.5);
    }
}
