use crate::diffcore::{dropout_mask, Graph, ParamId, RngStream, Var};
use crate::error::Result;
use crate::params::{Init, ParamSource};

/// Weights of one LSTM direction. Gate blocks are ordered input, forget,
/// cell, output.
#[derive(Clone, Debug)]
pub struct LstmParams {
    pub w_input: ParamId,
    pub w_hidden: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub hidden: usize,
}

/// Hidden and cell state carried between steps.
#[derive(Clone, Copy, Debug)]
pub struct LstmCarry {
    pub h: Var,
    pub c: Var,
}

impl LstmParams {
    pub fn new(src: &mut impl ParamSource, prefix: &str, input: usize, hidden: usize) -> Result<Self> {
        Ok(LstmParams {
            w_input: src.param(&format!("{prefix}.w_input"), &[input, 4 * hidden], Init::Xavier)?,
            w_hidden: src.param(&format!("{prefix}.w_hidden"), &[hidden, 4 * hidden], Init::Xavier)?,
            bias: src.param(&format!("{prefix}.bias"), &[4 * hidden], Init::Zeros)?,
            input,
            hidden,
        })
    }

    pub fn zero_carry(&self, g: &mut Graph<'_>) -> LstmCarry {
        LstmCarry {
            h: g.zeros(1, self.hidden),
            c: g.zeros(1, self.hidden),
        }
    }

    /// Input projections `X·W + b` for every row of `x` at once.
    pub fn project_inputs(&self, g: &mut Graph<'_>, x: Var) -> Var {
        let w = g.param(self.w_input);
        let b = g.param(self.bias);
        let xw = g.matmul(x, w);
        g.add_broadcast(xw, b)
    }

    /// One step given a pre-projected input row. `recurrent_mask` is applied
    /// to the incoming hidden state.
    pub fn step(&self, g: &mut Graph<'_>, projected: Var, carry: LstmCarry, recurrent_mask: Option<&[f64]>) -> LstmCarry {
        let n = self.hidden;
        let h_in = match recurrent_mask {
            Some(m) => g.mul_const(carry.h, m.to_vec()),
            None => carry.h,
        };
        let u = g.param(self.w_hidden);
        let hu = g.matmul(h_in, u);
        let gates = g.add(projected, hu);
        let sig_if = g.slice_cols(gates, 0, 2 * n);
        let sig_if = g.sigmoid(sig_if);
        let i = g.slice_cols(sig_if, 0, n);
        let f = g.slice_cols(sig_if, n, n);
        let cand = g.slice_cols(gates, 2 * n, n);
        let cand = g.tanh(cand);
        let o = g.slice_cols(gates, 3 * n, n);
        let o = g.sigmoid(o);
        let keep = g.mul(f, carry.c);
        let write = g.mul(i, cand);
        let c = g.add(keep, write);
        let tc = g.tanh(c);
        let h = g.mul(o, tc);
        LstmCarry { h, c }
    }

    /// Runs over the rows of `x` in the given order; returns the hidden state
    /// for each row, indexed by row.
    pub fn run(&self, g: &mut Graph<'_>, x: Var, order: impl Iterator<Item = usize>, recurrent_mask: Option<&[f64]>) -> Vec<Option<Var>> {
        let rows = g.shape(x).0;
        let projected = self.project_inputs(g, x);
        let mut carry = self.zero_carry(g);
        let mut out = vec![None; rows];
        for t in order {
            let p = g.rows(projected, &[t]);
            carry = self.step(g, p, carry, recurrent_mask);
            out[t] = Some(carry.h);
        }
        out
    }

    /// Variational recurrent dropout mask, fixed across time steps.
    pub fn recurrent_mask(&self, rate: f64, training: bool, rng: &mut RngStream) -> Option<Vec<f64>> {
        (training && rate > 0.0).then(|| dropout_mask(self.hidden, rate, rng))
    }
}

/// Forward and backward LSTMs whose states are concatenated per position.
#[derive(Clone, Debug)]
pub struct BiLstm {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

impl BiLstm {
    pub fn new(src: &mut impl ParamSource, prefix: &str, input: usize, hidden: usize) -> Result<Self> {
        Ok(BiLstm {
            forward: LstmParams::new(src, &format!("{prefix}.forward"), input, hidden)?,
            backward: LstmParams::new(src, &format!("{prefix}.backward"), input, hidden)?,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.forward.hidden + self.backward.hidden
    }

    /// `rows × 2·hidden` states; row `t` is `[forward_t ; backward_t]`.
    pub fn encode(&self, g: &mut Graph<'_>, x: Var, p_rnn: f64, training: bool, rng: &mut RngStream) -> Var {
        let rows = g.shape(x).0;
        let fmask = self.forward.recurrent_mask(p_rnn, training, rng);
        let bmask = self.backward.recurrent_mask(p_rnn, training, rng);
        let fwd = self.forward.run(g, x, 0..rows, fmask.as_deref());
        let bwd = self.backward.run(g, x, (0..rows).rev(), bmask.as_deref());
        let fwd: Vec<Var> = fwd.into_iter().map(Option::unwrap).collect();
        let bwd: Vec<Var> = bwd.into_iter().map(Option::unwrap).collect();
        let f = g.concat_rows(&fwd);
        let b = g.concat_rows(&bwd);
        g.concat_cols(&[f, b])
    }
}
