//! Tape-based reverse-mode differentiation over row-major matrices.
//!
//! A [`Graph`] borrows a [`ParameterStore`] for its lifetime. Parameters enter
//! the tape by reference (no copy); every other node owns its value. Calling
//! [`Graph::backward`] on a scalar node walks the tape in reverse and returns
//! gradients for every parameter that contributed to it.

use super::softmax::{log_softmax, softmax};
use super::tensor::{Gradients, ParamId, ParameterStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    /// a · bᵀ
    MatMulBt(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    /// a + b where b is 1×cols (row broadcast) or 1×1 (scalar broadcast)
    AddBroadcast(Var, Var),
    Scale(Var, f64),
    MulConst(Var, Vec<f64>),
    Sigmoid(Var),
    Tanh(Var),
    Elu(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    Rows(Var, Vec<usize>),
    Reshape(Var),
    Transpose(Var),
    MaxRows(Var, Vec<usize>),
    MaskFill(Var, Vec<bool>),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    Pick(Var, usize),
    Sum(Var),
}

#[derive(Debug)]
struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    op: Op,
    needs_grad: bool,
}

pub struct Graph<'p> {
    store: &'p ParameterStore,
    nodes: Vec<Node>,
}

fn matmul_into(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

impl<'p> Graph<'p> {
    pub fn new(store: &'p ParameterStore) -> Self {
        Graph {
            store,
            nodes: Vec::with_capacity(256),
        }
    }

    pub fn store(&self) -> &'p ParameterStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = &self.nodes[v.0];
        (n.rows, n.cols)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        let node = &self.nodes[v.0];
        match node.op {
            Op::Param(id) => self.store.get(id).values(),
            _ => &node.value,
        }
    }

    pub fn row(&self, v: Var, i: usize) -> &[f64] {
        let cols = self.nodes[v.0].cols;
        &self.value(v)[i * cols..(i + 1) * cols]
    }

    /// Value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        debug_assert_eq!(self.shape(v), (1, 1));
        self.value(v)[0]
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f64>, op: Op) -> Var {
        debug_assert!(matches!(op, Op::Param(_)) || value.len() == rows * cols);
        let needs_grad = match &op {
            Op::Constant => false,
            Op::Param(_) => true,
            Op::MatMul(a, b)
            | Op::MatMulBt(a, b)
            | Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::AddBroadcast(a, b) => self.needs(*a) || self.needs(*b),
            Op::ConcatCols(vs) | Op::ConcatRows(vs) => vs.iter().any(|v| self.needs(*v)),
            Op::Scale(a, _)
            | Op::MulConst(a, _)
            | Op::Sigmoid(a)
            | Op::Tanh(a)
            | Op::Elu(a)
            | Op::SliceCols(a, _)
            | Op::Rows(a, _)
            | Op::Reshape(a)
            | Op::Transpose(a)
            | Op::MaxRows(a, _)
            | Op::MaskFill(a, _)
            | Op::SoftmaxRows(a)
            | Op::LogSoftmaxRows(a)
            | Op::Pick(a, _)
            | Op::Sum(a) => self.needs(*a),
        };
        self.nodes.push(Node {
            rows,
            cols,
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn constant(&mut self, rows: usize, cols: usize, value: Vec<f64>) -> Var {
        assert_eq!(value.len(), rows * cols, "constant shape mismatch");
        self.push(rows, cols, value, Op::Constant)
    }

    pub fn zeros(&mut self, rows: usize, cols: usize) -> Var {
        self.constant(rows, cols, vec![0.0; rows * cols])
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let (rows, cols) = self.store.get(id).matrix_dims();
        self.push(rows, cols, Vec::new(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        assert_eq!(k, k2, "matmul inner dimensions {k} vs {k2}");
        let mut out = vec![0.0; m * n];
        matmul_into(self.value(a), self.value(b), m, k, n, &mut out);
        self.push(m, n, out, Op::MatMul(a, b))
    }

    /// `a · bᵀ`
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.shape(a);
        let (n, k2) = self.shape(b);
        assert_eq!(k, k2, "matmul_bt inner dimensions {k} vs {k2}");
        let av = self.value(a);
        let bv = self.value(b);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let ar = &av[i * k..(i + 1) * k];
            for j in 0..n {
                out[i * n + j] = dot(ar, &bv[j * k..(j + 1) * k]);
            }
        }
        self.push(m, n, out, Op::MatMulBt(a, b))
    }

    fn zip_same(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> (usize, usize, Vec<f64>) {
        let sa = self.shape(a);
        assert_eq!(sa, self.shape(b), "elementwise shape mismatch");
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| f(*x, *y))
            .collect();
        (sa.0, sa.1, out)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (r, c, out) = self.zip_same(a, b, |x, y| x + y);
        self.push(r, c, out, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let (r, c, out) = self.zip_same(a, b, |x, y| x - y);
        self.push(r, c, out, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (r, c, out) = self.zip_same(a, b, |x, y| x * y);
        self.push(r, c, out, Op::Mul(a, b))
    }

    /// Adds a 1×cols row (or a 1×1 scalar) to every row of `a`.
    pub fn add_broadcast(&mut self, a: Var, b: Var) -> Var {
        let (r, c) = self.shape(a);
        let (br, bc) = self.shape(b);
        assert_eq!(br, 1, "broadcast operand must be a single row");
        assert!(bc == c || bc == 1, "broadcast width {bc} vs {c}");
        let bv = self.value(b);
        let out = self
            .value(a)
            .iter()
            .enumerate()
            .map(|(i, x)| x + if bc == 1 { bv[0] } else { bv[i % c] })
            .collect();
        self.push(r, c, out, Op::AddBroadcast(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let (r, c) = self.shape(a);
        let out = self.value(a).iter().map(|x| x * s).collect();
        self.push(r, c, out, Op::Scale(a, s))
    }

    /// Elementwise product with a constant array (dropout masks).
    pub fn mul_const(&mut self, a: Var, mask: Vec<f64>) -> Var {
        let (r, c) = self.shape(a);
        assert_eq!(mask.len(), r * c, "mask shape mismatch");
        let out = self.value(a).iter().zip(&mask).map(|(x, m)| x * m).collect();
        self.push(r, c, out, Op::MulConst(a, mask))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let out = self
            .value(a)
            .iter()
            .map(|x| 1.0 / (1.0 + (-x).exp()))
            .collect();
        self.push(r, c, out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let out = self.value(a).iter().map(|x| x.tanh()).collect();
        self.push(r, c, out, Op::Tanh(a))
    }

    /// Exponential linear unit with unit scale (smooth at zero).
    pub fn elu(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let out = self.value(a).iter().map(|x| elu(*x)).collect();
        self.push(r, c, out, Op::Elu(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let rows = self.shape(parts[0]).0;
        let widths: Vec<usize> = parts
            .iter()
            .map(|p| {
                let (r, c) = self.shape(*p);
                assert_eq!(r, rows, "concat_cols row mismatch");
                c
            })
            .collect();
        let cols: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for (p, w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(*p)[i * w..(i + 1) * w]);
            }
        }
        self.push(rows, cols, out, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let cols = self.shape(parts[0]).1;
        let mut rows = 0;
        let mut out = Vec::new();
        for p in parts {
            let (r, c) = self.shape(*p);
            assert_eq!(c, cols, "concat_rows column mismatch");
            rows += r;
            out.extend_from_slice(self.value(*p));
        }
        self.push(rows, cols, out, Op::ConcatRows(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let (r, c) = self.shape(a);
        assert!(start + len <= c, "slice out of range");
        let av = self.value(a);
        let mut out = Vec::with_capacity(r * len);
        for i in 0..r {
            out.extend_from_slice(&av[i * c + start..i * c + start + len]);
        }
        self.push(r, len, out, Op::SliceCols(a, start))
    }

    /// Gathers rows by index (embedding lookup when `a` is a parameter).
    pub fn rows(&mut self, a: Var, indices: &[usize]) -> Var {
        let (r, c) = self.shape(a);
        let av = self.value(a);
        let mut out = Vec::with_capacity(indices.len() * c);
        for &i in indices {
            assert!(i < r, "row index {i} out of range {r}");
            out.extend_from_slice(&av[i * c..(i + 1) * c]);
        }
        self.push(indices.len(), c, out, Op::Rows(a, indices.to_vec()))
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let (r, c) = self.shape(a);
        assert_eq!(r * c, rows * cols, "reshape changes element count");
        let out = self.value(a).to_vec();
        self.push(rows, cols, out, Op::Reshape(a))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let av = self.value(a);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = av[i * c + j];
            }
        }
        self.push(c, r, out, Op::Transpose(a))
    }

    /// Column-wise maximum over rows (max-over-time pooling). Ties resolve to
    /// the earliest row.
    pub fn max_rows(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        assert!(r > 0, "max over zero rows");
        let av = self.value(a);
        let mut arg = vec![0usize; c];
        let mut out = av[..c].to_vec();
        for i in 1..r {
            for j in 0..c {
                if av[i * c + j] > out[j] {
                    out[j] = av[i * c + j];
                    arg[j] = i;
                }
            }
        }
        self.push(1, c, out, Op::MaxRows(a, arg))
    }

    /// Sets entries whose mask is `false` to negative infinity.
    pub fn mask_fill(&mut self, a: Var, keep: &[bool]) -> Var {
        let (r, c) = self.shape(a);
        assert_eq!(keep.len(), r * c, "mask shape mismatch");
        let out = self
            .value(a)
            .iter()
            .zip(keep)
            .map(|(x, k)| if *k { *x } else { f64::NEG_INFINITY })
            .collect();
        self.push(r, c, out, Op::MaskFill(a, keep.to_vec()))
    }

    /// Row-wise softmax.
    ///
    /// # Panics
    ///
    /// Panics when a row is entirely masked; callers guarantee at least one
    /// finite entry per row.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let av = self.value(a);
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            out.extend(softmax(&av[i * c..(i + 1) * c]).expect("softmax row fully masked"));
        }
        self.push(r, c, out, Op::SoftmaxRows(a))
    }

    /// Row-wise log-softmax. Masked entries stay at negative infinity.
    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let av = self.value(a);
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            out.extend(log_softmax(&av[i * c..(i + 1) * c]).expect("softmax row fully masked"));
        }
        self.push(r, c, out, Op::LogSoftmaxRows(a))
    }

    /// Selects one element (flat row-major index) as a 1×1 node.
    pub fn pick(&mut self, a: Var, index: usize) -> Var {
        let v = self.value(a)[index];
        self.push(1, 1, vec![v], Op::Pick(a, index))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().sum();
        self.push(1, 1, vec![s], Op::Sum(a))
    }

    /// Sum of several nodes of identical shape.
    pub fn add_all(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let mut acc = parts[0];
        for p in &parts[1..] {
            acc = self.add(acc, *p);
        }
        acc
    }

    /// Reverse pass from a scalar node. Returns parameter gradients.
    pub fn backward(&self, root: Var) -> Gradients {
        assert_eq!(self.shape(root), (1, 1), "backward needs a scalar root");
        let mut params = Gradients::zeros_like(self.store);
        let mut grads: Vec<Vec<f64>> = (0..=root.0).map(|_| Vec::new()).collect();
        grads[root.0] = vec![1.0];

        for idx in (0..=root.0).rev() {
            if grads[idx].is_empty() || !self.nodes[idx].needs_grad {
                continue;
            }
            let g = std::mem::take(&mut grads[idx]);
            let node = &self.nodes[idx];
            self.propagate(node, &g, &mut grads, &mut params);
        }
        params
    }

    fn accumulate(&self, grads: &mut [Vec<f64>], v: Var, f: impl FnOnce(&mut [f64])) {
        if !self.needs(v) {
            return;
        }
        let n = &self.nodes[v.0];
        let slot = &mut grads[v.0];
        if slot.is_empty() {
            *slot = vec![0.0; n.rows * n.cols];
        }
        f(slot);
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Vec<f64>], params: &mut Gradients) {
        let (rows, cols) = (node.rows, node.cols);
        match &node.op {
            Op::Constant => {}
            Op::Param(id) => {
                let buf = params.buffer_mut(*id, g.len());
                for (b, x) in buf.iter_mut().zip(g) {
                    *b += x;
                }
            }
            Op::MatMul(a, b) => {
                let (m, k) = self.shape(*a);
                let n = cols;
                let av = self.value(*a);
                let bv = self.value(*b);
                // dA = G · Bᵀ
                self.accumulate(grads, *a, |ga| {
                    for i in 0..m {
                        let gr = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            ga[i * k + p] += dot(gr, &bv[p * n..(p + 1) * n]);
                        }
                    }
                });
                // dB = Aᵀ · G
                self.accumulate(grads, *b, |gb| {
                    for i in 0..m {
                        let gr = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let av = av[i * k + p];
                            if av == 0.0 {
                                continue;
                            }
                            for (x, gv) in gb[p * n..(p + 1) * n].iter_mut().zip(gr) {
                                *x += av * gv;
                            }
                        }
                    }
                });
            }
            Op::MatMulBt(a, b) => {
                let (m, k) = self.shape(*a);
                let n = cols;
                let av = self.value(*a);
                let bv = self.value(*b);
                // out = A Bᵀ: dA = G B, dB = Gᵀ A
                self.accumulate(grads, *a, |ga| {
                    for i in 0..m {
                        for j in 0..n {
                            let gv = g[i * n + j];
                            if gv == 0.0 {
                                continue;
                            }
                            for (x, y) in ga[i * k..(i + 1) * k].iter_mut().zip(&bv[j * k..(j + 1) * k]) {
                                *x += gv * y;
                            }
                        }
                    }
                });
                self.accumulate(grads, *b, |gb| {
                    for i in 0..m {
                        for j in 0..n {
                            let gv = g[i * n + j];
                            if gv == 0.0 {
                                continue;
                            }
                            for (x, y) in gb[j * k..(j + 1) * k].iter_mut().zip(&av[i * k..(i + 1) * k]) {
                                *x += gv * y;
                            }
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, |ga| add_into(ga, g));
                self.accumulate(grads, *b, |gb| add_into(gb, g));
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, |ga| add_into(ga, g));
                self.accumulate(grads, *b, |gb| {
                    for (x, y) in gb.iter_mut().zip(g) {
                        *x -= y;
                    }
                });
            }
            Op::Mul(a, b) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                self.accumulate(grads, *a, |ga| {
                    for ((x, y), gv) in ga.iter_mut().zip(bv).zip(g) {
                        *x += y * gv;
                    }
                });
                self.accumulate(grads, *b, |gb| {
                    for ((x, y), gv) in gb.iter_mut().zip(av).zip(g) {
                        *x += y * gv;
                    }
                });
            }
            Op::AddBroadcast(a, b) => {
                self.accumulate(grads, *a, |ga| add_into(ga, g));
                let bc = self.shape(*b).1;
                self.accumulate(grads, *b, |gb| {
                    for (i, gv) in g.iter().enumerate() {
                        gb[if bc == 1 { 0 } else { i % cols }] += gv;
                    }
                });
            }
            Op::Scale(a, s) => {
                self.accumulate(grads, *a, |ga| {
                    for (x, gv) in ga.iter_mut().zip(g) {
                        *x += s * gv;
                    }
                });
            }
            Op::MulConst(a, mask) => {
                self.accumulate(grads, *a, |ga| {
                    for ((x, m), gv) in ga.iter_mut().zip(mask).zip(g) {
                        *x += m * gv;
                    }
                });
            }
            Op::Sigmoid(a) => {
                let y = &node.value;
                self.accumulate(grads, *a, |ga| {
                    for ((x, y), gv) in ga.iter_mut().zip(y).zip(g) {
                        *x += gv * y * (1.0 - y);
                    }
                });
            }
            Op::Tanh(a) => {
                let y = &node.value;
                self.accumulate(grads, *a, |ga| {
                    for ((x, y), gv) in ga.iter_mut().zip(y).zip(g) {
                        *x += gv * (1.0 - y * y);
                    }
                });
            }
            Op::Elu(a) => {
                let y = &node.value;
                let input = self.value(*a);
                self.accumulate(grads, *a, |ga| {
                    for (((x, y), i), gv) in ga.iter_mut().zip(y).zip(input).zip(g) {
                        *x += gv * if *i > 0.0 { 1.0 } else { y + 1.0 };
                    }
                });
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for p in parts {
                    let w = self.shape(*p).1;
                    self.accumulate(grads, *p, |gp| {
                        for i in 0..rows {
                            add_into(
                                &mut gp[i * w..(i + 1) * w],
                                &g[i * cols + offset..i * cols + offset + w],
                            );
                        }
                    });
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let len = self.nodes[p.0].rows * cols;
                    self.accumulate(grads, *p, |gp| add_into(gp, &g[offset..offset + len]));
                    offset += len;
                }
            }
            Op::SliceCols(a, start) => {
                let c = self.shape(*a).1;
                self.accumulate(grads, *a, |ga| {
                    for i in 0..rows {
                        add_into(
                            &mut ga[i * c + start..i * c + start + cols],
                            &g[i * cols..(i + 1) * cols],
                        );
                    }
                });
            }
            Op::Rows(a, indices) => {
                let source = &self.nodes[a.0];
                if let Op::Param(id) = source.op {
                    // sparse scatter straight into the parameter gradient
                    let buf = params.buffer_mut(id, source.rows * source.cols);
                    for (k, &i) in indices.iter().enumerate() {
                        add_into(&mut buf[i * cols..(i + 1) * cols], &g[k * cols..(k + 1) * cols]);
                    }
                } else {
                    self.accumulate(grads, *a, |ga| {
                        for (k, &i) in indices.iter().enumerate() {
                            add_into(&mut ga[i * cols..(i + 1) * cols], &g[k * cols..(k + 1) * cols]);
                        }
                    });
                }
            }
            Op::Reshape(a) => {
                self.accumulate(grads, *a, |ga| add_into(ga, g));
            }
            Op::Transpose(a) => {
                // node is cols×rows of an a: rows'×cols' where rows' = cols
                self.accumulate(grads, *a, |ga| {
                    for i in 0..rows {
                        for j in 0..cols {
                            ga[j * rows + i] += g[i * cols + j];
                        }
                    }
                });
            }
            Op::MaxRows(a, arg) => {
                self.accumulate(grads, *a, |ga| {
                    for (j, &i) in arg.iter().enumerate() {
                        ga[i * cols + j] += g[j];
                    }
                });
            }
            Op::MaskFill(a, keep) => {
                self.accumulate(grads, *a, |ga| {
                    for ((x, k), gv) in ga.iter_mut().zip(keep).zip(g) {
                        if *k {
                            *x += gv;
                        }
                    }
                });
            }
            Op::SoftmaxRows(a) => {
                let y = &node.value;
                self.accumulate(grads, *a, |ga| {
                    for i in 0..rows {
                        let yr = &y[i * cols..(i + 1) * cols];
                        let gr = &g[i * cols..(i + 1) * cols];
                        let inner = dot(yr, gr);
                        for j in 0..cols {
                            ga[i * cols + j] += yr[j] * (gr[j] - inner);
                        }
                    }
                });
            }
            Op::LogSoftmaxRows(a) => {
                let y = &node.value;
                self.accumulate(grads, *a, |ga| {
                    for i in 0..rows {
                        let yr = &y[i * cols..(i + 1) * cols];
                        let gr = &g[i * cols..(i + 1) * cols];
                        let total: f64 = gr.iter().sum();
                        for j in 0..cols {
                            // exp(-inf) = 0 keeps masked entries inert
                            ga[i * cols + j] += gr[j] - yr[j].exp() * total;
                        }
                    }
                });
            }
            Op::Pick(a, index) => {
                self.accumulate(grads, *a, |ga| ga[*index] += g[0]);
            }
            Op::Sum(a) => {
                self.accumulate(grads, *a, |ga| {
                    for x in ga.iter_mut() {
                        *x += g[0];
                    }
                });
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Tensor;

    fn store_with(values: &[(&str, Vec<usize>, Vec<f64>)]) -> ParameterStore {
        let mut store = ParameterStore::new(0);
        for (name, shape, v) in values {
            store
                .insert(*name, Tensor::new(shape.clone(), v.clone()).unwrap())
                .unwrap();
        }
        store
    }

    #[test]
    fn matmul_forward_and_backward() {
        let store = store_with(&[
            ("a", vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]),
            ("b", vec![2, 1], vec![5.0, 6.0]),
        ]);
        let mut g = Graph::new(&store);
        let a = g.param(store.id("a").unwrap());
        let b = g.param(store.id("b").unwrap());
        let y = g.matmul(a, b);
        assert_eq!(g.value(y), &[17.0, 39.0]);
        let s = g.sum(y);
        let grads = g.backward(s);
        assert_eq!(grads.get(store.id("a").unwrap()).unwrap(), &[5.0, 6.0, 5.0, 6.0]);
        assert_eq!(grads.get(store.id("b").unwrap()).unwrap(), &[4.0, 6.0]);
    }

    #[test]
    fn rows_scatter_into_parameter() {
        let store = store_with(&[("e", vec![3, 2], vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0])]);
        let mut g = Graph::new(&store);
        let e = g.param(store.id("e").unwrap());
        let picked = g.rows(e, &[2, 0, 2]);
        assert_eq!(g.value(picked), &[4.0, 5.0, 0.0, 1.0, 4.0, 5.0]);
        let s = g.sum(picked);
        let grads = g.backward(s);
        assert_eq!(
            grads.get(store.id("e").unwrap()).unwrap(),
            &[1.0, 1.0, 0.0, 0.0, 2.0, 2.0]
        );
    }

    #[test]
    fn masked_log_softmax_has_zero_gradient_on_masked_entries() {
        let store = store_with(&[("s", vec![3], vec![0.3, -1.0, 2.0])]);
        let mut g = Graph::new(&store);
        let s = g.param(store.id("s").unwrap());
        let m = g.mask_fill(s, &[true, false, true]);
        let l = g.log_softmax_rows(m);
        assert_eq!(g.value(l)[1], f64::NEG_INFINITY);
        let p = g.pick(l, 0);
        let grads = g.backward(p);
        let gs = grads.get(store.id("s").unwrap()).unwrap();
        assert_eq!(gs[1], 0.0);
        assert!((gs[0] + gs[2]).abs() < 1e-12);
    }

    #[test]
    fn constants_receive_no_gradient_work() {
        let store = ParameterStore::new(0);
        let mut g = Graph::new(&store);
        let c = g.constant(1, 2, vec![1.0, 2.0]);
        let s = g.sum(c);
        let grads = g.backward(s);
        assert_eq!(grads.iter().count(), 0);
    }
}
