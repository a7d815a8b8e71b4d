use indexmap::IndexMap;

use crate::error::{Error, Result};

/// Dense row-major array of 64-bit floats.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    pub requires_grad: bool,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::Shape(format!(
                "shape {:?} holds {} values, got {}",
                shape,
                expected,
                values.len()
            )));
        }
        Ok(Tensor {
            shape,
            values,
            requires_grad: true,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape,
            values: vec![0.0; len],
            requires_grad: true,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: vec![1],
            values: vec![value],
            requires_grad: true,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Two-dimensional view used by the graph: the leading dimension becomes
    /// rows and all trailing dimensions are flattened into columns. A vector
    /// is viewed as a single row.
    pub fn matrix_dims(&self) -> (usize, usize) {
        match self.shape.len() {
            0 => (1, 1),
            1 => (1, self.shape[0]),
            _ => (self.shape[0], self.shape[1..].iter().product()),
        }
    }

    /// Row `i` of the matrix view.
    pub fn row(&self, i: usize) -> &[f64] {
        let (_, cols) = self.matrix_dims();
        &self.values[i * cols..(i + 1) * cols]
    }

    /// Bitwise equality of values (distinguishes `0.0` from `-0.0` and
    /// compares NaN payloads).
    pub fn bitwise_eq(&self, other: &Tensor) -> bool {
        self.shape == other.shape
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Index of a parameter inside a [`ParameterStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named, insertion-ordered collection of all trainable weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterStore {
    entries: IndexMap<String, Tensor>,
    pub rng_seed: u64,
}

impl ParameterStore {
    pub fn new(rng_seed: u64) -> Self {
        ParameterStore {
            entries: IndexMap::new(),
            rng_seed,
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::DuplicateParameter(name));
        }
        let (idx, _) = self.entries.insert_full(name, tensor);
        Ok(ParamId(idx))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.entries.get_index_of(name).map(ParamId)
    }

    pub fn require(&self, name: &str) -> Result<ParamId> {
        self.id(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name)
    }

    pub fn by_name_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.get_mut(name)
    }

    pub fn name(&self, id: ParamId) -> &str {
        self.entries.get_index(id.0).map(|(k, _)| k.as_str()).unwrap()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, (k, v))| (ParamId(i), k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Total number of scalar weights.
    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(Tensor::len).sum()
    }

    pub fn bitwise_eq(&self, other: &ParameterStore) -> bool {
        self.len() == other.len()
            && self
                .entries
                .iter()
                .zip(other.entries.iter())
                .all(|((ka, a), (kb, b))| ka == kb && a.bitwise_eq(b))
    }
}

/// Per-parameter gradient buffers aligned with a [`ParameterStore`].
///
/// Parameters that received no gradient have no buffer; they are treated as
/// zero everywhere.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    buffers: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParameterStore) -> Self {
        Gradients {
            buffers: vec![None; store.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.buffers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffers.is_empty()
    }

    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.buffers.get(id.0).and_then(|b| b.as_deref())
    }

    /// Gradient buffer for `id`, allocated as zeros of length `len` on first use.
    pub fn buffer_mut(&mut self, id: ParamId, len: usize) -> &mut Vec<f64> {
        if self.buffers.len() <= id.0 {
            self.buffers.resize(id.0 + 1, None);
        }
        self.buffers[id.0].get_or_insert_with(|| vec![0.0; len])
    }

    pub fn set(&mut self, id: ParamId, values: Vec<f64>) {
        if self.buffers.len() <= id.0 {
            self.buffers.resize(id.0 + 1, None);
        }
        self.buffers[id.0] = Some(values);
    }

    /// `self += other`.
    pub fn accumulate(&mut self, other: &Gradients) {
        if self.buffers.len() < other.buffers.len() {
            self.buffers.resize(other.buffers.len(), None);
        }
        for (mine, theirs) in self.buffers.iter_mut().zip(&other.buffers) {
            let Some(theirs) = theirs else { continue };
            match mine {
                Some(mine) => {
                    for (a, b) in mine.iter_mut().zip(theirs) {
                        *a += b;
                    }
                }
                None => *mine = Some(theirs.clone()),
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for buf in self.buffers.iter_mut().flatten() {
            for g in buf.iter_mut() {
                *g *= factor;
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.buffers
            .iter()
            .flatten()
            .flat_map(|b| b.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales all gradients so the global L2 norm does not exceed `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
        norm
    }

    pub fn is_finite(&self) -> bool {
        self.buffers
            .iter()
            .flatten()
            .all(|b| b.iter().all(|g| g.is_finite()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &[f64])> {
        self.buffers
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.as_deref().map(|b| (ParamId(i), b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_must_match_value_count() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(matches!(
            Tensor::new(vec![2, 3], vec![0.0; 5]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut store = ParameterStore::new(0);
        store.insert("a", Tensor::zeros(vec![1])).unwrap();
        assert!(matches!(
            store.insert("a", Tensor::zeros(vec![1])),
            Err(Error::DuplicateParameter(_))
        ));
    }

    #[test]
    fn matrix_view_flattens_trailing_dims() {
        assert_eq!(Tensor::zeros(vec![4]).matrix_dims(), (1, 4));
        assert_eq!(Tensor::zeros(vec![3, 2, 5]).matrix_dims(), (3, 10));
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut store = ParameterStore::new(0);
        let id = store.insert("w", Tensor::zeros(vec![2])).unwrap();
        let mut grads = Gradients::zeros_like(&store);
        grads.set(id, vec![3.0, 4.0]);
        assert_eq!(grads.clip_global_norm(1.0), 5.0);
        assert!((grads.global_norm() - 1.0).abs() < 1e-12);
    }
}
