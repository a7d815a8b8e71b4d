//! Named parameter construction shared by every model component.
//!
//! Components declare their weights once through [`ParamSource`]; the same
//! code path either creates fresh tensors ([`Initializer`]) or binds to the
//! tensors of an existing store ([`Binder`]), checking shapes.

use crate::diffcore::{init, ParamId, ParameterStore, RngStream};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub enum Init {
    /// Glorot-uniform.
    Xavier,
    Zeros,
    /// Uniform with unit expected squared row norm.
    Embedding,
}

pub trait ParamSource {
    fn param(&mut self, name: &str, shape: &[usize], init: Init) -> Result<ParamId>;
}

/// Inserts freshly initialized tensors. Each tensor draws from its own stream
/// keyed by name, so values do not depend on declaration order.
pub struct Initializer<'a> {
    store: &'a mut ParameterStore,
    rng: RngStream,
}

impl<'a> Initializer<'a> {
    pub fn new(store: &'a mut ParameterStore, seed: u64) -> Self {
        Initializer {
            store,
            rng: RngStream::new(seed),
        }
    }
}

impl ParamSource for Initializer<'_> {
    fn param(&mut self, name: &str, shape: &[usize], init: Init) -> Result<ParamId> {
        let mut rng = self.rng.split_named(name);
        let tensor = match init {
            Init::Xavier => init::xavier_uniform(shape.to_vec(), &mut rng),
            Init::Zeros => crate::diffcore::Tensor::zeros(shape.to_vec()),
            Init::Embedding => {
                let (rows, cols) = (shape[0], shape[1..].iter().product());
                init::embedding(rows, cols, &mut rng)
            }
        };
        self.store.insert(name, tensor)
    }
}

/// Resolves names against an existing store.
pub struct Binder<'a> {
    store: &'a ParameterStore,
}

impl<'a> Binder<'a> {
    pub fn new(store: &'a ParameterStore) -> Self {
        Binder { store }
    }
}

impl ParamSource for Binder<'_> {
    fn param(&mut self, name: &str, shape: &[usize], _init: Init) -> Result<ParamId> {
        let id = self.store.require(name)?;
        let actual = self.store.get(id).shape();
        if actual != shape {
            return Err(Error::Shape(format!("{name}: expected shape {shape:?}, found {actual:?}")));
        }
        Ok(id)
    }
}
