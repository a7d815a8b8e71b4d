use super::rng::RngStream;
use super::tensor::Tensor;

/// Glorot-uniform weights: `U[-√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out))]`.
/// Fan-in is the leading dimension and fan-out the trailing one.
pub fn xavier_uniform(shape: Vec<usize>, rng: &mut RngStream) -> Tensor {
    let fan_in = shape.first().copied().unwrap_or(1);
    let fan_out = shape.last().copied().unwrap_or(1);
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(shape, bound, rng)
}

/// Entries drawn from `U[-bound, +bound]`.
pub fn uniform(shape: Vec<usize>, bound: f64, rng: &mut RngStream) -> Tensor {
    let len: usize = shape.iter().product();
    let values = (0..len).map(|_| rng.uniform(-bound, bound)).collect();
    Tensor::new(shape, values).expect("length matches shape")
}

/// Embedding rows with unit expected squared norm: `U[-√(3/dim), +√(3/dim)]`.
pub fn embedding(rows: usize, dim: usize, rng: &mut RngStream) -> Tensor {
    uniform(vec![rows, dim], (3.0 / dim as f64).sqrt(), rng)
}
