use super::graph::{Graph, Var};
use super::rng::RngStream;

/// Inverted-dropout keep mask: each entry is `0` with probability `rate`,
/// otherwise `1 / (1 - rate)`.
pub fn dropout_mask(len: usize, rate: f64, rng: &mut RngStream) -> Vec<f64> {
    assert!((0.0..1.0).contains(&rate), "dropout rate {rate} outside [0, 1)");
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.unit() < rate { 0.0 } else { keep })
        .collect()
}

/// Inverted dropout on a graph node. Identity when not training or when the
/// rate is zero.
pub fn dropout(g: &mut Graph<'_>, input: Var, rate: f64, training: bool, rng: &mut RngStream) -> Var {
    if !training || rate == 0.0 {
        return input;
    }
    let (r, c) = g.shape(input);
    let mask = dropout_mask(r * c, rate, rng);
    g.mul_const(input, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::ParameterStore;

    #[test]
    fn identity_cases() {
        let store = ParameterStore::new(0);
        let mut g = Graph::new(&store);
        let x = g.constant(1, 3, vec![1.0, -2.0, 3.0]);
        let mut rng = RngStream::new(1);
        let y = dropout(&mut g, x, 0.0, true, &mut rng);
        assert_eq!(g.value(y), g.value(x));
        let y = dropout(&mut g, x, 0.5, false, &mut rng);
        assert_eq!(g.value(y), g.value(x));
    }

    #[test]
    fn expectation_is_preserved() {
        let trials = 100_000;
        let mut rng = RngStream::new(42);
        let width = 4;
        let mut sums = vec![0.0; width];
        for _ in 0..trials {
            for (s, m) in sums.iter_mut().zip(dropout_mask(width, 0.5, &mut rng)) {
                *s += m;
            }
        }
        for s in sums {
            let mean = s / trials as f64;
            assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        }
    }
}
