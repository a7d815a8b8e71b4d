use crate::error::{Error, Result};

fn max_finite(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Empty("softmax over no scores".into()));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::FullyMasked);
    }
    Ok(max)
}

/// Normalized exponentials with max-subtraction. Entries equal to negative
/// infinity are masked and map to exactly zero.
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>> {
    let max = max_finite(scores)?;
    let mut out: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    Ok(out)
}

/// Log of [`softmax`]; masked entries stay at negative infinity.
pub fn log_softmax(scores: &[f64]) -> Result<Vec<f64>> {
    let max = max_finite(scores)?;
    let log_total = scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln() + max;
    Ok(scores.iter().map(|s| s - log_total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_on_equal_scores() {
        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn large_scores_do_not_overflow() {
        let p = softmax(&[1000.0, 0.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-9);
        assert!(p[1].abs() < 1e-9);
    }

    #[test]
    fn reference_values() {
        // exp(k) / (e + e^2 + e^3), evaluated in 50-digit arithmetic
        let p = softmax(&[1.0, 2.0, 3.0]).unwrap();
        let expected = [0.09003057317038046, 0.24472847105479764, 0.6652409557748219];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn masked_entries_are_exactly_zero() {
        let p = softmax(&[f64::NEG_INFINITY, 1.0, f64::NEG_INFINITY]).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn fully_masked_is_an_error() {
        assert!(matches!(
            softmax(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            Err(Error::FullyMasked)
        ));
    }

    proptest! {
        #[test]
        fn shift_invariance(v in proptest::collection::vec(-50.0f64..50.0, 1..12), c in -100.0f64..100.0) {
            let a = softmax(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let b = softmax(&shifted).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }

        #[test]
        fn sums_to_one(v in proptest::collection::vec(-700.0f64..700.0, 1..20)) {
            let p = softmax(&v).unwrap();
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-6);
            prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        }

        #[test]
        fn log_softmax_matches_log_of_softmax(v in proptest::collection::vec(-20.0f64..20.0, 1..10)) {
            let p = softmax(&v).unwrap();
            let lp = log_softmax(&v).unwrap();
            for (a, b) in p.iter().zip(&lp) {
                prop_assert!((a.ln() - b).abs() < 1e-9);
            }
        }
    }
}
