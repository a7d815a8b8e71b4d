use super::transition::{DecoderState, ParseStep};
use crate::error::{Error, Result};

/// Supplies pointer and label scores to [`decode_greedy`].
pub trait TransitionScorer {
    /// Scores for every position `0..=n` given the current state. Called
    /// exactly once per step, before the step is applied.
    fn pointer_scores(&mut self, state: &DecoderState) -> Result<Vec<f64>>;

    /// Label id for the arc from the current stack top to `child`.
    fn label(&mut self, state: &DecoderState, child: usize) -> Result<usize>;
}

/// Highest-scoring legal position; ties and NaNs resolve to the lowest index.
pub fn argmax_legal(scores: &[f64], legal: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (&s, &ok)) in scores.iter().zip(legal).enumerate() {
        if !ok {
            continue;
        }
        let s = if s.is_nan() { f64::NEG_INFINITY } else { s };
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// Runs the transition system to completion, always taking the best legal
/// pointer. Returns the terminal state.
pub fn decode_greedy(n: usize, scorer: &mut impl TransitionScorer, single_root: bool) -> Result<DecoderState> {
    let mut state = DecoderState::new(n, single_root);
    while let Some(top) = state.top() {
        let scores = scorer.pointer_scores(&state)?;
        if scores.len() != n + 1 {
            return Err(Error::Shape(format!("{} pointer scores for {} positions", scores.len(), n + 1)));
        }
        let target = argmax_legal(&scores, &state.legal_mask())
            .ok_or_else(|| Error::IllegalTransition("no legal target".into()))?;
        let choice = if target == top {
            ParseStep::pop(top)
        } else {
            ParseStep::point(target, scorer.label(&state, target)?)
        };
        state.apply(choice)?;
    }
    Ok(state)
}

/// Scores `+1` on the gold step and `0` elsewhere.
#[derive(Clone, Debug)]
pub struct OracleScorer {
    steps: Vec<ParseStep>,
    cursor: usize,
}

impl OracleScorer {
    pub fn new(steps: Vec<ParseStep>) -> Self {
        OracleScorer { steps, cursor: 0 }
    }
}

impl TransitionScorer for OracleScorer {
    fn pointer_scores(&mut self, state: &DecoderState) -> Result<Vec<f64>> {
        let mut scores = vec![0.0; state.n() + 1];
        let step = self
            .steps
            .get(self.cursor)
            .ok_or_else(|| Error::IllegalTransition("oracle ran out of steps".into()))?;
        scores[step.target] = 1.0;
        self.cursor += 1;
        Ok(scores)
    }

    fn label(&mut self, _state: &DecoderState, child: usize) -> Result<usize> {
        Ok(self.steps[self.cursor - 1]
            .label
            .filter(|_| self.steps[self.cursor - 1].target == child)
            .unwrap_or(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax_legal(&[1.0, 1.0, 1.0], &[false, true, true]), Some(1));
        assert_eq!(argmax_legal(&[f64::NAN, 0.0], &[true, true]), Some(1));
        assert_eq!(argmax_legal(&[1.0], &[false]), None);
    }

    struct Constant;
    impl TransitionScorer for Constant {
        fn pointer_scores(&mut self, state: &DecoderState) -> Result<Vec<f64>> {
            Ok(vec![0.0; state.n() + 1])
        }
        fn label(&mut self, _: &DecoderState, _: usize) -> Result<usize> {
            Ok(0)
        }
    }

    #[test]
    fn flat_scorer_terminates_with_a_tree() {
        for n in 1..8 {
            let state = decode_greedy(n, &mut Constant, false).unwrap();
            assert_eq!(state.step_count(), 2 * n + 1);
            let (heads, _) = state.heads_and_labels().unwrap();
            // lowest legal index: each word pops as soon as it is pushed
            assert_eq!(heads, vec![0; n]);
        }
    }
}
