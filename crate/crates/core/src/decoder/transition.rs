//! The top-down stack-pointer transition system.
//!
//! The stack starts as `[ROOT]`. At each step the word on top of the stack
//! either points to an unattached word `p`, creating the arc `top → p` and
//! pushing `p`, or points to itself, which pops it. A sentence of `n` words
//! always finishes after exactly `2n + 1` steps: each word is pushed and
//! popped once, and ROOT pops last.
//!
//! Legality:
//! - pushing requires `p` to be a non-ROOT word without a head (words on the
//!   stack always have one);
//! - ROOT may pop itself only when every word is attached;
//! - with `single_root`, ROOT pushes at most once, and the word directly
//!   above ROOT may not pop while unattached words remain (ROOT could not
//!   reach them).

use crate::config::ChildOrder;
use crate::error::{Error, Result};
use crate::treebank::DependencyTree;

/// One pointer decision: the position pointed at, and the arc label when the
/// step creates an arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParseStep {
    pub target: usize,
    pub label: Option<usize>,
}

impl ParseStep {
    pub fn point(target: usize, label: usize) -> Self {
        ParseStep {
            target,
            label: Some(label),
        }
    }

    pub fn pop(top: usize) -> Self {
        ParseStep { target: top, label: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoderState {
    n: usize,
    stack: Vec<usize>,
    heads: Vec<Option<usize>>,
    labels: Vec<Option<usize>>,
    root_children: usize,
    unattached: usize,
    step_count: usize,
    single_root: bool,
}

impl DecoderState {
    pub fn new(n: usize, single_root: bool) -> Self {
        DecoderState {
            n,
            stack: vec![0],
            heads: vec![None; n + 1],
            labels: vec![None; n + 1],
            root_children: 0,
            unattached: n,
            step_count: 0,
            single_root,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stack(&self) -> &[usize] {
        &self.stack
    }

    pub fn top(&self) -> Option<usize> {
        self.stack.last().copied()
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn is_terminal(&self) -> bool {
        self.stack.is_empty()
    }

    pub fn is_attached(&self, i: usize) -> bool {
        self.heads[i].is_some()
    }

    pub fn unattached(&self) -> usize {
        self.unattached
    }

    /// `(head, child)` pairs in child order.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        (1..=self.n)
            .filter_map(|c| self.heads[c].map(|h| (h, c)))
            .collect()
    }

    pub fn label_of(&self, child: usize) -> Option<usize> {
        self.labels[child]
    }

    fn may_pop(&self, top: usize) -> bool {
        if self.unattached == 0 {
            return true;
        }
        if top == 0 {
            return false;
        }
        !(self.single_root && self.stack.len() == 2)
    }

    fn may_push_from(&self, top: usize) -> bool {
        !(top == 0 && self.single_root && self.root_children > 0)
    }

    /// Legal pointer targets over positions `0..=n`.
    pub fn legal_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n + 1];
        let Some(top) = self.top() else { return mask };
        mask[top] = self.may_pop(top);
        if self.may_push_from(top) {
            for (p, m) in mask.iter_mut().enumerate().skip(1) {
                if self.heads[p].is_none() {
                    *m = true;
                }
            }
        }
        mask
    }

    pub fn is_legal(&self, target: usize) -> bool {
        target <= self.n && self.legal_mask()[target]
    }

    /// Applies `choice` in place.
    pub fn apply(&mut self, choice: ParseStep) -> Result<()> {
        let top = self
            .top()
            .ok_or_else(|| Error::IllegalTransition("parse already finished".into()))?;
        if !self.is_legal(choice.target) {
            return Err(Error::IllegalTransition(format!(
                "{top} cannot point to {} with stack {:?}",
                choice.target, self.stack
            )));
        }
        if choice.target == top {
            self.stack.pop();
        } else {
            let p = choice.target;
            self.heads[p] = Some(top);
            self.labels[p] = Some(choice.label.unwrap_or(0));
            self.unattached -= 1;
            if top == 0 {
                self.root_children += 1;
            }
            self.stack.push(p);
        }
        self.step_count += 1;
        Ok(())
    }

    /// Returns the successor state, leaving `self` untouched.
    pub fn step(&self, choice: ParseStep) -> Result<DecoderState> {
        let mut next = self.clone();
        next.apply(choice)?;
        Ok(next)
    }

    /// Heads and label ids per word (index `i - 1` for word `i`) of a
    /// finished parse.
    pub fn heads_and_labels(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        if !self.is_terminal() || self.unattached > 0 {
            return Err(Error::IllegalTransition("parse not finished".into()));
        }
        Ok((
            (1..=self.n).map(|i| self.heads[i].unwrap()).collect(),
            (1..=self.n).map(|i| self.labels[i].unwrap()).collect(),
        ))
    }
}

/// Children of `head` in visiting order.
pub fn ordered_children(tree: &DependencyTree, head: usize, order: ChildOrder) -> Vec<usize> {
    let mut children = tree.children(head);
    match order {
        ChildOrder::LeftToRight => {}
        ChildOrder::RightToLeft => children.reverse(),
        ChildOrder::InsideOut => children.sort_by_key(|&c| (c.abs_diff(head), c)),
    }
    children
}

/// Depth-first, top-down step sequence that rebuilds `tree`. `label_ids`
/// gives each word's label id (index `i - 1` for word `i`).
pub fn gold_path(tree: &DependencyTree, label_ids: &[usize], order: ChildOrder) -> Result<Vec<ParseStep>> {
    tree.validate(crate::treebank::RootPolicy::Multiple)?;
    if label_ids.len() != tree.len() {
        return Err(Error::IllFormedTree(format!(
            "{} label ids for {} words",
            label_ids.len(),
            tree.len()
        )));
    }
    let n = tree.len();
    let children: Vec<Vec<usize>> = (0..=n).map(|h| ordered_children(tree, h, order)).collect();
    let mut next_child = vec![0usize; n + 1];
    let mut stack = vec![0usize];
    let mut steps = Vec::with_capacity(2 * n + 1);
    while let Some(&top) = stack.last() {
        let k = next_child[top];
        if k < children[top].len() {
            let c = children[top][k];
            next_child[top] += 1;
            steps.push(ParseStep::point(c, label_ids[c - 1]));
            stack.push(c);
        } else {
            steps.push(ParseStep::pop(top));
            stack.pop();
        }
    }
    Ok(steps)
}

/// Plays `steps` from the initial state.
pub fn replay(n: usize, steps: &[ParseStep], single_root: bool) -> Result<DecoderState> {
    let mut state = DecoderState::new(n, single_root);
    for s in steps {
        state.apply(*s)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(heads: &[usize]) -> DependencyTree {
        DependencyTree::new(heads.to_vec(), vec!["x".into(); heads.len()])
    }

    fn targets(steps: &[ParseStep]) -> Vec<usize> {
        steps.iter().map(|s| s.target).collect()
    }

    #[test]
    fn single_word() {
        let mut s = DecoderState::new(1, false);
        assert_eq!(s.legal_mask(), vec![false, true]);
        s.apply(ParseStep::point(1, 0)).unwrap();
        assert_eq!(s.legal_mask(), vec![false, true]);
        s.apply(ParseStep::pop(1)).unwrap();
        assert_eq!(s.legal_mask(), vec![true, false]);
        s.apply(ParseStep::pop(0)).unwrap();
        assert!(s.is_terminal());
        assert_eq!(s.arcs(), vec![(0, 1)]);
        assert_eq!(s.step_count(), 3);
    }

    #[test]
    fn pop_leaves_arcs() {
        let mut s = DecoderState::new(2, false);
        s.apply(ParseStep::point(2, 0)).unwrap();
        assert_eq!(s.stack(), &[0, 2]);
        let popped = s.step(ParseStep::pop(2)).unwrap();
        assert_eq!(popped.stack(), &[0]);
        assert_eq!(popped.arcs(), s.arcs());
    }

    #[test]
    fn illegal_targets() {
        let mut s = DecoderState::new(2, false);
        s.apply(ParseStep::point(1, 0)).unwrap();
        s.apply(ParseStep::point(2, 0)).unwrap();
        // word 1 already has a head
        assert!(matches!(s.step(ParseStep::point(1, 0)), Err(Error::IllegalTransition(_))));
        assert!(s.step(ParseStep::point(0, 0)).is_err());
        assert!(s.step(ParseStep::point(3, 0)).is_err());
        // ROOT cannot finish while a word is unattached
        let s = DecoderState::new(2, false);
        assert!(s.step(ParseStep::pop(0)).is_err());
    }

    #[test]
    fn single_root_restrictions() {
        let mut s = DecoderState::new(2, true);
        s.apply(ParseStep::point(1, 0)).unwrap();
        // word 1 must take word 2 before popping
        assert_eq!(s.legal_mask(), vec![false, false, true]);
        s.apply(ParseStep::point(2, 0)).unwrap();
        s.apply(ParseStep::pop(2)).unwrap();
        s.apply(ParseStep::pop(1)).unwrap();
        assert_eq!(s.legal_mask(), vec![true, false, false]);
    }

    #[test]
    fn chain_gold_path() {
        let t = tree(&[0, 1, 2]);
        let steps = gold_path(&t, &[0, 0, 0], ChildOrder::InsideOut).unwrap();
        assert_eq!(targets(&steps), vec![1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(steps.iter().filter(|s| s.label.is_some()).count(), 3);
    }

    #[test]
    fn smallest_gold_path() {
        let steps = gold_path(&tree(&[0]), &[0], ChildOrder::InsideOut).unwrap();
        assert_eq!(targets(&steps), vec![1, 1, 0]);
    }

    #[test]
    fn child_orders() {
        // word 3 heads 1, 2, 4, 5
        let t = tree(&[3, 3, 0, 3, 3]);
        assert_eq!(ordered_children(&t, 3, ChildOrder::InsideOut), vec![2, 4, 1, 5]);
        assert_eq!(ordered_children(&t, 3, ChildOrder::LeftToRight), vec![1, 2, 4, 5]);
        assert_eq!(ordered_children(&t, 3, ChildOrder::RightToLeft), vec![5, 4, 2, 1]);
    }

    #[test]
    fn gold_path_rejects_cycles() {
        assert!(gold_path(&tree(&[2, 1]), &[0, 0], ChildOrder::InsideOut).is_err());
    }
}
