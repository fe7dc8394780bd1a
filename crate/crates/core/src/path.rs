//! Per-path working memory shared by the SCL and fast-SCL traversals.
//!
//! LLR levels are reference counted so that duplicating a path on a split
//! only copies the levels it later overwrites.

use std::rc::Rc;

use crate::llr::{f_op, g_op, FgMode};

#[derive(Debug, Clone)]
pub(crate) struct PathState {
    pub pm: f64,
    pub u: Vec<u8>,
    /// `alpha[d]` holds the `N >> d` LLRs entering the node currently active at depth `d`.
    alpha: Vec<Rc<Vec<f64>>>,
    /// Partial sums, all levels packed; level `d` starts at `2N - 2(N >> d)`.
    beta: Vec<u8>,
    /// Left-child partial sums kept while the right sibling is decoded.
    left: Vec<u8>,
    n: usize,
}

#[inline]
fn level_offset(n: usize, d: usize) -> usize {
    2 * n - 2 * (n >> d)
}

impl PathState {
    pub fn new(channel: &[f64]) -> Self {
        let n = channel.len();
        let depth = n.trailing_zeros() as usize;
        let mut alpha = Vec::with_capacity(depth + 1);
        alpha.push(Rc::new(channel.to_vec()));
        for d in 1..=depth {
            alpha.push(Rc::new(vec![0.0; n >> d]));
        }
        PathState {
            pm: 0.0,
            u: vec![0; n],
            alpha,
            beta: vec![0; 2 * n],
            left: vec![0; 2 * n],
            n,
        }
    }

    pub fn alpha(&self, d: usize) -> &[f64] {
        &self.alpha[d]
    }

    pub fn beta(&self, d: usize) -> &[u8] {
        let off = level_offset(self.n, d);
        &self.beta[off..off + (self.n >> d)]
    }

    pub fn beta_mut(&mut self, d: usize) -> &mut [u8] {
        let off = level_offset(self.n, d);
        &mut self.beta[off..off + (self.n >> d)]
    }

    fn left(&self, d: usize) -> &[u8] {
        let off = level_offset(self.n, d);
        &self.left[off..off + (self.n >> d)]
    }

    /// LLRs for the left child of the depth-`d` node.
    pub fn compute_left(&mut self, d: usize, mode: FgMode) {
        let (lo, hi) = self.alpha.split_at_mut(d + 1);
        let src = &lo[d];
        let dst = Rc::make_mut(&mut hi[0]);
        let half = dst.len();
        let (a, b) = src.split_at(half);
        for ((o, &x), &y) in dst.iter_mut().zip(a).zip(b) {
            *o = f_op(x, y, mode);
        }
    }

    /// Saves the finished left child's partial sums, then computes the
    /// right child's LLRs.
    pub fn compute_right(&mut self, d: usize) {
        let off = level_offset(self.n, d + 1);
        let len = self.n >> (d + 1);
        self.left[off..off + len].copy_from_slice(&self.beta[off..off + len]);
        let (lo, hi) = self.alpha.split_at_mut(d + 1);
        let src = &lo[d];
        let dst = Rc::make_mut(&mut hi[0]);
        let (a, b) = src.split_at(len);
        let left = &self.left[off..off + len];
        for (k, o) in dst.iter_mut().enumerate() {
            *o = g_op(a[k], b[k], left[k]);
        }
    }

    /// Merges both children's partial sums into the depth-`d` node.
    pub fn combine(&mut self, d: usize) {
        let child = level_offset(self.n, d + 1);
        let len = self.n >> (d + 1);
        let own = level_offset(self.n, d);
        for k in 0..len {
            let l = self.left[child + k];
            let r = self.beta[child + k];
            self.beta[own + k] = l ^ r;
            self.beta[own + len + k] = r;
        }
        debug_assert_eq!(self.left(d + 1).len(), len);
    }
}

/// Builds the next generation of paths: `picks[j]` names the parent of new
/// path `j`. Parents chosen once are moved, others are cloned.
pub(crate) fn spawn<T: Clone>(parents: Vec<T>, picks: &[usize]) -> Vec<T> {
    let mut uses = vec![0usize; parents.len()];
    for &p in picks {
        uses[p] += 1;
    }
    let mut slots: Vec<Option<T>> = parents.into_iter().map(Some).collect();
    picks
        .iter()
        .map(|&p| {
            uses[p] -= 1;
            if uses[p] == 0 {
                slots[p].take().expect("parent consumed twice")
            } else {
                slots[p].clone().expect("parent consumed")
            }
        })
        .collect()
}

/// Indices of the `keep` smallest metrics; ties go to the earlier candidate.
pub(crate) fn select_lowest(metrics: &[f64], keep: usize) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..metrics.len()).collect();
    order.sort_by(|&a, &b| metrics[a].total_cmp(&metrics[b]).then(a.cmp(&b)));
    let discarded = order.split_off(keep.min(order.len()));
    (order, discarded)
}
