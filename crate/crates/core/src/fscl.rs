//! Fast list decoding of Rate0, REP, Rate1 and SPC nodes.
//!
//! Node decoders work in the "modified" domain where every frozen bit of the
//! node is zero: the incoming LLRs are sign-flipped by the frozen-pattern
//! codeword `s_F`, and `s_F` is XORed back onto each estimate afterwards.

use serde::{Deserialize, Serialize};

use crate::channel::LlrFrame;
use crate::code::{polar_transform, CodeSpec};
use crate::llr::{first_bit_llr, hard_decision, pm_increment, FgMode, PmMode};
use crate::path::{select_lowest, spawn, PathState};
use crate::scl::{DecoderOptions, PathList};
use crate::soft::CodebookProbTracker;
use crate::tree::{DecodingTree, NodeKind, TreeNode};

/// Largest dynamic key served from a look-up table; wider keys fall back to
/// a direct transform.
const MAX_LUT_BITS: usize = 10;

/// Per-path inputs to a node decoder.
#[derive(Debug, Clone, Copy)]
pub struct NodeDecodeInput<'a> {
    /// Modified LLRs entering the node, one vector per path.
    pub alphas: &'a [Vec<f64>],
    pub parent_pms: &'a [f64],
    pub pm_mode: PmMode,
    pub fg_mode: FgMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeCandidate {
    pub parent: usize,
    /// Estimated sub-codeword in the modified domain.
    pub bits: Vec<u8>,
    pub pm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDecodeResult {
    /// Survivors in ascending metric order.
    pub survivors: Vec<NodeCandidate>,
    /// REP only: metrics of the pruned branch roots.
    pub discarded_pms: Vec<f64>,
    /// Rate1: the parents' metrics. SPC: the parents' metrics after deciding
    /// the frozen bit.
    pub bracket_parent_pms: Vec<f64>,
    pub flip_rounds: usize,
}

/// Bit-flip rounds for a Rate1 node.
pub fn rate1_flip_rounds(list_size: usize, node_len: usize) -> usize {
    (list_size.saturating_sub(1)).min(node_len)
}

/// Bit-flip rounds for an SPC node. The first round is the parity repair, so
/// at most `node_len - 1` pair flips are ever applied.
pub fn spc_flip_rounds(list_size: usize, node_len: usize) -> usize {
    list_size.min(node_len)
}

/// `alpha_k (1 - 2 s_F,k)`.
pub fn modify_llrs_dynamic(alpha: &[f64], s_f: &[u8]) -> Vec<f64> {
    debug_assert_eq!(alpha.len(), s_f.len());
    alpha
        .iter()
        .zip(s_f)
        .map(|(&a, &s)| if s == 0 { a } else { -a })
        .collect()
}

fn codeword_metric(parent_pm: f64, alpha: &[f64], bits: &[u8], mode: PmMode) -> f64 {
    parent_pm
        + alpha
            .iter()
            .zip(bits)
            .map(|(&a, &b)| pm_increment(a, b, mode))
            .sum::<f64>()
}

fn reliability_order(alpha: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..alpha.len()).collect();
    order.sort_by(|&a, &b| alpha[a].abs().total_cmp(&alpha[b].abs()).then(a.cmp(&b)));
    order
}

pub fn decode_rate0(input: NodeDecodeInput<'_>) -> NodeDecodeResult {
    let survivors = input
        .alphas
        .iter()
        .zip(input.parent_pms)
        .enumerate()
        .map(|(parent, (alpha, &pm))| {
            let bits = vec![0u8; alpha.len()];
            NodeCandidate {
                parent,
                pm: codeword_metric(pm, alpha, &bits, input.pm_mode),
                bits,
            }
        })
        .collect();
    NodeDecodeResult {
        survivors,
        discarded_pms: Vec::new(),
        bracket_parent_pms: Vec::new(),
        flip_rounds: 0,
    }
}

pub fn decode_rep(input: NodeDecodeInput<'_>, list_size: usize) -> NodeDecodeResult {
    let mut pool = Vec::with_capacity(2 * input.alphas.len());
    for (parent, (alpha, &pm)) in input.alphas.iter().zip(input.parent_pms).enumerate() {
        for bit in [0u8, 1] {
            let bits = vec![bit; alpha.len()];
            pool.push(NodeCandidate {
                parent,
                pm: codeword_metric(pm, alpha, &bits, input.pm_mode),
                bits,
            });
        }
    }
    let metrics: Vec<f64> = pool.iter().map(|c| c.pm).collect();
    let (kept, discarded) = select_lowest(&metrics, list_size);
    NodeDecodeResult {
        survivors: take_in_order(pool, &kept),
        discarded_pms: discarded.iter().map(|&c| metrics[c]).collect(),
        bracket_parent_pms: Vec::new(),
        flip_rounds: 0,
    }
}

fn take_in_order(pool: Vec<NodeCandidate>, picks: &[usize]) -> Vec<NodeCandidate> {
    let mut slots: Vec<Option<NodeCandidate>> = pool.into_iter().map(Some).collect();
    picks.iter().map(|&i| slots[i].take().expect("picked twice")).collect()
}

/// Grows the pool by flipping, each round, the listed positions of every
/// candidate and keeping the `list_size` best.
fn flip_search(
    mut pool: Vec<NodeCandidate>,
    alphas: &[Vec<f64>],
    flips: impl Fn(usize, usize) -> Vec<usize>,
    rounds: usize,
    list_size: usize,
    mode: PmMode,
) -> Vec<NodeCandidate> {
    for round in 0..rounds {
        let mut next = Vec::with_capacity(2 * pool.len());
        for cand in pool {
            let alpha = &alphas[cand.parent];
            let mut flipped = cand.clone();
            for pos in flips(cand.parent, round) {
                let old = flipped.bits[pos];
                flipped.bits[pos] ^= 1;
                flipped.pm += pm_increment(alpha[pos], old ^ 1, mode) - pm_increment(alpha[pos], old, mode);
            }
            next.push(cand);
            next.push(flipped);
        }
        let metrics: Vec<f64> = next.iter().map(|c| c.pm).collect();
        let (kept, _) = select_lowest(&metrics, list_size);
        pool = take_in_order(next, &kept);
    }
    pool
}

fn finish(mut survivors: Vec<NodeCandidate>, input: &NodeDecodeInput<'_>) -> Vec<NodeCandidate> {
    for c in &mut survivors {
        c.pm = codeword_metric(input.parent_pms[c.parent], &input.alphas[c.parent], &c.bits, input.pm_mode);
    }
    survivors.sort_by(|a, b| a.pm.total_cmp(&b.pm));
    survivors
}

pub fn decode_rate1(input: NodeDecodeInput<'_>, list_size: usize) -> NodeDecodeResult {
    let node_len = input.alphas.first().map_or(0, Vec::len);
    let orders: Vec<Vec<usize>> = input.alphas.iter().map(|a| reliability_order(a)).collect();
    let pool: Vec<NodeCandidate> = input
        .alphas
        .iter()
        .zip(input.parent_pms)
        .enumerate()
        .map(|(parent, (alpha, &pm))| {
            let bits: Vec<u8> = alpha.iter().map(|&a| hard_decision(a)).collect();
            NodeCandidate {
                parent,
                pm: codeword_metric(pm, alpha, &bits, input.pm_mode),
                bits,
            }
        })
        .collect();
    let rounds = rate1_flip_rounds(list_size, node_len);
    let pool = flip_search(
        pool,
        input.alphas,
        |parent, round| vec![orders[parent][round]],
        rounds,
        list_size,
        input.pm_mode,
    );
    NodeDecodeResult {
        survivors: finish(pool, &input),
        discarded_pms: Vec::new(),
        bracket_parent_pms: input.parent_pms.to_vec(),
        flip_rounds: rounds,
    }
}

pub fn decode_spc(input: NodeDecodeInput<'_>, list_size: usize) -> NodeDecodeResult {
    let node_len = input.alphas.first().map_or(0, Vec::len);
    let orders: Vec<Vec<usize>> = input.alphas.iter().map(|a| reliability_order(a)).collect();
    let pool: Vec<NodeCandidate> = input
        .alphas
        .iter()
        .zip(input.parent_pms)
        .zip(&orders)
        .enumerate()
        .map(|(parent, ((alpha, &pm), order))| {
            let mut bits: Vec<u8> = alpha.iter().map(|&a| hard_decision(a)).collect();
            if bits.iter().fold(0, |acc, b| acc ^ b) == 1 {
                bits[order[0]] ^= 1;
            }
            NodeCandidate {
                parent,
                pm: codeword_metric(pm, alpha, &bits, input.pm_mode),
                bits,
            }
        })
        .collect();
    let rounds = spc_flip_rounds(list_size, node_len);
    let pair_flips = rounds.min(node_len.saturating_sub(1));
    let pool = flip_search(
        pool,
        input.alphas,
        |parent, round| vec![orders[parent][round + 1], orders[parent][0]],
        pair_flips,
        list_size,
        input.pm_mode,
    );
    let bracket_parent_pms = input
        .alphas
        .iter()
        .zip(input.parent_pms)
        .map(|(alpha, &pm)| pm + pm_increment(first_bit_llr(alpha, input.fg_mode), 0, input.pm_mode))
        .collect();
    NodeDecodeResult {
        survivors: finish(pool, &input),
        discarded_pms: Vec::new(),
        bracket_parent_pms,
        flip_rounds: rounds,
    }
}

/// Frozen-pattern codewords `[u_F, 0] G` for every assignment of a node's
/// leading frozen bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SfLookupTable {
    /// Node-relative positions forming the key, least significant first.
    pub key_positions: Vec<usize>,
    entries: Vec<Vec<u8>>,
}

impl SfLookupTable {
    pub fn new(node_len: usize, key_positions: Vec<usize>) -> Self {
        let entries = (0..1usize << key_positions.len())
            .map(|key| {
                let mut v = vec![0u8; node_len];
                for (b, &pos) in key_positions.iter().enumerate() {
                    v[pos] = ((key >> b) & 1) as u8;
                }
                polar_transform(&mut v);
                v
            })
            .collect();
        SfLookupTable { key_positions, entries }
    }

    /// Table for a leaf: keyed by its first `min(f_d, |F_s|)` frozen positions.
    pub fn for_node(spec: &CodeSpec, node: &TreeNode) -> Self {
        let keys = (0..node.len)
            .filter(|&k| spec.is_frozen(node.start + k))
            .take(spec.f_d)
            .collect();
        Self::new(node.len, keys)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, key: usize) -> &[u8] {
        &self.entries[key]
    }

    /// `s_F` for a node whose input span `u_span` has its frozen values filled.
    pub fn lookup(&self, u_span: &[u8]) -> &[u8] {
        let key = self
            .key_positions
            .iter()
            .enumerate()
            .fold(0usize, |acc, (b, &pos)| acc | (usize::from(u_span[pos]) << b));
        &self.entries[key]
    }
}

/// How a leaf obtains `s_F`.
enum FrozenPattern {
    Zero,
    Table(SfLookupTable),
    Direct,
}

fn frozen_pattern_for(spec: &CodeSpec, node: &TreeNode) -> FrozenPattern {
    let dynamic: Vec<usize> = (0..node.len).filter(|&k| spec.is_dynamic(node.start + k)).collect();
    if dynamic.is_empty() {
        return FrozenPattern::Zero;
    }
    let table = SfLookupTable::for_node(spec, node);
    if table.key_positions.len() <= MAX_LUT_BITS && dynamic.iter().all(|k| table.key_positions.contains(k)) {
        FrozenPattern::Table(table)
    } else {
        FrozenPattern::Direct
    }
}

struct FsclRun<'a> {
    spec: &'a CodeSpec,
    tree: &'a DecodingTree,
    list_size: usize,
    opts: DecoderOptions,
    paths: Vec<PathState>,
    patterns: Vec<Option<FrozenPattern>>,
    tracker: Option<&'a mut CodebookProbTracker>,
}

impl FsclRun<'_> {
    fn visit(&mut self, id: usize) {
        let node = self.tree.node(id);
        match node.children {
            None => self.decode_leaf(id),
            Some((l, r)) => {
                let d = node.depth;
                for p in &mut self.paths {
                    p.compute_left(d, self.opts.fg_mode);
                }
                self.visit(l);
                for p in &mut self.paths {
                    p.compute_right(d);
                }
                self.visit(r);
                for p in &mut self.paths {
                    p.combine(d);
                }
            }
        }
    }

    fn frozen_codeword(&self, id: usize, u_span: &[u8]) -> Vec<u8> {
        let node = self.tree.node(id);
        match self.patterns[id].as_ref().expect("leaf pattern") {
            FrozenPattern::Zero => vec![0; node.len],
            FrozenPattern::Table(t) => t.lookup(u_span).to_vec(),
            FrozenPattern::Direct => {
                let mut v: Vec<u8> = (0..node.len)
                    .map(|k| if self.spec.is_frozen(node.start + k) { u_span[k] } else { 0 })
                    .collect();
                polar_transform(&mut v);
                v
            }
        }
    }

    fn decode_leaf(&mut self, id: usize) {
        let node = self.tree.node(id).clone();
        let (d, start, end) = (node.depth, node.start, node.end());
        let spec = self.spec;

        for p in &mut self.paths {
            for idx in start..=end {
                if spec.is_frozen(idx) {
                    p.u[idx] = spec.frozen_value(&p.u[..idx], idx);
                }
            }
        }
        let s_f: Vec<Vec<u8>> = self
            .paths
            .iter()
            .map(|p| self.frozen_codeword(id, &p.u[start..=end]))
            .collect();
        let alphas: Vec<Vec<f64>> = self
            .paths
            .iter()
            .zip(&s_f)
            .map(|(p, s)| modify_llrs_dynamic(p.alpha(d), s))
            .collect();
        let parent_pms: Vec<f64> = self.paths.iter().map(|p| p.pm).collect();
        let input = NodeDecodeInput {
            alphas: &alphas,
            parent_pms: &parent_pms,
            pm_mode: self.opts.pm_mode,
            fg_mode: self.opts.fg_mode,
        };
        let result = match node.kind {
            NodeKind::Rate0 => decode_rate0(input),
            NodeKind::Rep => decode_rep(input, self.list_size),
            NodeKind::Rate1 => decode_rate1(input, self.list_size),
            NodeKind::Spc => decode_spc(input, self.list_size),
            NodeKind::Branch => unreachable!("branch nodes are never leaves"),
        };

        if let Some(t) = self.tracker.as_deref_mut() {
            t.begin_step(start, &parent_pms);
            let survivor_pms: Vec<f64> = result.survivors.iter().map(|c| c.pm).collect();
            match node.kind {
                NodeKind::Rep => t.node_residual_rep(&result.discarded_pms, start, end, spec),
                NodeKind::Rate1 => {
                    t.node_residual_rate1(&result.bracket_parent_pms, &survivor_pms, start, end, spec);
                }
                NodeKind::Spc => {
                    t.node_residual_spc(&result.bracket_parent_pms, &survivor_pms, start, end, spec);
                }
                _ => {}
            }
        }

        let picks: Vec<usize> = result.survivors.iter().map(|c| c.parent).collect();
        let parents = std::mem::take(&mut self.paths);
        self.paths = spawn(parents, &picks);
        for (p, cand) in self.paths.iter_mut().zip(&result.survivors) {
            let s: Vec<u8> = cand.bits.iter().zip(&s_f[cand.parent]).map(|(a, b)| a ^ b).collect();
            p.beta_mut(d).copy_from_slice(&s);
            let mut u_span = s;
            polar_transform(&mut u_span);
            debug_assert!((start..=end)
                .filter(|&i| spec.is_frozen(i))
                .all(|i| u_span[i - start] == p.u[i]));
            p.u[start..=end].copy_from_slice(&u_span);
            p.pm = cand.pm;
        }
    }
}

/// Fast SCL over a decomposed tree. With a tracker, each node's unvisited
/// mass is accumulated as it is decoded.
pub fn fscl_decode(
    spec: &CodeSpec,
    llrs: &LlrFrame,
    list_size: usize,
    tree: &DecodingTree,
    opts: DecoderOptions,
    tracker: Option<&mut CodebookProbTracker>,
) -> PathList {
    assert!(list_size >= 1, "list size must be positive");
    assert_eq!(llrs.len(), spec.n_bits, "frame length mismatch");
    assert_eq!(tree.n_bits, spec.n_bits, "tree built for another length");
    let mut patterns: Vec<Option<FrozenPattern>> = Vec::with_capacity(tree.nodes().len());
    for node in tree.nodes() {
        patterns.push(node.is_leaf().then(|| frozen_pattern_for(spec, node)));
    }
    let mut run = FsclRun {
        spec,
        tree,
        list_size,
        opts,
        paths: vec![PathState::new(&llrs.values)],
        patterns,
        tracker,
    };
    run.visit(0);
    PathList::from_states(run.paths, list_size)
}
