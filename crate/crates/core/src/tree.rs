//! Decomposition of a frozen pattern into Rate0 / REP / Rate1 / SPC leaves.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::code::CodeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Branch,
    Rate0,
    Rep,
    Rate1,
    Spc,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Branch => "Branch",
            NodeKind::Rate0 => "Rate0",
            NodeKind::Rep => "REP",
            NodeKind::Rate1 => "Rate1",
            NodeKind::Spc => "SPC",
        })
    }
}

/// Classifies a sub-code by its frozen mask (`true` = frozen).
///
/// Patterns are tried in the order Rate0, Rate1, REP, SPC, so the ambiguous
/// length-2 mask `(frozen, info)` is a REP node.
pub fn classify_node(frozen_mask: &[bool]) -> NodeKind {
    let n = frozen_mask.len();
    debug_assert!(n.is_power_of_two());
    let frozen = frozen_mask.iter().filter(|&&f| f).count();
    if frozen == n {
        NodeKind::Rate0
    } else if frozen == 0 {
        NodeKind::Rate1
    } else if frozen == n - 1 && !frozen_mask[n - 1] {
        NodeKind::Rep
    } else if frozen == 1 && frozen_mask[0] {
        NodeKind::Spc
    } else {
        NodeKind::Branch
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    /// First covered input index (zero-based).
    pub start: usize,
    pub len: usize,
    /// Root is depth 0; a node of length `len` sits at depth `log2(N / len)`.
    pub depth: usize,
    pub kind: NodeKind,
    /// Arena indices of the left and right halves for branch nodes.
    pub children: Option<(usize, usize)>,
}

impl TreeNode {
    pub fn end(&self) -> usize {
        self.start + self.len - 1
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Pruned decoding tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodingTree {
    pub n_bits: usize,
    pub max_node_size: usize,
    nodes: Vec<TreeNode>,
}

impl DecodingTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Leaves in decoding order.
    pub fn leaves(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        self.collect_leaves(0, &mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, id: usize, out: &mut Vec<&'a TreeNode>) {
        let node = &self.nodes[id];
        match node.children {
            None => out.push(node),
            Some((l, r)) => {
                self.collect_leaves(l, out);
                self.collect_leaves(r, out);
            }
        }
    }

    pub fn branch_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }

    /// Indented text rendering, one node per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_node(0, 0, &mut out);
        out
    }

    fn dump_node(&self, id: usize, indent: usize, out: &mut String) {
        let node = &self.nodes[id];
        let _ = writeln!(
            out,
            "{:indent$}[{}..{}] {} (N_s={})",
            "",
            node.start,
            node.end(),
            node.kind,
            node.len,
            indent = 2 * indent
        );
        if let Some((l, r)) = node.children {
            self.dump_node(l, indent + 1, out);
            self.dump_node(r, indent + 1, out);
        }
    }
}

/// Greedy top-down decomposition of the code's frozen pattern.
pub fn decompose(spec: &CodeSpec, max_node_size: usize) -> DecodingTree {
    decompose_mask(spec.frozen_mask(), max_node_size)
}

/// Decomposes an arbitrary frozen mask. A span becomes a leaf as soon as it
/// fits `max_node_size` and matches a special pattern; length-1 spans always do.
pub fn decompose_mask(frozen_mask: &[bool], max_node_size: usize) -> DecodingTree {
    let n = frozen_mask.len();
    assert!(n.is_power_of_two(), "code length must be a power of two");
    let cap = max_node_size.max(1);
    let mut nodes = Vec::new();
    build(frozen_mask, 0, n, 0, cap, &mut nodes);
    DecodingTree {
        n_bits: n,
        max_node_size: cap,
        nodes,
    }
}

fn build(
    mask: &[bool],
    start: usize,
    len: usize,
    depth: usize,
    cap: usize,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let id = nodes.len();
    let kind = match classify_node(&mask[start..start + len]) {
        k if len == 1 || (len <= cap && k != NodeKind::Branch) => k,
        _ => NodeKind::Branch,
    };
    nodes.push(TreeNode {
        start,
        len,
        depth,
        kind,
        children: None,
    });
    if kind == NodeKind::Branch {
        let half = len / 2;
        let l = build(mask, start, half, depth + 1, cap, nodes);
        let r = build(mask, start + half, half, depth + 1, cap, nodes);
        nodes[id].children = Some((l, r));
    }
    id
}

/// `(start, len)` of every leaf, in order.
pub fn leaf_spans(frozen_mask: &[bool], max_node_size: usize) -> Vec<(usize, usize)> {
    decompose_mask(frozen_mask, max_node_size)
        .leaves()
        .iter()
        .map(|n| (n.start, n.len))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_code_spec, CodeParams};
    use proptest::prelude::*;

    fn mask(bits: &[u8]) -> Vec<bool> {
        bits.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn classification_table() {
        assert_eq!(classify_node(&mask(&[1, 1, 1, 1])), NodeKind::Rate0);
        assert_eq!(classify_node(&mask(&[1, 0])), NodeKind::Rep);
        assert_eq!(classify_node(&mask(&[0, 0])), NodeKind::Rate1);
        assert_eq!(classify_node(&mask(&[1, 0, 0, 0])), NodeKind::Spc);
        assert_eq!(classify_node(&mask(&[1, 0, 1, 0])), NodeKind::Branch);
        assert_eq!(classify_node(&mask(&[1, 1, 1, 0])), NodeKind::Rep);
        assert_eq!(classify_node(&mask(&[0, 1])), NodeKind::Branch);
    }

    #[test]
    fn all_frozen_is_single_leaf() {
        let tree = decompose_mask(&[true; 16], 16);
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.root().kind, NodeKind::Rate0);
        let capped = decompose_mask(&[true; 16], 4);
        assert_eq!(capped.leaves().len(), 4);
    }

    #[test]
    fn fig1_code_tree() {
        let tree = decompose_mask(&mask(&[0, 0, 1, 0]), 4);
        assert_eq!(tree.root().kind, NodeKind::Branch);
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 2);
        assert_eq!((leaves[0].start, leaves[0].len, leaves[0].kind), (0, 2, NodeKind::Rate1));
        assert_eq!((leaves[1].start, leaves[1].len, leaves[1].kind), (2, 2, NodeKind::Rep));
        let dump = tree.dump();
        assert!(dump.starts_with("[0..3] Branch"));
        assert!(dump.contains("\n  [2..3] REP"));
    }

    #[test]
    fn irregular_pair_falls_back_to_single_bits() {
        let tree = decompose_mask(&mask(&[0, 1]), 2);
        let kinds: Vec<_> = tree.leaves().iter().map(|n| n.kind).collect();
        assert_eq!(kinds, vec![NodeKind::Rate1, NodeKind::Rate0]);
    }

    #[test]
    fn nr_512_leaves_tile_and_are_special() {
        let spec = build_code_spec(&CodeParams::new(512, 256)).unwrap();
        let tree = decompose(&spec, 512);
        let mut next = 0;
        for leaf in tree.leaves() {
            assert_eq!(leaf.start, next);
            assert_ne!(leaf.kind, NodeKind::Branch);
            assert_eq!(classify_node(&spec.frozen_mask()[leaf.start..=leaf.end()]), leaf.kind);
            assert!(leaf.len >= 2);
            next += leaf.len;
        }
        assert_eq!(next, 512);
        assert_eq!(tree, decompose(&spec, 512));
    }

    proptest! {
        #[test]
        fn leaves_partition_any_mask(bits in proptest::collection::vec(any::<bool>(), 32), cap_log in 0u32..6) {
            let tree = decompose_mask(&bits, 1 << cap_log);
            let mut next = 0;
            for leaf in tree.leaves() {
                prop_assert_eq!(leaf.start, next);
                prop_assert!(leaf.len <= (1 << cap_log).max(1));
                prop_assert_ne!(classify_node(&bits[leaf.start..=leaf.end()]), NodeKind::Branch);
                next += leaf.len;
            }
            prop_assert_eq!(next, 32);
        }
    }
}
