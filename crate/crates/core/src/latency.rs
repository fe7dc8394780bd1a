//! Time-step latency model.
//!
//! Every operation within one stage runs in parallel, so an internal node
//! costs two steps (its `f` and `g` stages) and a leaf costs a fixed number
//! of steps depending on its kind, length and the list size.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::code::CodeSpec;
use crate::tree::{decompose, DecodingTree, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatencyDecoder {
    Scl,
    Fscl,
    SoScl,
    SoFscl,
}

impl LatencyDecoder {
    pub const ALL: [LatencyDecoder; 4] = [
        LatencyDecoder::Scl,
        LatencyDecoder::Fscl,
        LatencyDecoder::SoScl,
        LatencyDecoder::SoFscl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LatencyDecoder::Scl => "scl",
            LatencyDecoder::Fscl => "fscl",
            LatencyDecoder::SoScl => "so-scl",
            LatencyDecoder::SoFscl => "so-fscl",
        }
    }

    pub fn is_soft(self) -> bool {
        matches!(self, LatencyDecoder::SoScl | LatencyDecoder::SoFscl)
    }

    /// Bit-level decoders never use special nodes.
    pub fn is_fast(self) -> bool {
        matches!(self, LatencyDecoder::Fscl | LatencyDecoder::SoFscl)
    }
}

impl fmt::Display for LatencyDecoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn log2(n: usize) -> usize {
    n.trailing_zeros() as usize
}

/// Steps to decode one leaf.
///
/// The bit-level decoders pay for the whole subtree: `2(N_s - 1)` traversal
/// steps plus one per information bit.
pub fn node_cost(kind: NodeKind, node_len: usize, list_size: usize, decoder: LatencyDecoder) -> usize {
    debug_assert!(node_len.is_power_of_two());
    let (ns, l) = (node_len, list_size);
    match decoder {
        LatencyDecoder::Scl | LatencyDecoder::SoScl => match kind {
            NodeKind::Rate0 => 2 * ns - 2,
            NodeKind::Rep => 2 * ns - 1,
            NodeKind::Rate1 => 3 * ns - 2,
            NodeKind::Spc => 3 * ns - 3,
            NodeKind::Branch => unreachable!("branch nodes have no leaf cost"),
        },
        LatencyDecoder::Fscl => match kind {
            NodeKind::Rate0 => 1,
            NodeKind::Rep => 2,
            NodeKind::Rate1 => l.min(ns + 1),
            NodeKind::Spc => l.min(ns),
            NodeKind::Branch => unreachable!("branch nodes have no leaf cost"),
        },
        LatencyDecoder::SoFscl => match kind {
            NodeKind::Rate0 => 2,
            NodeKind::Rep => 3,
            NodeKind::Rate1 => l.min(ns + 1),
            NodeKind::Spc => log2(ns).max(l.min(ns)),
            NodeKind::Branch => unreachable!("branch nodes have no leaf cost"),
        },
    }
}

/// `2N + K - 2`, the bit-level SCL latency.
pub fn scl_closed_form(n_bits: usize, info_len: usize) -> usize {
    2 * n_bits + info_len - 2
}

/// Whether a decoder's report counts the final APP step by default.
pub fn default_final_soft_step(decoder: LatencyDecoder) -> bool {
    decoder == LatencyDecoder::SoFscl
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLatency {
    pub start: usize,
    pub end: usize,
    pub kind: NodeKind,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub decoder: LatencyDecoder,
    pub n_bits: usize,
    pub info_len: usize,
    pub list_size: usize,
    pub max_node_size: usize,
    pub total_steps: usize,
    pub traversal_steps: usize,
    pub per_node: Vec<NodeLatency>,
    pub includes_final_soft_step: bool,
}

impl LatencyReport {
    pub fn leaf_steps(&self) -> usize {
        self.per_node.iter().map(|n| n.steps).sum()
    }

    /// Leaf count and step total per node kind.
    pub fn kind_summary(&self) -> Vec<(NodeKind, usize, usize)> {
        [NodeKind::Rate0, NodeKind::Rep, NodeKind::Rate1, NodeKind::Spc]
            .into_iter()
            .map(|k| {
                let nodes = self.per_node.iter().filter(|n| n.kind == k);
                (k, nodes.clone().count(), nodes.map(|n| n.steps).sum())
            })
            .collect()
    }
}

/// Sums traversal and leaf costs over `tree`.
pub fn total_latency(tree: &DecodingTree, list_size: usize, decoder: LatencyDecoder, final_soft_step: bool) -> LatencyReport {
    let per_node: Vec<NodeLatency> = tree
        .leaves()
        .into_iter()
        .map(|leaf| NodeLatency {
            start: leaf.start,
            end: leaf.end(),
            kind: leaf.kind,
            steps: node_cost(leaf.kind, leaf.len, list_size, decoder),
        })
        .collect();
    let traversal_steps = 2 * tree.branch_count();
    let final_step = final_soft_step && decoder.is_soft();
    let total_steps = traversal_steps + per_node.iter().map(|n| n.steps).sum::<usize>() + usize::from(final_step);
    LatencyReport {
        decoder,
        n_bits: tree.n_bits,
        info_len: 0,
        list_size,
        max_node_size: tree.max_node_size,
        total_steps,
        traversal_steps,
        per_node,
        includes_final_soft_step: final_step,
    }
}

/// Reports for all four decoders. Bit-level decoders use a tree with unit
/// leaves; the fast ones use the greedy tree capped at `max_node_size`.
pub fn latency_reports(
    spec: &CodeSpec,
    list_size: usize,
    max_node_size: usize,
    so_scl_final_step: bool,
) -> Vec<LatencyReport> {
    let bit_tree = decompose(spec, 1);
    let fast_tree = decompose(spec, max_node_size.clamp(1, spec.n_bits));
    LatencyDecoder::ALL
        .into_iter()
        .map(|d| {
            let tree = if d.is_fast() { &fast_tree } else { &bit_tree };
            let final_step = match d {
                LatencyDecoder::SoScl => so_scl_final_step,
                other => default_final_soft_step(other),
            };
            let mut r = total_latency(tree, list_size, d, final_step);
            r.info_len = spec.info_len();
            r
        })
        .collect()
}

/// One JSON object per report.
pub fn reports_to_jsonl(reports: &[LatencyReport]) -> String {
    reports
        .iter()
        .map(|r| serde_json::to_string(r).expect("report serializes") + "\n")
        .collect()
}

/// Aligned summary table, one row per report.
pub fn reports_to_text(reports: &[LatencyReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>5} {:>5} {:>3} {:>6} {:>7} {:>5} {:>5} {:>5} {:>5} {:>7}",
        "decoder", "N", "K", "L", "steps", "travrs", "R0", "REP", "R1", "SPC", "final"
    );
    for r in reports {
        let s = r.kind_summary();
        let _ = writeln!(
            out,
            "{:<8} {:>5} {:>5} {:>3} {:>6} {:>7} {:>5} {:>5} {:>5} {:>5} {:>7}",
            r.decoder.name(),
            r.n_bits,
            r.info_len,
            r.list_size,
            r.total_steps,
            r.traversal_steps,
            s[0].2,
            s[1].2,
            s[2].2,
            s[3].2,
            if r.includes_final_soft_step { "+1" } else { "-" }
        );
    }
    out
}

/// Per-leaf listing for audits.
pub fn breakdown_text(report: &LatencyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} traversal: {}", report.decoder, report.traversal_steps);
    for n in &report.per_node {
        let _ = writeln!(out, "  [{}..{}] {:<5} {:>4}", n.start, n.end, n.kind.to_string(), n.steps);
    }
    out
}
