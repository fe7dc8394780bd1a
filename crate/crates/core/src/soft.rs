//! Codebook-probability tracking and bit-wise APP LLR estimation.
//!
//! All probability masses are kept as natural logarithms; `f64::NEG_INFINITY`
//! stands for zero mass.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::channel::{log_channel_posterior, LlrFrame};
use crate::code::CodeSpec;
use crate::tree::NodeKind;

/// Default saturation for APP and Pyndiah LLRs.
pub const DEFAULT_LLR_CLAMP: f64 = 40.0;

/// Relative tolerance for negative residual brackets.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// `ln(e^a + e^b)`.
#[inline]
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum e^x)` over an iterator, with a max shift.
pub fn logsumexp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Residual contributed by one special node, kept for audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeResidual {
    pub start: usize,
    pub end: usize,
    pub kind: NodeKind,
    pub mass_log: f64,
    /// `1 - survivors / parents` for Rate1 and SPC nodes, before clamping.
    pub bracket: Option<f64>,
}

/// Audit record of one decision point: a bit for SCL, a leaf for fast SCL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditStep {
    /// Bit index, or the first index of the leaf.
    pub idx: usize,
    /// Metrics of the paths entering the decision, ascending.
    pub parent_pms: Vec<f64>,
    /// Unvisited mass reported at this step.
    pub discarded_mass_log: f64,
}

/// Running estimate of the codebook probability from one decoding tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookProbTracker {
    visited_mass_log: f64,
    unvisited_mass_log: f64,
    residuals: Vec<NodeResidual>,
    min_bracket: f64,
    violations: usize,
    audit: Option<Vec<AuditStep>>,
}

impl Default for CodebookProbTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl CodebookProbTracker {
    pub fn new() -> Self {
        CodebookProbTracker {
            visited_mass_log: f64::NEG_INFINITY,
            unvisited_mass_log: f64::NEG_INFINITY,
            residuals: Vec::new(),
            min_bracket: f64::INFINITY,
            violations: 0,
            audit: None,
        }
    }

    /// Tracker that also keeps a per-step log, see [`AuditStep`].
    pub fn with_audit() -> Self {
        CodebookProbTracker {
            audit: Some(Vec::new()),
            ..Self::new()
        }
    }

    pub fn is_auditing(&self) -> bool {
        self.audit.is_some()
    }

    pub fn audit_steps(&self) -> &[AuditStep] {
        self.audit.as_deref().unwrap_or(&[])
    }

    /// Opens an audit step; a no-op unless auditing.
    pub fn begin_step(&mut self, idx: usize, parent_pms: &[f64]) {
        if let Some(log) = self.audit.as_mut() {
            let mut pms = parent_pms.to_vec();
            pms.sort_by(f64::total_cmp);
            log.push(AuditStep {
                idx,
                parent_pms: pms,
                discarded_mass_log: f64::NEG_INFINITY,
            });
        }
    }

    pub fn visited_mass_log(&self) -> f64 {
        self.visited_mass_log
    }

    pub fn unvisited_mass_log(&self) -> f64 {
        self.unvisited_mass_log
    }

    pub fn residuals(&self) -> &[NodeResidual] {
        &self.residuals
    }

    /// Smallest Rate1/SPC bracket seen so far (`+inf` when none).
    pub fn min_bracket(&self) -> f64 {
        self.min_bracket
    }

    /// Number of brackets below `-RESIDUAL_TOL`.
    pub fn violations(&self) -> usize {
        self.violations
    }

    /// Fails when any bracket fell below `-RESIDUAL_TOL`.
    pub fn check(&self) -> crate::error::Result<()> {
        if self.violations > 0 {
            return Err(crate::error::Error::NegativeResidual {
                value: self.min_bracket,
                tol: RESIDUAL_TOL,
            });
        }
        Ok(())
    }

    /// Adds a finished candidate with metric `pm` to the visited mass.
    pub fn add_visited(&mut self, pm: f64) {
        self.visited_mass_log = logaddexp(self.visited_mass_log, -pm);
    }

    fn add_unvisited(&mut self, mass_log: f64) {
        self.unvisited_mass_log = logaddexp(self.unvisited_mass_log, mass_log);
        if let Some(step) = self.audit.as_mut().and_then(|log| log.last_mut()) {
            step.discarded_mass_log = logaddexp(step.discarded_mass_log, mass_log);
        }
    }

    fn suffix_weight_log(spec: &CodeSpec, idx: usize) -> f64 {
        -(spec.frozen_after(Some(idx)) as f64) * std::f64::consts::LN_2
    }

    /// A bit-level SCL path pruned right after deciding information bit `idx`.
    pub fn report_scl_discard(&mut self, pm: f64, idx: usize, spec: &CodeSpec) {
        debug_assert!(!spec.is_frozen(idx));
        self.add_unvisited(-pm + Self::suffix_weight_log(spec, idx));
    }

    /// REP node: every pruned branch root counts with weight `2^-|F^(j_s:N)|`.
    pub fn node_residual_rep(&mut self, discarded_pms: &[f64], start: usize, end: usize, spec: &CodeSpec) {
        let weight = Self::suffix_weight_log(spec, end);
        let mass_log = logsumexp(discarded_pms.iter().map(|pm| -pm + weight));
        self.add_unvisited(mass_log);
        self.residuals.push(NodeResidual {
            start,
            end,
            kind: NodeKind::Rep,
            mass_log,
            bracket: None,
        });
    }

    /// Rate1 node: parent mass not covered by the survivors.
    pub fn node_residual_rate1(
        &mut self,
        parent_pms: &[f64],
        survivor_pms: &[f64],
        start: usize,
        end: usize,
        spec: &CodeSpec,
    ) -> f64 {
        self.bracket_residual(NodeKind::Rate1, parent_pms, survivor_pms, start, end, spec)
    }

    /// SPC node: `parent_pms_with_frozen_bit` already include the decision
    /// on the node's frozen bit.
    pub fn node_residual_spc(
        &mut self,
        parent_pms_with_frozen_bit: &[f64],
        survivor_pms: &[f64],
        start: usize,
        end: usize,
        spec: &CodeSpec,
    ) -> f64 {
        self.bracket_residual(NodeKind::Spc, parent_pms_with_frozen_bit, survivor_pms, start, end, spec)
    }

    fn bracket_residual(
        &mut self,
        kind: NodeKind,
        parent_pms: &[f64],
        survivor_pms: &[f64],
        start: usize,
        end: usize,
        spec: &CodeSpec,
    ) -> f64 {
        let parent_log = logsumexp(parent_pms.iter().map(|pm| -pm));
        let survivor_log = logsumexp(survivor_pms.iter().map(|pm| -pm));
        let bracket = if parent_log == f64::NEG_INFINITY {
            0.0
        } else {
            -(survivor_log - parent_log).exp_m1()
        };
        self.min_bracket = self.min_bracket.min(bracket);
        if bracket < -RESIDUAL_TOL {
            self.violations += 1;
        }
        let mass_log = if bracket > 0.0 {
            parent_log + bracket.ln() + Self::suffix_weight_log(spec, end)
        } else {
            f64::NEG_INFINITY
        };
        self.add_unvisited(mass_log);
        self.residuals.push(NodeResidual {
            start,
            end,
            kind,
            mass_log,
            bracket: Some(bracket),
        });
        bracket
    }

    /// `ln P*_U`: visited plus estimated unvisited mass.
    pub fn total_codebook_prob(&self) -> f64 {
        logaddexp(self.visited_mass_log, self.unvisited_mass_log)
    }
}

/// One finished decoding path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub u: Vec<u8>,
    pub codeword: Vec<u8>,
    pub pm: f64,
}

/// Soft decoder output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftDecodeOutput {
    pub app_llrs: Vec<f64>,
    pub codebook_prob_log: f64,
    /// Distinct codewords, ascending metric.
    pub candidates: Vec<Candidate>,
    pub best_codeword: Vec<u8>,
    pub best_u: Vec<u8>,
    /// Set when a CRC is configured and no candidate passes it.
    pub crc_failed: bool,
}

/// Merges candidates carrying the same codeword (masses add) and sorts by metric.
pub fn merge_duplicates(candidates: &[Candidate]) -> Vec<Candidate> {
    let mut index: HashMap<&[u8], usize> = HashMap::new();
    let mut out: Vec<Candidate> = Vec::with_capacity(candidates.len());
    for c in candidates {
        match index.get(c.codeword.as_slice()) {
            Some(&j) => out[j].pm = -logaddexp(-out[j].pm, -c.pm),
            None => {
                index.insert(&c.codeword, out.len());
                out.push(c.clone());
            }
        }
    }
    out.sort_by(|a, b| a.pm.total_cmp(&b.pm));
    out
}

fn saturate(x: f64, clamp: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-clamp, clamp)
    }
}

/// APP LLRs from a candidate list and a codebook-probability estimate.
///
/// Unvisited mass `max(0, P*_U - sum_V e^-PM)` is spread over each bit in
/// proportion to its channel posterior. Pass `clamp = f64::INFINITY` for the
/// raw values.
pub fn app_llrs(candidates: &[Candidate], codebook_prob_log: f64, llrs: &LlrFrame, clamp: f64) -> Vec<f64> {
    let merged = merge_duplicates(candidates);
    let visited_log = logsumexp(merged.iter().map(|c| -c.pm));
    let residual_log = if codebook_prob_log > visited_log {
        codebook_prob_log + (-(visited_log - codebook_prob_log).exp()).ln_1p()
    } else {
        f64::NEG_INFINITY
    };
    llrs.values
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let mut side = [f64::NEG_INFINITY; 2];
            for c in &merged {
                let b = usize::from(c.codeword[i]);
                side[b] = logaddexp(side[b], -c.pm);
            }
            let num = logaddexp(side[0], residual_log + log_channel_posterior(lambda, 0));
            let den = logaddexp(side[1], residual_log + log_channel_posterior(lambda, 1));
            saturate(num - den, clamp)
        })
        .collect()
}

/// List-only APP estimate; bits on which the list agrees saturate to `±clamp_beta`.
pub fn pyndiah_llrs(candidates: &[Candidate], clamp_beta: f64) -> Vec<f64> {
    let merged = merge_duplicates(candidates);
    let n = merged.first().map_or(0, |c| c.codeword.len());
    (0..n)
        .map(|i| {
            let mut side = [f64::NEG_INFINITY; 2];
            for c in &merged {
                let b = usize::from(c.codeword[i]);
                side[b] = logaddexp(side[b], -c.pm);
            }
            match (side[0] == f64::NEG_INFINITY, side[1] == f64::NEG_INFINITY) {
                (false, true) => clamp_beta,
                (true, false) => -clamp_beta,
                _ => saturate(side[0] - side[1], clamp_beta),
            }
        })
        .collect()
}
