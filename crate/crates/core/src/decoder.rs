//! Soft-output wrappers and a single entry point for every decoder kind.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::LlrFrame;
use crate::code::CodeSpec;
use crate::error::{Error, Result};
use crate::fscl::fscl_decode;
use crate::scl::{crc_select, scl_decode, DecoderOptions, PathList};
use crate::soft::{app_llrs, merge_duplicates, pyndiah_llrs, Candidate, CodebookProbTracker, SoftDecodeOutput};
use crate::tree::{decompose, DecodingTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    Sc,
    Scl,
    Fscl,
    SoScl,
    SoFscl,
    Pyndiah,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 6] = [
        DecoderKind::Sc,
        DecoderKind::Scl,
        DecoderKind::Fscl,
        DecoderKind::SoScl,
        DecoderKind::SoFscl,
        DecoderKind::Pyndiah,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Sc => "sc",
            DecoderKind::Scl => "scl",
            DecoderKind::Fscl => "fscl",
            DecoderKind::SoScl => "so-scl",
            DecoderKind::SoFscl => "so-fscl",
            DecoderKind::Pyndiah => "pyndiah",
        }
    }

    pub fn is_soft(self) -> bool {
        matches!(self, DecoderKind::SoScl | DecoderKind::SoFscl | DecoderKind::Pyndiah)
    }

    pub fn uses_tree(self) -> bool {
        matches!(self, DecoderKind::Fscl | DecoderKind::SoFscl)
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DecoderKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown decoder '{s}'")))
    }
}

fn candidates_of(list: &PathList) -> Vec<Candidate> {
    list.paths
        .iter()
        .map(|p| Candidate {
            u: p.u_est.clone(),
            codeword: p.codeword.clone(),
            pm: p.path_metric,
        })
        .collect()
}

fn soft_output(
    spec: &CodeSpec,
    llrs: &LlrFrame,
    list: &PathList,
    tracker: &mut CodebookProbTracker,
    clamp: f64,
) -> SoftDecodeOutput {
    for p in &list.paths {
        tracker.add_visited(p.path_metric);
    }
    let codebook_prob_log = tracker.total_codebook_prob();
    let candidates = merge_duplicates(&candidates_of(list));
    let (best, crc_failed) = crc_select(list, spec);
    SoftDecodeOutput {
        app_llrs: app_llrs(&candidates, codebook_prob_log, llrs, clamp),
        codebook_prob_log,
        candidates,
        best_codeword: best.codeword.clone(),
        best_u: best.u_est.clone(),
        crc_failed,
    }
}

/// SO-SCL, also returning the tracker that produced `P*_U`.
pub fn so_scl_decode_traced(
    spec: &CodeSpec,
    llrs: &LlrFrame,
    list_size: usize,
    opts: DecoderOptions,
    clamp: f64,
    mut tracker: CodebookProbTracker,
) -> (SoftDecodeOutput, CodebookProbTracker) {
    let list = scl_decode(spec, llrs, list_size, opts, Some(&mut tracker));
    let out = soft_output(spec, llrs, &list, &mut tracker, clamp);
    (out, tracker)
}

pub fn so_scl_decode(
    spec: &CodeSpec,
    llrs: &LlrFrame,
    list_size: usize,
    opts: DecoderOptions,
    clamp: f64,
) -> SoftDecodeOutput {
    so_scl_decode_traced(spec, llrs, list_size, opts, clamp, CodebookProbTracker::new()).0
}

/// SO-FSCL, also returning the tracker that produced `P*_U`.
pub fn so_fscl_decode_traced(
    spec: &CodeSpec,
    llrs: &LlrFrame,
    list_size: usize,
    tree: &DecodingTree,
    opts: DecoderOptions,
    clamp: f64,
    mut tracker: CodebookProbTracker,
) -> (SoftDecodeOutput, CodebookProbTracker) {
    let list = fscl_decode(spec, llrs, list_size, tree, opts, Some(&mut tracker));
    let out = soft_output(spec, llrs, &list, &mut tracker, clamp);
    (out, tracker)
}

pub fn so_fscl_decode(
    spec: &CodeSpec,
    llrs: &LlrFrame,
    list_size: usize,
    tree: &DecodingTree,
    opts: DecoderOptions,
    clamp: f64,
) -> SoftDecodeOutput {
    so_fscl_decode_traced(spec, llrs, list_size, tree, opts, clamp, CodebookProbTracker::new()).0
}

/// Result of decoding one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDecision {
    /// Code-bit decisions used for bit-error counting: APP signs for soft
    /// decoders, the selected codeword otherwise.
    pub hard_bits: Vec<u8>,
    pub codeword: Vec<u8>,
    pub u_est: Vec<u8>,
    pub soft: Option<Vec<f64>>,
    pub crc_failed: bool,
}

/// A decoder bound to one code.
#[derive(Debug, Clone)]
pub struct FrameDecoder {
    pub spec: CodeSpec,
    pub kind: DecoderKind,
    pub list_size: usize,
    pub opts: DecoderOptions,
    pub llr_clamp: f64,
    tree: DecodingTree,
}

impl FrameDecoder {
    pub fn new(
        spec: CodeSpec,
        kind: DecoderKind,
        list_size: usize,
        opts: DecoderOptions,
        llr_clamp: f64,
        max_node_size: usize,
    ) -> Result<Self> {
        if list_size == 0 {
            return Err(Error::Config("list size must be positive".into()));
        }
        if llr_clamp.is_nan() || llr_clamp <= 0.0 {
            return Err(Error::Config(format!("LLR clamp must be positive, got {llr_clamp}")));
        }
        let tree = decompose(&spec, max_node_size.clamp(1, spec.n_bits));
        Ok(FrameDecoder {
            spec,
            kind,
            list_size,
            opts,
            llr_clamp,
            tree,
        })
    }

    pub fn tree(&self) -> &DecodingTree {
        &self.tree
    }

    pub fn decode(&self, llrs: &LlrFrame) -> FrameDecision {
        let spec = &self.spec;
        let hard = |list: PathList| {
            let (best, crc_failed) = crc_select(&list, spec);
            FrameDecision {
                hard_bits: best.codeword.clone(),
                codeword: best.codeword.clone(),
                u_est: best.u_est.clone(),
                soft: None,
                crc_failed,
            }
        };
        let soft = |out: SoftDecodeOutput, values: Vec<f64>| FrameDecision {
            hard_bits: values.iter().map(|&v| u8::from(v < 0.0)).collect(),
            codeword: out.best_codeword,
            u_est: out.best_u,
            soft: Some(values),
            crc_failed: out.crc_failed,
        };
        let l = self.list_size;
        match self.kind {
            DecoderKind::Sc => hard(scl_decode(spec, llrs, 1, self.opts, None)),
            DecoderKind::Scl => hard(scl_decode(spec, llrs, l, self.opts, None)),
            DecoderKind::Fscl => hard(fscl_decode(spec, llrs, l, &self.tree, self.opts, None)),
            DecoderKind::SoScl => {
                let out = so_scl_decode(spec, llrs, l, self.opts, self.llr_clamp);
                let v = out.app_llrs.clone();
                soft(out, v)
            }
            DecoderKind::SoFscl => {
                let out = so_fscl_decode(spec, llrs, l, &self.tree, self.opts, self.llr_clamp);
                let v = out.app_llrs.clone();
                soft(out, v)
            }
            DecoderKind::Pyndiah => {
                let out = so_scl_decode(spec, llrs, l, self.opts, self.llr_clamp);
                let v = pyndiah_llrs(&out.candidates, self.llr_clamp);
                soft(out, v)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_code_spec, encode, CodeParams, DynamicRule};
    use crate::soft::DEFAULT_LLR_CLAMP;

    #[test]
    fn names_round_trip() {
        for k in DecoderKind::ALL {
            assert_eq!(k.name().parse::<DecoderKind>().unwrap(), k);
        }
        assert!("list".parse::<DecoderKind>().is_err());
    }

    #[test]
    fn every_kind_decodes_a_clean_frame() {
        let spec = build_code_spec(&CodeParams::new(32, 16).dynamic(DynamicRule::PartialDynamic, 3)).unwrap();
        let payload: Vec<u8> = (0..16).map(|i| (i % 3 == 0) as u8).collect();
        let (input, cw) = encode(&spec, &payload).unwrap();
        let llrs = LlrFrame::from_codeword(&cw, 8.0);
        for kind in DecoderKind::ALL {
            let dec = FrameDecoder::new(spec.clone(), kind, 4, DecoderOptions::default(), DEFAULT_LLR_CLAMP, 32).unwrap();
            let d = dec.decode(&llrs);
            assert_eq!(d.codeword, cw, "{kind}");
            assert_eq!(d.u_est, input.bits, "{kind}");
            assert_eq!(d.hard_bits, cw, "{kind}");
            assert_eq!(d.soft.is_some(), kind.is_soft());
        }
    }

    #[test]
    fn soft_outputs_agree_without_pruning() {
        let spec = build_code_spec(&CodeParams::new(16, 4)).unwrap();
        let tree = decompose(&spec, 16);
        let llrs = LlrFrame::new((0..16).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.6).collect());
        let a = so_scl_decode(&spec, &llrs, 16, DecoderOptions::default(), f64::INFINITY);
        let b = so_fscl_decode(&spec, &llrs, 16, &tree, DecoderOptions::default(), f64::INFINITY);
        assert!((a.codebook_prob_log - b.codebook_prob_log).abs() < 1e-9);
        for (x, y) in a.app_llrs.iter().zip(&b.app_llrs) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_settings() {
        let spec = build_code_spec(&CodeParams::new(8, 4)).unwrap();
        assert!(FrameDecoder::new(spec.clone(), DecoderKind::Scl, 0, DecoderOptions::default(), 40.0, 8).is_err());
        assert!(FrameDecoder::new(spec, DecoderKind::Scl, 2, DecoderOptions::default(), -1.0, 8).is_err());
    }
}
