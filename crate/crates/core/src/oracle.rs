//! Exhaustive reference computations for small codes.
//!
//! The map from information block to codeword is linear even with dynamic
//! frozen bits, so the codebook is walked in Gray-code order with one
//! basis-row XOR per step.

use serde::{Deserialize, Serialize};

use crate::channel::{log_channel_posterior, LlrFrame};
use crate::code::{fill_input, polar_transform, CodeSpec};
use crate::error::{Error, Result};
use crate::soft::logsumexp;

/// Largest information length the oracle will enumerate.
pub const MAX_ORACLE_INFO_BITS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub exact_app_llrs: Vec<f64>,
    pub exact_codebook_prob_log: f64,
    pub ml_codeword: Vec<u8>,
}

fn basis(spec: &CodeSpec) -> Vec<Vec<u8>> {
    let k = spec.info_len();
    (0..k)
        .map(|j| {
            let mut block = vec![0u8; k];
            block[j] = 1;
            let mut c = fill_input(spec, &block).bits;
            polar_transform(&mut c);
            c
        })
        .collect()
}

/// Calls `visit` once per codeword.
fn for_each_codeword(spec: &CodeSpec, mut visit: impl FnMut(&[u8])) -> Result<()> {
    let k = spec.info_len();
    if k > MAX_ORACLE_INFO_BITS {
        return Err(Error::EnumerationTooLarge {
            k,
            limit: MAX_ORACLE_INFO_BITS,
        });
    }
    let rows = basis(spec);
    let mut c = vec![0u8; spec.n_bits];
    visit(&c);
    for t in 1usize..1 << k {
        for (x, g) in c.iter_mut().zip(&rows[t.trailing_zeros() as usize]) {
            *x ^= g;
        }
        visit(&c);
    }
    Ok(())
}

fn log_weight(c: &[u8], llrs: &LlrFrame) -> f64 {
    c.iter().zip(&llrs.values).map(|(&b, &l)| log_channel_posterior(l, b)).sum()
}

fn check_frame(spec: &CodeSpec, llrs: &LlrFrame) -> Result<()> {
    if llrs.len() != spec.n_bits {
        return Err(Error::FrameLength {
            expected: spec.n_bits,
            got: llrs.len(),
        });
    }
    Ok(())
}

/// Exact APP LLRs, codebook probability and ML codeword in one pass.
/// Infinite LLRs are saturated to `±clamp`.
pub fn oracle(spec: &CodeSpec, llrs: &LlrFrame, clamp: f64) -> Result<OracleResult> {
    check_frame(spec, llrs)?;
    let mut logs = Vec::with_capacity(1 << spec.info_len().min(MAX_ORACLE_INFO_BITS));
    let mut ml: Option<(f64, Vec<u8>)> = None;
    for_each_codeword(spec, |c| {
        let w = log_weight(c, llrs);
        logs.push(w);
        let better = match &ml {
            None => true,
            Some((best, word)) => w > *best || (w == *best && c < word.as_slice()),
        };
        if better {
            ml = Some((w, c.to_vec()));
        }
    })?;
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut side = vec![[0.0f64; 2]; spec.n_bits];
    let mut i = 0;
    for_each_codeword(spec, |c| {
        let w = (logs[i] - max).exp();
        i += 1;
        for (s, &b) in side.iter_mut().zip(c) {
            s[usize::from(b)] += w;
        }
    })?;
    let exact_app_llrs = side
        .iter()
        .map(|s| {
            let v = s[0].ln() - s[1].ln();
            if v.is_nan() {
                0.0
            } else {
                v.clamp(-clamp, clamp)
            }
        })
        .collect();
    Ok(OracleResult {
        exact_app_llrs,
        exact_codebook_prob_log: logsumexp(logs),
        ml_codeword: ml.expect("codebook is never empty").1,
    })
}

/// `ln` of the total posterior mass of the codebook.
pub fn exact_codebook_prob(spec: &CodeSpec, llrs: &LlrFrame) -> Result<f64> {
    check_frame(spec, llrs)?;
    let mut logs = Vec::new();
    for_each_codeword(spec, |c| logs.push(log_weight(c, llrs)))?;
    Ok(logsumexp(logs))
}

pub fn exact_app_llrs(spec: &CodeSpec, llrs: &LlrFrame, clamp: f64) -> Result<Vec<f64>> {
    Ok(oracle(spec, llrs, clamp)?.exact_app_llrs)
}

/// Most likely codeword; ties go to the lexicographically smallest.
pub fn ml_decode(spec: &CodeSpec, llrs: &LlrFrame) -> Result<Vec<u8>> {
    check_frame(spec, llrs)?;
    let mut best: Option<(f64, Vec<u8>)> = None;
    for_each_codeword(spec, |c| {
        let w = log_weight(c, llrs);
        if best.as_ref().is_none_or(|(b, word)| w > *b || (w == *b && c < word.as_slice())) {
            best = Some((w, c.to_vec()));
        }
    })?;
    Ok(best.expect("codebook is never empty").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_code_spec, encode, CodeParams, DynamicRule};
    use crate::crc::CrcKind;
    use crate::soft::DEFAULT_LLR_CLAMP;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_llrs(rng: &mut ChaCha8Rng, n: usize) -> LlrFrame {
        LlrFrame::new((0..n).map(|_| rng.random_range(-4.0..4.0)).collect())
    }

    #[test]
    fn full_space_has_unit_mass() {
        let spec = build_code_spec(&CodeParams::new(8, 8)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = exact_codebook_prob(&spec, &random_llrs(&mut rng, 8)).unwrap();
        assert!(p.abs() < 1e-12);
    }

    #[test]
    fn single_codeword_mass() {
        let spec = build_code_spec(&CodeParams::new(4, 0)).unwrap();
        let llrs = LlrFrame::new(vec![1.0, -0.5, 2.0, 0.0]);
        let want: f64 = llrs.values.iter().map(|&l| log_channel_posterior(l, 0)).sum();
        assert!((exact_codebook_prob(&spec, &llrs).unwrap() - want).abs() < 1e-14);
        assert_eq!(ml_decode(&spec, &llrs).unwrap(), vec![0; 4]);
    }

    #[test]
    fn repetition_closed_form() {
        let spec = CodeSpec::from_info_set(2, &[1], CrcKind::None, DynamicRule::AllStatic, 3, None).unwrap();
        let (a, b) = (0.8, -2.1);
        let app = exact_app_llrs(&spec, &LlrFrame::new(vec![a, b]), DEFAULT_LLR_CLAMP).unwrap();
        assert!((app[0] - (a + b)).abs() < 1e-12);
        assert!((app[1] - (a + b)).abs() < 1e-12);
    }

    #[test]
    fn symmetric_outputs_give_zero() {
        let spec = build_code_spec(&CodeParams::new(16, 8)).unwrap();
        let app = exact_app_llrs(&spec, &LlrFrame::new(vec![0.0; 16]), DEFAULT_LLR_CLAMP).unwrap();
        assert!(app.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn antisymmetric_under_negation() {
        // the all-ones codeword is in the codebook when the last index is information
        let spec = build_code_spec(&CodeParams::new(16, 8)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let llrs = random_llrs(&mut rng, 16);
        let neg = LlrFrame::new(llrs.values.iter().map(|v| -v).collect());
        let a = exact_app_llrs(&spec, &llrs, 1e9).unwrap();
        let b = exact_app_llrs(&spec, &neg, 1e9).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x + y).abs() < 1e-9);
        }
    }

    #[test]
    fn enumeration_matches_brute_force_over_all_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for rule in [DynamicRule::AllStatic, DynamicRule::PartialDynamic] {
            let spec = build_code_spec(&CodeParams::new(16, 6).dynamic(rule, 3)).unwrap();
            let llrs = random_llrs(&mut rng, 16);
            let mut logs = Vec::new();
            for bits in 0u32..1 << 16 {
                let u: Vec<u8> = (0..16).map(|i| ((bits >> i) & 1) as u8).collect();
                let valid = (0..16).all(|i| !spec.is_frozen(i) || spec.frozen_value(&u[..i], i) == u[i]);
                if valid {
                    let mut c = u;
                    polar_transform(&mut c);
                    logs.push(log_weight(&c, &llrs));
                }
            }
            assert_eq!(logs.len(), 64);
            let want = logsumexp(logs);
            assert!((exact_codebook_prob(&spec, &llrs).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_ml() {
        let spec = build_code_spec(&CodeParams::new(32, 12).dynamic(DynamicRule::PartialDynamic, 3)).unwrap();
        let payload: Vec<u8> = (0..12).map(|i| (i % 2) as u8).collect();
        let (_, cw) = encode(&spec, &payload).unwrap();
        let llrs = LlrFrame::from_codeword(&cw, 5.0);
        assert_eq!(ml_decode(&spec, &llrs).unwrap(), cw);
        let r = oracle(&spec, &llrs, DEFAULT_LLR_CLAMP).unwrap();
        assert_eq!(r.ml_codeword, cw);
        for (v, &b) in r.exact_app_llrs.iter().zip(&cw) {
            assert_eq!(*v < 0.0, b == 1);
        }
    }

    #[test]
    fn limits() {
        let spec = build_code_spec(&CodeParams::new(64, 21)).unwrap();
        assert!(matches!(
            exact_codebook_prob(&spec, &LlrFrame::new(vec![0.0; 64])),
            Err(Error::EnumerationTooLarge { k: 21, .. })
        ));
        let spec = build_code_spec(&CodeParams::new(8, 4)).unwrap();
        assert!(ml_decode(&spec, &LlrFrame::new(vec![0.0; 4])).is_err());
    }
}
