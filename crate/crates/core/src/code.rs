//! Polar code construction and encoding.
//!
//! Indices are zero-based throughout the API: bit-channel `idx` here is the
//! channel usually written `u_{idx+1}`.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::crc::{crc_compute, CrcKind};
use crate::error::{Error, Result};
use crate::tree;

/// Environment variable naming a replacement reliability-sequence file.
pub const SEQ_PATH_ENV: &str = "POLARSOFT_SEQ_PATH";

const NR_SEQUENCE: &str = include_str!("../data/nr_reliability_1024.txt");

/// Taps of the dynamic frozen rule `u_i = u_{i-2} ^ u_{i-3} ^ u_{i-5} ^ u_{i-6}`.
pub const DYNAMIC_TAPS: [usize; 4] = [2, 3, 5, 6];

/// Frozen channels with zero-based index below this stay static.
pub const DYNAMIC_MIN_INDEX: usize = 6;

/// How the values of frozen bits are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DynamicRule {
    /// Every frozen bit is zero.
    #[default]
    AllStatic,
    /// Frozen bits past the sixth follow the four-tap XOR rule, limited to the
    /// first `f_d` frozen positions of every special node.
    PartialDynamic,
}

/// Bit-channel ordering used to pick information positions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub enum Construction {
    /// 3GPP NR universal reliability sequence (embedded, up to N = 1024).
    #[default]
    FiveGSequence,
    /// Gaussian approximation of density evolution at the given design
    /// Es/N0 in dB.
    GaussianApprox(f64),
}

/// Parameters accepted by [`build_code_spec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n_bits: usize,
    pub k_info: usize,
    pub crc: CrcKind,
    pub dynamic_rule: DynamicRule,
    pub f_d: usize,
    pub construction: Construction,
    /// Node cap used when assigning the per-node dynamic budget; `None` means N.
    pub max_node_size: Option<usize>,
}

impl CodeParams {
    pub fn new(n_bits: usize, k_info: usize) -> Self {
        CodeParams {
            n_bits,
            k_info,
            crc: CrcKind::None,
            dynamic_rule: DynamicRule::AllStatic,
            f_d: 3,
            construction: Construction::FiveGSequence,
            max_node_size: None,
        }
    }

    pub fn crc(mut self, crc: CrcKind) -> Self {
        self.crc = crc;
        self
    }

    pub fn dynamic(mut self, rule: DynamicRule, f_d: usize) -> Self {
        self.dynamic_rule = rule;
        self.f_d = f_d;
        self
    }

    pub fn construction(mut self, construction: Construction) -> Self {
        self.construction = construction;
        self
    }

    pub fn max_node_size(mut self, size: usize) -> Self {
        self.max_node_size = Some(size);
        self
    }
}

/// An immutable polar code description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub n_bits: usize,
    /// Payload length, CRC excluded.
    pub k_info: usize,
    pub crc: CrcKind,
    /// Sorted information positions; CRC bits occupy the last `crc.len()`.
    pub info_set: Vec<usize>,
    pub frozen_set: Vec<usize>,
    /// `frozen_suffix_count[idx]` counts frozen positions strictly after `idx`.
    pub frozen_suffix_count: Vec<usize>,
    pub dynamic_rule: DynamicRule,
    pub f_d: usize,
    frozen_mask: Vec<bool>,
    dynamic_mask: Vec<bool>,
}

fn check_length(n_bits: usize) -> Result<()> {
    if n_bits < 2 || !n_bits.is_power_of_two() {
        return Err(Error::InvalidLength(n_bits));
    }
    Ok(())
}

/// Builds a code from its length, payload size and construction method.
pub fn build_code_spec(params: &CodeParams) -> Result<CodeSpec> {
    let n = params.n_bits;
    check_length(n)?;
    let info_len = params.k_info + params.crc.len();
    if info_len > n {
        return Err(Error::DimensionTooLarge {
            n,
            k: params.k_info,
            crc_len: params.crc.len(),
        });
    }
    let order = reliability_order(n, &params.construction)?;
    let mut info_set = order[n - info_len..].to_vec();
    info_set.sort_unstable();
    CodeSpec::from_info_set(
        n,
        &info_set,
        params.crc,
        params.dynamic_rule,
        params.f_d,
        params.max_node_size,
    )
}

impl CodeSpec {
    /// Builds a code from an explicit information set (zero-based indices).
    pub fn from_info_set(
        n_bits: usize,
        info_set: &[usize],
        crc: CrcKind,
        dynamic_rule: DynamicRule,
        f_d: usize,
        max_node_size: Option<usize>,
    ) -> Result<CodeSpec> {
        check_length(n_bits)?;
        let mut frozen_mask = vec![true; n_bits];
        for &i in info_set {
            if i >= n_bits || !frozen_mask[i] {
                return Err(Error::Config(format!("bad information index {i}")));
            }
            frozen_mask[i] = false;
        }
        if info_set.len() < crc.len() {
            return Err(Error::DimensionTooLarge {
                n: n_bits,
                k: info_set.len(),
                crc_len: crc.len(),
            });
        }
        let info_set: Vec<usize> = (0..n_bits).filter(|&i| !frozen_mask[i]).collect();
        let frozen_set: Vec<usize> = (0..n_bits).filter(|&i| frozen_mask[i]).collect();

        let mut frozen_suffix_count = vec![0; n_bits];
        let mut count = 0;
        for idx in (0..n_bits).rev() {
            frozen_suffix_count[idx] = count;
            if frozen_mask[idx] {
                count += 1;
            }
        }

        let dynamic_mask = match dynamic_rule {
            DynamicRule::AllStatic => vec![false; n_bits],
            DynamicRule::PartialDynamic => {
                let cap = max_node_size.unwrap_or(n_bits).clamp(1, n_bits);
                let mut mask = vec![false; n_bits];
                for (start, len) in tree::leaf_spans(&frozen_mask, cap) {
                    (start..start + len)
                        .filter(|&i| frozen_mask[i])
                        .take(f_d)
                        .filter(|&i| i >= DYNAMIC_MIN_INDEX)
                        .for_each(|i| mask[i] = true);
                }
                mask
            }
        };

        Ok(CodeSpec {
            n_bits,
            k_info: info_set.len() - crc.len(),
            crc,
            info_set,
            frozen_set,
            frozen_suffix_count,
            dynamic_rule,
            f_d,
            frozen_mask,
            dynamic_mask,
        })
    }

    pub fn is_frozen(&self, idx: usize) -> bool {
        self.frozen_mask[idx]
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen_mask
    }

    /// True when frozen position `idx` takes its value from the XOR rule.
    pub fn is_dynamic(&self, idx: usize) -> bool {
        self.dynamic_mask[idx]
    }

    pub fn dynamic_mask(&self) -> &[bool] {
        &self.dynamic_mask
    }

    /// Number of information positions including CRC bits.
    pub fn info_len(&self) -> usize {
        self.info_set.len()
    }

    /// |F^(idx:N)| in zero-based form; `idx = None` stands for the tree root.
    pub fn frozen_after(&self, idx: Option<usize>) -> usize {
        match idx {
            Some(i) => self.frozen_suffix_count[i],
            None => self.frozen_set.len(),
        }
    }

    pub fn rate(&self) -> f64 {
        self.k_info as f64 / self.n_bits as f64
    }

    /// Value a frozen position must carry given the already-decided prefix.
    pub fn frozen_value(&self, u_prefix: &[u8], idx: usize) -> u8 {
        dynamic_frozen_fill(self, u_prefix, idx)
    }

    /// Extracts the payload (CRC excluded) from a full input vector.
    pub fn payload_of(&self, u: &[u8]) -> Vec<u8> {
        self.info_set[..self.k_info].iter().map(|&i| u[i]).collect()
    }

    /// Information bits including the CRC, in position order.
    pub fn info_block_of(&self, u: &[u8]) -> Vec<u8> {
        self.info_set.iter().map(|&i| u[i]).collect()
    }
}

/// Input vector `u` with every frozen position filled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputVector {
    pub bits: Vec<u8>,
}

/// XOR of the rule taps over the prefix `u[..idx]`.
pub fn dynamic_xor(u_prefix: &[u8], idx: usize) -> u8 {
    DYNAMIC_TAPS
        .iter()
        .filter_map(|&t| idx.checked_sub(t).map(|j| u_prefix[j]))
        .fold(0, |acc, b| acc ^ b)
}

/// Value of frozen position `idx`: the XOR rule for dynamic positions, zero otherwise.
pub fn dynamic_frozen_fill(spec: &CodeSpec, u_prefix: &[u8], idx: usize) -> u8 {
    if spec.dynamic_mask[idx] {
        dynamic_xor(u_prefix, idx)
    } else {
        0
    }
}

/// In-place `x <- x G_N` over GF(2); an involution.
pub fn polar_transform(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in bits.chunks_mut(2 * half) {
            let (left, right) = block.split_at_mut(half);
            for (l, r) in left.iter_mut().zip(right.iter()) {
                *l ^= *r;
            }
        }
        half *= 2;
    }
}

/// Places `info_block` (payload plus CRC) and fills frozen positions in order.
pub fn fill_input(spec: &CodeSpec, info_block: &[u8]) -> InputVector {
    let mut u = vec![0u8; spec.n_bits];
    let mut next = info_block.iter();
    for idx in 0..spec.n_bits {
        u[idx] = if spec.is_frozen(idx) {
            dynamic_frozen_fill(spec, &u[..idx], idx)
        } else {
            *next.next().expect("info block shorter than info set")
        };
    }
    InputVector { bits: u }
}

/// Encodes a payload of `k_info` bits, appending the CRC when configured.
pub fn encode(spec: &CodeSpec, info_bits: &[u8]) -> Result<(InputVector, Vec<u8>)> {
    if info_bits.len() != spec.k_info {
        return Err(Error::PayloadLength {
            expected: spec.k_info,
            got: info_bits.len(),
        });
    }
    let mut block = info_bits.to_vec();
    block.extend(crc_compute(info_bits, spec.crc));
    let input = fill_input(spec, &block);
    let mut codeword = input.bits.clone();
    polar_transform(&mut codeword);
    Ok((input, codeword))
}

/// Bit-channel indices `< n` ordered from least to most reliable.
pub fn reliability_order(n: usize, construction: &Construction) -> Result<Vec<usize>> {
    match construction {
        Construction::FiveGSequence => {
            let seq = nr_sequence()?;
            if n > seq.len() {
                return Err(Error::SequenceTooShort { n, max: seq.len() });
            }
            Ok(seq.iter().copied().filter(|&i| i < n).collect())
        }
        Construction::GaussianApprox(design_snr_db) => Ok(gaussian_approx_order(n, *design_snr_db)),
    }
}

/// Parses a sequence file: one zero-based index per line, `#` comments allowed.
pub fn parse_sequence(text: &str) -> Result<Vec<usize>> {
    let seq = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<usize>()
                .map_err(|e| Error::BadSequence(format!("{l:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut seen = vec![false; seq.len()];
    for &i in &seq {
        if i >= seq.len() || std::mem::replace(&mut seen[i], true) {
            return Err(Error::BadSequence(format!(
                "not a permutation of 0..{}",
                seq.len()
            )));
        }
    }
    if !seq.len().is_power_of_two() {
        return Err(Error::BadSequence(format!("length {} is not a power of two", seq.len())));
    }
    Ok(seq)
}

/// Loads a sequence file from disk.
pub fn load_sequence(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_sequence(&text)
}

fn nr_sequence() -> Result<&'static [usize]> {
    static EMBEDDED: OnceLock<Vec<usize>> = OnceLock::new();
    static OVERRIDE: OnceLock<std::result::Result<Vec<usize>, String>> = OnceLock::new();
    if let Some(path) = std::env::var_os(SEQ_PATH_ENV) {
        return OVERRIDE
            .get_or_init(|| load_sequence(Path::new(&path)).map_err(|e| e.to_string()))
            .as_deref()
            .map_err(|e| Error::BadSequence(e.clone()));
    }
    Ok(EMBEDDED.get_or_init(|| parse_sequence(NR_SEQUENCE).expect("embedded sequence is valid")))
}

/// Chung's approximation of the mean-LLR update for check nodes.
fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < 10.0 {
        (-0.4527 * x.powf(0.86) + 0.0218).exp()
    } else {
        (std::f64::consts::PI / x).sqrt() * (-x / 4.0).exp() * (1.0 - 10.0 / (7.0 * x))
    }
}

fn phi_inv(y: f64) -> f64 {
    if y >= 1.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while phi(hi) > y {
        hi *= 2.0;
        if hi > 1e6 {
            return hi;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn gaussian_approx_order(n: usize, design_snr_db: f64) -> Vec<usize> {
    let sigma2 = 1.0 / (2.0 * 10f64.powf(design_snr_db / 10.0));
    let mut means = vec![2.0 / sigma2];
    while means.len() < n {
        means = means
            .iter()
            .flat_map(|&m| {
                let worse = phi_inv(1.0 - (1.0 - phi(m)).powi(2));
                [worse, 2.0 * m]
            })
            .collect();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
    order
}
