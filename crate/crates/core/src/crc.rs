//! Cyclic redundancy checks used by CRC-aided list decoding.
//!
//! Generator polynomials follow 3GPP TS 38.212; the shift register starts
//! at zero and bits are processed most-significant (first transmitted) first.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum CrcKind {
    #[default]
    None,
    /// g(x) = x^6 + x^5 + 1
    Crc6,
    /// g(x) = x^11 + x^10 + x^9 + x^5 + 1
    Crc11,
}

impl CrcKind {
    pub fn len(self) -> usize {
        match self {
            CrcKind::None => 0,
            CrcKind::Crc6 => 6,
            CrcKind::Crc11 => 11,
        }
    }

    pub fn is_none(self) -> bool {
        self == CrcKind::None
    }

    pub fn is_empty(self) -> bool {
        self.is_none()
    }

    /// Generator polynomial without the leading x^len term.
    fn poly(self) -> u32 {
        match self {
            CrcKind::None => 0,
            CrcKind::Crc6 => 0b10_0001,
            CrcKind::Crc11 => 0b110_0010_0001,
        }
    }
}

/// Remainder of `x^len * payload(x)` modulo the generator, as `len` bits,
/// highest-degree coefficient first. Empty for [`CrcKind::None`].
pub fn crc_compute(payload: &[u8], crc: CrcKind) -> Vec<u8> {
    let width = crc.len();
    if width == 0 {
        return Vec::new();
    }
    let mask = (1u32 << width) - 1;
    let top = width - 1;
    let mut reg = 0u32;
    for &bit in payload {
        let feedback = ((reg >> top) & 1) ^ u32::from(bit & 1);
        reg = (reg << 1) & mask;
        if feedback == 1 {
            reg ^= crc.poly();
        }
    }
    (0..width).rev().map(|s| ((reg >> s) & 1) as u8).collect()
}

/// True when the trailing `crc.len()` bits of `block` match the CRC of the rest.
pub fn crc_check(block: &[u8], crc: CrcKind) -> bool {
    let width = crc.len();
    if width == 0 {
        return true;
    }
    if block.len() < width {
        return false;
    }
    let (payload, tail) = block.split_at(block.len() - width);
    crc_compute(payload, crc) == tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook polynomial long division over GF(2), full generator included.
    fn long_division(payload: &[u8], generator: &[u8]) -> Vec<u8> {
        let width = generator.len() - 1;
        let mut dividend: Vec<u8> = payload.to_vec();
        dividend.extend(std::iter::repeat_n(0, width));
        for i in 0..payload.len() {
            if dividend[i] == 1 {
                for (j, &g) in generator.iter().enumerate() {
                    dividend[i + j] ^= g;
                }
            }
        }
        dividend[payload.len()..].to_vec()
    }

    const G6: [u8; 7] = [1, 1, 0, 0, 0, 0, 1];
    const G11: [u8; 12] = [1, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1];

    #[test]
    fn zero_payload_gives_zero_crc() {
        assert_eq!(crc_compute(&[0; 40], CrcKind::Crc6), vec![0; 6]);
        assert_eq!(crc_compute(&[0; 40], CrcKind::Crc11), vec![0; 11]);
    }

    #[test]
    fn single_one_bit_crc6() {
        // x^6 mod (x^6 + x^5 + 1) = x^5 + 1
        let expected = long_division(&[1], &G6);
        assert_eq!(expected, vec![1, 0, 0, 0, 0, 1]);
        assert_eq!(crc_compute(&[1], CrcKind::Crc6), expected);
    }

    #[test]
    fn none_is_empty_and_always_checks() {
        assert!(crc_compute(&[1, 0, 1], CrcKind::None).is_empty());
        assert!(crc_check(&[1, 0, 1], CrcKind::None));
    }

    proptest! {
        #[test]
        fn matches_long_division(payload in proptest::collection::vec(0u8..2, 1..80)) {
            prop_assert_eq!(crc_compute(&payload, CrcKind::Crc6), long_division(&payload, &G6));
            prop_assert_eq!(crc_compute(&payload, CrcKind::Crc11), long_division(&payload, &G11));
        }

        #[test]
        fn appended_crc_has_zero_syndrome(payload in proptest::collection::vec(0u8..2, 1..80)) {
            for kind in [CrcKind::Crc6, CrcKind::Crc11] {
                let mut block = payload.clone();
                block.extend(crc_compute(&payload, kind));
                prop_assert!(crc_compute(&block, kind).iter().all(|&b| b == 0));
                prop_assert!(crc_check(&block, kind));
            }
        }
    }
}
