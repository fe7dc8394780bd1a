//! Check-node / variable-node LLR updates and path-metric increments.

use serde::{Deserialize, Serialize};

use crate::channel::softplus;

/// Check-node update flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FgMode {
    #[default]
    Exact,
    MinSum,
}

/// Path-metric increment flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PmMode {
    /// `ln(1 + e^{-(1-2u) lambda})`; `e^{-PM}` is then a true posterior.
    #[default]
    Exact,
    /// Zero when the decision agrees with the LLR sign, `|lambda|` otherwise.
    HardwareApprox,
}

/// `2 atanh(tanh(a/2) tanh(b/2))`, evaluated through the Jacobian logarithm
/// so that large magnitudes neither overflow nor lose precision.
#[inline]
pub fn f_op(a: f64, b: f64, mode: FgMode) -> f64 {
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    let min = a.abs().min(b.abs());
    match mode {
        FgMode::MinSum => sign * min,
        FgMode::Exact => {
            sign * min + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
        }
    }
}

/// Variable-node update `b + (1 - 2u) a`.
#[inline]
pub fn g_op(a: f64, b: f64, u: u8) -> f64 {
    if u == 0 {
        b + a
    } else {
        b - a
    }
}

/// Hard decision on an LLR: 1 when negative.
#[inline]
pub fn hard_decision(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

#[inline]
pub fn pm_increment(llr: f64, u_hat: u8, mode: PmMode) -> f64 {
    match mode {
        PmMode::Exact => softplus(if u_hat == 0 { -llr } else { llr }),
        PmMode::HardwareApprox => {
            if u_hat == hard_decision(llr) {
                0.0
            } else {
                llr.abs()
            }
        }
    }
}

/// The LLR of the first input bit of a block: the check-node reduction of
/// all entries, evaluated level by level as an SC decoder would.
pub fn first_bit_llr(alpha: &[f64], mode: FgMode) -> f64 {
    let mut buf = alpha.to_vec();
    let mut len = buf.len();
    while len > 1 {
        let half = len / 2;
        for k in 0..half {
            buf[k] = f_op(buf[k], buf[k + half], mode);
        }
        len = half;
    }
    buf[0]
}
