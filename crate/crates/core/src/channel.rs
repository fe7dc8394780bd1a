//! BPSK over AWGN: modulation, noise, channel LLRs and per-bit posteriors.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Noise variance per real dimension.
    pub noise_variance: f64,
}

impl ChannelParams {
    pub fn new(noise_variance: f64) -> Result<Self> {
        if noise_variance.is_finite() && noise_variance > 0.0 {
            Ok(ChannelParams { noise_variance })
        } else {
            Err(Error::Config(format!("noise variance must be positive, got {noise_variance}")))
        }
    }

    /// `sigma^2 = 1 / (2 R 10^(EbN0/10))` for unit-energy BPSK at rate `R`.
    pub fn from_ebn0_db(ebn0_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::Config(format!("code rate must be in (0, 1], got {rate}")));
        }
        Self::new(1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0)))
    }

    pub fn sigma(&self) -> f64 {
        self.noise_variance.sqrt()
    }
}

/// Channel LLRs `ln P(c=0|y) / P(c=1|y)`, one per code bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlrFrame {
    pub values: Vec<f64>,
}

impl LlrFrame {
    pub fn new(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        LlrFrame { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Noiseless frame for `codeword` with LLR magnitude `magnitude`.
    pub fn from_codeword(codeword: &[u8], magnitude: f64) -> Self {
        LlrFrame::new(codeword.iter().map(|&c| if c == 0 { magnitude } else { -magnitude }).collect())
    }
}

/// Bit 0 maps to +1, bit 1 to -1.
pub fn modulate_bpsk(codeword: &[u8]) -> Vec<f64> {
    codeword.iter().map(|&c| if c == 0 { 1.0 } else { -1.0 }).collect()
}

/// Adds white Gaussian noise of the configured variance.
pub fn awgn_transmit<R: Rng + ?Sized>(symbols: &[f64], params: &ChannelParams, rng: &mut R) -> Vec<f64> {
    let sigma = params.sigma();
    symbols
        .iter()
        .map(|&x| {
            let n: f64 = rng.sample(StandardNormal);
            x + sigma * n
        })
        .collect()
}

pub fn channel_llr(y: &[f64], params: &ChannelParams) -> LlrFrame {
    let scale = 2.0 / params.noise_variance;
    LlrFrame::new(y.iter().map(|&v| scale * v).collect())
}

/// `P(c = bit | y)` from the channel LLR.
pub fn channel_posterior(llr: f64, bit: u8) -> f64 {
    let x = if bit == 0 { llr } else { -llr };
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln P(c = bit | y)`, accurate in both tails.
pub fn log_channel_posterior(llr: f64, bit: u8) -> f64 {
    let x = if bit == 0 { llr } else { -llr };
    -softplus(-x)
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bpsk_mapping() {
        assert_eq!(modulate_bpsk(&[0, 1]), vec![1.0, -1.0]);
        assert_eq!(modulate_bpsk(&[0; 4]), vec![1.0; 4]);
        let cw = [1, 0, 0, 1, 1];
        let hard: Vec<u8> = modulate_bpsk(&cw).iter().map(|&x| u8::from(x < 0.0)).collect();
        assert_eq!(hard, cw);
    }

    #[test]
    fn llr_closed_form() {
        let p = ChannelParams::new(0.5).unwrap();
        assert_eq!(channel_llr(&[1.0], &p).values, vec![4.0]);
        assert_eq!(channel_llr(&[0.0], &p).values, vec![0.0]);
        let y = [-0.3, 0.7, -2.0];
        for (l, v) in channel_llr(&y, &p).values.iter().zip(y) {
            assert_eq!(l.signum(), v.signum());
        }
    }

    #[test]
    fn ebn0_mapping() {
        let p = ChannelParams::from_ebn0_db(0.0, 0.5).unwrap();
        assert!((p.noise_variance - 1.0).abs() < 1e-15);
        assert!(ChannelParams::new(0.0).is_err());
        assert!(ChannelParams::from_ebn0_db(1.0, 0.0).is_err());
    }

    #[test]
    fn noise_is_deterministic_and_has_the_right_variance() {
        let p = ChannelParams::new(0.3).unwrap();
        let x = vec![1.0; 100_000];
        let a = awgn_transmit(&x, &p, &mut ChaCha8Rng::seed_from_u64(7));
        let b = awgn_transmit(&x, &p, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        let var = a.iter().map(|y| (y - 1.0).powi(2)).sum::<f64>() / x.len() as f64;
        assert!((var / 0.3 - 1.0).abs() < 0.02, "variance {var}");

        let tiny = ChannelParams::new(1e-30).unwrap();
        let y = awgn_transmit(&[1.0, -1.0], &tiny, &mut ChaCha8Rng::seed_from_u64(1));
        assert!((y[0] - 1.0).abs() < 1e-12 && (y[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn posterior_values() {
        assert_eq!(channel_posterior(0.0, 0), 0.5);
        assert_eq!(channel_posterior(0.0, 1), 0.5);
        assert!((channel_posterior(2.0, 0) - 0.880_797_077_977_882_3).abs() < 1e-15);
        assert!((channel_posterior(2.0, 1) - 0.119_202_922_022_117_56).abs() < 1e-15);
        assert!((channel_posterior(1e300, 0) - 1.0).abs() < 1e-15);
        assert!(channel_posterior(1e300, 1) < 1e-15);
    }

    #[test]
    fn posterior_properties() {
        let mut l = -30.0;
        while l <= 30.0 {
            let p0 = channel_posterior(l, 0);
            let p1 = channel_posterior(l, 1);
            assert!((p0 + p1 - 1.0).abs() <= f64::EPSILON, "sum at {l}");
            if l != 0.0 {
                let ratio = (p0 / p1).ln();
                assert!(((ratio - l) / l).abs() < 1e-12, "ratio at {l}: {ratio}");
            }
            assert!((log_channel_posterior(l, 0) - p0.ln()).abs() < 1e-12);
            l += 0.37;
        }
    }
}
