//! Polar codes with soft-output successive-cancellation list decoding.
//!
//! The crate covers code construction (5G sequence or Gaussian
//! approximation, optional CRC and dynamic frozen bits), bit-level SCL and
//! node-based fast SCL decoders, soft-output variants that estimate the
//! codebook probability and bitwise APP LLRs, an exhaustive oracle for small
//! codes, a time-step latency model and a Monte Carlo harness.
//!
//! ```
//! use polarsoft::{build_code_spec, encode, CodeParams, LlrFrame, DecoderOptions};
//! use polarsoft::tree::decompose;
//! use polarsoft::decoder::so_fscl_decode;
//!
//! let spec = build_code_spec(&CodeParams::new(16, 8)).unwrap();
//! let (_, cw) = encode(&spec, &[1, 0, 1, 1, 0, 0, 1, 0]).unwrap();
//! let tree = decompose(&spec, 16);
//! let out = so_fscl_decode(&spec, &LlrFrame::from_codeword(&cw, 4.0), 4, &tree, DecoderOptions::default(), 40.0);
//! assert_eq!(out.best_codeword, cw);
//! ```

pub mod channel;
pub mod code;
pub mod crc;
pub mod decoder;
pub mod error;
pub mod fscl;
pub mod latency;
pub mod llr;
pub mod oracle;
mod path;
pub mod scl;
pub mod sim;
pub mod soft;
pub mod tree;

pub use channel::{ChannelParams, LlrFrame};
pub use code::{build_code_spec, encode, CodeParams, CodeSpec, Construction, DynamicRule};
pub use crc::CrcKind;
pub use decoder::{DecoderKind, FrameDecoder};
pub use error::{Error, Result};
pub use llr::{FgMode, PmMode};
pub use scl::{DecoderOptions, PathList};
pub use soft::{CodebookProbTracker, SoftDecodeOutput};
