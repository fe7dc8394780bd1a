//! Monte Carlo BER/BLER sweeps and result emission.
//!
//! Every frame draws from its own ChaCha stream derived from the master seed,
//! the grid index and the frame index, and frames are reduced in index
//! order. Results therefore do not depend on the number of workers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{awgn_transmit, channel_llr, modulate_bpsk, ChannelParams};
use crate::code::{build_code_spec, encode, CodeParams};
use crate::decoder::{DecoderKind, FrameDecoder};
use crate::error::{Error, Result};
use crate::latency::{latency_reports, LatencyReport};
use crate::scl::DecoderOptions;
use crate::soft::DEFAULT_LLR_CLAMP;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Frames handed to the workers at a time, per worker.
const FRAMES_PER_WORKER_CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub code: CodeParams,
    pub decoder: DecoderKind,
    pub list_size: usize,
    pub snr_start: f64,
    pub snr_stop: f64,
    pub snr_step: f64,
    /// Frame budget per grid point.
    pub frames: u64,
    pub max_block_errors: u64,
    pub seed: u64,
    pub opts: DecoderOptions,
    pub llr_clamp: f64,
    pub workers: usize,
    /// Send the all-zeros payload instead of random ones.
    pub zero_payload: bool,
    /// Report `seconds = 0` so that output files are byte-reproducible.
    pub record_timing: bool,
}

impl SimConfig {
    pub fn new(code: CodeParams, decoder: DecoderKind) -> Self {
        SimConfig {
            code,
            decoder,
            list_size: 4,
            snr_start: 1.0,
            snr_stop: 3.0,
            snr_step: 0.5,
            frames: 10_000,
            max_block_errors: 400,
            seed: 1,
            opts: DecoderOptions::default(),
            llr_clamp: DEFAULT_LLR_CLAMP,
            workers: 1,
            zero_payload: false,
            record_timing: true,
        }
    }

    /// Eb/N0 points from start to stop inclusive.
    pub fn snr_grid(&self) -> Result<Vec<f64>> {
        let ok = self.snr_start.is_finite() && self.snr_stop.is_finite() && self.snr_step.is_finite();
        if !ok || self.snr_stop < self.snr_start || (self.snr_step <= 0.0 && self.snr_stop > self.snr_start) {
            return Err(Error::Config(format!(
                "empty Eb/N0 grid {}:{}:{}",
                self.snr_start, self.snr_step, self.snr_stop
            )));
        }
        if self.snr_stop == self.snr_start {
            return Ok(vec![self.snr_start]);
        }
        let count = ((self.snr_stop - self.snr_start) / self.snr_step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.snr_start + i as f64 * self.snr_step).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::Config("at least one frame is required".into()));
        }
        if self.max_block_errors == 0 {
            return Err(Error::Config("max block errors must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("at least one worker is required".into()));
        }
        self.snr_grid().map(|_| ())
    }

    fn frame_decoder(&self) -> Result<FrameDecoder> {
        let spec = build_code_spec(&self.code)?;
        let cap = self.code.max_node_size.unwrap_or(spec.n_bits);
        FrameDecoder::new(spec, self.decoder, self.list_size, self.opts, self.llr_clamp, cap)
    }
}

/// One grid point of a sweep. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub decoder: String,
    pub frames: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub block_errors: u64,
    pub bler: f64,
    /// Wilson 95% interval on the BER.
    pub ci_low: f64,
    pub ci_high: f64,
    pub seconds: f64,
}

pub const CSV_HEADER: [&str; 10] = [
    "snr_db",
    "decoder",
    "frames",
    "bit_errors",
    "ber",
    "block_errors",
    "bler",
    "ci_low",
    "ci_high",
    "seconds",
];

/// Wilson score interval for `successes` out of `trials` at 95%.
pub fn wilson(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Generator for frame `frame` at grid point `point`.
pub fn frame_rng(seed: u64, point: usize, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(point as u64)));
    rng.set_stream(frame);
    rng
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameOutcome {
    bit_errors: u64,
    block_error: bool,
}

fn simulate_frame(dec: &FrameDecoder, channel: &ChannelParams, zero_payload: bool, mut rng: ChaCha8Rng) -> FrameOutcome {
    let spec = &dec.spec;
    let payload: Vec<u8> = if zero_payload {
        vec![0; spec.k_info]
    } else {
        (0..spec.k_info).map(|_| rng.random_range(0..2u8)).collect()
    };
    let (_, codeword) = encode(spec, &payload).expect("payload length matches");
    let y = awgn_transmit(&modulate_bpsk(&codeword), channel, &mut rng);
    let d = dec.decode(&channel_llr(&y, channel));
    FrameOutcome {
        bit_errors: d.hard_bits.iter().zip(&codeword).filter(|(a, b)| a != b).count() as u64,
        block_error: d.codeword != codeword,
    }
}

/// Runs `frames` in order on the configured number of workers.
struct FrameRunner {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl FrameRunner {
    fn new(workers: usize) -> Result<Self> {
        #[cfg(feature = "parallel")]
        {
            let pool = if workers > 1 {
                Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(workers)
                        .build()
                        .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
                )
            } else {
                None
            };
            Ok(FrameRunner { pool })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = workers;
            Ok(FrameRunner {})
        }
    }

    fn run<F>(&self, frames: std::ops::Range<u64>, job: F) -> Vec<FrameOutcome>
    where
        F: Fn(u64) -> FrameOutcome + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| frames.into_par_iter().map(&job).collect());
        }
        frames.map(job).collect()
    }
}

/// Simulates one grid point until the frame budget or the block-error limit
/// is reached, counting exactly the frames up to the limiting one.
fn run_point(
    cfg: &SimConfig,
    dec: &FrameDecoder,
    runner: &FrameRunner,
    point: usize,
    snr_db: f64,
) -> Result<TrialRecord> {
    let channel = ChannelParams::from_ebn0_db(snr_db, dec.spec.rate())?;
    let started = Instant::now();
    let chunk = (FRAMES_PER_WORKER_CHUNK * cfg.workers) as u64;
    let (mut frames, mut bit_errors, mut block_errors) = (0u64, 0u64, 0u64);
    'outer: while frames < cfg.frames {
        let end = (frames + chunk).min(cfg.frames);
        let outcomes = runner.run(frames..end, |j| {
            simulate_frame(dec, &channel, cfg.zero_payload, frame_rng(cfg.seed, point, j))
        });
        for o in outcomes {
            frames += 1;
            bit_errors += o.bit_errors;
            block_errors += u64::from(o.block_error);
            if block_errors >= cfg.max_block_errors {
                break 'outer;
            }
        }
    }
    let bits = frames * dec.spec.n_bits as u64;
    let (ci_low, ci_high) = wilson(bit_errors, bits);
    Ok(TrialRecord {
        snr_db,
        decoder: cfg.decoder.name().to_string(),
        frames,
        bit_errors,
        ber: bit_errors as f64 / bits as f64,
        block_errors,
        bler: block_errors as f64 / frames as f64,
        ci_low,
        ci_high,
        seconds: if cfg.record_timing {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        },
    })
}

/// One record per Eb/N0 point. Bit errors are counted on code bits.
pub fn run_ber_sweep(cfg: &SimConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let dec = cfg.frame_decoder()?;
    let runner = FrameRunner::new(cfg.workers)?;
    cfg.snr_grid()?
        .into_iter()
        .enumerate()
        .map(|(i, snr)| run_point(cfg, &dec, &runner, i, snr))
        .collect()
}

/// Latency reports for the configured code and list size.
pub fn run_latency_report(cfg: &SimConfig, so_scl_final_step: bool) -> Result<Vec<LatencyReport>> {
    let spec = build_code_spec(&cfg.code)?;
    let cap = cfg.code.max_node_size.unwrap_or(spec.n_bits);
    Ok(latency_reports(&spec, cfg.list_size, cap, so_scl_final_step))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

/// Writes records to any sink. `label` names the sink in errors.
pub fn write_records<W: Write>(records: &[TrialRecord], format: OutputFormat, sink: W, label: &Path) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let csv_err = |source| Error::Csv {
                path: label.to_path_buf(),
                source,
            };
            let mut w = csv::Writer::from_writer(sink);
            for r in records {
                w.serialize(r).map_err(csv_err)?;
            }
            if records.is_empty() {
                w.write_record(CSV_HEADER).map_err(csv_err)?;
            }
            w.flush().map_err(|source| Error::Io {
                path: label.to_path_buf(),
                source,
            })
        }
        OutputFormat::Jsonl => {
            let mut w = BufWriter::new(sink);
            for r in records {
                serde_json::to_writer(&mut w, r).map_err(|source| Error::Json {
                    path: label.to_path_buf(),
                    source,
                })?;
                writeln!(w).map_err(|source| Error::Io {
                    path: label.to_path_buf(),
                    source,
                })?;
            }
            w.flush().map_err(|source| Error::Io {
                path: label.to_path_buf(),
                source,
            })
        }
    }
}

/// Writes records to `path`, or to stdout when `path` is `None`.
pub fn emit_results(records: &[TrialRecord], format: OutputFormat, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|source| Error::Io {
                path: p.to_path_buf(),
                source,
            })?;
            write_records(records, format, file, p)
        }
        None => write_records(records, format, io::stdout().lock(), Path::new("<stdout>")),
    }
}

/// Parses JSON-lines output back into records.
pub fn read_jsonl(text: &str) -> std::result::Result<Vec<TrialRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(decoder: DecoderKind) -> SimConfig {
        let mut cfg = SimConfig::new(CodeParams::new(32, 16), decoder);
        cfg.frames = 200;
        cfg.snr_start = 1.0;
        cfg.snr_stop = 2.0;
        cfg.snr_step = 1.0;
        cfg.record_timing = false;
        cfg
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson(50, 100);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        assert_eq!(wilson(0, 0), (0.0, 1.0));
    }

    #[test]
    fn grid() {
        let mut cfg = quick(DecoderKind::Sc);
        cfg.snr_start = 2.0;
        cfg.snr_stop = 3.0;
        cfg.snr_step = 0.5;
        assert_eq!(cfg.snr_grid().unwrap(), vec![2.0, 2.5, 3.0]);
        cfg.snr_step = 0.3;
        assert_eq!(cfg.snr_grid().unwrap().len(), 4);
        cfg.snr_stop = 1.0;
        assert!(cfg.snr_grid().is_err());
    }

    #[test]
    fn high_snr_is_error_free() {
        let mut cfg = quick(DecoderKind::SoFscl);
        cfg.snr_start = 20.0;
        cfg.snr_stop = 20.0;
        cfg.frames = 100;
        let r = run_ber_sweep(&cfg).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].frames, r[0].bit_errors, r[0].block_errors), (100, 0, 0));
    }

    #[test]
    fn stops_at_the_limiting_frame() {
        let mut cfg = quick(DecoderKind::Sc);
        cfg.snr_start = -2.0;
        cfg.snr_stop = -2.0;
        cfg.max_block_errors = 7;
        let r = run_ber_sweep(&cfg).unwrap();
        assert_eq!(r[0].block_errors, 7);
        assert!(r[0].frames < 200);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = quick(DecoderKind::Scl);
        cfg.max_block_errors = 15;
        let one = run_ber_sweep(&cfg).unwrap();
        cfg.workers = 3;
        assert_eq!(run_ber_sweep(&cfg).unwrap(), one);
    }

    #[test]
    fn emission_formats() {
        let records = run_ber_sweep(&quick(DecoderKind::Fscl)).unwrap();
        let mut csv_out = Vec::new();
        write_records(&records[..1], OutputFormat::Csv, &mut csv_out, Path::new("mem")).unwrap();
        let text = String::from_utf8(csv_out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines[1].split(',').count(), 10);

        let mut json_out = Vec::new();
        write_records(&records, OutputFormat::Jsonl, &mut json_out, Path::new("mem")).unwrap();
        let back = read_jsonl(&String::from_utf8(json_out).unwrap()).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = quick(DecoderKind::Sc);
        cfg.frames = 0;
        assert!(run_ber_sweep(&cfg).is_err());
        let mut cfg = quick(DecoderKind::Sc);
        cfg.workers = 0;
        assert!(run_ber_sweep(&cfg).is_err());
    }
}
