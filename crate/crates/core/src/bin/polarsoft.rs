use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use polarsoft::channel::{awgn_transmit, channel_llr, modulate_bpsk};
use polarsoft::decoder::{so_fscl_decode, so_scl_decode};
use polarsoft::latency::{breakdown_text, reports_to_jsonl, reports_to_text};
use polarsoft::oracle::oracle;
use polarsoft::sim::{emit_results, run_ber_sweep, run_latency_report, OutputFormat, SimConfig};
use polarsoft::tree::decompose;
use polarsoft::{
    build_code_spec, encode, ChannelParams, CodeParams, Construction, CrcKind, DecoderKind, DecoderOptions,
    DynamicRule, FgMode, FrameDecoder, LlrFrame, PmMode,
};

#[derive(Parser)]
#[command(name = "polarsoft", version, about = "Polar code soft-output list decoding toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER/BLER sweep over an Eb/N0 grid.
    BerSweep(SweepArgs),
    /// Time-step latency of SCL, FSCL, SO-SCL and SO-FSCL.
    Latency(LatencyArgs),
    /// Compare soft outputs against exhaustive enumeration.
    OracleCheck(OracleArgs),
    /// Encode one payload.
    Encode(EncodeArgs),
    /// Decode one frame of channel LLRs.
    DecodeFrame(DecodeFrameArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CrcArg {
    None,
    #[value(name = "6")]
    Six,
    #[value(name = "11")]
    Eleven,
}

impl From<CrcArg> for CrcKind {
    fn from(c: CrcArg) -> Self {
        match c {
            CrcArg::None => CrcKind::None,
            CrcArg::Six => CrcKind::Crc6,
            CrcArg::Eleven => CrcKind::Crc11,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Sc,
    Scl,
    Fscl,
    SoScl,
    SoFscl,
    Pyndiah,
}

impl From<DecoderArg> for DecoderKind {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::Sc => DecoderKind::Sc,
            DecoderArg::Scl => DecoderKind::Scl,
            DecoderArg::Fscl => DecoderKind::Fscl,
            DecoderArg::SoScl => DecoderKind::SoScl,
            DecoderArg::SoFscl => DecoderKind::SoFscl,
            DecoderArg::Pyndiah => DecoderKind::Pyndiah,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PmArg {
    Exact,
    Hw,
}

#[derive(Clone, Copy, ValueEnum)]
enum FgArg {
    Exact,
    Minsum,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum LatencyFormat {
    Text,
    Jsonl,
}

#[derive(Args, Clone)]
struct CodeArgs {
    /// Code length (power of two, at most 1024 with the embedded sequence).
    #[arg(long)]
    n: usize,
    /// Payload bits, CRC excluded.
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "none")]
    crc: CrcArg,
    /// Dynamic frozen bits per node; 0 keeps every frozen bit static.
    #[arg(long, default_value_t = 0)]
    fd: usize,
    /// Largest special node; defaults to N.
    #[arg(long)]
    max_node_size: Option<usize>,
    /// Use the Gaussian-approximation construction at this design Es/N0 (dB).
    #[arg(long)]
    ga_design_db: Option<f64>,
}

impl CodeArgs {
    fn params(&self) -> CodeParams {
        let mut p = CodeParams::new(self.n, self.k).crc(self.crc.into());
        if self.fd > 0 {
            p = p.dynamic(DynamicRule::PartialDynamic, self.fd);
        }
        if let Some(db) = self.ga_design_db {
            p = p.construction(Construction::GaussianApprox(db));
        }
        if let Some(m) = self.max_node_size {
            p = p.max_node_size(m);
        }
        p
    }
}

#[derive(Args, Clone)]
struct DecodeArgs {
    #[arg(long, default_value_t = 4)]
    list_size: usize,
    #[arg(long, value_enum, default_value = "so-fscl")]
    decoder: DecoderArg,
    #[arg(long, value_enum, default_value = "exact")]
    pm_mode: PmArg,
    #[arg(long, value_enum, default_value = "exact")]
    fg_mode: FgArg,
    #[arg(long, default_value_t = polarsoft::soft::DEFAULT_LLR_CLAMP)]
    llr_clamp: f64,
}

impl DecodeArgs {
    fn options(&self) -> DecoderOptions {
        DecoderOptions {
            pm_mode: match self.pm_mode {
                PmArg::Exact => PmMode::Exact,
                PmArg::Hw => PmMode::HardwareApprox,
            },
            fg_mode: match self.fg_mode {
                FgArg::Exact => FgMode::Exact,
                FgArg::Minsum => FgMode::MinSum,
            },
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    dec: DecodeArgs,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    snr_start: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    snr_stop: f64,
    #[arg(long, default_value_t = 0.5)]
    snr_step: f64,
    /// Frame budget per point.
    #[arg(long, default_value_t = 10_000)]
    frames: u64,
    #[arg(long, default_value_t = 400)]
    max_block_errors: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Write 0 in the seconds column so that reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Transmit the all-zeros payload.
    #[arg(long)]
    zero_payload: bool,
}

#[derive(Args)]
struct LatencyArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, default_value_t = 4)]
    list_size: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: LatencyFormat,
    /// Count the final APP step for SO-SCL as well.
    #[arg(long)]
    so_scl_final_step: bool,
    /// Print the per-node breakdown after the summary.
    #[arg(long)]
    breakdown: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Defaults to 2^K, which makes the soft decoders exact.
    #[arg(long)]
    list_size: Option<usize>,
    #[arg(long, default_value_t = 100)]
    frames: u64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    snr_start: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Payload as a 0/1 string; random when omitted.
    #[arg(long)]
    payload: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct DecodeFrameArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    dec: DecodeArgs,
    /// Comma-separated channel LLRs (positive favours bit 0).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "llr_file")]
    llrs: Option<String>,
    /// File with whitespace- or comma-separated LLRs.
    #[arg(long)]
    llr_file: Option<PathBuf>,
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => bail!("payload character '{other}' is not 0 or 1"),
        })
        .collect()
}

fn parse_llrs(s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("bad LLR '{t}'")))
        .collect()
}

fn bit_string(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

fn write_out(output: Option<&PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn ber_sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = SimConfig::new(a.code.params(), a.dec.decoder.into());
    cfg.list_size = a.dec.list_size;
    cfg.opts = a.dec.options();
    cfg.llr_clamp = a.dec.llr_clamp;
    cfg.snr_start = a.snr_start;
    cfg.snr_stop = a.snr_stop;
    cfg.snr_step = a.snr_step;
    cfg.frames = a.frames;
    cfg.max_block_errors = a.max_block_errors;
    cfg.seed = a.seed;
    cfg.workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cfg.record_timing = !a.no_timing;
    cfg.zero_payload = a.zero_payload;
    let records = run_ber_sweep(&cfg)?;
    let format = match a.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Jsonl => OutputFormat::Jsonl,
    };
    emit_results(&records, format, a.output.as_deref())?;
    Ok(())
}

fn latency(a: LatencyArgs) -> Result<()> {
    let mut cfg = SimConfig::new(a.code.params(), DecoderKind::SoFscl);
    cfg.list_size = a.list_size;
    let reports = run_latency_report(&cfg, a.so_scl_final_step)?;
    let mut text = match a.format {
        LatencyFormat::Text => reports_to_text(&reports),
        LatencyFormat::Jsonl => reports_to_jsonl(&reports),
    };
    if a.breakdown {
        for r in &reports {
            text.push_str(&breakdown_text(r));
        }
    }
    write_out(a.output.as_ref(), &text)
}

fn oracle_check(a: OracleArgs) -> Result<()> {
    let spec = build_code_spec(&a.code.params())?;
    let k = spec.info_len();
    if k > 16 {
        bail!("oracle-check enumerates 2^K codewords; K = {k} is too large");
    }
    let list = a.list_size.unwrap_or(1 << k);
    let cap = a.code.max_node_size.unwrap_or(spec.n_bits);
    let tree = decompose(&spec, cap);
    let channel = ChannelParams::from_ebn0_db(a.snr_start, spec.rate().max(1.0 / spec.n_bits as f64))?;
    let opts = DecoderOptions::default();
    let (mut scl_app, mut fscl_app, mut scl_p, mut fscl_p) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for frame in 0..a.frames {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        rng.set_stream(frame);
        let payload: Vec<u8> = (0..spec.k_info).map(|_| rng.random_range(0..2u8)).collect();
        let (_, cw) = encode(&spec, &payload)?;
        let llrs = channel_llr(&awgn_transmit(&modulate_bpsk(&cw), &channel, &mut rng), &channel);
        let exact = oracle(&spec, &llrs, f64::INFINITY)?;
        let s = so_scl_decode(&spec, &llrs, list, opts, f64::INFINITY);
        let f = so_fscl_decode(&spec, &llrs, list, &tree, opts, f64::INFINITY);
        let dev = |app: &[f64]| {
            app.iter()
                .zip(&exact.exact_app_llrs)
                .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() })
                .fold(0.0, f64::max)
        };
        scl_app = scl_app.max(dev(&s.app_llrs));
        fscl_app = fscl_app.max(dev(&f.app_llrs));
        scl_p = scl_p.max((s.codebook_prob_log - exact.exact_codebook_prob_log).exp_m1().abs());
        fscl_p = fscl_p.max((f.codebook_prob_log - exact.exact_codebook_prob_log).exp_m1().abs());
    }
    let report = json!({
        "n": spec.n_bits, "k": k, "list_size": list, "frames": a.frames,
        "so_scl_max_app_abs_err": scl_app, "so_fscl_max_app_abs_err": fscl_app,
        "so_scl_max_codebook_rel_err": scl_p, "so_fscl_max_codebook_rel_err": fscl_p,
    });
    println!("{report}");
    Ok(())
}

fn encode_cmd(a: EncodeArgs) -> Result<()> {
    let spec = build_code_spec(&a.code.params())?;
    let payload = match &a.payload {
        Some(p) => parse_bits(p)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (0..spec.k_info).map(|_| rng.random_range(0..2u8)).collect()
        }
    };
    let (input, cw) = encode(&spec, &payload)?;
    let out = json!({
        "payload": bit_string(&payload),
        "u": bit_string(&input.bits),
        "codeword": bit_string(&cw),
        "info_set": spec.info_set,
    });
    println!("{out}");
    Ok(())
}

fn decode_frame(a: DecodeFrameArgs) -> Result<()> {
    let values = match (&a.llrs, &a.llr_file) {
        (Some(s), _) => parse_llrs(s)?,
        (None, Some(p)) => parse_llrs(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        (None, None) => bail!("pass --llrs or --llr-file"),
    };
    let spec = build_code_spec(&a.code.params())?;
    if values.len() != spec.n_bits {
        bail!("expected {} LLRs, got {}", spec.n_bits, values.len());
    }
    let cap = a.code.max_node_size.unwrap_or(spec.n_bits);
    let dec = FrameDecoder::new(spec, a.dec.decoder.into(), a.dec.list_size, a.dec.options(), a.dec.llr_clamp, cap)?;
    let d = dec.decode(&LlrFrame::new(values));
    let out = json!({
        "decoder": dec.kind.name(),
        "codeword": bit_string(&d.codeword),
        "u": bit_string(&d.u_est),
        "payload": bit_string(&dec.spec.payload_of(&d.u_est)),
        "crc_failed": d.crc_failed,
        "soft": d.soft,
    });
    println!("{out}");
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::BerSweep(a) => ber_sweep(a),
        Command::Latency(a) => latency(a),
        Command::OracleCheck(a) => oracle_check(a),
        Command::Encode(a) => encode_cmd(a),
        Command::DecodeFrame(a) => decode_frame(a),
    }
}
