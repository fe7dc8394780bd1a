use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polarsoft::channel::{awgn_transmit, channel_llr, modulate_bpsk};
use polarsoft::sim::{run_ber_sweep, SimConfig};
use polarsoft::{build_code_spec, encode, ChannelParams, CodeParams, DecoderKind, DecoderOptions, FrameDecoder};

fn decode_one_frame(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode_frame");
    for (n, k) in [(128, 64), (512, 256)] {
        let spec = build_code_spec(&CodeParams::new(n, k)).unwrap();
        let channel = ChannelParams::from_ebn0_db(2.0, spec.rate()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let payload: Vec<u8> = (0..k).map(|_| rng.random_range(0..2u8)).collect();
        let (_, cw) = encode(&spec, &payload).unwrap();
        let llrs = channel_llr(&awgn_transmit(&modulate_bpsk(&cw), &channel, &mut rng), &channel);
        for kind in DecoderKind::ALL {
            let dec = FrameDecoder::new(spec.clone(), kind, 4, DecoderOptions::default(), 40.0, n).unwrap();
            group.bench_with_input(BenchmarkId::new(kind.name(), format!("{n}x{k}")), &llrs, |b, llrs| {
                b.iter(|| black_box(dec.decode(black_box(llrs))))
            });
        }
    }
    group.finish();
}

/// Sequential sweep (one worker, no thread pool) against the rayon pool.
fn sweep_workers(c: &mut Criterion) {
    let mut group = c.benchmark_group("ber_sweep");
    group.sample_size(10);
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).max(2);
    for (label, workers) in [("sequential", 1), ("parallel", threads)] {
        let mut cfg = SimConfig::new(CodeParams::new(256, 128), DecoderKind::SoFscl);
        cfg.snr_start = 2.0;
        cfg.snr_stop = 2.0;
        cfg.frames = 400;
        cfg.max_block_errors = u64::MAX;
        cfg.workers = workers;
        cfg.record_timing = false;
        group.bench_function(label, |b| b.iter(|| black_box(run_ber_sweep(&cfg).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, decode_one_frame, sweep_workers);
criterion_main!(benches);
