//! Bit-by-bit successive-cancellation list decoding.

use serde::{Deserialize, Serialize};

use crate::channel::LlrFrame;
use crate::code::{polar_transform, CodeSpec};
use crate::crc::crc_check;
use crate::llr::{pm_increment, FgMode, PmMode};
use crate::path::{select_lowest, spawn, PathState};
use crate::soft::CodebookProbTracker;

/// Arithmetic used by the list decoders.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DecoderOptions {
    pub fg_mode: FgMode,
    pub pm_mode: PmMode,
}

impl DecoderOptions {
    pub fn hardware() -> Self {
        DecoderOptions {
            fg_mode: FgMode::MinSum,
            pm_mode: PmMode::HardwareApprox,
        }
    }
}

/// A finished list entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderPath {
    pub path_metric: f64,
    pub u_est: Vec<u8>,
    pub codeword: Vec<u8>,
}

/// Surviving paths in ascending metric order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathList {
    pub paths: Vec<DecoderPath>,
    pub list_size: usize,
}

impl PathList {
    pub(crate) fn from_states(states: Vec<PathState>, list_size: usize) -> Self {
        let mut paths: Vec<DecoderPath> = states
            .into_iter()
            .map(|s| {
                let mut codeword = s.u.clone();
                polar_transform(&mut codeword);
                debug_assert_eq!(codeword.as_slice(), s.beta(0));
                DecoderPath {
                    path_metric: s.pm,
                    u_est: s.u,
                    codeword,
                }
            })
            .collect();
        paths.sort_by(|a, b| a.path_metric.total_cmp(&b.path_metric));
        PathList { paths, list_size }
    }

    pub fn best(&self) -> &DecoderPath {
        &self.paths[0]
    }

    pub fn metrics(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.path_metric).collect()
    }
}

/// Lowest-metric path whose information block passes the CRC; the overall
/// best path with `crc_failed = true` when none does.
pub fn crc_select<'a>(paths: &'a PathList, spec: &CodeSpec) -> (&'a DecoderPath, bool) {
    if spec.crc.is_none() {
        return (paths.best(), false);
    }
    match paths
        .paths
        .iter()
        .find(|p| crc_check(&spec.info_block_of(&p.u_est), spec.crc))
    {
        Some(p) => (p, false),
        None => (paths.best(), true),
    }
}

struct SclRun<'a> {
    spec: &'a CodeSpec,
    list_size: usize,
    opts: DecoderOptions,
    depth: usize,
    paths: Vec<PathState>,
    tracker: Option<&'a mut CodebookProbTracker>,
}

impl SclRun<'_> {
    fn visit(&mut self, d: usize, start: usize) {
        if d == self.depth {
            self.decide(start);
            return;
        }
        let half = self.spec.n_bits >> (d + 1);
        for p in &mut self.paths {
            p.compute_left(d, self.opts.fg_mode);
        }
        self.visit(d + 1, start);
        for p in &mut self.paths {
            p.compute_right(d);
        }
        self.visit(d + 1, start + half);
        for p in &mut self.paths {
            p.combine(d);
        }
    }

    fn set_bit(p: &mut PathState, depth: usize, idx: usize, bit: u8) {
        p.u[idx] = bit;
        p.beta_mut(depth)[0] = bit;
    }

    fn decide(&mut self, idx: usize) {
        let (d, mode) = (self.depth, self.opts.pm_mode);
        if let Some(t) = self.tracker.as_deref_mut().filter(|t| t.is_auditing()) {
            let pms: Vec<f64> = self.paths.iter().map(|p| p.pm).collect();
            t.begin_step(idx, &pms);
        }
        if self.spec.is_frozen(idx) {
            for p in &mut self.paths {
                let v = self.spec.frozen_value(&p.u[..idx], idx);
                p.pm += pm_increment(p.alpha(d)[0], v, mode);
                Self::set_bit(p, d, idx, v);
            }
            return;
        }
        let metrics: Vec<f64> = self
            .paths
            .iter()
            .flat_map(|p| {
                let llr = p.alpha(d)[0];
                [p.pm + pm_increment(llr, 0, mode), p.pm + pm_increment(llr, 1, mode)]
            })
            .collect();
        let (kept, discarded) = select_lowest(&metrics, self.list_size);
        if let Some(t) = self.tracker.as_deref_mut() {
            for &c in &discarded {
                t.report_scl_discard(metrics[c], idx, self.spec);
            }
        }
        let picks: Vec<usize> = kept.iter().map(|&c| c / 2).collect();
        let parents = std::mem::take(&mut self.paths);
        self.paths = spawn(parents, &picks);
        for (p, &c) in self.paths.iter_mut().zip(&kept) {
            p.pm = metrics[c];
            Self::set_bit(p, d, idx, (c % 2) as u8);
        }
    }
}

/// SCL decoding over the full binary tree. With a tracker, every pruned
/// candidate is reported as an unvisited subtree root.
pub fn scl_decode(
    spec: &CodeSpec,
    llrs: &LlrFrame,
    list_size: usize,
    opts: DecoderOptions,
    tracker: Option<&mut CodebookProbTracker>,
) -> PathList {
    assert!(list_size >= 1, "list size must be positive");
    assert_eq!(llrs.len(), spec.n_bits, "frame length mismatch");
    let mut run = SclRun {
        spec,
        list_size,
        opts,
        depth: spec.n_bits.trailing_zeros() as usize,
        paths: vec![PathState::new(&llrs.values)],
        tracker,
    };
    run.visit(0, 0);
    PathList::from_states(run.paths, list_size)
}

/// Plain successive-cancellation decoding (list size one).
pub fn sc_decode(spec: &CodeSpec, llrs: &LlrFrame, opts: DecoderOptions) -> DecoderPath {
    scl_decode(spec, llrs, 1, opts, None).paths.remove(0)
}

/// Decodes with every input bit forced to `u`, returning the final metric.
/// The forced values need not respect the frozen set.
pub fn forced_path_metric(llrs: &LlrFrame, u: &[u8], opts: DecoderOptions) -> f64 {
    let n = llrs.len();
    let all_info = CodeSpec::from_info_set(
        n,
        &(0..n).collect::<Vec<_>>(),
        crate::crc::CrcKind::None,
        crate::code::DynamicRule::AllStatic,
        0,
        None,
    )
    .expect("valid length");
    let mut run = ForcedRun {
        depth: n.trailing_zeros() as usize,
        path: PathState::new(&llrs.values),
        u,
        opts,
        spec: &all_info,
    };
    run.visit(0, 0);
    run.path.pm
}

struct ForcedRun<'a> {
    depth: usize,
    path: PathState,
    u: &'a [u8],
    opts: DecoderOptions,
    spec: &'a CodeSpec,
}

impl ForcedRun<'_> {
    fn visit(&mut self, d: usize, start: usize) {
        if d == self.depth {
            let llr = self.path.alpha(d)[0];
            self.path.pm += pm_increment(llr, self.u[start], self.opts.pm_mode);
            SclRun::set_bit(&mut self.path, d, start, self.u[start]);
            return;
        }
        let half = self.spec.n_bits >> (d + 1);
        self.path.compute_left(d, self.opts.fg_mode);
        self.visit(d + 1, start);
        self.path.compute_right(d);
        self.visit(d + 1, start + half);
        self.path.combine(d);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_code_spec, encode, CodeParams, DynamicRule};
    use crate::crc::CrcKind;
    use crate::soft::logsumexp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fig1_spec() -> CodeSpec {
        CodeSpec::from_info_set(4, &[0, 1, 3], CrcKind::None, DynamicRule::AllStatic, 3, None).unwrap()
    }

    fn random_llrs(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> LlrFrame {
        LlrFrame::new((0..n).map(|_| rng.random_range(-scale..scale)).collect())
    }

    #[test]
    fn list_of_one_is_sc() {
        let spec = build_code_spec(&CodeParams::new(32, 16)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let llrs = random_llrs(&mut rng, 32, 4.0);
            let sc = sc_decode(&spec, &llrs, DecoderOptions::default());
            let list = scl_decode(&spec, &llrs, 1, DecoderOptions::default(), None);
            assert_eq!(list.paths.len(), 1);
            assert_eq!(list.paths[0], sc);
        }
    }

    #[test]
    fn noiseless_frames_decode_to_the_transmitted_codeword() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, k) in [(8, 4), (16, 9), (32, 16), (64, 40)] {
            let spec = build_code_spec(&CodeParams::new(n, k).dynamic(DynamicRule::PartialDynamic, 3)).unwrap();
            for _ in 0..20 {
                let payload: Vec<u8> = (0..k).map(|_| rng.random_range(0..2)).collect();
                let (input, cw) = encode(&spec, &payload).unwrap();
                let llrs = LlrFrame::from_codeword(&cw, 20.0);
                for l in [1, 4] {
                    let list = scl_decode(&spec, &llrs, l, DecoderOptions::default(), None);
                    assert_eq!(list.best().codeword, cw);
                    assert_eq!(list.best().u_est, input.bits);
                }
            }
        }
    }

    #[test]
    fn fig1_visited_leaves() {
        // favour u_1 != u_2 and u_4 = 1: prefixes (0,1) and (1,0) tie at the top
        let spec = fig1_spec();
        let target_a = [0u8, 1, 0, 1];
        let mut cw = target_a.to_vec();
        polar_transform(&mut cw);
        let llrs = LlrFrame::from_codeword(&cw, 3.0);
        let mut tracker = CodebookProbTracker::new();
        let list = scl_decode(&spec, &llrs, 2, DecoderOptions::default(), Some(&mut tracker));
        let mut leaves: Vec<Vec<u8>> = list.paths.iter().map(|p| p.u_est.clone()).collect();
        leaves.sort();
        assert_eq!(leaves, vec![vec![0, 1, 0, 1], vec![1, 0, 0, 1]]);
        // four pruned roots: (0,0), (1,1), (0,1,0,0), (1,0,0,0)
        assert!(tracker.unvisited_mass_log() > f64::NEG_INFINITY);
    }

    #[test]
    fn metrics_never_decrease() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let llrs = random_llrs(&mut rng, 16, 3.0);
        let u: Vec<u8> = (0..16).map(|_| rng.random_range(0..2)).collect();
        let mut prev = 0.0;
        for i in 1..=16 {
            let pm = prefix_metric(&llrs, &u[..i]);
            assert!(pm >= prev - 1e-12);
            prev = pm;
        }
    }

    /// `-ln P(u^i | y)` by summing over every completion of the prefix.
    fn prefix_metric(llrs: &LlrFrame, prefix: &[u8]) -> f64 {
        let n = llrs.len();
        let rest = n - prefix.len();
        let masses = (0..1usize << rest).map(|tail| {
            let mut u = prefix.to_vec();
            u.extend((0..rest).map(|b| ((tail >> b) & 1) as u8));
            -forced_path_metric(llrs, &u, DecoderOptions::default())
        });
        -logsumexp(masses)
    }

    #[test]
    fn forced_metrics_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2usize, 4, 8] {
            let llrs = random_llrs(&mut rng, n, 5.0);
            let total = logsumexp((0..1usize << n).map(|m| {
                let u: Vec<u8> = (0..n).map(|b| ((m >> b) & 1) as u8).collect();
                -forced_path_metric(&llrs, &u, DecoderOptions::default())
            }));
            assert!(total.abs() < 1e-12, "n={n}: {total}");
        }
    }

    #[test]
    fn full_list_visits_whole_codebook() {
        let spec = build_code_spec(&CodeParams::new(16, 4).dynamic(DynamicRule::PartialDynamic, 3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let llrs = random_llrs(&mut rng, 16, 2.0);
        let mut tracker = CodebookProbTracker::new();
        let list = scl_decode(&spec, &llrs, 16, DecoderOptions::default(), Some(&mut tracker));
        assert_eq!(list.paths.len(), 16);
        assert_eq!(tracker.unvisited_mass_log(), f64::NEG_INFINITY);
    }

    #[test]
    fn deterministic_output() {
        let spec = build_code_spec(&CodeParams::new(64, 32)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let llrs = random_llrs(&mut rng, 64, 2.0);
        let a = scl_decode(&spec, &llrs, 8, DecoderOptions::default(), None);
        let b = scl_decode(&spec, &llrs, 8, DecoderOptions::default(), None);
        assert_eq!(a, b);
    }

    #[test]
    fn crc_selection_rules() {
        let spec = build_code_spec(&CodeParams::new(32, 10).crc(CrcKind::Crc6)).unwrap();
        let payload = vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1];
        let (input, cw) = encode(&spec, &payload).unwrap();
        let good = DecoderPath {
            path_metric: 2.0,
            u_est: input.bits.clone(),
            codeword: cw.clone(),
        };
        let mut bad_u = input.bits.clone();
        bad_u[spec.info_set[0]] ^= 1;
        let bad = DecoderPath {
            path_metric: 1.0,
            u_est: bad_u,
            codeword: cw.clone(),
        };
        let list = PathList {
            paths: vec![bad.clone(), good.clone()],
            list_size: 2,
        };
        assert_eq!(crc_select(&list, &spec), (&good, false));
        let only_bad = PathList {
            paths: vec![bad.clone()],
            list_size: 2,
        };
        assert_eq!(crc_select(&only_bad, &spec), (&bad, true));
        let better_good = DecoderPath {
            path_metric: 3.0,
            ..good.clone()
        };
        let two_good = PathList {
            paths: vec![good.clone(), better_good],
            list_size: 2,
        };
        assert_eq!(crc_select(&two_good, &spec).0.path_metric, 2.0);
    }
}
