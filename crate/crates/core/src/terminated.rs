//! Decoders restricted to paths that start and end in a known state `s`.
//!
//! Path metrics are natural-log likelihoods; posterior recursions run in the
//! linear domain and are renormalised every segment, so stored probabilities
//! stay in `[0, 1]`.

use std::f64::consts::LN_2;

use crate::channel::{BranchDensities, ReceivedSequence};
use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::trellis::{Codeword, Trellis};

/// Maximum-likelihood path through the trellis from `s` back to `s`.
#[derive(Debug, Clone)]
pub struct ViterbiPath {
    pub codeword: Codeword,
    /// Branch index per segment.
    pub path: Vec<usize>,
    /// `ln f(y | x̂_s, s)`.
    pub log_likelihood: f64,
}

#[derive(Debug, Clone)]
pub struct RovaOutput {
    pub ml: ViterbiPath,
    /// `P(x̂_s | y, s)`.
    pub word_correct_prob: f64,
    /// `ln f(y | s)`.
    pub evidence: f64,
}

#[derive(Debug, Clone)]
pub struct ApproxRovaOutput {
    pub ml: ViterbiPath,
    /// Estimate of `P(x̂_s | y, s)`.
    pub approx_correct_prob: f64,
    /// Estimate of `ln f(y | s)`.
    pub approx_evidence: f64,
}

fn check_state(trellis: &Trellis, s: usize) -> Result<()> {
    if s >= trellis.num_states() {
        return Err(Error::StateOutOfRange { state: s, states: trellis.num_states() });
    }
    Ok(())
}

/// Add-compare-select over one segment. Returns the surviving branch per state;
/// ties go to the smallest predecessor.
#[inline]
fn acs(trellis: &Trellis, dens: &BranchDensities, seg: usize, metric: &[f64], ext: &mut [f64], next: &mut [f64], pred: &mut [u32]) {
    for (b, br) in trellis.all_branches().iter().enumerate() {
        ext[b] = metric[br.from] + dens.log(seg, br.label);
    }
    for r in 0..metric.len() {
        let inc = trellis.incoming(r);
        let mut best = inc[0];
        for &b in &inc[1..] {
            if ext[b] > ext[best] {
                best = b;
            }
        }
        next[r] = ext[best];
        pred[r] = best as u32;
    }
}

fn traceback(trellis: &Trellis, dens: &BranchDensities, preds: &[u32], s: usize, end_metric: f64) -> ViterbiPath {
    let states = trellis.num_states();
    let l = trellis.length();
    let mut path = vec![0usize; l];
    let mut state = s;
    for seg in (0..l).rev() {
        let b = preds[seg * states + state] as usize;
        path[seg] = b;
        state = trellis.all_branches()[b].from;
    }
    debug_assert_eq!(state, s);
    let inputs: Vec<usize> = path.iter().map(|&b| trellis.all_branches()[b].input).collect();
    let (codeword, _) = trellis.walk(s, &inputs);
    ViterbiPath { codeword, path, log_likelihood: end_metric + dens.total_offset() }
}

fn initial_metric(states: usize, s: usize) -> Vec<f64> {
    let mut m = vec![f64::NEG_INFINITY; states];
    m[s] = 0.0;
    m
}

pub fn viterbi(trellis: &Trellis, y: &ReceivedSequence, s: usize) -> Result<ViterbiPath> {
    let dens = BranchDensities::new(trellis, y)?;
    viterbi_with(trellis, &dens, s, &mut OpCounters::new(trellis.length()))
}

pub fn viterbi_with(trellis: &Trellis, dens: &BranchDensities, s: usize, ops: &mut OpCounters) -> Result<ViterbiPath> {
    check_state(trellis, s)?;
    let states = trellis.num_states();
    let nb = trellis.all_branches().len();
    let mut metric = initial_metric(states, s);
    let mut next = vec![0.0; states];
    let mut ext = vec![0.0; nb];
    let mut preds = vec![0u32; states * trellis.length()];
    for seg in 0..trellis.length() {
        acs(trellis, dens, seg, &metric, &mut ext, &mut next, &mut preds[seg * states..(seg + 1) * states]);
        ops.multiplications += nb as u64;
        std::mem::swap(&mut metric, &mut next);
    }
    Ok(traceback(trellis, dens, &preds, s, metric[s]))
}

pub fn rova(trellis: &Trellis, y: &ReceivedSequence, s: usize) -> Result<RovaOutput> {
    let dens = BranchDensities::new(trellis, y)?;
    rova_with(trellis, &dens, s, &mut OpCounters::new(trellis.length()))
}

pub fn rova_with(trellis: &Trellis, dens: &BranchDensities, s: usize, ops: &mut OpCounters) -> Result<RovaOutput> {
    rova_traced(trellis, dens, s, ops, None)
}

/// Per-segment snapshot of the ROVA posteriors, used by invariant tests.
#[derive(Debug, Clone)]
pub struct RovaSnapshot {
    pub survivor: Vec<f64>,
    pub all: Vec<f64>,
}

/// Exact reliability-output Viterbi decoding for start state `s`.
///
/// Per state the recursion keeps the probability that the survivor is correct
/// and the probability that any path from `s` into the state is correct.
pub fn rova_traced(
    trellis: &Trellis,
    dens: &BranchDensities,
    s: usize,
    ops: &mut OpCounters,
    mut trace: Option<&mut Vec<RovaSnapshot>>,
) -> Result<RovaOutput> {
    check_state(trellis, s)?;
    let states = trellis.num_states();
    let branches = trellis.all_branches();
    let nb = branches.len();
    let free = trellis.free_segments();
    let k = trellis.code().k();

    let mut metric = initial_metric(states, s);
    let mut p_surv = vec![0.0; states];
    let mut p_all = vec![0.0; states];
    p_surv[s] = 1.0;
    p_all[s] = 1.0;
    let mut next_metric = vec![0.0; states];
    let mut next_surv = vec![0.0; states];
    let mut next_all = vec![0.0; states];
    let mut ext = vec![0.0; nb];
    let mut surv_term = vec![0.0; nb];
    let mut all_term = vec![0.0; nb];
    let mut preds = vec![0u32; states * trellis.length()];
    let mut log_evidence = 0.0;

    for seg in 0..trellis.length() {
        let ell = seg + 1;
        for (b, br) in branches.iter().enumerate() {
            let f = if trellis.indicator(br, ell, s) { dens.linear(seg, br.label) } else { 0.0 };
            surv_term[b] = f * p_surv[br.from];
            all_term[b] = f * p_all[br.from];
        }
        acs(trellis, dens, seg, &metric, &mut ext, &mut next_metric, &mut preds[seg * states..(seg + 1) * states]);
        let mut delta: f64 = all_term.iter().sum();
        let mut shift = 0.0;
        if delta.is_nan() || delta < f64::MIN_POSITIVE {
            // every reachable term underflowed: redo the segment relative to its largest log term
            shift = rescale_segment(trellis, dens, seg, s, &p_surv, &p_all, &mut surv_term, &mut all_term);
            delta = all_term.iter().sum();
        }
        for r in 0..states {
            let best = preds[seg * states + r] as usize;
            next_surv[r] = surv_term[best] / delta;
            next_all[r] = trellis.incoming(r).iter().map(|&b| all_term[b]).sum::<f64>() / delta;
        }
        let inputs_per_state = 1u64 << k;
        ops.multiplications += 3 * nb as u64;
        ops.additions += (nb as u64 - 1) + states as u64 * (inputs_per_state - 1);
        ops.divisions += 2 * states as u64;

        log_evidence += delta.ln() + shift + dens.offset(seg);
        if ell <= free {
            log_evidence -= k as f64 * LN_2;
        }
        std::mem::swap(&mut metric, &mut next_metric);
        std::mem::swap(&mut p_surv, &mut next_surv);
        std::mem::swap(&mut p_all, &mut next_all);
        if let Some(t) = trace.as_deref_mut() {
            t.push(RovaSnapshot { survivor: p_surv.clone(), all: p_all.clone() });
        }
    }

    let ml = traceback(trellis, dens, &preds, s, metric[s]);
    Ok(RovaOutput { ml, word_correct_prob: p_surv[s] / p_all[s], evidence: log_evidence })
}

/// Log-domain fallback for one segment; returns the log factor removed from the terms.
#[allow(clippy::too_many_arguments)]
fn rescale_segment(
    trellis: &Trellis,
    dens: &BranchDensities,
    seg: usize,
    s: usize,
    p_surv: &[f64],
    p_all: &[f64],
    surv_term: &mut [f64],
    all_term: &mut [f64],
) -> f64 {
    let ell = seg + 1;
    let log_term = |br: &crate::trellis::Branch, p: f64| {
        if p > 0.0 && trellis.indicator(br, ell, s) {
            dens.log(seg, br.label) + p.ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let branches = trellis.all_branches();
    let top = branches.iter().map(|br| log_term(br, p_all[br.from])).fold(f64::NEG_INFINITY, f64::max);
    for (b, br) in branches.iter().enumerate() {
        surv_term[b] = (log_term(br, p_surv[br.from]) - top).exp();
        all_term[b] = (log_term(br, p_all[br.from]) - top).exp();
    }
    top
}

pub fn approx_rova(trellis: &Trellis, y: &ReceivedSequence, s: usize) -> Result<ApproxRovaOutput> {
    let dens = BranchDensities::new(trellis, y)?;
    approx_rova_with(trellis, &dens, s, &mut OpCounters::new(trellis.length()))
}

/// Simplified reliability output: at each merge the survivor's share of the
/// merging path probabilities is stored, and the decoded word's reliability is
/// the product of those shares along its path.
pub fn approx_rova_with(trellis: &Trellis, dens: &BranchDensities, s: usize, ops: &mut OpCounters) -> Result<ApproxRovaOutput> {
    check_state(trellis, s)?;
    let states = trellis.num_states();
    let nb = trellis.all_branches().len();
    let l = trellis.length();
    let mut metric = initial_metric(states, s);
    let mut next = vec![0.0; states];
    let mut ext = vec![0.0; nb];
    let mut preds = vec![0u32; states * l];
    let mut share = vec![0.0; states * l];
    let inputs_per_state = 1u64 << trellis.code().k();

    for seg in 0..l {
        acs(trellis, dens, seg, &metric, &mut ext, &mut next, &mut preds[seg * states..(seg + 1) * states]);
        for r in 0..states {
            let top = next[r];
            share[seg * states + r] = if top == f64::NEG_INFINITY {
                0.0
            } else {
                1.0 / trellis.incoming(r).iter().map(|&b| (ext[b] - top).exp()).sum::<f64>()
            };
        }
        ops.multiplications += nb as u64 + 1;
        ops.additions += states as u64 * (inputs_per_state - 1);
        ops.divisions += states as u64;
        std::mem::swap(&mut metric, &mut next);
    }

    let ml = traceback(trellis, dens, &preds, s, metric[s]);
    let approx_correct_prob: f64 = ml
        .path
        .iter()
        .enumerate()
        .map(|(seg, &b)| share[seg * states + trellis.all_branches()[b].to])
        .product();
    let kk = (trellis.code().k() * trellis.free_segments()) as f64;
    let approx_evidence = ml.log_likelihood - kk * LN_2 - approx_correct_prob.ln();
    Ok(ApproxRovaOutput { ml, approx_correct_prob, approx_evidence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{transmit, ChannelParams};
    use crate::code::CodeSpec;
    use crate::trellis::InfoWord;

    /// Every info word whose codeword starts in `s`, with its log-likelihood.
    fn s_paths(trellis: &Trellis, dens: &BranchDensities, s: usize) -> Vec<(Codeword, f64)> {
        let bits = trellis.code().k() * trellis.length();
        (0..1u64 << bits)
            .map(|i| trellis.encode(&InfoWord::from_index(i, bits)).unwrap())
            .filter(|cw| cw.start_state == s)
            .map(|cw| {
                let ll = dens.path_log_likelihood(trellis, &trellis.trace(&cw).unwrap());
                (cw, ll)
            })
            .collect()
    }

    fn lse(v: impl Iterator<Item = f64>) -> f64 {
        let v: Vec<f64> = v.collect();
        let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    }

    fn noisy(trellis: &Trellis, sigma2: f64, seed: u64) -> (Codeword, ReceivedSequence) {
        let bits = trellis.code().k() * trellis.length();
        let cw = trellis.encode(&InfoWord::from_index(seed.wrapping_mul(0x9e37_79b9), bits)).unwrap();
        let p = ChannelParams::awgn(sigma2).unwrap();
        let y = transmit(&cw, trellis.code().n(), &p, seed);
        (cw, y)
    }

    #[test]
    fn noiseless_viterbi_metric() {
        let t = Trellis::new(CodeSpec::rate_half_nu2(), 8).unwrap();
        let cw = t.encode(&InfoWord(vec![0, 1, 1, 0, 1, 0, 0, 1])).unwrap();
        let sigma2 = 0.5;
        let p = ChannelParams::awgn(sigma2).unwrap();
        let values = cw.bits.iter().map(|&b| p.symbol(b)).collect();
        let y = ReceivedSequence::new(values, 2, p).unwrap();
        let v = viterbi(&t, &y, cw.start_state).unwrap();
        assert_eq!(v.codeword, cw);
        let expect = 16.0 * (-0.5 * (2.0 * std::f64::consts::PI * sigma2).ln());
        assert!((v.log_likelihood - expect).abs() < 1e-10);
    }

    #[test]
    fn favouring_zero_gives_zero_path() {
        let t = Trellis::new(CodeSpec::rate_third_nu6(), 10).unwrap();
        let p = ChannelParams::awgn(1.0).unwrap();
        let y = ReceivedSequence::new(vec![0.8; 30], 3, p).unwrap();
        let v = viterbi(&t, &y, 0).unwrap();
        assert!(v.codeword.bits.iter().all(|&b| b == 0));
    }

    #[test]
    fn viterbi_matches_exhaustive_search() {
        let t = Trellis::new(CodeSpec::rate_half_nu2(), 6).unwrap();
        for seed in 0..50 {
            let (_, y) = noisy(&t, 0.9, seed);
            let dens = BranchDensities::new(&t, &y).unwrap();
            for s in 0..4 {
                let all = s_paths(&t, &dens, s);
                assert_eq!(all.len(), 1 << 4);
                let (best, best_ll) = all.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
                let v = viterbi(&t, &y, s).unwrap();
                assert_eq!(&v.codeword, best);
                assert!((v.log_likelihood - best_ll).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rova_matches_brute_force() {
        let codes = [
            (CodeSpec::rate_half_nu2(), 6),
            (CodeSpec::new(1, 3, 3, vec![0o15, 0o13, 0o17]).unwrap(), 8),
            (CodeSpec::new(2, 3, 2, vec![0o3, 0o1, 0o2, 0o1, 0o2, 0o3]).unwrap(), 4),
        ];
        for (code, l) in codes {
            let t = Trellis::new(code, l).unwrap();
            let kk = (t.code().k() * t.free_segments()) as f64;
            for seed in 0..100 {
                let (_, y) = noisy(&t, 0.4 + (seed % 5) as f64 * 0.3, seed);
                let dens = BranchDensities::new(&t, &y).unwrap();
                for s in 0..t.num_states() {
                    let all = s_paths(&t, &dens, s);
                    let total = lse(all.iter().map(|x| x.1));
                    let best = all.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
                    let r = rova(&t, &y, s).unwrap();
                    let exact = (best - total).exp();
                    assert!(((r.word_correct_prob - exact) / exact).abs() < 1e-9, "{} vs {exact}", r.word_correct_prob);
                    let evidence = total - kk * LN_2;
                    assert!((r.evidence - evidence).abs() < 1e-9 * evidence.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn forced_path_is_certain() {
        let t = Trellis::new(CodeSpec::rate_third_nu6(), 6).unwrap();
        let (_, y) = noisy(&t, 2.0, 5);
        for s in [0, 17, 63] {
            let r = rova(&t, &y, s).unwrap();
            assert!((r.word_correct_prob - 1.0).abs() < 1e-12);
            let a = approx_rova(&t, &y, s).unwrap();
            assert!((a.approx_correct_prob - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rova_posteriors_partition_each_segment() {
        let t = Trellis::new(CodeSpec::rate_third_nu6(), 20).unwrap();
        let (_, y) = noisy(&t, 1.2, 3);
        let dens = BranchDensities::new(&t, &y).unwrap();
        let mut trace = Vec::new();
        rova_traced(&t, &dens, 9, &mut OpCounters::default(), Some(&mut trace)).unwrap();
        assert_eq!(trace.len(), 20);
        for snap in &trace {
            let sum: f64 = snap.all.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            for (s, a) in snap.survivor.iter().zip(&snap.all) {
                assert!(*s <= a + 1e-15 && *s >= 0.0);
            }
        }
    }

    #[test]
    fn approx_selects_same_word() {
        let t = Trellis::new(CodeSpec::rate_half_nu2(), 6).unwrap();
        let mut worst: f64 = 0.0;
        for seed in 0..200 {
            let (_, y) = noisy(&t, 1.0, seed);
            for s in 0..4 {
                let a = approx_rova(&t, &y, s).unwrap();
                let e = rova(&t, &y, s).unwrap();
                let v = viterbi(&t, &y, s).unwrap();
                assert_eq!(a.ml.codeword, v.codeword);
                assert_eq!(e.ml.codeword, v.codeword);
                assert!(a.approx_correct_prob > 0.0 && a.approx_correct_prob <= 1.0 + 1e-12);
                worst = worst.max((a.approx_correct_prob - e.word_correct_prob).abs());
            }
        }
        // the estimate is not exact on noisy inputs, but it tracks the exact value
        assert!(worst > 1e-6 && worst < 0.5, "{worst}");
    }

    #[test]
    fn approx_becomes_certain_without_noise() {
        let t = Trellis::new(CodeSpec::rate_third_nu6(), 16).unwrap();
        let cw = t.encode(&InfoWord::from_index(0x5a5a, 16)).unwrap();
        let mut last = 0.0;
        for sigma2 in [0.5, 0.1, 0.02] {
            let p = ChannelParams::awgn(sigma2).unwrap();
            let clean = ReceivedSequence::new(cw.bits.iter().map(|&b| p.symbol(b)).collect(), 3, p).unwrap();
            let a = approx_rova(&t, &clean, cw.start_state).unwrap();
            let e = rova(&t, &clean, cw.start_state).unwrap();
            assert_eq!(a.ml.codeword, cw);
            assert!(a.approx_correct_prob >= last);
            last = a.approx_correct_prob;
            if sigma2 < 0.05 {
                assert!(1.0 - a.approx_correct_prob < 1e-6);
                assert!(1.0 - e.word_correct_prob < 1e-6);
            }
        }
    }

    #[test]
    fn op_counts_follow_table() {
        use crate::counters::Algorithm;
        let t = Trellis::new(CodeSpec::rate_third_nu6(), 32).unwrap();
        let (_, y) = noisy(&t, 1.0, 2);
        let dens = BranchDensities::new(&t, &y).unwrap();
        let mut ops = OpCounters::new(32);
        viterbi_with(&t, &dens, 0, &mut ops).unwrap();
        assert_eq!(ops.per_segment().1, Algorithm::Viterbi.formula(1, 6).1 as f64);
        let mut ops = OpCounters::new(32);
        rova_with(&t, &dens, 0, &mut ops).unwrap();
        let (_, m, d) = Algorithm::Rova.formula(1, 6);
        assert_eq!(ops.per_segment().1, m as f64);
        assert_eq!(ops.per_segment().2, d as f64);
        let mut ops = OpCounters::new(32);
        approx_rova_with(&t, &dens, 0, &mut ops).unwrap();
        let (a, m, d) = Algorithm::ApproxRova.formula(1, 6);
        assert_eq!(ops.per_segment(), (a as f64, m as f64, d as f64));
    }

    #[test]
    fn bad_state_is_rejected() {
        let t = Trellis::new(CodeSpec::rate_half_nu2(), 6).unwrap();
        let (_, y) = noisy(&t, 1.0, 0);
        assert!(matches!(rova(&t, &y, 4), Err(Error::StateOutOfRange { .. })));
    }
}
