//! Wrap-around Viterbi decoding: Viterbi passes around the circular trellis,
//! each pass starting from the previous pass's end metrics.

use crate::channel::BranchDensities;
use crate::counters::OpCounters;
use crate::error::Result;
use crate::terminated::viterbi_with;
use crate::trellis::{Codeword, Trellis};

pub const DEFAULT_MAX_ITERS: usize = 2;

#[derive(Debug, Clone)]
pub struct WavaOutput {
    pub codeword: Codeword,
    pub start_state: usize,
    /// Passes performed.
    pub iterations: usize,
    /// True when the result came from the per-state fallback.
    pub fallback: bool,
}

/// Stops after the first pass whose best end state holds a tail-biting
/// survivor. After `max_iters` passes the best tail-biting survivor seen is
/// returned; if there was none, the best per-state terminated path.
pub fn wava_decode(trellis: &Trellis, dens: &BranchDensities, max_iters: usize, ops: &mut OpCounters) -> Result<WavaOutput> {
    let max_iters = max_iters.max(1);
    let states = trellis.num_states();
    let branches = trellis.all_branches();
    let nb = branches.len();
    let l = trellis.length();

    let mut metric = vec![0.0; states];
    let mut next = vec![0.0; states];
    let mut origin = vec![0usize; states];
    let mut next_origin = vec![0usize; states];
    let mut ext = vec![0.0; nb];
    let mut preds = vec![0u32; states * l];
    let mut best_tb: Option<(f64, Vec<usize>)> = None;

    for iter in 1..=max_iters {
        for (r, o) in origin.iter_mut().enumerate() {
            *o = r;
        }
        for seg in 0..l {
            for (b, br) in branches.iter().enumerate() {
                ext[b] = metric[br.from] + dens.log(seg, br.label);
            }
            for r in 0..states {
                let inc = trellis.incoming(r);
                let mut best = inc[0];
                for &b in &inc[1..] {
                    if ext[b] > ext[best] {
                        best = b;
                    }
                }
                next[r] = ext[best];
                next_origin[r] = origin[branches[best].from];
                preds[seg * states + r] = best as u32;
            }
            ops.multiplications += nb as u64;
            std::mem::swap(&mut metric, &mut next);
            std::mem::swap(&mut origin, &mut next_origin);
        }

        let winner = (0..states).fold(0, |a, r| if metric[r] > metric[a] { r } else { a });
        for r in (0..states).filter(|&r| origin[r] == r) {
            let path = traceback(trellis, &preds, r);
            let ll = dens.path_log_likelihood(trellis, &path);
            if best_tb.as_ref().is_none_or(|(b, _)| ll > *b) {
                best_tb = Some((ll, path.clone()));
            }
            if r == winner {
                return Ok(finish(trellis, r, &path, iter, false));
            }
        }
        if iter == max_iters {
            if let Some((_, path)) = best_tb {
                let start = branches[path[0]].from;
                return Ok(finish(trellis, start, &path, iter, false));
            }
        }
        let top = metric.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for m in metric.iter_mut() {
            *m -= top;
        }
    }

    let mut best: Option<(f64, Codeword)> = None;
    for s in 0..states {
        let v = viterbi_with(trellis, dens, s, ops)?;
        if best.as_ref().is_none_or(|(b, _)| v.log_likelihood > *b) {
            best = Some((v.log_likelihood, v.codeword));
        }
    }
    let (_, codeword) = best.expect("at least one state");
    Ok(WavaOutput { start_state: codeword.start_state, codeword, iterations: max_iters, fallback: true })
}

fn traceback(trellis: &Trellis, preds: &[u32], end: usize) -> Vec<usize> {
    let states = trellis.num_states();
    let mut path = vec![0usize; trellis.length()];
    let mut state = end;
    for seg in (0..trellis.length()).rev() {
        let b = preds[seg * states + state] as usize;
        path[seg] = b;
        state = trellis.all_branches()[b].from;
    }
    path
}

fn finish(trellis: &Trellis, start: usize, path: &[usize], iterations: usize, fallback: bool) -> WavaOutput {
    let inputs: Vec<usize> = path.iter().map(|&b| trellis.all_branches()[b].input).collect();
    let (codeword, end) = trellis.walk(start, &inputs);
    debug_assert_eq!(end, start);
    WavaOutput { codeword, start_state: start, iterations, fallback }
}
