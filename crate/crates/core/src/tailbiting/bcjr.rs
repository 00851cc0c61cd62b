//! Forward recursion of the tail-biting BCJR algorithm, used only to estimate
//! the starting state. It does not enforce that paths end where they began.

use crate::channel::BranchDensities;
use crate::counters::OpCounters;
use crate::trellis::Trellis;

use super::StatePosterior;

/// One pass of `alpha_l(r) ∝ Σ_m alpha_{l-1}(m) f(y_l | m → r)` from a uniform start.
pub fn forward_state_estimate(trellis: &Trellis, dens: &BranchDensities, ops: &mut OpCounters) -> StatePosterior {
    let states = trellis.num_states();
    let branches = trellis.all_branches();
    let inputs = 1u64 << trellis.code().k();
    let mut alpha = vec![1.0 / states as f64; states];
    let mut next = vec![0.0; states];
    for seg in 0..trellis.length() {
        for (r, slot) in next.iter_mut().enumerate() {
            *slot = trellis
                .incoming(r)
                .iter()
                .map(|&b| alpha[branches[b].from] * dens.linear(seg, branches[b].label))
                .sum();
        }
        let norm: f64 = next.iter().sum();
        for v in next.iter_mut() {
            *v /= norm;
        }
        let st = states as u64;
        ops.multiplications += branches.len() as u64;
        ops.additions += st * (inputs - 1) + st - 1;
        ops.divisions += st;
        std::mem::swap(&mut alpha, &mut next);
    }
    StatePosterior::new(alpha)
}
