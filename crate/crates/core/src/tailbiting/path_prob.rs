//! Single forward pass over the tail-biting trellis that tracks, for every
//! (starting state, current state) pair, the posterior probability that some
//! path between them is correct, plus optionally one candidate path.

use crate::channel::BranchDensities;
use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::trellis::{Codeword, Trellis};

use super::StatePosterior;

/// Path-correct probabilities after some number of segments.
#[derive(Debug, Clone)]
pub struct PathProbTable {
    states: usize,
    /// Row-major `overall[s * states + r]`.
    pub overall: Vec<f64>,
    /// Probability that the candidate prefix is correct, and the state it occupies.
    pub candidate: Option<(f64, usize)>,
}

impl PathProbTable {
    fn initial(states: usize, candidate_start: Option<usize>) -> Self {
        let p0 = 1.0 / states as f64;
        let mut overall = vec![0.0; states * states];
        for s in 0..states {
            overall[s * states + s] = p0;
        }
        PathProbTable { states, overall, candidate: candidate_start.map(|s| (p0, s)) }
    }

    pub fn get(&self, s: usize, r: usize) -> f64 {
        self.overall[s * self.states + r]
    }

    pub fn total(&self) -> f64 {
        self.overall.iter().sum()
    }

    /// `P(s | y)`, read off the diagonal once every segment has been processed.
    fn diagonal(&self) -> StatePosterior {
        StatePosterior::new((0..self.states).map(|s| self.get(s, s)).collect())
    }
}

/// Which summation layout the overall update uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeForm {
    /// Sum over the `2^k` incoming branches.
    General,
    /// Explicit two-branch form for rate-`1/n` codes.
    TwoBranch,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub posterior: StatePosterior,
    pub table: PathProbTable,
}

/// Runs the forward recursion. `candidate` is the branch-index path of a
/// tail-biting candidate starting in `candidate_start`.
pub fn forward(
    trellis: &Trellis,
    dens: &BranchDensities,
    candidate: Option<(&[usize], usize)>,
    form: MergeForm,
    ops: &mut OpCounters,
    mut trace: Option<&mut Vec<PathProbTable>>,
) -> ForwardOutput {
    let states = trellis.num_states();
    let branches = trellis.all_branches();
    let nb = branches.len() as u64;
    let inputs = 1u64 << trellis.code().k();
    let free = trellis.free_segments();
    let two_branch = form == MergeForm::TwoBranch && trellis.code().k() == 1;

    let mut table = PathProbTable::initial(states, candidate.map(|c| c.1));
    let mut next = vec![0.0; states * states];

    for seg in 0..trellis.length() {
        let ell = seg + 1;
        let tail = ell > free;
        let mut delta = 0.0;
        for s in 0..states {
            let row = &table.overall[s * states..(s + 1) * states];
            let out = &mut next[s * states..(s + 1) * states];
            for (r, slot) in out.iter_mut().enumerate() {
                let valid = !tail || trellis.reaches(r, ell, s);
                let inc = trellis.incoming(r);
                if two_branch {
                    let (bm, bu) = (&branches[inc[0]], &branches[inc[1]]);
                    let (tm, tu) = if valid {
                        (dens.linear(seg, bm.label) * row[bm.from], dens.linear(seg, bu.label) * row[bu.from])
                    } else {
                        (0.0, 0.0)
                    };
                    delta += tm;
                    delta += tu;
                    *slot = tm + tu;
                } else {
                    let mut sum = 0.0;
                    for &b in inc {
                        let br = &branches[b];
                        let term = if valid { dens.linear(seg, br.label) * row[br.from] } else { 0.0 };
                        delta += term;
                        sum += term;
                    }
                    *slot = sum;
                }
            }
        }
        for v in next.iter_mut() {
            *v /= delta;
        }
        let st = states as u64;
        ops.multiplications += st * nb;
        ops.additions += (st * nb - 1) + st * st * (inputs - 1);
        ops.divisions += st * st;

        if let (Some((path, s_hat)), Some((p, j))) = (candidate, table.candidate.as_mut()) {
            let br = &branches[path[seg]];
            debug_assert_eq!(br.from, *j);
            let f = if trellis.indicator(br, ell, s_hat) { dens.linear(seg, br.label) } else { 0.0 };
            *p = f * *p / delta;
            *j = br.to;
            ops.multiplications += 1;
            ops.divisions += 1;
        }
        std::mem::swap(&mut table.overall, &mut next);
        if let Some(t) = trace.as_deref_mut() {
            t.push(table.clone());
        }
    }
    ForwardOutput { posterior: table.diagonal(), table }
}

/// Validates a candidate and returns its branch path.
pub(crate) fn candidate_path(trellis: &Trellis, candidate: &Codeword, s_hat: usize) -> Result<Vec<usize>> {
    if candidate.start_state != s_hat {
        return Err(Error::NotTailBiting(format!(
            "candidate starts in {} but s_hat is {s_hat}",
            candidate.start_state
        )));
    }
    trellis.trace(candidate)
}
