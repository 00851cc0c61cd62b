//! Tail-biting trellis and encoder.
//!
//! States are the encoder register contents with the most recent input block
//! in the most significant bits. A branch leaving state `m` on input `u`
//! enters `(u << nu | m) >> k`.

use crate::code::CodeSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub input: usize,
    /// Output bits, bit `j` holding output `j`.
    pub label: usize,
}

/// `k·L` information bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InfoWord(pub Vec<u8>);

impl InfoWord {
    /// Bits of `index`, least significant first; bits past 64 are zero.
    pub fn from_index(index: u64, bits: usize) -> Self {
        InfoWord((0..bits).map(|i| if i < 64 { ((index >> i) & 1) as u8 } else { 0 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A trellis path: its starting state, the information word and the `n·L` code bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codeword {
    pub start_state: usize,
    pub info: InfoWord,
    pub bits: Vec<u8>,
}

impl Codeword {
    pub fn weight(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }
}

/// The time-invariant trellis of a code over `L` segments.
#[derive(Debug, Clone)]
pub struct Trellis {
    code: CodeSpec,
    length: usize,
    branches: Vec<Branch>,
    /// Branch indices entering each state, ascending by from-state.
    incoming: Vec<Vec<usize>>,
}

impl Trellis {
    pub fn new(code: CodeSpec, length: usize) -> Result<Self> {
        let memory = code.memory_segments();
        if length < memory {
            return Err(Error::TooShort { length, memory });
        }
        let states = code.num_states();
        let inputs = 1usize << code.k();
        let mut branches = Vec::with_capacity(states * inputs);
        let mut incoming = vec![Vec::with_capacity(inputs); states];
        for from in 0..states {
            for input in 0..inputs {
                let to = code.next_state(from, input);
                incoming[to].push(branches.len());
                branches.push(Branch { from, to, input, label: code.output_label(from, input) });
            }
        }
        Ok(Trellis { code, length, branches, incoming })
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    /// Number of segments `L`.
    pub fn length(&self) -> usize {
        self.length
    }

    /// Segments in which every branch may lie on a tail-biting path (`K`).
    pub fn free_segments(&self) -> usize {
        self.length - self.code.memory_segments()
    }

    pub fn num_states(&self) -> usize {
        self.code.num_states()
    }

    pub fn all_branches(&self) -> &[Branch] {
        &self.branches
    }

    /// The branch set of segment `ell` (1-based), ordered by from-state then input.
    pub fn branches(&self, ell: usize) -> Result<&[Branch]> {
        if ell == 0 || ell > self.length {
            return Err(Error::SegmentOutOfRange { ell, length: self.length });
        }
        Ok(&self.branches)
    }

    /// Indices into [`Trellis::all_branches`] of the branches entering `state`.
    pub fn incoming(&self, state: usize) -> &[usize] {
        &self.incoming[state]
    }

    /// Whether the `L - ell` remaining segments can lead from `r` to `s_prime`.
    #[inline]
    pub fn reaches(&self, r: usize, ell: usize, s_prime: usize) -> bool {
        let steps = self.length.saturating_sub(ell);
        let shift = self.code.k() * steps;
        let nu = self.code.nu();
        if shift >= nu {
            return true;
        }
        (r >> shift) == (s_prime & ((1 << (nu - shift)) - 1))
    }

    /// Branch-valid indicator: the branch entering `r` in segment `ell` lies on some
    /// path terminating in `s_prime`.
    #[inline]
    pub fn indicator(&self, branch: &Branch, ell: usize, s_prime: usize) -> bool {
        ell <= self.free_segments() || self.reaches(branch.to, ell, s_prime)
    }

    /// Input block of segment `seg` (0-based) from an information word.
    pub fn segment_input(&self, info: &InfoWord, seg: usize) -> usize {
        let k = self.code.k();
        (0..k).fold(0, |acc, i| acc | ((info.0[seg * k + i] as usize) << (k - 1 - i)))
    }

    /// Encodes `info` as a tail-biting codeword.
    ///
    /// For a feedforward encoder the start state is the register content left by
    /// the final `nu / k` input blocks, which guarantees the path closes.
    pub fn encode(&self, info: &InfoWord) -> Result<Codeword> {
        let k = self.code.k();
        if info.len() != k * self.length {
            return Err(Error::Dimension { expected: k * self.length, got: info.len() });
        }
        let memory = self.code.memory_segments();
        let start = (self.length - memory..self.length)
            .fold(0, |state, seg| self.code.next_state(state, self.segment_input(info, seg)));
        let inputs: Vec<usize> = (0..self.length).map(|seg| self.segment_input(info, seg)).collect();
        let (cw, end) = self.walk(start, &inputs);
        debug_assert_eq!(end, start);
        Ok(cw)
    }

    /// Follows `inputs` from `start`, returning the codeword and the final state.
    pub fn walk(&self, start: usize, inputs: &[usize]) -> (Codeword, usize) {
        let k = self.code.k();
        let n = self.code.n();
        let mut info = Vec::with_capacity(k * inputs.len());
        let mut bits = Vec::with_capacity(n * inputs.len());
        let mut state = start;
        for &u in inputs {
            info.extend((0..k).map(|i| ((u >> (k - 1 - i)) & 1) as u8));
            let label = self.code.output_label(state, u);
            bits.extend((0..n).map(|j| ((label >> j) & 1) as u8));
            state = self.code.next_state(state, u);
        }
        (Codeword { start_state: start, info: InfoWord(info), bits }, state)
    }

    /// State sequence `s_0, …, s_L` and per-segment branch indices of a codeword,
    /// after checking it is a tail-biting path of this trellis.
    pub fn trace(&self, cw: &Codeword) -> Result<Vec<usize>> {
        let k = self.code.k();
        let n = self.code.n();
        if cw.info.len() != k * self.length {
            return Err(Error::Dimension { expected: k * self.length, got: cw.info.len() });
        }
        if cw.bits.len() != n * self.length {
            return Err(Error::Dimension { expected: n * self.length, got: cw.bits.len() });
        }
        if cw.start_state >= self.num_states() {
            return Err(Error::StateOutOfRange { state: cw.start_state, states: self.num_states() });
        }
        let inputs = 1usize << k;
        let mut state = cw.start_state;
        let mut path = Vec::with_capacity(self.length);
        for seg in 0..self.length {
            let u = self.segment_input(&cw.info, seg);
            let b = state * inputs + u;
            let branch = &self.branches[b];
            let label: usize = (0..n).fold(0, |acc, j| acc | ((cw.bits[seg * n + j] as usize) << j));
            if label != branch.label {
                return Err(Error::NotTailBiting(format!("code bits disagree with the inputs in segment {}", seg + 1)));
            }
            path.push(b);
            state = branch.to;
        }
        if state != cw.start_state {
            return Err(Error::NotTailBiting(format!("path starts in {} but ends in {state}", cw.start_state)));
        }
        Ok(path)
    }
}
