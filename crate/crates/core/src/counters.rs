//! Arithmetic operation counters and the closed-form per-segment costs they are checked against.
//!
//! Only posterior arithmetic is counted; branch density evaluation is excluded.
//! Path-metric extensions are computed in the log domain but counted as the
//! density products they stand for.

use std::ops::AddAssign;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub additions: u64,
    pub multiplications: u64,
    pub divisions: u64,
    /// Trellis segments spanned by the decode (not summed across sub-decoders).
    pub segments: u64,
}

impl OpCounters {
    pub fn new(segments: usize) -> Self {
        OpCounters { segments: segments as u64, ..Default::default() }
    }

    /// Mean `(additions, multiplications, divisions)` per trellis segment.
    pub fn per_segment(&self) -> (f64, f64, f64) {
        if self.segments == 0 {
            return (0.0, 0.0, 0.0);
        }
        let l = self.segments as f64;
        (self.additions as f64 / l, self.multiplications as f64 / l, self.divisions as f64 / l)
    }

    /// Accumulates the operations of `other`, keeping this counter's segment count.
    pub fn absorb(&mut self, other: &OpCounters) {
        self.additions += other.additions;
        self.multiplications += other.multiplications;
        self.divisions += other.divisions;
    }
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.additions += rhs.additions;
        self.multiplications += rhs.multiplications;
        self.divisions += rhs.divisions;
        self.segments += rhs.segments;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Viterbi,
    Rova,
    Prc,
    TbSea,
    ApproxRova,
    TbRova,
    TbSeaRova,
    ApproxTbRova,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Viterbi,
        Algorithm::Rova,
        Algorithm::Prc,
        Algorithm::TbSea,
        Algorithm::ApproxRova,
        Algorithm::TbRova,
        Algorithm::TbSeaRova,
        Algorithm::ApproxTbRova,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Viterbi => "VA(s)",
            Algorithm::Rova => "ROVA(s)",
            Algorithm::Prc => "PRC",
            Algorithm::TbSea => "TB SEA",
            Algorithm::ApproxRova => "Approx ROVA(s)",
            Algorithm::TbRova => "TB ROVA",
            Algorithm::TbSeaRova => "TB SEA + ROVA(s)",
            Algorithm::ApproxTbRova => "Approx TB ROVA",
        }
    }

    /// Published per-segment `(additions, multiplications, divisions)` for a binary code.
    pub fn formula(self, k: usize, nu: usize) -> (u64, u64, u64) {
        let qk = 1u64 << k;
        let qn = 1u64 << nu;
        let q2n = qn * qn;
        match self {
            Algorithm::Viterbi => (0, qn * qk, 0),
            Algorithm::Rova => (2 * qn * (2 * qk - 1) - 1, 3 * qn * qk, 2 * qn),
            Algorithm::Prc => (q2n * (2 * qk - 1) - 1, q2n * qk, q2n + 1),
            Algorithm::TbSea => (q2n * (2 * qk - 1) - 1, q2n * qk, q2n),
            Algorithm::ApproxRova => (qn * (qk - 1), qn * qk + 1, qn),
            Algorithm::TbRova => (2 * q2n * (2 * qk - 1) - qn, 3 * q2n * qk, 2 * q2n),
            Algorithm::TbSeaRova => ((q2n + 2 * qn) * (2 * qk - 1) - 2, q2n * qk + 3 * qn * qk, q2n + 2 * qn),
            Algorithm::ApproxTbRova => (q2n * (qk - 1), q2n * qk + qn, q2n),
        }
    }
}
