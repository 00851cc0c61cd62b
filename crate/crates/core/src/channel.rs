//! BPSK over AWGN, the binary symmetric channel, and per-branch densities.
//!
//! Code bit 0 is sent as `+sqrt(P)` and bit 1 as `-sqrt(P)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::code::CodeSpec;
use crate::error::{Error, Result};
use crate::trellis::{Codeword, Trellis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Awgn,
    Bsc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub kind: ChannelKind,
    /// Noise variance `N0 / 2` (AWGN).
    pub sigma2: f64,
    /// Symbol energy `P` (AWGN).
    pub power: f64,
    /// Crossover probability (BSC).
    pub crossover: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `P / sigma^2 = 2 (k/n) Eb/N0`, as a linear ratio.
pub fn snr_from_ebn0(code: &CodeSpec, ebn0_db: f64) -> f64 {
    2.0 * code.rate() * db_to_linear(ebn0_db)
}

/// Inverse of [`snr_from_ebn0`]; returns Eb/N0 in dB.
pub fn ebn0_from_snr(code: &CodeSpec, snr_linear: f64) -> f64 {
    linear_to_db(snr_linear / (2.0 * code.rate()))
}

impl ChannelParams {
    pub fn awgn(sigma2: f64) -> Result<Self> {
        Self::awgn_with_power(sigma2, 1.0)
    }

    pub fn awgn_with_power(sigma2: f64, power: f64) -> Result<Self> {
        let p = ChannelParams { kind: ChannelKind::Awgn, sigma2, power, crossover: 0.0 };
        p.validate()?;
        Ok(p)
    }

    /// AWGN with unit symbol energy at the given Eb/N0.
    pub fn awgn_ebn0(code: &CodeSpec, ebn0_db: f64) -> Result<Self> {
        Self::awgn(1.0 / snr_from_ebn0(code, ebn0_db))
    }

    pub fn bsc(crossover: f64) -> Result<Self> {
        let p = ChannelParams { kind: ChannelKind::Bsc, sigma2: 0.0, power: 1.0, crossover };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ChannelKind::Awgn => {
                if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
                    return Err(Error::InvalidChannel(format!("sigma2 must be positive, got {}", self.sigma2)));
                }
                if !(self.power > 0.0 && self.power.is_finite()) {
                    return Err(Error::InvalidChannel(format!("power must be positive, got {}", self.power)));
                }
            }
            ChannelKind::Bsc => {
                if !(self.crossover > 0.0 && self.crossover < 0.5) {
                    return Err(Error::InvalidChannel(format!(
                        "crossover must lie in (0, 1/2), got {}",
                        self.crossover
                    )));
                }
            }
        }
        Ok(())
    }

    /// Transmitted amplitude of a code bit.
    #[inline]
    pub fn symbol(&self, bit: u8) -> f64 {
        let a = self.power.sqrt();
        if bit == 0 {
            a
        } else {
            -a
        }
    }

    /// Natural log of `f(y | branch)` for one segment.
    pub fn log_branch_likelihood(&self, y: &[f64], label: usize) -> f64 {
        match self.kind {
            ChannelKind::Awgn => {
                let norm = -0.5 * (2.0 * std::f64::consts::PI * self.sigma2).ln();
                y.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let d = v - self.symbol(((label >> j) & 1) as u8);
                        norm - d * d / (2.0 * self.sigma2)
                    })
                    .sum()
            }
            ChannelKind::Bsc => {
                let d = y
                    .iter()
                    .enumerate()
                    .filter(|&(j, &v)| (v != 0.0) != ((label >> j) & 1 == 1))
                    .count() as f64;
                let n = y.len() as f64;
                d * self.crossover.ln() + (n - d) * (1.0 - self.crossover).ln()
            }
        }
    }

    /// `f(y | branch)` for one segment.
    pub fn branch_likelihood(&self, y: &[f64], label: usize) -> f64 {
        self.log_branch_likelihood(y, label).exp()
    }
}

/// Channel outputs for `L` segments of `n` symbols. BSC outputs are stored as `0.0` / `1.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSequence {
    pub values: Vec<f64>,
    pub n: usize,
    pub params: ChannelParams,
}

impl ReceivedSequence {
    pub fn new(values: Vec<f64>, n: usize, params: ChannelParams) -> Result<Self> {
        params.validate()?;
        if n == 0 || !values.len().is_multiple_of(n) {
            return Err(Error::Dimension { expected: n, got: values.len() });
        }
        if params.kind == ChannelKind::Bsc && values.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidChannel("BSC outputs must be 0 or 1".into()));
        }
        Ok(ReceivedSequence { values, n, params })
    }

    pub fn segments(&self) -> usize {
        self.values.len() / self.n
    }

    /// Observations of segment `seg` (0-based).
    pub fn segment(&self, seg: usize) -> &[f64] {
        &self.values[seg * self.n..(seg + 1) * self.n]
    }
}

/// Sends a codeword through the channel using a generator seeded from `seed`.
pub fn transmit(codeword: &Codeword, n: usize, params: &ChannelParams, seed: u64) -> ReceivedSequence {
    transmit_with(codeword, n, params, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn transmit_with<R: Rng + ?Sized>(codeword: &Codeword, n: usize, params: &ChannelParams, rng: &mut R) -> ReceivedSequence {
    let values = match params.kind {
        ChannelKind::Awgn => {
            let noise = Normal::new(0.0, params.sigma2.sqrt()).expect("validated variance");
            codeword.bits.iter().map(|&b| params.symbol(b) + noise.sample(rng)).collect()
        }
        ChannelKind::Bsc => codeword
            .bits
            .iter()
            .map(|&b| f64::from(b ^ u8::from(rng.random_bool(params.crossover))))
            .collect(),
    };
    ReceivedSequence { values, n, params: *params }
}

/// Branch densities `f(y_l | label)` for every segment and output label.
///
/// Each segment's densities are stored relative to that segment's largest one:
/// `linear` holds values in `(0, 1]`, `log` their natural logs, and `offset`
/// the per-segment log scale, so the true log density is `log + offset`.
#[derive(Debug, Clone)]
pub struct BranchDensities {
    labels: usize,
    linear: Vec<f64>,
    log: Vec<f64>,
    offset: Vec<f64>,
}

impl BranchDensities {
    pub fn new(trellis: &Trellis, y: &ReceivedSequence) -> Result<Self> {
        let n = trellis.code().n();
        if y.n != n {
            return Err(Error::Dimension { expected: n, got: y.n });
        }
        if y.segments() != trellis.length() {
            return Err(Error::Dimension { expected: trellis.length(), got: y.segments() });
        }
        let labels = 1 << n;
        let segments = trellis.length();
        let mut linear = Vec::with_capacity(segments * labels);
        let mut log = Vec::with_capacity(segments * labels);
        let mut offset = Vec::with_capacity(segments);
        for seg in 0..segments {
            let ys = y.segment(seg);
            let raw: Vec<f64> = (0..labels).map(|l| y.params.log_branch_likelihood(ys, l)).collect();
            let top = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            offset.push(top);
            for r in raw {
                log.push(r - top);
                linear.push((r - top).exp());
            }
        }
        Ok(BranchDensities { labels, linear, log, offset })
    }

    pub fn segments(&self) -> usize {
        self.offset.len()
    }

    /// Relative linear density for segment `seg` (0-based).
    #[inline]
    pub fn linear(&self, seg: usize, label: usize) -> f64 {
        self.linear[seg * self.labels + label]
    }

    #[inline]
    pub fn log(&self, seg: usize, label: usize) -> f64 {
        self.log[seg * self.labels + label]
    }

    #[inline]
    pub fn offset(&self, seg: usize) -> f64 {
        self.offset[seg]
    }

    pub fn total_offset(&self) -> f64 {
        self.offset.iter().sum()
    }

    /// Multiplies every density of segment `seg` by `factor` without touching the offset.
    pub fn scale_segment(&mut self, seg: usize, factor: f64) {
        assert!(factor > 0.0);
        let ln = factor.ln();
        for l in 0..self.labels {
            self.linear[seg * self.labels + l] *= factor;
            self.log[seg * self.labels + l] += ln;
        }
    }

    /// Log-likelihood `ln f(y | x)` of a codeword, given its branch indices.
    pub fn path_log_likelihood(&self, trellis: &Trellis, path: &[usize]) -> f64 {
        path.iter()
            .enumerate()
            .map(|(seg, &b)| self.log(seg, trellis.all_branches()[b].label) + self.offset(seg))
            .sum()
    }
}
