//! Reliability-output decoders for tail-biting codes.
//!
//! | decoder            | codeword source            | reliability           |
//! |--------------------|----------------------------|-----------------------|
//! | [`tb_rova`]        | ML over all start states   | exact                 |
//! | [`approx_tb_rova`] | ML over all start states   | simplified estimate   |
//! | [`tb_sea_rova`]    | ROVA from the MAP state    | exact                 |
//! | [`wava_prc`]       | wrap-around Viterbi        | exact (one pass)      |
//! | [`tb_bcjr_rova`]   | ROVA from BCJR state guess | approximate           |

mod bcjr;
mod path_prob;
mod wava;

use std::str::FromStr;

pub use bcjr::forward_state_estimate;
pub use path_prob::{forward, ForwardOutput, MergeForm, PathProbTable};
pub use wava::{wava_decode, WavaOutput, DEFAULT_MAX_ITERS};

use crate::channel::{BranchDensities, ReceivedSequence};
use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::terminated::{approx_rova_with, rova_with};
use crate::trellis::{Codeword, Trellis};

/// Posterior distribution over starting states.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePosterior {
    pub probs: Vec<f64>,
}

impl StatePosterior {
    pub fn new(probs: Vec<f64>) -> Self {
        StatePosterior { probs }
    }

    /// Normalised `exp(log_weights)`.
    pub fn from_log_weights(log_weights: &[f64]) -> Self {
        let top = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_weights.iter().map(|x| (x - top).exp()).collect();
        let total: f64 = w.iter().sum();
        StatePosterior { probs: w.into_iter().map(|x| x / total).collect() }
    }

    /// Most probable state; ties go to the smallest index.
    pub fn argmax(&self) -> usize {
        (0..self.probs.len()).fold(0, |a, s| if self.probs[s] > self.probs[a] { s } else { a })
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub codeword: Codeword,
    pub start_state: usize,
    /// `P(x̂ | y)`, exact or estimated depending on the decoder.
    pub word_correct_prob: f64,
    pub state_posterior: StatePosterior,
    pub counters: OpCounters,
}

impl DecodeResult {
    pub fn word_error_prob(&self) -> f64 {
        1.0 - self.word_correct_prob
    }
}

/// Runs the exact ROVA for every starting state and keeps the best path metric.
pub fn tb_rova(trellis: &Trellis, y: &ReceivedSequence) -> Result<DecodeResult> {
    tb_rova_with(trellis, &BranchDensities::new(trellis, y)?)
}

pub fn tb_rova_with(trellis: &Trellis, dens: &BranchDensities) -> Result<DecodeResult> {
    let mut ops = OpCounters::new(trellis.length());
    let runs = (0..trellis.num_states())
        .map(|s| {
            let mut o = OpCounters::default();
            let r = rova_with(trellis, dens, s, &mut o)?;
            ops.absorb(&o);
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let s_hat = (0..runs.len()).fold(0, |a, s| if runs[s].ml.log_likelihood > runs[a].ml.log_likelihood { s } else { a });
    let evidence: Vec<f64> = runs.iter().map(|r| r.evidence).collect();
    let posterior = StatePosterior::from_log_weights(&evidence);
    let states = runs.len() as u64;
    ops.additions += states - 1;
    ops.divisions += states;
    ops.multiplications += 1;
    let run = runs.into_iter().nth(s_hat).expect("state exists");
    Ok(DecodeResult {
        word_correct_prob: run.word_correct_prob * posterior.probs[s_hat],
        codeword: run.ml.codeword,
        start_state: s_hat,
        state_posterior: posterior,
        counters: ops,
    })
}

/// Simplified ROVA for every starting state.
pub fn approx_tb_rova(trellis: &Trellis, y: &ReceivedSequence) -> Result<DecodeResult> {
    approx_tb_rova_with(trellis, &BranchDensities::new(trellis, y)?)
}

pub fn approx_tb_rova_with(trellis: &Trellis, dens: &BranchDensities) -> Result<DecodeResult> {
    let mut ops = OpCounters::new(trellis.length());
    let runs = (0..trellis.num_states())
        .map(|s| {
            let mut o = OpCounters::default();
            let r = approx_rova_with(trellis, dens, s, &mut o)?;
            ops.absorb(&o);
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let s_hat = (0..runs.len()).fold(0, |a, s| if runs[s].ml.log_likelihood > runs[a].ml.log_likelihood { s } else { a });
    let evidence: Vec<f64> = runs.iter().map(|r| r.approx_evidence).collect();
    let posterior = StatePosterior::from_log_weights(&evidence);
    let states = runs.len() as u64;
    ops.additions += states - 1;
    ops.divisions += states;
    ops.multiplications += 1;
    let run = runs.into_iter().nth(s_hat).expect("state exists");
    Ok(DecodeResult {
        word_correct_prob: run.approx_correct_prob * posterior.probs[s_hat],
        codeword: run.ml.codeword,
        start_state: s_hat,
        state_posterior: posterior,
        counters: ops,
    })
}

#[derive(Debug, Clone)]
pub struct PrcOutput {
    /// `P(candidate | y)`.
    pub candidate_prob: f64,
    pub state_posterior: StatePosterior,
    pub counters: OpCounters,
}

/// Exact posterior probability of an externally decoded tail-biting candidate.
pub fn prc(trellis: &Trellis, y: &ReceivedSequence, candidate: &Codeword, s_hat: usize) -> Result<PrcOutput> {
    prc_with(trellis, &BranchDensities::new(trellis, y)?, candidate, s_hat, MergeForm::General)
}

pub fn prc_with(
    trellis: &Trellis,
    dens: &BranchDensities,
    candidate: &Codeword,
    s_hat: usize,
    form: MergeForm,
) -> Result<PrcOutput> {
    let path = path_prob::candidate_path(trellis, candidate, s_hat)?;
    let mut ops = OpCounters::new(trellis.length());
    let out = forward(trellis, dens, Some((&path, s_hat)), form, &mut ops, None);
    let (p, j) = out.table.candidate.expect("candidate tracked");
    debug_assert_eq!(j, s_hat);
    Ok(PrcOutput { candidate_prob: p, state_posterior: out.posterior, counters: ops })
}

/// Exact posterior over starting states and the MAP starting state.
pub fn tb_sea(trellis: &Trellis, y: &ReceivedSequence) -> Result<(usize, StatePosterior)> {
    let dens = BranchDensities::new(trellis, y)?;
    let (s, p, _) = tb_sea_with(trellis, &dens, MergeForm::General);
    Ok((s, p))
}

pub fn tb_sea_with(trellis: &Trellis, dens: &BranchDensities, form: MergeForm) -> (usize, StatePosterior, OpCounters) {
    let mut ops = OpCounters::new(trellis.length());
    let out = forward(trellis, dens, None, form, &mut ops, None);
    (out.posterior.argmax(), out.posterior, ops)
}

/// MAP state from the state-estimation pass, then ROVA from that state.
pub fn tb_sea_rova(trellis: &Trellis, y: &ReceivedSequence) -> Result<DecodeResult> {
    tb_sea_rova_with(trellis, &BranchDensities::new(trellis, y)?)
}

pub fn tb_sea_rova_with(trellis: &Trellis, dens: &BranchDensities) -> Result<DecodeResult> {
    let (s_hat, posterior, mut ops) = tb_sea_with(trellis, dens, MergeForm::General);
    rova_from_state(trellis, dens, s_hat, posterior, &mut ops)
}

/// BCJR forward-recursion state estimate, then ROVA from the estimated state.
pub fn tb_bcjr_rova(trellis: &Trellis, y: &ReceivedSequence) -> Result<DecodeResult> {
    tb_bcjr_rova_with(trellis, &BranchDensities::new(trellis, y)?)
}

pub fn tb_bcjr_rova_with(trellis: &Trellis, dens: &BranchDensities) -> Result<DecodeResult> {
    let mut ops = OpCounters::new(trellis.length());
    let posterior = forward_state_estimate(trellis, dens, &mut ops);
    let s_hat = posterior.argmax();
    rova_from_state(trellis, dens, s_hat, posterior, &mut ops)
}

fn rova_from_state(
    trellis: &Trellis,
    dens: &BranchDensities,
    s_hat: usize,
    posterior: StatePosterior,
    ops: &mut OpCounters,
) -> Result<DecodeResult> {
    let mut o = OpCounters::default();
    let run = rova_with(trellis, dens, s_hat, &mut o)?;
    ops.absorb(&o);
    ops.multiplications += 1;
    Ok(DecodeResult {
        word_correct_prob: run.word_correct_prob * posterior.probs[s_hat],
        codeword: run.ml.codeword,
        start_state: s_hat,
        state_posterior: posterior,
        counters: *ops,
    })
}

/// Wrap-around Viterbi candidate with its exact reliability.
pub fn wava_prc(trellis: &Trellis, y: &ReceivedSequence, max_iters: usize) -> Result<DecodeResult> {
    wava_prc_with(trellis, &BranchDensities::new(trellis, y)?, max_iters)
}

pub fn wava_prc_with(trellis: &Trellis, dens: &BranchDensities, max_iters: usize) -> Result<DecodeResult> {
    let mut ops = OpCounters::new(trellis.length());
    let cand = wava_decode(trellis, dens, max_iters, &mut ops)?;
    let out = prc_with(trellis, dens, &cand.codeword, cand.start_state, MergeForm::General)?;
    ops.absorb(&out.counters);
    Ok(DecodeResult {
        codeword: cand.codeword,
        start_state: cand.start_state,
        word_correct_prob: out.candidate_prob,
        state_posterior: out.state_posterior,
        counters: ops,
    })
}

/// Reliability-output decoders selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    TbRova,
    ApproxTbRova,
    TbSeaRova,
    WavaPrc,
    TbBcjrRova,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 5] = [
        DecoderKind::TbRova,
        DecoderKind::ApproxTbRova,
        DecoderKind::TbSeaRova,
        DecoderKind::WavaPrc,
        DecoderKind::TbBcjrRova,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::TbRova => "tb_rova",
            DecoderKind::ApproxTbRova => "approx_tb_rova",
            DecoderKind::TbSeaRova => "tb_sea_rova",
            DecoderKind::WavaPrc => "wava_prc",
            DecoderKind::TbBcjrRova => "tb_bcjr_rova",
        }
    }

    pub fn decode(self, trellis: &Trellis, dens: &BranchDensities) -> Result<DecodeResult> {
        match self {
            DecoderKind::TbRova => tb_rova_with(trellis, dens),
            DecoderKind::ApproxTbRova => approx_tb_rova_with(trellis, dens),
            DecoderKind::TbSeaRova => tb_sea_rova_with(trellis, dens),
            DecoderKind::WavaPrc => wava_prc_with(trellis, dens, DEFAULT_MAX_ITERS),
            DecoderKind::TbBcjrRova => tb_bcjr_rova_with(trellis, dens),
        }
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DecoderKind::ALL
            .into_iter()
            .find(|d| d.name() == s.trim())
            .ok_or_else(|| Error::UnknownDecoder(s.to_string()))
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
