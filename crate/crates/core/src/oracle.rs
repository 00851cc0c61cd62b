//! Brute-force ground truth over the full tail-biting codebook.
//!
//! Likelihoods are evaluated symbol by symbol from the channel model, without
//! the decoders' branch tables, and combined with log-sum-exp.

use crate::channel::{ChannelKind, ReceivedSequence};
use crate::error::{Error, Result};
use crate::trellis::{Codeword, InfoWord, Trellis};

/// Default cap on `k·L`, the number of information bits enumerated.
pub const DEFAULT_CAP_BITS: usize = 20;

/// All `2^(kL)` codewords, indexed by their information word (least significant bit first).
pub fn enumerate_codebook(trellis: &Trellis, cap_bits: usize) -> Result<Vec<Codeword>> {
    let bits = trellis.code().k() * trellis.length();
    if bits > cap_bits {
        return Err(Error::CapExceeded { bits, cap: cap_bits });
    }
    (0..1u64 << bits)
        .map(|i| trellis.encode(&InfoWord::from_index(i, bits)))
        .collect()
}

/// Index of a codeword in [`enumerate_codebook`] order.
pub fn info_index(info: &InfoWord) -> u64 {
    info.0.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
}

/// `ln f(y | x)` from the per-symbol channel model.
pub fn codeword_log_likelihood(cw: &Codeword, y: &ReceivedSequence) -> f64 {
    let p = &y.params;
    match p.kind {
        ChannelKind::Awgn => {
            let norm = -0.5 * (2.0 * std::f64::consts::PI * p.sigma2).ln();
            let amp = p.power.sqrt();
            cw.bits
                .iter()
                .zip(&y.values)
                .map(|(&b, &v)| {
                    let x = if b == 0 { amp } else { -amp };
                    norm - (v - x) * (v - x) / (2.0 * p.sigma2)
                })
                .sum()
        }
        ChannelKind::Bsc => cw
            .bits
            .iter()
            .zip(&y.values)
            .map(|(&b, &v)| if f64::from(b) == v { (1.0 - p.crossover).ln() } else { p.crossover.ln() })
            .sum(),
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + values.map(|v| (v - top).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub codebook: Vec<Codeword>,
    pub log_likelihoods: Vec<f64>,
    /// `ln Σ_x f(y | x)`.
    pub log_total: f64,
    /// Exact `P(s | y)`.
    pub state_probs: Vec<f64>,
    /// Index of the most likely codeword (smallest index on ties).
    pub ml_index: usize,
    /// Most probable starting state (smallest on ties).
    pub map_state: usize,
}

impl OracleResult {
    /// Exact `P(x | y)` for codebook entry `index`.
    pub fn prob(&self, index: usize) -> f64 {
        (self.log_likelihoods[index] - self.log_total).exp()
    }

    /// Exact `P(x | y)` for an arbitrary codeword, or `None` if it is not in the codebook.
    pub fn prob_of(&self, cw: &Codeword) -> Option<f64> {
        let i = info_index(&cw.info) as usize;
        (self.codebook.get(i)? == cw).then(|| self.prob(i))
    }

    pub fn ml_codeword(&self) -> &Codeword {
        &self.codebook[self.ml_index]
    }

    pub fn ml_prob(&self) -> f64 {
        self.prob(self.ml_index)
    }
}

pub fn oracle_posteriors(trellis: &Trellis, y: &ReceivedSequence, cap_bits: usize) -> Result<OracleResult> {
    let codebook = enumerate_codebook(trellis, cap_bits)?;
    oracle_from_codebook(trellis, codebook, y)
}

/// Oracle evaluation over a precomputed codebook.
pub fn oracle_from_codebook(trellis: &Trellis, codebook: Vec<Codeword>, y: &ReceivedSequence) -> Result<OracleResult> {
    let expected = trellis.length() * trellis.code().n();
    if y.values.len() != expected {
        return Err(Error::Dimension { expected, got: y.values.len() });
    }
    let log_likelihoods: Vec<f64> = codebook.iter().map(|cw| codeword_log_likelihood(cw, y)).collect();
    let log_total = log_sum_exp(log_likelihoods.iter().copied());
    let ml_index = (0..codebook.len()).fold(0, |a, i| if log_likelihoods[i] > log_likelihoods[a] { i } else { a });
    let states = trellis.num_states();
    let mut per_state = vec![Vec::new(); states];
    for (cw, &ll) in codebook.iter().zip(&log_likelihoods) {
        per_state[cw.start_state].push(ll);
    }
    let state_probs: Vec<f64> = per_state
        .iter()
        .map(|lls| (log_sum_exp(lls.iter().copied()) - log_total).exp())
        .collect();
    let map_state = (0..states).fold(0, |a, s| if state_probs[s] > state_probs[a] { s } else { a });
    Ok(OracleResult { codebook, log_likelihoods, log_total, state_probs, ml_index, map_state })
}
