//! Monte Carlo experiments: word-error sweeps, per-word reliability dumps and
//! operation-count reports, emitted as CSV.

use std::io::Write;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{linear_to_db, snr_from_ebn0, transmit_with, BranchDensities, ChannelKind, ChannelParams};
use crate::code::{parse_octal_list, CodeSpec};
use crate::counters::{Algorithm, OpCounters};
use crate::error::{Error, Result};
use crate::tailbiting::{self, DecoderKind, MergeForm};
use crate::terminated;
use crate::trellis::{InfoWord, Trellis};

pub const CSV_HEADER: &str = "ebn0_db,snr_db,decoder,words,actual_wer,mean_computed_wer,mean_computed_correct_prob,wilson_95_halfwidth,adds_per_seg,mults_per_seg,divs_per_seg";
pub const HISTOGRAM_HEADER: &str = "word,decoder,ebn0_db,word_error_prob,decoded_correctly";
pub const BINNED_HEADER: &str = "decoder,bin_lower,bin_upper,count";

/// Error counts below this leave `actual_wer` blank.
pub const DEFAULT_MIN_ERRORS: usize = 100;
/// Decade bins span `[1e-12, 1]`; anything smaller lands in the lowest bin.
pub const HISTOGRAM_FLOOR_EXP: i32 = -12;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub code: CodeSpec,
    pub length: usize,
    pub channel: ChannelKind,
    pub ebn0_db: Vec<f64>,
    pub words: usize,
    pub decoders: Vec<DecoderKind>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub min_errors: usize,
}

impl ExperimentConfig {
    pub fn new(code: CodeSpec, length: usize, ebn0_db: Vec<f64>, words: usize, decoders: Vec<DecoderKind>) -> Self {
        ExperimentConfig {
            code,
            length,
            channel: ChannelKind::Awgn,
            ebn0_db,
            words,
            decoders,
            seed: 1,
            out: None,
            min_errors: DEFAULT_MIN_ERRORS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.words == 0 {
            return Err(Error::Config("words must be at least 1".into()));
        }
        if self.ebn0_db.is_empty() || self.ebn0_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("the Eb/N0 grid must be non-empty and finite".into()));
        }
        if self.decoders.is_empty() {
            return Err(Error::Config("no decoder selected".into()));
        }
        Trellis::new(self.code.clone(), self.length)?;
        Ok(())
    }

    /// Channel for one grid point (unit symbol energy).
    pub fn channel_at(&self, ebn0_db: f64) -> Result<ChannelParams> {
        match self.channel {
            ChannelKind::Awgn => ChannelParams::awgn_ebn0(&self.code, ebn0_db),
            ChannelKind::Bsc => {
                let snr = snr_from_ebn0(&self.code, ebn0_db);
                // hard decisions on BPSK: p = Q(sqrt(P / sigma^2))
                ChannelParams::bsc(0.5 * statrs::function::erf::erfc((snr / 2.0).sqrt()))
            }
        }
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_key_values(text: &str) -> Result<Self> {
        KeyValues::parse(text)?.build()
    }
}

/// Loosely typed experiment settings, as read from a file or the command line.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    pub code: Option<String>,
    pub rate: Option<String>,
    pub nu: Option<usize>,
    pub length: Option<usize>,
    pub ebn0: Option<String>,
    pub words: Option<usize>,
    pub decoder: Option<String>,
    pub seed: Option<u64>,
    pub channel: Option<String>,
    pub out: Option<PathBuf>,
    pub min_errors: Option<usize>,
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

impl KeyValues {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", no + 1)))?;
            kv.set(key.trim(), value.trim())?;
        }
        Ok(kv)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "code" => self.code = Some(value.into()),
            "rate" => self.rate = Some(value.into()),
            "nu" => self.nu = Some(parse_num(key, value)?),
            "length" => self.length = Some(parse_num(key, value)?),
            "ebn0" => self.ebn0 = Some(value.into()),
            "words" => self.words = Some(parse_num(key, value)?),
            "decoder" => self.decoder = Some(value.into()),
            "seed" => self.seed = Some(parse_num(key, value)?),
            "channel" => self.channel = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "min_errors" => self.min_errors = Some(parse_num(key, value)?),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Histogram experiment defaults: `L = 32`, 0 dB SNR for rate 1/3, 2000 words.
    pub fn histogram_defaults() -> Self {
        KeyValues { length: Some(32), ebn0: Some("1.76".into()), words: Some(2000), ..KeyValues::default() }
    }

    /// Values from `other` take precedence.
    pub fn merge(self, other: KeyValues) -> KeyValues {
        KeyValues {
            code: other.code.or(self.code),
            rate: other.rate.or(self.rate),
            nu: other.nu.or(self.nu),
            length: other.length.or(self.length),
            ebn0: other.ebn0.or(self.ebn0),
            words: other.words.or(self.words),
            decoder: other.decoder.or(self.decoder),
            seed: other.seed.or(self.seed),
            channel: other.channel.or(self.channel),
            out: other.out.or(self.out),
            min_errors: other.min_errors.or(self.min_errors),
        }
    }

    /// Defaults: the 64-state rate-1/3 code, `L = 128`, 2 dB, 1000 words, `tb_rova`.
    pub fn build(self) -> Result<ExperimentConfig> {
        let (k, n) = match self.rate.as_deref() {
            Some(r) => {
                let (k, n) = r.split_once('/').ok_or_else(|| Error::Config(format!("rate {r:?} is not k/n")))?;
                (parse_num::<usize>("rate", k.trim())?, parse_num::<usize>("rate", n.trim())?)
            }
            None => (1, 3),
        };
        let code = match self.code.as_deref() {
            Some(c) => {
                let gens = parse_octal_list(c)?;
                let nu = match self.nu {
                    Some(nu) => nu,
                    None => gens.iter().map(|g| 64 - g.leading_zeros() as usize).max().unwrap_or(1).saturating_sub(1) * k,
                };
                CodeSpec::new(k, n, nu, gens)?
            }
            None => CodeSpec::rate_third_nu6(),
        };
        let ebn0_db = match self.ebn0.as_deref() {
            Some(list) => list.split(',').map(|v| parse_num::<f64>("ebn0", v.trim())).collect::<Result<Vec<_>>>()?,
            None => vec![2.0],
        };
        let decoders = match self.decoder.as_deref() {
            Some(list) => list.split(',').map(str::parse).collect::<Result<Vec<DecoderKind>>>()?,
            None => vec![DecoderKind::TbRova],
        };
        let channel = match self.channel.as_deref().unwrap_or("awgn") {
            "awgn" => ChannelKind::Awgn,
            "bsc" => ChannelKind::Bsc,
            other => return Err(Error::Config(format!("unknown channel {other:?}"))),
        };
        let cfg = ExperimentConfig {
            code,
            length: self.length.unwrap_or(128),
            channel,
            ebn0_db,
            words: self.words.unwrap_or(1000),
            decoders,
            seed: self.seed.unwrap_or(1),
            out: self.out,
            min_errors: self.min_errors.unwrap_or(DEFAULT_MIN_ERRORS),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Stream seed for one simulated word, independent of worker scheduling.
pub fn word_seed(seed: u64, point: usize, word: usize) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(seed) ^ point as u64) ^ word as u64)
}

#[derive(Debug, Clone)]
pub struct WordOutcome {
    pub decoded_correctly: bool,
    pub correct_prob: f64,
    pub counters: OpCounters,
}

/// Draws a random information word and its channel output for `(seed, point, word)`.
pub fn draw_word(trellis: &Trellis, params: &ChannelParams, seed: u64) -> (crate::trellis::Codeword, crate::channel::ReceivedSequence) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = trellis.code().k() * trellis.length();
    let info = InfoWord((0..bits).map(|_| rng.random_range(0..2u8)).collect());
    let cw = trellis.encode(&info).expect("length matches trellis");
    let y = transmit_with(&cw, trellis.code().n(), params, &mut rng);
    (cw, y)
}

fn simulate(trellis: &Trellis, params: &ChannelParams, decoders: &[DecoderKind], seed: u64) -> Result<Vec<WordOutcome>> {
    let (cw, y) = draw_word(trellis, params, seed);
    let dens = BranchDensities::new(trellis, &y)?;
    decoders
        .iter()
        .map(|d| {
            let r = d.decode(trellis, &dens)?;
            Ok(WordOutcome {
                decoded_correctly: r.codeword == cw,
                correct_prob: r.word_correct_prob,
                counters: r.counters,
            })
        })
        .collect()
}

/// Runs every word of one grid point for each decoder. Outcomes are indexed `[decoder][word]`.
pub fn simulate_point(cfg: &ExperimentConfig, point: usize) -> Result<Vec<Vec<WordOutcome>>> {
    let trellis = Trellis::new(cfg.code.clone(), cfg.length)?;
    let params = cfg.channel_at(cfg.ebn0_db[point])?;
    let per_word = (0..cfg.words)
        .into_par_iter()
        .map(|w| simulate(&trellis, &params, &cfg.decoders, word_seed(cfg.seed, point, w)))
        .collect::<Result<Vec<_>>>()?;
    let mut by_decoder = vec![Vec::with_capacity(cfg.words); cfg.decoders.len()];
    for outcomes in per_word {
        for (d, o) in outcomes.into_iter().enumerate() {
            by_decoder[d].push(o);
        }
    }
    Ok(by_decoder)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub ebn0_db: f64,
    pub snr_db: f64,
    pub decoder: DecoderKind,
    pub words: usize,
    pub errors: usize,
    /// `None` when fewer than the configured minimum number of errors occurred.
    pub actual_wer: Option<f64>,
    pub mean_computed_wer: f64,
    pub mean_computed_correct_prob: f64,
    pub wilson_95_halfwidth: f64,
    pub adds_per_seg: f64,
    pub mults_per_seg: f64,
    pub divs_per_seg: f64,
}

impl ResultRow {
    pub fn empirical_wer(&self) -> f64 {
        self.errors as f64 / self.words as f64
    }

    pub fn to_csv(&self) -> String {
        let actual = self.actual_wer.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.ebn0_db,
            self.snr_db,
            self.decoder,
            self.words,
            actual,
            self.mean_computed_wer,
            self.mean_computed_correct_prob,
            self.wilson_95_halfwidth,
            self.adds_per_seg,
            self.mults_per_seg,
            self.divs_per_seg
        )
    }
}

/// Half-width of the 95% Wilson score interval for `errors` out of `n`.
pub fn wilson_halfwidth(errors: usize, n: usize) -> f64 {
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let p = errors as f64 / n;
    z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt()
}

fn summarize(cfg: &ExperimentConfig, point: usize, decoder: DecoderKind, outcomes: &[WordOutcome]) -> ResultRow {
    let n = outcomes.len();
    let errors = outcomes.iter().filter(|o| !o.decoded_correctly).count();
    let mean_correct = outcomes.iter().map(|o| o.correct_prob).sum::<f64>() / n as f64;
    let mean_wer = outcomes.iter().map(|o| 1.0 - o.correct_prob).sum::<f64>() / n as f64;
    let mut ops = OpCounters::default();
    for o in outcomes {
        ops += o.counters;
    }
    let (a, m, d) = ops.per_segment();
    let ebn0 = cfg.ebn0_db[point];
    ResultRow {
        ebn0_db: ebn0,
        snr_db: linear_to_db(snr_from_ebn0(&cfg.code, ebn0)),
        decoder,
        words: n,
        errors,
        actual_wer: (errors >= cfg.min_errors).then(|| errors as f64 / n as f64),
        mean_computed_wer: mean_wer.clamp(0.0, 1.0),
        mean_computed_correct_prob: mean_correct,
        wilson_95_halfwidth: wilson_halfwidth(errors, n),
        adds_per_seg: a,
        mults_per_seg: m,
        divs_per_seg: d,
    }
}

/// One row per (grid point, decoder), in grid order.
pub fn run_wer_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for point in 0..cfg.ebn0_db.len() {
        let outcomes = simulate_point(cfg, point)?;
        for (d, o) in cfg.decoders.iter().zip(&outcomes) {
            rows.push(summarize(cfg, point, *d, o));
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub word: usize,
    pub decoder: DecoderKind,
    pub ebn0_db: f64,
    pub word_error_prob: f64,
    pub decoded_correctly: bool,
}

/// Per-word computed word-error probabilities at a single grid point.
pub fn run_histogram(cfg: &ExperimentConfig) -> Result<Vec<HistogramRow>> {
    cfg.validate()?;
    if cfg.ebn0_db.len() != 1 {
        return Err(Error::Config("histogram mode needs exactly one Eb/N0 value".into()));
    }
    let outcomes = simulate_point(cfg, 0)?;
    let mut rows = Vec::with_capacity(cfg.words * cfg.decoders.len());
    for (d, per_word) in cfg.decoders.iter().zip(&outcomes) {
        for (w, o) in per_word.iter().enumerate() {
            rows.push(HistogramRow {
                word: w,
                decoder: *d,
                ebn0_db: cfg.ebn0_db[0],
                word_error_prob: (1.0 - o.correct_prob).clamp(0.0, 1.0),
                decoded_correctly: o.decoded_correctly,
            });
        }
    }
    Ok(rows)
}

pub fn write_histogram_csv<W: Write>(rows: &[HistogramRow], mut out: W) -> Result<()> {
    writeln!(out, "{HISTOGRAM_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.word, r.decoder, r.ebn0_db, r.word_error_prob, u8::from(r.decoded_correctly))?;
    }
    Ok(())
}

/// Decade bin of a probability: `e` such that `p ∈ [10^e, 10^(e+1))`, clamped to
/// `[HISTOGRAM_FLOOR_EXP, -1]`.
pub fn decade_bin(p: f64) -> i32 {
    if p.is_nan() || p <= 0.0 {
        return HISTOGRAM_FLOOR_EXP;
    }
    (p.log10().floor() as i32).clamp(HISTOGRAM_FLOOR_EXP, -1)
}

/// Counts per decade bin, lowest bin first.
pub fn decade_histogram(probs: impl IntoIterator<Item = f64>) -> Vec<usize> {
    let mut counts = vec![0usize; (-HISTOGRAM_FLOOR_EXP) as usize];
    for p in probs {
        counts[(decade_bin(p) - HISTOGRAM_FLOOR_EXP) as usize] += 1;
    }
    counts
}

pub fn write_binned_csv<W: Write>(rows: &[HistogramRow], mut out: W) -> Result<()> {
    writeln!(out, "{BINNED_HEADER}")?;
    let mut decoders: Vec<DecoderKind> = Vec::new();
    for r in rows {
        if !decoders.contains(&r.decoder) {
            decoders.push(r.decoder);
        }
    }
    for d in decoders {
        let counts = decade_histogram(rows.iter().filter(|r| r.decoder == d).map(|r| r.word_error_prob));
        for (i, c) in counts.iter().enumerate() {
            let e = HISTOGRAM_FLOOR_EXP + i as i32;
            let lower = if i == 0 { 0.0 } else { 10f64.powi(e) };
            writeln!(out, "{d},{lower},{},{c}", 10f64.powi(e + 1))?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpReportRow {
    pub algorithm: Algorithm,
    pub measured: (f64, f64, f64),
    pub formula: (u64, u64, u64),
}

/// Measures per-segment operation counts of every algorithm on one simulated word.
pub fn report_op_counts(cfg: &ExperimentConfig) -> Result<Vec<OpReportRow>> {
    cfg.validate()?;
    let trellis = Trellis::new(cfg.code.clone(), cfg.length)?;
    let params = cfg.channel_at(cfg.ebn0_db[0])?;
    let (cw, y) = draw_word(&trellis, &params, word_seed(cfg.seed, 0, 0));
    let dens = BranchDensities::new(&trellis, &y)?;
    let l = trellis.length();
    let s = cw.start_state;
    let (k, nu) = (cfg.code.k(), cfg.code.nu());

    let mut rows = Vec::new();
    for alg in Algorithm::ALL {
        let ops = match alg {
            Algorithm::Viterbi => {
                let mut o = OpCounters::new(l);
                terminated::viterbi_with(&trellis, &dens, s, &mut o)?;
                o
            }
            Algorithm::Rova => {
                let mut o = OpCounters::new(l);
                terminated::rova_with(&trellis, &dens, s, &mut o)?;
                o
            }
            Algorithm::ApproxRova => {
                let mut o = OpCounters::new(l);
                terminated::approx_rova_with(&trellis, &dens, s, &mut o)?;
                o
            }
            Algorithm::Prc => tailbiting::prc_with(&trellis, &dens, &cw, s, MergeForm::General)?.counters,
            Algorithm::TbSea => tailbiting::tb_sea_with(&trellis, &dens, MergeForm::General).2,
            Algorithm::TbRova => tailbiting::tb_rova_with(&trellis, &dens)?.counters,
            Algorithm::TbSeaRova => tailbiting::tb_sea_rova_with(&trellis, &dens)?.counters,
            Algorithm::ApproxTbRova => tailbiting::approx_tb_rova_with(&trellis, &dens)?.counters,
        };
        rows.push(OpReportRow { algorithm: alg, measured: ops.per_segment(), formula: alg.formula(k, nu) });
    }
    Ok(rows)
}

pub fn write_op_report<W: Write>(rows: &[OpReportRow], mut out: W) -> Result<()> {
    writeln!(
        out,
        "{:<18} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "algorithm", "adds", "adds(table)", "mults", "mults(table)", "divs", "divs(table)"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<18} {:>12.2} {:>12} {:>12.2} {:>12} {:>12.2} {:>12}",
            r.algorithm.name(),
            r.measured.0,
            r.formula.0,
            r.measured.1,
            r.formula.1,
            r.measured.2,
            r.formula.2
        )?;
    }
    Ok(())
}
