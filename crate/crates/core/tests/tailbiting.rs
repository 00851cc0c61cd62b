use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tbrova::channel::{transmit, ChannelParams};
use tbrova::oracle::{oracle_posteriors, DEFAULT_CAP_BITS};
use tbrova::sim::draw_word;
use tbrova::tailbiting::{
    self, forward, forward_state_estimate, prc_with, tb_sea_with, wava_decode, MergeForm, DEFAULT_MAX_ITERS,
};
use tbrova::{build_code, BranchDensities, CodeSpec, Codeword, DecoderKind, OpCounters, ReceivedSequence, Trellis};

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

fn nu3() -> CodeSpec {
    build_code(1, 3, 3, &["13", "15", "17"]).unwrap()
}

fn sample(trellis: &Trellis, ebn0: f64, seed: u64) -> (Codeword, ReceivedSequence) {
    let p = ChannelParams::awgn_ebn0(trellis.code(), ebn0).unwrap();
    draw_word(trellis, &p, seed)
}

fn noiseless(trellis: &Trellis, cw: &Codeword, sigma2: f64) -> ReceivedSequence {
    let p = ChannelParams::awgn(sigma2).unwrap();
    let values = cw.bits.iter().map(|&b| p.symbol(b)).collect();
    ReceivedSequence::new(values, trellis.code().n(), p).unwrap()
}

#[test]
fn tb_rova_matches_enumeration() {
    for (code, l) in [(CodeSpec::rate_half_nu2(), 8), (nu3(), 7), (CodeSpec::rate_third_nu6(), 8)] {
        let t = Trellis::new(code, l).unwrap();
        for seed in 0..30 {
            let (_, y) = sample(&t, [0.0, 2.0, 5.0][seed as usize % 3], seed);
            let r = tailbiting::tb_rova(&t, &y).unwrap();
            let o = oracle_posteriors(&t, &y, DEFAULT_CAP_BITS).unwrap();
            assert_eq!(&r.codeword, o.ml_codeword());
            assert!(rel(r.word_correct_prob, o.ml_prob()) < 1e-9);
            for s in 0..t.num_states() {
                assert!(rel(r.state_posterior.probs[s], o.state_probs[s]) < 1e-9);
            }
        }
    }
}

#[test]
fn tb_rova_noiseless() {
    let t = Trellis::new(CodeSpec::rate_third_nu6(), 24).unwrap();
    let (cw, _) = sample(&t, 0.0, 41);
    let mut last = 0.0;
    for sigma2 in [0.5, 0.2, 0.05] {
        let r = tailbiting::tb_rova(&t, &noiseless(&t, &cw, sigma2)).unwrap();
        assert_eq!(r.codeword, cw);
        assert_eq!(r.start_state, cw.start_state);
        assert!(r.word_correct_prob >= last);
        last = r.word_correct_prob;
    }
    assert!(last > 1.0 - 1e-9);
}

#[test]
fn prc_on_ml_equals_tb_rova() {
    let t = Trellis::new(CodeSpec::rate_third_nu6(), 20).unwrap();
    for seed in 0..10 {
        let (_, y) = sample(&t, 1.0, seed);
        let dens = BranchDensities::new(&t, &y).unwrap();
        let r = tailbiting::tb_rova_with(&t, &dens).unwrap();
        let p = prc_with(&t, &dens, &r.codeword, r.start_state, MergeForm::General).unwrap();
        assert!(rel(p.candidate_prob, r.word_correct_prob) < 1e-12, "{} {}", p.candidate_prob, r.word_correct_prob);
    }
}

#[test]
fn prc_non_ml_candidates_match_enumeration() {
    let t = Trellis::new(nu3(), 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..20 {
        let (_, y) = sample(&t, 1.0, seed);
        let o = oracle_posteriors(&t, &y, DEFAULT_CAP_BITS).unwrap();
        let ml = o.ml_prob();
        for _ in 0..5 {
            let i = rng.random_range(0..o.codebook.len());
            let cand = &o.codebook[i];
            let p = tailbiting::prc(&t, &y, cand, cand.start_state).unwrap();
            assert!(rel(p.candidate_prob, o.prob(i)) < 1e-9);
            assert!(p.candidate_prob <= ml * (1.0 + 1e-12));
        }
    }
}

#[test]
fn prc_rejects_bad_candidates() {
    let t = Trellis::new(CodeSpec::rate_half_nu2(), 8).unwrap();
    let (cw, y) = sample(&t, 2.0, 1);
    let wrong_state = (cw.start_state + 1) % 4;
    assert!(tailbiting::prc(&t, &y, &cw, wrong_state).is_err());
    let mut broken = cw.clone();
    broken.bits[0] ^= 1;
    assert!(tailbiting::prc(&t, &y, &broken, cw.start_state).is_err());
}

#[test]
fn two_branch_form_is_identical() {
    for code in [CodeSpec::rate_half_nu2(), CodeSpec::rate_third_nu6()] {
        let t = Trellis::new(code, 16).unwrap();
        for seed in 0..5 {
            let (cw, y) = sample(&t, 0.5, seed);
            let dens = BranchDensities::new(&t, &y).unwrap();
            let a = prc_with(&t, &dens, &cw, cw.start_state, MergeForm::General).unwrap();
            let b = prc_with(&t, &dens, &cw, cw.start_state, MergeForm::TwoBranch).unwrap();
            assert_eq!(a.candidate_prob, b.candidate_prob);
            assert_eq!(a.state_posterior, b.state_posterior);
        }
    }
}

#[test]
fn tb_sea_matches_enumeration() {
    let t = Trellis::new(nu3(), 9).unwrap();
    for seed in 0..20 {
        let (_, y) = sample(&t, 0.0, seed);
        let (s_hat, post) = tailbiting::tb_sea(&t, &y).unwrap();
        let o = oracle_posteriors(&t, &y, DEFAULT_CAP_BITS).unwrap();
        assert_eq!(s_hat, o.map_state);
        for s in 0..8 {
            assert!(rel(post.probs[s], o.state_probs[s]) < 1e-9);
        }
    }
}

#[test]
fn tb_sea_uniform_for_zero_input() {
    let t = Trellis::new(CodeSpec::rate_third_nu6(), 12).unwrap();
    let p = ChannelParams::awgn(0.7).unwrap();
    let y = ReceivedSequence::new(vec![0.0; 36], 3, p).unwrap();
    let (s_hat, post) = tailbiting::tb_sea(&t, &y).unwrap();
    assert_eq!(s_hat, 0);
    for v in post.probs {
        assert!((v - 1.0 / 64.0).abs() < 1e-12);
    }
}

#[test]
fn tb_sea_noiseless_concentrates() {
    let t = Trellis::new(CodeSpec::rate_third_nu6(), 32).unwrap();
    let (cw, _) = sample(&t, 0.0, 8);
    let (s_hat, post) = tailbiting::tb_sea(&t, &noiseless(&t, &cw, 0.05)).unwrap();
    assert_eq!(s_hat, cw.start_state);
    assert!(post.probs[s_hat] > 1.0 - 1e-9);
}

#[test]
fn forward_table_invariants() {
    let t = Trellis::new(CodeSpec::rate_third_nu6(), 24).unwrap();
    for seed in 0..4 {
        let (cw, y) = sample(&t, -1.0, seed);
        let dens = BranchDensities::new(&t, &y).unwrap();
        let path = t.trace(&cw).unwrap();
        let mut trace = Vec::new();
        let s = cw.start_state;
        forward(&t, &dens, Some((&path, s)), MergeForm::General, &mut OpCounters::default(), Some(&mut trace));
        assert_eq!(trace.len(), 24);
        for table in &trace {
            assert!((table.total() - 1.0).abs() < 1e-9);
            assert!(table.overall.iter().all(|&v| v >= 0.0));
            let (p, j) = table.candidate.unwrap();
            assert!(p <= table.get(s, j) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn scale_invariance() {
    let t = Trellis::new(nu3(), 10).unwrap();
    let (cw, y) = sample(&t, 0.5, 12);
    let dens = BranchDensities::new(&t, &y).unwrap();
    let mut scaled = dens.clone();
    for seg in 0..10 {
        scaled.scale_segment(seg, 0.01 + seg as f64 * 7.5);
    }
    for kind in DecoderKind::ALL {
        let a = kind.decode(&t, &dens).unwrap();
        let b = kind.decode(&t, &scaled).unwrap();
        assert_eq!(a.codeword, b.codeword, "{kind}");
        assert!(rel(a.word_correct_prob, b.word_correct_prob) < 1e-9, "{kind}");
        for s in 0..8 {
            assert!(rel(a.state_posterior.probs[s], b.state_posterior.probs[s]) < 1e-9, "{kind}");
        }
    }
    let a = prc_with(&t, &dens, &cw, cw.start_state, MergeForm::General).unwrap();
    let b = prc_with(&t, &scaled, &cw, cw.start_state, MergeForm::General).unwrap();
    assert!(rel(a.candidate_prob, b.candidate_prob) < 1e-9);
}

#[test]
fn tb_sea_rova_agrees_when_confident() {
    let t = Trellis::new(CodeSpec::rate_third_nu6(), 16).unwrap();
    let mut checked = 0;
    for seed in 0..200 {
        let (_, y) = sample(&t, 1.5, seed);
        let dens = BranchDensities::new(&t, &y).unwrap();
        let a = tailbiting::tb_rova_with(&t, &dens).unwrap();
        if a.word_correct_prob > 0.5 {
            let b = tailbiting::tb_sea_rova_with(&t, &dens).unwrap();
            assert_eq!(a.codeword, b.codeword);
            assert!((a.word_correct_prob - b.word_correct_prob).abs() < 1e-12);
            checked += 1;
        }
    }
    assert!(checked > 50);
}

/// Looks for low-SNR words whose MAP starting state differs from the ML
/// codeword's state.
#[test]
fn map_state_can_differ_from_ml_state() {
    let t = Trellis::new(CodeSpec::rate_half_nu2(), 6).unwrap();
    let mut found = None;
    for seed in 0..1_000_000u64 {
        let (_, y) = sample(&t, -4.0, seed);
        let dens = BranchDensities::new(&t, &y).unwrap();
        let a = tailbiting::tb_rova_with(&t, &dens).unwrap();
        let (s_hat, _, _) = tb_sea_with(&t, &dens, MergeForm::General);
        if s_hat != a.start_state {
            found = Some((seed, a, s_hat, y));
            break;
        }
    }
    let (seed, a, s_hat, y) = found.expect("no instance found");
    assert!(a.word_correct_prob < 0.5, "seed {seed}");
    let o = oracle_posteriors(&t, &y, DEFAULT_CAP_BITS).unwrap();
    assert_eq!(o.map_state, s_hat);
    assert_eq!(o.ml_codeword().start_state, a.start_state);
    let b = tailbiting::tb_sea_rova(&t, &y).unwrap();
    assert_eq!(b.start_state, s_hat);
    assert_ne!(b.codeword, a.codeword);
}

#[test]
fn bcjr_estimate_normalized_and_noiseless_correct() {
    let t = Trellis::new(CodeSpec::rate_third_nu6(), 40).unwrap();
    let (cw, y) = sample(&t, 0.0, 5);
    let p = forward_state_estimate(&t, &BranchDensities::new(&t, &y).unwrap(), &mut OpCounters::default());
    assert!((p.total() - 1.0).abs() < 1e-9);
    let clean = noiseless(&t, &cw, 0.1);
    let p = forward_state_estimate(&t, &BranchDensities::new(&t, &clean).unwrap(), &mut OpCounters::default());
    assert_eq!(p.argmax(), cw.start_state);
    let r = tailbiting::tb_bcjr_rova(&t, &clean).unwrap();
    assert_eq!(r.codeword, cw);
}

#[test]
fn wava_noiseless_and_bounded_by_ml() {
    let t = Trellis::new(CodeSpec::rate_third_nu6(), 32).unwrap();
    let (cw, _) = sample(&t, 0.0, 2);
    let clean = noiseless(&t, &cw, 0.2);
    let out = wava_decode(&t, &BranchDensities::new(&t, &clean).unwrap(), DEFAULT_MAX_ITERS, &mut OpCounters::default()).unwrap();
    assert_eq!(out.codeword, cw);
    assert_eq!(out.iterations, 1);
    assert!(!out.fallback);

    for seed in 0..40 {
        let (_, y) = sample(&t, 0.5, seed);
        let dens = BranchDensities::new(&t, &y).unwrap();
        let w = tailbiting::wava_prc_with(&t, &dens, DEFAULT_MAX_ITERS).unwrap();
        let ml = tailbiting::tb_rova_with(&t, &dens).unwrap();
        assert!((0.0..=1.0).contains(&w.word_correct_prob));
        assert!(w.word_correct_prob <= ml.word_correct_prob * (1.0 + 1e-12));
        assert_eq!(t.trace(&w.codeword).unwrap().len(), 32);
    }
}

#[test]
fn decode_results_respect_state_bound() {
    let t = Trellis::new(CodeSpec::rate_third_nu6(), 16).unwrap();
    for seed in 0..10 {
        let (_, y) = sample(&t, 0.0, seed);
        let dens = BranchDensities::new(&t, &y).unwrap();
        for kind in DecoderKind::ALL {
            let r = kind.decode(&t, &dens).unwrap();
            assert!(r.word_correct_prob >= 0.0);
            assert!(r.word_correct_prob <= r.state_posterior.probs[r.start_state] + 1e-12, "{kind}");
            assert!((r.state_posterior.total() - 1.0).abs() < 1e-9, "{kind}");
            assert_eq!(r.codeword.start_state, r.start_state);
        }
    }
}

#[test]
fn approx_tb_rova_returns_ml_codeword() {
    let t = Trellis::new(CodeSpec::rate_third_nu6(), 24).unwrap();
    for seed in 0..20 {
        let (_, y) = sample(&t, 0.0, seed);
        let dens = BranchDensities::new(&t, &y).unwrap();
        let a = tailbiting::tb_rova_with(&t, &dens).unwrap();
        let b = tailbiting::approx_tb_rova_with(&t, &dens).unwrap();
        assert_eq!(a.codeword, b.codeword);
        assert!((0.0..=1.0 + 1e-12).contains(&b.word_correct_prob));
    }
}

#[test]
fn tb_sea_multiplications_per_segment() {
    for (code, k, nu) in [(CodeSpec::rate_half_nu2(), 1, 2), (CodeSpec::rate_third_nu6(), 1, 6)] {
        let t = Trellis::new(code, 16).unwrap();
        let (_, y) = sample(&t, 1.0, 0);
        let (_, _, ops) = tb_sea_with(&t, &BranchDensities::new(&t, &y).unwrap(), MergeForm::General);
        assert_eq!(ops.multiplications, 16 * (1u64 << (2 * nu + k)));
        assert_eq!(ops.divisions, 16 * (1u64 << (2 * nu)));
    }
}

#[test]
fn decoders_are_deterministic() {
    let t = Trellis::new(CodeSpec::rate_third_nu6(), 16).unwrap();
    let cw = sample(&t, 0.0, 9).0;
    let p = ChannelParams::awgn_ebn0(t.code(), 1.0).unwrap();
    let y1 = transmit(&cw, 3, &p, 77);
    let y2 = transmit(&cw, 3, &p, 77);
    for kind in DecoderKind::ALL {
        let a = kind.decode(&t, &BranchDensities::new(&t, &y1).unwrap()).unwrap();
        let b = kind.decode(&t, &BranchDensities::new(&t, &y2).unwrap()).unwrap();
        assert_eq!(a.codeword, b.codeword);
        assert_eq!(a.word_correct_prob.to_bits(), b.word_correct_prob.to_bits());
    }
}

#[test]
fn decoder_names_round_trip() {
    for kind in DecoderKind::ALL {
        assert_eq!(kind.name().parse::<DecoderKind>().unwrap(), kind);
    }
    assert!("viterbi".parse::<DecoderKind>().is_err());
}
