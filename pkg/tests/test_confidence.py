"""Metric contract tests. Derived expectations were computed with an
independent high-precision (mpmath, 40 digits) evaluation of the stated
formulas and frozen here."""

import math

import numpy as np
import pytest

from beamconf.confidence import (
    METHODS,
    ConfidenceScore,
    DegenerateDistributionError,
    InsufficientBeamsError,
    MethodConfig,
    MissingDataError,
    SkippedScore,
    ate,
    atp,
    beam_entropy,
    dae,
    dsm,
    dvb,
    dvk,
    normalized_beam_dist,
    ratio,
    score_all,
    sum_top_k,
    tail_thinness,
    wtp,
)
from beamconf.quality import meteor, sentence_bleu, tokenize
from beamconf.records import Beam, DropoutSample, GenerationRecord, TokenInfo
from beamconf.synthetic import record_from_log_probs

CFG = MethodConfig()

# softmax([-0.1, -2.3, -2.3, -2.3], T=1), high-precision
Q_TOP = 0.75052003058947289
Q_TAIL = 0.083159989803509035
TAIL_VALUE = 0.58402706802838251
ENTROPY_VALUE = 0.83584487130841849


def beams_record(lps, rec_id="r"):
    return record_from_log_probs(rec_id, lps)


def sample_from_tokens(tokens, text=None):
    seq = sum(t.log_prob for t in tokens)
    return DropoutSample(
        text=text if text is not None else " ".join(t.token for t in tokens),
        tokens=tokens,
        seq_log_prob=seq,
    )


def dropout_record(samples, lps=(-1.0, -2.0), rec_id="d"):
    base = beams_record(lps, rec_id)
    return GenerationRecord(
        id=rec_id,
        input=base.input,
        references=base.references,
        beams=base.beams,
        dropout_samples=list(samples),
        task="qa",
    )


def entropy_sample(entropies, token_lp=-0.5):
    tokens = [
        TokenInfo(token=f"t{i}", log_prob=token_lp, entropy=h)
        for i, h in enumerate(entropies)
    ]
    return sample_from_tokens(tokens)


def text_sample(text, lp=-1.0):
    words = text.split()
    per = lp / len(words)
    return sample_from_tokens(
        [TokenInfo(token=w, log_prob=per) for w in words], text=text
    )


def alt_sample(alt_dists, token_lp=-0.5):
    tokens = [
        TokenInfo(token=f"t{i}", log_prob=token_lp, alt_dist=list(ad))
        for i, ad in enumerate(alt_dists)
    ]
    return sample_from_tokens(tokens)


# ---------------------------------------------------------------------------
# normalized_beam_dist

def test_softmax_uniform():
    q = normalized_beam_dist(beams_record([-1.0] * 4), CFG)
    assert np.allclose(q, 0.25, atol=1e-12)
    assert abs(q.sum() - 1.0) < 1e-9


def test_softmax_derived_values():
    q = normalized_beam_dist(beams_record([-0.1, -2.3, -2.3, -2.3]), CFG)
    assert q[0] == pytest.approx(Q_TOP, abs=1e-12)
    assert np.allclose(q[1:], Q_TAIL, atol=1e-12)


def test_softmax_shift_invariance():
    q1 = normalized_beam_dist(beams_record([-1.0, -2.0]), CFG)
    for shift in (-7.5, 3.25, -100.0):
        q2 = normalized_beam_dist(beams_record([-1.0 + shift, -2.0 + shift]), CFG)
        assert np.allclose(q1, q2, atol=1e-12)


def test_softmax_needs_two_beams():
    with pytest.raises(InsufficientBeamsError):
        normalized_beam_dist(beams_record([-1.0]), CFG)


def test_softmax_respects_n_beams_budget():
    q = normalized_beam_dist(beams_record([-1.0] * 8), MethodConfig(n_beams=4))
    assert q.shape == (4,)


# ---------------------------------------------------------------------------
# ratio

def test_ratio_direct_difference():
    score = ratio(beams_record([-1.0, -2.0, -3.0]), MethodConfig(k=1))
    assert score.value == pytest.approx(1.0)
    assert score.higher_is_confident


def test_ratio_uniform_is_zero():
    for k in (1, 2, 3):
        assert ratio(beams_record([-2.0] * 4), MethodConfig(k=k)).value == 0.0


def test_ratio_shift_invariant():
    base = ratio(beams_record([-1.0, -3.0]), MethodConfig(k=1)).value
    shifted = ratio(beams_record([-11.0, -13.0]), MethodConfig(k=1)).value
    assert shifted == pytest.approx(base, abs=1e-12)


def test_ratio_insufficient_beams():
    with pytest.raises(InsufficientBeamsError):
        ratio(beams_record([-1.0, -2.0]), MethodConfig(k=2))


def test_ratio_nonnegative_on_sorted_beams():
    rng = np.random.default_rng(5)
    for _ in range(50):
        lps = np.sort(rng.uniform(-30, 0, 10))[::-1]
        assert ratio(beams_record(lps), MethodConfig(k=3)).value >= 0.0


# ---------------------------------------------------------------------------
# tail thinness

def test_tail_uniform():
    assert tail_thinness(beams_record([-1.0] * 4), CFG).value == pytest.approx(0.25, abs=1e-12)
    assert tail_thinness(beams_record([-1.0] * 100), CFG).value == pytest.approx(0.01, abs=1e-12)


def test_tail_derived_value():
    value = tail_thinness(beams_record([-0.1, -2.3, -2.3, -2.3]), CFG).value
    assert value == pytest.approx(TAIL_VALUE, abs=1e-12)


def test_tail_degenerate_limit():
    value = tail_thinness(
        beams_record([0.0] + [-5.0] * 99), MethodConfig(temperature=0.01)
    ).value
    assert value == pytest.approx(1.0, abs=1e-6)


def test_tail_bounds():
    rng = np.random.default_rng(6)
    for _ in range(50):
        n = int(rng.integers(2, 50))
        lps = np.sort(rng.uniform(-10, 0, n))[::-1]
        value = tail_thinness(beams_record(lps), CFG).value
        assert 1.0 / n - 1e-12 <= value <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# atp / ate

def test_atp_examples():
    rec = record_from_log_probs("a", [-0.5, -1.0])
    # token probs [1.0, 1.0] -> 1.0
    tokens = [TokenInfo("x", 0.0), TokenInfo("y", 0.0)]
    beam = Beam(text="x y", tokens=tokens, seq_log_prob=0.0)
    one = GenerationRecord("a1", "i", ["r"], [beam, rec.beams[1]])
    assert atp(one).value == pytest.approx(1.0)
    # token probs [0.5, 0.25] -> 0.375
    tokens = [TokenInfo("x", math.log(0.5)), TokenInfo("y", math.log(0.25))]
    beam = Beam(text="x y", tokens=tokens, seq_log_prob=math.log(0.5) + math.log(0.25))
    two = GenerationRecord("a2", "i", ["r"], [beam])
    assert atp(two).value == pytest.approx(0.375)
    # single token 0.9
    tokens = [TokenInfo("x", math.log(0.9))]
    beam = Beam(text="x", tokens=tokens, seq_log_prob=math.log(0.9))
    three = GenerationRecord("a3", "i", ["r"], [beam])
    assert atp(three).value == pytest.approx(0.9)


def test_ate_examples():
    def rec_with_entropies(entropies):
        sample = entropy_sample(entropies)
        beam = Beam(text=sample.text, tokens=sample.tokens, seq_log_prob=sample.seq_log_prob)
        return GenerationRecord("e", "i", ["r"], [beam])

    assert ate(rec_with_entropies([0.0, 0.0, 0.0])).value == 0.0
    assert ate(rec_with_entropies([1.0, 3.0])).value == pytest.approx(2.0)
    score = ate(rec_with_entropies([1.0, 3.0]))
    assert not score.higher_is_confident
    with pytest.raises(MissingDataError):
        ate(beams_record([-1.0, -2.0]))


# ---------------------------------------------------------------------------
# dae

def test_dae_uniform_entropy():
    rec = dropout_record([entropy_sample([0.7, 0.7, 0.7]) for _ in range(10)])
    assert dae(rec).value == pytest.approx(0.7)
    rec0 = dropout_record([entropy_sample([0.0, 0.0]) for _ in range(10)])
    assert dae(rec0).value == 0.0


def test_dae_missing_samples():
    with pytest.raises(MissingDataError):
        dae(beams_record([-1.0, -2.0]))


def test_dae_missing_entropy():
    samples = [entropy_sample([0.5]) for _ in range(9)]
    samples.append(text_sample("no entropy here"))
    with pytest.raises(MissingDataError):
        dae(dropout_record(samples))


# ---------------------------------------------------------------------------
# wtp

def test_wtp_identical_beams():
    # all 10 beams share one mean token log prob ell, so value = -ell
    rec = beams_record([-0.9] * 10)
    ells = {b.seq_log_prob / len(b.tokens) for b in rec.beams}
    assert len(ells) == 1
    assert wtp(rec).value == pytest.approx(-ells.pop())
    assert not wtp(rec).higher_is_confident


def test_wtp_zero_case():
    tokens = [TokenInfo("x", 0.0), TokenInfo("y", 0.0)]
    beams = [Beam(text="x y", tokens=tokens, seq_log_prob=0.0) for _ in range(10)]
    rec = GenerationRecord("w", "i", ["r"], beams)
    assert wtp(rec).value == 0.0


def test_wtp_insufficient_beams():
    with pytest.raises(InsufficientBeamsError):
        wtp(beams_record([-1.0, -2.0]))


def test_wtp_weighted_oracle():
    # two distinct mean-token-log-prob groups among the 10 beams
    beams = []
    for i in range(10):
        lp = -1.0 if i < 5 else -4.0
        tokens = [TokenInfo("x", lp / 2), TokenInfo("y", lp / 2)]
        beams.append(Beam(text="x y", tokens=tokens, seq_log_prob=lp))
    rec = GenerationRecord("w2", "i", ["r"], beams)
    ell = np.array([-0.5] * 5 + [-2.0] * 5)
    pi = np.exp(ell) / np.exp(ell).sum()
    assert wtp(rec).value == pytest.approx(float(-(pi @ ell)))


# ---------------------------------------------------------------------------
# dsm

def test_dsm_identical_samples():
    rec = dropout_record([text_sample("same old text") for _ in range(10)])
    self_sim = meteor(tokenize("same old text"), tokenize("same old text"))
    assert dsm(rec).value == pytest.approx(self_sim)


def test_dsm_disjoint_samples():
    rec = dropout_record([text_sample(f"word{i}a word{i}b") for i in range(10)])
    assert dsm(rec).value == 0.0


def test_dsm_two_group_enumeration():
    text_a, text_b = "alpha beta gamma", "delta epsilon zeta"
    samples = [text_sample(text_a) for _ in range(5)] + [
        text_sample(text_b) for _ in range(5)
    ]
    rec = dropout_record(samples)
    s = meteor(tokenize(text_a), tokenize(text_a))
    m = meteor(tokenize(text_a), tokenize(text_b))
    assert meteor(tokenize(text_b), tokenize(text_a)) == pytest.approx(m)
    assert dsm(rec).value == pytest.approx((40 * s + 50 * m) / 90)


def test_dsm_missing_samples():
    with pytest.raises(MissingDataError):
        dsm(beams_record([-1.0, -2.0]))


# ---------------------------------------------------------------------------
# dvb

def test_dvb_identical_zero():
    rec = dropout_record([text_sample("all the same words here") for _ in range(10)])
    assert dvb(rec).value == pytest.approx(0.0)


def test_dvb_disjoint_is_90():
    rec = dropout_record([text_sample(f"tok{i}x tok{i}y tok{i}z") for i in range(10)])
    assert dvb(rec).value == pytest.approx(90.0)


def test_dvb_mixed_matches_pair_enumeration():
    texts = [f"shared common tok{i % 3}" for i in range(10)]
    rec = dropout_record([text_sample(t) for t in texts])
    toks = [tokenize(t) for t in texts]
    expected = sum(
        (1.0 - sentence_bleu(toks[i], toks[j])) ** 2
        for i in range(10)
        for j in range(10)
    )
    assert dvb(rec).value == pytest.approx(expected)


# ---------------------------------------------------------------------------
# dvk

def test_dvk_identical_distributions_zero():
    ad = [("a", 0.6), ("b", 0.3), ("c", 0.1)]
    rec = dropout_record([alt_sample([ad, ad]) for _ in range(10)])
    assert dvk(rec).value == pytest.approx(0.0, abs=1e-12)


def test_dvk_two_group_hand_computed():
    # 5 samples with p, 5 with q over the same two-token support;
    # value = 5 KL(p||m) + 5 KL(q||m), m = (p+q)/2. mpmath: 1.325054509170478
    p = [("a", 0.7), ("b", 0.3)]
    q = [("b", 0.8), ("a", 0.2)]
    samples = [alt_sample([p]) for _ in range(5)] + [alt_sample([q]) for _ in range(5)]
    rec = dropout_record(samples)
    assert dvk(rec).value == pytest.approx(1.325054509170478, abs=1e-12)


def test_dvk_nonnegative():
    rng = np.random.default_rng(7)
    for _ in range(20):
        samples = []
        for _ in range(10):
            probs = rng.dirichlet([1.0, 1.0, 1.0])
            order = np.argsort(probs)[::-1]
            ad = [(f"v{i}", float(probs[i])) for i in order]
            samples.append(alt_sample([ad]))
        assert dvk(dropout_record(samples)).value >= -1e-12


def test_dvk_truncates_to_min_length_and_unions_support():
    shared = [("a", 0.5), ("b", 0.5)]
    only_a = [("a", 1.0)]
    long = alt_sample([shared, shared])
    short = alt_sample([only_a])
    samples = [long] * 5 + [short] * 5
    value = dvk(dropout_record(samples)).value
    assert value > 0.0  # position 0 mixes {a,b} with {a}


def test_dvk_missing_alt_dist():
    samples = [alt_sample([[("a", 1.0)]]) for _ in range(9)]
    samples.append(text_sample("plain"))
    with pytest.raises(MissingDataError):
        dvk(dropout_record(samples))


def test_dvk_empty_support_is_degenerate():
    samples = [alt_sample([[]]) for _ in range(10)]
    with pytest.raises(DegenerateDistributionError):
        dvk(dropout_record(samples))


# ---------------------------------------------------------------------------
# beam entropy

def test_beam_entropy_uniform_max():
    for n in (4, 100):
        value = beam_entropy(beams_record([-1.0] * n), CFG).value
        assert value == pytest.approx(math.log(n), abs=1e-9)


def test_beam_entropy_degenerate_near_zero():
    value = beam_entropy(
        beams_record([0.0] + [-40.0] * 9), CFG
    ).value
    assert value == pytest.approx(0.0, abs=1e-12)


def test_beam_entropy_derived_value():
    value = beam_entropy(beams_record([-0.1, -2.3, -2.3, -2.3]), CFG).value
    assert value == pytest.approx(ENTROPY_VALUE, abs=1e-12)


def test_beam_entropy_bounds():
    rng = np.random.default_rng(8)
    for _ in range(50):
        n = int(rng.integers(2, 30))
        lps = np.sort(rng.uniform(-20, 0, n))[::-1]
        value = beam_entropy(beams_record(lps), CFG).value
        assert -1e-12 <= value <= math.log(n) + 1e-12


# ---------------------------------------------------------------------------
# sum_top_k

def test_sum_top_k_examples():
    tokens = [TokenInfo("x", 0.0)]
    beam = Beam(text="x", tokens=tokens, seq_log_prob=0.0)
    rec = GenerationRecord("s", "i", ["r"], [beam])
    assert sum_top_k(rec, MethodConfig(k=1)).value == pytest.approx(1.0)

    rec2 = beams_record([math.log(0.5), math.log(0.25)])
    assert sum_top_k(rec2, MethodConfig(k=2)).value == pytest.approx(0.75)


def test_sum_top_k_monotone_in_k():
    rec = beams_record(np.linspace(-1, -6, 12))
    values = [sum_top_k(rec, MethodConfig(k=k)).value for k in range(1, 12)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_sum_top_k_insufficient():
    with pytest.raises(InsufficientBeamsError):
        sum_top_k(beams_record([-1.0, -2.0]), MethodConfig(k=5))


# ---------------------------------------------------------------------------
# score_all

def test_score_all_beams_only():
    rec = beams_record(np.linspace(-1, -4, 12))
    results = {r.method: r for r in score_all(rec)}
    computed = {m for m, r in results.items() if isinstance(r, ConfidenceScore)}
    skipped = {m for m, r in results.items() if isinstance(r, SkippedScore)}
    assert computed == {"ratio", "tail", "atp", "wtp", "beam_entropy", "sum_top_k"}
    assert skipped == {"ate", "dae", "dsm", "dvb", "dvk"}


def test_score_all_single_beam():
    tokens = [TokenInfo("x", -0.5)]
    beam = Beam(text="x", tokens=tokens, seq_log_prob=-0.5)
    rec = GenerationRecord("sb", "i", ["r"], [beam])
    results = {r.method: r for r in score_all(rec)}
    computed = {m for m, r in results.items() if isinstance(r, ConfidenceScore)}
    assert computed == {"atp"}


def test_score_all_fully_populated():
    ad = [("a", 0.6), ("b", 0.3)]
    samples = [
        alt_sample([ad, ad]) for _ in range(10)
    ]
    samples = [
        DropoutSample(
            text=s.text,
            tokens=[
                TokenInfo(t.token, t.log_prob, entropy=0.4, alt_dist=t.alt_dist)
                for t in s.tokens
            ],
            seq_log_prob=s.seq_log_prob,
        )
        for s in samples
    ]
    base = beams_record(np.linspace(-1, -4, 12))
    top = base.beams[0]
    top = Beam(
        text=top.text,
        tokens=[TokenInfo(t.token, t.log_prob, entropy=0.2) for t in top.tokens],
        seq_log_prob=top.seq_log_prob,
    )
    rec = GenerationRecord(
        "full", "i", ["r"], [top] + base.beams[1:], dropout_samples=samples
    )
    results = score_all(rec)
    assert all(isinstance(r, ConfidenceScore) for r in results)
    assert {r.method for r in results} == set(METHODS)


def test_determinism():
    rec = beams_record(np.linspace(-0.5, -9, 20))
    first = [
        (r.method, r.value) for r in score_all(rec) if isinstance(r, ConfidenceScore)
    ]
    second = [
        (r.method, r.value) for r in score_all(rec) if isinstance(r, ConfidenceScore)
    ]
    assert first == second


# ---------------------------------------------------------------------------
# config validation

def test_method_config_invariants():
    with pytest.raises(ValueError):
        MethodConfig(k=0)
    with pytest.raises(ValueError):
        MethodConfig(k=100, n_beams=100)
    with pytest.raises(ValueError):
        MethodConfig(temperature=0.0)
    with pytest.raises(ValueError):
        MethodConfig(n_beams=1)


def test_confidence_score_must_be_finite():
    with pytest.raises(ValueError):
        ConfidenceScore("ratio", float("inf"), True)
