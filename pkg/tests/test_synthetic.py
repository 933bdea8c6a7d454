import numpy as np
import pytest

from beamconf.calibration import evaluate, spearman
from beamconf.confidence import MethodConfig, beam_entropy, tail_thinness
from beamconf.records import serialize_record, validate_record
from beamconf.synthetic import (
    ShapeSpec,
    generate_dataset,
    generate_distribution,
    generate_ratio_probe,
    record_from_log_probs,
)

CFG = MethodConfig()


def tail_formula(probs):
    probs = np.asarray(probs, dtype=np.float64)
    probs = probs / probs.sum()
    return float(np.sum(probs * probs))


def test_uniform_noise_free_all_equal():
    lps = generate_distribution(ShapeSpec("uniform", n_beams=100))
    assert np.all(lps == lps[0])


def test_degenerate_mode_mass():
    lps = generate_distribution(ShapeSpec("degenerate", n_beams=100))
    probs = np.exp(lps)
    probs /= probs.sum()
    assert probs[0] >= 0.99


def test_distributions_sorted_non_increasing():
    for archetype in ("uniform", "degenerate", "k_modal_thin_tail", "heavy_tail"):
        spec = ShapeSpec(archetype, n_beams=50, modes=3, noise_scale=0.3, seed=9)
        lps = generate_distribution(spec)
        assert np.all(np.diff(lps) <= 0)


def test_distribution_deterministic():
    spec = ShapeSpec("heavy_tail", n_beams=30, noise_scale=0.5, seed=4)
    assert np.array_equal(generate_distribution(spec), generate_distribution(spec))


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        ShapeSpec("zipfian")
    with pytest.raises(ValueError):
        ShapeSpec("uniform", n_beams=1)
    with pytest.raises(ValueError):
        ShapeSpec("k_modal_thin_tail", n_beams=10, modes=11)
    with pytest.raises(ValueError):
        ShapeSpec("k_modal_thin_tail", mode_mass=1.0)
    with pytest.raises(ValueError):
        ShapeSpec("uniform", noise_scale=-0.1)


def test_k_modal_tail_values_derived_from_formula():
    # equal-split modes: sum of squares = mass^2/m + (1-mass)^2/(N-m)
    n, mass = 100, 0.9
    for m in (1, 3):
        lps = generate_distribution(
            ShapeSpec("k_modal_thin_tail", n_beams=n, modes=m, mode_mass=mass)
        )
        expected = mass**2 / m + (1 - mass) ** 2 / (n - m)
        measured = tail_thinness(record_from_log_probs("k", lps), CFG).value
        assert measured == pytest.approx(expected, rel=1e-9)
    # both well above uniform; m=1 exceeds m=3 by a factor of ~m
    uniform_tail = 1.0 / n
    t1 = 0.9**2 / 1 + 0.1**2 / 99
    t3 = 0.9**2 / 3 + 0.1**2 / 97
    assert t3 > 10 * uniform_tail and t1 > 10 * uniform_tail
    assert t1 / t3 == pytest.approx(3.0, rel=0.01)


def test_figure_ordering_oracle():
    for n in (10, 100):
        for seed in range(50):
            modes = 2 + seed % 4
            tails, entropies = [], []
            for spec in (
                ShapeSpec("uniform", n_beams=n, seed=seed),
                ShapeSpec("k_modal_thin_tail", n_beams=n, modes=modes, seed=seed),
                ShapeSpec("degenerate", n_beams=n, seed=seed),
            ):
                rec = record_from_log_probs("o", generate_distribution(spec))
                tails.append(tail_thinness(rec, CFG).value)
                entropies.append(beam_entropy(rec, CFG).value)
            assert tails[0] < tails[1] < tails[2]
            assert entropies[0] > entropies[1] > entropies[2]


# ---------------------------------------------------------------------------
# generate_dataset

def test_dataset_deterministic():
    a_recs, a_qual = generate_dataset(12, 0.7, seed=5)
    b_recs, b_qual = generate_dataset(12, 0.7, seed=5)
    assert a_qual == b_qual
    assert [serialize_record(r) for r in a_recs] == [serialize_record(r) for r in b_recs]


def test_dataset_records_validate():
    records, _ = generate_dataset(10, 1.0, seed=2, with_dropout=True, with_entropy=True)
    for rec in records:
        validate_record(rec)
        lps = [b.seq_log_prob for b in rec.beams]
        assert lps == sorted(lps, reverse=True)


def test_dataset_coupled_correlates():
    records, qualities = generate_dataset(500, 1.0, seed=3)
    conf = {r.id: tail_thinness(r, CFG).value for r in records}
    assert evaluate(conf, qualities).abs_spearman >= 0.95


def test_dataset_null_uncorrelated():
    from beamconf.confidence import (
        ConfidenceScore,
        score_all,
    )

    records, qualities = generate_dataset(500, 0.0, seed=11)
    per_method: dict[str, dict[str, float]] = {}
    for rec in records:
        for res in score_all(rec):
            if isinstance(res, ConfidenceScore):
                per_method.setdefault(res.method, {})[rec.id] = res.value
    assert per_method  # at least the beam-level methods
    for method, conf in per_method.items():
        rho = evaluate(conf, qualities, method=method).abs_spearman
        assert rho < 0.1, f"{method} leaked correlation {rho}"


def test_dataset_validates_arguments():
    with pytest.raises(ValueError):
        generate_dataset(5, 1.0)
    with pytest.raises(ValueError):
        generate_dataset(10, 1.5)
    with pytest.raises(ValueError):
        generate_dataset(10, 1.0, shape_mix=[])


def test_tail_and_beam_entropy_rank_agreement():
    records, _ = generate_dataset(300, 1.0, seed=8)
    tails = [tail_thinness(r, CFG).value for r in records]
    neg_entropy = [-beam_entropy(r, CFG).value for r in records]
    assert spearman(tails, neg_entropy) >= 0.95


# ---------------------------------------------------------------------------
# generate_ratio_probe

def test_probe_deterministic_and_valid():
    a, qa = generate_ratio_probe(10, 5, n_beams=20, seed=1)
    b, qb = generate_ratio_probe(10, 5, n_beams=20, seed=1)
    assert qa == qb
    assert [serialize_record(r) for r in a] == [serialize_record(r) for r in b]
    for rec in a:
        validate_record(rec)


def test_probe_argument_validation():
    with pytest.raises(ValueError):
        generate_ratio_probe(5, 1)
    with pytest.raises(ValueError):
        generate_ratio_probe(10, 0)
    with pytest.raises(ValueError):
        generate_ratio_probe(10, 100, n_beams=100)
