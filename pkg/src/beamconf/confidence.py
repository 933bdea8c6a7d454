"""Confidence metrics over a GenerationRecord.

Eleven methods: the ratio and tail-thinness metrics plus nine baselines.
All are pure functions of (record, config); orientation says whether larger
values mean more confidence. Sequence-level metrics read the beams' log
probabilities; dropout-based baselines read the 10 dropout samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quality import meteor, sentence_bleu, tokenize
from .records import GenerationRecord

DEFAULT_N_BEAMS = 100
WTP_BEAMS = 10
SUM_TOP_K_DEFAULT = 10

METHODS = (
    "ratio",
    "tail",
    "atp",
    "ate",
    "dae",
    "wtp",
    "dsm",
    "dvb",
    "dvk",
    "beam_entropy",
    "sum_top_k",
)

# True: larger value = more confident. False: entropy/variance-like.
ORIENTATION = {
    "ratio": True,
    "tail": True,
    "atp": True,
    "ate": False,
    "dae": False,
    "wtp": False,
    "dsm": True,
    "dvb": False,
    "dvk": False,
    "beam_entropy": False,
    "sum_top_k": True,
}


class ScoringError(ValueError):
    """Base for per-record scoring failures; score_all downgrades these to skips."""


class InsufficientBeamsError(ScoringError):
    pass


class MissingDataError(ScoringError):
    pass


class DegenerateDistributionError(ScoringError):
    pass


@dataclass(frozen=True)
class MethodConfig:
    """Tunable knobs: ratio offset k, softmax temperature, beam budget N."""

    k: int = 1
    temperature: float = 1.0
    n_beams: int = DEFAULT_N_BEAMS

    def __post_init__(self):
        if self.n_beams < 2:
            raise ValueError(f"n_beams must be >= 2, got {self.n_beams}")
        if not 1 <= self.k <= self.n_beams - 1:
            raise ValueError(
                f"k must be in [1, n_beams-1] = [1, {self.n_beams - 1}], got {self.k}"
            )
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")


@dataclass(frozen=True)
class ConfidenceScore:
    method: str
    value: float
    higher_is_confident: bool

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"{self.method}: non-finite score {self.value}")


@dataclass(frozen=True)
class SkippedScore:
    method: str
    reason: str


def default_configs() -> dict[str, MethodConfig]:
    """Per-method defaults; sum_top_k sums 10 beams to mirror WTP."""
    configs = {m: MethodConfig() for m in METHODS}
    configs["sum_top_k"] = MethodConfig(k=SUM_TOP_K_DEFAULT)
    return configs


def _seq_log_probs(record: GenerationRecord, n_beams: int) -> np.ndarray:
    return np.array(
        [b.seq_log_prob for b in record.beams[:n_beams]], dtype=np.float64
    )


def normalized_beam_dist(
    record: GenerationRecord, config: MethodConfig
) -> np.ndarray:
    """Softmax of seq log-probs / temperature over the first min(N, available)
    beams, computed with max-subtraction."""
    lps = _seq_log_probs(record, config.n_beams)
    if lps.size < 2:
        raise InsufficientBeamsError(
            f"record {record.id!r}: need >= 2 beams, have {lps.size}"
        )
    z = lps / config.temperature
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def ratio(record: GenerationRecord, config: MethodConfig) -> ConfidenceScore:
    """Log-probability gap between the top beam and the beam k places further
    down (log of the top/offset probability ratio)."""
    if len(record.beams) < config.k + 1:
        raise InsufficientBeamsError(
            f"record {record.id!r}: ratio with k={config.k} needs "
            f"{config.k + 1} beams, have {len(record.beams)}"
        )
    value = record.beams[0].seq_log_prob - record.beams[config.k].seq_log_prob
    return ConfidenceScore("ratio", value, ORIENTATION["ratio"])


def tail_thinness(record: GenerationRecord, config: MethodConfig) -> ConfidenceScore:
    """Sum of squared softmax-normalized sequence probabilities; in [1/N, 1]."""
    q = normalized_beam_dist(record, config)
    return ConfidenceScore("tail", float(q @ q), ORIENTATION["tail"])


def atp(record: GenerationRecord) -> ConfidenceScore:
    """Arithmetic mean of the top beam's token probabilities."""
    top = record.beams[0]
    value = float(np.mean([math.exp(t.log_prob) for t in top.tokens]))
    return ConfidenceScore("atp", value, ORIENTATION["atp"])


def ate(record: GenerationRecord) -> ConfidenceScore:
    """Mean token entropy of the top beam."""
    top = record.beams[0]
    entropies = [t.entropy for t in top.tokens]
    if any(e is None for e in entropies):
        raise MissingDataError(
            f"record {record.id!r}: ate requires entropy on every top-beam token"
        )
    return ConfidenceScore("ate", float(np.mean(entropies)), ORIENTATION["ate"])


def _dropout_samples(record: GenerationRecord, method: str):
    if len(record.dropout_samples) != 10:
        raise MissingDataError(
            f"record {record.id!r}: {method} requires exactly 10 dropout "
            f"samples, have {len(record.dropout_samples)}"
        )
    return record.dropout_samples


def dae(record: GenerationRecord) -> ConfidenceScore:
    """Mean over 10 dropout samples of their mean token entropy."""
    samples = _dropout_samples(record, "dae")
    means = []
    for i, sample in enumerate(samples):
        entropies = [t.entropy for t in sample.tokens]
        if any(e is None for e in entropies):
            raise MissingDataError(
                f"record {record.id!r}: dae requires entropy on every token "
                f"of dropout sample {i}"
            )
        means.append(float(np.mean(entropies)))
    return ConfidenceScore("dae", float(np.mean(means)), ORIENTATION["dae"])


def wtp(record: GenerationRecord) -> ConfidenceScore:
    """Softmax-weighted average of the top-10 beams' mean token log
    probabilities, negated (uncertainty score)."""
    if len(record.beams) < WTP_BEAMS:
        raise InsufficientBeamsError(
            f"record {record.id!r}: wtp needs {WTP_BEAMS} beams, "
            f"have {len(record.beams)}"
        )
    ell = np.array(
        [b.seq_log_prob / len(b.tokens) for b in record.beams[:WTP_BEAMS]],
        dtype=np.float64,
    )
    z = ell - ell.max()
    pi = np.exp(z)
    pi /= pi.sum()
    return ConfidenceScore("wtp", float(-(pi @ ell)), ORIENTATION["wtp"])


def dsm(record: GenerationRecord) -> ConfidenceScore:
    """Mean METEOR similarity over the 90 ordered pairs of distinct dropout
    samples."""
    samples = _dropout_samples(record, "dsm")
    toks = [tokenize(s.text) for s in samples]
    total = 0.0
    for i in range(10):
        for j in range(10):
            if i != j:
                total += meteor(toks[i], toks[j])
    return ConfidenceScore("dsm", total / 90.0, ORIENTATION["dsm"])


def dvb(record: GenerationRecord) -> ConfidenceScore:
    """Sum over all 100 ordered dropout-sample pairs of (1 - BLEU)^2."""
    samples = _dropout_samples(record, "dvb")
    toks = [tokenize(s.text) for s in samples]
    total = 0.0
    for i in range(10):
        for j in range(10):
            total += (1.0 - sentence_bleu(toks[i], toks[j])) ** 2
    return ConfidenceScore("dvb", total, ORIENTATION["dvb"])


def dvk(record: GenerationRecord) -> ConfidenceScore:
    """Summed KL divergence of each dropout sample's per-position token
    distribution from the pointwise mean distribution.

    Positions are truncated to the shortest sample; each stored top-V
    distribution is restricted to the union of supports and renormalized.
    """
    samples = _dropout_samples(record, "dvk")
    min_len = min(len(s.tokens) for s in samples)
    total = 0.0
    for t in range(min_len):
        alts = []
        for i, sample in enumerate(samples):
            alt = sample.tokens[t].alt_dist
            if alt is None:
                raise MissingDataError(
                    f"record {record.id!r}: dvk requires alt_dist on every "
                    f"token (missing on sample {i}, position {t})"
                )
            alts.append(alt)
        support: list[str] = []
        seen = set()
        for alt in alts:
            for token, _ in alt:
                if token not in seen:
                    seen.add(token)
                    support.append(token)
        if not support:
            raise DegenerateDistributionError(
                f"record {record.id!r}: empty alt_dist support union at "
                f"position {t}"
            )
        index = {token: v for v, token in enumerate(support)}
        dist = np.zeros((10, len(support)), dtype=np.float64)
        for i, alt in enumerate(alts):
            for token, prob in alt:
                dist[i, index[token]] = prob
        row_sums = dist.sum(axis=1)
        if np.any(row_sums == 0.0):
            empty = int(np.flatnonzero(row_sums == 0.0)[0])
            raise DegenerateDistributionError(
                f"record {record.id!r}: dropout sample {empty} has an empty "
                f"alt_dist at position {t}"
            )
        dist /= row_sums[:, None]
        mean = dist.mean(axis=0)
        # mean > 0 wherever any row > 0, so the log is safe on those terms
        ratio_ = np.where(dist > 0.0, dist / mean, 1.0)
        total += float(np.sum(dist * np.log(ratio_)))
    return ConfidenceScore("dvk", total, ORIENTATION["dvk"])


def beam_entropy(record: GenerationRecord, config: MethodConfig) -> ConfidenceScore:
    """Shannon entropy of the softmax-normalized beam distribution; in
    [0, ln N]."""
    q = normalized_beam_dist(record, config)
    terms = np.where(q > 0.0, q * np.log(np.where(q > 0.0, q, 1.0)), 0.0)
    return ConfidenceScore("beam_entropy", float(-terms.sum()), ORIENTATION["beam_entropy"])


def sum_top_k(record: GenerationRecord, config: MethodConfig) -> ConfidenceScore:
    """Sum of the top-k sequence probabilities."""
    if len(record.beams) < config.k:
        raise InsufficientBeamsError(
            f"record {record.id!r}: sum_top_k with k={config.k} needs "
            f"{config.k} beams, have {len(record.beams)}"
        )
    value = float(
        sum(math.exp(b.seq_log_prob) for b in record.beams[: config.k])
    )
    return ConfidenceScore("sum_top_k", value, ORIENTATION["sum_top_k"])


def score_all(
    record: GenerationRecord, configs: dict[str, MethodConfig] | None = None
) -> list[ConfidenceScore | SkippedScore]:
    """Score every method the record carries data for; the rest are returned
    as SkippedScore with the reason."""
    cfg = default_configs()
    if configs:
        cfg.update(configs)
    runners = {
        "ratio": lambda: ratio(record, cfg["ratio"]),
        "tail": lambda: tail_thinness(record, cfg["tail"]),
        "atp": lambda: atp(record),
        "ate": lambda: ate(record),
        "dae": lambda: dae(record),
        "wtp": lambda: wtp(record),
        "dsm": lambda: dsm(record),
        "dvb": lambda: dvb(record),
        "dvk": lambda: dvk(record),
        "beam_entropy": lambda: beam_entropy(record, cfg["beam_entropy"]),
        "sum_top_k": lambda: sum_top_k(record, cfg["sum_top_k"]),
    }
    results: list[ConfidenceScore | SkippedScore] = []
    for method in METHODS:
        try:
            results.append(runners[method]())
        except ScoringError as exc:
            results.append(SkippedScore(method, str(exc)))
        except ValueError as exc:
            results.append(SkippedScore(method, f"scoring failed: {exc}"))
    return results
