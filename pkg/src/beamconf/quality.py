"""Sentence-level quality metrics: BLEU-4, ROUGE-L, QA token F1, and a
simplified METEOR (exact then stemmed unigram matching, no synonym stage).

All metrics take token lists and return a value in [0, 1]. tokenize() is the
fixed internal tokenizer so scores are reproducible across harvesters.
"""

from __future__ import annotations

import math
import re
import string
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ._kernels import lcs_len
from ._stemmer import stem

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)
_ARTICLES = frozenset(("a", "an", "the"))

METRIC_IDS = ("bleu", "rouge_l", "f1", "meteor")


@dataclass(frozen=True)
class QualityScore:
    metric: str
    value: float


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, punctuation as standalone tokens."""
    return _TOKEN_RE.findall(text.lower())


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def sentence_bleu(candidate: list[str], reference: list[str]) -> float:
    """BLEU-4, uniform weights, brevity penalty, add-one smoothing on the
    n>=2 precisions. Zero when either side is empty or no unigram matches."""
    if not candidate or not reference:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        cand = _ngram_counts(candidate, n)
        ref = _ngram_counts(reference, n)
        clipped = sum(min(count, ref[gram]) for gram, count in cand.items())
        total = sum(cand.values())
        if n == 1:
            if clipped == 0:
                return 0.0
            precision = clipped / total
        else:
            precision = (clipped + 1) / (total + 1)
        log_sum += 0.25 * math.log(precision)
    c, r = len(candidate), len(reference)
    brevity = 1.0 if c >= r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_sum)


def _encode_pair(a: list[str], b: list[str]) -> tuple[np.ndarray, np.ndarray]:
    vocab: dict[str, int] = {}
    enc_a = np.fromiter(
        (vocab.setdefault(t, len(vocab)) for t in a), dtype=np.int64, count=len(a)
    )
    enc_b = np.fromiter(
        (vocab.setdefault(t, len(vocab)) for t in b), dtype=np.int64, count=len(b)
    )
    return enc_a, enc_b


def rouge_l(candidate: list[str], reference: list[str]) -> float:
    """LCS-based F1: P = lcs/|candidate|, R = lcs/|reference|."""
    if not candidate or not reference:
        return 0.0
    enc_c, enc_r = _encode_pair(candidate, reference)
    m = lcs_len(enc_c, enc_r)
    if m == 0:
        return 0.0
    p = m / len(candidate)
    r = m / len(reference)
    return 2 * p * r / (p + r)


def _normalize_qa(tokens: list[str]) -> list[str]:
    out = []
    for tok in tokens:
        tok = tok.lower().translate(_PUNCT_TABLE)
        if tok and tok not in _ARTICLES:
            out.append(tok)
    return out


def token_f1(candidate: list[str], reference: list[str]) -> float:
    """Bag-of-tokens overlap F1 after QA normalization (lowercase, drop
    punctuation and articles)."""
    cand = _normalize_qa(candidate)
    ref = _normalize_qa(reference)
    if not cand and not ref:
        return 1.0
    if not cand or not ref:
        return 0.0
    common = sum((Counter(cand) & Counter(ref)).values())
    if common == 0:
        return 0.0
    p = common / len(cand)
    r = common / len(ref)
    return 2 * p * r / (p + r)


def _align(candidate: list[str], reference: list[str]) -> list[tuple[int, int]]:
    """Unigram alignment: exact matches first, then stemmed matches on the
    leftovers; each position used at most once."""
    matched_cand = [False] * len(candidate)
    matched_ref = [False] * len(reference)
    alignment: list[tuple[int, int]] = []
    for i, tok in enumerate(candidate):
        for j, ref_tok in enumerate(reference):
            if not matched_ref[j] and ref_tok == tok:
                alignment.append((i, j))
                matched_cand[i] = True
                matched_ref[j] = True
                break
    cand_stems = [stem(t) for t in candidate]
    ref_stems = [stem(t) for t in reference]
    for i, s in enumerate(cand_stems):
        if matched_cand[i]:
            continue
        for j, ref_s in enumerate(ref_stems):
            if not matched_ref[j] and ref_s == s:
                alignment.append((i, j))
                matched_cand[i] = True
                matched_ref[j] = True
                break
    alignment.sort()
    return alignment


def meteor(candidate: list[str], reference: list[str]) -> float:
    """Simplified METEOR: F_mean = 10PR/(R+9P) with a chunk-based
    fragmentation penalty of 0.5*(chunks/matches)^3."""
    if not candidate or not reference:
        return 0.0
    alignment = _align(candidate, reference)
    m = len(alignment)
    if m == 0:
        return 0.0
    p = m / len(candidate)
    r = m / len(reference)
    f_mean = 10 * p * r / (r + 9 * p)
    chunks = 1
    for (i1, j1), (i2, j2) in zip(alignment, alignment[1:]):
        if i2 != i1 + 1 or j2 != j1 + 1:
            chunks += 1
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1.0 - penalty)


_METRICS = {
    "bleu": sentence_bleu,
    "rouge_l": rouge_l,
    "f1": token_f1,
    "meteor": meteor,
}


def quality_of_record(record, metric: str) -> QualityScore:
    """Top beam scored against each reference; the maximum is returned."""
    if metric not in _METRICS:
        raise ValueError(
            f"unknown quality metric {metric!r}; expected one of {METRIC_IDS}"
        )
    fn = _METRICS[metric]
    cand = tokenize(record.beams[0].text)
    value = max(fn(cand, tokenize(ref)) for ref in record.references)
    return QualityScore(metric=metric, value=value)
