"""Synthetic record generation: beam distributions with controllable shape
(uniform / degenerate / multi-modal thin tail / heavy tail) and datasets with
controllable confidence-quality coupling. Used as the test oracle for metric
ordering and for end-to-end pipeline runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .records import Beam, DropoutSample, GenerationRecord, TokenInfo

ARCHETYPES = ("uniform", "degenerate", "k_modal_thin_tail", "heavy_tail")
DEGENERATE_MODE_MASS = 0.995


@dataclass(frozen=True)
class ShapeSpec:
    """One beam-probability archetype plus jitter; modes/mode_mass only
    matter for k_modal_thin_tail."""

    archetype: str
    n_beams: int = 100
    modes: int = 1
    mode_mass: float = 0.9
    noise_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.archetype not in ARCHETYPES:
            raise ValueError(
                f"unknown archetype {self.archetype!r}; expected one of {ARCHETYPES}"
            )
        if self.n_beams < 2:
            raise ValueError(f"n_beams must be >= 2, got {self.n_beams}")
        if not 1 <= self.modes <= self.n_beams:
            raise ValueError(
                f"modes must be in [1, n_beams], got {self.modes}"
            )
        if not 0.0 < self.mode_mass < 1.0:
            raise ValueError(f"mode_mass must be in (0, 1), got {self.mode_mass}")
        if self.noise_scale < 0.0:
            raise ValueError("noise_scale must be non-negative")


def _archetype_probs(spec: ShapeSpec) -> np.ndarray:
    n = spec.n_beams
    if spec.archetype == "uniform":
        return np.full(n, 1.0 / n)
    if spec.archetype == "degenerate":
        probs = np.full(n, (1.0 - DEGENERATE_MODE_MASS) / (n - 1))
        probs[0] = DEGENERATE_MODE_MASS
        return probs
    if spec.archetype == "k_modal_thin_tail":
        m = spec.modes
        probs = np.empty(n)
        probs[:m] = spec.mode_mass / m
        if m < n:
            probs[m:] = (1.0 - spec.mode_mass) / (n - m)
        return probs
    # heavy_tail: slow Zipf-like decay
    ranks = np.arange(1, n + 1, dtype=np.float64)
    probs = 1.0 / ranks
    return probs / probs.sum()


def _distribution(spec: ShapeSpec, rng: np.random.Generator) -> np.ndarray:
    lps = np.log(_archetype_probs(spec))
    if spec.noise_scale > 0.0:
        lps = lps + rng.normal(0.0, spec.noise_scale, spec.n_beams)
    return np.sort(lps)[::-1]


def generate_distribution(spec: ShapeSpec) -> np.ndarray:
    """Sequence log-probs realizing the archetype, sorted non-increasing."""
    return _distribution(spec, np.random.default_rng(spec.seed))


def _tokens_for(text: str, seq_log_prob: float) -> list[TokenInfo]:
    words = text.split() or ["<empty>"]
    per = seq_log_prob / len(words)
    return [TokenInfo(token=w, log_prob=per) for w in words]


def record_from_log_probs(
    rec_id: str,
    log_probs,
    task: str = "synthetic",
    reference: str = "reference text",
) -> GenerationRecord:
    """Minimal valid record around a sequence log-prob vector."""
    beams = []
    for i, lp in enumerate(log_probs):
        text = f"candidate {i} of {rec_id}"
        beams.append(
            Beam(text=text, tokens=_tokens_for(text, float(lp)), seq_log_prob=float(lp))
        )
    return GenerationRecord(
        id=rec_id,
        input=f"input for {rec_id}",
        references=[reference],
        beams=beams,
        task=task,
    )


def _alt_dist(rng: np.random.Generator, spread: float) -> list[tuple[str, float]]:
    base = np.array([0.6, 0.3, 0.1])
    jitter = rng.uniform(-0.08, 0.08, 3) * spread
    probs = np.clip(base + jitter, 0.01, None)
    probs = probs / probs.sum()
    order = np.argsort(probs)[::-1]
    return [(f"v{int(i)}", float(probs[i])) for i in order]


def _dropout_sample(
    rng: np.random.Generator,
    cand_words: list[str],
    top_lp: float,
    spread: float,
    sample_idx: int,
    with_entropy: bool,
) -> DropoutSample:
    words = [
        f"d{sample_idx}j{j}" if rng.random() < 0.5 * spread else w
        for j, w in enumerate(cand_words)
    ]
    seq_lp = min(top_lp + rng.normal(0.0, 0.2), -1e-3)
    per = seq_lp / len(words)
    tokens = [
        TokenInfo(
            token=w,
            log_prob=per,
            entropy=(float(rng.uniform(0.05, 0.3) + spread) if with_entropy else None),
            alt_dist=_alt_dist(rng, spread),
        )
        for w in words
    ]
    return DropoutSample(text=" ".join(words), tokens=tokens, seq_log_prob=seq_lp)


def generate_dataset(
    n_records: int,
    coupling: float,
    shape_mix: list[ShapeSpec] | None = None,
    seed: int = 0,
    *,
    task: str = "qa",
    ref_len: int = 40,
    sharpen_range: float = 4.0,
    with_dropout: bool = False,
    with_entropy: bool = False,
) -> tuple[list[GenerationRecord], dict[str, float]]:
    """Records whose latent confidence (distribution sharpness) drives quality.

    Each record draws an archetype from shape_mix and a sharpness factor; at
    coupling=1 quality is a deterministic monotone function of the resulting
    tail mass concentration, at coupling=0 it is independent noise. The top
    beam's text matches the reference on a quality-proportional prefix so
    that text metrics recover the synthesized quality up to quantization.
    """
    if n_records < 10:
        raise ValueError(f"n_records must be >= 10, got {n_records}")
    if not 0.0 <= coupling <= 1.0:
        raise ValueError(f"coupling must be in [0, 1], got {coupling}")
    if shape_mix is None:
        shape_mix = [ShapeSpec("k_modal_thin_tail", modes=1, mode_mass=0.9)]
    if not shape_mix:
        raise ValueError("shape_mix must be non-empty")

    log_range = math.log(sharpen_range)
    ref_words = [f"w{j}" for j in range(ref_len)]
    reference = " ".join(ref_words)

    records: list[GenerationRecord] = []
    qualities: dict[str, float] = {}
    for r in range(n_records):
        rng = np.random.default_rng((seed, r))
        spec = shape_mix[int(rng.integers(len(shape_mix)))]
        base = _distribution(spec, rng)
        tau = math.exp(rng.uniform(-log_range, log_range))
        lps = base / tau

        z = np.exp(lps - lps.max())
        q = z / z.sum()
        latent = float(q @ q)
        # sharpness percentile: same ranking as the latent tail concentration
        # within one archetype family, but uniformly spread over [0, 1]
        sharpness = (log_range - math.log(tau)) / (2.0 * log_range)
        noise = float(rng.uniform())
        quality = coupling * sharpness + (1.0 - coupling) * noise

        n_keep = int(round(quality * ref_len))
        cand_words = ref_words[:n_keep] + [
            f"x{r}y{j}" for j in range(ref_len - n_keep)
        ]
        rec_id = f"synth-{r:05d}"

        beams = []
        top_text = " ".join(cand_words)
        beams.append(
            Beam(
                text=top_text,
                tokens=_tokens_for(top_text, float(lps[0])),
                seq_log_prob=float(lps[0]),
            )
        )
        for i in range(1, spec.n_beams):
            n_tok = int(rng.integers(3, 9))
            text = " ".join(f"t{i}b{j}" for j in range(n_tok))
            beams.append(
                Beam(
                    text=text,
                    tokens=_tokens_for(text, float(lps[i])),
                    seq_log_prob=float(lps[i]),
                )
            )
        if with_entropy:
            spread = 1.0 - latent
            beams[0] = Beam(
                text=beams[0].text,
                tokens=[
                    TokenInfo(t.token, t.log_prob, entropy=float(rng.uniform(0.05, 0.3) + spread))
                    for t in beams[0].tokens
                ],
                seq_log_prob=beams[0].seq_log_prob,
            )

        samples: list[DropoutSample] = []
        if with_dropout:
            spread = 1.0 - latent
            samples = [
                _dropout_sample(rng, cand_words, float(lps[0]), spread, s, with_entropy)
                for s in range(10)
            ]

        records.append(
            GenerationRecord(
                id=rec_id,
                input=f"synthetic input {r}",
                references=[reference],
                beams=beams,
                dropout_samples=samples,
                task=task,
            )
        )
        qualities[rec_id] = quality
    return records, qualities


GAP_SCALE = 0.3


def generate_ratio_probe(
    n_records: int,
    k_star: int,
    n_beams: int = 100,
    noise_scale: float = 0.01,
    seed: int = 0,
) -> tuple[list[GenerationRecord], dict[str, float]]:
    """Records whose quality tracks the log-prob gap between the top beam and
    beam k_star: successive beam gaps are independent draws, so rankings by
    the gap at different offsets decorrelate and the sweep peaks at k_star."""
    if n_records < 10:
        raise ValueError(f"n_records must be >= 10, got {n_records}")
    if not 1 <= k_star <= n_beams - 1:
        raise ValueError(f"k_star must be in [1, {n_beams - 1}], got {k_star}")

    center = GAP_SCALE * k_star
    spread = GAP_SCALE * math.sqrt(k_star)
    records: list[GenerationRecord] = []
    qualities: dict[str, float] = {}
    for r in range(n_records):
        rng = np.random.default_rng((seed, r))
        gaps = rng.exponential(GAP_SCALE, n_beams - 1)
        lp0 = -rng.uniform(0.5, 1.5)
        lps = lp0 - np.concatenate(([0.0], np.cumsum(gaps)))
        signal = float(lps[0] - lps[k_star])
        quality = 1.0 / (1.0 + math.exp(-(signal - center) / spread))
        quality += noise_scale * float(rng.normal())
        quality = min(max(quality, 0.0), 1.0)

        rec_id = f"probe-{r:05d}"
        records.append(record_from_log_probs(rec_id, lps, task="synthetic"))
        qualities[rec_id] = quality
    return records, qualities
