"""Validation-split grid search: ratio offset k and tail softmax temperature,
each maximizing |Spearman| against quality."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import UndefinedCorrelationError, spearman
from .confidence import DEFAULT_N_BEAMS, MethodConfig
from .records import GenerationRecord

# the six distinct temperatures of the shipped per-dataset defaults
DEFAULT_TEMPERATURE_GRID = (0.001, 0.005, 0.01, 0.05, 0.1, 1.0)


@dataclass(frozen=True)
class TuneResult:
    method: str
    best_config: MethodConfig
    best_abs_spearman: float
    sweep: tuple[tuple[MethodConfig, float], ...]


def _aligned(
    validation: list[GenerationRecord], qualities: dict[str, float]
) -> tuple[list[GenerationRecord], np.ndarray]:
    recs = [r for r in validation if r.id in qualities]
    if len(recs) < 3:
        raise ValueError(
            f"tuning needs >= 3 validation records with quality, have {len(recs)}"
        )
    qual = np.array([qualities[r.id] for r in recs], dtype=np.float64)
    return recs, qual


def tune_ratio(
    validation: list[GenerationRecord],
    qualities: dict[str, float],
    k_max: int,
) -> TuneResult:
    """Sweep k in 1..k_max; ties break toward smaller k."""
    if not validation:
        raise ValueError("validation set is empty")
    min_beams = min(len(r.beams) for r in validation)
    if not 1 <= k_max <= min_beams - 1:
        raise ValueError(
            f"k_max must be in [1, {min_beams - 1}] for this validation set, "
            f"got {k_max}"
        )
    recs, qual = _aligned(validation, qualities)
    lps = np.array(
        [[b.seq_log_prob for b in r.beams[: k_max + 1]] for r in recs],
        dtype=np.float64,
    )

    sweep: list[tuple[MethodConfig, float]] = []
    best: tuple[int, float] | None = None
    for k in range(1, k_max + 1):
        config = MethodConfig(k=k, n_beams=max(DEFAULT_N_BEAMS, k + 1))
        try:
            value = abs(spearman(lps[:, 0] - lps[:, k], qual))
        except UndefinedCorrelationError:
            sweep.append((config, float("nan")))
            continue
        sweep.append((config, value))
        if best is None or value > best[1]:
            best = (k, value)
    if best is None:
        raise UndefinedCorrelationError(
            "every k yields an undefined correlation on this validation set"
        )
    best_k, best_value = best
    return TuneResult(
        method="ratio",
        best_config=MethodConfig(k=best_k, n_beams=max(DEFAULT_N_BEAMS, best_k + 1)),
        best_abs_spearman=best_value,
        sweep=tuple(sweep),
    )


def tune_temperature(
    validation: list[GenerationRecord],
    qualities: dict[str, float],
    grid=DEFAULT_TEMPERATURE_GRID,
) -> TuneResult:
    """Sweep tail-thinness temperatures; ties break toward larger T."""
    grid = tuple(grid)
    if not grid:
        raise ValueError("temperature grid is empty")
    if any(t <= 0 for t in grid):
        raise ValueError("temperatures must be positive")
    recs, qual = _aligned(validation, qualities)
    lp_rows = [
        np.array(
            [b.seq_log_prob for b in r.beams[:DEFAULT_N_BEAMS]], dtype=np.float64
        )
        for r in recs
    ]
    if any(row.size < 2 for row in lp_rows):
        raise ValueError("tail tuning needs >= 2 beams per record")

    sweep: list[tuple[MethodConfig, float]] = []
    best: tuple[float, float] | None = None
    for temp in grid:
        config = MethodConfig(temperature=float(temp))
        tails = np.empty(len(lp_rows))
        for i, row in enumerate(lp_rows):
            z = np.exp(row / temp - (row / temp).max())
            q = z / z.sum()
            tails[i] = q @ q
        try:
            value = abs(spearman(tails, qual))
        except UndefinedCorrelationError:
            sweep.append((config, float("nan")))
            continue
        sweep.append((config, value))
        if best is None or value > best[1] or (value == best[1] and temp > best[0]):
            best = (float(temp), value)
    if best is None:
        raise UndefinedCorrelationError(
            "every temperature yields an undefined correlation on this "
            "validation set"
        )
    best_t, best_value = best
    return TuneResult(
        method="tail",
        best_config=MethodConfig(temperature=best_t),
        best_abs_spearman=best_value,
        sweep=tuple(sweep),
    )
