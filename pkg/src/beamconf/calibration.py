"""Calibration evaluation: |Spearman| between confidence and quality,
paired-bootstrap significance against the next-best method, and
cross-dataset rank summaries with a plain-text table renderer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels

logger = logging.getLogger(__name__)

DEFAULT_BOOTSTRAP_B = 10_000
MIN_BOOTSTRAP_B = 1_000
BOOTSTRAP_MAX_RETRIES = 10

STAR_SOLID = "★"  # alpha = 0.05
STAR_HOLLOW = "☆"  # alpha = 0.10


class CalibrationError(ValueError):
    pass


class UndefinedCorrelationError(CalibrationError):
    """A correlation input was constant, so ranks carry no information."""


class AlignmentError(CalibrationError):
    """Record-id sets of paired inputs do not match."""


def average_ranks(values) -> np.ndarray:
    """Ranks 1..n, ties getting the mean of their positional ranks."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("average_ranks expects a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("average_ranks requires finite values")
    return kernels.rank_average(arr)


def spearman(x, y) -> float:
    """Pearson correlation of the tie-averaged rank vectors."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or xa.shape != ya.shape:
        raise ValueError("spearman expects two 1-d sequences of equal length")
    if xa.size < 3:
        raise ValueError(f"spearman needs length >= 3, got {xa.size}")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise ValueError("spearman requires finite values")
    if xa.min() == xa.max() or ya.min() == ya.max():
        raise UndefinedCorrelationError(
            "spearman undefined on a constant input list"
        )
    return float(kernels.pearson(kernels.rank_average(xa), kernels.rank_average(ya)))


@dataclass(frozen=True)
class EvalResult:
    method: str
    abs_spearman: float
    spearman: float
    n_samples: int
    orientation_consistent: bool


def evaluate(
    confidences: dict[str, float],
    qualities: dict[str, float],
    higher_is_confident: bool = True,
    method: str = "",
) -> EvalResult:
    """|Spearman| between one method's scores and quality, aligned by record
    id; records missing on either side are excluded pairwise."""
    ids = sorted(set(confidences) & set(qualities))
    if len(ids) < 3:
        raise ValueError(
            f"evaluate needs >= 3 aligned records, have {len(ids)}"
        )
    conf = [confidences[i] for i in ids]
    qual = [qualities[i] for i in ids]
    rho = spearman(conf, qual)
    consistent = rho == 0.0 or (rho > 0.0) == higher_is_confident
    if not consistent:
        logger.warning(
            "method %s: correlation sign %.3f contradicts its orientation "
            "(higher_is_confident=%s)",
            method or "?",
            rho,
            higher_is_confident,
        )
    return EvalResult(
        method=method,
        abs_spearman=abs(rho),
        spearman=rho,
        n_samples=len(ids),
        orientation_consistent=consistent,
    )


def _resample_indices(seed: int, resample: int, n: int, retry: int = 0) -> np.ndarray:
    # per-resample stream keyed on (seed, resample[, retry]): parallel and
    # serial evaluation orders cannot change the draws
    key = (seed, resample) if retry == 0 else (seed, resample, retry)
    return np.random.default_rng(key).integers(0, n, size=n, dtype=np.int64)


def _spearman_pair(a_s, b_s, q_s) -> tuple[float, float] | None:
    for v in (a_s, b_s, q_s):
        if v.min() == v.max():
            return None
    rq = kernels.rank_average(q_s)
    rho_a = kernels.pearson(kernels.rank_average(a_s), rq)
    rho_b = kernels.pearson(kernels.rank_average(b_s), rq)
    return float(rho_a), float(rho_b)


def paired_bootstrap(
    confidences_a: dict[str, float],
    confidences_b: dict[str, float],
    qualities: dict[str, float],
    n_resamples: int = DEFAULT_BOOTSTRAP_B,
    seed: int = 0,
) -> float:
    """One-sided paired bootstrap p-value for |rho_A| > |rho_B|.

    Draws n_resamples index vectors with replacement; each resample where
    either correlation is undefined is redrawn up to a bounded number of
    times and counted against A if still undefined. p uses the +1/(B+1)
    correction, so identical inputs give exactly 1.0.
    """
    ids_a, ids_b, ids_q = set(confidences_a), set(confidences_b), set(qualities)
    if not ids_a == ids_b == ids_q:
        odd = (ids_a ^ ids_b) | (ids_a ^ ids_q)
        raise AlignmentError(
            f"paired_bootstrap inputs disagree on record ids, e.g. "
            f"{sorted(odd)[:5]}"
        )
    if n_resamples < MIN_BOOTSTRAP_B:
        raise ValueError(
            f"n_resamples must be >= {MIN_BOOTSTRAP_B}, got {n_resamples}"
        )
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ids = sorted(ids_a)
    n = len(ids)
    if n < 3:
        raise ValueError(f"paired_bootstrap needs >= 3 records, have {n}")

    a = np.array([confidences_a[i] for i in ids], dtype=np.float64)
    b = np.array([confidences_b[i] for i in ids], dtype=np.float64)
    q = np.array([qualities[i] for i in ids], dtype=np.float64)

    idx = np.empty((n_resamples, n), dtype=np.int64)
    for r in range(n_resamples):
        idx[r] = _resample_indices(seed, r, n)
    rho_a, rho_b, ok = kernels.bootstrap_rhos(a, b, q, idx)

    deltas = np.abs(rho_a) - np.abs(rho_b)
    le_count = int(np.count_nonzero(ok & (deltas <= 0.0)))
    for r in np.flatnonzero(~ok):
        delta = None
        for retry in range(1, BOOTSTRAP_MAX_RETRIES + 1):
            rows = _resample_indices(seed, int(r), n, retry)
            pair = _spearman_pair(a[rows], b[rows], q[rows])
            if pair is not None:
                delta = abs(pair[0]) - abs(pair[1])
                break
        if delta is None or delta <= 0.0:
            le_count += 1
    return (le_count + 1) / (n_resamples + 1)


# ---------------------------------------------------------------------------
# reports and rank tables


@dataclass(frozen=True)
class MethodOutcome:
    abs_spearman: float
    spearman: float
    n_samples: int


@dataclass
class CalibrationReport:
    dataset: str
    model: str
    methods: dict[str, MethodOutcome]
    significance: dict[tuple[str, str], float] = field(default_factory=dict)
    stars: dict[str, str] = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class RankSummary:
    methods: tuple[str, ...]
    average: dict[str, float]
    median: dict[str, float]
    per_report: tuple[dict[str, float], ...]


def build_report(
    dataset: str,
    model: str,
    method_scores: dict[str, dict[str, float]],
    orientations: dict[str, bool],
    qualities: dict[str, float],
    n_resamples: int = DEFAULT_BOOTSTRAP_B,
    seed: int = 0,
) -> CalibrationReport:
    """Evaluate every method, then bootstrap the best against the next best
    and attach the Table-style star for the winner."""
    outcomes: dict[str, MethodOutcome] = {}
    skipped: dict[str, str] = {}
    for method, scores in method_scores.items():
        try:
            res = evaluate(
                scores, qualities, orientations.get(method, True), method
            )
        except (UndefinedCorrelationError, ValueError) as exc:
            skipped[method] = str(exc)
            logger.warning("dataset %s: method %s skipped: %s", dataset, method, exc)
            continue
        outcomes[method] = MethodOutcome(
            abs_spearman=res.abs_spearman,
            spearman=res.spearman,
            n_samples=res.n_samples,
        )

    report = CalibrationReport(
        dataset=dataset, model=model, methods=outcomes, skipped=skipped
    )
    ordered = sorted(outcomes, key=lambda m: -outcomes[m].abs_spearman)
    if len(ordered) >= 2:
        best, runner_up = ordered[0], ordered[1]
        common = (
            set(method_scores[best])
            & set(method_scores[runner_up])
            & set(qualities)
        )
        if len(common) >= 3:
            p = paired_bootstrap(
                {i: method_scores[best][i] for i in common},
                {i: method_scores[runner_up][i] for i in common},
                {i: qualities[i] for i in common},
                n_resamples=n_resamples,
                seed=seed,
            )
            report.significance[(best, runner_up)] = p
            if p < 0.05:
                report.stars[best] = STAR_SOLID
            elif p < 0.10:
                report.stars[best] = STAR_HOLLOW
    return report


def _consistent_methods(reports: list[CalibrationReport]) -> list[str]:
    if not reports:
        raise CalibrationError("no reports given")
    first = set(reports[0].methods)
    for rep in reports[1:]:
        if set(rep.methods) != first:
            missing = first ^ set(rep.methods)
            raise CalibrationError(
                f"reports disagree on method sets "
                f"({rep.dataset}/{rep.model} differs on {sorted(missing)})"
            )
    # stable order: first report's insertion order
    return list(reports[0].methods)


def rank_table(reports: list[CalibrationReport]) -> RankSummary:
    """Per dataset-model pair, rank methods by |Spearman| descending (ties
    averaged); summarize as average and median rank per method."""
    methods = _consistent_methods(reports)
    per_report: list[dict[str, float]] = []
    for rep in reports:
        values = np.array(
            [rep.methods[m].abs_spearman for m in methods], dtype=np.float64
        )
        ranks = kernels.rank_average(-values)  # descending: best gets rank 1
        per_report.append({m: float(r) for m, r in zip(methods, ranks)})
    average = {
        m: float(np.mean([ranks[m] for ranks in per_report])) for m in methods
    }
    median = {
        m: float(np.median([ranks[m] for ranks in per_report])) for m in methods
    }
    return RankSummary(
        methods=tuple(methods),
        average=average,
        median=median,
        per_report=tuple(per_report),
    )


def render_table(
    reports: list[CalibrationReport], summary: RankSummary | None = None
) -> str:
    """Plain-text table: one row per method, one column per dataset-model
    pair, plus Avg and Med rank columns. Stars mark a column's best method
    when it beat the next best (hollow p<0.10, solid p<0.05)."""
    methods = _consistent_methods(reports)
    if summary is None:
        summary = rank_table(reports)
    headers = ["method"] + [f"{r.dataset}/{r.model}" for r in reports] + ["Avg", "Med"]
    rows = []
    for m in methods:
        cells = [m]
        for rep in reports:
            star = rep.stars.get(m, "")
            cells.append(f"{star}{rep.methods[m].abs_spearman:.3f}")
        cells.append(f"{summary.average[m]:.1f}")
        cells.append(f"{summary.median[m]:.1f}")
        rows.append(cells)
    widths = [
        max(len(headers[c]), *(len(row[c]) for row in rows))
        for c in range(len(headers))
    ]
    lines = [
        "  ".join(h.rjust(w) if c else h.ljust(w) for c, (h, w) in enumerate(zip(headers, widths)))
    ]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append(
            "  ".join(
                cell.rjust(w) if c else cell.ljust(w)
                for c, (cell, w) in enumerate(zip(row, widths))
            )
        )
    lines.append("")
    lines.append(
        f"{STAR_HOLLOW} p<0.10, {STAR_SOLID} p<0.05 vs next-best method "
        f"(paired bootstrap)"
    )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# JSON (de)serialization of reports, shared by the CLI commands


def report_to_obj(report: CalibrationReport) -> dict:
    return {
        "dataset": report.dataset,
        "model": report.model,
        "methods": {
            m: {
                "abs_spearman": o.abs_spearman,
                "spearman": o.spearman,
                "n_samples": o.n_samples,
            }
            for m, o in report.methods.items()
        },
        "significance": {
            f"{a}|{b}": p for (a, b), p in report.significance.items()
        },
        "stars": dict(report.stars),
        "skipped": dict(report.skipped),
    }


def report_from_obj(obj: dict) -> CalibrationReport:
    methods = {
        m: MethodOutcome(
            abs_spearman=v["abs_spearman"],
            spearman=v["spearman"],
            n_samples=v["n_samples"],
        )
        for m, v in obj["methods"].items()
    }
    significance = {}
    for key, p in obj.get("significance", {}).items():
        a, _, b = key.partition("|")
        significance[(a, b)] = p
    return CalibrationReport(
        dataset=obj["dataset"],
        model=obj["model"],
        methods=methods,
        significance=significance,
        stars=dict(obj.get("stars", {})),
        skipped=dict(obj.get("skipped", {})),
    )
