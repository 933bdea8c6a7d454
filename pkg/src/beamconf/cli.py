"""Command-line pipeline: score | quality | correlate | tune | rank | synth.

Stages communicate through files keyed by record id, so any producer that
emits the record schema can feed the pipeline. Exit codes: 0 success,
3 parse error, 4 validation/config error, 5 statistics error, 1 other I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor

from .calibration import (
    DEFAULT_BOOTSTRAP_B,
    CalibrationError,
    build_report,
    rank_table,
    render_table,
    report_from_obj,
    report_to_obj,
)
from .confidence import (
    DEFAULT_N_BEAMS,
    METHODS,
    ConfidenceScore,
    MethodConfig,
    score_all,
)
from .quality import METRIC_IDS, quality_of_record
from .records import (
    GenerationRecord,
    ParseStats,
    RecordParseError,
    RecordValidationError,
    load_dataset,
    serialize_record,
    split_dataset,
)
from .synthetic import ShapeSpec, generate_dataset, generate_ratio_probe
from .tuning import DEFAULT_TEMPERATURE_GRID, tune_ratio, tune_temperature

logger = logging.getLogger(__name__)

EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_STATS = 5

TASK_METRICS = {"translation": "bleu", "qa": "f1", "summarization": "rouge_l"}

# per-task-family (k, temperature) defaults: the most common tuned pair of
# each family in DATASET_TUNED_PARAMS
TASK_DEFAULTS = {
    "translation": (99, 1.0),
    "qa": (1, 0.05),
    "summarization": (95, 1.0),
}

# shipped tuned parameters per benchmark dataset/model pair, usable via the
# config file's method_configs section
DATASET_TUNED_PARAMS = {
    ("flores_fil", "bart"): (99, 1.0),
    ("flores_fil", "flan_t5"): (99, 1.0),
    ("wmt_de_en", "bart"): (99, 1.0),
    ("wmt_de_en", "flan_t5"): (99, 1.0),
    ("wmt_ru_en", "bart"): (79, 1.0),
    ("wmt_ru_en", "flan_t5"): (99, 1.0),
    ("hotpotqa", "bart"): (1, 0.01),
    ("hotpotqa", "flan_t5"): (1, 0.05),
    ("squad", "bart"): (1, 0.05),
    ("squad", "flan_t5"): (4, 0.001),
    ("debatesumm", "bart"): (95, 1.0),
    ("debatesumm", "flan_t5"): (85, 1.0),
    ("reddit", "bart"): (2, 0.005),
    ("reddit", "flan_t5"): (99, 0.01),
    ("cnn", "bart"): (3, 0.001),
    ("cnn", "flan_t5"): (77, 0.001),
    ("xsum", "bart"): (4, 0.1),
    ("xsum", "flan_t5"): (98, 0.1),
}


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return cfg


def _setting(args_value, cfg: dict, key: str, default):
    """Flag > config file > default."""
    if args_value is not None:
        return args_value
    if key in cfg:
        return cfg[key]
    return default


def _resolve_methods(args_methods: str | None, cfg: dict) -> list[str]:
    raw = _setting(args_methods, cfg, "methods", None)
    if raw is None:
        return list(METHODS)
    if isinstance(raw, str):
        raw = [m.strip() for m in raw.split(",") if m.strip()]
    bad = [m for m in raw if m not in METHODS]
    if bad:
        raise ValueError(f"unknown method ids {bad}; valid: {list(METHODS)}")
    return raw


def _method_configs(
    task: str, args, cfg: dict
) -> dict[str, MethodConfig]:
    """Per-record configs: flags > config file > task-family defaults."""
    default_k, default_t = TASK_DEFAULTS.get(task, (1, 1.0))
    k = _setting(args.k, cfg, "k", default_k)
    temperature = _setting(args.temperature, cfg, "temperature", default_t)
    n_beams = _setting(args.n_beams, cfg, "n_beams", DEFAULT_N_BEAMS)
    if args.k is None and "k" not in cfg:
        k = min(k, n_beams - 1)  # clamp family default to the beam budget

    configs = {
        "ratio": MethodConfig(k=k, temperature=temperature, n_beams=n_beams),
        "tail": MethodConfig(temperature=temperature, n_beams=n_beams),
        "beam_entropy": MethodConfig(temperature=temperature, n_beams=n_beams),
        "sum_top_k": MethodConfig(k=min(10, n_beams - 1), n_beams=n_beams),
    }
    for method, overrides in cfg.get("method_configs", {}).items():
        base = configs.get(method, MethodConfig(n_beams=n_beams))
        configs[method] = MethodConfig(
            k=overrides.get("k", base.k),
            temperature=overrides.get("temperature", base.temperature),
            n_beams=overrides.get("n_beams", base.n_beams),
        )
    return configs


def _write_lines(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False))
            fh.write("\n")


def _score_one(payload) -> dict:
    record, configs, methods = payload
    scores: dict[str, dict] = {}
    for res in score_all(record, configs):
        if res.method not in methods:
            continue
        if isinstance(res, ConfidenceScore):
            scores[res.method] = {
                "value": res.value,
                "higher_is_confident": res.higher_is_confident,
            }
        else:
            scores[res.method] = {"skipped": res.reason}
    return {"id": record.id, "scores": scores}


def cmd_score(args) -> int:
    cfg = _load_config(args.config)
    methods = _resolve_methods(args.methods, cfg)
    stats = ParseStats()
    records = load_dataset(args.input, stats)
    if stats.resorted_beams:
        logger.warning("re-sorted beams on %d record(s)", stats.resorted_beams)

    payloads = [(r, _method_configs(r.task, args, cfg), methods) for r in records]
    workers = int(_setting(args.workers, cfg, "workers", 1))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_score_one, payloads, chunksize=16))
    else:
        rows = [_score_one(p) for p in payloads]

    _write_lines(args.output, rows)
    skip_counts: dict[str, int] = {}
    for row in rows:
        for method, entry in row["scores"].items():
            if "skipped" in entry:
                skip_counts[method] = skip_counts.get(method, 0) + 1
    for method, count in sorted(skip_counts.items()):
        logger.info("method %s skipped on %d/%d records", method, count, len(rows))
    print(f"scored {len(rows)} records -> {args.output}")
    return 0


def _quality_one(payload) -> dict:
    record, metric = payload
    qs = quality_of_record(record, metric)
    return {"id": record.id, "metric": qs.metric, "value": qs.value}


def cmd_quality(args) -> int:
    cfg = _load_config(args.config)
    records = load_dataset(args.input)
    override = _setting(args.metric, cfg, "metric", None)
    payloads = []
    for record in records:
        metric = override or TASK_METRICS.get(record.task)
        if metric is None:
            raise ValueError(
                f"record {record.id!r}: no quality metric for task tag "
                f"{record.task!r}; known tags: {sorted(TASK_METRICS)} "
                f"(or pass --metric)"
            )
        payloads.append((record, metric))
    workers = int(_setting(args.workers, cfg, "workers", 1))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_quality_one, payloads, chunksize=16))
    else:
        rows = [_quality_one(p) for p in payloads]
    _write_lines(args.output, rows)
    print(f"scored quality for {len(rows)} records -> {args.output}")
    return 0


def _read_scores(path: str) -> tuple[dict[str, dict[str, float]], dict[str, bool]]:
    per_method: dict[str, dict[str, float]] = {}
    orientations: dict[str, bool] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                obj = json.loads(line)
                rec_id = obj["id"]
                scores = obj["scores"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise RecordParseError(
                    f"{path} line {line_no}: bad score line: {exc}", line_no
                ) from exc
            for method, entry in scores.items():
                if "skipped" in entry:
                    continue
                per_method.setdefault(method, {})[rec_id] = float(entry["value"])
                orientations[method] = bool(entry["higher_is_confident"])
    return per_method, orientations


def _read_quality(path: str) -> dict[str, float]:
    qualities: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                obj = json.loads(line)
                qualities[obj["id"]] = float(obj["value"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise RecordParseError(
                    f"{path} line {line_no}: bad quality line: {exc}", line_no
                ) from exc
    return qualities


def _score_quality_ids_must_match(path_s, score_ids, path_q, quality_ids):
    if score_ids != quality_ids:
        odd = sorted(score_ids ^ quality_ids)[:5]
        raise ValueError(
            f"record ids of {path_s} and {path_q} do not match "
            f"(e.g. {odd}); regenerate one side"
        )


def cmd_correlate(args) -> int:
    cfg = _load_config(args.config)
    per_method, orientations = _read_scores(args.scores)
    qualities = _read_quality(args.quality)
    score_ids = set()
    for scores in per_method.values():
        score_ids |= set(scores)
    _score_quality_ids_must_match(args.scores, score_ids, args.quality, set(qualities))

    methods = _resolve_methods(args.methods, cfg)
    selected = {m: per_method[m] for m in methods if m in per_method}
    if not selected:
        raise CalibrationError(
            f"none of the requested methods {methods} have scores in {args.scores}"
        )
    report = build_report(
        dataset=_setting(args.dataset, cfg, "dataset", "dataset"),
        model=_setting(args.model, cfg, "model", "model"),
        method_scores=selected,
        orientations=orientations,
        qualities=qualities,
        n_resamples=int(_setting(args.bootstrap_b, cfg, "bootstrap_b", DEFAULT_BOOTSTRAP_B)),
        seed=int(_setting(args.seed, cfg, "seed", 0)),
    )
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(report_to_obj(report), fh, indent=2)
        fh.write("\n")
    table = render_table([report])
    with open(args.output + ".txt", "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    print(table)
    return 0


def cmd_tune(args) -> int:
    cfg = _load_config(args.config)
    records = load_dataset(args.input)
    qualities = _read_quality(args.quality)
    val_size = _setting(args.val_size, cfg, "val_size", None)
    if val_size is not None:
        seed = int(_setting(args.seed, cfg, "seed", 0))
        validation, _ = split_dataset(records, int(val_size), seed)
    else:
        validation = records

    methods = _resolve_methods(args.methods, cfg)
    out: dict[str, dict] = {}
    sweep_lines: list[str] = []
    if "ratio" in methods:
        min_beams = min(len(r.beams) for r in validation)
        k_max = int(_setting(args.k, cfg, "k", min(100, min_beams - 1)))
        result = tune_ratio(validation, qualities, k_max)
        out["ratio"] = {
            "method": "ratio",
            "best": {"k": result.best_config.k},
            "best_abs_spearman": result.best_abs_spearman,
            "sweep": [[c.k, v] for c, v in result.sweep],
        }
        sweep_lines += [f"ratio\t{c.k}\t{v}" for c, v in result.sweep]
    if "tail" in methods:
        grid = cfg.get("temperature_grid", DEFAULT_TEMPERATURE_GRID)
        result = tune_temperature(validation, qualities, grid)
        out["tail"] = {
            "method": "tail",
            "best": {"temperature": result.best_config.temperature},
            "best_abs_spearman": result.best_abs_spearman,
            "sweep": [[c.temperature, v] for c, v in result.sweep],
        }
        sweep_lines += [f"tail\t{c.temperature}\t{v}" for c, v in result.sweep]
    if not out:
        raise ValueError("tune supports methods ratio and tail; none requested")

    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    with open(args.output + ".sweep.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(sweep_lines) + "\n")
    for method, entry in out.items():
        print(f"tuned {method}: best {entry['best']} "
              f"(abs_spearman {entry['best_abs_spearman']:.4f})")
    return 0


def cmd_rank(args) -> int:
    reports = []
    for path in args.reports:
        with open(path, encoding="utf-8") as fh:
            reports.append(report_from_obj(json.load(fh)))
    summary = rank_table(reports)
    obj = {
        "methods": list(summary.methods),
        "average_rank": summary.average,
        "median_rank": summary.median,
        "per_report": [
            {"dataset": r.dataset, "model": r.model, "ranks": ranks}
            for r, ranks in zip(reports, summary.per_report)
        ],
    }
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
    table = render_table(reports, summary)
    with open(args.output + ".txt", "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    print(table)
    return 0


def cmd_synth(args) -> int:
    cfg = _load_config(args.config)
    n_records = int(_setting(args.n_records, cfg, "n_records", 100))
    seed = int(_setting(args.seed, cfg, "seed", 0))
    mode = _setting(args.mode, cfg, "mode", "coupled")

    if mode == "ratio_probe":
        records, qualities = generate_ratio_probe(
            n_records,
            k_star=int(_setting(args.k, cfg, "k_star", 1)),
            n_beams=int(_setting(args.n_beams, cfg, "n_beams", DEFAULT_N_BEAMS)),
            noise_scale=float(cfg.get("noise_scale", 0.01)),
            seed=seed,
        )
    elif mode == "coupled":
        shape_mix = None
        if "shape_mix" in cfg:
            shape_mix = [ShapeSpec(**entry) for entry in cfg["shape_mix"]]
        records, qualities = generate_dataset(
            n_records,
            coupling=float(_setting(args.coupling, cfg, "coupling", 1.0)),
            shape_mix=shape_mix,
            seed=seed,
            task=cfg.get("task", "qa"),
            ref_len=int(cfg.get("ref_len", 40)),
            sharpen_range=float(cfg.get("sharpen_range", 4.0)),
            with_dropout=bool(cfg.get("with_dropout", False)),
            with_entropy=bool(cfg.get("with_entropy", False)),
        )
    else:
        raise ValueError(f"unknown synth mode {mode!r}; use coupled or ratio_probe")

    with open(args.output, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(serialize_record(record))
            fh.write("\n")
    quality_path = args.quality_output or args.output + ".quality.jsonl"
    _write_lines(
        quality_path,
        [
            {"id": rec_id, "metric": "synthetic", "value": value}
            for rec_id, value in qualities.items()
        ],
    )
    print(f"wrote {len(records)} records -> {args.output}; quality -> {quality_path}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file mirroring the flags")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamconf",
        description="Confidence scoring and calibration evaluation for "
        "beam-search generation outputs.",
        epilog="exit codes: 0 ok, 3 parse error, 4 validation error, "
        "5 statistics error, 1 other failure",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="compute confidence scores per record")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--methods", help="comma-separated method ids")
    p.add_argument("--k", type=int, default=None, help="ratio offset k")
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--n-beams", type=int, default=None, dest="n_beams")
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("quality", help="score the top beam against references")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--metric", choices=METRIC_IDS, default=None,
                   help="override task-based metric routing")
    _add_common(p)
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("correlate", help="Spearman + bootstrap report")
    p.add_argument("--scores", required=True)
    p.add_argument("--quality", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--methods")
    p.add_argument("--dataset", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--bootstrap-b", type=int, default=None, dest="bootstrap_b")
    _add_common(p)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("tune", help="grid-search k and temperature on a split")
    p.add_argument("--input", required=True)
    p.add_argument("--quality", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--methods", default="ratio,tail")
    p.add_argument("--k", type=int, default=None, help="max k to sweep")
    p.add_argument("--val-size", type=int, default=None, dest="val_size")
    _add_common(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("rank", help="cross-dataset rank summary from reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--output", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("synth", help="generate synthetic record + quality files")
    p.add_argument("--output", required=True)
    p.add_argument("--quality-output", default=None, dest="quality_output")
    p.add_argument("--n-records", type=int, default=None, dest="n_records")
    p.add_argument("--coupling", type=float, default=None)
    p.add_argument("--mode", choices=("coupled", "ratio_probe"), default=None)
    p.add_argument("--k", type=int, default=None, help="k_star for ratio_probe")
    p.add_argument("--n-beams", type=int, default=None, dest="n_beams")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RecordParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except RecordValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CalibrationError as exc:
        print(f"statistics error: {exc}", file=sys.stderr)
        return EXIT_STATS
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
