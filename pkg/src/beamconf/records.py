"""Generation-record data model plus its line-oriented JSON serialization.

A record file holds one JSON object per line (UTF-8). Lines starting with
``#`` are metadata headers written by harvesters and are skipped. Schema::

    {"id": str, "input": str, "references": [str, ...], "task": str,
     "beams": [{"text": str, "seq_log_prob": float,
                "tokens": [{"token": str, "log_prob": float,
                            "entropy"?: float,
                            "alt_dist"?: [[str, float], ...]}, ...]}, ...],
     "dropout_samples"?: [<same shape as beams>, ...]}

All log-probabilities and entropies are natural-log (nats).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

# numerical tolerances for validation
LOG_PROB_TOL = 1e-6
SEQ_SUM_TOL = 1e-4
ALT_DIST_SUM_TOL = 1e-6


class RecordParseError(ValueError):
    """Malformed line: bad JSON or a missing/mistyped schema field."""

    def __init__(self, message: str, line_no: int = 0):
        super().__init__(message)
        self.line_no = line_no


class RecordValidationError(ValueError):
    """Well-formed record whose values violate a data-model invariant."""

    def __init__(self, message: str, record_id: str = "", field_name: str = ""):
        super().__init__(message)
        self.record_id = record_id
        self.field_name = field_name


@dataclass(frozen=True)
class TokenInfo:
    token: str
    log_prob: float
    entropy: float | None = None
    alt_dist: list[tuple[str, float]] | None = None


@dataclass(frozen=True)
class Beam:
    text: str
    tokens: list[TokenInfo]
    seq_log_prob: float


class DropoutSample(Beam):
    """A dropout-activated decode; same shape and invariants as a Beam."""


@dataclass(frozen=True)
class GenerationRecord:
    id: str
    input: str
    references: list[str]
    beams: list[Beam]
    dropout_samples: list[DropoutSample] = field(default_factory=list)
    task: str = ""


@dataclass
class ParseStats:
    """Counters accumulated while parsing; resorted_beams counts records
    whose beams arrived out of order and were re-sorted."""

    records: int = 0
    resorted_beams: int = 0


def _validate_token(tok: TokenInfo, record_id: str, where: str) -> None:
    if not tok.log_prob <= LOG_PROB_TOL:
        raise RecordValidationError(
            f"record {record_id!r}: {where} log_prob {tok.log_prob} exceeds "
            f"tolerance {LOG_PROB_TOL}",
            record_id=record_id,
            field_name="log_prob",
        )
    if tok.entropy is not None and not tok.entropy >= 0.0:
        raise RecordValidationError(
            f"record {record_id!r}: {where} entropy {tok.entropy} is negative",
            record_id=record_id,
            field_name="entropy",
        )
    if tok.alt_dist is not None:
        total = 0.0
        prev = None
        for alt_token, prob in tok.alt_dist:
            if not 0.0 < prob <= 1.0:
                raise RecordValidationError(
                    f"record {record_id!r}: {where} alt_dist probability {prob} "
                    f"for token {alt_token!r} outside (0, 1]",
                    record_id=record_id,
                    field_name="alt_dist",
                )
            if prev is not None and prob > prev:
                raise RecordValidationError(
                    f"record {record_id!r}: {where} alt_dist not sorted descending",
                    record_id=record_id,
                    field_name="alt_dist",
                )
            prev = prob
            total += prob
        if total > 1.0 + ALT_DIST_SUM_TOL:
            raise RecordValidationError(
                f"record {record_id!r}: {where} alt_dist sums to {total} > 1",
                record_id=record_id,
                field_name="alt_dist",
            )


def _validate_beam(beam: Beam, record_id: str, where: str) -> None:
    if not beam.tokens:
        raise RecordValidationError(
            f"record {record_id!r}: {where} has no tokens",
            record_id=record_id,
            field_name="tokens",
        )
    if not beam.seq_log_prob <= LOG_PROB_TOL:
        raise RecordValidationError(
            f"record {record_id!r}: {where} seq_log_prob {beam.seq_log_prob} "
            f"exceeds tolerance {LOG_PROB_TOL}",
            record_id=record_id,
            field_name="seq_log_prob",
        )
    for i, tok in enumerate(beam.tokens):
        _validate_token(tok, record_id, f"{where} token {i}")
    token_sum = sum(t.log_prob for t in beam.tokens)
    if abs(token_sum - beam.seq_log_prob) > SEQ_SUM_TOL:
        raise RecordValidationError(
            f"record {record_id!r}: {where} seq_log_prob {beam.seq_log_prob} "
            f"differs from token sum {token_sum} by more than {SEQ_SUM_TOL}",
            record_id=record_id,
            field_name="seq_log_prob",
        )


def validate_record(record: GenerationRecord) -> None:
    """Raise RecordValidationError on any invariant violation.

    Does not check beam ordering; parse_record handles that with a re-sort.
    """
    if not record.id:
        raise RecordValidationError("record has empty id", field_name="id")
    if not record.references:
        raise RecordValidationError(
            f"record {record.id!r}: references is empty",
            record_id=record.id,
            field_name="references",
        )
    if not record.beams:
        raise RecordValidationError(
            f"record {record.id!r}: beams is empty",
            record_id=record.id,
            field_name="beams",
        )
    for i, beam in enumerate(record.beams):
        _validate_beam(beam, record.id, f"beam {i}")
    if record.dropout_samples and len(record.dropout_samples) != 10:
        raise RecordValidationError(
            f"record {record.id!r}: dropout_samples has "
            f"{len(record.dropout_samples)} entries, expected 0 or 10",
            record_id=record.id,
            field_name="dropout_samples",
        )
    for i, sample in enumerate(record.dropout_samples):
        _validate_beam(sample, record.id, f"dropout_sample {i}")


def _token_from_obj(obj: dict, line_no: int) -> TokenInfo:
    try:
        token = obj["token"]
        log_prob = obj["log_prob"]
    except (KeyError, TypeError) as exc:
        raise RecordParseError(
            f"line {line_no}: token object missing field {exc}", line_no
        ) from exc
    if not isinstance(token, str) or not isinstance(log_prob, (int, float)):
        raise RecordParseError(
            f"line {line_no}: token fields have wrong types", line_no
        )
    entropy = obj.get("entropy")
    if entropy is not None and not isinstance(entropy, (int, float)):
        raise RecordParseError(f"line {line_no}: entropy must be a number", line_no)
    alt_raw = obj.get("alt_dist")
    alt_dist = None
    if alt_raw is not None:
        if not isinstance(alt_raw, list):
            raise RecordParseError(f"line {line_no}: alt_dist must be a list", line_no)
        alt_dist = []
        for pair in alt_raw:
            if (
                not isinstance(pair, (list, tuple))
                or len(pair) != 2
                or not isinstance(pair[0], str)
                or not isinstance(pair[1], (int, float))
            ):
                raise RecordParseError(
                    f"line {line_no}: alt_dist entries must be [token, prob] pairs",
                    line_no,
                )
            alt_dist.append((pair[0], float(pair[1])))
    return TokenInfo(
        token=token,
        log_prob=float(log_prob),
        entropy=None if entropy is None else float(entropy),
        alt_dist=alt_dist,
    )


def _beam_from_obj(obj: dict, line_no: int, cls: type = Beam) -> Beam:
    try:
        text = obj["text"]
        seq_log_prob = obj["seq_log_prob"]
        tokens = obj["tokens"]
    except (KeyError, TypeError) as exc:
        raise RecordParseError(
            f"line {line_no}: beam object missing field {exc}", line_no
        ) from exc
    if (
        not isinstance(text, str)
        or not isinstance(seq_log_prob, (int, float))
        or not isinstance(tokens, list)
    ):
        raise RecordParseError(f"line {line_no}: beam fields have wrong types", line_no)
    return cls(
        text=text,
        tokens=[_token_from_obj(t, line_no) for t in tokens],
        seq_log_prob=float(seq_log_prob),
    )


def parse_record(
    line: str, line_no: int = 0, stats: ParseStats | None = None
) -> GenerationRecord:
    """Parse and validate one serialized record.

    Beams that arrive out of order are re-sorted (non-increasing by
    seq_log_prob) and counted in stats.resorted_beams rather than rejected.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordParseError(f"line {line_no}: invalid JSON: {exc}", line_no) from exc
    if not isinstance(obj, dict):
        raise RecordParseError(f"line {line_no}: record must be an object", line_no)
    try:
        rec_id = obj["id"]
        rec_input = obj["input"]
        references = obj["references"]
        beams_raw = obj["beams"]
    except KeyError as exc:
        raise RecordParseError(
            f"line {line_no}: record missing field {exc}", line_no
        ) from exc
    task = obj.get("task", "")
    if (
        not isinstance(rec_id, str)
        or not isinstance(rec_input, str)
        or not isinstance(references, list)
        or not isinstance(beams_raw, list)
        or not isinstance(task, str)
        or not all(isinstance(r, str) for r in references)
    ):
        raise RecordParseError(f"line {line_no}: record fields have wrong types", line_no)

    beams = [_beam_from_obj(b, line_no) for b in beams_raw]
    dropout_raw = obj.get("dropout_samples") or []
    if not isinstance(dropout_raw, list):
        raise RecordParseError(
            f"line {line_no}: dropout_samples must be a list", line_no
        )
    samples = [_beam_from_obj(s, line_no, DropoutSample) for s in dropout_raw]

    lps = [b.seq_log_prob for b in beams]
    if any(lps[i] < lps[i + 1] for i in range(len(lps) - 1)):
        beams = sorted(beams, key=lambda b: -b.seq_log_prob)
        if stats is not None:
            stats.resorted_beams += 1

    record = GenerationRecord(
        id=rec_id,
        input=rec_input,
        references=references,
        beams=beams,
        dropout_samples=samples,
        task=task,
    )
    validate_record(record)
    if stats is not None:
        stats.records += 1
    return record


def _token_to_obj(tok: TokenInfo) -> dict:
    obj: dict = {"token": tok.token, "log_prob": tok.log_prob}
    if tok.entropy is not None:
        obj["entropy"] = tok.entropy
    if tok.alt_dist is not None:
        obj["alt_dist"] = [[t, p] for t, p in tok.alt_dist]
    return obj


def _beam_to_obj(beam: Beam) -> dict:
    return {
        "text": beam.text,
        "seq_log_prob": beam.seq_log_prob,
        "tokens": [_token_to_obj(t) for t in beam.tokens],
    }


def serialize_record(record: GenerationRecord) -> str:
    """One-line JSON form; parse_record(serialize_record(r)) == r."""
    obj = {
        "id": record.id,
        "input": record.input,
        "references": record.references,
        "task": record.task,
        "beams": [_beam_to_obj(b) for b in record.beams],
    }
    if record.dropout_samples:
        obj["dropout_samples"] = [_beam_to_obj(s) for s in record.dropout_samples]
    return json.dumps(obj, ensure_ascii=False)


def load_dataset(path: str, stats: ParseStats | None = None) -> list[GenerationRecord]:
    """Load all records from a record file; ids must be unique."""
    records: list[GenerationRecord] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            record = parse_record(stripped, line_no, stats)
            if record.id in seen:
                raise RecordValidationError(
                    f"duplicate record id {record.id!r} on lines "
                    f"{seen[record.id]} and {line_no}",
                    record_id=record.id,
                    field_name="id",
                )
            seen[record.id] = line_no
            records.append(record)
    if not records:
        raise RecordParseError(f"no records found in {path}", line_no=0)
    return records


def split_dataset(
    records: list[GenerationRecord], val_size: int, seed: int
) -> tuple[list[GenerationRecord], list[GenerationRecord]]:
    """Seeded shuffle, then first val_size records to validation, rest to test."""
    if not 0 < val_size < len(records):
        raise ValueError(
            f"val_size must be in (0, {len(records)}), got {val_size}"
        )
    order = np.random.default_rng(seed).permutation(len(records))
    validation = [records[i] for i in order[:val_size]]
    test = [records[i] for i in order[val_size:]]
    return validation, test
