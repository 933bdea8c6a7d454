"""Confidence scoring and calibration evaluation for beam-search generation."""

from .calibration import (
    CalibrationReport,
    EvalResult,
    MethodOutcome,
    RankSummary,
    average_ranks,
    build_report,
    evaluate,
    paired_bootstrap,
    rank_table,
    render_table,
    spearman,
)
from .confidence import (
    METHODS,
    ORIENTATION,
    ConfidenceScore,
    MethodConfig,
    SkippedScore,
    atp,
    ate,
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
from .quality import (
    QualityScore,
    meteor,
    quality_of_record,
    rouge_l,
    sentence_bleu,
    token_f1,
    tokenize,
)
from .records import (
    Beam,
    DropoutSample,
    GenerationRecord,
    ParseStats,
    RecordParseError,
    RecordValidationError,
    TokenInfo,
    load_dataset,
    parse_record,
    serialize_record,
    split_dataset,
    validate_record,
)
from .synthetic import ShapeSpec, generate_dataset, generate_distribution, generate_ratio_probe
from .tuning import TuneResult, tune_ratio, tune_temperature

__version__ = "0.1.0"
