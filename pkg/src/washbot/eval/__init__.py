"""Evaluation harness: batch answer runs, expert-grade aggregation, TAM statistics."""

from .assess import (
    Assessment,
    AssessmentGrid,
    AssessmentTally,
    Grade,
    UnknownExpertOrQuestion,
    default_missing,
    load_assessments_csv,
    parse_grade,
    per_expert_breakdown,
    tally,
)
from .batch import Question, QuestionResult, Run, load_questions, load_run, run_batch, save_run
from .report import Report, render_report
from .tam import (
    CONSTRUCT_ITEMS,
    CONSTRUCT_ORDER,
    ConstantInput,
    ConstructStats,
    DegenerateInput,
    LengthMismatch,
    ScreeningRule,
    TamResponse,
    ZeroTotalVariance,
    construct_stats,
    correlation_significance,
    cronbach_alpha,
    load_tam_csv,
    pearson_r,
    required_sample_size,
    screen_inconsistent,
    stars_for_p,
)

__all__ = [
    "Assessment", "AssessmentGrid", "AssessmentTally", "Grade",
    "UnknownExpertOrQuestion", "default_missing", "load_assessments_csv", "parse_grade",
    "per_expert_breakdown", "tally",
    "Question", "QuestionResult", "Run", "load_questions", "load_run",
    "run_batch", "save_run",
    "Report", "render_report",
    "CONSTRUCT_ITEMS", "CONSTRUCT_ORDER", "ConstantInput", "ConstructStats",
    "DegenerateInput", "LengthMismatch", "ScreeningRule", "TamResponse",
    "ZeroTotalVariance", "construct_stats", "correlation_significance",
    "cronbach_alpha", "load_tam_csv", "pearson_r", "required_sample_size",
    "screen_inconsistent", "stars_for_p",
]
