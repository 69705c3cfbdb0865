"""Expert assessment grades and their aggregation.

Grades are tallied, never averaged: the scale is ordinal, so the report
works with per-grade counts and proportions only.
"""

from __future__ import annotations

import csv
import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence


class Grade(enum.Enum):
    PERFECT = "perfect"
    SUFFICIENT = "sufficient"
    NOT_SUFFICIENT = "not_sufficient"
    WRONG = "wrong"
    I_DONT_KNOW = "i_dont_know"


GRADE_LABELS: dict[Grade, str] = {
    Grade.PERFECT: "Perfect",
    Grade.SUFFICIENT: "Sufficient",
    Grade.NOT_SUFFICIENT: "Not Sufficient",
    Grade.WRONG: "Wrong",
    Grade.I_DONT_KNOW: "I don't know",
}

_NORM_RE = re.compile(r"[^a-z]+")


def _norm_label(label: str) -> str:
    return _NORM_RE.sub(" ", label.lower()).strip()


_LABEL_TO_GRADE = {_norm_label(label): grade for grade, label in GRADE_LABELS.items()}
_LABEL_TO_GRADE.update({_norm_label(grade.value): grade for grade in Grade})


def parse_grade(label: str) -> Grade:
    """Map a scale label to a Grade, case-insensitively."""
    grade = _LABEL_TO_GRADE.get(_norm_label(label))
    if grade is None:
        expected = ", ".join(GRADE_LABELS.values())
        raise ValueError(f"unknown grade label {label!r}; expected one of: {expected}")
    return grade


class UnknownExpertOrQuestion(KeyError):
    pass


@dataclass(frozen=True)
class Assessment:
    question_id: str
    expert_id: str
    grade: Grade


@dataclass(frozen=True)
class AssessmentGrid:
    """A complete experts x questions grid of grades."""

    experts: tuple[str, ...]
    questions: tuple[str, ...]
    cells: Mapping[tuple[str, str], Grade]
    defaults_filled: int

    def grade(self, expert_id: str, question_id: str) -> Grade:
        return self.cells[(expert_id, question_id)]


def default_missing(assessments: Iterable[Assessment], experts: Sequence[str],
                    questions: Sequence[str]) -> AssessmentGrid:
    """Complete the grid, filling absent (expert, question) cells with I-don't-know."""
    expert_set = set(experts)
    question_set = set(questions)
    cells: dict[tuple[str, str], Grade] = {}
    for assessment in assessments:
        if assessment.expert_id not in expert_set:
            raise UnknownExpertOrQuestion(f"unknown expert {assessment.expert_id!r}")
        if assessment.question_id not in question_set:
            raise UnknownExpertOrQuestion(f"unknown question {assessment.question_id!r}")
        # Duplicate rows for one cell: the last one wins (see docs/formats.md).
        cells[(assessment.expert_id, assessment.question_id)] = assessment.grade

    defaults = 0
    for expert in experts:
        for question in questions:
            if (expert, question) not in cells:
                cells[(expert, question)] = Grade.I_DONT_KNOW
                defaults += 1
    return AssessmentGrid(experts=tuple(experts), questions=tuple(questions),
                          cells=cells, defaults_filled=defaults)


@dataclass(frozen=True)
class AssessmentTally:
    counts: Mapping[Grade, int]
    total: int
    proportions: Mapping[Grade, float]

    @property
    def perfect_or_sufficient_count(self) -> int:
        return self.counts[Grade.PERFECT] + self.counts[Grade.SUFFICIENT]

    @property
    def perfect_or_sufficient_share(self) -> float:
        return self.perfect_or_sufficient_count / self.total


def tally(grid: AssessmentGrid) -> AssessmentTally:
    """Count how often each grade was selected across the whole grid."""
    counts = {grade: 0 for grade in Grade}
    for grade in grid.cells.values():
        counts[grade] += 1
    total = len(grid.experts) * len(grid.questions)
    proportions = {grade: counts[grade] / total for grade in Grade}
    return AssessmentTally(counts=counts, total=total, proportions=proportions)


def per_expert_breakdown(grid: AssessmentGrid) -> dict[str, dict[Grade, int]]:
    """Per-expert grade counts; lets outlier raters stand out in the report."""
    breakdown = {expert: {grade: 0 for grade in Grade} for expert in grid.experts}
    for (expert, _question), grade in grid.cells.items():
        breakdown[expert][grade] += 1
    return breakdown


def share_percent(share: float) -> str:
    """Integer-rounded percentage string, e.g. 0.8602 -> '86%'."""
    return f"{round(share * 100):d}%"


def load_assessments_csv(path: str | Path) -> list[Assessment]:
    """Read assessment rows from a CSV with columns question_id, expert_id, grade."""
    assessments: list[Assessment] = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"question_id", "expert_id", "grade"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(required)}, got {reader.fieldnames}")
        for row in reader:
            assessments.append(Assessment(
                question_id=row["question_id"].strip(),
                expert_id=row["expert_id"].strip(),
                grade=parse_grade(row["grade"]),
            ))
    return assessments
