"""Render evaluation results as one JSON document plus one markdown page.

Sections are independent: whatever inputs are missing are simply omitted,
so a grades-only or TAM-only report is valid.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..service import LatencyStats
from .assess import Grade, GRADE_LABELS, AssessmentGrid, AssessmentTally, share_percent
from .batch import Run
from .tam import CONSTRUCT_TITLES, ConstructStats, required_sample_size


@dataclass(frozen=True)
class Report:
    report_id: str
    created_at: float
    json_doc: dict
    markdown: str


def render_report(run: Run | None = None, tally: AssessmentTally | None = None,
                  breakdown: Mapping[str, Mapping[Grade, int]] | None = None,
                  construct_rows: Sequence[ConstructStats] | None = None,
                  grid: AssessmentGrid | None = None,
                  report_id: str | None = None,
                  created_at: float | None = None) -> Report:
    """Assemble the report from whichever evaluation pieces were computed."""
    report_id = report_id or f"report-{uuid.uuid4().hex[:12]}"
    created_at = created_at if created_at is not None else time.time()

    doc: dict = {"report_id": report_id, "created_at": created_at}
    lines: list[str] = ["# Evaluation report", ""]

    if run is not None:
        doc["run"] = _run_section(run)
        lines.extend(_run_lines(run))
    if tally is not None:
        doc["grades"] = _grades_section(tally, grid)
        lines.extend(_grades_lines(tally, grid))
    if breakdown is not None:
        doc["per_expert"] = {
            expert: {grade.value: counts[grade] for grade in Grade}
            for expert, counts in breakdown.items()
        }
        lines.extend(_breakdown_lines(breakdown))
    if construct_rows:
        doc["tam"] = [_construct_entry(row) for row in construct_rows]
        doc["tam_sample_size_note"] = _sample_size_note()
        lines.extend(_tam_lines(construct_rows))
    return Report(report_id=report_id, created_at=created_at, json_doc=doc,
                  markdown="\n".join(lines).rstrip() + "\n")


def format_latency(stats: LatencyStats) -> str:
    """Latency summary in report style: 'mean s (min: a, max: b)'."""
    return f"{stats.mean:.2f} s (min: {stats.min:.2f}, max: {stats.max:.2f})"


def _run_section(run: Run) -> dict:
    section: dict = {
        "run_id": run.run_id,
        "questions": len(run.results),
        "answered": sum(1 for result in run.results if not result.failed),
        "failed": sum(1 for result in run.results if result.failed),
        "refused": sum(1 for result in run.results if result.answer and result.answer.refused),
    }
    if run.summary is not None:
        section["latency"] = {
            "mean": round(run.summary.mean, 2),
            "min": run.summary.min,
            "max": run.summary.max,
        }
    return section


def _run_lines(run: Run) -> list[str]:
    lines = ["## Batch run", ""]
    answered = sum(1 for result in run.results if not result.failed)
    refused = sum(1 for result in run.results if result.answer and result.answer.refused)
    lines.append(f"- Questions answered: {answered} of {len(run.results)}")
    lines.append(f"- Refusals: {refused}")
    if run.summary is not None:
        rounded = LatencyStats(mean=round(run.summary.mean, 2), min=run.summary.min, max=run.summary.max)
        lines.append(f"- Answer latency: {format_latency(rounded)}")
    lines.append("")
    return lines


def _grades_section(tally: AssessmentTally, grid: AssessmentGrid | None) -> dict:
    section: dict = {
        "total": tally.total,
        "counts": {grade.value: tally.counts[grade] for grade in Grade},
        "proportions": {grade.value: tally.proportions[grade] for grade in Grade},
        "perfect_or_sufficient": {
            "count": tally.perfect_or_sufficient_count,
            "share": tally.perfect_or_sufficient_share,
            "percent": share_percent(tally.perfect_or_sufficient_share),
        },
        "wrong_percent": share_percent(tally.proportions[Grade.WRONG]),
    }
    if grid is not None:
        section["defaults_filled"] = grid.defaults_filled
    return section


def _grades_lines(tally: AssessmentTally, grid: AssessmentGrid | None) -> list[str]:
    lines = ["## Grade proportions", ""]
    lines.append("| Grade | Count | Share |")
    lines.append("| --- | ---: | ---: |")
    for grade in Grade:
        lines.append(
            f"| {GRADE_LABELS[grade]} | {tally.counts[grade]} | {share_percent(tally.proportions[grade])} |"
        )
    lines.append(
        f"| Perfect + Sufficient | {tally.perfect_or_sufficient_count} "
        f"| {share_percent(tally.perfect_or_sufficient_share)} |"
    )
    lines.append("")
    if grid is not None:
        lines.append(f"Missing cells defaulted to \"I don't know\": {grid.defaults_filled}")
        lines.append("")
    return lines


def _breakdown_lines(breakdown: Mapping[str, Mapping[Grade, int]]) -> list[str]:
    lines = ["## Per-expert grade counts", ""]
    header = " | ".join(GRADE_LABELS[grade] for grade in Grade)
    lines.append(f"| Expert | {header} |")
    lines.append("| --- |" + " ---: |" * len(Grade))
    for expert, counts in breakdown.items():
        row = " | ".join(str(counts[grade]) for grade in Grade)
        lines.append(f"| {expert} | {row} |")
    lines.append("")
    return lines


def _construct_entry(row: ConstructStats) -> dict:
    return {
        "construct": row.construct,
        "mean": round(row.mean, 2),
        "sd": round(row.sd, 2),
        "alpha": None if row.alpha is None else round(row.alpha, 2),
        "alpha_undefined": row.alpha_undefined,
        "r_with_intention": None if row.r_with_intention is None else round(row.r_with_intention, 2),
        "p_value": row.p_value,
        "stars": row.stars,
    }


def _tam_lines(rows: Sequence[ConstructStats]) -> list[str]:
    lines = ["## Technology acceptance", ""]
    lines.append("| Construct | Mean | SD | Cronbach's alpha | r with Intention to Use |")
    lines.append("| --- | ---: | ---: | ---: | ---: |")
    for row in rows:
        alpha = "n/a" if row.alpha is None else f"{row.alpha:.2f}"
        if row.construct == "intention_to_use":
            correlation = "-"
        elif row.r_with_intention is None:
            correlation = "n/a"
        else:
            correlation = f"{row.r_with_intention:.2f}{row.stars}"
        lines.append(
            f"| {CONSTRUCT_TITLES[row.construct]} | {row.mean:.2f} | {row.sd:.2f} | {alpha} | {correlation} |"
        )
    lines.append("")
    lines.append(f"Note: {_sample_size_note()}")
    lines.append("")
    return lines


def _sample_size_note() -> str:
    n_two_tailed = required_sample_size(0.3, 0.05, 0.8, 2)
    return (
        "required-sample-size figures depend on the convention; the Fisher-z "
        f"approximation used here needs n = {n_two_tailed} to detect r = 0.30 at "
        "alpha = 0.05 with power 0.80 (two-tailed). Exact-test calculators report "
        "smaller n for the same inputs."
    )
