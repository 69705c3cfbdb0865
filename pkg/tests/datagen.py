"""Deterministic synthetic fixtures for the evaluation harness.

The published aggregates these fixtures reproduce (grade shares, construct
means, screening counts) come from studies whose raw data is unavailable,
so the tests engineer grids and questionnaires that hit the same numbers.
Everything here is seed-fixed: regenerating must be byte-stable.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from washbot.eval import Assessment, Grade, TamResponse
from washbot.eval.assess import GRADE_LABELS
from washbot.eval.tam import CONSTRUCT_ITEMS

EXPERTS = ("expert1", "expert2", "expert3", "expert4")
QUESTION_IDS = tuple(f"q{i:03d}" for i in range(1, 94))

# Engineered totals over the 4 x 93 grid: 3 cells missing (default to
# I-don't-know), 11 wrong with 10 of them from expert3, 38 not-sufficient,
# and 320 perfect-or-sufficient.
_MISSING_CELLS = {("expert2", "q003"), ("expert2", "q047"), ("expert2", "q091")}
_WRONG = {
    "expert1": {"q005"},
    "expert3": {f"q{i:03d}" for i in range(30, 40)},
}
_NOT_SUFFICIENT = {
    "expert1": {f"q{i:03d}" for i in range(10, 20)},
    "expert2": {f"q{i:03d}" for i in range(20, 30)},
    "expert3": {f"q{i:03d}" for i in range(40, 50)},
    "expert4": {f"q{i:03d}" for i in range(50, 58)},
}


def expert_assessments() -> list[Assessment]:
    """All graded cells of the synthetic grid (369 rows; 3 cells withheld)."""
    rows: list[Assessment] = []
    for expert in EXPERTS:
        for position, question in enumerate(QUESTION_IDS):
            if (expert, question) in _MISSING_CELLS:
                continue
            if question in _WRONG.get(expert, ()):
                grade = Grade.WRONG
            elif question in _NOT_SUFFICIENT.get(expert, ()):
                grade = Grade.NOT_SUFFICIENT
            elif position % 2 == 0:
                grade = Grade.PERFECT
            else:
                grade = Grade.SUFFICIENT
            rows.append(Assessment(question_id=question, expert_id=expert, grade=grade))
    return rows


def expert_grades_csv() -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["question_id", "expert_id", "grade"])
    for row in expert_assessments():
        writer.writerow([row.question_id, row.expert_id, GRADE_LABELS[row.grade]])
    return buffer.getvalue()


# Kept-sample item-sum targets chosen so the construct means land on
# 584/142 = 4.113, 619/142 = 4.359 and 616/142 = 4.338.
_SUM_TARGETS = {"perceived_usefulness": 584, "ease_of_use": 619, "intention_to_use": 616}
_MEAN_TARGETS = {"perceived_usefulness": 4.11, "ease_of_use": 4.36, "intention_to_use": 4.34}

# Six obviously self-contradicting answer patterns: each has an item gap of
# at least 3 inside at least two constructs, so the default screening rule
# removes exactly these.
_INCONSISTENT_ITEMS = (
    {"pu1": 5, "pu2": 1, "eou1": 5, "eou2": 1, "itu1": 3, "itu2": 3},
    {"pu1": 1, "pu2": 5, "eou1": 4, "eou2": 4, "itu1": 5, "itu2": 1},
    {"pu1": 5, "pu2": 2, "eou1": 1, "eou2": 5, "itu1": 2, "itu2": 5},
    {"pu1": 4, "pu2": 1, "eou1": 1, "eou2": 4, "itu1": 1, "itu2": 4},
    {"pu1": 2, "pu2": 5, "eou1": 5, "eou2": 2, "itu1": 4, "itu2": 4},
    {"pu1": 5, "pu2": 1, "eou1": 2, "eou2": 5, "itu1": 5, "itu2": 1},
)
_INCONSISTENT_POSITIONS = (7, 19, 30, 42, 55, 68)

_AGE_BANDS = ("19-29", "30-39", "40-49", "50+")
_AGE_WEIGHTS = (0.55, 0.28, 0.12, 0.05)
_GENDERS = ("male", "female")
_GENDER_WEIGHTS = (0.62, 0.38)

_COMMENTS = {
    5: "This will help my family a lot",
    23: "Please add our local language",
    41: "Very easy to use on my phone",
    60: "I hope it stays free to use",
}


def _consistent_items(rng: np.random.Generator) -> dict[str, int]:
    # Trait variance dominates item noise so the two items of a construct
    # stay strongly correlated (keeps the fixture's alphas above 0.7).
    trait = rng.normal(0.0, 0.8)
    items: dict[str, int] = {}
    for construct, (a, b) in CONSTRUCT_ITEMS.items():
        base = _MEAN_TARGETS[construct] + trait
        first = int(np.clip(round(base + rng.normal(0.0, 0.3)), 1, 5))
        second = int(np.clip(round(base + rng.normal(0.0, 0.3)), max(1, first - 1), min(5, first + 1)))
        items[a], items[b] = first, second
    return items


def _nudge_to_targets(kept: list[dict[str, int]], rng: np.random.Generator) -> None:
    for construct, (a, b) in CONSTRUCT_ITEMS.items():
        delta = _SUM_TARGETS[construct] - sum(r[a] + r[b] for r in kept)
        order = rng.permutation(len(kept)).tolist()
        cursor = 0
        while delta != 0:
            if cursor >= 10_000:
                raise AssertionError(f"could not hit sum target for {construct}")
            response = kept[order[cursor % len(kept)]]
            step = 1 if delta > 0 else -1
            for item, other in ((a, b), (b, a)):
                candidate = response[item] + step
                if 1 <= candidate <= 5 and abs(candidate - response[other]) <= 2:
                    response[item] = candidate
                    delta -= step
                    break
            cursor += 1


def tam_responses() -> list[TamResponse]:
    """77 questionnaire rows; the 71 consistent ones hit the construct-mean targets."""
    rng = np.random.default_rng(7151)
    kept_items = [_consistent_items(rng) for _ in range(71)]
    _nudge_to_targets(kept_items, rng)

    slots: list[dict[str, int]] = []
    inconsistent = iter(_INCONSISTENT_ITEMS)
    kept_iter = iter(kept_items)
    for position in range(77):
        slots.append(next(inconsistent) if position in _INCONSISTENT_POSITIONS else next(kept_iter))

    responses: list[TamResponse] = []
    for position, items in enumerate(slots):
        responses.append(TamResponse(
            respondent_id=f"r{position + 1:02d}",
            age_band=str(rng.choice(_AGE_BANDS, p=_AGE_WEIGHTS)),
            gender=str(rng.choice(_GENDERS, p=_GENDER_WEIGHTS)),
            items=dict(items),
            free_comment=_COMMENTS.get(position),
        ))
    return responses


def tam_responses_csv() -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["respondent_id", "age_band", "gender",
                     "pu1", "pu2", "eou1", "eou2", "itu1", "itu2", "free_comment"])
    for response in tam_responses():
        writer.writerow([
            response.respondent_id, response.age_band, response.gender,
            response.items["pu1"], response.items["pu2"],
            response.items["eou1"], response.items["eou2"],
            response.items["itu1"], response.items["itu2"],
            response.free_comment or "",
        ])
    return buffer.getvalue()


if __name__ == "__main__":
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent / "data"
    (root / "expert_grades.csv").write_text(expert_grades_csv(), encoding="utf-8")
    (root / "tam_responses.csv").write_text(tam_responses_csv(), encoding="utf-8")
    print("wrote", root / "expert_grades.csv")
    print("wrote", root / "tam_responses.csv")
