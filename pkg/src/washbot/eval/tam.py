"""Likert questionnaire screening and construct statistics.

Three two-item constructs (perceived usefulness, ease of use, intention to
use) on a 5-point agreement scale, scored 5 = fully agree down to 1 =
fully disagree. No reverse-coded items.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..stats import normal_quantile, student_t_two_tailed_p

CONSTRUCT_ORDER = ("perceived_usefulness", "ease_of_use", "intention_to_use")

CONSTRUCT_ITEMS: dict[str, tuple[str, str]] = {
    "perceived_usefulness": ("pu1", "pu2"),
    "ease_of_use": ("eou1", "eou2"),
    "intention_to_use": ("itu1", "itu2"),
}

CONSTRUCT_TITLES: dict[str, str] = {
    "perceived_usefulness": "Perceived Usefulness",
    "ease_of_use": "Ease of Use",
    "intention_to_use": "Intention to Use",
}

ALL_ITEMS = tuple(item for pair in CONSTRUCT_ITEMS.values() for item in pair)

LIKERT_MIN = 1
LIKERT_MAX = 5


class ZeroTotalVariance(ValueError):
    """All respondents have the same item total; alpha is undefined."""


class ConstantInput(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


@dataclass(frozen=True)
class TamResponse:
    """One questionnaire row: six Likert items plus light demographics."""

    respondent_id: str
    age_band: str
    gender: str
    items: dict[str, int]
    free_comment: str | None = None

    def __post_init__(self) -> None:
        missing = [item for item in ALL_ITEMS if item not in self.items]
        if missing:
            raise ValueError(f"respondent {self.respondent_id}: missing items {missing}")
        for item, score in self.items.items():
            if not LIKERT_MIN <= int(score) <= LIKERT_MAX:
                raise ValueError(
                    f"respondent {self.respondent_id}: item {item} score {score} outside 1..5"
                )

    def construct_score(self, construct: str) -> float:
        a, b = CONSTRUCT_ITEMS[construct]
        return (self.items[a] + self.items[b]) / 2.0


@dataclass(frozen=True)
class ScreeningRule:
    """Remove a respondent when >= min_constructs constructs show an item gap >= gap."""

    gap: int = 3
    min_constructs: int = 2


@dataclass(frozen=True)
class ScreeningResult:
    kept: tuple[TamResponse, ...]
    removed: tuple[TamResponse, ...]
    reasons: dict[str, tuple[str, ...]]


def screen_inconsistent(responses: Sequence[TamResponse],
                        rule: ScreeningRule = ScreeningRule()) -> ScreeningResult:
    """Split responses into kept and removed by the within-construct gap rule."""
    kept: list[TamResponse] = []
    removed: list[TamResponse] = []
    reasons: dict[str, tuple[str, ...]] = {}
    for response in responses:
        triggered = tuple(
            construct
            for construct, (a, b) in CONSTRUCT_ITEMS.items()
            if abs(response.items[a] - response.items[b]) >= rule.gap
        )
        if len(triggered) >= rule.min_constructs:
            removed.append(response)
            reasons[response.respondent_id] = triggered
        else:
            kept.append(response)
    return ScreeningResult(kept=tuple(kept), removed=tuple(removed), reasons=reasons)


def cronbach_alpha(item_scores: np.ndarray) -> float:
    """Internal-consistency alpha for an n-respondents x k-items score matrix.

    Sample variance (n-1 divisor) throughout; the divisor cancels in the
    ratio, so the population convention would give the same value.
    """
    matrix = np.asarray(item_scores, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError("item_scores must be a 2-D matrix")
    n, k = matrix.shape
    if n < 2 or k < 2:
        raise ValueError(f"need at least 2 respondents and 2 items, got {n}x{k}")
    total_variance = float(np.var(matrix.sum(axis=1), ddof=1))
    if total_variance == 0.0:
        raise ZeroTotalVariance("all respondents share the same item total")
    item_variance = float(np.var(matrix, axis=0, ddof=1).sum())
    return (k / (k - 1)) * (1.0 - item_variance / total_variance)


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation coefficient."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise LengthMismatch(f"need equal-length 1-D inputs, got {xa.shape} and {ya.shape}")
    if xa.size < 3:
        raise LengthMismatch("need at least 3 observations")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sx = float(np.sqrt(np.dot(dx, dx)))
    sy = float(np.sqrt(np.dot(dy, dy)))
    if sx == 0.0 or sy == 0.0:
        raise ConstantInput("correlation is undefined for a constant input")
    return float(np.clip(float(np.dot(dx, dy)) / (sx * sy), -1.0, 1.0))


def stars_for_p(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class SignificanceResult:
    t: float
    p_two_tailed: float
    stars: str


def correlation_significance(r: float, n: int) -> SignificanceResult:
    """t statistic and two-tailed p for a correlation observed on n samples."""
    if not abs(r) < 1.0:
        raise DegenerateInput(f"|r| must be < 1, got {r}")
    if n < 3:
        raise DegenerateInput(f"need n >= 3, got {n}")
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = student_t_two_tailed_p(t, n - 2)
    return SignificanceResult(t=t, p_two_tailed=p, stars=stars_for_p(p))


def required_sample_size(r_target: float, alpha: float, power: float, tails: int = 2) -> int:
    """Fisher-z approximation of the sample size needed to detect r_target.

    n = ceil(((z_{1-alpha/tails} + z_power) / atanh(r_target))^2 + 3).
    Conventions differ across tools (exact-test calculators report smaller n);
    this operation is parametric rather than pinned to any published figure.
    """
    if not 0.0 < r_target < 1.0:
        raise DegenerateInput("r_target must be in (0, 1)")
    if not 0.0 < alpha < 1.0 or not 0.0 < power < 1.0:
        raise DegenerateInput("alpha and power must be in (0, 1)")
    if tails not in (1, 2):
        raise DegenerateInput("tails must be 1 or 2")
    z_alpha = normal_quantile(1.0 - alpha / tails)
    z_power = normal_quantile(power)
    n = ((z_alpha + z_power) / math.atanh(r_target)) ** 2 + 3.0
    return math.ceil(n)


@dataclass(frozen=True)
class ConstructStats:
    """Per-construct summary row; correlation fields apply to non-intention rows."""

    construct: str
    mean: float
    sd: float
    alpha: float | None
    alpha_undefined: bool = False
    r_with_intention: float | None = None
    p_value: float | None = None
    stars: str = ""


def construct_stats(responses: Sequence[TamResponse]) -> list[ConstructStats]:
    """Means, SDs, alphas, and correlations against intention-to-use.

    Output order is fixed: perceived usefulness, ease of use, intention to
    use. Degenerate inputs (constant columns) surface as undefined flags
    instead of errors so an all-agree sample still yields a report.
    """
    if len(responses) < 3:
        raise ValueError("construct statistics need at least 3 responses")
    scores = {
        construct: np.array([r.construct_score(construct) for r in responses])
        for construct in CONSTRUCT_ORDER
    }
    intention = scores["intention_to_use"]

    rows: list[ConstructStats] = []
    for construct in CONSTRUCT_ORDER:
        item_a, item_b = CONSTRUCT_ITEMS[construct]
        matrix = np.array([[r.items[item_a], r.items[item_b]] for r in responses], dtype=np.float64)
        try:
            alpha: float | None = cronbach_alpha(matrix)
            alpha_undefined = False
        except ZeroTotalVariance:
            alpha = None
            alpha_undefined = True

        r_value: float | None = None
        p_value: float | None = None
        stars = ""
        if construct != "intention_to_use":
            try:
                r_value = pearson_r(scores[construct], intention)
            except ConstantInput:
                r_value = None
            if r_value is not None:
                if abs(r_value) >= 1.0:
                    # limit of the t test as |r| -> 1
                    p_value = 0.0
                    stars = "***"
                else:
                    significance = correlation_significance(r_value, len(responses))
                    p_value = significance.p_two_tailed
                    stars = significance.stars
        rows.append(ConstructStats(
            construct=construct,
            mean=float(scores[construct].mean()),
            sd=float(np.std(scores[construct], ddof=1)),
            alpha=alpha,
            alpha_undefined=alpha_undefined,
            r_with_intention=r_value,
            p_value=p_value,
            stars=stars,
        ))
    return rows


def load_tam_csv(path: str | Path) -> list[TamResponse]:
    """Read questionnaire rows from a CSV.

    Columns: respondent_id, age_band, gender, pu1, pu2, eou1, eou2, itu1,
    itu2, and an optional free_comment.
    """
    responses: list[TamResponse] = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"respondent_id", *ALL_ITEMS}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(required)}, got {reader.fieldnames}")
        for row in reader:
            responses.append(TamResponse(
                respondent_id=row["respondent_id"].strip(),
                age_band=row.get("age_band", "").strip(),
                gender=row.get("gender", "").strip(),
                items={item: int(row[item]) for item in ALL_ITEMS},
                free_comment=(row.get("free_comment") or "").strip() or None,
            ))
    return responses
