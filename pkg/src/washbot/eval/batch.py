"""Batch question runs against the answer engine."""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from ..providers import ProviderError
from ..rag import Answer
from ..service import ConversationTurn, LatencyStats, latency_stats
from ..store import JsonlStore


@dataclass(frozen=True)
class Question:
    question_id: str
    text: str
    source_tag: str = ""

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError(f"question {self.question_id}: text must be non-empty")


@dataclass(frozen=True)
class QuestionResult:
    question_id: str
    question_text: str
    answer: Answer | None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.answer is None


@dataclass(frozen=True)
class Run:
    run_id: str
    created_at: float
    results: tuple[QuestionResult, ...]
    summary: LatencyStats | None


def load_questions(path: str | Path) -> list[Question]:
    """Read a JSON-lines question set: {question_id, text, source_tag}."""
    questions: list[Question] = []
    seen: set[str] = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        record = json.loads(line)
        question = Question(
            question_id=str(record["question_id"]),
            text=record["text"],
            source_tag=record.get("source_tag", ""),
        )
        if question.question_id in seen:
            raise ValueError(f"{path}:{lineno}: duplicate question_id {question.question_id}")
        seen.add(question.question_id)
        questions.append(question)
    return questions


def run_batch(questions: Sequence[Question], engine: Callable[[str], Answer],
              store: JsonlStore | None = None, run_id: str | None = None,
              clock: Callable[[], float] = time.time) -> Run:
    """Answer every question exactly once, continuing past provider failures.

    Results are keyed by question_id; failed questions are marked and
    excluded from the latency summary.
    """
    run_id = run_id or uuid.uuid4().hex
    created_at = clock()
    results: list[QuestionResult] = []
    for question in questions:
        try:
            answer = engine(question.text)
            result = QuestionResult(question.question_id, question.text, answer)
        except ProviderError as exc:
            result = QuestionResult(question.question_id, question.text, None, error=str(exc))
        results.append(result)
        if store is not None:
            store.put("eval_runs", f"{run_id}:{question.question_id}", _result_doc(run_id, result, created_at))

    answered = [r for r in results if not r.failed]
    summary = None
    if answered:
        turns = [
            ConversationTurn(turn_id=r.question_id, contact="eval", inbound_text=r.question_text,
                             answer=r.answer, created_at=created_at)
            for r in answered
        ]
        summary = latency_stats(turns)
    return Run(run_id=run_id, created_at=created_at, results=tuple(results), summary=summary)


def _result_doc(run_id: str, result: QuestionResult, created_at: float) -> dict:
    doc = {
        "run_id": run_id,
        "question_id": result.question_id,
        "question_text": result.question_text,
        "created_at": created_at,
    }
    if result.answer is not None:
        doc["answer"] = {
            "text": result.answer.text,
            "retrieved": [[cid, score] for cid, score in result.answer.retrieved],
            "refused": result.answer.refused,
            "latency": result.answer.latency,
        }
    if result.error is not None:
        doc["error"] = result.error
    return doc


def save_run(run: Run, path: str | Path) -> None:
    """Write a run as JSON lines: header line, then one record per question."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "run_id": run.run_id,
            "created_at": run.created_at,
            "count": len(run.results),
        }
        if run.summary is not None:
            header["summary"] = {"mean": run.summary.mean, "min": run.summary.min, "max": run.summary.max}
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for result in run.results:
            fh.write(json.dumps(_result_doc(run.run_id, result, run.created_at), ensure_ascii=False) + "\n")


def load_run(path: str | Path) -> Run:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty run file")
    header = json.loads(lines[0])
    results: list[QuestionResult] = []
    for line in lines[1:]:
        if not line.strip():
            continue
        record = json.loads(line)
        answer = None
        if "answer" in record:
            raw = record["answer"]
            answer = Answer(
                text=raw["text"],
                retrieved=tuple((int(cid), float(score)) for cid, score in raw["retrieved"]),
                refused=bool(raw["refused"]),
                latency=float(raw["latency"]),
            )
        results.append(QuestionResult(
            question_id=record["question_id"],
            question_text=record["question_text"],
            answer=answer,
            error=record.get("error"),
        ))
    summary = None
    if "summary" in header:
        raw = header["summary"]
        summary = LatencyStats(mean=raw["mean"], min=raw["min"], max=raw["max"])
    return Run(run_id=header["run_id"], created_at=header["created_at"],
               results=tuple(results), summary=summary)
