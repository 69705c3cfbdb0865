"""Walkthrough: the evaluation harness on the shipped sample data.

Covers the whole evaluation path: batch-answering a question set, tallying
a synthetic expert grid, screening questionnaire responses, computing
construct statistics, and rendering the combined report.

    python demos/03_eval_statistics.py
"""

import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))  # the synthetic fixture generators live with the tests

from datagen import EXPERTS, QUESTION_IDS, expert_assessments

from washbot.eval import (
    construct_stats,
    correlation_significance,
    cronbach_alpha,
    default_missing,
    load_questions,
    load_tam_csv,
    per_expert_breakdown,
    render_report,
    required_sample_size,
    run_batch,
    screen_inconsistent,
    tally,
)
from washbot.ingest import load_document, load_index, run_ingest
from washbot.providers import MockEmbeddingProvider, MockGenerationProvider
from washbot.rag import RagPolicy, generate_answer

print("== batch run over the sample question set ==")
with tempfile.TemporaryDirectory() as tmp:
    artifact = Path(tmp) / "kb.idx"
    run_ingest(
        [load_document(ROOT / "data/corpus/safe_water_handling.md", "markdown"),
         load_document(ROOT / "data/corpus/sanitation_basics.md", "markdown"),
         load_document(ROOT / "data/corpus/hygiene_practices.txt", "plain")],
        embedder=MockEmbeddingProvider(dim=256), out=artifact)
    index = load_index(artifact)
    embedder = MockEmbeddingProvider(dim=256)
    llm = MockGenerationProvider()

    questions = load_questions(ROOT / "data/questions.jsonl")
    run = run_batch(questions, lambda text: generate_answer(text, index, embedder, llm, RagPolicy()))
    answered = sum(1 for r in run.results if not r.failed)
    refused = sum(1 for r in run.results if r.answer and r.answer.refused)
    print(f"answered {answered}/{len(run.results)}, refusals: {refused}")
    print(f"latency mean {run.summary.mean * 1000:.2f} ms "
          f"(min {run.summary.min * 1000:.2f}, max {run.summary.max * 1000:.2f})")

print("\n== expert grid: default missing cells, tally, per-expert view ==")
grid = default_missing(expert_assessments(), list(EXPERTS), list(QUESTION_IDS))
print(f"grid {len(EXPERTS)} experts x {len(QUESTION_IDS)} questions, "
      f"{grid.defaults_filled} missing cells defaulted")
grade_tally = tally(grid)
for grade, count in grade_tally.counts.items():
    print(f"  {grade.value:<15} {count:>4}  ({100 * grade_tally.proportions[grade]:.1f}%)")
print(f"perfect+sufficient: {100 * grade_tally.perfect_or_sufficient_share:.1f}%")
wrongs = {e: c for e, c in per_expert_breakdown(grid).items()}
print("wrong per expert:", {e: counts[list(counts)[3]] for e, counts in wrongs.items()})

print("\n== questionnaire screening and construct statistics ==")
responses = load_tam_csv(ROOT / "data/tam_responses.csv")
screening = screen_inconsistent(responses)
print(f"{len(responses)} responses, removed {len(screening.removed)}: "
      f"{[r.respondent_id for r in screening.removed]}")
for row in construct_stats(screening.kept):
    r_text = "-" if row.r_with_intention is None else f"{row.r_with_intention:.2f}{row.stars}"
    print(f"  {row.construct:<22} mean {row.mean:.2f}  sd {row.sd:.2f}  "
          f"alpha {row.alpha:.2f}  r(itu) {r_text}")

print("\n== the underlying statistics, standalone ==")
print(f"cronbach_alpha([[1..5],[2,3,4,5,5]]) = {cronbach_alpha([[1, 2], [2, 3], [3, 4], [4, 5], [5, 5]]):.4f}")
print(f"correlation_significance(0.45, n=71) -> p = {correlation_significance(0.45, 71).p_two_tailed:.2e} "
      f"{correlation_significance(0.45, 71).stars}")
print(f"required_sample_size(r=0.3, alpha=0.05, power=0.8, two-tailed) = "
      f"{required_sample_size(0.3, 0.05, 0.8, 2)}")

print("\n== rendered report (markdown) ==")
report = render_report(tally=grade_tally, breakdown=per_expert_breakdown(grid),
                       construct_rows=construct_stats(screening.kept), grid=grid)
print(report.markdown)
