"""Walkthrough: build a vector index from the sample corpus and query it.

Run from the repository root:

    python demos/01_ingest_and_search.py
"""

import tempfile
from pathlib import Path

from washbot.ingest import load_document, load_index, run_ingest
from washbot.providers import MockEmbeddingProvider, MockGenerationProvider
from washbot.rag import RagPolicy, generate_answer, search

ROOT = Path(__file__).resolve().parent.parent

documents = [
    load_document(ROOT / "data/corpus/safe_water_handling.md", "markdown"),
    load_document(ROOT / "data/corpus/sanitation_basics.md", "markdown"),
    load_document(ROOT / "data/corpus/hygiene_practices.txt", "plain"),
]
print(f"loaded {len(documents)} documents:")
for doc in documents:
    print(f"  {doc.doc_id}: {len(doc.text)} chars, title {doc.title!r}")

embedder = MockEmbeddingProvider(dim=256)
with tempfile.TemporaryDirectory() as tmp:
    artifact = Path(tmp) / "kb.idx"
    summary = run_ingest(documents, embedder=embedder, out=artifact)
    print(f"\ningested -> {summary.chunks} chunks, dim {summary.dim} ({summary.embedder_tag})")

    index = load_index(artifact)

    print("\n--- raw similarity search ---")
    for question in ("How long should water boil?",
                     "Where should the latrine be built?"):
        hits = search(index, embedder.embed(question), k=3)
        print(f"\n{question}")
        for chunk_id, score in hits:
            snippet = index.chunk_by_id(chunk_id).text[:70].replace("\n", " ")
            print(f"  s{chunk_id}  {score:+.3f}  {snippet}...")

    print("\n--- full answer pipeline (mock generation) ---")
    llm = MockGenerationProvider()
    for question in ("How can I make water from a stream safe to drink?",
                     "galaxy spacecraft telescope measures quasar brightness"):
        answer = generate_answer(question, index, embedder, llm, RagPolicy())
        flag = "refused" if answer.refused else f"answered via {[c for c, _ in answer.retrieved][:2]}"
        print(f"\nQ: {question}\n   [{flag}, {answer.latency * 1000:.1f} ms]\nA: {answer.text}")
