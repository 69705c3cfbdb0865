"""Retrieval-augmented answering: chunking, embeddings, vector search, refusal gate.

The pipeline is deliberately exhaustive-scan: the knowledge base is one
facilitator-guide-sized document, so a top-k scan over a few hundred unit
vectors beats any index structure on both simplicity and latency.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

DEFAULT_CHUNK_SIZE = 800
DEFAULT_CHUNK_OVERLAP = 120
DEFAULT_TOP_K = 4
DEFAULT_REFUSAL_THRESHOLD = 0.25

# Fraction of the window, counted from its end, inside which a cut point may
# snap back to a whitespace boundary.
_SNAP_FRACTION = 0.15

DEFAULT_PROMPT_TEMPLATE = (
    "You are a helpful assistant answering questions about water, sanitation and hygiene.\n"
    "Answer using only the material below. If the material does not cover the question,\n"
    "politely decline and explain that you can only help with water, sanitation and\n"
    "hygiene topics.\n"
    "\n"
    "Material:\n"
    "{context}\n"
    "\n"
    "Question: {question}\n"
    "Answer:"
)

DEFAULT_REFUSAL_TEXT = (
    "Sorry, I can only answer questions about safe water, sanitation and hygiene. "
    "Please ask me something about those topics."
)


class InvalidParams(ValueError):
    pass


class EmptyDocument(ValueError):
    pass


class NoTokens(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class ZeroVector(ValueError):
    pass


class EmptyIndex(ValueError):
    pass


@dataclass(frozen=True)
class Chunk:
    """One contiguous slice of a normalized source document."""

    chunk_id: int
    text: str
    source: str
    span: tuple[int, int]

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("chunk text must be non-empty")
        start, end = self.span
        if end <= start:
            raise ValueError(f"chunk span must be non-empty, got {self.span}")


@dataclass(frozen=True)
class EmbeddedChunk:
    chunk: Chunk
    vector: np.ndarray


class VectorIndex:
    """Immutable searchable collection of embedded chunks.

    Safe to share across threads; rebuilds replace the whole object.
    """

    def __init__(self, dim: int, embedder_tag: str, entries: Sequence[EmbeddedChunk]):
        self.dim = int(dim)
        self.embedder_tag = embedder_tag
        self.entries: tuple[EmbeddedChunk, ...] = tuple(entries)
        seen: set[int] = set()
        for entry in self.entries:
            if entry.vector.shape != (self.dim,):
                raise DimensionMismatch(
                    f"chunk {entry.chunk.chunk_id}: vector has shape {entry.vector.shape}, expected ({self.dim},)"
                )
            if entry.chunk.chunk_id in seen:
                raise ValueError(f"duplicate chunk_id {entry.chunk.chunk_id}")
            seen.add(entry.chunk.chunk_id)
        if self.entries:
            self._matrix = np.stack([e.vector for e in self.entries]).astype(np.float64)
            self._norms = np.linalg.norm(self._matrix, axis=1)
            self._ids = np.array([e.chunk.chunk_id for e in self.entries], dtype=np.int64)
        else:
            self._matrix = np.zeros((0, self.dim))
            self._norms = np.zeros(0)
            self._ids = np.zeros(0, dtype=np.int64)
        self._by_id = {e.chunk.chunk_id: e.chunk for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def chunk_by_id(self, chunk_id: int) -> Chunk:
        return self._by_id[chunk_id]


@dataclass
class RagPolicy:
    """Tunables of the answer pipeline, including the off-topic refusal gate."""

    k: int = DEFAULT_TOP_K
    tau: float = DEFAULT_REFUSAL_THRESHOLD
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE
    refusal_text: str = DEFAULT_REFUSAL_TEXT

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidParams("k must be >= 1")
        if not -1.0 <= self.tau <= 1.0:
            raise InvalidParams("tau must be in [-1, 1]")
        for placeholder in ("{context}", "{question}"):
            if placeholder not in self.prompt_template:
                raise InvalidParams(f"prompt template is missing the {placeholder} placeholder")


@dataclass(frozen=True)
class Answer:
    """Generated reply plus retrieval provenance."""

    text: str
    retrieved: tuple[tuple[int, float], ...]
    refused: bool
    latency: float


class EmbeddingProviderLike(Protocol):
    tag: str

    def embed(self, text: str) -> np.ndarray: ...


class GenerationProviderLike(Protocol):
    tag: str

    def generate(self, prompt: str) -> str: ...


def chunk_text(document: str, chunk_size: int = DEFAULT_CHUNK_SIZE,
               overlap: int = DEFAULT_CHUNK_OVERLAP, source: str = "doc",
               first_chunk_id: int = 0) -> list[Chunk]:
    """Split a normalized document into overlapping spans.

    Windows advance by chunk_size - overlap; a window's cut point snaps
    backward to just after the last whitespace found in the final 15% of the
    window, so chunks tend to end on word boundaries. Spans tile the whole
    document: consecutive spans overlap, and every character is covered.
    """
    if chunk_size <= overlap or overlap < 0:
        raise InvalidParams(f"need chunk_size > overlap >= 0, got chunk_size={chunk_size} overlap={overlap}")
    if not document:
        raise EmptyDocument("cannot chunk an empty document")

    snap_zone = max(1, int(chunk_size * _SNAP_FRACTION))
    n = len(document)
    chunks: list[Chunk] = []
    start = 0
    chunk_id = first_chunk_id
    while True:
        end = min(start + chunk_size, n)
        if end < n:
            cut = _snap_backward(document, max(start + 1, end - snap_zone), end)
            if cut is not None:
                end = cut
        chunks.append(Chunk(chunk_id=chunk_id, text=document[start:end], source=source, span=(start, end)))
        chunk_id += 1
        if end >= n:
            return chunks
        # Progress guard: heavy snapping plus a large overlap could otherwise
        # move the next window backwards.
        start = max(end - overlap, start + 1)


def _snap_backward(document: str, lo: int, hi: int) -> int | None:
    """Largest cut position c in (lo, hi] such that document[c-1] is whitespace."""
    for pos in range(hi - 1, lo - 1, -1):
        if document[pos].isspace():
            return pos + 1
    return None


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF
_TOKEN_RE = re.compile(r"[a-z0-9]+")


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def mock_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic bag-of-words hashing embedding.

    Each lowercased alphanumeric token contributes +1 or -1 (by bit 63 of its
    FNV-1a-64 hash) to the component indexed by hash mod dim; the result is
    L2-normalized. Stable across runs and platforms, so tests and artifacts
    can rely on exact values.
    """
    if dim < 8:
        raise InvalidParams("embedding dimension must be >= 8")
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        raise NoTokens("text has no alphanumeric tokens")
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        h = fnv1a64(token.encode("utf-8"))
        sign = 1.0 if (h >> 63) == 0 else -1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        # Opposite-sign tokens can cancel exactly; fall back to a
        # deterministic basis vector so the unit-norm contract holds.
        vec[fnv1a64(" ".join(tokens).encode("utf-8")) % dim] = 1.0
        return vec
    return vec / norm


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    return float(np.clip(float(np.dot(a, b)) / (na * nb), -1.0, 1.0))


def search(index: VectorIndex, query_vector: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Top-k entries by cosine similarity, ties broken by ascending chunk_id."""
    if k < 1:
        raise InvalidParams("k must be >= 1")
    if len(index) == 0:
        raise EmptyIndex("cannot search an empty index")
    query = np.asarray(query_vector, dtype=np.float64)
    if query.shape != (index.dim,):
        raise DimensionMismatch(f"query has shape {query.shape}, index dim is {index.dim}")
    qnorm = float(np.linalg.norm(query))
    if qnorm == 0.0:
        raise ZeroVector("cannot search with a zero query vector")
    scores = np.clip((index._matrix @ query) / (index._norms * qnorm), -1.0, 1.0)
    order = np.lexsort((index._ids, -scores))[: min(k, len(index))]
    return [(int(index._ids[i]), float(scores[i])) for i in order]


def build_prompt(question: str, retrieved_chunks: Sequence[Chunk], policy: RagPolicy) -> str:
    """Fill the policy template with the retrieved context and the question.

    Plain string replacement, not str.format, so braces in user text or
    chunk text cannot break the template.
    """
    context = "\n\n".join(f"[source s{chunk.chunk_id}] {chunk.text}" for chunk in retrieved_chunks)
    return policy.prompt_template.replace("{context}", context).replace("{question}", question)


def generate_answer(question: str, index: VectorIndex, embedder: EmbeddingProviderLike,
                    llm: GenerationProviderLike, policy: RagPolicy | None = None) -> Answer:
    """Embed the question, retrieve top-k chunks, and answer or refuse.

    When the best retrieval score falls below policy.tau the question is
    treated as off-topic: the fixed refusal text is returned and the
    generation provider is never called.
    """
    policy = policy or RagPolicy()
    started = time.perf_counter()
    if len(index) == 0:
        raise EmptyIndex("cannot answer against an empty index")
    query = embedder.embed(question)
    hits = search(index, query, policy.k)
    if not hits or hits[0][1] < policy.tau:
        return Answer(
            text=policy.refusal_text,
            retrieved=tuple(hits),
            refused=True,
            latency=time.perf_counter() - started,
        )
    chunks = [index.chunk_by_id(chunk_id) for chunk_id, _ in hits]
    prompt = build_prompt(question, chunks, policy)
    text = llm.generate(prompt)
    return Answer(
        text=text,
        retrieved=tuple(hits),
        refused=False,
        latency=time.perf_counter() - started,
    )
