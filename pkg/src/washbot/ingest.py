"""Turn source documents into a persisted, reloadable vector index.

Artifact format: line 1 is a JSON header {dim, count, embedder_tag,
created_at, sources}; every following line is one JSON record {chunk_id,
doc_id, span, text, vec}. Chunk text is stored inline so serving never
needs the source files, and the whole file stays human-inspectable.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .rag import (
    DEFAULT_CHUNK_OVERLAP,
    DEFAULT_CHUNK_SIZE,
    Chunk,
    EmbeddedChunk,
    EmbeddingProviderLike,
    VectorIndex,
    chunk_text,
)

_UNIT_NORM_TOLERANCE = 1e-9


class IoError(OSError):
    pass


class InvalidUtf8(ValueError):
    pass


class EmptyAfterNormalization(ValueError):
    pass


class CorruptArtifact(ValueError):
    """Artifact failed an invariant on load; message names the failing record."""


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    text: str


@dataclass(frozen=True)
class IngestSummary:
    chunks: int
    dim: int
    out_path: str
    embedder_tag: str


_MD_PATTERNS = (
    (re.compile(r"^[ \t]*#{1,6}[ \t]*", re.MULTILINE), ""),        # heading markers
    (re.compile(r"^[ \t]*```.*$", re.MULTILINE), ""),              # code fences
    (re.compile(r"!\[([^\]]*)\]\([^)]*\)"), r"\1"),                # images -> alt text
    (re.compile(r"\[([^\]]+)\]\([^)]*\)"), r"\1"),                 # links -> link text
    (re.compile(r"(\*\*|__)(.+?)\1", re.DOTALL), r"\2"),           # bold
    (re.compile(r"(\*|_)(.+?)\1", re.DOTALL), r"\2"),              # italics
    (re.compile(r"~~(.+?)~~", re.DOTALL), r"\1"),                  # strikethrough
    (re.compile(r"`([^`]*)`"), r"\1"),                             # inline code
)

_WS_RUN_RE = re.compile(r"\s+")


def strip_markdown(text: str) -> str:
    for pattern, replacement in _MD_PATTERNS:
        text = pattern.sub(replacement, text)
    return text


def normalize_text(text: str) -> str:
    """Collapse whitespace runs to single spaces, preserving line breaks as \\n."""
    text = text.replace("\r\n", "\n").replace("\r", "\n")

    def collapse(match: re.Match) -> str:
        run = match.group(0)
        newlines = run.count("\n")
        return "\n" * newlines if newlines else " "

    return _WS_RUN_RE.sub(collapse, text).strip()


def load_document(path: str | Path, format: str = "plain") -> Document:
    """Read one source file as a normalized Document; doc_id is the file stem."""
    if format not in ("plain", "markdown"):
        raise ValueError(f"unknown format {format!r}, expected 'plain' or 'markdown'")
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidUtf8(f"{path} is not valid UTF-8: {exc}") from exc
    if format == "markdown":
        text = strip_markdown(text)
    text = normalize_text(text)
    if not text:
        raise EmptyAfterNormalization(f"{path} is empty after normalization")
    title = text.split("\n", 1)[0][:120] or path.stem
    return Document(doc_id=path.stem, title=title, text=text)


def run_ingest(documents: Sequence[Document], *, chunk_size: int = DEFAULT_CHUNK_SIZE,
               overlap: int = DEFAULT_CHUNK_OVERLAP, embedder: EmbeddingProviderLike,
               out: str | Path, created_at: float | None = None) -> IngestSummary:
    """Chunk and embed every document, then write the artifact atomically.

    Embedding happens before any file is touched, so a provider failure
    leaves no partial artifact behind.
    """
    if not documents:
        raise ValueError("run_ingest needs at least one document")
    entries: list[EmbeddedChunk] = []
    next_id = 0
    for document in documents:
        chunks = chunk_text(document.text, chunk_size, overlap,
                            source=document.doc_id, first_chunk_id=next_id)
        next_id += len(chunks)
        for chunk in chunks:
            entries.append(EmbeddedChunk(chunk=chunk, vector=embedder.embed(chunk.text)))
    dim = int(entries[0].vector.shape[0])
    index = VectorIndex(dim=dim, embedder_tag=embedder.tag, entries=entries)
    persist_index(index, out, sources=[d.doc_id for d in documents], created_at=created_at)
    return IngestSummary(chunks=len(entries), dim=dim, out_path=str(out), embedder_tag=embedder.tag)


def persist_index(index: VectorIndex, out: str | Path, *, sources: Iterable[str] = (),
                  created_at: float | None = None) -> None:
    """Write the artifact via temp file + rename."""
    out = Path(out)
    header = {
        "dim": index.dim,
        "count": len(index),
        "embedder_tag": index.embedder_tag,
        "created_at": created_at if created_at is not None else time.time(),
        "sources": list(sources),
    }
    tmp = out.with_name(out.name + ".tmp")
    try:
        with tmp.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, ensure_ascii=False) + "\n")
            for entry in index.entries:
                record = {
                    "chunk_id": entry.chunk.chunk_id,
                    "doc_id": entry.chunk.source,
                    "span": list(entry.chunk.span),
                    "text": entry.chunk.text,
                    "vec": entry.vector.tolist(),
                }
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, out)
    except OSError as exc:
        raise IoError(f"cannot write artifact {out}: {exc}") from exc
    finally:
        if tmp.exists():
            try:
                tmp.unlink()
            except OSError:
                pass


def load_index(path: str | Path) -> VectorIndex:
    """Load an artifact, re-validating dims, unit norms and id uniqueness."""
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read artifact {path}: {exc}") from exc
    if not lines:
        raise CorruptArtifact(f"{path}: artifact is empty")
    try:
        header = json.loads(lines[0])
        dim = int(header["dim"])
        count = int(header["count"])
        embedder_tag = str(header["embedder_tag"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptArtifact(f"{path}: bad header: {exc}") from exc

    records = [line for line in lines[1:] if line.strip()]
    if len(records) != count:
        raise CorruptArtifact(f"{path}: header says {count} records, found {len(records)}")

    entries: list[EmbeddedChunk] = []
    seen: set[int] = set()
    for line in records:
        try:
            record = json.loads(line)
            chunk_id = int(record["chunk_id"])
            vec = np.asarray(record["vec"], dtype=np.float64)
            chunk = Chunk(
                chunk_id=chunk_id,
                text=record["text"],
                source=record["doc_id"],
                span=tuple(record["span"]),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptArtifact(f"{path}: unreadable record: {exc}") from exc
        if chunk_id in seen:
            raise CorruptArtifact(f"{path}: duplicate chunk_id {chunk_id}")
        seen.add(chunk_id)
        if vec.shape != (dim,):
            raise CorruptArtifact(
                f"{path}: chunk_id {chunk_id} has dim {vec.shape[0] if vec.ndim == 1 else vec.shape}, expected {dim}"
            )
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > _UNIT_NORM_TOLERANCE:
            raise CorruptArtifact(f"{path}: chunk_id {chunk_id} vector norm {norm!r} is not unit")
        entries.append(EmbeddedChunk(chunk=chunk, vector=vec))
    return VectorIndex(dim=dim, embedder_tag=embedder_tag, entries=entries)
