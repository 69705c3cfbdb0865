"""Document-store persistence on append-compacted JSON-lines files.

One file per collection under a data directory. Writes append a record and
fsync before acknowledging; compaction rewrites a collection atomically via
temp file + rename. A partially written trailing line (torn append after a
crash) is discarded on load, so reopening always yields either the pre- or
post-write state of the interrupted record.
"""

from __future__ import annotations

import copy
import json
import os
import threading
import time
from pathlib import Path
from typing import Callable

COLLECTIONS = ("contacts", "turns", "dedup", "eval_runs", "eval_reports", "errors")


class StorageError(RuntimeError):
    pass


class UnknownCollection(KeyError):
    pass


class JsonlStore:
    """Single-process document store with per-collection write serialization."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        try:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create data directory {self.data_dir}: {exc}") from exc
        self._tables: dict[str, dict[str, dict]] = {}
        self._locks: dict[str, threading.Lock] = {}
        for name in COLLECTIONS:
            self._locks[name] = threading.Lock()
            self._tables[name] = self._load_collection(name)

    def _path(self, collection: str) -> Path:
        return self.data_dir / f"{collection}.jsonl"

    def _check_collection(self, collection: str) -> None:
        if collection not in self._tables:
            raise UnknownCollection(collection)

    def _load_collection(self, name: str) -> dict[str, dict]:
        path = self._path(name)
        table: dict[str, dict] = {}
        if not path.exists():
            return table
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise StorageError(f"cannot read {path}: {exc}") from exc
        lines = raw.split(b"\n")
        # A final chunk without a trailing newline is a torn append: the
        # record was never acknowledged, so drop it and truncate the file so
        # later appends cannot glue onto the fragment.
        torn_tail = lines.pop() if lines and lines[-1] != b"" else None
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                record_id = record["id"]
                doc = record["doc"]
            except (ValueError, KeyError, TypeError) as exc:
                raise StorageError(f"{path}:{lineno}: corrupt record: {exc}") from exc
            table[str(record_id)] = doc
        if torn_tail:
            try:
                with path.open("r+b") as fh:
                    fh.truncate(len(raw) - len(torn_tail))
            except OSError as exc:
                raise StorageError(f"cannot repair torn tail of {path}: {exc}") from exc
        return table

    def _append(self, collection: str, record_id: str, doc: dict) -> None:
        line = json.dumps({"id": record_id, "doc": doc}, ensure_ascii=False, separators=(",", ":"))
        path = self._path(collection)
        try:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageError(f"cannot append to {path}: {exc}") from exc

    def put(self, collection: str, record_id: str, doc: dict) -> bool:
        """Upsert a document; durable before returning."""
        self._check_collection(collection)
        if not record_id:
            raise StorageError("record id must be non-empty")
        try:
            doc = json.loads(json.dumps(doc))
        except (TypeError, ValueError) as exc:
            raise StorageError(f"document is not JSON-serializable: {exc}") from exc
        with self._locks[collection]:
            self._append(collection, record_id, doc)
            self._tables[collection][record_id] = doc
        return True

    def get(self, collection: str, record_id: str) -> dict | None:
        self._check_collection(collection)
        doc = self._tables[collection].get(record_id)
        return copy.deepcopy(doc) if doc is not None else None

    def check_and_insert(self, collection: str, record_id: str, doc: dict | None = None) -> bool:
        """Atomically insert if absent. True exactly once per id across all callers."""
        self._check_collection(collection)
        with self._locks[collection]:
            if record_id in self._tables[collection]:
                return False
            payload = doc if doc is not None else {"ts": time.time()}
            self._append(collection, record_id, payload)
            self._tables[collection][record_id] = payload
            return True

    def list(self, collection: str, filters: dict | None = None,
             limit: int | None = None) -> list[dict]:
        """Insertion-ordered documents matching all field-equality filters."""
        self._check_collection(collection)
        if limit is not None and limit < 0:
            limit = 0
        results: list[dict] = []
        with self._locks[collection]:
            docs = list(self._tables[collection].values())
        for doc in docs:
            if limit is not None and len(results) >= limit:
                break
            if filters and any(doc.get(key) != value for key, value in filters.items()):
                continue
            results.append(copy.deepcopy(doc))
        return results[:limit] if limit is not None else results

    def count(self, collection: str) -> int:
        self._check_collection(collection)
        return len(self._tables[collection])

    def compact(self, collection: str) -> None:
        """Rewrite a collection file with only the latest record per id (atomic)."""
        self._check_collection(collection)
        with self._locks[collection]:
            self._rewrite_locked(collection, self._tables[collection])

    def prune(self, collection: str, keep: Callable[[str, dict], bool]) -> int:
        """Drop records for which keep(id, doc) is false; returns removed count."""
        self._check_collection(collection)
        with self._locks[collection]:
            table = self._tables[collection]
            kept = {rid: doc for rid, doc in table.items() if keep(rid, doc)}
            removed = len(table) - len(kept)
            if removed:
                self._rewrite_locked(collection, kept)
                self._tables[collection] = kept
        return removed

    def _rewrite_locked(self, collection: str, table: dict[str, dict]) -> None:
        path = self._path(collection)
        tmp = path.with_suffix(".jsonl.tmp")
        try:
            with tmp.open("w", encoding="utf-8") as fh:
                for record_id, doc in table.items():
                    fh.write(json.dumps({"id": record_id, "doc": doc},
                                        ensure_ascii=False, separators=(",", ":")) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageError(f"cannot rewrite {path}: {exc}") from exc
        finally:
            if tmp.exists():
                try:
                    tmp.unlink()
                except OSError:
                    pass
