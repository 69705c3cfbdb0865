"""Embedding and generation providers: deterministic mocks plus thin HTTPS JSON clients.

Live model hosts are reached through two tiny JSON contracts (text in,
vector or text out) so they can be swapped by configuration; the mocks are
fully deterministic and carry call counters for tests.
"""

from __future__ import annotations

import re
import threading

import numpy as np
import requests

from .rag import mock_embed

DEFAULT_TIMEOUT = 30.0


class ProviderError(RuntimeError):
    """An embedding or generation call failed; message carries provider detail."""

    def __init__(self, provider_tag: str, detail: str):
        super().__init__(f"provider '{provider_tag}': {detail}")
        self.provider_tag = provider_tag
        self.detail = detail


class MockEmbeddingProvider:
    """Hashing bag-of-words embedder; identical output across runs and hosts."""

    def __init__(self, dim: int = 256):
        self.dim = dim
        self.tag = f"mock-fnv1a-{dim}"
        self.calls = 0
        self._lock = threading.Lock()

    def embed(self, text: str) -> np.ndarray:
        with self._lock:
            self.calls += 1
        try:
            return mock_embed(text, self.dim)
        except ValueError as exc:
            raise ProviderError(self.tag, str(exc)) from exc


_SOURCE_MARK_RE = re.compile(r"\[source s\d+\] ")
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")


class MockGenerationProvider:
    """Deterministic stand-in for a hosted LLM.

    Replies with the first complete sentence of the top retrieved chunk in
    the prompt, so mock conversations stay readable and exactly repeatable.
    """

    tag = "mock-llm"

    def __init__(self) -> None:
        self.calls = 0
        self._lock = threading.Lock()

    def generate(self, prompt: str) -> str:
        with self._lock:
            self.calls += 1
        match = _SOURCE_MARK_RE.search(prompt)
        if match is None:
            return "I do not have enough material to answer that."
        # Walk the top chunk paragraph by paragraph (chunks may open with a
        # heading or a mid-sentence overlap fragment) and return the first
        # complete sentence; stop at the next context entry or template tail.
        fallback = None
        for paragraph in prompt[match.end():].split("\n\n"):
            paragraph = paragraph.strip()
            if paragraph.startswith("[source ") or paragraph.startswith("Question:"):
                break
            block = paragraph.replace("\n", " ").strip()
            if not block:
                continue
            sentences = [s.strip() for s in _SENTENCE_SPLIT_RE.split(block) if s.strip()]
            pick = next((s for s in sentences if s[0].isupper() and s[-1] in ".!?"), None)
            if pick is not None:
                return f"According to the guidance material: {pick}"
            if fallback is None and sentences:
                fallback = sentences[0]
        if fallback is None:
            return "I do not have enough material to answer that."
        return f"According to the guidance material: {fallback}"


class FailingProvider:
    """Test double that always raises, for error-path coverage."""

    def __init__(self, tag: str = "failing"):
        self.tag = tag
        self.calls = 0

    def embed(self, text: str) -> np.ndarray:
        self.calls += 1
        raise ProviderError(self.tag, "configured to fail")

    def generate(self, prompt: str) -> str:
        self.calls += 1
        raise ProviderError(self.tag, "configured to fail")


class HttpEmbeddingProvider:
    """POSTs {"text": ...} to an embedding endpoint, expects {"vector": [...]}."""

    def __init__(self, url: str, api_key: str, dim: int, tag: str = "http-embed",
                 timeout: float = DEFAULT_TIMEOUT, session: requests.Session | None = None):
        self.url = url
        self.api_key = api_key
        self.dim = dim
        self.tag = tag
        self.timeout = timeout
        self._session = session or requests.Session()

    def embed(self, text: str) -> np.ndarray:
        try:
            response = self._session.post(
                self.url,
                json={"text": text},
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
            response.raise_for_status()
            vector = np.asarray(response.json()["vector"], dtype=np.float64)
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise ProviderError(self.tag, f"embedding call failed: {exc}") from exc
        if vector.shape != (self.dim,):
            raise ProviderError(self.tag, f"expected a {self.dim}-dim vector, got shape {vector.shape}")
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:
            raise ProviderError(self.tag, "endpoint returned a zero vector")
        # Index entries must be unit-norm; normalize here so every provider
        # satisfies the same contract.
        return vector / norm


class HttpGenerationProvider:
    """POSTs {"prompt": ...} to a generation endpoint, expects {"text": ...}."""

    def __init__(self, url: str, api_key: str, tag: str = "http-llm",
                 timeout: float = DEFAULT_TIMEOUT, session: requests.Session | None = None):
        self.url = url
        self.api_key = api_key
        self.tag = tag
        self.timeout = timeout
        self._session = session or requests.Session()

    def generate(self, prompt: str) -> str:
        try:
            response = self._session.post(
                self.url,
                json={"prompt": prompt},
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
            response.raise_for_status()
            text = response.json()["text"]
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise ProviderError(self.tag, f"generation call failed: {exc}") from exc
        if not isinstance(text, str):
            raise ProviderError(self.tag, "endpoint returned a non-string 'text' field")
        if not text.strip():
            raise ProviderError(self.tag, "endpoint returned an empty reply")
        return text
