"""Topic-scoped retrieval-augmented Q&A over WhatsApp-compatible webhooks.

The package splits into the webhook boundary (`gateway`), the answer
pipeline (`rag`, `providers`, `ingest`), persistence (`store`), message
orchestration (`service`, `api`), and the evaluation harness (`eval`).
"""

__version__ = "0.1.0"

from .rag import (
    Answer,
    Chunk,
    EmbeddedChunk,
    RagPolicy,
    VectorIndex,
    chunk_text,
    cosine_similarity,
    generate_answer,
    mock_embed,
    search,
)

__all__ = [
    "__version__",
    "Answer", "Chunk", "EmbeddedChunk", "RagPolicy", "VectorIndex",
    "chunk_text", "cosine_similarity", "generate_answer", "mock_embed", "search",
]
