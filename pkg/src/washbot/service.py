"""Message orchestration: dedup, command routing, RAG, persistence, delivery.

The webhook handler acknowledges immediately and this service does the
slow work afterwards; WhatsApp redelivers on slow responses, so every
message id passes through an atomic check-and-insert before anything else.
"""

from __future__ import annotations

import enum
import logging
import threading
import time
import uuid
from dataclasses import dataclass
from typing import Callable

from . import gateway, rag
from .providers import ProviderError
from .store import JsonlStore, StorageError

logger = logging.getLogger(__name__)

DEDUP_TTL_SECONDS = 7 * 24 * 3600
_DEDUP_PURGE_EVERY = 1000

DEFAULT_UNSUPPORTED_TEXT = (
    "I can only read text messages for now. Please send your question as a text message."
)
DEFAULT_APOLOGY_TEXT = (
    "Sorry, something went wrong while preparing your answer. Please try again in a moment."
)
DEFAULT_PRIVACY_TEXT = (
    "Your questions are processed to generate an answer and stored to improve this service. "
    "The full privacy and data-protection policy is available at {url}"
)
DEFAULT_HELP_TEXT = (
    "Ask me anything about safe water, sanitation or hygiene, for example: "
    "\"How can I make drinking water safe?\" Send \"privacy\" to read about data protection."
)


class EmptyInput(ValueError):
    pass


class Outcome(str, enum.Enum):
    REPLIED = "replied"
    DUPLICATE = "duplicate"
    FALLBACK = "fallback"
    FAILED = "failed"


@dataclass(frozen=True)
class ConversationTurn:
    turn_id: str
    contact: str
    inbound_text: str
    answer: rag.Answer
    created_at: float

    def to_doc(self) -> dict:
        return {
            "turn_id": self.turn_id,
            "contact": self.contact,
            "inbound_text": self.inbound_text,
            "answer": {
                "text": self.answer.text,
                "retrieved": [[cid, score] for cid, score in self.answer.retrieved],
                "refused": self.answer.refused,
                "latency": self.answer.latency,
            },
            "created_at": self.created_at,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ConversationTurn":
        answer = doc["answer"]
        return cls(
            turn_id=doc["turn_id"],
            contact=doc["contact"],
            inbound_text=doc["inbound_text"],
            answer=rag.Answer(
                text=answer["text"],
                retrieved=tuple((int(cid), float(score)) for cid, score in answer["retrieved"]),
                refused=bool(answer["refused"]),
                latency=float(answer["latency"]),
            ),
            created_at=doc["created_at"],
        )


@dataclass(frozen=True)
class LatencyStats:
    mean: float
    min: float
    max: float


def latency_stats(turns: list[ConversationTurn]) -> LatencyStats:
    """Arithmetic mean, minimum and maximum of the turns' answer latencies."""
    if not turns:
        raise EmptyInput("latency stats need at least one turn")
    latencies = [turn.answer.latency for turn in turns]
    return LatencyStats(mean=sum(latencies) / len(latencies), min=min(latencies), max=max(latencies))


@dataclass
class ServiceTexts:
    unsupported: str = DEFAULT_UNSUPPORTED_TEXT
    apology: str = DEFAULT_APOLOGY_TEXT
    privacy: str = DEFAULT_PRIVACY_TEXT
    help: str = DEFAULT_HELP_TEXT
    privacy_url: str = "https://example.org/privacy"

    def command_replies(self) -> dict[str, str]:
        return {
            "privacy": self.privacy.replace("{url}", self.privacy_url),
            "help": self.help,
        }


class ConversationService:
    """Wires the store, the RAG pipeline and the outbound transport together."""

    def __init__(self, store: JsonlStore, index: rag.VectorIndex,
                 embedder, llm, policy: rag.RagPolicy | None = None,
                 transport=None, texts: ServiceTexts | None = None,
                 clock: Callable[[], float] = time.time,
                 dedup_ttl: float = DEDUP_TTL_SECONDS,
                 send_backoff: float = 0.5):
        self.store = store
        self.index = index
        self.embedder = embedder
        self.llm = llm
        self.policy = policy or rag.RagPolicy()
        self.transport = transport
        self.texts = texts or ServiceTexts()
        self.clock = clock
        self.dedup_ttl = dedup_ttl
        self.send_backoff = send_backoff
        self._contact_lock = threading.Lock()
        self._handled = 0

    # -- webhook path ------------------------------------------------------

    def handle_inbound(self, msg: gateway.InboundMessage) -> Outcome:
        """Process one parsed webhook message; exactly one outbound interaction per unique id."""
        self._maybe_purge_dedup()
        try:
            fresh = self.store.check_and_insert("dedup", msg.message_id, {"ts": self.clock()})
        except StorageError as exc:
            self._log_error("dedup", msg, exc)
            return Outcome.FAILED
        if not fresh:
            return Outcome.DUPLICATE

        if not msg.is_text:
            return self._send_or_fail(msg, self.texts.unsupported, Outcome.FALLBACK)

        command_reply = self.texts.command_replies().get(msg.text.strip().lower())
        if command_reply is not None:
            return self._send_or_fail(msg, command_reply, Outcome.REPLIED)

        try:
            answer = rag.generate_answer(msg.text, self.index, self.embedder, self.llm, self.policy)
        except ProviderError as exc:
            self._log_error("provider", msg, exc)
            self._try_send(msg.sender, self.texts.apology)
            return Outcome.FAILED
        try:
            self._persist_turn(msg.sender, msg.text, answer)
        except StorageError as exc:
            self._log_error("storage", msg, exc)
            return Outcome.FAILED
        return self._send_or_fail(msg, answer.text, Outcome.REPLIED)

    def _send_or_fail(self, msg: gateway.InboundMessage, body: str, success: Outcome) -> Outcome:
        try:
            self._send(msg.sender, body)
        except gateway.TransportError as exc:
            self._log_error("transport", msg, exc)
            return Outcome.FAILED
        return success

    def _send(self, recipient: str, body: str) -> None:
        if self.transport is None:
            return
        for payload in gateway.render_outbound(recipient, body):
            gateway.send_message(payload, self.transport, backoff=self.send_backoff)

    def _try_send(self, recipient: str, body: str) -> None:
        try:
            self._send(recipient, body)
        except gateway.TransportError as exc:
            logger.warning("could not deliver fallback reply to %s: %s", recipient, exc)

    # -- playground path ---------------------------------------------------

    def chat(self, contact_id: str, text: str) -> dict:
        """Answer a local playground message and return the wire-shaped result."""
        if not text or not text.strip():
            raise EmptyInput("chat text must be non-empty")
        command_reply = self.texts.command_replies().get(text.strip().lower())
        if command_reply is not None:
            return {"answer": command_reply, "refused": False, "retrieved": [], "latency": 0.0}
        answer = rag.generate_answer(text, self.index, self.embedder, self.llm, self.policy)
        turn = self._persist_turn(contact_id, text, answer)
        return {
            "answer": answer.text,
            "refused": answer.refused,
            "retrieved": [
                {
                    "chunk_id": cid,
                    "score": score,
                    "text": self.index.chunk_by_id(cid).text,
                }
                for cid, score in answer.retrieved
            ],
            "latency": answer.latency,
            "turn_id": turn.turn_id,
        }

    # -- persistence -------------------------------------------------------

    def _persist_turn(self, contact: str, inbound_text: str, answer: rag.Answer) -> ConversationTurn:
        turn = ConversationTurn(
            turn_id=uuid.uuid4().hex,
            contact=contact,
            inbound_text=inbound_text,
            answer=answer,
            created_at=self.clock(),
        )
        with self._contact_lock:
            self.store.put("turns", turn.turn_id, turn.to_doc())
            existing = self.store.get("contacts", contact)
            now = turn.created_at
            if existing is None:
                contact_doc = {"contact_id": contact, "first_seen": now,
                               "last_seen": now, "message_count": 1}
            else:
                contact_doc = dict(existing)
                contact_doc["last_seen"] = max(now, existing.get("last_seen", now))
                contact_doc["message_count"] = int(existing.get("message_count", 0)) + 1
            self.store.put("contacts", contact, contact_doc)
        return turn

    def _log_error(self, stage: str, msg: gateway.InboundMessage, exc: Exception) -> None:
        logger.error("%s error handling %s: %s", stage, msg.message_id, exc)
        try:
            self.store.put("errors", uuid.uuid4().hex, {
                "stage": stage,
                "message_id": msg.message_id,
                "contact": msg.sender,
                "error": str(exc),
                "ts": self.clock(),
            })
        except StorageError:
            logger.exception("error log write failed")

    # -- queries -----------------------------------------------------------

    def list_turns(self, contact: str | None = None, limit: int | None = None) -> list[ConversationTurn]:
        filters = {"contact": contact} if contact else None
        return [ConversationTurn.from_doc(doc) for doc in self.store.list("turns", filters, limit)]

    def list_contacts(self, limit: int | None = None) -> list[dict]:
        return self.store.list("contacts", None, limit)

    def stats_latency(self) -> LatencyStats:
        return latency_stats(self.list_turns())

    # -- housekeeping ------------------------------------------------------

    def purge_expired_dedup(self) -> int:
        cutoff = self.clock() - self.dedup_ttl
        return self.store.prune("dedup", lambda _id, doc: doc.get("ts", 0) >= cutoff)

    def _maybe_purge_dedup(self) -> None:
        self._handled += 1
        if self._handled % _DEDUP_PURGE_EVERY == 0:
            try:
                self.purge_expired_dedup()
            except StorageError:
                logger.exception("dedup purge failed")
