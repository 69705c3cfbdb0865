"""WhatsApp Business Cloud webhook boundary.

Covers the subscription handshake, request signature verification, inbound
payload parsing, outbound payload rendering (with the 4096-character body
split), and delivery through an injected transport.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import os
import threading
import time
from dataclasses import dataclass

import requests

MAX_BODY_CHARS = 4096
SEND_ATTEMPTS = 3


class VerificationFailed(Exception):
    """Subscription handshake mode or token mismatch."""


class MalformedHeader(ValueError):
    """Signature header is not 'sha256=' + hex digest."""


class MalformedPayload(ValueError):
    """Webhook POST body is not JSON or lacks the entry/changes skeleton."""


class EmptyBody(ValueError):
    """Outbound message body is empty."""


class TransportError(RuntimeError):
    """Message delivery failed at the network/HTTP level."""


@dataclass(frozen=True)
class InboundMessage:
    """One message lifted out of a webhook delivery."""

    message_id: str
    sender: str
    timestamp: int
    kind: str
    text: str | None = None

    @property
    def is_text(self) -> bool:
        return self.kind == "text"


@dataclass(frozen=True)
class OutboundPayload:
    recipient: str
    body: str
    messaging_product: str = "whatsapp"
    message_type: str = "text"

    def __post_init__(self) -> None:
        if not self.body:
            raise EmptyBody("payload body must be non-empty")
        if len(self.body) > MAX_BODY_CHARS:
            raise ValueError(f"payload body exceeds {MAX_BODY_CHARS} characters; split it first")

    def to_dict(self) -> dict:
        return {
            "messaging_product": self.messaging_product,
            "to": self.recipient,
            "type": self.message_type,
            "text": {"body": self.body},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


@dataclass(frozen=True)
class DeliveryReceipt:
    provider_message_id: str


@dataclass
class GatewayConfig:
    verify_token: str = ""
    app_secret: bytes = b""
    phone_number_id: str = ""
    access_token: str = ""
    send_endpoint: str = "https://graph.facebook.com/v19.0/{phone_number_id}/messages"

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> "GatewayConfig":
        env = dict(os.environ if env is None else env)
        cfg = cls(
            verify_token=env.get("WA_VERIFY_TOKEN", ""),
            app_secret=env.get("WA_APP_SECRET", "").encode("utf-8"),
            phone_number_id=env.get("WA_PHONE_NUMBER_ID", ""),
            access_token=env.get("WA_ACCESS_TOKEN", ""),
        )
        if env.get("WA_SEND_ENDPOINT"):
            cfg.send_endpoint = env["WA_SEND_ENDPOINT"]
        return cfg

    def require_live_secrets(self) -> None:
        missing = [
            name
            for name, value in (
                ("WA_VERIFY_TOKEN", self.verify_token),
                ("WA_APP_SECRET", self.app_secret),
                ("WA_PHONE_NUMBER_ID", self.phone_number_id),
                ("WA_ACCESS_TOKEN", self.access_token),
            )
            if not value
        ]
        if missing:
            raise ValueError(f"live transport needs {', '.join(missing)}")


def verify_subscription(mode: str, token: str, challenge: str, cfg: GatewayConfig) -> str:
    """Echo the challenge iff this is a 'subscribe' call with the right token."""
    token_ok = hmac.compare_digest(token.encode("utf-8"), cfg.verify_token.encode("utf-8"))
    if mode != "subscribe" or not cfg.verify_token or not token_ok:
        raise VerificationFailed("subscription mode or verify token mismatch")
    return challenge


def verify_signature(raw_body: bytes, signature_header: str, app_secret: bytes) -> bool:
    """Check the X-Hub-Signature-256 header against HMAC-SHA256 of the raw body.

    Comparison is constant-time; the header must be 'sha256=' + hex digest.
    """
    if not signature_header.startswith("sha256="):
        raise MalformedHeader("signature header must start with 'sha256='")
    provided = signature_header[len("sha256="):]
    try:
        bytes.fromhex(provided)
    except ValueError as exc:
        raise MalformedHeader("signature payload is not hex") from exc
    expected = hmac.new(app_secret, raw_body, hashlib.sha256).hexdigest()
    return hmac.compare_digest(provided.lower(), expected)


def parse_inbound(raw_json: bytes) -> list[InboundMessage]:
    """Extract messages from a webhook POST body.

    Status-only notifications yield an empty list. Unknown fields are
    ignored, and message entries that violate the basic invariants
    (missing id/sender, text message with an empty body) are dropped
    rather than failing the whole delivery.
    """
    try:
        payload = json.loads(raw_json)
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedPayload(f"body is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or not isinstance(payload.get("entry"), list):
        raise MalformedPayload("payload lacks the entry[] skeleton")

    messages: list[InboundMessage] = []
    for entry in payload["entry"]:
        if not isinstance(entry, dict) or not isinstance(entry.get("changes"), list):
            raise MalformedPayload("entry lacks the changes[] skeleton")
        for change in entry["changes"]:
            if not isinstance(change, dict):
                continue
            value = change.get("value")
            if not isinstance(value, dict):
                continue
            for raw in value.get("messages") or []:
                message = _parse_message(raw)
                if message is not None:
                    messages.append(message)
    return messages


def _parse_message(raw: object) -> InboundMessage | None:
    if not isinstance(raw, dict):
        return None
    message_id = raw.get("id")
    sender = raw.get("from")
    kind = raw.get("type")
    if not message_id or not isinstance(message_id, str):
        return None
    if not sender or not isinstance(sender, str) or not sender.isdigit():
        return None
    if not kind or not isinstance(kind, str):
        return None
    try:
        timestamp = int(raw.get("timestamp", 0))
    except (TypeError, ValueError):
        timestamp = 0
    if kind == "text":
        body = raw.get("text", {})
        text = body.get("body") if isinstance(body, dict) else None
        if not text or not isinstance(text, str):
            return None
        return InboundMessage(message_id=message_id, sender=sender, timestamp=timestamp, kind="text", text=text)
    return InboundMessage(message_id=message_id, sender=sender, timestamp=timestamp, kind=kind)


def render_outbound(recipient: str, body: str) -> list[OutboundPayload]:
    """Render one or more payloads for a reply body.

    Bodies longer than 4096 characters are split at the last whitespace
    before the limit (the split whitespace itself is dropped); a
    whitespace-free stretch falls back to a hard cut.
    """
    if not body:
        raise EmptyBody("refusing to render an empty message body")
    return [OutboundPayload(recipient=recipient, body=part) for part in split_body(body)]


def split_body(body: str, limit: int = MAX_BODY_CHARS) -> list[str]:
    parts: list[str] = []
    rest = body
    while len(rest) > limit:
        cut = None
        for pos in range(min(limit, len(rest) - 1), 0, -1):
            if rest[pos].isspace():
                cut = pos
                break
        if cut is None:
            parts.append(rest[:limit])
            rest = rest[limit:]
        else:
            parts.append(rest[:cut])
            rest = rest[cut + 1:]
    # dropping a trailing split whitespace can leave nothing behind; never
    # emit an empty part
    if rest or not parts:
        parts.append(rest)
    return parts


class MockTransport:
    """Records deliveries in order; thread-safe."""

    def __init__(self) -> None:
        self.sent: list[OutboundPayload] = []
        self._lock = threading.Lock()

    def deliver(self, payload: OutboundPayload) -> str:
        with self._lock:
            self.sent.append(payload)
            return f"mock-{len(self.sent)}"


class FailingTransport:
    """Raises TransportError for the first `failures` deliveries (default: always)."""

    def __init__(self, failures: int | None = None):
        self.failures = failures
        self.attempts = 0
        self._fallback = MockTransport()

    @property
    def sent(self) -> list[OutboundPayload]:
        return self._fallback.sent

    def deliver(self, payload: OutboundPayload) -> str:
        self.attempts += 1
        if self.failures is None or self.attempts <= self.failures:
            raise TransportError("simulated delivery failure")
        return self._fallback.deliver(payload)


class HttpTransport:
    """Delivers payloads to the Business Cloud send endpoint."""

    def __init__(self, cfg: GatewayConfig, timeout: float = 10.0,
                 session: requests.Session | None = None):
        cfg.require_live_secrets()
        self.cfg = cfg
        self.timeout = timeout
        self._session = session or requests.Session()

    def deliver(self, payload: OutboundPayload) -> str:
        url = self.cfg.send_endpoint.format(phone_number_id=self.cfg.phone_number_id)
        try:
            response = self._session.post(
                url,
                json=payload.to_dict(),
                headers={"Authorization": f"Bearer {self.cfg.access_token}"},
                timeout=self.timeout,
            )
            response.raise_for_status()
            data = response.json()
        except (requests.RequestException, ValueError) as exc:
            raise TransportError(f"send failed: {exc}") from exc
        try:
            return data["messages"][0]["id"]
        except (KeyError, IndexError, TypeError):
            return ""


def send_message(payload: OutboundPayload, transport, *, attempts: int = SEND_ATTEMPTS,
                 backoff: float = 0.5) -> DeliveryReceipt:
    """Deliver a payload, retrying transport failures up to `attempts` times."""
    last_error: TransportError | None = None
    for attempt in range(1, attempts + 1):
        try:
            return DeliveryReceipt(provider_message_id=transport.deliver(payload))
        except TransportError as exc:
            last_error = exc
            if attempt < attempts and backoff > 0:
                time.sleep(backoff * attempt)
    assert last_error is not None
    raise last_error
