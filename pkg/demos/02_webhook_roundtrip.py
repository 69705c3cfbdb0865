"""Walkthrough: a signed webhook delivery travelling the whole service.

Simulates what the messaging provider does: the subscription handshake,
then signed POSTs carrying user messages, including a redelivery and an
off-topic question. Replies land in a recording transport instead of a
real phone.

    python demos/02_webhook_roundtrip.py
"""

import hashlib
import hmac
import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from washbot.api import create_app
from washbot.gateway import GatewayConfig, MockTransport
from washbot.ingest import load_document, load_index, run_ingest
from washbot.providers import MockEmbeddingProvider, MockGenerationProvider
from washbot.service import ConversationService
from washbot.store import JsonlStore

ROOT = Path(__file__).resolve().parent.parent
SECRET = b"demo-app-secret"


def signed(body: bytes) -> dict:
    mac = hmac.new(SECRET, body, hashlib.sha256).hexdigest()
    return {"X-Hub-Signature-256": f"sha256={mac}"}


def message(text: str, message_id: str) -> bytes:
    return json.dumps({"entry": [{"changes": [{"value": {"messages": [{
        "from": "256700000001", "id": message_id, "timestamp": "1700000000",
        "type": "text", "text": {"body": text}}]}}]}]}).encode()


with tempfile.TemporaryDirectory() as tmp:
    artifact = Path(tmp) / "kb.idx"
    run_ingest(
        [load_document(ROOT / "data/corpus/safe_water_handling.md", "markdown"),
         load_document(ROOT / "data/corpus/hygiene_practices.txt", "plain")],
        embedder=MockEmbeddingProvider(dim=256), out=artifact)

    transport = MockTransport()
    service = ConversationService(
        store=JsonlStore(Path(tmp) / "store"),
        index=load_index(artifact),
        embedder=MockEmbeddingProvider(dim=256),
        llm=MockGenerationProvider(),
        transport=transport,
        send_backoff=0.0,
    )
    app = create_app(service, GatewayConfig(verify_token="demo-token", app_secret=SECRET))

    with TestClient(app) as client:
        print("1) subscription handshake")
        response = client.get("/webhook", params={
            "hub.mode": "subscribe", "hub.verify_token": "demo-token", "hub.challenge": "4242"})
        print(f"   -> {response.status_code}, challenge echoed: {response.text!r}")

        print("\n2) signed delivery of an on-topic question")
        body = message("When should I wash my hands with soap?", "wamid.demo.1")
        print(f"   -> {client.post('/webhook', content=body, headers=signed(body)).json()}")
        print(f"   reply: {transport.sent[-1].body!r}")

        print("\n3) the provider redelivers the same event (dedup)")
        client.post("/webhook", content=body, headers=signed(body))
        print(f"   outbound payloads so far: {len(transport.sent)} (still one)")

        print("\n4) tampered body with the old signature is rejected")
        tampered = body.replace(b"soap", b"soda")
        print(f"   -> HTTP {client.post('/webhook', content=tampered, headers=signed(body)).status_code}")

        print("\n5) off-topic question gets the polite refusal")
        body = message("galaxy spacecraft telescope measures quasar brightness", "wamid.demo.2")
        client.post("/webhook", content=body, headers=signed(body))
        print(f"   reply: {transport.sent[-1].body!r}")

        print("\n6) the same pipeline backs the playground API")
        chat = client.post("/api/chat", json={
            "session_id": "session:demo", "text": "How do I store drinking water?"}).json()
        print(f"   answer: {chat['answer']!r}")
        print(f"   retrieved: {[(r['chunk_id'], round(r['score'], 3)) for r in chat['retrieved']]}")
        print(f"   latency: {chat['latency'] * 1000:.1f} ms")
