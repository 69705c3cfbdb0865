"""HTTP surface: webhook boundary plus the local playground/eval JSON API.

The webhook POST acknowledges immediately and processes messages in the
background; answer generation is far slower than webhook timeout norms
and the provider redelivers unacknowledged events.
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import BackgroundTasks, FastAPI, HTTPException, Query, Request
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import gateway
from .config import AppConfig
from .ingest import load_index
from .providers import (
    HttpEmbeddingProvider,
    HttpGenerationProvider,
    MockEmbeddingProvider,
    MockGenerationProvider,
)
from .rag import RagPolicy
from .service import ConversationService, EmptyInput, ServiceTexts
from .store import JsonlStore

logger = logging.getLogger(__name__)


class ChatRequest(BaseModel):
    session_id: str
    text: str


def build_providers(cfg: AppConfig):
    if cfg.provider == "mock":
        return MockEmbeddingProvider(dim=cfg.embed_dim), MockGenerationProvider()
    embedder = HttpEmbeddingProvider(cfg.embed_api_url, cfg.embed_api_key,
                                     dim=cfg.embed_dim, timeout=cfg.provider_timeout)
    llm = HttpGenerationProvider(cfg.llm_api_url, cfg.llm_api_key, timeout=cfg.provider_timeout)
    return embedder, llm


def build_service(cfg: AppConfig, transport=None) -> ConversationService:
    """Wire a ConversationService from resolved configuration."""
    store = JsonlStore(cfg.data_dir)
    index = load_index(cfg.index_path)
    embedder, llm = build_providers(cfg)
    if index.embedder_tag != embedder.tag:
        raise ValueError(
            f"index was built with embedder '{index.embedder_tag}' but the configured "
            f"provider is '{embedder.tag}'; rebuild the index or fix the configuration"
        )
    policy_kwargs = {"k": cfg.k, "tau": cfg.tau}
    if cfg.prompt_template:
        policy_kwargs["prompt_template"] = cfg.prompt_template
    if cfg.refusal_text:
        policy_kwargs["refusal_text"] = cfg.refusal_text
    texts = ServiceTexts(privacy_url=cfg.privacy_url)
    service = ConversationService(store=store, index=index, embedder=embedder, llm=llm,
                                  policy=RagPolicy(**policy_kwargs), transport=transport,
                                  texts=texts)
    service.purge_expired_dedup()
    return service


def create_app(service: ConversationService, gateway_cfg: gateway.GatewayConfig,
               ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="washbot", docs_url=None, redoc_url=None)

    @app.get("/webhook")
    def webhook_handshake(
        mode: str = Query("", alias="hub.mode"),
        verify_token: str = Query("", alias="hub.verify_token"),
        challenge: str = Query("", alias="hub.challenge"),
    ) -> PlainTextResponse:
        try:
            echoed = gateway.verify_subscription(mode, verify_token, challenge, gateway_cfg)
        except gateway.VerificationFailed:
            raise HTTPException(status_code=403, detail="verification failed")
        return PlainTextResponse(echoed)

    @app.post("/webhook")
    async def webhook_receive(request: Request, background: BackgroundTasks) -> dict:
        raw_body = await request.body()
        header = request.headers.get("X-Hub-Signature-256", "")
        try:
            accepted = gateway.verify_signature(raw_body, header, gateway_cfg.app_secret)
        except gateway.MalformedHeader:
            accepted = False
        if not accepted:
            raise HTTPException(status_code=401, detail="bad signature")
        try:
            messages = gateway.parse_inbound(raw_body)
        except gateway.MalformedPayload as exc:
            # Authenticated but unusable payloads are acknowledged so the
            # provider stops redelivering them.
            logger.warning("malformed webhook payload: %s", exc)
            return {"status": "ignored"}
        for message in messages:
            background.add_task(service.handle_inbound, message)
        return {"status": "accepted", "messages": len(messages)}

    @app.post("/api/chat")
    def chat(request: ChatRequest) -> dict:
        if not request.session_id.strip():
            raise HTTPException(status_code=400, detail="session_id must be non-empty")
        try:
            return service.chat(request.session_id, request.text)
        except EmptyInput:
            raise HTTPException(status_code=400, detail="text must be non-empty")

    @app.get("/api/conversations")
    def conversations(contact: str | None = None, limit: int | None = None) -> dict:
        if contact:
            turns = [turn.to_doc() for turn in service.list_turns(contact, limit)]
            return {"contact": contact, "turns": turns}
        return {"contacts": service.list_contacts(limit)}

    @app.get("/api/stats/latency")
    def latency() -> dict:
        turns = service.list_turns()
        if not turns:
            return {"count": 0, "mean": None, "min": None, "max": None}
        stats = service.stats_latency()
        return {"count": len(turns), "mean": round(stats.mean, 2), "min": stats.min, "max": stats.max}

    @app.get("/api/eval/reports")
    def eval_reports() -> dict:
        docs = service.store.list("eval_reports")
        return {
            "reports": [
                {"report_id": doc.get("report_id"), "created_at": doc.get("created_at")}
                for doc in docs
            ]
        }

    @app.get("/api/eval/reports/{report_id}")
    def eval_report(report_id: str) -> dict:
        doc = service.store.get("eval_reports", report_id)
        if doc is None:
            raise HTTPException(status_code=404, detail=f"no report {report_id!r}")
        return doc

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
