import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from washbot.gateway import GatewayConfig, MockTransport
from washbot.ingest import load_document, load_index, run_ingest
from washbot.providers import MockEmbeddingProvider, MockGenerationProvider
from washbot.rag import RagPolicy
from washbot.service import ConversationService
from washbot.store import JsonlStore

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"
CORPUS = [
    (DATA_DIR / "corpus" / "safe_water_handling.md", "markdown"),
    (DATA_DIR / "corpus" / "sanitation_basics.md", "markdown"),
    (DATA_DIR / "corpus" / "hygiene_practices.txt", "plain"),
]

# Engineered question fixtures: the first overlaps corpus vocabulary heavily,
# the second shares zero tokens with the corpus (checked by a test below).
ON_TOPIC_QUESTION = "How can I make water from a stream safe to drink?"
OFF_TOPIC_QUESTION = "galaxy spacecraft telescope measures quasar brightness"


@pytest.fixture(scope="session")
def corpus_documents():
    return [load_document(path, fmt) for path, fmt in CORPUS]


@pytest.fixture(scope="session")
def index_path(tmp_path_factory, corpus_documents):
    out = tmp_path_factory.mktemp("index") / "kb.idx"
    run_ingest(corpus_documents, embedder=MockEmbeddingProvider(dim=256), out=out, created_at=1700000000.0)
    return out


@pytest.fixture(scope="session")
def sample_index(index_path):
    return load_index(index_path)


@pytest.fixture()
def service_env(tmp_path, sample_index):
    """A fully wired mock-provider service with a recording transport."""
    store = JsonlStore(tmp_path / "store")
    embedder = MockEmbeddingProvider(dim=256)
    llm = MockGenerationProvider()
    transport = MockTransport()
    service = ConversationService(
        store=store,
        index=sample_index,
        embedder=embedder,
        llm=llm,
        policy=RagPolicy(),
        transport=transport,
        send_backoff=0.0,
    )
    return service, store, transport, embedder, llm


@pytest.fixture()
def gateway_cfg():
    return GatewayConfig(
        verify_token="verify-tok",
        app_secret=b"test-app-secret",
        phone_number_id="10001",
        access_token="access-tok",
    )
