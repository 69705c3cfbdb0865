"""JSONL document store: durability, atomicity, concurrency."""

import json
import os
import threading

import pytest

from washbot.store import COLLECTIONS, JsonlStore, StorageError, UnknownCollection


@pytest.fixture()
def store(tmp_path):
    return JsonlStore(tmp_path)


def test_put_get_round_trip(store):
    doc = {"contact_id": "256", "message_count": 3, "nested": {"a": [1, 2.5, "x"]}}
    store.put("contacts", "256", doc)
    fetched = store.get("contacts", "256")
    assert json.dumps(fetched, sort_keys=True) == json.dumps(doc, sort_keys=True)


def test_put_upserts(store):
    store.put("contacts", "c", {"v": 1})
    store.put("contacts", "c", {"v": 2})
    assert store.get("contacts", "c") == {"v": 2}
    assert store.count("contacts") == 1


def test_get_returns_copy(store):
    store.put("contacts", "c", {"v": 1})
    store.get("contacts", "c")["v"] = 99
    assert store.get("contacts", "c") == {"v": 1}


def test_put_to_unwritable_path(tmp_path):
    # chmod is not enough under root, so make the target path unopenable:
    # a directory where the collection file should be.
    store = JsonlStore(tmp_path)
    (tmp_path / "turns.jsonl").mkdir()
    with pytest.raises(StorageError):
        store.put("turns", "t1", {"x": 1})


def test_put_rejects_unserializable(store):
    with pytest.raises(StorageError):
        store.put("turns", "t", {"bad": object()})
    with pytest.raises(StorageError):
        store.put("turns", "", {"x": 1})


def test_check_and_insert_true_exactly_once(store):
    assert store.check_and_insert("dedup", "wamid.1") is True
    assert store.check_and_insert("dedup", "wamid.1") is False
    assert store.check_and_insert("dedup", "wamid.2") is True


def test_check_and_insert_concurrent_stress(store):
    results = []
    lock = threading.Lock()
    barrier = threading.Barrier(20)

    def worker():
        barrier.wait()
        for _ in range(5):
            outcome = store.check_and_insert("dedup", "contested")
            with lock:
                results.append(outcome)

    threads = [threading.Thread(target=worker) for _ in range(20)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert len(results) == 100
    assert results.count(True) == 1


def test_list_filters_and_order(store):
    store.put("turns", "t1", {"contact": "A", "n": 1})
    store.put("turns", "t2", {"contact": "B", "n": 2})
    store.put("turns", "t3", {"contact": "A", "n": 3})
    only_a = store.list("turns", {"contact": "A"})
    assert [doc["n"] for doc in only_a] == [1, 3]
    assert store.list("turns", limit=0) == []
    assert [doc["n"] for doc in store.list("turns", limit=2)] == [1, 2]
    assert [doc["n"] for doc in store.list("turns", {"contact": "A"}, limit=1)] == [1]


def test_list_unknown_collection(store):
    with pytest.raises(UnknownCollection):
        store.list("bogus")
    with pytest.raises(UnknownCollection):
        store.put("bogus", "x", {})


def test_reload_preserves_state_and_order(tmp_path):
    first = JsonlStore(tmp_path)
    first.put("turns", "t1", {"n": 1})
    first.put("turns", "t2", {"n": 2})
    first.put("turns", "t1", {"n": 10})  # upsert keeps original position
    second = JsonlStore(tmp_path)
    assert [doc["n"] for doc in second.list("turns")] == [10, 2]


def test_torn_trailing_append_is_discarded(tmp_path):
    store = JsonlStore(tmp_path)
    store.put("turns", "t1", {"n": 1})
    path = tmp_path / "turns.jsonl"
    with path.open("a", encoding="utf-8") as fh:
        fh.write('{"id":"t2","doc":{"n":')  # crash mid-append: no newline, invalid JSON
    reopened = JsonlStore(tmp_path)
    assert reopened.get("turns", "t1") == {"n": 1}
    assert reopened.get("turns", "t2") is None
    # the store keeps working after discarding the torn tail
    reopened.put("turns", "t3", {"n": 3})
    assert JsonlStore(tmp_path).get("turns", "t3") == {"n": 3}


def test_kill_between_temp_write_and_rename(tmp_path):
    store = JsonlStore(tmp_path)
    store.put("turns", "t1", {"n": 1})
    # simulate a compaction that wrote its temp file but died before rename
    tmp_file = tmp_path / "turns.jsonl.tmp"
    tmp_file.write_text('{"id":"t1","doc":{"n":999}}\n', encoding="utf-8")
    reopened = JsonlStore(tmp_path)
    assert reopened.get("turns", "t1") == {"n": 1}  # pre-write state, not torn


def test_corrupt_mid_file_record_raises(tmp_path):
    store = JsonlStore(tmp_path)
    store.put("turns", "t1", {"n": 1})
    path = tmp_path / "turns.jsonl"
    content = path.read_text(encoding="utf-8")
    path.write_text("GARBAGE NOT JSON\n" + content, encoding="utf-8")
    with pytest.raises(StorageError):
        JsonlStore(tmp_path)


def test_compact_rewrites_latest_state(tmp_path):
    store = JsonlStore(tmp_path)
    for version in range(5):
        store.put("contacts", "c", {"v": version})
    path = tmp_path / "contacts.jsonl"
    assert len(path.read_text(encoding="utf-8").splitlines()) == 5
    store.compact("contacts")
    assert len(path.read_text(encoding="utf-8").splitlines()) == 1
    assert JsonlStore(tmp_path).get("contacts", "c") == {"v": 4}


def test_prune_removes_matching_records(tmp_path):
    store = JsonlStore(tmp_path)
    store.put("dedup", "old", {"ts": 100})
    store.put("dedup", "new", {"ts": 200})
    removed = store.prune("dedup", lambda _id, doc: doc["ts"] >= 150)
    assert removed == 1
    assert store.get("dedup", "old") is None
    assert JsonlStore(tmp_path).get("dedup", "new") == {"ts": 200}


def test_every_collection_exists(store):
    for name in COLLECTIONS:
        assert store.list(name) == []
