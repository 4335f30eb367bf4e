"""Store behavior: compare-and-set, transactions, concurrency."""

import threading

import pytest

from patternrepo import model
from patternrepo.errors import (
    DuplicateIdError,
    UnknownEntityError,
    VersionConflictError,
)
from patternrepo.store import Store


def _pattern(version=1):
    return model.Pattern(
        id="l/p", language_id="l", name="p", sections={"body": "x"}, version=version
    )


def test_insert_then_get(store):
    store.insert(_pattern())
    got = store.get(model.KIND_PATTERN, "l/p")
    assert got is not None and got.name == "p" and got.version == 1


def test_insert_twice_is_duplicate(store):
    store.insert(_pattern())
    with pytest.raises(DuplicateIdError):
        store.insert(_pattern())


def test_replace_checks_expected_version(store):
    store.insert(_pattern())
    store.replace(_pattern(version=2), expected_version=1)
    assert store.get(model.KIND_PATTERN, "l/p").version == 2
    with pytest.raises(VersionConflictError):
        store.replace(_pattern(version=3), expected_version=1)


def test_replace_missing_entity(store):
    with pytest.raises(UnknownEntityError):
        store.replace(_pattern(version=2), expected_version=1)


def test_delete_with_version_guard(store):
    store.insert(_pattern())
    with pytest.raises(VersionConflictError):
        store.delete(model.KIND_PATTERN, "l/p", expected_version=9)
    store.delete(model.KIND_PATTERN, "l/p", expected_version=1)
    assert store.get(model.KIND_PATTERN, "l/p") is None


def test_delete_missing(store):
    with pytest.raises(UnknownEntityError):
        store.delete(model.KIND_PATTERN, "nope")


def test_list_sorted_by_id(store):
    for pid in ["l/c", "l/a", "l/b"]:
        store.insert(
            model.Pattern(id=pid, language_id="l", name=pid[-1], sections={})
        )
    assert [p.id for p in store.list(model.KIND_PATTERN)] == ["l/a", "l/b", "l/c"]


def test_transaction_rolls_back_on_error(store):
    with pytest.raises(RuntimeError):
        with store.transaction():
            store.insert(_pattern())
            raise RuntimeError("boom")
    assert store.get(model.KIND_PATTERN, "l/p") is None
    assert store.is_empty()


def test_nested_transactions_commit_once(store):
    with store.transaction():
        store.insert(_pattern())
        with store.transaction():
            store.insert(
                model.Pattern(id="l/q", language_id="l", name="q", sections={})
            )
    assert store.count(model.KIND_PATTERN) == 2


def test_nested_failure_rolls_back_everything(store):
    with pytest.raises(RuntimeError):
        with store.transaction():
            store.insert(_pattern())
            with store.transaction():
                raise RuntimeError("inner")
    assert store.is_empty()


def test_kinds_do_not_collide(store):
    store.insert(_pattern())
    view = model.PatternView(id="l/p", name="same id other kind", context="c")
    store.insert(view)
    assert store.count(model.KIND_PATTERN) == 1
    assert store.count(model.KIND_VIEW) == 1


def test_concurrent_cas_admits_exactly_one_writer(store):
    store.insert(_pattern())
    outcomes = []
    barrier = threading.Barrier(8)

    def contend(n):
        barrier.wait()
        try:
            store.replace(_pattern(version=2), expected_version=1)
            outcomes.append(("win", n))
        except VersionConflictError:
            outcomes.append(("lose", n))

    threads = [threading.Thread(target=contend, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    wins = [o for o in outcomes if o[0] == "win"]
    assert len(wins) == 1
    assert store.get(model.KIND_PATTERN, "l/p").version == 2


def test_concurrent_inserts_unique_ids(store):
    barrier = threading.Barrier(6)
    errors = []

    def insert(n):
        barrier.wait()
        try:
            store.insert(
                model.Pattern(id=f"l/p{n}", language_id="l", name=f"p{n}", sections={})
            )
        except Exception as exc:  # noqa: BLE001 - reported below
            errors.append(exc)

    threads = [threading.Thread(target=insert, args=(i,)) for i in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []
    assert store.count(model.KIND_PATTERN) == 6


def test_snapshot_is_a_point_in_time_copy(store):
    store.insert(_pattern())
    snap = store.snapshot()
    store.delete(model.KIND_PATTERN, "l/p")
    assert "l/p" in snap.patterns
    assert store.get(model.KIND_PATTERN, "l/p") is None


def test_file_backed_store_persists(tmp_path):
    path = str(tmp_path / "repo.db")
    s1 = Store(path)
    s1.insert(_pattern())
    s1.close()
    s2 = Store(path)
    assert s2.get(model.KIND_PATTERN, "l/p").name == "p"
    s2.close()
