"""End-to-end acceptance checks, one test per shipping requirement.

Each test here states a user-visible promise and verifies it against an
oracle that does not share code with the implementation under test:
frozen hand-derived values, brute-force reachability via networkx, or
byte comparison of independently produced artifacts.
"""

import json
import math
import random
import time

import networkx as nx
import pytest
from fastapi.testclient import TestClient

from patternrepo import cli, corpus, model
from patternrepo import graph as graphmod
from patternrepo.api import create_app
from patternrepo.jsonutil import canonical_json
from patternrepo.repository import Repository
from patternrepo.store import Store, import_bundle
from randomops import SequenceRunner, random_view_state

SEQUENCE_COUNT = 1000
SEQUENCE_BUDGET_SECONDS = 60.0
TRAVERSAL_SAMPLES = 200
ROUND_TRIP_SAMPLES = 50
LAYOUT_REPEATS = 20


class SequenceResults:
    def __init__(self):
        self.elapsed = 0.0
        self.dirty_runs = []      # (seed, diagnostics) where validate() was not empty
        self.provenance = []      # (seed, violations)
        self.total_ops = 0


@pytest.fixture(scope="module")
def sequences():
    """Run the randomized editing sessions once; several tests read them."""
    results = SequenceResults()
    started = time.monotonic()
    for seed in range(SEQUENCE_COUNT):
        runner = SequenceRunner(seed)
        try:
            results.total_ops += runner.run()
            diagnostics = runner.repo.validate()
            if diagnostics:
                results.dirty_runs.append((seed, diagnostics))
            if runner.provenance_violations:
                results.provenance.append((seed, list(runner.provenance_violations)))
        finally:
            runner.close()
    results.elapsed = time.monotonic() - started
    return results


def test_seeded_view_spans_three_languages_over_http(tmp_path):
    """Seeding the example corpus and asking the service for the showcase
    view must yield a graph whose nodes come from exactly three languages
    and whose view-owned edges are the three documented bridges."""
    started = time.monotonic()
    db = str(tmp_path / "case.db")
    assert cli.main(["corpus", "seed", "--db-path", db]) == 0
    store = Store(db)
    try:
        client = TestClient(create_app(store))
        r = client.get(f"/pattern-views/{corpus.VIEW_ID}/graph?layout=seed:1")
        assert r.status_code == 200
        payload = r.json()
    finally:
        store.close()
    elapsed = time.monotonic() - started

    node_languages = {n["languageId"] for n in payload["nodes"]}
    assert node_languages == {
        "cloud-computing-patterns",
        "enterprise-integration-patterns",
        "security-patterns",
    }
    view_owned = [e for e in payload["edges"] if e["ownership"] == model.OWNERSHIP_VIEW]
    assert len(view_owned) == 3
    bridge = [
        e for e in view_owned
        if e["source"] == "enterprise-integration-patterns/point-to-point-channel"
        and e["target"] == "security-patterns/secure-channel"
    ]
    assert len(bridge) == 1
    assert elapsed < 5.0, f"case study took {elapsed:.2f}s"


def test_random_edit_sessions_never_leave_a_dirty_store(sequences):
    """After any sequence of successful operations the stored state passes
    validation with no findings, and constructing each representable defect
    by hand is still detected."""
    assert sequences.dirty_runs == [], (
        f"{len(sequences.dirty_runs)} of {SEQUENCE_COUNT} sequences left "
        f"findings; first: {sequences.dirty_runs[:1]}"
    )
    assert sequences.elapsed < SEQUENCE_BUDGET_SECONDS, (
        f"{SEQUENCE_COUNT} sequences took {sequences.elapsed:.1f}s"
    )
    for code, snapshot in _defect_catalog().items():
        found = {d.code for d in graphmod.validate(snapshot)}
        assert code in found, f"constructed {code} went undetected (saw {found})"


def test_patterns_keep_their_birth_language(sequences):
    """No sequence of view operations may ever change which language a
    pattern belongs to."""
    assert sequences.provenance == [], (
        f"provenance violations in {len(sequences.provenance)} sequences; "
        f"first: {sequences.provenance[:1]}"
    )


def test_neighborhood_matches_brute_force_reachability():
    """The traversal answer must equal an independent shortest-path
    computation on every sampled graph."""
    rng = random.Random(424242)
    for case in range(TRAVERSAL_SAMPLES):
        snapshot = random_view_state(rng)
        depth = rng.randint(0, 3)
        hits = graphmod.neighborhood(snapshot, "the-view", depth)
        got = {h.pattern_id: h.distance for h in hits}
        want = _reachability_oracle(snapshot, "the-view", depth)
        assert got == want, f"case {case} depth {depth}: {got} != {want}"
        _check_witness_paths(snapshot, hits)


def test_bundle_round_trip_is_byte_identical():
    """Exporting, importing into a fresh store, and exporting again must
    reproduce the corpus bundle and fifty randomized repositories byte for
    byte."""
    texts = [_corpus_bundle_text()]
    for seed in range(ROUND_TRIP_SAMPLES):
        runner = SequenceRunner(137000 + seed)
        try:
            runner.run()
            texts.append(runner.repo.export_bundle_text())
        finally:
            runner.close()
    for i, text in enumerate(texts):
        fresh = Store()
        try:
            import_bundle(fresh, json.loads(text))
            again = Repository(fresh).export_bundle_text()
        finally:
            fresh.close()
        assert again == text, f"repository {i} did not survive the round trip"


def test_layout_is_deterministic_and_non_degenerate(seeded_repo):
    """Twenty layout runs with one seed agree byte for byte, coordinates
    are finite, and no two nodes land on the same point."""
    graph = seeded_repo.view_graph(corpus.VIEW_ID)
    first = graphmod.layout(graph, 7)
    first_bytes = canonical_json(first.to_dict())
    for _ in range(LAYOUT_REPEATS - 1):
        assert canonical_json(graphmod.layout(graph, 7).to_dict()) == first_bytes
    points = list(first.positions.values())
    for x, y in points:
        assert math.isfinite(x) and math.isfinite(y)
    closest = min(
        math.dist(points[i], points[j])
        for i in range(len(points))
        for j in range(i + 1, len(points))
    )
    assert closest > 0.0


def test_http_contract_covers_every_endpoint():
    """One scripted client session touches every route the service offers,
    stale preconditions are turned away with a conflict, and drawing an
    edge to a pattern outside the view is refused with the dedicated
    code."""
    remaining = {
        ("GET", "/pattern-languages"),
        ("POST", "/pattern-languages"),
        ("GET", "/pattern-languages/{id}"),
        ("PUT", "/pattern-languages/{id}"),
        ("DELETE", "/pattern-languages/{id}"),
        ("GET", "/pattern-languages/{id}/patterns"),
        ("POST", "/pattern-languages/{id}/patterns"),
        ("GET", "/patterns/{id}"),
        ("PUT", "/patterns/{id}"),
        ("DELETE", "/patterns/{id}"),
        ("GET", "/pattern-languages/{id}/relations"),
        ("POST", "/pattern-languages/{id}/relations"),
        ("GET", "/pattern-views"),
        ("POST", "/pattern-views"),
        ("GET", "/pattern-views/{id}"),
        ("PUT", "/pattern-views/{id}"),
        ("DELETE", "/pattern-views/{id}"),
        ("POST", "/pattern-views/{id}/patterns/{patternId}"),
        ("DELETE", "/pattern-views/{id}/patterns/{patternId}"),
        ("POST", "/pattern-views/{id}/referenced-relations"),
        ("POST", "/pattern-views/{id}/relations"),
        ("GET", "/pattern-views/{id}/graph"),
        ("GET", "/pattern-views/{id}/neighborhood"),
        ("GET", "/pattern-views/{id}/diagnostics"),
        ("GET", "/export"),
        ("POST", "/import"),
    }
    store = Store()
    client = TestClient(create_app(store))

    def call(method, template, url, expect, **kwargs):
        r = client.request(method, url, **kwargs)
        assert r.status_code == expect, (method, url, r.status_code, r.text)
        remaining.discard((method, template))
        return r

    def etag(url):
        return client.get(url).headers["ETag"]

    try:
        # start from a bundle import into the empty store
        call("POST", "/import", "/import?mode=strict",
             200, json=corpus.corpus_bundle())

        lang = {
            "name": "Ops Language",
            "domainContext": "operations",
            "sectionSchema": [{"name": "body", "required": True}],
            "relationTypes": [{"name": "refines", "directed": True}],
        }
        call("POST", "/pattern-languages", "/pattern-languages", 201, json=lang)
        call("POST", "/pattern-languages", "/pattern-languages", 201,
             json={**lang, "name": "Disposable Language"})
        call("GET", "/pattern-languages", "/pattern-languages", 200)
        call("GET", "/pattern-languages/{id}", "/pattern-languages/ops-language", 200)
        call("PUT", "/pattern-languages/{id}", "/pattern-languages/ops-language", 200,
             json={"domainContext": "operations, revised"},
             headers={"If-Match": etag("/pattern-languages/ops-language")})

        for name in ["Alpha", "Beta", "Gamma"]:
            call("POST", "/pattern-languages/{id}/patterns",
                 "/pattern-languages/ops-language/patterns", 201,
                 json={"name": name, "sections": {"body": f"{name} body"}},
                 headers={"If-Match": etag("/pattern-languages/ops-language")})
        call("GET", "/pattern-languages/{id}/patterns",
             "/pattern-languages/ops-language/patterns", 200)
        call("GET", "/patterns/{id}", "/patterns/ops-language/alpha", 200)
        call("PUT", "/patterns/{id}", "/patterns/ops-language/alpha", 200,
             json={"sections": {"body": "alpha, revised"}},
             headers={"If-Match": etag("/patterns/ops-language/alpha")})

        rel = call("POST", "/pattern-languages/{id}/relations",
                   "/pattern-languages/ops-language/relations", 201,
                   json={"sourcePatternId": "ops-language/alpha",
                         "targetPatternId": "ops-language/beta",
                         "type": "refines"},
                   headers={"If-Match": etag("/pattern-languages/ops-language")}).json()
        call("GET", "/pattern-languages/{id}/relations",
             "/pattern-languages/ops-language/relations", 200)

        call("POST", "/pattern-views", "/pattern-views", 201,
             json={"name": "Ops Board", "context": "rollout planning"})
        call("POST", "/pattern-views", "/pattern-views", 201,
             json={"name": "Disposable Board", "context": "scratch"})
        call("GET", "/pattern-views", "/pattern-views", 200)
        call("GET", "/pattern-views/{id}", "/pattern-views/ops-board", 200)
        call("PUT", "/pattern-views/{id}", "/pattern-views/ops-board", 200,
             json={"context": "rollout planning, revised"},
             headers={"If-Match": etag("/pattern-views/ops-board")})

        for ref in ["ops-language/alpha", "ops-language/beta", "ops-language/gamma"]:
            call("POST", "/pattern-views/{id}/patterns/{patternId}",
                 f"/pattern-views/ops-board/patterns/{ref}", 200,
                 headers={"If-Match": etag("/pattern-views/ops-board")})
        call("POST", "/pattern-views/{id}/referenced-relations",
             "/pattern-views/ops-board/referenced-relations", 200,
             json={"relationId": rel["id"]},
             headers={"If-Match": etag("/pattern-views/ops-board")})
        call("POST", "/pattern-views/{id}/relations",
             "/pattern-views/ops-board/relations", 201,
             json={"sourcePatternId": "ops-language/beta",
                   "targetPatternId": "ops-language/gamma",
                   "type": "uses"},
             headers={"If-Match": etag("/pattern-views/ops-board")})

        call("GET", "/pattern-views/{id}/graph",
             "/pattern-views/ops-board/graph?layout=seed:3", 200)
        call("GET", "/pattern-views/{id}/neighborhood",
             "/pattern-views/ops-board/neighborhood?depth=2", 200)
        call("GET", "/pattern-views/{id}/diagnostics",
             "/pattern-views/ops-board/diagnostics", 200)

        # pinned refusals
        stale = call("PUT", "/pattern-views/{id}", "/pattern-views/ops-board", 409,
                     json={"context": "should not apply"},
                     headers={"If-Match": '"999"'})
        assert stale.json()["error"]["code"] == "VersionConflict"
        outside = call("POST", "/pattern-views/{id}/relations",
                       "/pattern-views/ops-board/relations", 422,
                       json={"sourcePatternId": "ops-language/alpha",
                             "targetPatternId": "cloud-computing-patterns/public-cloud",
                             "type": "uses"},
                       headers={"If-Match": etag("/pattern-views/ops-board")})
        assert outside.json()["error"]["code"] == "EndpointNotInView"

        # teardown legs: member removal, then the disposable entities
        call("DELETE", "/pattern-views/{id}/patterns/{patternId}",
             "/pattern-views/ops-board/patterns/ops-language/gamma?cascade=true", 200,
             headers={"If-Match": etag("/pattern-views/ops-board")})
        call("DELETE", "/pattern-views/{id}", "/pattern-views/disposable-board", 204,
             headers={"If-Match": etag("/pattern-views/disposable-board")})
        call("POST", "/pattern-languages/{id}/patterns",
             "/pattern-languages/disposable-language/patterns", 201,
             json={"name": "Short Lived", "sections": {"body": "x"}},
             headers={"If-Match": etag("/pattern-languages/disposable-language")})
        call("DELETE", "/patterns/{id}", "/patterns/disposable-language/short-lived", 204,
             headers={"If-Match": etag("/patterns/disposable-language/short-lived")})
        call("DELETE", "/pattern-languages/{id}", "/pattern-languages/disposable-language",
             204, headers={"If-Match": etag("/pattern-languages/disposable-language")})

        call("GET", "/export", "/export", 200)
    finally:
        store.close()

    assert remaining == set(), f"endpoints never exercised: {sorted(remaining)}"


# -- oracles and construction helpers ---------------------------------------


def _corpus_bundle_text():
    store = Store()
    try:
        repo = Repository(store)
        corpus.seed(repo)
        return repo.export_bundle_text()
    finally:
        store.close()


def _reachability_oracle(snapshot, view_id, depth):
    """Brute-force answer: undirected shortest paths from a virtual node
    wired to every member, computed by networkx."""
    members = set(snapshot.views[view_id].pattern_refs)
    if depth <= 0:
        return {}
    g = nx.Graph()
    g.add_nodes_from(snapshot.patterns)
    for rel in snapshot.relations.values():
        if rel.owner_kind != model.KIND_LANGUAGE:
            continue
        if rel.source_id == rel.target_id:
            continue
        if rel.source_id in snapshot.patterns and rel.target_id in snapshot.patterns:
            g.add_edge(rel.source_id, rel.target_id)
    virtual = "\x00virtual"
    g.add_node(virtual)
    for member in members:
        g.add_edge(virtual, member)
    lengths = nx.single_source_shortest_path_length(g, virtual, cutoff=depth + 1)
    return {
        node: dist - 1
        for node, dist in lengths.items()
        if node != virtual and node not in members and 1 <= dist - 1 <= depth
    }


def _check_witness_paths(snapshot, hits):
    members = set()
    for view in snapshot.views.values():
        members |= set(view.pattern_refs)
    adjacency = {}
    for rel in snapshot.relations.values():
        if rel.owner_kind != model.KIND_LANGUAGE:
            continue
        adjacency.setdefault(rel.source_id, set()).add(rel.target_id)
        adjacency.setdefault(rel.target_id, set()).add(rel.source_id)
    for hit in hits:
        assert hit.path[0] in members
        assert hit.path[-1] == hit.pattern_id
        assert len(hit.path) == hit.distance + 1
        for a, b in zip(hit.path, hit.path[1:]):
            assert b in adjacency.get(a, set())


def _defect_catalog():
    """One hand-built stored state per detectable defect."""

    def language(lang_id="lang", schema=(("body", True),), types=(("rel", True),)):
        return model.PatternLanguage(
            id=lang_id,
            name=lang_id,
            domain_context="x",
            section_schema=tuple(model.SectionSpec(n, r) for n, r in schema),
            relation_types=tuple(model.RelationType(n, d, "") for n, d in types),
        )

    def pattern(lang_id, slug, sections=None):
        return model.Pattern(
            id=f"{lang_id}/{slug}",
            language_id=lang_id,
            name=slug,
            sections={"body": "x"} if sections is None else sections,
        )

    def rel(owner_kind, owner_id, source, target, type_name="rel", directed=True):
        return model.Relation(
            id=model.relation_id(owner_id, source, type_name, target),
            owner_kind=owner_kind,
            owner_id=owner_id,
            source_id=source,
            target_id=target,
            type=type_name,
            directed=directed,
        )

    def snap(languages=(), patterns=(), relations=(), views=()):
        return model.Snapshot(
            languages={x.id: x for x in languages},
            patterns={x.id: x for x in patterns},
            relations={x.id: x for x in relations},
            views={x.id: x for x in views},
        )

    def view(members=(), referenced=(), context="c"):
        return model.PatternView(
            id="v",
            name="v",
            context=context,
            pattern_refs=frozenset(members),
            referenced_relation_ids=frozenset(referenced),
        )

    base = language()
    a, b = pattern("lang", "a"), pattern("lang", "b")
    second = language("other")
    foreign = pattern("other", "f")

    return {
        "DanglingEndpoint": snap(
            [base], [a], [rel(model.KIND_LANGUAGE, "lang", "lang/a", "lang/missing")]
        ),
        "DuplicateRelation": snap(
            [language(types=(("near", False),))],
            [a, b],
            [
                rel(model.KIND_LANGUAGE, "lang", "lang/a", "lang/b", "near", False),
                rel(model.KIND_LANGUAGE, "lang", "lang/b", "lang/a", "near", False),
            ],
        ),
        "EmptyContext": snap(views=[view(context="  ")]),
        "EndpointNotInView": snap(
            [base], [a, b],
            [rel(model.KIND_VIEW, "v", "lang/a", "lang/b")],
            [view(members=["lang/a"])],
        ),
        "ForeignSource": snap(
            [base, second], [a, foreign],
            [rel(model.KIND_LANGUAGE, "lang", "other/f", "lang/a")],
        ),
        "InvalidSchema": snap([language(schema=(("body", False),))]),
        "MissingSection": snap([base], [pattern("lang", "a", sections={})]),
        "OwnershipMismatch": snap(
            [base], [a, b], [rel(model.KIND_VIEW, "lang", "lang/a", "lang/b")]
        ),
        "SelfLoop": snap(
            [base], [a], [rel(model.KIND_LANGUAGE, "lang", "lang/a", "lang/a")]
        ),
        "UnknownRelationType": snap(
            [base], [a, b], [rel(model.KIND_LANGUAGE, "lang", "lang/a", "lang/b", "bogus")]
        ),
        "UnknownSection": snap(
            [base], [pattern("lang", "a", sections={"body": "x", "odd": "y"})]
        ),
    }
