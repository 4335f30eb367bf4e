"""Graph construction, validation, traversal, layout, and export.

Everything in this module is a pure function over a snapshot or a graph
value. Nodes and edges are emitted in sorted order and layout is driven by
an explicit seed, so every artifact produced here is byte-reproducible.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from math import sqrt
from typing import Any, Iterable, Mapping
from xml.sax.saxutils import escape, quoteattr

from . import model
from .errors import (
    NegativeDepthError,
    UnknownEntityError,
    UnsupportedFormatError,
)
from .jsonutil import canonical_json

DIAGNOSTIC_CODES = (
    "DanglingEndpoint",
    "DuplicateRelation",
    "EmptyContext",
    "EndpointNotInView",
    "ForeignSource",
    "InvalidSchema",
    "MissingSection",
    "OwnershipMismatch",
    "SelfLoop",
    "UnknownRelationType",
    "UnknownSection",
)

_WARNING_CODES = {"MissingSection", "UnknownSection"}

EXPORT_FORMATS = ("dot", "graphml", "canonical-json")


@dataclass(frozen=True)
class GraphNode:
    id: str
    label: str
    language_id: str
    external: bool = False
    icon_ref: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "label": self.label,
            "languageId": self.language_id,
            "external": self.external,
            "iconRef": self.icon_ref,
        }


@dataclass(frozen=True)
class GraphEdge:
    id: str
    source: str
    target: str
    type: str
    directed: bool
    span: str
    ownership: str
    description: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "source": self.source,
            "target": self.target,
            "type": self.type,
            "directed": self.directed,
            "span": self.span,
            "ownership": self.ownership,
            "description": self.description,
        }


@dataclass(frozen=True)
class PatternGraph:
    """A renderable graph scoped to one language or one view."""

    scope_kind: str
    scope_id: str
    nodes: tuple[GraphNode, ...]
    edges: tuple[GraphEdge, ...]

    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def to_dict(self) -> dict[str, Any]:
        return {
            "scope": {"kind": self.scope_kind, "id": self.scope_id},
            "nodes": [n.to_dict() for n in self.nodes],
            "edges": [e.to_dict() for e in self.edges],
        }


def graph_from_dict(data: Mapping[str, Any]) -> PatternGraph:
    nodes = tuple(
        GraphNode(
            id=n["id"],
            label=n["label"],
            language_id=n["languageId"],
            external=bool(n.get("external", False)),
            icon_ref=n.get("iconRef"),
        )
        for n in data["nodes"]
    )
    edges = tuple(
        GraphEdge(
            id=e["id"],
            source=e["source"],
            target=e["target"],
            type=e["type"],
            directed=bool(e["directed"]),
            span=e["span"],
            ownership=e["ownership"],
            description=e.get("description", ""),
        )
        for e in data["edges"]
    )
    scope = data["scope"]
    return PatternGraph(scope_kind=scope["kind"], scope_id=scope["id"], nodes=nodes, edges=edges)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    subject: str
    message: str

    def to_dict(self) -> dict[str, str]:
        return {
            "severity": self.severity,
            "code": self.code,
            "subject": self.subject,
            "message": self.message,
        }


def _diag(code: str, subject: str, message: str) -> Diagnostic:
    assert code in DIAGNOSTIC_CODES, code
    severity = "warning" if code in _WARNING_CODES else "error"
    return Diagnostic(severity=severity, code=code, subject=subject, message=message)


@dataclass(frozen=True)
class NeighborHit:
    """A non-member pattern reachable from a view within the depth bound."""

    pattern_id: str
    distance: int
    path: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "patternId": self.pattern_id,
            "distance": self.distance,
            "path": list(self.path),
        }


@dataclass(frozen=True)
class LayoutResult:
    seed: int
    positions: dict[str, tuple[float, float]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "positions": {
                node: {"x": x, "y": y} for node, (x, y) in sorted(self.positions.items())
            },
        }


# -- construction -----------------------------------------------------


def _edge_from_relation(snapshot: model.Snapshot, relation: model.Relation) -> GraphEdge:
    cls = model.classify(snapshot, relation)
    return GraphEdge(
        id=relation.id,
        source=relation.source_id,
        target=relation.target_id,
        type=relation.type,
        directed=relation.directed,
        span=cls.span,
        ownership=cls.ownership,
        description=relation.description,
    )


def _node_from_pattern(pattern: model.Pattern, *, external: bool) -> GraphNode:
    return GraphNode(
        id=pattern.id,
        label=pattern.name,
        language_id=pattern.language_id,
        external=external,
        icon_ref=pattern.icon_ref,
    )


def build_language_graph(snapshot: model.Snapshot, language_id: str) -> PatternGraph:
    """Graph of one language: its patterns and the relations it documents.

    A cross-language relation drags its foreign endpoint into the picture;
    that node is marked external so renderers can set it apart.
    """
    if language_id not in snapshot.languages:
        raise UnknownEntityError(f"no language with id {language_id!r}", subject=language_id)
    own = {p.id: p for p in snapshot.patterns_of(language_id)}
    edges = []
    foreign: dict[str, model.Pattern] = {}
    for relation in snapshot.relations_owned_by(language_id):
        if relation.owner_kind != model.KIND_LANGUAGE:
            continue
        edges.append(_edge_from_relation(snapshot, relation))
        for endpoint in relation.endpoints():
            if endpoint not in own:
                pattern = snapshot.patterns.get(endpoint)
                if pattern is not None:
                    foreign[endpoint] = pattern
    nodes = [_node_from_pattern(p, external=False) for p in own.values()]
    nodes += [_node_from_pattern(p, external=True) for p in foreign.values()]
    nodes.sort(key=lambda n: n.id)
    edges.sort(key=lambda e: e.id)
    return PatternGraph(
        scope_kind=model.KIND_LANGUAGE,
        scope_id=language_id,
        nodes=tuple(nodes),
        edges=tuple(edges),
    )


def build_view_graph(snapshot: model.Snapshot, view_id: str) -> PatternGraph:
    """Graph of one view: members, adopted language relations, own relations."""
    view = snapshot.views.get(view_id)
    if view is None:
        raise UnknownEntityError(f"no view with id {view_id!r}", subject=view_id)
    nodes = []
    for ref in sorted(view.pattern_refs):
        pattern = snapshot.patterns.get(ref)
        if pattern is not None:
            nodes.append(_node_from_pattern(pattern, external=False))
    edges = []
    for rel_id in sorted(view.referenced_relation_ids):
        relation = snapshot.relations.get(rel_id)
        if relation is not None:
            edges.append(_edge_from_relation(snapshot, relation))
    for relation in snapshot.relations_owned_by(view_id):
        if relation.owner_kind == model.KIND_VIEW:
            edges.append(_edge_from_relation(snapshot, relation))
    edges.sort(key=lambda e: e.id)
    return PatternGraph(
        scope_kind=model.KIND_VIEW,
        scope_id=view_id,
        nodes=tuple(nodes),
        edges=tuple(edges),
    )


# -- validation -------------------------------------------------------


def _resolve_relation_type(
    snapshot: model.Snapshot, relation: model.Relation
) -> model.RelationType | None:
    """Find the declaration a relation's type name refers to.

    Language-owned relations draw on the owning language's vocabulary.
    View-owned relations draw on both endpoint languages and the shared
    vocabulary, because no single language governs a view edge.
    """
    if relation.owner_kind == model.KIND_LANGUAGE:
        owner = snapshot.languages.get(relation.owner_id)
        return owner.relation_type(relation.type) if owner else None
    seen: list[str] = []
    for endpoint in relation.endpoints():
        lang_id = snapshot.language_of(endpoint)
        if lang_id is None or lang_id in seen:
            continue
        seen.append(lang_id)
        language = snapshot.languages.get(lang_id)
        if language is not None:
            found = language.relation_type(relation.type)
            if found is not None:
                return found
    for rel_type in model.GLOBAL_RELATION_TYPES:
        if rel_type.name == relation.type:
            return rel_type
    return None


def validate(snapshot: model.Snapshot) -> list[Diagnostic]:
    """Check every consistency rule over a snapshot.

    Returns diagnostics sorted by (code, subject, message). A clean
    repository returns an empty list. Codes are the closed set in
    DIAGNOSTIC_CODES; MissingSection and UnknownSection are warnings, the
    rest errors.
    """
    out: list[Diagnostic] = []

    for language in snapshot.languages.values():
        try:
            language.validate()
        except Exception as exc:
            out.append(_diag("InvalidSchema", language.id, str(exc)))

    for pattern in snapshot.patterns.values():
        language = snapshot.languages.get(pattern.language_id)
        if language is None:
            out.append(
                _diag(
                    "DanglingEndpoint",
                    pattern.id,
                    f"pattern {pattern.id!r} names missing language {pattern.language_id!r}",
                )
            )
            continue
        for code, message in model.check_sections(language, pattern.sections):
            out.append(_diag(code, pattern.id, message))

    seen_shapes: dict[tuple[str, str, frozenset[str] | tuple[str, str]], str] = {}
    for relation in sorted(snapshot.relations.values(), key=lambda r: r.id):
        owner_ok = False
        if relation.owner_kind == model.KIND_LANGUAGE:
            owner_ok = relation.owner_id in snapshot.languages
        elif relation.owner_kind == model.KIND_VIEW:
            owner_ok = relation.owner_id in snapshot.views
        if not owner_ok:
            out.append(
                _diag(
                    "OwnershipMismatch",
                    relation.id,
                    f"relation owner {relation.owner_kind} {relation.owner_id!r} does not resolve",
                )
            )
            continue

        dangling = False
        for endpoint in relation.endpoints():
            if endpoint not in snapshot.patterns:
                out.append(
                    _diag(
                        "DanglingEndpoint",
                        relation.id,
                        f"relation endpoint {endpoint!r} does not resolve to a pattern",
                    )
                )
                dangling = True
        if relation.source_id == relation.target_id:
            out.append(
                _diag("SelfLoop", relation.id, "relation connects a pattern to itself")
            )

        rel_type = _resolve_relation_type(snapshot, relation)
        if rel_type is None:
            out.append(
                _diag(
                    "UnknownRelationType",
                    relation.id,
                    f"type {relation.type!r} is not declared for this relation's scope",
                )
            )
        elif rel_type.directed != relation.directed:
            out.append(
                _diag(
                    "UnknownRelationType",
                    relation.id,
                    f"type {relation.type!r} is "
                    f"{'directed' if rel_type.directed else 'undirected'}, "
                    "but the relation says otherwise",
                )
            )

        if not dangling:
            if relation.directed:
                shape_key = (
                    relation.owner_id,
                    relation.type,
                    (relation.source_id, relation.target_id),
                )
            else:
                shape_key = (
                    relation.owner_id,
                    relation.type,
                    frozenset((relation.source_id, relation.target_id)),
                )
            earlier = seen_shapes.get(shape_key)
            if earlier is not None:
                out.append(
                    _diag(
                        "DuplicateRelation",
                        relation.id,
                        f"relation repeats {earlier!r} between the same patterns",
                    )
                )
            else:
                seen_shapes[shape_key] = relation.id

        if relation.owner_kind == model.KIND_LANGUAGE and not dangling:
            source_lang = snapshot.language_of(relation.source_id)
            if source_lang != relation.owner_id:
                out.append(
                    _diag(
                        "ForeignSource",
                        relation.id,
                        f"source pattern {relation.source_id!r} does not belong to "
                        f"owning language {relation.owner_id!r}",
                    )
                )
        if relation.owner_kind == model.KIND_VIEW:
            view = snapshot.views[relation.owner_id]
            for endpoint in relation.endpoints():
                if endpoint not in view.pattern_refs:
                    out.append(
                        _diag(
                            "EndpointNotInView",
                            relation.id,
                            f"endpoint {endpoint!r} is not a member of view "
                            f"{relation.owner_id!r}",
                        )
                    )

    for view in snapshot.views.values():
        if not view.context.strip():
            out.append(_diag("EmptyContext", view.id, "view has an empty context"))
        for ref in sorted(view.pattern_refs):
            if ref not in snapshot.patterns:
                out.append(
                    _diag(
                        "DanglingEndpoint",
                        view.id,
                        f"view member {ref!r} does not resolve to a pattern",
                    )
                )
        for rel_id in sorted(view.referenced_relation_ids):
            relation = snapshot.relations.get(rel_id)
            if relation is None:
                out.append(
                    _diag(
                        "DanglingEndpoint",
                        view.id,
                        f"referenced relation {rel_id!r} does not resolve",
                    )
                )
                continue
            if relation.owner_kind != model.KIND_LANGUAGE:
                out.append(
                    _diag(
                        "OwnershipMismatch",
                        view.id,
                        f"referenced relation {rel_id!r} is not language-owned",
                    )
                )
                continue
            for endpoint in relation.endpoints():
                if endpoint not in view.pattern_refs:
                    out.append(
                        _diag(
                            "EndpointNotInView",
                            view.id,
                            f"referenced relation {rel_id!r} endpoint {endpoint!r} "
                            "is not a member",
                        )
                    )

    out.sort(key=lambda d: (d.code, d.subject, d.message))
    return out


# -- traversal --------------------------------------------------------


def neighborhood(snapshot: model.Snapshot, view_id: str, depth: int) -> list[NeighborHit]:
    """Patterns just outside a view, found by bounded breadth-first search.

    Search starts from every member at distance 0 and walks language-owned
    relations in both directions (documented direction is about semantics,
    not reachability). Each non-member within ``depth`` hops is reported
    once, at its minimum distance, with one witness path from a member.
    Ties are broken by sorted order so repeated calls agree.
    """
    view = snapshot.views.get(view_id)
    if view is None:
        raise UnknownEntityError(f"no view with id {view_id!r}", subject=view_id)
    if depth < 0:
        raise NegativeDepthError(f"depth must be non-negative, got {depth}")

    adjacency: dict[str, set[str]] = {}
    for relation in snapshot.relations.values():
        if relation.owner_kind != model.KIND_LANGUAGE:
            continue
        a, b = relation.endpoints()
        if a not in snapshot.patterns or b not in snapshot.patterns or a == b:
            continue
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)

    members = {ref for ref in view.pattern_refs if ref in snapshot.patterns}
    parent: dict[str, str | None] = {m: None for m in members}
    distance: dict[str, int] = {m: 0 for m in members}
    queue: deque[str] = deque(sorted(members))
    while queue:
        current = queue.popleft()
        if distance[current] >= depth:
            continue
        for neighbor in sorted(adjacency.get(current, ())):
            if neighbor in distance:
                continue
            distance[neighbor] = distance[current] + 1
            parent[neighbor] = current
            queue.append(neighbor)

    hits = []
    for node, dist in distance.items():
        if node in members:
            continue
        path = [node]
        cursor: str | None = node
        while parent[cursor] is not None:
            cursor = parent[cursor]
            path.append(cursor)
        path.reverse()
        hits.append(NeighborHit(pattern_id=node, distance=dist, path=tuple(path)))
    hits.sort(key=lambda h: (h.distance, h.pattern_id))
    return hits


# -- layout -----------------------------------------------------------


def layout(graph: PatternGraph, seed: int, *, iterations: int = 60) -> LayoutResult:
    """Force-directed positions for a graph, reproducible from the seed.

    A plain Fruchterman-Reingold loop on the unit square: repulsion between
    every node pair, attraction along edges, displacement capped by a
    temperature that cools linearly. Positions are rounded so serialized
    output is stable across runs and platforms.
    """
    ids = [n.id for n in graph.nodes]
    if not ids:
        return LayoutResult(seed=seed, positions={})
    rng = random.Random(seed)
    pos = {node: [rng.random(), rng.random()] for node in ids}
    if len(ids) == 1:
        only = ids[0]
        return LayoutResult(seed=seed, positions={only: (0.5, 0.5)})

    k = sqrt(1.0 / len(ids))
    pairs = [(e.source, e.target) for e in graph.edges if e.source in pos and e.target in pos]
    temperature = 0.1
    cooling = temperature / (iterations + 1)
    for _ in range(iterations):
        disp = {node: [0.0, 0.0] for node in ids}
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                dx = pos[a][0] - pos[b][0]
                dy = pos[a][1] - pos[b][1]
                dist = sqrt(dx * dx + dy * dy) or 1e-9
                force = (k * k) / dist
                ux, uy = dx / dist, dy / dist
                disp[a][0] += ux * force
                disp[a][1] += uy * force
                disp[b][0] -= ux * force
                disp[b][1] -= uy * force
        for a, b in pairs:
            if a == b:
                continue
            dx = pos[a][0] - pos[b][0]
            dy = pos[a][1] - pos[b][1]
            dist = sqrt(dx * dx + dy * dy) or 1e-9
            force = (dist * dist) / k
            ux, uy = dx / dist, dy / dist
            disp[a][0] -= ux * force
            disp[a][1] -= uy * force
            disp[b][0] += ux * force
            disp[b][1] += uy * force
        for node in ids:
            dx, dy = disp[node]
            length = sqrt(dx * dx + dy * dy) or 1e-9
            step = min(length, temperature)
            pos[node][0] += (dx / length) * step
            pos[node][1] += (dy / length) * step
            pos[node][0] = min(1.0, max(0.0, pos[node][0]))
            pos[node][1] = min(1.0, max(0.0, pos[node][1]))
        temperature -= cooling
    return LayoutResult(
        seed=seed,
        positions={node: (round(x, 6), round(y, 6)) for node, (x, y) in pos.items()},
    )


# -- export -----------------------------------------------------------


def export_graph(
    graph: PatternGraph,
    fmt: str,
    positions: Mapping[str, tuple[float, float]] | None = None,
) -> str:
    """Serialize a graph as dot, graphml, or canonical JSON text.

    View-owned edges come out visually distinct (dashed in dot, an
    ownership attribute in graphml) so composed pictures show which arrows
    the view added on top of the languages.
    """
    if fmt == "dot":
        return _export_dot(graph, positions)
    if fmt == "graphml":
        return _export_graphml(graph, positions)
    if fmt == "canonical-json":
        data = graph.to_dict()
        if positions is not None:
            data["positions"] = {
                node: {"x": x, "y": y} for node, (x, y) in sorted(positions.items())
            }
        return canonical_json(data, indent=2)
    raise UnsupportedFormatError(
        f"unknown graph format {fmt!r}; expected one of {', '.join(EXPORT_FORMATS)}"
    )


def _dot_quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _export_dot(
    graph: PatternGraph, positions: Mapping[str, tuple[float, float]] | None
) -> str:
    lines = [f"digraph {_dot_quote(graph.scope_id)} {{"]
    lines.append("  node [shape=box];")
    for node in graph.nodes:
        attrs = [f"label={_dot_quote(node.label)}"]
        if node.external:
            attrs.append("style=dashed")
        if positions and node.id in positions:
            x, y = positions[node.id]
            attrs.append(f'pos="{x},{y}!"')
        lines.append(f"  {_dot_quote(node.id)} [{', '.join(attrs)}];")
    for edge in graph.edges:
        attrs = [f"label={_dot_quote(edge.type)}"]
        if not edge.directed:
            attrs.append("dir=none")
        if edge.ownership == model.OWNERSHIP_VIEW:
            attrs.append("style=dashed")
        lines.append(
            f"  {_dot_quote(edge.source)} -> {_dot_quote(edge.target)} "
            f"[{', '.join(attrs)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


_GRAPHML_KEYS = (
    ('<key id="label" for="node" attr.name="label" attr.type="string"/>'),
    ('<key id="languageId" for="node" attr.name="languageId" attr.type="string"/>'),
    ('<key id="external" for="node" attr.name="external" attr.type="boolean"/>'),
    ('<key id="x" for="node" attr.name="x" attr.type="double"/>'),
    ('<key id="y" for="node" attr.name="y" attr.type="double"/>'),
    ('<key id="type" for="edge" attr.name="type" attr.type="string"/>'),
    ('<key id="span" for="edge" attr.name="span" attr.type="string"/>'),
    ('<key id="ownership" for="edge" attr.name="ownership" attr.type="string"/>'),
)


def _export_graphml(
    graph: PatternGraph, positions: Mapping[str, tuple[float, float]] | None
) -> str:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
    ]
    lines += [f"  {key}" for key in _GRAPHML_KEYS]
    lines.append(f'  <graph id={quoteattr(graph.scope_id)} edgedefault="directed">')
    for node in graph.nodes:
        lines.append(f"    <node id={quoteattr(node.id)}>")
        lines.append(f'      <data key="label">{escape(node.label)}</data>')
        lines.append(f'      <data key="languageId">{escape(node.language_id)}</data>')
        lines.append(f'      <data key="external">{"true" if node.external else "false"}</data>')
        if positions and node.id in positions:
            x, y = positions[node.id]
            lines.append(f'      <data key="x">{x}</data>')
            lines.append(f'      <data key="y">{y}</data>')
        lines.append("    </node>")
    for edge in graph.edges:
        directed = "true" if edge.directed else "false"
        lines.append(
            f"    <edge id={quoteattr(edge.id)} source={quoteattr(edge.source)} "
            f'target={quoteattr(edge.target)} directed="{directed}">'
        )
        lines.append(f'      <data key="type">{escape(edge.type)}</data>')
        lines.append(f'      <data key="span">{escape(edge.span)}</data>')
        lines.append(f'      <data key="ownership">{escape(edge.ownership)}</data>')
        lines.append("    </edge>")
    lines.append("  </graph>")
    lines.append("</graphml>")
    return "\n".join(lines) + "\n"
