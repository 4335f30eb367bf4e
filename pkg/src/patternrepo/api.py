"""HTTP service over the repository.

The surface is deliberately plain: JSON in, canonical JSON out, entity
versions exposed as ETags. Every request that changes an existing entity
must name the version it read via If-Match; a stale version is answered
with 409 rather than silently overwriting someone else's change.

Request bodies are parsed by hand instead of through response models so
the error contract stays ours: syntactically broken bodies are 400 with
code MalformedBody, structurally wrong ones are 422 with a domain code.
"""

from __future__ import annotations

import json
from typing import Any, Callable

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from . import graph as graphmod
from .errors import (
    MalformedBodyError,
    MissingPreconditionError,
    RepositoryError,
    SchemaViolationError,
    VersionConflictError,
)
from .jsonutil import canonical_json
from .repository import Repository
from .store import Store

# Where each error code lands on the wire. Codes missing here fall back
# to 500, which would be a bug worth hearing about loudly.
STATUS_BY_CODE = {
    "MalformedBody": 400,
    "NotFound": 404,
    "UnknownEntity": 404,
    "UnknownLanguage": 404,
    "VersionConflict": 409,
    "DuplicateId": 409,
    "DuplicateRelation": 409,
    "AlreadyMember": 409,
    "NonEmptyStore": 409,
    "WouldOrphanRelations": 409,
    "InvalidSchema": 422,
    "SchemaViolation": 422,
    "IntegrityViolation": 422,
    "ForeignSource": 422,
    "UnknownRelationType": 422,
    "SelfLoop": 422,
    "EmptyContext": 422,
    "NotLanguageOwned": 422,
    "EndpointNotInView": 422,
    "NegativeDepth": 422,
    "UnsupportedFormat": 422,
    "UnsupportedFormatVersion": 422,
    "MissingPrecondition": 428,
    "Unauthorized": 401,
}


def _page(items: list, request: Request) -> list:
    """Apply ?offset=&limit= to a listing. Absent params mean everything."""
    try:
        offset = int(request.query_params.get("offset", "0"))
        raw_limit = request.query_params.get("limit")
        limit = int(raw_limit) if raw_limit is not None else None
    except ValueError:
        raise MalformedBodyError("offset and limit must be integers") from None
    if offset < 0 or (limit is not None and limit < 0):
        raise MalformedBodyError("offset and limit must be non-negative")
    end = offset + limit if limit is not None else None
    return items[offset:end]


def _respond(data: Any, status: int = 200, etag: int | None = None) -> Response:
    headers = {}
    if etag is not None:
        headers["ETag"] = f'"{etag}"'
    return Response(
        content=canonical_json(data),
        status_code=status,
        media_type="application/json",
        headers=headers,
    )


def _error_response(exc: RepositoryError) -> Response:
    status = STATUS_BY_CODE.get(exc.code, 500)
    body = {"error": {"code": exc.code, "message": exc.message, "subject": exc.subject}}
    return Response(
        content=canonical_json(body), status_code=status, media_type="application/json"
    )


async def _read_json(request: Request) -> dict[str, Any]:
    raw = await request.body()
    if not raw:
        raise MalformedBodyError("request body is empty")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedBodyError(f"request body is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedBodyError("request body must be a JSON object")
    return data


def _field(
    data: dict[str, Any],
    name: str,
    kind: type | tuple[type, ...] = str,
    *,
    required: bool = True,
    default: Any = None,
) -> Any:
    if name not in data:
        if required:
            raise SchemaViolationError(f"body field {name!r} is required")
        return default
    value = data[name]
    if not isinstance(value, kind):
        raise SchemaViolationError(f"body field {name!r} has the wrong type")
    return value


def _check_version(kind: str, entity_id: str, current: int, expected: int) -> None:
    """Precondition check for creates under a versioned parent.

    Creating a child does not bump the parent, but the caller still has to
    prove they saw the parent's current state.
    """
    if current != expected:
        raise VersionConflictError(
            f"{kind} {entity_id!r} is at version {current}, not {expected}",
            subject=entity_id,
        )


def _if_match(request: Request) -> int:
    raw = request.headers.get("if-match")
    if raw is None:
        raise MissingPreconditionError(
            "this request changes existing state; send If-Match with the "
            "version you last read"
        )
    value = raw.strip()
    if value.startswith("W/"):
        value = value[2:].strip()
    value = value.strip('"')
    try:
        return int(value)
    except ValueError:
        raise MalformedBodyError(f"If-Match value {raw!r} is not a version") from None


def create_app(store: Store, *, auth_token: str | None = None) -> FastAPI:
    """Build the service around one store.

    ``auth_token``, when set, turns on the bearer-token hook: every request
    must carry ``Authorization: Bearer <token>``. Left unset the service is
    open, which is the default deployment.
    """
    app = FastAPI(title="pattern repository", docs_url=None, redoc_url=None)
    repo = Repository(store)
    app.state.repo = repo
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["ETag"],
    )

    if auth_token is not None:

        @app.middleware("http")
        async def _require_bearer(request: Request, call_next: Callable) -> Response:
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {auth_token}":
                body = {
                    "error": {
                        "code": "Unauthorized",
                        "message": "missing or wrong bearer token",
                        "subject": None,
                    }
                }
                return Response(
                    content=canonical_json(body),
                    status_code=401,
                    media_type="application/json",
                )
            return await call_next(request)

    @app.exception_handler(RepositoryError)
    async def _on_repository_error(_request: Request, exc: RepositoryError) -> Response:
        return _error_response(exc)

    # -- languages ------------------------------------------------------

    @app.get("/pattern-languages")
    async def list_languages(request: Request) -> Response:
        return _respond(_page([lang.to_dict() for lang in repo.list_languages()], request))

    @app.post("/pattern-languages")
    async def create_language(request: Request) -> Response:
        data = await _read_json(request)
        language = repo.create_language(
            _field(data, "name"),
            _field(data, "domainContext"),
            section_schema=_field(data, "sectionSchema", list),
            relation_types=_field(data, "relationTypes", list, required=False, default=[]),
            language_id=_field(data, "id", required=False),
        )
        return _respond(language.to_dict(), status=201, etag=language.version)

    @app.get("/pattern-languages/{language_id}")
    async def get_language(language_id: str) -> Response:
        language = repo.get_language(language_id)
        return _respond(language.to_dict(), etag=language.version)

    @app.put("/pattern-languages/{language_id}")
    async def update_language(language_id: str, request: Request) -> Response:
        expected = _if_match(request)
        data = await _read_json(request)
        language = repo.update_language(
            language_id,
            expected,
            name=_field(data, "name", required=False),
            domain_context=_field(data, "domainContext", required=False),
            section_schema=_field(data, "sectionSchema", list, required=False),
            relation_types=_field(data, "relationTypes", list, required=False),
        )
        return _respond(language.to_dict(), etag=language.version)

    @app.delete("/pattern-languages/{language_id}")
    async def delete_language(language_id: str, request: Request) -> Response:
        expected = _if_match(request)
        repo.delete_language(language_id, expected)
        return Response(status_code=204)

    # -- patterns ---------------------------------------------------------

    @app.get("/pattern-languages/{language_id}/patterns")
    async def list_patterns(language_id: str, request: Request) -> Response:
        return _respond(_page([p.to_dict() for p in repo.list_patterns(language_id)], request))

    @app.post("/pattern-languages/{language_id}/patterns")
    async def create_pattern(language_id: str, request: Request) -> Response:
        expected = _if_match(request)
        language = repo.get_language(language_id)
        _check_version("language", language_id, language.version, expected)
        data = await _read_json(request)
        sections = _field(data, "sections", dict)
        pattern = repo.create_pattern(
            language_id,
            _field(data, "name"),
            sections,
            icon_ref=_field(data, "iconRef", required=False),
        )
        return _respond(pattern.to_dict(), status=201, etag=pattern.version)

    @app.get("/patterns/{pattern_ref:path}")
    async def get_pattern(pattern_ref: str) -> Response:
        pattern = repo.get_pattern(pattern_ref)
        return _respond(pattern.to_dict(), etag=pattern.version)

    @app.put("/patterns/{pattern_ref:path}")
    async def update_pattern(pattern_ref: str, request: Request) -> Response:
        expected = _if_match(request)
        data = await _read_json(request)
        icon_ref: Any = data.get("iconRef", ...) if "iconRef" in data else ...
        pattern = repo.update_pattern(
            pattern_ref,
            expected,
            sections=_field(data, "sections", dict, required=False),
            icon_ref=icon_ref,
        )
        return _respond(pattern.to_dict(), etag=pattern.version)

    @app.delete("/patterns/{pattern_ref:path}")
    async def delete_pattern(pattern_ref: str, request: Request) -> Response:
        expected = _if_match(request)
        repo.delete_pattern(pattern_ref, expected)
        return Response(status_code=204)

    # -- language relations -------------------------------------------------

    @app.get("/pattern-languages/{language_id}/relations")
    async def list_language_relations(language_id: str, request: Request) -> Response:
        return _respond(
            _page([r.to_dict() for r in repo.list_language_relations(language_id)], request)
        )

    @app.post("/pattern-languages/{language_id}/relations")
    async def create_language_relation(language_id: str, request: Request) -> Response:
        expected = _if_match(request)
        language = repo.get_language(language_id)
        _check_version("language", language_id, language.version, expected)
        data = await _read_json(request)
        relation = repo.add_language_relation(
            language_id,
            _field(data, "sourcePatternId"),
            _field(data, "targetPatternId"),
            _field(data, "type"),
            description=_field(data, "description", required=False, default=""),
        )
        return _respond(relation.to_dict(), status=201, etag=relation.version)

    # -- graph over a language (for browsing; views are the usual scope) ----

    @app.get("/pattern-languages/{language_id}/graph")
    async def language_graph(language_id: str, request: Request) -> Response:
        graph = repo.language_graph(language_id)
        return _respond(_graph_payload(graph, request.query_params.get("layout")))

    # -- views --------------------------------------------------------------

    @app.get("/pattern-views")
    async def list_views(request: Request) -> Response:
        return _respond(_page([v.to_dict() for v in repo.list_views()], request))

    @app.post("/pattern-views")
    async def create_view(request: Request) -> Response:
        data = await _read_json(request)
        view = repo.create_view(
            _field(data, "name"),
            _field(data, "context"),
            view_id=_field(data, "id", required=False),
        )
        return _respond(view.to_dict(), status=201, etag=view.version)

    @app.get("/pattern-views/{view_id}")
    async def get_view(view_id: str) -> Response:
        view = repo.get_view(view_id)
        return _respond(view.to_dict(), etag=view.version)

    @app.put("/pattern-views/{view_id}")
    async def update_view(view_id: str, request: Request) -> Response:
        expected = _if_match(request)
        data = await _read_json(request)
        view = repo.update_view(
            view_id,
            expected,
            name=_field(data, "name", required=False),
            context=_field(data, "context", required=False),
        )
        return _respond(view.to_dict(), etag=view.version)

    @app.delete("/pattern-views/{view_id}")
    async def delete_view(view_id: str, request: Request) -> Response:
        expected = _if_match(request)
        repo.delete_view(view_id, expected)
        return Response(status_code=204)

    @app.post("/pattern-views/{view_id}/patterns/{pattern_ref:path}")
    async def add_view_member(view_id: str, pattern_ref: str, request: Request) -> Response:
        expected = _if_match(request)
        view = repo.add_pattern_to_view(view_id, pattern_ref, expected)
        return _respond(view.to_dict(), etag=view.version)

    @app.delete("/pattern-views/{view_id}/patterns/{pattern_ref:path}")
    async def remove_view_member(
        view_id: str, pattern_ref: str, request: Request
    ) -> Response:
        expected = _if_match(request)
        cascade = request.query_params.get("cascade", "false").lower() in ("true", "1")
        view = repo.remove_pattern_from_view(view_id, pattern_ref, expected, cascade=cascade)
        return _respond(view.to_dict(), etag=view.version)

    @app.post("/pattern-views/{view_id}/referenced-relations")
    async def reference_relation(view_id: str, request: Request) -> Response:
        expected = _if_match(request)
        data = await _read_json(request)
        view = repo.reference_relation_in_view(
            view_id, _field(data, "relationId"), expected
        )
        return _respond(view.to_dict(), etag=view.version)

    @app.post("/pattern-views/{view_id}/relations")
    async def create_view_relation(view_id: str, request: Request) -> Response:
        expected = _if_match(request)
        view = repo.get_view(view_id)
        _check_version("view", view_id, view.version, expected)
        data = await _read_json(request)
        relation = repo.add_view_relation(
            view_id,
            _field(data, "sourcePatternId"),
            _field(data, "targetPatternId"),
            _field(data, "type"),
            description=_field(data, "description", required=False, default=""),
        )
        return _respond(relation.to_dict(), status=201, etag=relation.version)

    @app.get("/pattern-views/{view_id}/relations")
    async def list_view_relations(view_id: str) -> Response:
        return _respond([r.to_dict() for r in repo.view_relations(view_id)])

    @app.get("/pattern-views/{view_id}/graph")
    async def view_graph(view_id: str, request: Request) -> Response:
        graph = repo.view_graph(view_id)
        return _respond(_graph_payload(graph, request.query_params.get("layout")))

    @app.get("/pattern-views/{view_id}/neighborhood")
    async def view_neighborhood(view_id: str, request: Request) -> Response:
        raw_depth = request.query_params.get("depth", "1")
        try:
            depth = int(raw_depth)
        except ValueError:
            raise MalformedBodyError(f"depth {raw_depth!r} is not an integer") from None
        hits = repo.neighborhood(view_id, depth)
        return _respond(
            {"viewId": view_id, "depth": depth, "hits": [h.to_dict() for h in hits]}
        )

    @app.get("/pattern-views/{view_id}/diagnostics")
    async def view_diagnostics(view_id: str) -> Response:
        view = repo.get_view(view_id)
        snapshot = repo.snapshot()
        relevant = set(view.pattern_refs) | set(view.referenced_relation_ids) | {view_id}
        relevant |= {r.id for r in snapshot.relations_owned_by(view_id)}
        diagnostics = [
            d.to_dict() for d in graphmod.validate(snapshot) if d.subject in relevant
        ]
        return _respond({"viewId": view_id, "diagnostics": diagnostics})

    # -- bundles --------------------------------------------------------------

    @app.get("/export")
    async def export_bundle() -> Response:
        return Response(
            content=repo.export_bundle_text(), media_type="application/json"
        )

    @app.post("/import")
    async def import_bundle(request: Request) -> Response:
        mode = request.query_params.get("mode", "strict")
        data = await _read_json(request)
        report = repo.import_bundle(data, mode=mode)
        return _respond(report.to_dict())

    return app


def _graph_payload(graph: graphmod.PatternGraph, layout_param: str | None) -> dict[str, Any]:
    """Graph as JSON, with positions when a layout seed was asked for."""
    payload = graph.to_dict()
    if layout_param is not None:
        if not layout_param.startswith("seed:"):
            raise MalformedBodyError(
                f"layout {layout_param!r} is not of the form seed:<integer>"
            )
        try:
            seed = int(layout_param[len("seed:") :])
        except ValueError:
            raise MalformedBodyError(
                f"layout {layout_param!r} is not of the form seed:<integer>"
            ) from None
        result = graphmod.layout(graph, seed)
        payload["layout"] = result.to_dict()
    return payload
