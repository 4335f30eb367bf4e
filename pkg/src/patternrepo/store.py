"""Persistence: a sqlite-backed entity store plus the bundle format.

The store keeps every entity as a JSON row keyed by (kind, id) with an
integer version. Writers go through compare-and-set: an update names the
version it read, and loses with a version conflict if someone got there
first. A single connection guarded by a re-entrant lock serializes access;
transactions nest by depth counting so multi-step operations stay atomic.

Bundles are the interchange format: one JSON document holding every
language (with its patterns and language-owned relations embedded), every
view (with its view-owned relations embedded), and a manifest of counts.
Exports are canonical, so exporting, importing into an empty store, and
exporting again yields byte-identical text.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Iterator

from . import model
from .errors import (
    DuplicateIdError,
    NonEmptyStoreError,
    SchemaViolationError,
    UnknownEntityError,
    UnsupportedFormatVersionError,
    VersionConflictError,
)
from .jsonutil import canonical_json

BUNDLE_FORMAT_VERSION = 1

_SCHEMA = """
CREATE TABLE IF NOT EXISTS entities (
    kind TEXT NOT NULL,
    id TEXT NOT NULL,
    version INTEGER NOT NULL,
    body TEXT NOT NULL,
    PRIMARY KEY (kind, id)
)
"""


class Store:
    """Versioned entity storage over a single sqlite database.

    ``path`` may be a filesystem path or ":memory:". All public methods are
    safe to call from multiple threads.
    """

    def __init__(self, path: str = ":memory:"):
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.isolation_level = None
        self._depth = 0
        with self._lock:
            self._conn.execute(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    @contextmanager
    def transaction(self) -> Iterator[None]:
        """Run a block atomically. Nested uses join the outermost transaction."""
        with self._lock:
            outermost = self._depth == 0
            if outermost:
                self._conn.execute("BEGIN IMMEDIATE")
            self._depth += 1
            try:
                yield
            except BaseException:
                self._depth -= 1
                if outermost:
                    self._conn.execute("ROLLBACK")
                raise
            else:
                self._depth -= 1
                if outermost:
                    self._conn.execute("COMMIT")

    # -- row access ---------------------------------------------------

    def get(self, kind: str, entity_id: str) -> model.Entity | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT body FROM entities WHERE kind = ? AND id = ?",
                (kind, entity_id),
            ).fetchone()
        if row is None:
            return None
        return model.entity_from_dict(kind, json.loads(row[0]))

    def get_or_raise(self, kind: str, entity_id: str) -> model.Entity:
        entity = self.get(kind, entity_id)
        if entity is None:
            raise UnknownEntityError(f"no {kind} with id {entity_id!r}", subject=entity_id)
        return entity

    def exists(self, kind: str, entity_id: str) -> bool:
        with self._lock:
            row = self._conn.execute(
                "SELECT 1 FROM entities WHERE kind = ? AND id = ?",
                (kind, entity_id),
            ).fetchone()
        return row is not None

    def list(self, kind: str) -> list[model.Entity]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT body FROM entities WHERE kind = ? ORDER BY id",
                (kind,),
            ).fetchall()
        return [model.entity_from_dict(kind, json.loads(r[0])) for r in rows]

    def count(self, kind: str) -> int:
        with self._lock:
            (n,) = self._conn.execute(
                "SELECT COUNT(*) FROM entities WHERE kind = ?", (kind,)
            ).fetchone()
        return n

    def is_empty(self) -> bool:
        with self._lock:
            (n,) = self._conn.execute("SELECT COUNT(*) FROM entities").fetchone()
        return n == 0

    # -- writes -------------------------------------------------------

    def insert(self, entity: model.Entity) -> None:
        """Store a new entity. Fails if the (kind, id) slot is taken."""
        with self._lock, self.transaction():
            if self.exists(entity.kind, entity.id):
                raise DuplicateIdError(
                    f"{entity.kind} id {entity.id!r} already exists", subject=entity.id
                )
            self._write(entity)

    def replace(self, entity: model.Entity, expected_version: int) -> None:
        """Overwrite an entity, but only if its stored version still matches.

        The caller supplies the entity with the version already bumped; the
        check is against what the caller read before deciding to write.
        """
        with self._lock, self.transaction():
            current = self.get(entity.kind, entity.id)
            if current is None:
                raise UnknownEntityError(
                    f"no {entity.kind} with id {entity.id!r}", subject=entity.id
                )
            if current.version != expected_version:
                raise VersionConflictError(
                    f"{entity.kind} {entity.id!r} is at version {current.version}, "
                    f"not {expected_version}",
                    subject=entity.id,
                )
            self._write(entity)

    def delete(self, kind: str, entity_id: str, expected_version: int | None = None) -> None:
        """Remove an entity, optionally guarded by a version check."""
        with self._lock, self.transaction():
            current = self.get(kind, entity_id)
            if current is None:
                raise UnknownEntityError(f"no {kind} with id {entity_id!r}", subject=entity_id)
            if expected_version is not None and current.version != expected_version:
                raise VersionConflictError(
                    f"{kind} {entity_id!r} is at version {current.version}, "
                    f"not {expected_version}",
                    subject=entity_id,
                )
            self._conn.execute(
                "DELETE FROM entities WHERE kind = ? AND id = ?", (kind, entity_id)
            )

    def _write(self, entity: model.Entity) -> None:
        self._conn.execute(
            "INSERT OR REPLACE INTO entities (kind, id, version, body) VALUES (?, ?, ?, ?)",
            (entity.kind, entity.id, entity.version, json.dumps(entity.to_dict())),
        )

    # -- snapshots ----------------------------------------------------

    def snapshot(self) -> model.Snapshot:
        """Read-consistent copy of everything, for graph work and export."""
        with self._lock, self.transaction():
            return model.Snapshot(
                languages={e.id: e for e in self.list(model.KIND_LANGUAGE)},
                patterns={e.id: e for e in self.list(model.KIND_PATTERN)},
                relations={e.id: e for e in self.list(model.KIND_RELATION)},
                views={e.id: e for e in self.list(model.KIND_VIEW)},
            )


# -- bundles ----------------------------------------------------------


@dataclass
class ImportReport:
    """Outcome of a bundle import: what was created and what was tolerated."""

    languages: int = 0
    patterns: int = 0
    relations: int = 0
    views: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "created": {
                "languages": self.languages,
                "patterns": self.patterns,
                "relations": self.relations,
                "views": self.views,
            },
            "warnings": list(self.warnings),
        }


def _bundle_entity(entity: model.Entity) -> dict[str, Any]:
    data = entity.to_dict()
    data["version"] = 1
    return data


def export_bundle(snapshot: model.Snapshot) -> dict[str, Any]:
    """Assemble the interchange document for a snapshot.

    Entity versions are not part of the interchange contract; they are
    normalized to 1 so that equal content always yields equal bytes.
    """
    languages = []
    for language in sorted(snapshot.languages.values(), key=lambda e: e.id):
        entry = _bundle_entity(language)
        entry["patterns"] = [_bundle_entity(p) for p in snapshot.patterns_of(language.id)]
        entry["relations"] = [
            _bundle_entity(r)
            for r in snapshot.relations_owned_by(language.id)
            if r.owner_kind == model.KIND_LANGUAGE
        ]
        languages.append(entry)
    views = []
    for view in sorted(snapshot.views.values(), key=lambda e: e.id):
        entry = _bundle_entity(view)
        entry["relations"] = [
            _bundle_entity(r)
            for r in snapshot.relations_owned_by(view.id)
            if r.owner_kind == model.KIND_VIEW
        ]
        views.append(entry)
    return {
        "formatVersion": BUNDLE_FORMAT_VERSION,
        "languages": languages,
        "views": views,
        "manifest": {
            "languages": len(snapshot.languages),
            "patterns": len(snapshot.patterns),
            "relations": len(snapshot.relations),
            "views": len(snapshot.views),
        },
    }


def export_bundle_text(snapshot: model.Snapshot) -> str:
    return canonical_json(export_bundle(snapshot), indent=2)


class _BundleReader:
    """Validation and assembly for one import run."""

    def __init__(self, bundle: dict[str, Any], strict: bool):
        self.bundle = bundle
        self.strict = strict
        self.report = ImportReport()
        self.languages: dict[str, model.PatternLanguage] = {}
        self.patterns: dict[str, model.Pattern] = {}
        self.relations: dict[str, model.Relation] = {}
        self.views: dict[str, model.PatternView] = {}

    def fail(self, message: str) -> None:
        raise SchemaViolationError(message)

    def tolerate(self, message: str) -> bool:
        """In lenient mode record a warning and return True (caller skips)."""
        if self.strict:
            self.fail(message)
        self.report.warnings.append(message)
        return True

    def read(self) -> None:
        if not isinstance(self.bundle, dict):
            self.fail("bundle must be a JSON object")
        version = self.bundle.get("formatVersion")
        if version != BUNDLE_FORMAT_VERSION:
            raise UnsupportedFormatVersionError(
                f"bundle format version {version!r} is not supported "
                f"(expected {BUNDLE_FORMAT_VERSION})"
            )
        # Patterns of every language must be known before any relation is
        # looked at: a cross-language relation may point into a language
        # that appears later in the document.
        language_entries = list(self.bundle.get("languages", []))
        for entry in language_entries:
            self._read_language(entry)
        for entry in language_entries:
            for relation_entry in entry.get("relations", []):
                self._read_relation(
                    relation_entry, owner_kind=model.KIND_LANGUAGE, owner_id=entry["id"]
                )
        for entry in self.bundle.get("views", []):
            self._read_view(entry)

    def _read_language(self, entry: dict[str, Any]) -> None:
        try:
            language = model.PatternLanguage.from_dict(entry)
            language.validate()
        except Exception as exc:
            # Languages cannot be dropped leniently because everything
            # else hangs off them, so a bad one always aborts the import.
            self.fail(f"language entry {entry.get('id')!r} is invalid: {exc}")
            return
        if language.id in self.languages or language.id in self.views:
            self.fail(f"duplicate top-level id {language.id!r} in bundle")
        self.languages[language.id] = language
        for pattern_entry in entry.get("patterns", []):
            self._read_pattern(language, pattern_entry)

    def _read_pattern(self, language: model.PatternLanguage, entry: dict[str, Any]) -> None:
        try:
            pattern = model.Pattern.from_dict(entry)
        except (KeyError, TypeError) as exc:
            self.fail(f"malformed pattern entry under {language.id!r}: {exc}")
            return
        if pattern.language_id != language.id:
            self.fail(f"pattern {pattern.id!r} claims language {pattern.language_id!r}")
        if pattern.id != f"{language.id}/{model.slugify(pattern.name)}":
            self.fail(f"pattern id {pattern.id!r} does not match its name and language")
        if pattern.id in self.patterns:
            self.fail(f"duplicate pattern id {pattern.id!r} in bundle")
        problems = model.check_sections(language, pattern.sections)
        if problems:
            detail = "; ".join(msg for _, msg in problems)
            # In lenient mode the pattern is kept as written, warts and all.
            self.tolerate(f"pattern {pattern.id!r}: {detail}")
        self.patterns[pattern.id] = pattern

    def _read_view(self, entry: dict[str, Any]) -> None:
        try:
            view = model.PatternView.from_dict(entry)
        except (KeyError, TypeError) as exc:
            self.fail(f"malformed view entry: {exc}")
            return
        if view.id in self.views or view.id in self.languages:
            self.fail(f"duplicate top-level id {view.id!r} in bundle")
        if not view.context.strip():
            self.tolerate(f"view {view.id!r} has an empty context")
        refs = set(view.pattern_refs)
        for ref in sorted(refs):
            if ref not in self.patterns:
                if self.tolerate(f"view {view.id!r} references missing pattern {ref!r}"):
                    refs.discard(ref)
        referenced = set(view.referenced_relation_ids)
        for rel_id in sorted(referenced):
            relation = self.relations.get(rel_id)
            if relation is None or relation.owner_kind != model.KIND_LANGUAGE:
                if self.tolerate(
                    f"view {view.id!r} references missing language relation {rel_id!r}"
                ):
                    referenced.discard(rel_id)
                    continue
            if relation is not None and not (
                relation.source_id in refs and relation.target_id in refs
            ):
                if self.tolerate(
                    f"view {view.id!r} references relation {rel_id!r} whose "
                    "endpoints are not all members"
                ):
                    referenced.discard(rel_id)
        view = model.PatternView(
            id=view.id,
            name=view.name,
            context=view.context,
            pattern_refs=frozenset(refs),
            referenced_relation_ids=frozenset(referenced),
            version=1,
        )
        self.views[view.id] = view
        for relation_entry in entry.get("relations", []):
            self._read_relation(
                relation_entry,
                owner_kind=model.KIND_VIEW,
                owner_id=view.id,
                members=refs,
            )

    def _read_relation(
        self,
        entry: dict[str, Any],
        *,
        owner_kind: str,
        owner_id: str,
        members: set[str] | None = None,
    ) -> None:
        try:
            relation = model.Relation.from_dict(entry)
        except (KeyError, TypeError) as exc:
            self.fail(f"malformed relation entry under {owner_id!r}: {exc}")
            return
        if relation.owner_kind != owner_kind or relation.owner_id != owner_id:
            self.fail(f"relation {relation.id!r} owner does not match its position in the bundle")
        source = self.patterns.get(relation.source_id)
        target = self.patterns.get(relation.target_id)
        if source is None or target is None:
            missing = relation.source_id if source is None else relation.target_id
            if self.tolerate(f"relation {relation.id!r} endpoint {missing!r} is missing"):
                return
        if relation.source_id == relation.target_id:
            if self.tolerate(f"relation {relation.id!r} is a self-loop"):
                return
        rel_type = self._resolve_type(relation, source, target)
        if rel_type is None:
            if self.tolerate(
                f"relation {relation.id!r} has unknown type {relation.type!r}"
            ):
                return
        elif rel_type.directed != relation.directed:
            if self.tolerate(
                f"relation {relation.id!r} direction disagrees with type {relation.type!r}"
            ):
                return
        if owner_kind == model.KIND_LANGUAGE and source is not None:
            if source.language_id != owner_id:
                if self.tolerate(
                    f"relation {relation.id!r} source {relation.source_id!r} "
                    f"does not belong to language {owner_id!r}"
                ):
                    return
        if owner_kind == model.KIND_VIEW and members is not None:
            outside = [e for e in relation.endpoints() if e not in members]
            if outside:
                if self.tolerate(
                    f"relation {relation.id!r} endpoint {outside[0]!r} is not a view member"
                ):
                    return
        expected_id = model.relation_id(
            owner_id, relation.source_id, relation.type, relation.target_id
        )
        if relation.id != expected_id:
            self.fail(f"relation id {relation.id!r} does not encode its own definition")
        if relation.id in self.relations:
            self.fail(f"duplicate relation id {relation.id!r} in bundle")
        self.relations[relation.id] = relation

    def _resolve_type(
        self,
        relation: model.Relation,
        source: model.Pattern | None,
        target: model.Pattern | None,
    ) -> model.RelationType | None:
        candidate_languages = []
        if relation.owner_kind == model.KIND_LANGUAGE:
            owner = self.languages.get(relation.owner_id)
            if owner is not None:
                candidate_languages.append(owner)
        else:
            for endpoint in (source, target):
                if endpoint is not None:
                    lang = self.languages.get(endpoint.language_id)
                    if lang is not None and lang not in candidate_languages:
                        candidate_languages.append(lang)
        for lang in candidate_languages:
            found = lang.relation_type(relation.type)
            if found is not None:
                return found
        if relation.owner_kind == model.KIND_VIEW:
            for rel_type in model.GLOBAL_RELATION_TYPES:
                if rel_type.name == relation.type:
                    return rel_type
        return None


def import_bundle(store: Store, bundle: dict[str, Any], *, mode: str = "strict") -> ImportReport:
    """Load a bundle into an empty store.

    ``mode`` is "strict" (any schema problem aborts) or "lenient" (pattern
    content problems become warnings; unresolvable relations and references
    are dropped with warnings). Either way nothing is written unless the
    whole import goes through.
    """
    if mode not in ("strict", "lenient"):
        raise SchemaViolationError(f"unknown import mode {mode!r}")
    if not store.is_empty():
        raise NonEmptyStoreError("import target store is not empty")
    reader = _BundleReader(bundle, strict=(mode == "strict"))
    reader.read()
    with store.transaction():
        for language in reader.languages.values():
            store.insert(
                model.PatternLanguage.from_dict({**language.to_dict(), "version": 1})
            )
            reader.report.languages += 1
        for pattern in reader.patterns.values():
            store.insert(model.Pattern.from_dict({**pattern.to_dict(), "version": 1}))
            reader.report.patterns += 1
        for relation in reader.relations.values():
            store.insert(model.Relation.from_dict({**relation.to_dict(), "version": 1}))
            reader.report.relations += 1
        for view in reader.views.values():
            store.insert(view)
            reader.report.views += 1
    return reader.report
