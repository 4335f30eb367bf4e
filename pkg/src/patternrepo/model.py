"""Domain entities of the pattern repository.

A repository holds pattern languages, their patterns, typed relations
between patterns, and pattern views. A view names a problem context,
selects patterns across one or more languages, adopts language relations
whose endpoints it contains, and may define extra view-owned relations that
are only meaningful inside that context.

Entities are immutable values. Mutation happens by writing a replacement
through the store's compare-and-set, which bumps the version counter.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .errors import InvalidSchemaError

KIND_LANGUAGE = "language"
KIND_PATTERN = "pattern"
KIND_RELATION = "relation"
KIND_VIEW = "view"

SPAN_INTRA = "intra-language"
SPAN_CROSS = "cross-language"
OWNERSHIP_LANGUAGE = "language-owned"
OWNERSHIP_VIEW = "view-owned"

_SLUG_RE = re.compile(r"^[a-z0-9]+(?:-[a-z0-9]+)*$")
_NON_SLUG_RE = re.compile(r"[^a-z0-9]+")


def slugify(name: str) -> str:
    """Derive a lowercase kebab-case identifier from a display name."""
    slug = _NON_SLUG_RE.sub("-", name.lower()).strip("-")
    if not slug:
        raise InvalidSchemaError(f"name {name!r} does not yield a usable identifier")
    return slug


def is_slug(value: str) -> bool:
    return bool(_SLUG_RE.match(value))


def pattern_id(language_id: str, name: str) -> str:
    return f"{language_id}/{slugify(name)}"


def relation_id(owner_id: str, source_id: str, rel_type: str, target_id: str) -> str:
    """Deterministic relation identity.

    Relations are equal on (owner, source, type, target), so the id encodes
    exactly that tuple. The separator never occurs in slugs or pattern ids.
    """
    return f"{owner_id}~{source_id}~{rel_type}~{target_id}"


def canonical_endpoints(
    source_id: str,
    target_id: str,
    *,
    directed: bool,
    owner_kind: str,
    source_language_id: str,
    target_language_id: str,
) -> tuple[str, str]:
    """Canonical endpoint order for storage, equality, and export.

    Directed relations keep the given order. Undirected relations are sorted
    lexicographically, except that a language-owned cross-language relation
    keeps the documenting language's pattern in the source slot (source-side
    ownership would otherwise be violated by the swap).
    """
    if directed:
        return source_id, target_id
    if owner_kind == KIND_LANGUAGE and source_language_id != target_language_id:
        return source_id, target_id
    if source_id <= target_id:
        return source_id, target_id
    return target_id, source_id


@dataclass(frozen=True)
class SectionSpec:
    """One entry of a language's section schema."""

    name: str
    required: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "required": self.required}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SectionSpec":
        return cls(name=data["name"], required=bool(data.get("required", False)))


@dataclass(frozen=True)
class RelationType:
    """A named relation semantic; directedness is fixed per type."""

    name: str
    directed: bool
    description: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "directed": self.directed, "description": self.description}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RelationType":
        return cls(
            name=data["name"],
            directed=bool(data["directed"]),
            description=data.get("description", ""),
        )


# Vocabulary available to view-owned relations in addition to the types
# declared by the endpoint languages. Views connect patterns whose home
# languages never anticipated each other, so a small shared vocabulary is
# needed for edges no language declares.
GLOBAL_RELATION_TYPES: tuple[RelationType, ...] = (
    RelationType("alternative-to", False, "The two patterns solve the same problem differently"),
    RelationType("implements", True, "The source realizes the target's solution as part of its own"),
    RelationType("uses", True, "The source employs the target to fulfil its responsibility"),
)


@dataclass(frozen=True)
class PatternLanguage:
    """A named domain with a section schema and a relation-type vocabulary."""

    id: str
    name: str
    domain_context: str
    section_schema: tuple[SectionSpec, ...]
    relation_types: tuple[RelationType, ...]
    version: int = 1

    kind = KIND_LANGUAGE

    def validate(self) -> None:
        """Raise InvalidSchemaError unless the language definition is sound."""
        if not self.id or not is_slug(self.id):
            raise InvalidSchemaError(f"language id {self.id!r} is not a slug", subject=self.id)
        if not self.name.strip():
            raise InvalidSchemaError("language name must be non-empty", subject=self.id)
        if not self.domain_context.strip():
            raise InvalidSchemaError("language needs a domain context", subject=self.id)
        section_names = [s.name for s in self.section_schema]
        if len(set(section_names)) != len(section_names):
            raise InvalidSchemaError("duplicate section names in schema", subject=self.id)
        if not any(s.required for s in self.section_schema):
            raise InvalidSchemaError("section schema needs at least one required section", subject=self.id)
        if any(not s.name.strip() for s in self.section_schema):
            raise InvalidSchemaError("section names must be non-empty", subject=self.id)
        type_names = [t.name for t in self.relation_types]
        if len(set(type_names)) != len(type_names):
            raise InvalidSchemaError("duplicate relation type names", subject=self.id)
        for t in self.relation_types:
            if not t.name or not is_slug(t.name):
                raise InvalidSchemaError(f"relation type name {t.name!r} is not a slug", subject=self.id)

    def relation_type(self, name: str) -> RelationType | None:
        for t in self.relation_types:
            if t.name == name:
                return t
        return None

    def section_names(self) -> set[str]:
        return {s.name for s in self.section_schema}

    def required_sections(self) -> list[str]:
        return [s.name for s in self.section_schema if s.required]

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "domainContext": self.domain_context,
            "sectionSchema": [s.to_dict() for s in self.section_schema],
            "relationTypes": [t.to_dict() for t in sorted(self.relation_types, key=lambda t: t.name)],
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PatternLanguage":
        return cls(
            id=data["id"],
            name=data["name"],
            domain_context=data["domainContext"],
            section_schema=tuple(SectionSpec.from_dict(s) for s in data["sectionSchema"]),
            relation_types=tuple(RelationType.from_dict(t) for t in data["relationTypes"]),
            version=int(data.get("version", 1)),
        )


@dataclass(frozen=True)
class Pattern:
    """A structured textual document anchored in exactly one language.

    Sections are a mapping from section name to markdown text; the display
    order of sections is defined by the owning language's schema, not by the
    mapping itself.
    """

    id: str
    language_id: str
    name: str
    sections: dict[str, str]
    icon_ref: str | None = None
    version: int = 1

    kind = KIND_PATTERN

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "languageId": self.language_id,
            "name": self.name,
            "sections": dict(self.sections),
            "iconRef": self.icon_ref,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Pattern":
        return cls(
            id=data["id"],
            language_id=data["languageId"],
            name=data["name"],
            sections=dict(data["sections"]),
            icon_ref=data.get("iconRef"),
            version=int(data.get("version", 1)),
        )


@dataclass(frozen=True)
class Relation:
    """A typed, optionally directed edge between two patterns.

    Owned either by a language (the one whose pattern description documents
    it; its source pattern belongs to that language) or by a view (both
    endpoints are members of that view).
    """

    id: str
    owner_kind: str
    owner_id: str
    source_id: str
    target_id: str
    type: str
    directed: bool
    description: str = ""
    version: int = 1

    kind = KIND_RELATION

    def endpoints(self) -> tuple[str, str]:
        return self.source_id, self.target_id

    def touches(self, pattern_id: str) -> bool:
        return pattern_id in (self.source_id, self.target_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "owner": {"kind": self.owner_kind, "id": self.owner_id},
            "sourcePatternId": self.source_id,
            "targetPatternId": self.target_id,
            "type": self.type,
            "directed": self.directed,
            "description": self.description,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Relation":
        owner = data["owner"]
        return cls(
            id=data["id"],
            owner_kind=owner["kind"],
            owner_id=owner["id"],
            source_id=data["sourcePatternId"],
            target_id=data["targetPatternId"],
            type=data["type"],
            directed=bool(data["directed"]),
            description=data.get("description", ""),
            version=int(data.get("version", 1)),
        )


@dataclass(frozen=True)
class PatternView:
    """A named context plus pattern membership and adopted language relations.

    View-owned relations are not stored on the view; they are the relations
    whose owner is the view, so creating one never touches the view entity
    itself. ``referencedRelationIds`` is the explicit selection of
    language-owned relations adopted into the view.
    """

    id: str
    name: str
    context: str
    pattern_refs: frozenset[str] = frozenset()
    referenced_relation_ids: frozenset[str] = frozenset()
    version: int = 1

    kind = KIND_VIEW

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "context": self.context,
            "patternRefs": sorted(self.pattern_refs),
            "referencedRelationIds": sorted(self.referenced_relation_ids),
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PatternView":
        return cls(
            id=data["id"],
            name=data["name"],
            context=data["context"],
            pattern_refs=frozenset(data.get("patternRefs", ())),
            referenced_relation_ids=frozenset(data.get("referencedRelationIds", ())),
            version=int(data.get("version", 1)),
        )


@dataclass(frozen=True)
class RelationClass:
    """Classification of a relation: language span and ownership."""

    span: str
    ownership: str

    def to_dict(self) -> dict[str, str]:
        return {"span": self.span, "ownership": self.ownership}


Entity = PatternLanguage | Pattern | Relation | PatternView

_KIND_TYPES = {
    KIND_LANGUAGE: PatternLanguage,
    KIND_PATTERN: Pattern,
    KIND_RELATION: Relation,
    KIND_VIEW: PatternView,
}


def entity_from_dict(kind: str, data: Mapping[str, Any]) -> Entity:
    return _KIND_TYPES[kind].from_dict(data)


def check_sections(language: PatternLanguage, sections: Mapping[str, str]) -> list[tuple[str, str]]:
    """Compare a section mapping against the language's schema.

    Returns (code, message) pairs; codes are MissingSection and
    UnknownSection. Empty means the sections conform.
    """
    problems: list[tuple[str, str]] = []
    for name in language.required_sections():
        text = sections.get(name)
        if text is None or not str(text).strip():
            problems.append(("MissingSection", f"required section {name!r} is missing or empty"))
    known = language.section_names()
    for name in sections:
        if name not in known:
            problems.append(("UnknownSection", f"section {name!r} is not part of the schema"))
    return problems


@dataclass(frozen=True)
class Snapshot:
    """An immutable view of the whole repository at one point in time.

    Graph construction and validation are pure functions over snapshots, so
    they can run concurrently and tests can build arbitrary states,
    including invalid ones the store would never accept.
    """

    languages: dict[str, PatternLanguage] = field(default_factory=dict)
    patterns: dict[str, Pattern] = field(default_factory=dict)
    relations: dict[str, Relation] = field(default_factory=dict)
    views: dict[str, PatternView] = field(default_factory=dict)

    def relations_owned_by(self, owner_id: str) -> list[Relation]:
        return sorted(
            (r for r in self.relations.values() if r.owner_id == owner_id),
            key=lambda r: r.id,
        )

    def view_relation_ids(self, view_id: str) -> list[str]:
        return [r.id for r in self.relations_owned_by(view_id) if r.owner_kind == KIND_VIEW]

    def patterns_of(self, language_id: str) -> list[Pattern]:
        return sorted(
            (p for p in self.patterns.values() if p.language_id == language_id),
            key=lambda p: p.id,
        )

    def language_of(self, pattern_ref: str) -> str | None:
        pattern = self.patterns.get(pattern_ref)
        return pattern.language_id if pattern else None


def classify(snapshot: Snapshot, relation: Relation) -> RelationClass:
    """Classify a relation by span and ownership.

    The span compares the endpoint patterns' home languages; endpoints must
    resolve in the snapshot.
    """
    source_lang = snapshot.language_of(relation.source_id)
    target_lang = snapshot.language_of(relation.target_id)
    span = SPAN_INTRA if source_lang == target_lang else SPAN_CROSS
    ownership = OWNERSHIP_LANGUAGE if relation.owner_kind == KIND_LANGUAGE else OWNERSHIP_VIEW
    return RelationClass(span=span, ownership=ownership)
