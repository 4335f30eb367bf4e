"""The operation layer: every supported mutation and query, with its rules.

A Repository wraps a Store and enforces the domain invariants the store
itself does not know about: id derivation, section schemas, relation
typing and ownership, view membership, and the cascade rules for
deletion. Each operation runs in one transaction, so a failed rule check
leaves nothing half-written.

Version discipline: a mutation of an existing entity names the version the
caller last read (compare-and-set); creations do not. Apart from the force
and cascade variants, a successful mutation changes exactly one entity.
"""

from __future__ import annotations

from typing import Any, Iterable, Mapping, Sequence

from . import graph as graphmod
from . import model
from .errors import (
    AlreadyMemberError,
    DuplicateIdError,
    DuplicateRelationError,
    EmptyContextError,
    EndpointNotInViewError,
    ForeignSourceError,
    IntegrityViolationError,
    InvalidSchemaError,
    NotFoundError,
    NotLanguageOwnedError,
    SchemaViolationError,
    SelfLoopError,
    UnknownEntityError,
    UnknownLanguageError,
    UnknownRelationTypeError,
    WouldOrphanRelationsError,
)
from .store import ImportReport, Store, export_bundle, export_bundle_text, import_bundle


def _as_section_specs(items: Iterable[Any]) -> tuple[model.SectionSpec, ...]:
    out = []
    for item in items:
        if isinstance(item, model.SectionSpec):
            out.append(item)
        elif isinstance(item, Mapping):
            out.append(model.SectionSpec.from_dict(item))
        else:
            raise InvalidSchemaError(f"cannot read section spec from {item!r}")
    return tuple(out)


def _as_relation_types(items: Iterable[Any]) -> tuple[model.RelationType, ...]:
    out = []
    for item in items:
        if isinstance(item, model.RelationType):
            out.append(item)
        elif isinstance(item, Mapping):
            out.append(model.RelationType.from_dict(item))
        else:
            raise InvalidSchemaError(f"cannot read relation type from {item!r}")
    return tuple(out)


def _check_sections_or_raise(language: model.PatternLanguage, sections: Mapping[str, str]) -> None:
    problems = model.check_sections(language, sections)
    if problems:
        detail = "; ".join(msg for _, msg in problems)
        raise SchemaViolationError(detail)


class Repository:
    """Domain operations over one store."""

    def __init__(self, store: Store):
        self.store = store

    # -- snapshots and passthroughs ------------------------------------

    def snapshot(self) -> model.Snapshot:
        return self.store.snapshot()

    def validate(self) -> list[graphmod.Diagnostic]:
        return graphmod.validate(self.snapshot())

    def language_graph(self, language_id: str) -> graphmod.PatternGraph:
        snapshot = self.snapshot()
        if language_id not in snapshot.languages:
            raise NotFoundError(f"no language with id {language_id!r}", subject=language_id)
        return graphmod.build_language_graph(snapshot, language_id)

    def view_graph(self, view_id: str) -> graphmod.PatternGraph:
        snapshot = self.snapshot()
        if view_id not in snapshot.views:
            raise NotFoundError(f"no view with id {view_id!r}", subject=view_id)
        return graphmod.build_view_graph(snapshot, view_id)

    def neighborhood(self, view_id: str, depth: int) -> list[graphmod.NeighborHit]:
        snapshot = self.snapshot()
        if view_id not in snapshot.views:
            raise NotFoundError(f"no view with id {view_id!r}", subject=view_id)
        return graphmod.neighborhood(snapshot, view_id, depth)

    def export_bundle(self) -> dict[str, Any]:
        return export_bundle(self.snapshot())

    def export_bundle_text(self) -> str:
        return export_bundle_text(self.snapshot())

    def import_bundle(self, bundle: dict[str, Any], *, mode: str = "strict") -> ImportReport:
        return import_bundle(self.store, bundle, mode=mode)

    # -- id plumbing ----------------------------------------------------

    def _claim_top_level_id(self, entity_id: str) -> None:
        """Languages and views share one id namespace."""
        if self.store.exists(model.KIND_LANGUAGE, entity_id) or self.store.exists(
            model.KIND_VIEW, entity_id
        ):
            raise DuplicateIdError(f"id {entity_id!r} is already taken", subject=entity_id)

    # -- languages -------------------------------------------------------

    def create_language(
        self,
        name: str,
        domain_context: str,
        section_schema: Sequence[Any],
        relation_types: Sequence[Any] = (),
        *,
        language_id: str | None = None,
    ) -> model.PatternLanguage:
        language = model.PatternLanguage(
            id=language_id if language_id is not None else model.slugify(name),
            name=name,
            domain_context=domain_context,
            section_schema=_as_section_specs(section_schema),
            relation_types=_as_relation_types(relation_types),
        )
        language.validate()
        with self.store.transaction():
            self._claim_top_level_id(language.id)
            self.store.insert(language)
        return language

    def get_language(self, language_id: str) -> model.PatternLanguage:
        language = self.store.get(model.KIND_LANGUAGE, language_id)
        if language is None:
            raise NotFoundError(f"no language with id {language_id!r}", subject=language_id)
        return language

    def list_languages(self) -> list[model.PatternLanguage]:
        return self.store.list(model.KIND_LANGUAGE)

    def update_language(
        self,
        language_id: str,
        expected_version: int,
        *,
        name: str | None = None,
        domain_context: str | None = None,
        section_schema: Sequence[Any] | None = None,
        relation_types: Sequence[Any] | None = None,
    ) -> model.PatternLanguage:
        with self.store.transaction():
            current = self.get_language(language_id)
            updated = model.PatternLanguage(
                id=current.id,
                name=name if name is not None else current.name,
                domain_context=(
                    domain_context if domain_context is not None else current.domain_context
                ),
                section_schema=(
                    _as_section_specs(section_schema)
                    if section_schema is not None
                    else current.section_schema
                ),
                relation_types=(
                    _as_relation_types(relation_types)
                    if relation_types is not None
                    else current.relation_types
                ),
                version=current.version + 1,
            )
            updated.validate()
            if section_schema is not None:
                self._check_schema_change(updated)
            if relation_types is not None:
                self._check_vocabulary_change(updated)
            self.store.replace(updated, expected_version)
        return updated

    def _check_schema_change(self, language: model.PatternLanguage) -> None:
        """A schema change must not invalidate patterns already written."""
        snapshot = self.snapshot()
        for pattern in snapshot.patterns_of(language.id):
            problems = model.check_sections(language, pattern.sections)
            if problems:
                raise IntegrityViolationError(
                    f"schema change would invalidate pattern {pattern.id!r}: "
                    + "; ".join(msg for _, msg in problems),
                    subject=pattern.id,
                )

    def _check_vocabulary_change(self, language: model.PatternLanguage) -> None:
        """Relation types still in use cannot be removed or redirected."""
        snapshot = self.snapshot()
        for relation in snapshot.relations_owned_by(language.id):
            if relation.owner_kind != model.KIND_LANGUAGE:
                continue
            rel_type = language.relation_type(relation.type)
            if rel_type is None:
                raise IntegrityViolationError(
                    f"relation type {relation.type!r} is still used by {relation.id!r}",
                    subject=relation.id,
                )
            if rel_type.directed != relation.directed:
                raise IntegrityViolationError(
                    f"cannot flip direction of type {relation.type!r}; "
                    f"used by {relation.id!r}",
                    subject=relation.id,
                )

    def delete_language(
        self, language_id: str, expected_version: int, *, force: bool = False
    ) -> None:
        with self.store.transaction():
            current = self.get_language(language_id)
            if current.version != expected_version:
                # surface the conflict before any integrity complaints
                self.store.delete(model.KIND_LANGUAGE, language_id, expected_version)
            snapshot = self.snapshot()
            patterns = snapshot.patterns_of(language_id)
            owned = snapshot.relations_owned_by(language_id)
            if not force and (patterns or owned):
                raise IntegrityViolationError(
                    f"language {language_id!r} still has "
                    f"{len(patterns)} patterns and {len(owned)} relations",
                    subject=language_id,
                )
            if force:
                for pattern in patterns:
                    self._force_delete_pattern(snapshot, pattern.id)
                    snapshot = self.snapshot()
                for relation in self.snapshot().relations_owned_by(language_id):
                    self.store.delete(model.KIND_RELATION, relation.id)
            self.store.delete(model.KIND_LANGUAGE, language_id, expected_version)

    # -- patterns ---------------------------------------------------------

    def create_pattern(
        self,
        language_id: str,
        name: str,
        sections: Mapping[str, str],
        *,
        icon_ref: str | None = None,
    ) -> model.Pattern:
        with self.store.transaction():
            language = self.store.get(model.KIND_LANGUAGE, language_id)
            if language is None:
                raise UnknownLanguageError(
                    f"no language with id {language_id!r}", subject=language_id
                )
            _check_sections_or_raise(language, sections)
            pattern = model.Pattern(
                id=model.pattern_id(language_id, name),
                language_id=language_id,
                name=name,
                sections=dict(sections),
                icon_ref=icon_ref,
            )
            self.store.insert(pattern)
        return pattern

    def get_pattern(self, pattern_ref: str) -> model.Pattern:
        pattern = self.store.get(model.KIND_PATTERN, pattern_ref)
        if pattern is None:
            raise NotFoundError(f"no pattern with id {pattern_ref!r}", subject=pattern_ref)
        return pattern

    def list_patterns(self, language_id: str) -> list[model.Pattern]:
        self.get_language(language_id)
        return self.snapshot().patterns_of(language_id)

    def update_pattern(
        self,
        pattern_ref: str,
        expected_version: int,
        *,
        sections: Mapping[str, str] | None = None,
        icon_ref: Any = ...,
    ) -> model.Pattern:
        with self.store.transaction():
            current = self.get_pattern(pattern_ref)
            language = self.get_language(current.language_id)
            new_sections = dict(sections) if sections is not None else current.sections
            if sections is not None:
                _check_sections_or_raise(language, new_sections)
            updated = model.Pattern(
                id=current.id,
                language_id=current.language_id,
                name=current.name,
                sections=new_sections,
                icon_ref=current.icon_ref if icon_ref is ... else icon_ref,
                version=current.version + 1,
            )
            self.store.replace(updated, expected_version)
        return updated

    def delete_pattern(
        self, pattern_ref: str, expected_version: int, *, force: bool = False
    ) -> None:
        with self.store.transaction():
            current = self.get_pattern(pattern_ref)
            if current.version != expected_version:
                self.store.delete(model.KIND_PATTERN, pattern_ref, expected_version)
            snapshot = self.snapshot()
            incident = [r for r in snapshot.relations.values() if r.touches(pattern_ref)]
            member_of = [v for v in snapshot.views.values() if pattern_ref in v.pattern_refs]
            if not force and (incident or member_of):
                raise IntegrityViolationError(
                    f"pattern {pattern_ref!r} is used by {len(incident)} relations "
                    f"and {len(member_of)} views",
                    subject=pattern_ref,
                )
            if force:
                self._force_delete_pattern(snapshot, pattern_ref)
            else:
                self.store.delete(model.KIND_PATTERN, pattern_ref, expected_version)

    def _force_delete_pattern(self, snapshot: model.Snapshot, pattern_ref: str) -> None:
        """Cascade: drop incident relations, scrub views, remove the pattern."""
        incident = {r.id for r in snapshot.relations.values() if r.touches(pattern_ref)}
        for rel_id in sorted(incident):
            self.store.delete(model.KIND_RELATION, rel_id)
        for view in snapshot.views.values():
            keep_refs = view.pattern_refs - {pattern_ref}
            keep_rels = view.referenced_relation_ids - incident
            if keep_refs != view.pattern_refs or keep_rels != view.referenced_relation_ids:
                self.store.replace(
                    model.PatternView(
                        id=view.id,
                        name=view.name,
                        context=view.context,
                        pattern_refs=keep_refs,
                        referenced_relation_ids=keep_rels,
                        version=view.version + 1,
                    ),
                    view.version,
                )
        self.store.delete(model.KIND_PATTERN, pattern_ref)

    # -- language relations -------------------------------------------------

    def add_language_relation(
        self,
        language_id: str,
        source_ref: str,
        target_ref: str,
        type_name: str,
        *,
        description: str = "",
    ) -> model.Relation:
        with self.store.transaction():
            language = self.store.get(model.KIND_LANGUAGE, language_id)
            if language is None:
                raise UnknownLanguageError(
                    f"no language with id {language_id!r}", subject=language_id
                )
            source = self.store.get(model.KIND_PATTERN, source_ref)
            target = self.store.get(model.KIND_PATTERN, target_ref)
            if source is None:
                raise UnknownEntityError(f"no pattern with id {source_ref!r}", subject=source_ref)
            if target is None:
                raise UnknownEntityError(f"no pattern with id {target_ref!r}", subject=target_ref)
            if source_ref == target_ref:
                raise SelfLoopError("a relation cannot connect a pattern to itself")
            rel_type = language.relation_type(type_name)
            if rel_type is None:
                raise UnknownRelationTypeError(
                    f"language {language_id!r} declares no relation type {type_name!r}",
                    subject=type_name,
                )
            if source.language_id != language_id:
                raise ForeignSourceError(
                    f"source pattern {source_ref!r} belongs to {source.language_id!r}; "
                    f"a language documents relations from its own patterns only",
                    subject=source_ref,
                )
            src, tgt = model.canonical_endpoints(
                source_ref,
                target_ref,
                directed=rel_type.directed,
                owner_kind=model.KIND_LANGUAGE,
                source_language_id=source.language_id,
                target_language_id=target.language_id,
            )
            relation = model.Relation(
                id=model.relation_id(language_id, src, type_name, tgt),
                owner_kind=model.KIND_LANGUAGE,
                owner_id=language_id,
                source_id=src,
                target_id=tgt,
                type=type_name,
                directed=rel_type.directed,
                description=description,
            )
            if self.store.exists(model.KIND_RELATION, relation.id):
                raise DuplicateRelationError(
                    f"relation {relation.id!r} already exists", subject=relation.id
                )
            self.store.insert(relation)
        return relation

    def get_relation(self, relation_ref: str) -> model.Relation:
        relation = self.store.get(model.KIND_RELATION, relation_ref)
        if relation is None:
            raise NotFoundError(f"no relation with id {relation_ref!r}", subject=relation_ref)
        return relation

    def list_language_relations(self, language_id: str) -> list[model.Relation]:
        self.get_language(language_id)
        return [
            r
            for r in self.snapshot().relations_owned_by(language_id)
            if r.owner_kind == model.KIND_LANGUAGE
        ]

    def delete_relation(
        self, relation_ref: str, expected_version: int, *, force: bool = False
    ) -> None:
        with self.store.transaction():
            current = self.get_relation(relation_ref)
            if current.version != expected_version:
                self.store.delete(model.KIND_RELATION, relation_ref, expected_version)
            snapshot = self.snapshot()
            referencing = [
                v for v in snapshot.views.values() if relation_ref in v.referenced_relation_ids
            ]
            if referencing and not force:
                raise IntegrityViolationError(
                    f"relation {relation_ref!r} is referenced by "
                    f"{len(referencing)} views",
                    subject=relation_ref,
                )
            for view in referencing:
                self.store.replace(
                    model.PatternView(
                        id=view.id,
                        name=view.name,
                        context=view.context,
                        pattern_refs=view.pattern_refs,
                        referenced_relation_ids=view.referenced_relation_ids - {relation_ref},
                        version=view.version + 1,
                    ),
                    view.version,
                )
            self.store.delete(model.KIND_RELATION, relation_ref, expected_version)

    def classify_relation(self, relation_ref: str) -> model.RelationClass:
        snapshot = self.snapshot()
        relation = snapshot.relations.get(relation_ref)
        if relation is None:
            raise NotFoundError(f"no relation with id {relation_ref!r}", subject=relation_ref)
        return model.classify(snapshot, relation)

    # -- views -------------------------------------------------------------

    def create_view(
        self, name: str, context: str, *, view_id: str | None = None
    ) -> model.PatternView:
        if not context.strip():
            raise EmptyContextError("a view needs a non-empty context")
        if not name.strip():
            raise InvalidSchemaError("view name must be non-empty")
        view = model.PatternView(
            id=view_id if view_id is not None else model.slugify(name),
            name=name,
            context=context,
        )
        if not model.is_slug(view.id):
            raise InvalidSchemaError(f"view id {view.id!r} is not a slug", subject=view.id)
        with self.store.transaction():
            self._claim_top_level_id(view.id)
            self.store.insert(view)
        return view

    def get_view(self, view_id: str) -> model.PatternView:
        view = self.store.get(model.KIND_VIEW, view_id)
        if view is None:
            raise NotFoundError(f"no view with id {view_id!r}", subject=view_id)
        return view

    def list_views(self) -> list[model.PatternView]:
        return self.store.list(model.KIND_VIEW)

    def view_relations(self, view_id: str) -> list[model.Relation]:
        self.get_view(view_id)
        return [
            r
            for r in self.snapshot().relations_owned_by(view_id)
            if r.owner_kind == model.KIND_VIEW
        ]

    def update_view(
        self,
        view_id: str,
        expected_version: int,
        *,
        name: str | None = None,
        context: str | None = None,
    ) -> model.PatternView:
        with self.store.transaction():
            current = self.get_view(view_id)
            new_context = context if context is not None else current.context
            if not new_context.strip():
                raise EmptyContextError("a view needs a non-empty context", subject=view_id)
            updated = model.PatternView(
                id=current.id,
                name=name if name is not None else current.name,
                context=new_context,
                pattern_refs=current.pattern_refs,
                referenced_relation_ids=current.referenced_relation_ids,
                version=current.version + 1,
            )
            self.store.replace(updated, expected_version)
        return updated

    def delete_view(self, view_id: str, expected_version: int) -> None:
        """Deleting a view takes its own relations with it; nothing else."""
        with self.store.transaction():
            current = self.get_view(view_id)
            if current.version != expected_version:
                self.store.delete(model.KIND_VIEW, view_id, expected_version)
            for relation in self.snapshot().relations_owned_by(view_id):
                if relation.owner_kind == model.KIND_VIEW:
                    self.store.delete(model.KIND_RELATION, relation.id)
            self.store.delete(model.KIND_VIEW, view_id, expected_version)

    def add_pattern_to_view(
        self, view_id: str, pattern_ref: str, expected_version: int
    ) -> model.PatternView:
        with self.store.transaction():
            view = self.get_view(view_id)
            if not self.store.exists(model.KIND_PATTERN, pattern_ref):
                raise UnknownEntityError(
                    f"no pattern with id {pattern_ref!r}", subject=pattern_ref
                )
            if pattern_ref in view.pattern_refs:
                raise AlreadyMemberError(
                    f"pattern {pattern_ref!r} is already a member of {view_id!r}",
                    subject=pattern_ref,
                )
            updated = model.PatternView(
                id=view.id,
                name=view.name,
                context=view.context,
                pattern_refs=view.pattern_refs | {pattern_ref},
                referenced_relation_ids=view.referenced_relation_ids,
                version=view.version + 1,
            )
            self.store.replace(updated, expected_version)
        return updated

    def remove_pattern_from_view(
        self,
        view_id: str,
        pattern_ref: str,
        expected_version: int,
        *,
        cascade: bool = False,
    ) -> model.PatternView:
        with self.store.transaction():
            view = self.get_view(view_id)
            if pattern_ref not in view.pattern_refs:
                raise UnknownEntityError(
                    f"pattern {pattern_ref!r} is not a member of view {view_id!r}",
                    subject=pattern_ref,
                )
            snapshot = self.snapshot()
            touching_refs = {
                rel_id
                for rel_id in view.referenced_relation_ids
                if (rel := snapshot.relations.get(rel_id)) is not None
                and rel.touches(pattern_ref)
            }
            touching_owned = [
                r
                for r in snapshot.relations_owned_by(view_id)
                if r.owner_kind == model.KIND_VIEW and r.touches(pattern_ref)
            ]
            if (touching_refs or touching_owned) and not cascade:
                raise WouldOrphanRelationsError(
                    f"removing {pattern_ref!r} would orphan "
                    f"{len(touching_refs) + len(touching_owned)} relations in the view",
                    subject=pattern_ref,
                )
            for relation in touching_owned:
                self.store.delete(model.KIND_RELATION, relation.id)
            updated = model.PatternView(
                id=view.id,
                name=view.name,
                context=view.context,
                pattern_refs=view.pattern_refs - {pattern_ref},
                referenced_relation_ids=view.referenced_relation_ids - touching_refs,
                version=view.version + 1,
            )
            self.store.replace(updated, expected_version)
        return updated

    def reference_relation_in_view(
        self, view_id: str, relation_ref: str, expected_version: int
    ) -> model.PatternView:
        with self.store.transaction():
            view = self.get_view(view_id)
            relation = self.store.get(model.KIND_RELATION, relation_ref)
            if relation is None:
                raise UnknownEntityError(
                    f"no relation with id {relation_ref!r}", subject=relation_ref
                )
            if relation.owner_kind != model.KIND_LANGUAGE:
                raise NotLanguageOwnedError(
                    f"relation {relation_ref!r} is view-owned; only language "
                    "relations can be referenced",
                    subject=relation_ref,
                )
            if relation_ref in view.referenced_relation_ids:
                raise AlreadyMemberError(
                    f"relation {relation_ref!r} is already referenced by {view_id!r}",
                    subject=relation_ref,
                )
            for endpoint in relation.endpoints():
                if endpoint not in view.pattern_refs:
                    raise EndpointNotInViewError(
                        f"endpoint {endpoint!r} is not a member of view {view_id!r}",
                        subject=endpoint,
                    )
            updated = model.PatternView(
                id=view.id,
                name=view.name,
                context=view.context,
                pattern_refs=view.pattern_refs,
                referenced_relation_ids=view.referenced_relation_ids | {relation_ref},
                version=view.version + 1,
            )
            self.store.replace(updated, expected_version)
        return updated

    def add_view_relation(
        self,
        view_id: str,
        source_ref: str,
        target_ref: str,
        type_name: str,
        *,
        description: str = "",
    ) -> model.Relation:
        with self.store.transaction():
            view = self.get_view(view_id)
            snapshot = self.snapshot()
            source = snapshot.patterns.get(source_ref)
            target = snapshot.patterns.get(target_ref)
            if source is None:
                raise UnknownEntityError(f"no pattern with id {source_ref!r}", subject=source_ref)
            if target is None:
                raise UnknownEntityError(f"no pattern with id {target_ref!r}", subject=target_ref)
            for endpoint in (source_ref, target_ref):
                if endpoint not in view.pattern_refs:
                    raise EndpointNotInViewError(
                        f"endpoint {endpoint!r} is not a member of view {view_id!r}",
                        subject=endpoint,
                    )
            if source_ref == target_ref:
                raise SelfLoopError("a relation cannot connect a pattern to itself")
            rel_type = self._resolve_view_type(snapshot, source, target, type_name)
            if rel_type is None:
                raise UnknownRelationTypeError(
                    f"type {type_name!r} is declared neither by the endpoint "
                    "languages nor the shared vocabulary",
                    subject=type_name,
                )
            src, tgt = model.canonical_endpoints(
                source_ref,
                target_ref,
                directed=rel_type.directed,
                owner_kind=model.KIND_VIEW,
                source_language_id=source.language_id,
                target_language_id=target.language_id,
            )
            relation = model.Relation(
                id=model.relation_id(view_id, src, type_name, tgt),
                owner_kind=model.KIND_VIEW,
                owner_id=view_id,
                source_id=src,
                target_id=tgt,
                type=type_name,
                directed=rel_type.directed,
                description=description,
            )
            if self.store.exists(model.KIND_RELATION, relation.id):
                raise DuplicateRelationError(
                    f"relation {relation.id!r} already exists", subject=relation.id
                )
            self.store.insert(relation)
        return relation

    @staticmethod
    def _resolve_view_type(
        snapshot: model.Snapshot,
        source: model.Pattern,
        target: model.Pattern,
        type_name: str,
    ) -> model.RelationType | None:
        for lang_id in dict.fromkeys((source.language_id, target.language_id)):
            language = snapshot.languages.get(lang_id)
            if language is not None:
                found = language.relation_type(type_name)
                if found is not None:
                    return found
        for rel_type in model.GLOBAL_RELATION_TYPES:
            if rel_type.name == type_name:
                return rel_type
        return None
