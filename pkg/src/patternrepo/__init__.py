"""Pattern-language repository with composable, context-scoped pattern views."""

from .model import (
    GLOBAL_RELATION_TYPES,
    Pattern,
    PatternLanguage,
    PatternView,
    Relation,
    RelationType,
    SectionSpec,
    Snapshot,
)
from .repository import Repository
from .store import Store

__version__ = "0.1.0"

__all__ = [
    "GLOBAL_RELATION_TYPES",
    "Pattern",
    "PatternLanguage",
    "PatternView",
    "Relation",
    "RelationType",
    "Repository",
    "SectionSpec",
    "Snapshot",
    "Store",
    "__version__",
]
