"""Command line interface.

Subcommands: import, export, validate, render, serve, corpus. Output meant
for machines (bundles, diagnostics, rendered graphs, reports) goes to
stdout; everything addressed to a person goes to stderr.

Exit codes: 0 success, 1 the data was found wanting (validation errors,
rejected imports), 2 usage or IO trouble.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import corpus as corpusmod
from . import graph as graphmod
from .errors import NotFoundError, RepositoryError
from .jsonutil import canonical_json
from .repository import Repository
from .store import Store

DEFAULT_DB = "patternrepo.db"
DEFAULT_PORT = 8000

_RENDER_FORMATS = {"dot": "dot", "graphml": "graphml", "json": "canonical-json"}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--db-path",
        default=argparse.SUPPRESS,
        help=f"sqlite database file (env PA_DB, default {DEFAULT_DB})",
    )

    parser = argparse.ArgumentParser(
        prog="patternrepo",
        description="Pattern-language repository with composable pattern views.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_import = sub.add_parser("import", parents=[common], help="load a bundle file")
    p_import.add_argument("bundle", help="path to a bundle JSON file")
    p_import.add_argument(
        "--lenient",
        action="store_true",
        help="tolerate content problems; drop unresolvable relations with warnings",
    )

    p_export = sub.add_parser("export", parents=[common], help="write the store as a bundle")
    p_export.add_argument("path", help="output file, or - for stdout")

    p_validate = sub.add_parser("validate", parents=[common], help="print diagnostics")
    p_validate.add_argument("--view", help="restrict to diagnostics touching one view")

    p_render = sub.add_parser("render", parents=[common], help="render a view graph to stdout")
    p_render.add_argument("--view", required=True, help="view id")
    p_render.add_argument("--format", required=True, choices=sorted(_RENDER_FORMATS))
    p_render.add_argument("--seed", type=int, help="layout seed; omit for no positions")

    p_serve = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p_serve.add_argument(
        "--port", type=int, default=None, help=f"listen port (env PA_PORT, default {DEFAULT_PORT})"
    )
    p_serve.add_argument("--corpus", metavar="BUNDLE", help="preload a bundle if the store is empty")
    p_serve.add_argument(
        "--auth-token",
        default=None,
        help="require Authorization: Bearer <token> on every request",
    )
    p_serve.add_argument(
        "--ui-dir", default=None, help="serve a static frontend build from this directory under /ui"
    )

    p_corpus = sub.add_parser("corpus", parents=[common], help="built-in example repository")
    p_corpus.add_argument("action", choices=["seed"], help="seed: install the corpus")

    return parser


def _db_path(args: argparse.Namespace) -> str:
    supplied = getattr(args, "db_path", None)
    return supplied or os.environ.get("PA_DB") or DEFAULT_DB


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except RepositoryError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "import":
        return _cmd_import(args)
    if args.command == "export":
        return _cmd_export(args)
    if args.command == "validate":
        return _cmd_validate(args)
    if args.command == "render":
        return _cmd_render(args)
    if args.command == "serve":
        return _cmd_serve(args)
    if args.command == "corpus":
        return _cmd_corpus(args)
    raise AssertionError(f"unhandled command {args.command!r}")


def _open_repo(args: argparse.Namespace) -> Repository:
    return Repository(Store(_db_path(args)))


def _cmd_import(args: argparse.Namespace) -> int:
    try:
        with open(args.bundle, encoding="utf-8") as fh:
            bundle = json.load(fh)
    except json.JSONDecodeError as exc:
        print(f"error: {args.bundle} is not valid JSON: {exc}", file=sys.stderr)
        return 2
    repo = _open_repo(args)
    report = repo.import_bundle(bundle, mode="lenient" if args.lenient else "strict")
    print(canonical_json(report.to_dict(), indent=2), end="")
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    repo = _open_repo(args)
    text = repo.export_bundle_text()
    if args.path == "-":
        sys.stdout.write(text)
    else:
        with open(args.path, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote bundle to {args.path}", file=sys.stderr)
    return 0


def _view_subjects(repo: Repository, view_id: str) -> set[str]:
    view = repo.get_view(view_id)
    snapshot = repo.snapshot()
    subjects = {view_id} | set(view.pattern_refs) | set(view.referenced_relation_ids)
    subjects |= {r.id for r in snapshot.relations_owned_by(view_id)}
    return subjects


def _cmd_validate(args: argparse.Namespace) -> int:
    repo = _open_repo(args)
    diagnostics = repo.validate()
    if args.view is not None:
        try:
            subjects = _view_subjects(repo, args.view)
        except NotFoundError as exc:
            print(f"error: {exc.message}", file=sys.stderr)
            return 2
        diagnostics = [d for d in diagnostics if d.subject in subjects]
    print(canonical_json([d.to_dict() for d in diagnostics], indent=2), end="")
    if any(d.severity == "error" for d in diagnostics):
        print("validation found errors", file=sys.stderr)
        return 1
    return 0


def _cmd_render(args: argparse.Namespace) -> int:
    repo = _open_repo(args)
    try:
        graph = repo.view_graph(args.view)
    except NotFoundError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return 2
    positions = None
    if args.seed is not None:
        positions = graphmod.layout(graph, args.seed).positions
    sys.stdout.write(graphmod.export_graph(graph, _RENDER_FORMATS[args.format], positions))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    store = Store(_db_path(args))
    repo = Repository(store)
    if args.corpus:
        if store.is_empty():
            with open(args.corpus, encoding="utf-8") as fh:
                repo.import_bundle(json.load(fh))
            print(f"preloaded bundle {args.corpus}", file=sys.stderr)
        else:
            print("store is not empty; skipping corpus preload", file=sys.stderr)
    app = create_app(store, auth_token=args.auth_token)
    if args.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=args.ui_dir, html=True), name="ui")
    port = args.port
    if port is None:
        port = int(os.environ.get("PA_PORT", DEFAULT_PORT))
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
    return 0


def _cmd_corpus(args: argparse.Namespace) -> int:
    repo = _open_repo(args)
    if not repo.store.is_empty():
        print("error: the store is not empty; corpus seed needs a fresh one", file=sys.stderr)
        return 1
    corpusmod.seed(repo)
    counts = {
        "languages": repo.store.count("language"),
        "patterns": repo.store.count("pattern"),
        "relations": repo.store.count("relation"),
        "views": repo.store.count("view"),
    }
    print(canonical_json(counts, indent=2), end="")
    print("corpus installed", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
