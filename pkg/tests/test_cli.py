"""Command line behavior: exit codes and the stdout/stderr split."""

import json

import pytest

from patternrepo import corpus, model
from patternrepo.cli import main
from patternrepo.repository import Repository
from patternrepo.store import Store


@pytest.fixture
def db(tmp_path):
    return str(tmp_path / "cli.db")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_corpus_seed(db, capsys):
    code, out, err = run(capsys, "corpus", "seed", "--db-path", db)
    assert code == 0
    assert json.loads(out) == corpus.CORPUS_COUNTS
    assert "corpus installed" in err
    # machine output stays clean
    assert "installed" not in out


def test_corpus_seed_refuses_populated_store(db, capsys):
    run(capsys, "corpus", "seed", "--db-path", db)
    code, out, err = run(capsys, "corpus", "seed", "--db-path", db)
    assert code == 1
    assert out == ""
    assert "not empty" in err


def test_validate_clean_store(db, capsys):
    run(capsys, "corpus", "seed", "--db-path", db)
    code, out, err = run(capsys, "validate", "--db-path", db)
    assert code == 0
    assert json.loads(out) == []


def test_validate_reports_errors_with_exit_one(db, capsys):
    run(capsys, "corpus", "seed", "--db-path", db)
    store = Store(db)
    try:
        broken = model.Relation(
            id="cloud-computing-patterns~cloud-computing-patterns/public-cloud~variation~ghost/x",
            owner_kind=model.KIND_LANGUAGE,
            owner_id="cloud-computing-patterns",
            source_id="cloud-computing-patterns/public-cloud",
            target_id="ghost/x",
            type="variation",
            directed=True,
            description="",
            version=1,
        )
        store.insert(broken)
    finally:
        store.close()
    code, out, err = run(capsys, "validate", "--db-path", db)
    assert code == 1
    diagnostics = json.loads(out)
    assert any(d["code"] == "DanglingEndpoint" for d in diagnostics)
    assert "errors" in err


def test_validate_scoped_to_view(db, capsys):
    run(capsys, "corpus", "seed", "--db-path", db)
    code, out, _ = run(capsys, "validate", "--db-path", db, "--view", corpus.VIEW_ID)
    assert code == 0
    assert json.loads(out) == []


def test_validate_unknown_view_is_usage_error(db, capsys):
    run(capsys, "corpus", "seed", "--db-path", db)
    code, out, err = run(capsys, "validate", "--db-path", db, "--view", "nope")
    assert code == 2
    assert out == ""
    assert "nope" in err


def test_render_formats(db, capsys):
    run(capsys, "corpus", "seed", "--db-path", db)
    code, dot, _ = run(
        capsys, "render", "--db-path", db, "--view", corpus.VIEW_ID, "--format", "dot"
    )
    assert code == 0
    assert dot.startswith("digraph ")
    code, gml, _ = run(
        capsys, "render", "--db-path", db, "--view", corpus.VIEW_ID, "--format", "graphml"
    )
    assert code == 0
    assert gml.lstrip().startswith("<?xml")
    code, js, _ = run(
        capsys, "render", "--db-path", db, "--view", corpus.VIEW_ID, "--format", "json"
    )
    assert code == 0
    assert {"scope", "nodes", "edges"} <= set(json.loads(js))


def test_render_seed_is_reproducible(db, capsys):
    run(capsys, "corpus", "seed", "--db-path", db)
    args = ["render", "--db-path", db, "--view", corpus.VIEW_ID,
            "--format", "json", "--seed", "5"]
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second
    assert "positions" in json.loads(first)


def test_render_unknown_view(db, capsys):
    run(capsys, "corpus", "seed", "--db-path", db)
    code, out, err = run(
        capsys, "render", "--db-path", db, "--view", "ghost", "--format", "dot"
    )
    assert code == 2
    assert out == ""


def test_export_and_import_round_trip(db, tmp_path, capsys):
    run(capsys, "corpus", "seed", "--db-path", db)
    bundle_path = str(tmp_path / "bundle.json")
    code, out, err = run(capsys, "export", "--db-path", db, bundle_path)
    assert code == 0 and out == "" and "wrote" in err

    second_db = str(tmp_path / "second.db")
    code, out, err = run(capsys, "import", "--db-path", second_db, bundle_path)
    assert code == 0
    assert json.loads(out)["created"] == corpus.CORPUS_COUNTS

    code, dumped, _ = run(capsys, "export", "--db-path", second_db, "-")
    assert code == 0
    with open(bundle_path, encoding="utf-8") as fh:
        assert dumped == fh.read()


def test_import_rejects_bad_json(db, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops", encoding="utf-8")
    code, out, err = run(capsys, "import", "--db-path", db, str(bad))
    assert code == 2
    assert "not valid JSON" in err


def test_import_missing_file(db, capsys):
    code, out, err = run(capsys, "import", "--db-path", db, "/no/such/file.json")
    assert code == 2
    assert "error" in err


def test_import_strict_failure_exits_one(db, tmp_path, capsys):
    bundle = corpus.corpus_bundle()
    bundle["languages"][0]["relations"].append(
        {
            "id": "cloud-computing-patterns~cloud-computing-patterns/public-cloud~variation~gone/x",
            "owner": {"kind": "language", "id": "cloud-computing-patterns"},
            "sourcePatternId": "cloud-computing-patterns/public-cloud",
            "targetPatternId": "gone/x",
            "type": "variation",
            "directed": True,
            "description": "",
            "version": 1,
        }
    )
    path = tmp_path / "damaged.json"
    path.write_text(json.dumps(bundle), encoding="utf-8")
    code, out, err = run(capsys, "import", "--db-path", db, str(path))
    assert code == 1
    assert "error:" in err

    lenient_db = str(tmp_path / "lenient.db")
    code, out, err = run(capsys, "import", "--db-path", lenient_db, str(path), "--lenient")
    assert code == 0
    report = json.loads(out)
    # the damaged relation was dropped, everything else made it in
    assert report["created"]["relations"] == corpus.CORPUS_COUNTS["relations"]
    assert report["warnings"]
    assert "warning:" in err


def test_db_path_from_environment(tmp_path, capsys, monkeypatch):
    target = tmp_path / "from-env.db"
    monkeypatch.setenv("PA_DB", str(target))
    monkeypatch.chdir(tmp_path)
    code, _, _ = run(capsys, "corpus", "seed")
    assert code == 0
    assert target.exists()
    repo = Repository(Store(str(target)))
    assert len(repo.list_languages()) == 3
    repo.store.close()


def test_flag_beats_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PA_DB", str(tmp_path / "ignored.db"))
    wanted = tmp_path / "wanted.db"
    code, _, _ = run(capsys, "corpus", "seed", "--db-path", str(wanted))
    assert code == 0
    assert wanted.exists()
    assert not (tmp_path / "ignored.db").exists()


def test_unknown_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["frobnicate"])
    assert excinfo.value.code == 2
