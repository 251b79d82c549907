"""CLI dispatch, exit codes, and the error reporting contract."""

import json

import pytest

from lirlab.cli import main

CORPUS = (
    '{"doc_id": "c1", "text": "lighthouse keeper coastal storm lantern lighthouse"}\n'
    '{"doc_id": "c2", "text": "desert caravan oasis camel route sandstorm"}\n'
    '{"doc_id": "c3", "text": "storm surge coastal flooding barrier lighthouse"}\n'
)


@pytest.fixture()
def workdir(tmp_path):
    (tmp_path / "corpus.jsonl").write_text(CORPUS)
    (tmp_path / "queries.tsv").write_text("q1\tlighthouse storm\nq2\tdesert oasis\n")
    (tmp_path / "qrels.txt").write_text("q1 0 c3 1\nq2 0 c2 1\n")
    return tmp_path


def run(argv):
    return main([str(a) for a in argv])


class TestExitCodes:
    def test_unknown_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["frobnicate"])
        assert exc.value.code == 1

    def test_missing_required_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run(["index", "--corpus", "x.jsonl"])  # no --out
        assert exc.value.code == 1

    def test_data_error_exit_2_with_code_prefix(self, workdir, capsys):
        bad = workdir / "bad.jsonl"
        bad.write_text('{"doc_id": "a", "text": "x"}\nnot json\n')
        rc = run(["ingest", "--corpus", bad])
        assert rc == 2
        err = capsys.readouterr().err
        assert err.startswith("error: ParseError:")

    def test_missing_file_exit_2(self, workdir, capsys):
        rc = run(["ingest", "--corpus", workdir / "nope.jsonl"])
        assert rc == 2


class TestPipelineCommands:
    def test_ingest(self, workdir, capsys):
        rc = run(["ingest", "--corpus", workdir / "corpus.jsonl"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["documents"] == 3

    def test_index_determinism(self, workdir, capsys):
        for name in ("a.idx", "b.idx"):
            rc = run([
                "--seed", 1, "index",
                "--corpus", workdir / "corpus.jsonl",
                "--out", workdir / name, "--dim", 64,
            ])
            assert rc == 0
        assert (workdir / "a.idx").read_bytes() == (workdir / "b.idx").read_bytes()

    def test_seed_after_subcommand_equivalent(self, workdir, capsys):
        run(["--seed", 3, "index", "--corpus", workdir / "corpus.jsonl",
             "--out", workdir / "pre.idx", "--dim", 64])
        run(["index", "--corpus", workdir / "corpus.jsonl",
             "--out", workdir / "post.idx", "--dim", 64, "--seed", 3])
        assert (workdir / "pre.idx").read_bytes() == (workdir / "post.idx").read_bytes()

    def test_env_seed_fallback(self, workdir, capsys, monkeypatch):
        monkeypatch.setenv("LIRLAB_SEED", "9")
        run(["index", "--corpus", workdir / "corpus.jsonl",
             "--out", workdir / "env.idx", "--dim", 64])
        monkeypatch.delenv("LIRLAB_SEED")
        run(["--seed", 9, "index", "--corpus", workdir / "corpus.jsonl",
             "--out", workdir / "flag.idx", "--dim", 64])
        assert (workdir / "env.idx").read_bytes() == (workdir / "flag.idx").read_bytes()

    def test_decode_text_and_doc_id(self, workdir, capsys):
        run(["--seed", 1, "index", "--corpus", workdir / "corpus.jsonl",
             "--out", workdir / "i.idx", "--dim", 64])
        capsys.readouterr()
        rc = run(["decode", "--index", workdir / "i.idx",
                  "--corpus", workdir / "corpus.jsonl", "--text", "lighthouse storm"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert set(out) == {"text", "reencode_similarity"}
        assert out["reencode_similarity"] > 0.9

        rc = run(["decode", "--index", workdir / "i.idx",
                  "--corpus", workdir / "corpus.jsonl", "--doc-id", "c2"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert "desert" in out["text"] or "caravan" in out["text"]

    def test_decode_unknown_doc_exit_2(self, workdir, capsys):
        run(["--seed", 1, "index", "--corpus", workdir / "corpus.jsonl",
             "--out", workdir / "i.idx", "--dim", 64])
        capsys.readouterr()
        rc = run(["decode", "--index", workdir / "i.idx",
                  "--corpus", workdir / "corpus.jsonl", "--doc-id", "zz"])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error: UnknownDocId:")

    def test_suggest_and_traverse_and_gen_dataset(self, workdir, capsys):
        run(["--seed", 1, "index", "--corpus", workdir / "corpus.jsonl",
             "--out", workdir / "i.idx", "--dim", 64])
        capsys.readouterr()

        rc = run(["suggest", "--index", workdir / "i.idx",
                  "--corpus", workdir / "corpus.jsonl",
                  "--queries", workdir / "queries.tsv",
                  "--qrels", workdir / "qrels.txt",
                  "--method", "rm3", "--query", "lighthouse storm", "--n", "5"])
        assert rc == 0
        sset = json.loads(capsys.readouterr().out)
        assert sset["method"] == "rm3"
        assert len(sset["suggestions"]) <= 5

        rc = run(["traverse", "--index", workdir / "i.idx",
                  "--corpus", workdir / "corpus.jsonl",
                  "--queries", workdir / "queries.tsv",
                  "--qrels", workdir / "qrels.txt",
                  "--query-id", "q1", "--steps", "4"])
        assert rc == 0
        steps = json.loads(capsys.readouterr().out)
        assert [s["kappa"] for s in steps] == [1, 2, 3, 4]

        rc = run(["gen-dataset", "--index", workdir / "i.idx",
                  "--corpus", workdir / "corpus.jsonl",
                  "--queries", workdir / "queries.tsv",
                  "--qrels", workdir / "qrels.txt",
                  "--k", "4", "--out", workdir / "ds.jsonl",
                  "--training-view", workdir / "tv.jsonl"])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["queries_processed"] == 2
        assert (workdir / "ds.jsonl").exists()
        for line in (workdir / "tv.jsonl").read_text().splitlines():
            obj = json.loads(line)
            assert set(obj) == {"query", "context", "target"}
            assert len(obj["context"]) <= 5

    def test_eval_and_report(self, workdir, capsys):
        run(["--seed", 1, "index", "--corpus", workdir / "corpus.jsonl",
             "--out", workdir / "i.idx", "--dim", 64])
        capsys.readouterr()
        rc = run(["eval", "--index", workdir / "i.idx",
                  "--corpus", workdir / "corpus.jsonl",
                  "--queries", workdir / "queries.tsv",
                  "--qrels", workdir / "qrels.txt",
                  "--methods", "rm3,plain",
                  "--bootstrap", "20",
                  "--out", workdir / "report.json",
                  "--csv", workdir / "report.csv"])
        assert rc == 0
        report = json.loads((workdir / "report.json").read_text())
        assert {m["method"] for m in report["methods"]} == {"rm3", "plain"}
        assert (workdir / "report.csv").read_text().startswith("method,")
        capsys.readouterr()
        rc = run(["report", "--report", workdir / "report.json"])
        assert rc == 0
        table = capsys.readouterr().out
        assert "original" in table and "rm3" in table
