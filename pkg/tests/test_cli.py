from __future__ import annotations

import csv
import io
import socket
import subprocess
import sys

import pytest

from owa.cli import main
from owa.fixtures import KB_SERVICE, write_fixtures
from owa.layer import Manifest

from helpers import QUERY_DIR, engine_for


@pytest.fixture()
def fx(tmp_path):
    return write_fixtures(tmp_path / "fx", "small")


def _store_args(fs, *kinds):
    out = []
    for k in kinds:
        out += ["-l", str(fs.layers[k])]
    return out + ["-k", f"{KB_SERVICE}={fs.kb}"]


# -- build --


def test_build_prints_manifest(fx, capsys):
    assert main(["build", "-c", str(fx.configs["warc"])]) == 0
    out = capsys.readouterr().out
    manifest = Manifest.from_text(out.split("\n", 1)[1])
    assert manifest.versions == fx.web.captures and manifest.same_as == fx.web.duplicates


def test_build_thread_override_is_byte_identical(fx):
    out = {}
    for threads in ("1", "8"):
        assert main(["build", "-c", str(fx.configs["news"]), "--threads", threads]) == 0
        out[threads] = (fx.root / "layers" / "news.n3").read_bytes()
    assert out["1"] == out["8"]


def test_missing_gazetteer_exits_2(fx, capsys):
    fx.gazetteer.unlink()
    assert main(["build", "-c", str(fx.configs["news"])]) == 2
    assert "gazetteer" in capsys.readouterr().err


# -- query --


def test_listing5_csv_matches_engine(small_fx, capsys):
    code = main(["query", *_store_args(small_fx, "warc"), "-q", str(QUERY_DIR / "listing05.rq"), "--format", "csv"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["journ", "num"]
    table = engine_for(small_fx, ["warc"]).evaluate((QUERY_DIR / "listing05.rq").read_text())
    assert rows[1:] == [[r[0].value, r[1].value] for r in table.rows]
    assert len(rows) > 1


def test_query_table_and_explain(small_fx, capsys):
    q = str(QUERY_DIR / "listing05.rq")
    assert main(["query", *_store_args(small_fx, "warc"), "-q", q]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split(" | ")[0].strip() == "journ" and "-+-" in lines[1]
    assert main(["query", *_store_args(small_fx, "warc"), "-q", q, "--explain"]) == 0
    assert "index=" in capsys.readouterr().out


def test_syntax_error_exits_3(small_fx, tmp_path):
    bad = tmp_path / "bad.rq"
    bad.write_text("SELECT * WHERE { ?s ?p ?o } UNION { ?s ?p ?o }")
    assert main(["query", "-l", str(small_fx.layers["news"]), "-q", str(bad)]) == 3


def test_unmounted_service_exits_4(small_fx):
    assert main(["query", "-l", str(small_fx.layers["news"]), "-q", str(QUERY_DIR / "listing08.rq")]) == 4


def test_usage_errors_exit_2(small_fx):
    assert main(["query", "-q", str(QUERY_DIR / "listing08.rq")]) == 2
    assert main(["query", "-l", str(small_fx.layers["news"]), "-k", "nonsense", "-q", "x"]) == 2


def test_missing_layer_file_exits_1(tmp_path):
    assert main(["query", "-l", str(tmp_path / "none.n3"), "-q", str(QUERY_DIR / "listing06.rq")]) == 1


def test_bind_failure_exits_5(small_fx):
    with socket.socket() as taken:
        taken.bind(("127.0.0.1", 0))
        taken.listen(1)
        port = taken.getsockname()[1]
        assert main(["serve", "-l", str(small_fx.layers["news"]), "-b", f"127.0.0.1:{port}"]) == 5


# -- analytics and eval --


def test_analytics_routes_print_the_same(small_fx, capsys):
    args = ["analytics", "cooccur", *_store_args(small_fx, "news"), "--entity", "http://dbpedia.org/resource/Barack_Obama",
            "--type", "http://dbpedia.org/ontology/Politician", "--from", "2007-06-01", "--to", "2007-08-30"]
    assert main(args) == 0
    direct = capsys.readouterr().out
    assert main(args + ["--sparql"]) == 0
    assert capsys.readouterr().out == direct
    assert direct.startswith("entity")
    assert "Barack_Obama |" not in direct


def test_analytics_popularity(small_fx, capsys):
    args = ["analytics", "popularity", "-l", str(small_fx.layers["tweets"]),
            "--entity", small_fx.tweet_truth.entity_uri, "--year", "2016"]
    assert main(args) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("month") and len(lines) == 2 + len(small_fx.tweet_truth.ratios())


def test_eval_writes_tables(small_fx, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["eval", *_store_args(small_fx, "news"), "--needs", str(small_fx.needs),
                 "--judgments", str(small_fx.judgments), "--runs", "3", "--out", str(out)])
    assert code == 0
    assert "R3" in capsys.readouterr().out
    header = (out / "timing.csv").read_text().splitlines()[0]
    assert header.endswith("R3 (ms),Average (ms)")
    assert (out / "metrics.csv").read_text().startswith("need,sparql_hits")


def test_module_entry_point(small_fx):
    proc = subprocess.run([sys.executable, "-m", "owa", "query", "-l", str(small_fx.layers["news"]),
                           "-q", str(QUERY_DIR / "listing06.rq"), "--format", "csv"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.splitlines()
    assert lines[0] == "year,num" and len(lines) > 1
