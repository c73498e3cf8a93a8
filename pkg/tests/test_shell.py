import csv
import io
import math

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from exampledata import ratings, weather, write_csv
from rma import Engine
from rma.catalog import Catalog, load_table, read_csv, save_table
from rma.columnar import Kind, Relation
from rma.errors import CatalogError, IngestError
from rma.shell import Shell, format_cell, main, render_table

RATING_ROWS = [("Ann", "2.0", "1.5", "0.5"), ("Tom", "0.0", "0.0", "1.5"), ("Jan", "1.0", "4.0", "1.0")]


@pytest.fixture
def rating_csv(tmp_path):
    path = tmp_path / "rating.csv"
    write_csv(path, ["User", "Balto", "Heat", "Net"], RATING_ROWS)
    return path


def make_shell(engine=None):
    out, err = io.StringIO(), io.StringIO()
    return Shell(engine or Engine(), out=out, err=err), out, err


# -- CSV ingestion ---------------------------------------------------------------------


def test_rating_csv_kinds(rating_csv):
    r = read_csv(rating_csv)
    assert r.names == ("User", "Balto", "Heat", "Net")
    assert r.schema.kinds == (Kind.TEXT, Kind.FLOAT64, Kind.FLOAT64, Kind.FLOAT64)
    assert sorted(r.rows()) == sorted(ratings().rows())


@pytest.mark.parametrize(
    "cells, kind",
    [
        (["1", "2", "-3"], Kind.INT64),
        (["1", "2.5"], Kind.FLOAT64),
        (["1e3", "7"], Kind.FLOAT64),
        (["1", "x"], Kind.TEXT),
        (["5am", "6am"], Kind.TEXT),
    ],
)
def test_kind_inference(tmp_path, cells, kind):
    path = tmp_path / "t.csv"
    write_csv(path, ["a"], [(c,) for c in cells])
    assert read_csv(path).schema.kinds == (kind,)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("a,b\n1,2\n3\n", "row"),
        ("a,a\n1,2\n", "duplicate"),
        ("a,b\n1,\n", "empty"),
        ("", "header"),
    ],
)
def test_ingest_errors(tmp_path, text, fragment):
    path = tmp_path / "bad.csv"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(IngestError, match=fragment):
        read_csv(path)


def test_quoted_fields(tmp_path):
    path = tmp_path / "q.csv"
    path.write_text('name,v\n"Lee, A.",1\n"say ""hi""",2\n', encoding="utf-8")
    assert read_csv(path).rows() == [("Lee, A.", 1), ('say "hi"', 2)]


finite = st.floats(allow_nan=False, allow_infinity=False)
words = st.text(st.characters(codec="utf-8", exclude_categories=["Cs", "Cc"]), min_size=1, max_size=6).filter(
    lambda s: s.strip() == s and not _numeric(s)
)


def _numeric(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(st.tuples(words, st.integers(-10**12, 10**12), finite), min_size=1, max_size=8))
def test_export_round_trip(tmp_path, rows):
    catalog = Catalog()
    src = tmp_path / "in.csv"
    with open(src, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows([("w", "i", "f"), *((w, i, repr(f)) for w, i, f in rows)])
    original = catalog.load_csv("t", src)
    dst = tmp_path / "out.csv"
    catalog.export_csv("t", dst)
    again = read_csv(dst)
    assert again.schema == original.schema
    assert again.rows() == original.rows()


# -- catalog persistence -------------------------------------------------------------------


def test_table_files_round_trip(tmp_path):
    r = Relation.from_rows(["k", "name", "x"], [(1, "ä", 0.1), (-2, "", math.pi)])
    save_table(r, tmp_path / "t")
    assert (tmp_path / "t" / "schema.txt").read_text().splitlines() == ["rows 2", "int64 k", "text name", "float64 x"]
    back = load_table(tmp_path / "t")
    assert back.schema == r.schema and back.rows() == r.rows()


def test_catalog_reloads_from_disk(tmp_path, rating_csv):
    Catalog(tmp_path / "db").load_csv("rating", rating_csv)
    reopened = Catalog(tmp_path / "db")
    assert reopened.names() == ["rating"]
    assert reopened.get("rating").rows() == read_csv(rating_csv).rows()


def test_catalog_rejects_bad_names_and_missing_tables(tmp_path):
    c = Catalog(tmp_path)
    for bad in ["", "../x", ".hidden"]:
        with pytest.raises(CatalogError):
            c.register(bad, weather())
    with pytest.raises(KeyError):
        c.get("nope")


# -- display ------------------------------------------------------------------------------


def test_table_format_uses_four_significant_digits():
    assert format_cell(-0.19230769, Kind.FLOAT64) == "-0.1923"
    assert format_cell(12345.678, Kind.FLOAT64) == "1.235e+04"
    assert format_cell(3, Kind.INT64) == "3"
    text = render_table(weather())
    assert [c.strip() for c in text.splitlines()[0].split("|")] == ["T", "H", "W"]
    assert text.endswith("(4 rows)")


# -- shell sessions ------------------------------------------------------------------------


def test_load_then_inverse_prints_three_rows(rating_csv):
    shell, out, err = make_shell()
    shell.feed(f"\\load rating {rating_csv}\nSELECT * FROM inv(rating BY User);\n")
    assert err.getvalue() == ""
    assert "(3 rows)" in out.getvalue()


def test_schema_lists_attributes(rating_csv):
    shell, out, _ = make_shell()
    shell.feed(f"\\load rating {rating_csv}\n\\schema rating\n")
    lines = out.getvalue().splitlines()[1:]
    assert lines == ["User text", "Balto float64", "Heat float64", "Net float64"]


def test_multiline_statement_csv_format_and_tables(rating_csv):
    shell, out, _ = make_shell()
    shell.feed(f"\\load rating {rating_csv}\n\\format csv\nSELECT User\n  FROM rating -- comment\n ORDER BY User;\n\\tables\n")
    assert out.getvalue().splitlines()[1:] == ["User", "Ann", "Jan", "Tom", "rating"]


def test_store_makes_result_queryable():
    engine = Engine()
    engine.register("r", weather())
    shell, out, err = make_shell(engine)
    shell.feed("SELECT * FROM tra(r BY T);\n\\store t\n\\format csv\nSELECT C FROM t;\n")
    assert err.getvalue() == ""
    assert out.getvalue().splitlines()[-3:] == ["C", "H", "W"]


def test_timing_line():
    engine = Engine()
    engine.register("r", weather())
    shell, out, _ = make_shell(engine)
    shell.feed("\\timing on\nSELECT * FROM r;\n")
    timing = out.getvalue().splitlines()[-1]
    assert timing.startswith("Time: parse ") and "plan" in timing and "execute" in timing and timing.endswith(" ms")


def test_session_state_survives_errors(tmp_path, rating_csv):
    shell, out, err = make_shell(Engine(Catalog(tmp_path / "db")))
    shell.feed(f"\\load rating {rating_csv}\n\\format csv\nSELECT * FROM rating;\n")
    assert shell.errors == 0 and shell.last is not None
    before = (shell.engine.catalog.names(), shell.format, shell.timing, shell.last)
    shell.feed(
        "SELECT * FROM inv(rating BY Nope);\n"
        "SELECT * FROM inv((SELECT User, Balto, Heat, Balto AS B2 FROM rating) AS x BY User);\n"
        "\\load other /does/not/exist.csv\n"
        "\\format xml\n"
        "\\schema\n"
        "\\bogus\n"
        "SELECT FROM;\n"
    )
    assert (shell.engine.catalog.names(), shell.format, shell.timing, shell.last) == before
    assert shell.errors == 7
    messages = err.getvalue().splitlines()
    assert messages[0].startswith("ERROR plan: ")
    assert any(m.startswith("ERROR execute: ") for m in messages)
    assert messages[-1].startswith("ERROR parse: ")
    assert Catalog(tmp_path / "db").names() == ["rating"]


def test_quit_stops_reading():
    shell, out, _ = make_shell()
    shell.feed("\\quit\n\\tables\n")
    assert shell.finished and shell.errors == 0


# -- command line ------------------------------------------------------------------------------


def test_main_exit_codes(tmp_path, rating_csv, capsys):
    ok = tmp_path / "ok.sql"
    ok.write_text(f"\\load rating {rating_csv}\nSELECT * FROM inv(rating BY User);\n\\quit\n")
    assert main(["--exec", str(ok), "--data", str(tmp_path / "db")]) == 0
    assert "(3 rows)" in capsys.readouterr().out

    bad = tmp_path / "bad.sql"
    bad.write_text("SELECT * FROM missing;\n")
    assert main(["--exec", str(bad)]) == 1
    assert "ERROR plan: unknown table" in capsys.readouterr().err

    with pytest.raises(SystemExit) as info:
        main(["--format", "xml"])
    assert info.value.code == 2
    assert main(["--exec", str(tmp_path / "absent.sql")]) == 2


def test_main_persists_catalog_between_runs(tmp_path, rating_csv, capsys):
    first = tmp_path / "a.sql"
    first.write_text(f"\\load rating {rating_csv}\n")
    second = tmp_path / "b.sql"
    second.write_text("\\format csv\nSELECT COUNT(*) AS n FROM rating")  # no trailing ';'
    db = str(tmp_path / "db")
    assert main(["--data", db, "--exec", str(first)]) == 0
    capsys.readouterr()
    assert main(["--data", db, "--exec", str(second)]) == 0
    assert capsys.readouterr().out.splitlines() == ["n", "3"]


def test_piped_input_reports_errors_in_exit_code(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO("SELECT * FROM nope;\n"))
    assert main([]) == 1
    monkeypatch.setattr("sys.stdin", io.StringIO("\\tables\n"))
    assert main([]) == 0
