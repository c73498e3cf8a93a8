import pytest
from hypothesis import given
from hypothesis import strategies as st

from exampledata import films, ratings, users, weather
from rma.algebra import (
    TRUE,
    AggSpec,
    BinaryOp,
    ColumnRef,
    Literal,
    UnaryOp,
    aggregate,
    cross,
    join,
    order_by,
    project,
    rename,
    select,
)
from rma.columnar import Kind, Relation
from rma.errors import DuplicateAttributeError, EvaluationError, KindError, SchemaError


def col(n):
    return ColumnRef(n)


def lit(v):
    return Literal(v)


def eq(a, b):
    return BinaryOp("=", a, b)


def test_select_weather_after_six():
    got = select(weather(), BinaryOp(">", col("T"), lit("6am")))
    assert got.same_bag(Relation.from_rows(["T", "H", "W"], [("8am", 8.0, 5.0), ("7am", 6.0, 7.0)]))


def test_select_true_is_identity():
    r = weather()
    assert select(r, TRUE).rows() == r.rows()


def test_select_california_users():
    got = select(users(), eq(col("State"), lit("CA")))
    assert [row[0] for row in got.rows()] == ["Ann", "Jan"]


def test_select_rejects_mistyped_predicate():
    with pytest.raises(KindError):
        select(weather(), BinaryOp(">", col("T"), lit(3)))


def _w1():
    u = rename(users(), {"User": "U2"})
    j = join(u, ratings(), eq(col("U2"), col("User")))
    j = select(j, eq(col("State"), lit("CA")))
    return project(j, [(col("User"), "U"), (col("Balto"), "B"), (col("Heat"), "H"), (col("Net"), "N")])


def test_project_builds_w1():
    w1 = _w1()
    assert w1.names == ("U", "B", "H", "N")
    assert sorted(w1.rows()) == [("Ann", 2.0, 1.5, 0.5), ("Jan", 1.0, 4.0, 1.0)]


def test_project_identity_and_arithmetic():
    r = weather()
    assert project(r, [(col(n), n) for n in r.names]).rows() == r.rows()
    one = Relation.from_rows(["B", "M"], [(1.0, 2)])
    got = project(one, [(BinaryOp("/", col("B"), BinaryOp("-", col("M"), lit(1))), "x")])
    assert got.rows() == [(1.0,)]
    assert got.schema.kind("x") is Kind.FLOAT64


def test_project_rejects_duplicate_names():
    with pytest.raises(DuplicateAttributeError):
        project(weather(), [(col("H"), "a"), (col("W"), "a")])


def test_join_after_rename_enumerates_pairs():
    u = rename(users(), {"User": "User2"})
    got = join(u, ratings(), eq(col("User2"), col("User")))
    assert len(got) == 3
    assert all(row[0] == row[3] for row in got.rows())


def test_join_false_predicate_is_empty_with_concatenated_schema():
    u, r = users(), rename(ratings(), {"User": "R"})
    got = join(u, r, lit(False))
    assert len(got) == 0 and got.names == u.names + r.names


def test_join_requires_disjoint_names():
    with pytest.raises(SchemaError, match="ambiguous"):
        join(users(), ratings(), TRUE)


def test_join_keeps_matching_titles():
    w7 = Relation.from_rows(["C", "B"], [("Balto", 1.0), ("Heat", 2.0), ("Net", 3.0)])
    got = join(w7, films(), eq(col("C"), col("Title")))
    got = select(got, eq(col("Director"), lit("Lee")))
    assert sorted(row[0] for row in got.rows()) == ["Balto", "Heat"]


def test_averages_of_w1():
    got = aggregate(_w1(), [], [AggSpec("AVG", col(n), n) for n in "BHN"])
    assert got.rows() == [(1.5, 2.75, 0.75)]


def test_count_star_of_w1():
    got = aggregate(_w1(), [], [AggSpec("COUNT", None, "M")])
    assert got.rows() == [(2,)]
    assert got.schema.kind("M") is Kind.INT64


def test_rename_identity_and_injectivity():
    r = weather()
    assert rename(r, {}).rows() == r.rows()
    with pytest.raises(DuplicateAttributeError):
        rename(r, {"H": "W"})


def test_grouped_aggregation_first_appearance_order():
    r = Relation.from_rows(["g", "v"], [("b", 1), ("a", 2), ("b", 3)])
    got = aggregate(r, ["g"], [AggSpec("SUM", col("v"), "s"), AggSpec("MAX", col("v"), "m")])
    assert got.rows() == [("b", 4, 3), ("a", 2, 2)]


def test_aggregate_over_empty_input():
    r = Relation.from_rows(["v"], [], kinds=[Kind.FLOAT64])
    assert aggregate(r, [], [AggSpec("COUNT", None, "n"), AggSpec("SUM", col("v"), "s")]).rows() == [(0, 0.0)]
    with pytest.raises(EvaluationError):
        aggregate(r, [], [AggSpec("AVG", col("v"), "a")])


def test_division_by_zero_is_an_error():
    with pytest.raises(EvaluationError):
        project(weather(), [(BinaryOp("/", col("H"), lit(0)), "x")])


def test_unary_and_logical_operators():
    r = weather()
    pred = UnaryOp("NOT", BinaryOp("OR", BinaryOp("<", col("H"), lit(2)), BinaryOp(">", col("W"), lit(6))))
    assert [row[0] for row in select(r, pred).rows()] == ["8am"]
    neg = project(r, [(UnaryOp("-", col("H")), "n")])
    assert [v for (v,) in neg.rows()] == [-1.0, -1.0, -6.0, -8.0]


def test_order_by_descending_is_stable():
    r = Relation.from_rows(["k", "v"], [(1, "a"), (2, "b"), (1, "c"), (2, "d")])
    assert order_by(r, [("k", True)]).rows() == [(2, "b"), (2, "d"), (1, "a"), (1, "c")]


# -- properties ------------------------------------------------------------------------

small = st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5)), max_size=10)


@given(small, st.integers(-5, 5), st.integers(-5, 5))
def test_select_composes_as_conjunction(rows, a, b):
    r = Relation.from_rows(["x", "y"], rows, kinds=[Kind.INT64, Kind.INT64])
    p1, p2 = BinaryOp(">", col("x"), lit(a)), BinaryOp("<=", col("y"), lit(b))
    assert select(select(r, p1), p2).same_bag(select(r, BinaryOp("AND", p1, p2)))


@given(small, small)
def test_join_true_equals_cross(rows1, rows2):
    r = Relation.from_rows(["a", "b"], rows1, kinds=[Kind.INT64, Kind.INT64])
    s = Relation.from_rows(["c", "d"], rows2, kinds=[Kind.INT64, Kind.INT64])
    assert join(r, s, TRUE).same_bag(cross(r, s))


@given(small, small)
def test_hash_join_matches_nested_loop(rows1, rows2):
    r = Relation.from_rows(["a", "b"], rows1, kinds=[Kind.INT64, Kind.INT64])
    s = Relation.from_rows(["c", "d"], rows2, kinds=[Kind.INT64, Kind.INT64])
    pred = BinaryOp("AND", eq(col("a"), col("c")), BinaryOp("<", col("b"), col("d")))
    expected = [x + y for x in r.rows() for y in s.rows() if x[0] == y[0] and x[1] < y[1]]
    assert join(r, s, pred).rows() == expected


@given(small)
def test_count_star_equals_row_count(rows):
    r = Relation.from_rows(["x", "y"], rows, kinds=[Kind.INT64, Kind.INT64])
    assert aggregate(r, [], [AggSpec("COUNT", None, "n")]).rows() == [(len(rows),)]
