import numpy as np
import pytest

from exampledata import weather
from rma.algebra import BinaryOp, ColumnRef, Literal, select
from rma.bridge import (
    SHAPE_TYPES,
    OpCode,
    RmaArg,
    RmaCall,
    ShapeType,
    apply_rma,
    column_cast,
    matrix_constructor,
    origins_of,
    reduce,
    relation_constructor,
    rma,
    schema_cast,
    shape_type_of,
)
from rma.columnar import SORT_STATS, Column, Kind, Relation, project_columns
from rma.errors import (
    CastError,
    ContextNameCollisionError,
    DuplicateRowsError,
    KeyViolationError,
    MatrixError,
    MissingRelationNameError,
    NonNumericApplicationError,
    NonSymmetricError,
    NotPositiveDefiniteError,
    OrderSchemaCardinalityError,
    RmaError,
    SchemaError,
    SingularMatrixError,
    UnionCompatibilityError,
    UnknownAttributeError,
)


def after_six():
    return select(weather(), BinaryOp(">", ColumnRef("T"), Literal("6am")))


# -- constructors and casts ---------------------------------------------------------


def test_matrix_constructor_splits_selected_weather():
    r = after_six()
    assert matrix_constructor(r, ["T"], complement=True).tolist() == [[6.0, 7.0], [8.0, 5.0]]
    assert matrix_constructor(r, ["T"]).rows() == [("7am",), ("8am",)]
    one = Relation.from_rows(["k", "x"], [(1, 2.5)])
    assert matrix_constructor(one, ["k"], complement=True).tolist() == [[2.5]]


def test_matrix_constructor_widens_integers():
    r = Relation.from_rows(["k", "x"], [(2, 7), (1, 3)])
    m = matrix_constructor(r, ["k"], complement=True)
    assert m.dtype == np.float64 and m.tolist() == [[3.0], [7.0]]


def test_relation_constructor_builds_inverse_result():
    m = Relation.from_rows(["T"], [("7am",), ("8am",)])
    h = np.array([[-0.1923, 0.2692], [0.3077, -0.2308]])
    v = relation_constructor([m, h], ["T", "H", "W"])
    assert v.rows() == [("7am", -0.1923, 0.2692), ("8am", 0.3077, -0.2308)]
    single = relation_constructor([np.eye(1)], ["x"])
    assert single.rows() == [(1.0,)]
    with pytest.raises(DuplicateRowsError):
        relation_constructor([np.ones((2, 2))], ["a", "b"])
    with pytest.raises(SchemaError):
        relation_constructor([np.ones((2, 2))], ["a"])


def test_column_cast():
    r = Relation.from_rows(["O", "x"], [("A", 1.0), ("C", 2.0), ("B", 3.0)])
    assert column_cast(r, "O") == ["A", "B", "C"]
    assert column_cast(weather(), "T") == ["5am", "6am", "7am", "8am"]
    assert column_cast(Relation.from_rows(["k"], [(42,)]), "k") == ["42"]
    with pytest.raises(CastError):
        column_cast(Relation.from_rows(["k"], [("",), ("a",)]), "k")
    with pytest.raises(CastError):
        column_cast(Relation.from_rows(["k"], [("a",), ("a",)]), "k")


def test_schema_cast():
    assert schema_cast(["D", "B"]).tolist() == ["D", "B"]
    assert schema_cast(["H", "W"]).tolist() == ["H", "W"]
    assert schema_cast(["x"]).tolist() == ["x"]
    with pytest.raises(CastError):
        schema_cast([])


def test_shape_types():
    assert shape_type_of("mmu") == ShapeType("r1", "c2")
    assert shape_type_of("add") == ShapeType("r*", "c*")
    assert shape_type_of("det") == ShapeType("1", "1")
    assert shape_type_of("vsv") == ShapeType("c1", "c1")
    assert set(SHAPE_TYPES) == set(OpCode)
    assert len({(s.rows, s.cols) for s in SHAPE_TYPES.values()}) == 10


# -- apply_rma on the example relations -----------------------------------------------------


def test_inverse_of_selected_weather():
    v = rma("inv", after_six(), ["T"])
    assert v.names == ("T", "H", "W")
    expected = {"7am": (-0.19, 0.27), "8am": (0.31, -0.23)}
    assert {row[0] for row in v.rows()} == set(expected)
    for t, h, w in v.rows():
        assert np.allclose((h, w), expected[t], atol=0.005)


def test_transpose_of_weather():
    t = rma("tra", weather(), ["T"])
    assert t.names == ("C", "5am", "6am", "7am", "8am")
    assert t.rows() == [("H", 1.0, 1.0, 6.0, 8.0), ("W", 3.0, 4.0, 7.0, 5.0)]
    assert set(rma("tra", t, ["C"]).rows()) == set(weather().rows())


def test_rqr_of_weather():
    q = rma("rqr", weather(), ["T"])
    assert q.names == ("C", "H", "W")
    assert [row[0] for row in q.rows()] == ["H", "W"]
    assert np.allclose([row[1:] for row in q.rows()], [[-10.1, -8.8], [0.0, -4.6]], atol=0.05)
    assert np.allclose(reduce(q, ["C"]), [[-10.1, -8.8], [0.0, -4.6]], atol=0.05)


def test_usv_dsv_vsv_reconstruct_weather():
    r = weather()
    u = rma("usv", r, ["T"])
    assert u.names == ("T", "5am", "6am", "7am", "8am")
    assert [row[0] for row in u.rows()] == ["5am", "6am", "7am", "8am"]
    d = reduce(rma("dsv", r, ["T"]), ["C"])
    v = reduce(rma("vsv", r, ["T"]), ["C"])
    padded = np.vstack([d, np.zeros((2, 2))])
    assert np.abs(reduce(u, ["T"]) @ padded @ v.T - reduce(r, ["T"])).max() <= 1e-12


def test_binary_ops_sort_each_argument_by_its_own_order():
    r = Relation.from_rows(["k", "x"], [(2, 1.0), (1, 2.0)], "r")
    s = Relation.from_rows(["j", "y"], [("b", 10.0), ("a", 20.0)], "s")
    got = rma("add", r, ["k"], s, ["j"])
    assert got.names == ("k", "j", "x")
    assert sorted(got.rows()) == [(1, "a", 22.0), (2, "b", 11.0)]
    # s reduces to [[20], [10]] because key 'a' sorts before 'b'
    m = rma("mmu", Relation.from_rows(["k", "x", "z"], [(1, 2.0, 1.0)]), ["k"], s, ["j"])
    assert m.rows() == [(1, 50.0)]


def test_det_and_rank_carry_relation_name():
    r = weather()
    assert rma("rnk", r, ["T"]).rows() == [("r", 2.0)]
    d = rma("det", after_six().with_name("r2"), ["T"])
    assert d.names == ("C", "det")
    assert d.rows()[0][0] == "r2" and d.rows()[0][1] == pytest.approx(-26.0)


def test_custom_context_name():
    t = rma("tra", weather(), ["T"], context_name="attr")
    assert t.names[0] == "attr"


def test_evl_schema():
    r = Relation.from_rows(["k", "a", "b"], [(1, 2.0, 1.0), (2, 1.0, 2.0)])
    e = rma("evl", r, ["k"])
    assert e.names == ("k", "evl")
    assert np.allclose([v for _, v in e.rows()], [3.0, 1.0])


# -- origins --------------------------------------------------------------------------------


def test_origins_of_qqr_with_two_order_attributes():
    call = RmaCall(OpCode.QQR, RmaArg(weather(), ["W", "T"]))
    o = origins_of(call)
    assert o.row == [(3.0, "5am"), (4.0, "6am"), (5.0, "8am"), (7.0, "7am")]
    assert o.col == ("H",)


def test_origins_of_rank_and_add():
    o = origins_of(RmaCall(OpCode.RNK, RmaArg(weather(), ["T"])))
    assert o.row == [("r",)] and o.col == ("rnk",)
    s = Relation.from_rows(["V", "a", "b"], [(2, 1.0, 1.0), (1, 0.0, 0.0), (3, 1.0, 2.0), (4, 5.0, 5.0)], "s")
    o = origins_of(RmaCall(OpCode.ADD, RmaArg(weather(), ["T"]), RmaArg(s, ["V"])))
    assert o.row == [("5am", 1), ("6am", 2), ("7am", 3), ("8am", 4)]
    assert o.col == ("H", "W")


# -- sort avoidance ----------------------------------------------------------------------------


def test_optimized_qqr_does_not_sort():
    call = RmaCall(OpCode.QQR, RmaArg(weather(), ["T"]), optimize=True)
    SORT_STATS.reset()
    apply_rma(call)
    assert SORT_STATS.sorts == 0 and SORT_STATS.gathers == 0


def test_optimized_add_gathers_only_the_second_argument():
    r = weather()
    s = Relation.from_rows(["V", "a", "b"], [(4, 1.0, 1.0), (1, 0.0, 0.0), (3, 1.0, 2.0), (2, 5.0, 5.0)])
    SORT_STATS.reset()
    fast = apply_rma(RmaCall(OpCode.ADD, RmaArg(r, ["T"]), RmaArg(s, ["V"]), optimize=True))
    app_gathers = SORT_STATS.gathers
    slow = apply_rma(RmaCall(OpCode.ADD, RmaArg(r, ["T"]), RmaArg(s, ["V"])))
    assert fast.same_bag(slow)
    # the order column and the two application columns of s; r is read in place
    assert app_gathers == 3


# -- named errors ------------------------------------------------------------------------------


def test_key_violation():
    # rank over humidity, whose values repeat
    with pytest.raises(KeyViolationError):
        rma("rnk", project_columns(weather(), ["H", "W"]), ["H"])


def test_non_numeric_application_attribute():
    r = Relation.from_rows(["k", "x", "s"], [(1, 1.0, "a"), (2, 2.0, "b")])
    with pytest.raises(NonNumericApplicationError):
        rma("tra", r, ["k"])


@pytest.mark.parametrize("op", ["inv", "sol"])
def test_singular(op):
    r = Relation.from_rows(["k", "a", "b"], [(1, 1.0, 2.0), (2, 2.0, 4.0)])
    v = Relation.from_rows(["j", "y"], [(1, 1.0), (2, 1.0)])
    with pytest.raises(SingularMatrixError):
        rma(op, r, ["k"], *((v, ["j"]) if op == "sol" else ()))


@pytest.mark.parametrize("op", ["evc", "evl"])
def test_non_symmetric(op):
    r = Relation.from_rows(["k", "a", "b"], [(1, 1.0, 2.0), (2, 3.0, 4.0)])
    with pytest.raises(NonSymmetricError, match="non-symmetric"):
        rma(op, r, ["k"])


def test_not_positive_definite():
    r = Relation.from_rows(["k", "a", "b"], [(1, 1.0, 2.0), (2, 2.0, 1.0)])
    with pytest.raises(NotPositiveDefiniteError):
        rma("chf", r, ["k"])


def test_context_name_collision():
    with pytest.raises(ContextNameCollisionError):
        rma("rqr", weather(), ["T"], context_name="H")
    r = Relation.from_rows(["T", "x"], [("C", 1.0), ("D", 2.0)])
    with pytest.raises(ContextNameCollisionError):
        rma("tra", r, ["T"])


def test_order_schema_cardinality():
    with pytest.raises(OrderSchemaCardinalityError, match="must be one"):
        rma("tra", weather(), ["T", "H"])
    s = Relation.from_rows(["a", "b", "H", "W"], [(1, 1, 1.0, 2.0)])
    with pytest.raises(OrderSchemaCardinalityError):
        rma("opd", weather(), ["T"], s, ["a", "b"])


def test_union_compatibility_and_disjoint_orders():
    s = Relation.from_rows(["V", "a"], [(i, float(i)) for i in range(4)])
    with pytest.raises(UnionCompatibilityError):
        rma("add", weather(), ["T"], s, ["V"])
    s2 = Relation.from_rows(["T", "a", "b"], [(str(i), 1.0, 1.0) for i in range(4)])
    with pytest.raises(ContextNameCollisionError):
        rma("sub", weather(), ["T"], s2, ["T"])


def test_other_preconditions():
    with pytest.raises(MissingRelationNameError):
        rma("det", after_six().with_name(None), ["T"])
    with pytest.raises(UnknownAttributeError):
        rma("inv", weather(), ["X"])
    with pytest.raises(MatrixError):
        rma("inv", Relation.from_rows(["k"], [(1,)]), ["k"])
    with pytest.raises(RmaError, match="two arguments"):
        apply_rma(RmaCall(OpCode.MMU, RmaArg(weather(), ["T"])))
    with pytest.raises(SchemaError):
        rma("inv", weather(), ["T", "T"])


def test_errors_never_leave_partial_results():
    r = Relation.from_rows(["k", "a", "b"], [(1, 1.0, 2.0), (2, 2.0, 4.0)])
    with pytest.raises(SingularMatrixError):
        rma("inv", r, ["k"])
    # the argument is untouched
    assert r.rows() == [(1, 1.0, 2.0), (2, 2.0, 4.0)]
    assert r.column("a").kind is Kind.FLOAT64 and isinstance(r.column("a"), Column)
