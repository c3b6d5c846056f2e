import pytest
from hypothesis import given, strategies as st
from sympy import QQ

from exact_arith import (
    IndexExpr,
    as_poly,
    idx,
    parse_rational,
    poly_arith,
    poly_substitute,
    probably_zero,
    rational_str,
    to_rational,
    var,
)


@pytest.mark.parametrize("text,expected", [
    ("1/3", QQ(1, 3)),
    ("-2", QQ(-2)),
    (" 4 / 6 ", QQ(2, 3)),
    ("0", QQ(0)),
])
def test_parse_rational(text, expected):
    assert parse_rational(text) == expected


@pytest.mark.parametrize("text", ["0.5", "1/0", "abc", "1e3", "", "1/-2"])
def test_parse_rational_rejects(text):
    with pytest.raises(ValueError):
        parse_rational(text)


@given(st.integers(-10**6, 10**6), st.integers(1, 10**4))
def test_rational_str_parses_back(num, den):
    q = QQ(num, den)
    assert parse_rational(rational_str(q)) == q


def test_rational_str():
    assert rational_str(QQ(3, 6)) == "1/2"
    assert rational_str(QQ(-4, 2)) == "-2"
    assert rational_str("7/1") == "7"


def test_to_rational_rejects_bools_and_symbols():
    with pytest.raises(TypeError):
        to_rational(True)
    with pytest.raises(ValueError):
        to_rational(var("a") + 1)
    assert to_rational(as_poly(QQ(5, 2))) == QQ(5, 2)


def test_unknown_indeterminate():
    with pytest.raises(ValueError):
        var("z")


def test_poly_arith_and_substitute():
    a, b = var("a"), var("b")
    assert poly_arith("mul", a + b, a - b) == a ** 2 - b ** 2
    assert poly_arith("neg", a, 0) == -a
    with pytest.raises(ValueError):
        poly_arith("div", a, b)
    assert poly_substitute(a * b + 1, {"a": QQ(1, 2), "b": 4}) == as_poly(3)
    assert poly_substitute(a + b, {"b": 2 * a}) == 3 * a


def test_probably_zero():
    a, b, i = var("a"), var("b"), var("i")
    assert probably_zero((a + b) ** 2 - (a ** 2 + 2 * a * b + b ** 2))
    assert not probably_zero(i ** 2 - i)
    assert not probably_zero(as_poly(QQ(1, 1000)))


def test_index_expr_str():
    e = idx("i") + idx("r1") - idx("3/2")
    assert str(e) == "i + r1 - 3/2"
    assert str(idx(0)) == "0"
    assert str(-idx("m") + 2 * idx("n")) == "-m + 2*n"


def test_index_expr_properties():
    assert (idx("i") - idx("i")).is_zero
    assert idx("1/2").is_half_odd
    assert idx(-4).is_integer
    assert not idx("i").is_concrete
    assert idx("5/2").value == QQ(5, 2)
    with pytest.raises(ValueError):
        idx("i").value
    with pytest.raises(ValueError):
        idx("1/3")
    with pytest.raises(TypeError):
        idx("i") * QQ(1, 2)


def test_index_substitute():
    e = idx("i") + 2 * idx("m") + idx("1/2")
    assert e.substitute({"m": 1}) == idx("i") + idx("5/2")
    assert e.substitute({"i": idx("j"), "m": "1/2"}) == idx("j") + idx("3/2")


index_exprs = st.builds(
    lambda coeffs, doubled: sum((idx(name) * c for name, c in zip(("i", "m", "n"), coeffs)), IndexExpr.const(0))
    + IndexExpr((), doubled),
    st.lists(st.integers(-5, 5), min_size=3, max_size=3),
    st.integers(-20, 20),
)


@given(index_exprs, index_exprs)
def test_index_arithmetic_matches_polynomials(x, y):
    assert (x + y).to_poly() == x.to_poly() + y.to_poly()
    assert (x - y).to_poly() == x.to_poly() - y.to_poly()
    assert (x + y) - y == x


rationals = st.builds(QQ, st.integers(-20, 20), st.integers(1, 6))


def _poly(terms):
    p = as_poly(0)
    for coeff, names in terms:
        term = as_poly(coeff)
        for name in names:
            term = term * var(name)
        p = p + term
    return p


polys = st.lists(st.tuples(rationals, st.lists(st.sampled_from(("a", "b", "c", "i", "m")), max_size=3)),
                 max_size=4).map(_poly)


@given(polys, polys)
def test_add_then_subtract_is_canonical(p, q):
    r = poly_arith("sub", poly_arith("add", p, q), q)
    assert r == p
    assert str(r) == str(p)


@given(polys, polys, rationals, st.integers(-5, 5), rationals, rationals)
def test_substitution_is_a_ring_homomorphism(p, q, a, i, slope, offset):
    # b goes to a polynomial in the unbound c
    bindings = {"a": a, "i": i, "b": var("c") * slope + offset}

    def sub(x):
        return poly_substitute(x, bindings)

    assert sub(poly_arith("add", p, q)) == sub(p) + sub(q)
    assert sub(poly_arith("mul", p, q)) == sub(p) * sub(q)
    assert sub(poly_arith("neg", p, 0)) == -sub(p)
