import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sympy import QQ

from exact_arith import as_poly, idx, var
from rewrite_engine import (
    BaseLayer,
    NormalForm,
    VermaState,
    k_action_residual,
    k_commutator_residual,
    levels,
    pbw_basis,
    reduce_combination,
    reduce_on_base,
    series_oracle,
    verma_act,
    verma_weight_dims,
)
from superalgebra import SECTORS, G, Generator, Gm, Gp, H, L

CONCRETE_LAYER = BaseLayer(QQ(1, 3), 2, QQ(1, 2))


def test_base_layer_rejects_n1_sectors():
    with pytest.raises(ValueError):
        BaseLayer(sector="n1-ramond")


def test_plus_words_are_sorted_with_sign():
    nf = reduce_on_base((Gp(1), Gp(0)), BaseLayer(), 0)
    assert nf == NormalForm({((Gp(0), Gp(1)), 0): -1})
    assert reduce_on_base((Gp(1), Gp(1)), BaseLayer(), 0).is_zero


def test_generators_on_the_base_layer():
    layer = BaseLayer()
    assert reduce_on_base((Gm(2),), layer, "i").is_zero
    nf = reduce_on_base((L("m"),), layer, "i")
    assert nf.coefficient((), idx("m") + idx("i")) == var("a") + var("b") * var("m") + var("i")
    nf = reduce_on_base((H(3),), layer, "i")
    assert nf.coefficient((), idx("i") + 3) == var("c")


def test_unknown_strategy_and_sector():
    with pytest.raises(ValueError):
        reduce_on_base((Gp(0),), BaseLayer(), 0, strategy="random")
    with pytest.raises(ValueError):
        reduce_on_base((Gp("1/2", "n2-ns"),), BaseLayer(), 0)


def test_k_action_and_commutator():
    assert k_action_residual().is_zero
    assert k_commutator_residual().is_zero
    assert k_action_residual(1, -2, CONCRETE_LAYER, 4).is_zero


def test_minus_plus_pair():
    # G^-_s G^+_r u_i = K_{r,s} u_i since G^- kills the layer
    nf = reduce_on_base((Gm("s"), Gp("r")), BaseLayer(), "i")
    a, b, c, r, s, i = (var(x) for x in ("a", "b", "c", "r", "s", "i"))
    expected = -2 * (a + b * (r + s) + i) + (r - s) * c
    assert nf.coefficient((), idx("r") + idx("s") + idx("i")) == expected


def _words(max_len):
    kinds = st.sampled_from(["L", "H", "Gplus", "Gminus"])
    gens = st.builds(lambda kind, m: Generator(kind, m), kinds, st.integers(-3, 3))
    return st.lists(gens, min_size=1, max_size=max_len).map(tuple)


@settings(max_examples=50, deadline=None)
@given(_words(5), st.integers(-4, 4))
def test_strategies_agree(word, j):
    left = reduce_on_base(word, CONCRETE_LAYER, j, strategy="leftmost")
    right = reduce_on_base(word, CONCRETE_LAYER, j, strategy="rightmost")
    assert left == right


@settings(max_examples=25, deadline=None)
@given(_words(4))
def test_strategies_agree_symbolically(word):
    layer = BaseLayer()
    assert (reduce_on_base(word, layer, "i", strategy="leftmost")
            == reduce_on_base(word, layer, "i", strategy="rightmost"))


@pytest.mark.slow
def test_confluence_on_many_words():
    rng = np.random.default_rng(0)
    kinds = ("L", "H", "Gplus", "Gminus")
    for _ in range(1000):
        length = int(rng.integers(1, 7))
        word = tuple(Generator(kinds[rng.integers(4)], int(rng.integers(-3, 4))) for _ in range(length))
        j = int(rng.integers(-5, 6))
        assert (reduce_on_base(word, CONCRETE_LAYER, j, strategy="leftmost")
                == reduce_on_base(word, CONCRETE_LAYER, j, strategy="rightmost"))


def test_reduction_is_linear():
    words = {(Gm(1), Gp(0)): 2, (L(1), Gp(-1)): QQ(1, 3)}
    combined = reduce_combination(words, CONCRETE_LAYER, 0)
    separate = (reduce_on_base((Gm(1), Gp(0)), CONCRETE_LAYER, 0).scale(2)
                + reduce_on_base((L(1), Gp(-1)), CONCRETE_LAYER, 0).scale(QQ(1, 3)))
    assert combined == separate


@settings(max_examples=50, deadline=None)
@given(_words(3), _words(3), st.integers(-4, 4))
def test_reduction_composes(first, second, j):
    # second acts first; first then acts on each plus word of the result
    inner = reduce_on_base(second, CONCRETE_LAYER, j)
    composed = NormalForm()
    for (plus, label), coeff in inner.terms.items():
        composed = composed + reduce_on_base(first + plus, CONCRETE_LAYER, label).scale(coeff)
    assert composed == reduce_on_base(first + second, CONCRETE_LAYER, j)


def test_normal_form_substitute_resorts_plus_words():
    nf = NormalForm({((Gp("r"), Gp("s")), "i"): 1})
    assert nf.substitute({"r": 2, "s": 1, "i": 0}) == NormalForm({((Gp(1), Gp(2)), 0): -1})
    assert nf.substitute({"r": 1, "s": 1}).is_zero


def test_verma_virasoro_zero_modes():
    state = VermaState()
    h, hp, cc = var("h"), var("hp"), var("cc")
    assert verma_act(L(1), (L(-1),), state) == {(): -2 * h}
    assert verma_act(Gp(0), (Gm(0),), state) == {(): -2 * h - QQ(1, 12) * cc}
    assert verma_act(H(0), (Gm(-1),), state) == {(Gm(-1),): hp - 1}
    assert verma_act(Gp(0), (), state) == {}


def test_verma_n1_ramond_zero_mode_squares():
    state = VermaState("n1-ramond")
    assert verma_act(G(0), (G(0),), state) == {(): -var("h") - QQ(1, 24) * var("cc")}


def test_verma_straightens_creation_order():
    state = VermaState()
    result = verma_act(L(-1), (H(-2),), state)
    assert result == {(H(-2), L(-1)): as_poly(1), (H(-3),): as_poly(-2)}


def test_verma_errors():
    with pytest.raises(ValueError):
        verma_act(L(1), (G(-1),), VermaState())
    with pytest.raises(ValueError):
        verma_act(L("m"), (), VermaState())


def test_pbw_basis_small():
    assert pbw_basis("n2-ramond", 0) == [(), (Gm(0),)]
    assert pbw_basis("n2-ns", 0) == [()]
    assert len(pbw_basis("n2-ns", "1/2")) == 2


@pytest.mark.parametrize("sector,depth,expected", [
    ("n2-ramond", 1, [2, 8]),
    ("n1-ramond", 0, [2]),
    ("n2-ns", 0, [1]),
    ("n1-ns", "3/2", [1, 1, 1, 2]),
])
def test_graded_dimensions(sector, depth, expected):
    assert verma_weight_dims(sector, depth) == expected
    assert series_oracle(sector, depth) == expected


@pytest.mark.parametrize("sector", SECTORS)
def test_pbw_matches_product_formula(sector):
    assert verma_weight_dims(sector, 4) == series_oracle(sector, 4)


@pytest.mark.slow
@pytest.mark.parametrize("sector", SECTORS)
def test_pbw_matches_product_formula_deep(sector):
    assert verma_weight_dims(sector, 10) == series_oracle(sector, 10)


def test_levels_and_depth_errors():
    assert levels("n2-ns", "3/2") == [0, QQ(1, 2), 1, QQ(3, 2)]
    assert levels("n2-ramond", 2) == [0, 1, 2]
    with pytest.raises(ValueError):
        levels("n2-ramond", "1/2")
    with pytest.raises(ValueError):
        pbw_basis("n1-ns", -1)
    with pytest.raises(ValueError):
        pbw_basis("n2-ns", "1/3")
