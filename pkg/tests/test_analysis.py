import numpy as np
import pytest
from sympy import QQ

from analysis import (
    DEFAULT_WINDOW,
    PLUS_SPAN,
    classify_simplicity,
    coherence_grid,
    coherence_sweep,
    crosscheck_quartic_in_rabc,
    find_intertwiners,
    find_invariant_subspaces,
    injectivity_defect,
    length_one_recurrences,
    maps_proportional,
    match_rab_parameter,
    normalize_shift,
    plus_degenerate_span,
    quartic_coefficient,
    realize_window,
    restrict_window,
    slot_span,
    trivial_vectors,
    verify_length_one_recurrences,
    verify_length_two_constraints,
    verify_quartic_reduction,
    verify_sextic_vanishing,
)
from exact_arith import idx, to_rational, var
from rewrite_engine import BaseLayer, reduce_on_base
from superalgebra import Gm, Gp
from weight_modules import ModuleSpec, ModuleVector, act_on_vector, instantiate_window, parity_flip

WINDOW = (-6, 6)


def window(family, a, b, c=None, quotient="full", lo=-6, hi=6, maxidx=3):
    return instantiate_window(ModuleSpec.concrete(family, a, b, c, quotient=quotient), lo, hi, maxidx)


def test_quartic_reduction():
    assert verify_quartic_reduction().is_zero
    assert verify_quartic_reduction(BaseLayer(QQ(1, 5), 1, 0)).is_zero


def test_quartic_at_a_concrete_point():
    layer = BaseLayer()
    nf = reduce_on_base((Gm(1), Gm(0), Gp(0), Gp(1)), layer, "i")
    b, c = var("b"), var("c")
    assert nf.coefficient((), idx("i") + 2) == (2 * b + c) * (2 + c - 2 * b)
    assert quartic_coefficient(layer) == (2 * b + c) * (2 + c - 2 * b)
    # equal minus indices square to zero
    assert reduce_on_base((Gm(1), Gm(1), Gp(0), Gp(2)), layer, "i").is_zero


def test_sextic_at_concrete_indices():
    word = (Gm(1), Gm(-1), Gm(0), Gp(2), Gp(0), Gp(-1))
    assert reduce_on_base(word, BaseLayer(), "i").is_zero


@pytest.mark.slow
def test_sextic_vanishing_symbolic():
    assert verify_sextic_vanishing().is_zero


def test_quartic_crosscheck_in_rabc():
    assert crosscheck_quartic_in_rabc().is_zero
    assert crosscheck_quartic_in_rabc({"a": QQ(1, 5), "b": 1, "c": 0}).is_zero


def test_quartic_on_vminus_vanishes_at_degenerate_point():
    # 2b - c = 2: the minus-layer coefficient (2b + c - 2)(2 + c - 2b) is zero
    spec = ModuleSpec.symbolic("rabc")
    vec = ModuleVector({("vminus", "i"): 1}, 1)
    for g in reversed((Gm("r1"), Gm("r2"), Gp("s1"), Gp("s2"))):
        vec = act_on_vector(spec, g, vec)
    label = idx("i") + idx("r1") + idx("r2") + idx("s1") + idx("s2")
    coeff = vec.substitute({"c": 2 * var("b") - 2}).coefficient("vminus", label)
    assert coeff == 0


def test_length_one_recurrences():
    residuals = verify_length_one_recurrences()
    assert set(residuals) == {"L-compatibility", "H-compatibility", "eliminated"}
    assert all(r == 0 for r in residuals.values())


def test_length_one_recurrences_wrong_weight():
    residuals = verify_length_one_recurrences(bm=var("b"))
    assert residuals["L-compatibility"] == QQ(1, 2) * var("g") * var("m")
    assert residuals["H-compatibility"] == 0


def test_length_one_recurrences_nonconstant():
    def g(n, i):
        return n.to_poly()

    residuals = length_one_recurrences(g, var("a"), var("b"), var("b") - QQ(1, 2), var("c"), var("c") - 1)
    assert residuals["H-compatibility"] != 0


def test_length_two_constraints():
    constraints = verify_length_two_constraints()
    assert set(constraints) == {"normalization", "sum", "shift", "table-g", "table-h"}
    assert all(r == 0 for r in constraints.values())


def test_invariant_subspaces_of_a00():
    subs = find_invariant_subspaces(window("a", 0, 0))
    assert [s.describe() for s in subs] == ["span{v_0}"]
    assert subs[0].is_invariant()


def test_invariant_subspaces_of_rabc():
    W = window("rabc", "1/5", 1, 0)
    subs = find_invariant_subspaces(W)
    assert "span{vminus, vpm}" in [s.describe() for s in subs]
    assert all(s.is_invariant() for s in subs)
    assert find_invariant_subspaces(window("rabc", "1/3", 0, 0)) == []


def test_invariant_subspaces_of_rab01():
    subs = find_invariant_subspaces(window("rab", 0, 1))
    assert [s.describe() for s in subs] == ["complement of {vplus_0}"]


def test_degenerate_window():
    with pytest.raises(ValueError):
        find_invariant_subspaces(window("a", "1/3", 2, lo=-2, hi=2, maxidx=3))


def test_seed_does_not_change_witnesses():
    W = window("rabc", "1/5", 1, 0)
    first = [s.describe() for s in find_invariant_subspaces(W, rng=np.random.default_rng(1))]
    second = [s.describe() for s in find_invariant_subspaces(W, rng=np.random.default_rng(7))]
    assert first == second


def test_slot_span_and_restriction():
    W = window("rabc", "1/5", 1, 0)
    sub = slot_span(W, ("vminus", "vpm"))
    assert sub.describe() == "span{vminus, vpm}"
    R = restrict_window(W, sub)
    assert {slot for slot, _ in R.basis} == {"vminus", "vpm"}
    assert R.interior_labels() == list(range(-3, 4))
    with pytest.raises(ValueError):
        slot_span(W, ("v",))


def test_trivial_vectors():
    assert trivial_vectors(window("rabc", 0, 1, 0)).describe() == "span{vpm_0}"
    assert trivial_vectors(window("a", 0, 0)).describe() == "span{v_0}"
    assert trivial_vectors(window("rabc", "1/2", 1, 0)).dim == 0


def test_injectivity_defect():
    assert set(injectivity_defect(window("a", "1/3", 2), 1).values()) == {0}
    defects = injectivity_defect(window("a", 0, 0), 1)
    assert defects[0] == 1
    assert defects[2] == 0
    with pytest.raises(ValueError):
        injectivity_defect(window("a", 0, 0), 3)


def test_shift_intertwiner():
    maps = find_intertwiners(window("a", "1/3", 2), window("a", "4/3", 2))
    assert maps.dim == 1
    assert maps.bijective
    assert maps.label_shift() == -1
    doc = maps.to_json()
    assert doc["dimension"] == "1" and doc["label_shift"] == "-1"


def test_different_parameters_are_not_isomorphic():
    maps = find_intertwiners(window("a", "1/3", 2), window("a", "1/3", 3))
    assert not maps.bijective


def test_intertwiners_compose():
    W1, W2, W3 = window("a", "1/3", 2), window("a", "4/3", 2), window("a", "7/3", 2)
    first, second = find_intertwiners(W1, W2), find_intertwiners(W2, W3)
    direct = find_intertwiners(W1, W3)
    composed = first.compose(second)
    assert composed
    assert maps_proportional(composed, {w: direct.block(w) for w in direct.weights})


def test_parity_change_intertwiner():
    spec = ModuleSpec.concrete("rab", "1/3", 2)
    W = instantiate_window(spec, *WINDOW, 3)
    flipped = instantiate_window(parity_flip(spec), *WINDOW, 3)
    reversing = find_intertwiners(W, flipped, parity_reversing=True)
    assert reversing.dim == 1 and reversing.bijective
    assert not find_intertwiners(W, flipped).bijective


def test_incompatible_windows():
    with pytest.raises(ValueError):
        find_intertwiners(window("a", "1/3", 2), window("rab", "1/3", 2))


PARTNER_CANDIDATES = [QQ(k, 2) for k in range(-4, 7)]


def test_subquotient_partner_at_b_one():
    spec = ModuleSpec.concrete("rabc", "1/5", 1, 0, quotient="simple-subquotient")
    matches = match_rab_parameter(spec, PARTNER_CANDIDATES, WINDOW, 3)
    # R_{a,1/2} up to the parity change and the mirror twist, and R_{a,1} through A_{a,0} = A_{a,1}
    assert [m.describe() for m in matches] == ["Pi mirror rab(a=1/5, b=1/2)", "rab(a=1/5, b=1)"]


@pytest.mark.parametrize("a,b,c,expected", [
    ("1/5", 2, 2, "Pi mirror rab(a=1/5, b=3/2)"),
    ("1/3", 0, -2, "Pi mirror rab(a=1/3, b=-1/2)"),
    ("1/5", 0, 2, "Pi rab(a=1/5, b=-1/2)"),
    ("1/3", 2, -2, "Pi rab(a=1/3, b=3/2)"),
])
def test_subquotient_partner_is_b_minus_half(a, b, c, expected):
    spec = ModuleSpec.concrete("rabc", a, b, c, quotient="simple-subquotient")
    matches = match_rab_parameter(spec, PARTNER_CANDIDATES, WINDOW, 3)
    assert [m.describe() for m in matches] == [expected]
    assert matches[0].rational_parameters()["b"] == to_rational(b) - QQ(1, 2)


def test_plus_degenerate_span():
    W = window("rabc", "1/5", 0, 2)
    sub = plus_degenerate_span(W)
    assert sub.describe() == PLUS_SPAN
    assert sub.dims() == {label: 2 for label in W.interior_labels()}
    assert PLUS_SPAN in [s.describe() for s in find_invariant_subspaces(W)]
    with pytest.raises(ValueError):
        plus_degenerate_span(window("rabc", "1/5", 2, 2))
    with pytest.raises(ValueError):
        plus_degenerate_span(window("rab", "1/5", 1))


def test_realize_window_restricts_plus_stratum():
    spec = ModuleSpec.concrete("rabc", "1/5", 0, 2, quotient="simple-subquotient")
    R = realize_window(spec, WINDOW, 3)
    assert R.interior_labels() == list(range(-3, 4))
    assert {slot for slot, _ in R.basis} == {"v", "vplus"}
    assert all(R.dims_by_parity(label) == (1, 1) for label in R.interior_labels())
    target = instantiate_window(parity_flip(ModuleSpec.concrete("rab", "1/5", "-1/2")), *WINDOW, 3)
    assert find_intertwiners(R, target).bijective
    # the minus stratum keeps its slot realization
    W = realize_window(ModuleSpec.concrete("rabc", "1/5", 2, 2, quotient="simple-subquotient"), WINDOW, 3)
    assert {slot for slot, _ in W.basis} == {"vminus", "vpm"}


def test_restricted_submodule_matches_rab():
    W = window("rabc", "1/5", 1, 0)
    R = restrict_window(W, slot_span(W, ("vminus", "vpm")))
    assert find_intertwiners(R, window("rab", "1/5", 1)).bijective


def test_normalize_shift():
    spec = normalize_shift(ModuleSpec.concrete("a", "7/3", 2))
    assert spec.rational_parameters()["a"] == QQ(1, 3)
    spec = normalize_shift(parity_flip(ModuleSpec.concrete("rab", -2, 1)))
    assert spec.rational_parameters()["a"] == 0
    assert spec.parity_flipped


@pytest.mark.parametrize("family,params,verdict", [
    ("a", ("1/3", 5), "simple"),
    ("a", (0, 0), "not-simple"),
    ("a", (2, 1), "not-simple"),
    ("at", (0, 0, 3), "simple"),
    ("at", (0, 1, 0), "not-simple"),
    ("rab", (0, 1), "not-simple"),
    ("rab", ("1/3", "1/2"), "simple"),
    ("rab", (3, "1/2"), "not-simple"),
    ("rabc", ("1/3", 0, 0), "simple"),
    ("rabc", ("1/5", 1, 0), "not-simple"),
    ("rabc", ("1/3", "1/2", 1), "not-simple"),
    ("rabc", (0, 1, 0), "trivial"),
])
def test_classifier_verdicts(family, params, verdict):
    result = classify_simplicity(ModuleSpec.concrete(family, *params), search=False)
    assert result.verdict == verdict


def test_classifier_witnesses():
    result = classify_simplicity(ModuleSpec.concrete("rabc", "1/5", 1, 0), window=WINDOW)
    assert "span{vminus, vpm}" in [w.describe() for w in result.witnesses]
    doc = result.to_json()
    assert doc["module"] == "rabc(a=1/5, b=1, c=0)"
    assert doc["parameters"] == {"a": "1/5", "b": "1", "c": "0"}
    assert doc["trivial_vectors"]["dimension"] == "0"

    result = classify_simplicity(ModuleSpec.concrete("a", 0, 0), window=WINDOW)
    assert [w.describe() for w in result.witnesses] == ["span{v_0}"]

    result = classify_simplicity(ModuleSpec.concrete("rabc", "1/3", 0, 0), window=WINDOW)
    assert result.witnesses == []
    assert result.trivial_vectors is None


def test_classifier_trivial_vectors():
    result = classify_simplicity(ModuleSpec.concrete("rabc", 0, 1, 0), window=WINDOW)
    assert result.verdict == "trivial"
    assert result.trivial_vectors.describe() == "span{vpm_0}"


def test_classifier_warns_without_witness():
    # v^+_0 lies outside the interior, so the window sees no proper submodule
    with pytest.warns(UserWarning, match="No window witness"):
        result = classify_simplicity(ModuleSpec.concrete("rab", 0, 1), window=(1, 9), maxidx=1)
    assert result.verdict == "not-simple"
    assert result.witnesses == []


def test_classifier_errors():
    with pytest.raises(ValueError):
        classify_simplicity(ModuleSpec.symbolic("a"))
    with pytest.raises(ValueError):
        classify_simplicity(ModuleSpec.concrete("a", 0, 0, quotient="simple-subquotient"))


def test_coherence_subset():
    points = [("a", "0", "0", None), ("a", "1/3", "2", None), ("rab", "0", "1", None),
              ("rab", "1/3", "1/2", None), ("rabc", "1/5", "1", "0"), ("rabc", "1/3", "0", "0")]
    rows = coherence_sweep(points, window=DEFAULT_WINDOW)
    assert [row["verdict"] for row in rows] == ["not-simple", "simple", "not-simple", "simple",
                                                 "not-simple", "simple"]
    assert all(row["coherent"] for row in rows)


def test_coherence_grid_covers_strata():
    grid = coherence_grid()
    assert len(grid) >= 50
    assert ("rabc", "1/5", "1", "0") in grid
    assert len(set(grid)) == len(grid)


@pytest.mark.slow
def test_coherence_full_grid():
    rows = coherence_sweep(n_jobs=-1)
    incoherent = [row for row in rows if not row["coherent"]]
    assert incoherent == []
