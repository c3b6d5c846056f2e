"""Identity verifiers, window submodule search, intertwiners and the simplicity classifier.

Symbolic checks return residuals that must be literally zero. Window computations are
exact over QQ and only falsify: an empty witness list is not a proof of simplicity.
"""
import dataclasses
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sympy import QQ
from sympy.polys.matrices import DomainMatrix
from tqdm import tqdm

from exact_arith import as_poly, idx, random_rational, rational_str, to_rational, var
from rewrite_engine import BaseLayer, NormalForm, reduce_on_base
from superalgebra import Gm, Gp
from weight_modules import (ModuleSpec, ModuleVector, WindowedModule, act, act_on_vector,
                            instantiate_window, mirror, parity_flip)

DEFAULT_WINDOW = (-8, 8)
DEFAULT_MAX_INDEX = 3
RANDOM_SEEDS = 20

HALF = QQ(1, 2)
VERDICTS = ("simple", "not-simple", "trivial")
GRID_A = ("0", "1/2", "1/3", "1/5")
GRID_B = ("0", "1/2", "1", "2")


# ---------------------------------------------------------------------------
# symbolic identities
# ---------------------------------------------------------------------------

def quartic_coefficient(layer):
    """d = (2b + c)(2 + c - 2b) for the layer parameters."""
    return (2 * layer.b + layer.c) * (2 + layer.c - 2 * layer.b)


def verify_quartic_reduction(layer=None):
    """Residual of G^-_{r1} G^-_{r2} G^+_{s1} G^+_{s2} u_i against d (s2 - s1)(r1 - r2) u_{i+r1+r2+s1+s2}.

    All of a, b, c, i, r1, r2, s1, s2 are symbolic unless ``layer`` fixes the parameters.
    """
    layer = BaseLayer() if layer is None else layer
    word = (Gm("r1"), Gm("r2"), Gp("s1"), Gp("s2"))
    reduced = reduce_on_base(word, layer, "i")
    r1, r2, s1, s2 = (var(name) for name in ("r1", "r2", "s1", "s2"))
    label = idx("i") + idx("r1") + idx("r2") + idx("s1") + idx("s2")
    expected = NormalForm({((), label): quartic_coefficient(layer) * (s2 - s1) * (r1 - r2)})
    return reduced - expected


def verify_sextic_vanishing(layer=None):
    """Normal form of G^-_{r1} G^-_{r2} G^-_{r3} G^+_{s1} G^+_{s2} G^+_{s3} u_i; it must be zero."""
    layer = BaseLayer() if layer is None else layer
    word = (Gm("r1"), Gm("r2"), Gm("r3"), Gp("s1"), Gp("s2"), Gp("s3"))
    return reduce_on_base(word, layer, "i")


def length_one_recurrences(g, a, b, bm, c, cm, m="m", n="n", i="i"):
    """Residuals of the compatibility recurrences for G^-_n v^+_i = g(n, i) v^-_{n+i}.

    Parameters
    ----------
    g : callable
        ``g(n, i)`` returning a polynomial, for IndexExpr arguments.
    a, b, c : polynomial or rational
        Parameters of the even layer.
    bm, cm : polynomial or rational
        Conformal weight and H-charge of the odd layer.

    Returns
    -------
    dict
        ``"L-compatibility"`` from [L_m, G^-_n], ``"H-compatibility"`` from [H_m, G^-_n]
        and ``"eliminated"``, the recurrence left after eliminating g(n, m) with c != 0, 1.
    """
    a, b, bm, c, cm = (as_poly(x) for x in (a, b, bm, c, cm))
    m, n, i = idx(m), idx(n), idx(i)
    mp, np_, ip = m.to_poly(), n.to_poly(), i.to_poly()
    zero = idx(0)
    return {
        "L-compatibility": ((a + bm * mp + np_ + ip) * g(n, i) - (a + b * mp + ip) * g(n, m + i)
                            - (np_ - HALF * mp) * g(m + n, i)),
        "H-compatibility": cm * g(n, i) - c * g(n, m + i) + g(m + n, i),
        "eliminated": g(m + n + i, zero) - g(n + i, zero) - g(n + m, zero) + g(n, zero),
    }


def verify_length_one_recurrences(bm=None, cm=None):
    """Recurrence residuals on the constant solution g(n, i) = g.

    Defaults are b^- = b - 1/2 and c^- = c - 1, where every residual vanishes.
    """
    b, c = var("b"), var("c")
    bm = b - HALF if bm is None else bm
    cm = c - 1 if cm is None else cm
    constant = var("g")
    return length_one_recurrences(lambda n, i: constant, var("a"), b, bm, c, cm)


def verify_length_two_constraints():
    """Constraints on the coefficient functions of G^+_r v^-_k and G^-_r v^+_k in R_{a,b,c}.

    g(r, k) = (c + 2 - 2b) r is the v-coefficient of G^+_r v^-_k and
    h(r, k) = -(2a + 2k + (2b + c) r) that of G^-_r v^+_k.
    """
    a, b, c = var("a"), var("b"), var("c")

    def g(r, k):
        return (c + 2 - 2 * b) * idx(r).to_poly()

    def h(r, k):
        return -(2 * a + 2 * idx(k).to_poly() + (2 * b + c) * idx(r).to_poly())

    r, k, m = var("r"), var("k"), var("m")
    spec = ModuleSpec.symbolic("rabc")
    rk = idx("r") + idx("k")
    return {
        "normalization": g(0, "k"),
        "sum": g("r", "k") + h("r", "k") + 2 * (a + (2 * b - 1) * r + k),
        "shift": g(idx("m") + idx("r"), "k") - g("r", idx("m") + idx("k")) - (c + 2 - 2 * b) * m,
        "table-g": act(spec, Gp("r"), "vminus", "k").coefficient("v", rk) - g("r", "k"),
        "table-h": act(spec, Gm("r"), "vplus", "k").coefficient("v", rk) - h("r", "k"),
    }


def crosscheck_quartic_in_rabc(bindings=None):
    """Compare the quartic word on v^-_i of R_{a,b,c} with its base-layer reduction.

    The module path composes the action tables; the other path reduces on the layer
    (a, b - 1/2, c - 1) spanned by v^- and maps the normal form back into the module.
    Returns the difference as a ModuleVector, optionally specialized by ``bindings``.
    """
    spec = ModuleSpec.symbolic("rabc")
    word = (Gm("r1"), Gm("r2"), Gp("s1"), Gp("s2"))
    direct = ModuleVector({("vminus", "i"): 1}, spec.slot_parity("vminus"))
    for g in reversed(word):
        direct = act_on_vector(spec, g, direct)

    layer = BaseLayer(spec.a, spec.b - HALF, spec.c - 1)
    via_layer = ModuleVector()
    for (plus_word, label), coeff in reduce_on_base(word, layer, "i").terms.items():
        vec = ModuleVector({("vminus", label): coeff})
        for g in reversed(plus_word):
            vec = act_on_vector(spec, g, vec)
        via_layer = via_layer + vec

    residual = direct - via_layer
    return residual.substitute(bindings) if bindings else residual


# ---------------------------------------------------------------------------
# graded subspaces of windows
# ---------------------------------------------------------------------------

class _Echelon:
    """Rows kept in reduced row-echelon form; ``add`` reports whether the span grew."""

    def __init__(self, width):
        self.width = width
        self.rows = []

    @property
    def dim(self):
        return len(self.rows)

    def reduce(self, vec):
        vec = list(vec)
        for pivot, row in self.rows:
            f = vec[pivot]
            if f:
                vec = [x - f * y for x, y in zip(vec, row)]
        return vec

    def contains(self, vec):
        return not any(self.reduce(vec))

    def add(self, vec):
        vec = self.reduce(vec)
        pivot = next((k for k, x in enumerate(vec) if x), None)
        if pivot is None:
            return False
        lead = vec[pivot]
        vec = [x / lead for x in vec]
        rows = []
        for p, row in self.rows:
            f = row[pivot]
            if f:
                row = [x - f * y for x, y in zip(row, vec)]
            rows.append((p, row))
        rows.append((pivot, vec))
        self.rows = sorted(rows, key=lambda item: item[0])
        return True

    def basis(self):
        return [row for _, row in self.rows]


def _matvec(block, vec):
    return [sum((x * y for x, y in zip(row, vec)), QQ.zero) for row in block]


class Subspace:
    """A graded subspace of a window: per label, RREF rows in the coordinates of that weight space."""

    def __init__(self, window, bases):
        self.window = window
        self.bases = {}
        for label in sorted(bases):
            ech = _Echelon(len(window.weight_space(label)))
            for row in bases[label]:
                ech.add(row)
            if ech.dim:
                self.bases[label] = ech

    @property
    def dim(self):
        return sum(ech.dim for ech in self.bases.values())

    def labels(self):
        return sorted(self.bases)

    def dims(self):
        return {label: ech.dim for label, ech in self.bases.items()}

    def rows(self, label):
        ech = self.bases.get(label)
        return ech.basis() if ech else []

    def contains(self, label, vec):
        if not any(vec):
            return True
        ech = self.bases.get(label)
        return ech is not None and ech.contains(vec)

    def issubset(self, other):
        return all(other.contains(label, row) for label in self.labels() for row in self.rows(label))

    def __eq__(self, other):
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.labels() == other.labels() and all(self.rows(l) == other.rows(l) for l in self.labels())

    def is_invariant(self, generators=None):
        """Re-check closure under the generators, within the window interior."""
        W = self.window
        generators = W.generators if generators is None else generators
        for label in self.labels():
            for g in generators:
                target = label + int(g.index.value)
                if W.is_boundary(target) or target not in W.by_label:
                    continue
                block = W.block(g, label)
                for row in self.rows(label):
                    if not self.contains(target, _matvec(block, row)):
                        return False
        return True

    def _unit_members(self):
        W = self.window
        members = []
        for label in self.labels():
            positions = W.weight_space(label)
            for row in self.rows(label):
                nonzero = [k for k, x in enumerate(row) if x]
                if len(nonzero) != 1:
                    return None
                members.append(W.basis[positions[nonzero[0]]])
        return members

    def describe(self):
        """Short human-readable form, e.g. ``span{vminus, vpm}`` or ``span{v_0}``."""
        W = self.window
        members = self._unit_members()
        if members is not None:
            slots = []
            for slot, _ in W.basis:
                if slot not in slots:
                    slots.append(slot)
            per_label = {}
            for slot, label in members:
                per_label.setdefault(label, set()).add(slot)
            interior = W.interior_labels()
            slot_sets = {frozenset(per_label.get(label, ())) for label in interior}
            if len(slot_sets) == 1 and len(per_label) == len(interior):
                chosen = slot_sets.pop()
                return "span{" + ", ".join(s for s in slots if s in chosen) + "}"
            if len(members) <= 2:
                return "span{" + ", ".join("{}_{}".format(s, l) for s, l in members) + "}"
            everything = [W.basis[pos] for label in interior for pos in W.weight_space(label)]
            member_set = set(members)
            missing = [key for key in everything if key not in member_set]
            if len(missing) <= 2:
                return "complement of {" + ", ".join("{}_{}".format(s, l) for s, l in missing) + "}"
        spec = W.spec
        if (spec is not None and spec.family == "rabc" and spec.quotient == "full"
                and self == Subspace(W, _plus_span_bases(W))):
            return PLUS_SPAN
        return "graded subspace of dimension {}".format(self.dim)

    def to_json(self):
        W = self.window
        basis = []
        for label in self.labels():
            positions = W.weight_space(label)
            for row in self.rows(label):
                vector = {"{}_{}".format(*W.basis[positions[k]]): rational_str(x)
                          for k, x in enumerate(row) if x}
                basis.append({"label": str(label), "vector": vector})
        return {"description": self.describe(), "dimension": str(self.dim),
                "dims": {str(label): str(d) for label, d in self.dims().items()}, "basis": basis}


def _usable_generators(W, maxidx):
    if maxidx is None:
        return list(W.generators)
    if maxidx > W.maxidx:
        raise ValueError("maxidx {} exceeds the window's realized range {}".format(maxidx, W.maxidx))
    return [g for g in W.generators if abs(int(g.index.value)) <= maxidx]


def _seeds(W, interior, rng, random_seeds):
    seeds = []
    for label in interior:
        size = len(W.weight_space(label))
        for k in range(size):
            seeds.append((label, [QQ.one if j == k else QQ.zero for j in range(size)]))
    for _ in range(random_seeds):
        label = interior[int(rng.integers(len(interior)))]
        parity = int(rng.integers(2))
        positions = W.weight_space(label)
        local = [k for k, pos in enumerate(positions) if W.parities[pos] == parity]
        # a single coordinate is already covered by the unit seeds
        if len(local) < 2:
            continue
        vec = [QQ.zero] * len(positions)
        for k in local:
            vec[k] = random_rational(rng)
        if any(vec):
            seeds.append((label, vec))
    return seeds


def _closure(W, label, vec, blocks, interior):
    spans = {l: _Echelon(len(W.weight_space(l))) for l in interior}
    spans[label].add(vec)
    stack = [(label, vec)]
    while stack:
        source, v = stack.pop()
        for (g_label, target), block in blocks.get(source, ()):
            image = _matvec(block, v)
            if any(image) and spans[target].add(image):
                stack.append((target, image))
    return Subspace(W, {l: ech.basis() for l, ech in spans.items()})


def _interior_blocks(W, generators, interior):
    interior_set = set(interior)
    blocks = {}
    for label in interior:
        for g in generators:
            target = label + int(g.index.value)
            if target in interior_set:
                blocks.setdefault(label, []).append(((g, target), W.block(g, label)))
    return blocks


def find_invariant_subspaces(W, maxidx=None, rng=None, random_seeds=RANDOM_SEEDS):
    """Maximal proper graded subspaces of the window interior closed under the generators.

    Parameters
    ----------
    W : WindowedModule
        The window to search.
    maxidx : int, optional
        Largest |index| of the generators used, by default the window's own range.
    rng : numpy.random.Generator, optional
        Source of the random seeds, by default ``default_rng(0)``.
    random_seeds : int, optional
        Number of random parity-homogeneous seeds on top of the unit seeds.

    Returns
    -------
    list of Subspace
        Deduplicated, each maximal among the closures found and re-verified invariant.

    Raises
    ------
    ValueError
        If every label of the window is a boundary label.
    """
    interior = W.interior_labels()
    if not interior:
        raise ValueError("Degenerate window [{}, {}]: every label is a boundary label".format(W.lo, W.hi))
    rng = np.random.default_rng(0) if rng is None else rng
    generators = _usable_generators(W, maxidx)
    blocks = _interior_blocks(W, generators, interior)
    total = sum(len(W.weight_space(label)) for label in interior)

    found = []
    for label, vec in _seeds(W, interior, rng, random_seeds):
        if any(sub.contains(label, vec) for sub in found):
            continue
        sub = _closure(W, label, vec, blocks, interior)
        if sub.dim < total and sub not in found:
            found.append(sub)

    maximal = [s for s in found if not any(t is not s and s.issubset(t) for t in found)]
    for sub in maximal:
        assert sub.is_invariant(generators), "Closure {} is not invariant".format(sub.describe())
    return sorted(maximal, key=lambda s: (s.dim, s.describe()))


def slot_span(W, slots):
    """The interior span of the basis vectors in the given slots; it must be invariant."""
    bases = {}
    for label in W.interior_labels():
        positions = W.weight_space(label)
        bases[label] = [[QQ.one if j == k else QQ.zero for j in range(len(positions))]
                        for k, pos in enumerate(positions) if W.basis[pos][0] in slots]
    sub = Subspace(W, bases)
    if not sub.dim:
        raise ValueError("No basis vectors in slots {}".format(", ".join(slots)))
    if not sub.is_invariant():
        raise ValueError("span{{{}}} is not invariant".format(", ".join(slots)))
    return sub


PLUS_SPAN = "span{vplus, vpm + 2(a+i) v}"


def _plus_span_bases(W):
    a = W.spec.rational_parameters()["a"]
    bases = {}
    for label in W.interior_labels():
        slots = [W.basis[pos][0] for pos in W.weight_space(label)]
        unit = [QQ.one if slot == "vplus" else QQ.zero for slot in slots]
        shifted = [QQ.one if slot == "vpm" else 2 * (a + label) if slot == "v" else QQ.zero for slot in slots]
        bases[label] = [unit, shifted]
    return bases


def plus_degenerate_span(W):
    """span{v^+_i, v^{+-}_i + 2(a+i) v_i} in a full R_{a,b,c} window; invariant iff 2b + c = 2."""
    if W.spec is None or W.spec.family != "rabc" or W.spec.quotient != "full":
        raise ValueError("plus_degenerate_span needs a full rabc window")
    sub = Subspace(W, _plus_span_bases(W))
    if not sub.is_invariant():
        raise ValueError("{} is not invariant in {}".format(PLUS_SPAN, W.spec.describe()))
    return sub


def restrict_window(W, sub):
    """The module induced on an invariant subspace, with one basis vector per RREF row.

    Basis slots are named after the pivot slot of each row. The result covers the
    interior of ``W``; images leaving it are dropped.
    """
    lo, hi = W.interior
    basis, parities, weights, rows = [], [], [], []
    for label in sub.labels():
        positions = W.weight_space(label)
        for row in sub.rows(label):
            pivot = next(k for k, x in enumerate(row) if x)
            basis.append((W.basis[positions[pivot]][0], label))
            parities.append(W.parities[positions[pivot]])
            weights.append(W.weights[positions[pivot]])
            rows.append((label, pivot, row))
    index = {}
    for pos, (label, pivot, _) in enumerate(rows):
        index.setdefault(label, []).append((pivot, pos))

    images = {}
    for g in W.generators:
        m = int(g.index.value)
        columns = {}
        for col, (label, _, row) in enumerate(rows):
            target = label + m
            column = {}
            if lo <= target <= hi:
                image = _matvec(W.block(g, label), row)
                residual = list(image)
                for pivot, pos in index.get(target, ()):
                    coeff = image[pivot]
                    if coeff:
                        column[pos] = coeff
                        residual = [x - coeff * y for x, y in zip(residual, rows[pos][2])]
                assert not any(residual), "Subspace is not invariant under {}".format(g)
            columns[col] = column
        images[g] = columns
    return WindowedModule(basis, parities, weights, lo, hi, W.maxidx, images, None, interior=(lo, hi))


def _nullspace_rows(rows, ncols):
    """Basis of the right kernel of a sparse system given as ``[{col: value}]``."""
    if not rows:
        return [[QQ.one if j == k else QQ.zero for j in range(ncols)] for k in range(ncols)]
    matrix = DomainMatrix(dict(enumerate(rows)), (len(rows), ncols), QQ)
    kernel = matrix.nullspace()
    return [[to_rational(x) for x in row] for row in kernel.to_Matrix().tolist()]


def _rank(rows, ncols):
    if not rows or not ncols:
        return 0
    return DomainMatrix([list(r) for r in rows], (len(rows), ncols), QQ).rank()


def trivial_vectors(W):
    """Interior vectors annihilated by every realized generator, as a Subspace."""
    bases = {}
    for label in W.interior_labels():
        size = len(W.weight_space(label))
        stacked = []
        for g in W.generators:
            stacked.extend(W.block(g, label))
        equations = [{k: x for k, x in enumerate(row) if x} for row in stacked]
        bases[label] = _nullspace_rows([e for e in equations if e], size)
    return Subspace(W, bases)


def injectivity_defect(W, n):
    """Kernel dimension of L_n + L_{n+1} + H_n + G^+_n + G^-_n on each interior weight space."""
    if max(abs(n), abs(n + 1)) > W.maxidx:
        raise ValueError("Indices {} and {} exceed the window's range {}".format(n, n + 1, W.maxidx))
    wanted = {("L", n), ("L", n + 1), ("H", n), ("Gplus", n), ("Gminus", n)}
    operators = [g for g in W.generators if (g.kind, int(g.index.value)) in wanted]
    defects = {}
    for label in W.interior_labels():
        size = len(W.weight_space(label))
        stacked = []
        for g in operators:
            stacked.extend(W.block(g, label))
        defects[label] = size - _rank(stacked, size)
    return defects


# ---------------------------------------------------------------------------
# intertwiners
# ---------------------------------------------------------------------------

@dataclass
class Intertwiners:
    """Solution space of phi o rho_1(g) = rho_2(g) o phi on the common interior weights.

    ``layout`` maps ``(weight, row, col)`` (local coordinates of the weight spaces of
    the target and source windows) to the unknown's position in each basis vector.
    """
    source: WindowedModule
    target: WindowedModule
    parity_reversing: bool
    weights: list
    layout: dict
    basis: list
    bijective: bool = False
    source_labels: dict = field(default_factory=dict)
    target_labels: dict = field(default_factory=dict)

    @property
    def dim(self):
        return len(self.basis)

    def combination(self, coefficients=None):
        if coefficients is None:
            if not self.basis:
                raise ValueError("The intertwiner space is zero")
            return self.basis[0]
        if len(coefficients) != self.dim:
            raise ValueError("Expected {} coefficients, got {}".format(self.dim, len(coefficients)))
        solution = [QQ.zero] * len(self.layout)
        for coeff, vec in zip(coefficients, self.basis):
            coeff = to_rational(coeff)
            solution = [x + coeff * y for x, y in zip(solution, vec)]
        return solution

    def block(self, weight, coefficients=None):
        """Matrix of the map from the source weight space to the target weight space."""
        weight = to_rational(weight)
        if weight not in self.source_labels:
            raise ValueError("Weight {} is not a common interior weight".format(rational_str(weight)))
        solution = self.combination(coefficients)
        rows = len(self.target.weight_space(self.target_labels[weight]))
        cols = len(self.source.weight_space(self.source_labels[weight]))
        matrix = [[QQ.zero] * cols for _ in range(rows)]
        for (w, j, i), pos in self.layout.items():
            if w == weight:
                matrix[j][i] = solution[pos]
        return matrix

    def label_shift(self):
        shifts = {self.target_labels[w] - self.source_labels[w] for w in self.weights}
        return shifts.pop() if len(shifts) == 1 else None

    def compose(self, other, coefficients=None, other_coefficients=None):
        """``other o self`` per weight, on the weights both maps cover."""
        result = {}
        for weight in self.weights:
            if weight not in other.source_labels:
                continue
            middle = self.target.weight_space(self.target_labels[weight])
            middle_other = other.source.weight_space(other.source_labels[weight])
            if ([self.target.basis[p][0] for p in middle]
                    != [other.source.basis[p][0] for p in middle_other]):
                raise ValueError("Intertwiners do not share a middle module at weight {}".format(weight))
            left = other.block(weight, other_coefficients)
            right = self.block(weight, coefficients)
            result[weight] = [[sum((left[j][k] * right[k][i] for k in range(len(right))), QQ.zero)
                               for i in range(len(right[0]) if right else 0)] for j in range(len(left))]
        return result

    def to_json(self):
        shift = self.label_shift()
        return {
            "dimension": str(self.dim),
            "bijective": self.bijective,
            "parity_reversing": self.parity_reversing,
            "label_shift": None if shift is None else str(shift),
            "weights": [rational_str(w) for w in self.weights],
            "basis": [[rational_str(x) for x in vec] for vec in self.basis],
        }


def maps_proportional(left, right):
    """Whether two per-weight matrix families agree up to one nonzero scalar."""
    ratio = None
    for weight in sorted(set(left) & set(right)):
        for row_l, row_r in zip(left[weight], right[weight]):
            for x, y in zip(row_l, row_r):
                if not x and not y:
                    continue
                if not x or not y:
                    return False
                if ratio is None:
                    ratio = x / y
                elif x / y != ratio:
                    return False
    return ratio is not None


def _interior_weights(W):
    return {W.weight_of(label): label for label in W.interior_labels()}


def find_intertwiners(W1, W2, parity_reversing=False, rng=None):
    """Solve for all weight-preserving intertwiners between two windows.

    Parameters
    ----------
    W1, W2 : WindowedModule
        Source and target windows realizing the same generators.
    parity_reversing : bool, optional
        Look for maps that flip parity instead of preserving it, by default False
    rng : numpy.random.Generator, optional
        Source of the generic combination used for the bijectivity test.

    Returns
    -------
    Intertwiners
        Basis in reduced row-echelon form (first nonzero coordinate 1).

    Raises
    ------
    ValueError
        If the windows realize different generators or share no interior weight.
    """
    if set(W1.generators) != set(W2.generators):
        raise ValueError("Incompatible windows: the realized generators differ")
    weights1, weights2 = _interior_weights(W1), _interior_weights(W2)
    common = sorted(set(weights1) & set(weights2))
    if not common:
        raise ValueError("Incompatible windows: no common interior weight")
    flip = int(parity_reversing)

    layout = {}
    for w in common:
        src = W1.weight_space(weights1[w])
        dst = W2.weight_space(weights2[w])
        for j, p2 in enumerate(dst):
            for i, p1 in enumerate(src):
                if W2.parities[p2] == W1.parities[p1] ^ flip:
                    layout[(w, j, i)] = len(layout)

    common_set = set(common)
    equations, seen = [], set()
    for g in W1.generators:
        m = int(g.index.value)
        for w in common:
            w_next = w + m
            if w_next not in common_set:
                continue
            a1 = W1.block(g, weights1[w])
            a2 = W2.block(g, weights2[w])
            n_src = len(W1.weight_space(weights1[w]))
            for j in range(len(W2.weight_space(weights2[w_next]))):
                for i in range(n_src):
                    eq = {}
                    for k, row in enumerate(a1):
                        pos = layout.get((w_next, j, k))
                        if row[i] and pos is not None:
                            eq[pos] = eq.get(pos, QQ.zero) + row[i]
                    for k, value in enumerate(a2[j]):
                        pos = layout.get((w, k, i))
                        if value and pos is not None:
                            eq[pos] = eq.get(pos, QQ.zero) - value
                    eq = {pos: x for pos, x in eq.items() if x}
                    key = tuple(sorted(eq.items()))
                    if eq and key not in seen:
                        seen.add(key)
                        equations.append(eq)

    kernel = _nullspace_rows(equations, len(layout)) if layout else []
    basis = []
    if kernel:
        reduced, _ = DomainMatrix(kernel, (len(kernel), len(layout)), QQ).rref()
        basis = [[to_rational(x) for x in row] for row in reduced.to_Matrix().tolist() if any(row)]

    result = Intertwiners(W1, W2, parity_reversing, common, layout, basis,
                          source_labels={w: weights1[w] for w in common},
                          target_labels={w: weights2[w] for w in common})
    result.bijective = _generic_bijective(result, rng)
    return result


def _generic_bijective(intertwiners, rng):
    if not intertwiners.dim:
        return False
    rng = np.random.default_rng(0) if rng is None else rng
    coefficients = [random_rational(rng) or QQ.one for _ in range(intertwiners.dim)]
    for w in intertwiners.weights:
        block = intertwiners.block(w, coefficients)
        size = len(block)
        if not block or any(len(row) != size for row in block) or _rank(block, size) != size:
            return False
    return True


def realize_window(spec, window=DEFAULT_WINDOW, maxidx=DEFAULT_MAX_INDEX):
    """Window of ``spec``, including the simple sub-quotient of R_{a,b,c} at 2b + c = 2.

    That sub-quotient is not spanned by basis slots; it is restricted from the full
    window to ``plus_degenerate_span`` and covers the full window's interior.
    """
    if spec.family == "rabc" and spec.quotient == "simple-subquotient":
        params = spec.rational_parameters()
        b, c = params["b"], params["c"]
        if 2 * b + c == 2 and 2 * b - c != 2:
            full = instantiate_window(dataclasses.replace(spec, quotient="full"), window[0], window[1], maxidx)
            return restrict_window(full, plus_degenerate_span(full))
    return instantiate_window(spec, window[0], window[1], maxidx)


RAB_TWISTS = ((False, False), (True, False), (False, True), (True, True))


def match_rab_parameter(spec, candidates, window=DEFAULT_WINDOW, maxidx=DEFAULT_MAX_INDEX):
    """Twisted R_{a,b*} isomorphic to the realized module on the window.

    Parameters
    ----------
    spec : ModuleSpec
        Module with concrete parameters, realized by ``realize_window``.
    candidates : iterable
        Values of b* to try.
    window : tuple of int, optional
        Label window, by default ``DEFAULT_WINDOW``.
    maxidx : int, optional
        Largest generator index, by default ``DEFAULT_MAX_INDEX``.

    Returns
    -------
    list of ModuleSpec
        Every R_{a,b*}, with or without the parity change and the mirror twist,
        that admits a bijective even intertwiner from the realized module.
    """
    W = realize_window(spec, window, maxidx)
    a = spec.rational_parameters()["a"]
    matches = []
    for b_star in candidates:
        for flipped, mirrored in RAB_TWISTS:
            target = ModuleSpec.concrete("rab", a, b_star)
            if flipped:
                target = parity_flip(target)
            if mirrored:
                target = mirror(target)
            other = instantiate_window(target, window[0], window[1], maxidx)
            if find_intertwiners(W, other).bijective:
                matches.append(target)
    return matches


# ---------------------------------------------------------------------------
# simplicity
# ---------------------------------------------------------------------------

@dataclass
class SimplicityVerdict:
    module: str
    family: str
    parameters: dict
    verdict: str
    criterion: str
    witnesses: list = field(default_factory=list)
    composition: list = field(default_factory=list)
    trivial_vectors: object = None

    def to_json(self):
        out = {
            "module": self.module,
            "family": self.family,
            "parameters": {k: rational_str(v) for k, v in self.parameters.items()},
            "verdict": self.verdict,
            "criterion": self.criterion,
            "witnesses": [w.to_json() for w in self.witnesses],
            "composition": list(self.composition),
        }
        if self.trivial_vectors is not None:
            out["trivial_vectors"] = self.trivial_vectors.to_json()
        return out


def normalize_shift(spec):
    """Shift a into [0, 1), using A_{a,b} = A_{a+1,b} and its analogues for the other families."""
    params = spec.rational_parameters()
    a = params["a"]
    floor = a.numerator // a.denominator
    if floor == 0:
        return spec
    shifted = ModuleSpec.concrete(spec.family, a - floor, params["b"], params.get("c"), quotient=spec.quotient)
    return dataclasses.replace(shifted, parity_flipped=spec.parity_flipped, mirrored=spec.mirrored)


def _criterion(family, a, b, c):
    """Returns (verdict, criterion, composition) from the classification criteria."""
    integral = a == 0
    if family == "a":
        criterion = "A(a,b) is simple iff a is not an integer or b is not 0 or 1"
        if integral and b == 0:
            return "not-simple", criterion, ["sub: span{v_0}", "quotient: complement of v_0"]
        if integral and b == 1:
            return "not-simple", criterion, ["sub: complement of v_0", "quotient: span{v_0}"]
        return "simple", criterion, []
    if family == "at":
        criterion = "A(a,b,c) is simple iff a is not an integer, b is not 0 or 1, or c != 0"
        if integral and c == 0 and b in (0, 1):
            sub = "span{v_0}" if b == 0 else "complement of v_0"
            return "not-simple", criterion, ["sub: {}".format(sub)]
        return "simple", criterion, []
    if family == "rab":
        criterion = "R(a,b) is not simple iff a = 0 and b is 1 or 1/2 (a shifted into [0, 1))"
        if integral and b == 1:
            return "not-simple", criterion, ["sub: complement of vplus_0", "quotient: span{vplus_0}"]
        if integral and b == HALF:
            return "not-simple", criterion, ["sub: span{vminus_0}", "quotient: complement of vminus_0"]
        return "simple", criterion, []
    criterion = "R(a,b,c) is simple iff 2b + c != 2 and 2b - c != 2"
    composition = []
    if 2 * b - c == 2:
        composition.append("sub: span{vminus, vpm}, quotient: span{v, vplus}")
    if 2 * b + c == 2:
        composition.append("sub: span{vplus, vpm + 2(a+i) v}, quotient: span{v, vminus}")
    if not composition:
        return "simple", criterion, []
    if b == 1 and c == 0 and a in (0, HALF):
        return "trivial", criterion + "; at b = 1, c = 0 and a in {0, 1/2} trivial composition factors occur", \
            composition
    return "not-simple", criterion, composition


def classify_simplicity(spec, window=DEFAULT_WINDOW, maxidx=DEFAULT_MAX_INDEX, search=True, rng=None):
    """Simplicity verdict of a module with rational parameters.

    The verdict comes from the classification criteria after shifting a into [0, 1).
    Not-simple verdicts are corroborated by a window search whose maximal invariant
    subspaces are attached as witnesses, together with the trivial vectors found.

    Raises
    ------
    ValueError
        For symbolic parameters or a module that is already a quotient.
    """
    if not spec.is_concrete:
        raise ValueError("Classification needs concrete parameters, got {}".format(spec.describe()))
    if spec.quotient != "full":
        raise ValueError("Classification applies to full modules, got quotient {}".format(spec.quotient))
    normalized = normalize_shift(spec)
    params = normalized.rational_parameters()
    verdict, criterion, composition = _criterion(spec.family, params["a"], params["b"], params.get("c"))
    result = SimplicityVerdict(normalized.describe(), spec.family, params, verdict, criterion,
                               composition=composition)
    if verdict != "simple" and search:
        W = instantiate_window(normalized, window[0], window[1], maxidx)
        result.witnesses = find_invariant_subspaces(W, maxidx, rng)
        result.trivial_vectors = trivial_vectors(W)
        if not result.witnesses:
            warnings.warn("No window witness for {} on [{}, {}]".format(result.module, *window))
    return result


def coherence_grid():
    """Parameter points covering the degeneracy strata of all four families."""
    points = []
    for a in GRID_A:
        for b in GRID_B:
            points.append(("a", a, b, None))
            points.append(("rab", a, b, None))
            for c in ("0", "3"):
                points.append(("at", a, b, c))
            bq = to_rational(b)
            cs = []
            for c in (QQ(0), QQ(1), QQ(-1), 2 - 2 * bq, 2 * bq - 2):
                if c not in cs:
                    cs.append(c)
            points.extend(("rabc", a, b, rational_str(c)) for c in cs)
    return points


def _coherence_point(point, window, maxidx, seed):
    family, a, b, c = point
    spec = ModuleSpec.concrete(family, a, b, c)
    verdict = classify_simplicity(spec, window, maxidx, search=False)
    W = instantiate_window(normalize_shift(spec), window[0], window[1], maxidx)
    witnesses = find_invariant_subspaces(W, maxidx, np.random.default_rng(seed))
    return {
        "module": spec.describe(),
        "verdict": verdict.verdict,
        "witnesses": [w.describe() for w in witnesses],
        "coherent": (verdict.verdict == "simple") == (not witnesses),
    }


def coherence_sweep(points=None, window=DEFAULT_WINDOW, maxidx=DEFAULT_MAX_INDEX, n_jobs=1, seed=0,
                    verbose=False):
    """Classifier verdicts against window witnesses over a parameter grid, in parallel."""
    points = coherence_grid() if points is None else points
    rows = tqdm(points, desc="coherence") if verbose else points
    return Parallel(n_jobs=n_jobs)(delayed(_coherence_point)(p, window, maxidx, seed) for p in rows)
