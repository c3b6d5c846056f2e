"""Module families of the intermediate series and of length two.

Families and their slots:

* ``a``    A_{a,b}, a Virasoro module on v_i
* ``at``   A_{a,b,c}, a module over the twisted Heisenberg-Virasoro algebra t on v_i
* ``rab``  R_{a,b} on v^+_i (even) and v^-_i (odd)
* ``rabc`` R_{a,b,c} on v_i, v^{+-}_i (even) and v^+_i, v^-_i (odd)

C acts as zero everywhere. Actions are polynomial in the parameters and in the
index symbols, so the module axioms can be checked once for all integers.
"""
import dataclasses
from dataclasses import dataclass

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from exact_arith import (RING, IndexExpr, as_poly, idx, is_concrete, poly_substitute,
                         poly_value, rational_str, to_rational, var)
from superalgebra import Generator, bracket

FAMILIES = ("a", "at", "rab", "rabc")
FAMILY_SLOTS = {
    "a": ("v",),
    "at": ("v",),
    "rab": ("vplus", "vminus"),
    "rabc": ("v", "vplus", "vminus", "vpm"),
}
FAMILY_KINDS = {
    "a": ("L", "C"),
    "at": ("L", "H", "C"),
    "rab": ("L", "H", "Gplus", "Gminus", "C"),
    "rabc": ("L", "H", "Gplus", "Gminus", "C"),
}
FAMILY_PARAMETERS = {
    "a": ("a", "b"),
    "at": ("a", "b", "c"),
    "rab": ("a", "b"),
    "rabc": ("a", "b", "c"),
}
SLOT_PARITY = {
    "a": {"v": 0},
    "at": {"v": 0},
    "rab": {"vplus": 0, "vminus": 1},
    "rabc": {"v": 0, "vpm": 0, "vplus": 1, "vminus": 1},
}
QUOTIENTS = ("full", "simple-subquotient")
MIRROR_KINDS = {"Gplus": "Gminus", "Gminus": "Gplus"}
HALF = QQ(1, 2)


@dataclass(frozen=True)
class ModuleSpec:
    """A module family with symbolic or rational parameters.

    Parameters are stored as polynomials in ``exact_arith.RING``; a parameter is
    concrete when its polynomial is constant. ``c`` is ``None`` for the families
    without a c parameter. ``parity_flipped`` and ``mirrored`` record the parity
    change and the mirror twist.
    """
    family: str
    a: object = None
    b: object = None
    c: object = None
    quotient: str = "full"
    parity_flipped: bool = False
    mirrored: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError("Unknown module family: {}".format(self.family))
        if self.quotient not in QUOTIENTS:
            raise ValueError("Unknown quotient flag: {}".format(self.quotient))
        names = FAMILY_PARAMETERS[self.family]
        for name in ("a", "b", "c"):
            value = getattr(self, name)
            if name not in names:
                if value is not None:
                    raise ValueError("Family {} has no parameter {}".format(self.family, name))
                continue
            object.__setattr__(self, name, var(name) if value is None else as_poly(value))

    @classmethod
    def symbolic(cls, family):
        return cls(family)

    @classmethod
    def concrete(cls, family, a, b, c=None, quotient="full"):
        values = {"a": a, "b": b, "c": c}
        for name in FAMILY_PARAMETERS[family]:
            if values[name] is None:
                raise ValueError("Family {} needs parameter {}".format(family, name))
            values[name] = to_rational(values[name])
        return cls(family, values["a"], values["b"], values["c"], quotient=quotient)

    @property
    def is_concrete(self):
        return all(is_concrete(getattr(self, name)) for name in FAMILY_PARAMETERS[self.family])

    def parameters(self):
        return {name: getattr(self, name) for name in FAMILY_PARAMETERS[self.family]}

    def rational_parameters(self):
        if not self.is_concrete:
            raise ValueError("Module {} has symbolic parameters".format(self.family))
        return {name: poly_value(p) for name, p in self.parameters().items()}

    def slots(self):
        return FAMILY_SLOTS[self.family]

    def slot_parity(self, slot):
        if slot not in SLOT_PARITY[self.family]:
            raise ValueError("Unknown slot {} for family {}".format(slot, self.family))
        return SLOT_PARITY[self.family][slot] ^ int(self.parity_flipped)

    def describe(self):
        params = []
        for name, p in self.parameters().items():
            text = rational_str(poly_value(p)) if is_concrete(p) else str(p)
            params.append("{}={}".format(name, text))
        prefix = ("Pi " if self.parity_flipped else "") + ("mirror " if self.mirrored else "")
        return "{}{}({})".format(prefix, self.family, ", ".join(params))


def parity_flip(spec):
    """Apply the parity change functor; the action tables are unchanged."""
    return dataclasses.replace(spec, parity_flipped=not spec.parity_flipped)


def mirror(spec):
    """Twist by the automorphism H -> -H, G^+ <-> G^- (L and C fixed)."""
    return dataclasses.replace(spec, mirrored=not spec.mirrored)


class ModuleVector:
    """Finite combination of labeled basis vectors ``(slot, label)`` with polynomial coefficients."""
    __slots__ = ("terms", "parity")

    def __init__(self, terms=None, parity=None):
        self.terms = {}
        self.parity = parity
        for (slot, label), coeff in (terms or {}).items():
            self.add_term(slot, label, coeff)

    def add_term(self, slot, label, coeff):
        key = (slot, idx(label))
        coeff = as_poly(coeff) + self.terms.get(key, RING.zero)
        if coeff:
            self.terms[key] = coeff
        else:
            self.terms.pop(key, None)

    @property
    def is_zero(self):
        return not self.terms

    def coefficient(self, slot, label):
        return self.terms.get((slot, idx(label)), RING.zero)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda item: (item[0][0], item[0][1].sort_key()))

    def __add__(self, other):
        result = ModuleVector(self.terms, self.parity if self.terms else other.parity)
        for (slot, label), coeff in other.terms.items():
            result.add_term(slot, label, coeff)
        return result

    def scale(self, factor):
        factor = as_poly(factor)
        return ModuleVector({key: c * factor for key, c in self.terms.items()}, self.parity)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def substitute(self, bindings):
        index_bindings = {k: v for k, v in bindings.items() if isinstance(k, str)}
        result = ModuleVector(parity=self.parity)
        for (slot, label), coeff in self.terms.items():
            result.add_term(slot, label.substitute(index_bindings), poly_substitute(coeff, bindings))
        return result

    def __eq__(self, other):
        if not isinstance(other, ModuleVector):
            return NotImplemented
        return self.terms == other.terms

    def __str__(self):
        if self.is_zero:
            return "0"
        return " + ".join("({})*{}[{}]".format(c, slot, label) for (slot, label), c in self.sorted_terms())

    __repr__ = __str__


def _act_a(spec, kind, m, slot, i):
    if kind == "L":
        return [(spec.a + i.to_poly() + spec.b * m.to_poly(), "v", m + i)]
    return []


def _act_at(spec, kind, m, slot, i):
    if kind == "H":
        return [(spec.c, "v", m + i)]
    return _act_a(spec, kind, m, slot, i)


def _act_rab(spec, kind, m, slot, i):
    a, b = spec.a, spec.b
    mp, ip = m.to_poly(), i.to_poly()
    if kind == "L":
        shift = b if slot == "vplus" else b - HALF
        return [(a + ip + shift * mp, slot, m + i)]
    if kind == "H":
        eigen = 2 - 2 * b if slot == "vplus" else 1 - 2 * b
        return [(eigen, slot, m + i)]
    # G^+ kills v^+ and G^- kills v^-
    if kind == "Gminus" and slot == "vplus":
        return [(RING.one, "vminus", m + i)]
    if kind == "Gplus" and slot == "vminus":
        return [(-(2 * a + (4 * b - 2) * mp + 2 * ip), "vplus", m + i)]
    return []


def _act_rabc(spec, kind, m, slot, i):
    a, b, c = spec.a, spec.b, spec.c
    mp, ip = m.to_poly(), i.to_poly()
    e = 2 * b - c - 2
    if kind == "L":
        if slot == "v":
            return [(a + ip + b * mp, "v", m + i)]
        if slot == "vpm":
            return [(a + ip + (b - 1) * mp, "vpm", m + i), (HALF * e * mp ** 2, "v", m + i)]
        return [(a + ip + (b - HALF) * mp, slot, m + i)]
    if kind == "H":
        if slot == "v":
            return [(c, "v", m + i)]
        if slot == "vpm":
            return [(c, "vpm", m + i), (-mp * e, "v", m + i)]
        return [(c + 1 if slot == "vplus" else c - 1, slot, m + i)]
    if kind == "Gplus":
        if slot == "v":
            return [(RING.one, "vplus", m + i)]
        if slot == "vminus":
            return [(RING.one, "vpm", m + i), ((c + 2 - 2 * b) * mp, "v", m + i)]
        if slot == "vpm":
            return [(e * mp, "vplus", m + i)]
        return []
    if kind == "Gminus":
        if slot == "v":
            return [(RING.one, "vminus", m + i)]
        if slot == "vplus":
            return [(-RING.one, "vpm", m + i), (-(2 * a + 2 * ip + (2 * b + c) * mp), "v", m + i)]
        if slot == "vpm":
            return [(-(2 * a + 2 * ip + (2 * b + c - 2) * mp), "vminus", m + i)]
        return []
    return []


ACTION_TABLES = {
    "a": _act_a,
    "at": _act_at,
    "rab": _act_rab,
    "rabc": _act_rabc,
}


def act(spec, g, slot, label):
    """Apply a generator to a basis vector of a module family.

    Parameters
    ----------
    spec : ModuleSpec
        The module.
    g : Generator
        An N=2 Ramond generator of the family's algebra (Vir for ``a``, t for ``at``).
    slot : str
        Basis slot, one of ``FAMILY_SLOTS[spec.family]``.
    label : IndexExpr, int or str
        Label of the basis vector.

    Returns
    -------
    ModuleVector
        The image, with parity ``parity(g) + parity(slot)``.

    Raises
    ------
    ValueError
        For an unknown slot, a generator outside the family's algebra or a non-Ramond generator.
    """
    parity = spec.slot_parity(slot)
    if g.sector != "n2-ramond":
        raise ValueError("Module families are N=2 Ramond modules, got {}".format(g.sector))
    if g.kind not in FAMILY_KINDS[spec.family]:
        raise ValueError("{} is not in the algebra acting on family {}".format(g, spec.family))
    kind, sign = g.kind, 1
    if spec.mirrored:
        kind = MIRROR_KINDS.get(kind, kind)
        sign = -1 if kind == "H" else 1
    out = ModuleVector(parity=(parity + g.parity) % 2)
    for coeff, new_slot, new_label in ACTION_TABLES[spec.family](spec, kind, g.index, slot, idx(label)):
        out.add_term(new_slot, new_label, sign * coeff)
    return out


def act_on_vector(spec, g, vector):
    result = ModuleVector(parity=None if vector.parity is None else (vector.parity + g.parity) % 2)
    for (slot, label), coeff in vector.terms.items():
        result = result + act(spec, g, slot, label).scale(coeff)
    return result


def act_element(spec, element, slot, label):
    """Action of an AlgebraElement; central terms vanish since C acts as zero."""
    result = ModuleVector()
    for gen, coeff in element.body.items():
        result = result + act(spec, gen, slot, label).scale(coeff)
    return result


@dataclass
class AxiomReport:
    family: str
    residuals: list

    @property
    def passed(self):
        return all(r["residual"] == "0" for r in self.residuals)

    def failures(self):
        return [r for r in self.residuals if r["residual"] != "0"]


def axiom_residual(spec, x, y, slot, label="i"):
    """x(y v) - (-1)^{|x||y|} y(x v) - [x, y] v on the basis vector ``(slot, label)``."""
    sign = -1 if x.parity and y.parity else 1
    v = ModuleVector({(slot, label): 1}, spec.slot_parity(slot))
    return (act_on_vector(spec, x, act_on_vector(spec, y, v))
            - act_on_vector(spec, y, act_on_vector(spec, x, v)).scale(sign)
            - act_element(spec, bracket(x, y), slot, label))


def verify_axioms_symbolic(spec):
    """Check the supermodule axiom for every ordered pair of generator kinds and every slot.

    Indices are the symbols m and n and the label is the symbol i, so a zero residual
    holds for all integers at once.
    """
    residuals = []
    kinds = FAMILY_KINDS[spec.family]
    for x_kind in kinds:
        x = Generator(x_kind, 0 if x_kind == "C" else "m")
        for y_kind in kinds:
            y = Generator(y_kind, 0 if y_kind == "C" else "n")
            for slot in spec.slots():
                residual = axiom_residual(spec, x, y, slot)
                residuals.append({"x": x_kind, "y": y_kind, "slot": slot, "residual": str(residual)})
    return AxiomReport(spec.family, residuals)


def _kept_basis(spec):
    """Predicate selecting the basis vectors of the realized module."""
    if spec.quotient == "full":
        return lambda slot, label: True
    params = spec.rational_parameters()
    a, b = params["a"], params["b"]
    c = params.get("c")
    a_integral = a.denominator == 1
    removed_label = int(-a.numerator) if a_integral else None
    if spec.family in ("a", "at"):
        if a_integral and b in (QQ(0), QQ(1)) and (c is None or c == 0):
            return lambda slot, label: label != removed_label
    elif spec.family == "rab":
        if a_integral and b in (QQ(1), HALF):
            dropped = ("vplus" if b == 1 else "vminus", removed_label)
            return lambda slot, label: (slot, label) != dropped
    else:
        if 2 * b - c == 2:
            return lambda slot, label: slot in ("vminus", "vpm")
        if 2 * b + c == 2:
            raise ValueError("The simple sub-quotient at 2b + c = 2 is not spanned by basis slots; "
                             "restrict a window to its witness with analysis.restrict_window")
    raise ValueError("Quotient flag {} needs degenerate parameters, got {}".format(spec.quotient, spec.describe()))


class WindowedModule:
    """A module truncated to labels in ``[lo, hi]`` with exact sparse generator matrices.

    ``images[g][col]`` maps target basis indices to QQ entries. A label is a boundary
    label when some generator with |index| <= ``maxidx`` can map it out of the window;
    closure computations only use the interior labels. Restricted modules pass their
    interior explicitly.
    """

    def __init__(self, basis, parities, weights, lo, hi, maxidx, images, spec=None, interior=None):
        self.basis = list(basis)
        self.parities = list(parities)
        self.weights = list(weights)
        self.lo, self.hi, self.maxidx = lo, hi, maxidx
        self.interior = (lo + maxidx, hi - maxidx) if interior is None else tuple(interior)
        self.images = images
        self.spec = spec
        self.index = {key: pos for pos, key in enumerate(self.basis)}
        self.by_label = {}
        for pos, (_, label) in enumerate(self.basis):
            self.by_label.setdefault(label, []).append(pos)
        self.generators = sorted(images, key=lambda g: g.sort_key())

    @property
    def dim(self):
        return len(self.basis)

    def labels(self):
        return sorted(self.by_label)

    def interior_labels(self):
        return [l for l in self.labels() if not self.is_boundary(l)]

    def is_boundary(self, label):
        return not (self.interior[0] <= label <= self.interior[1])

    def weight_space(self, label, parity=None):
        positions = self.by_label.get(label, [])
        if parity is None:
            return list(positions)
        return [pos for pos in positions if self.parities[pos] == parity]

    def weight_of(self, label):
        positions = self.by_label.get(label)
        return self.weights[positions[0]] if positions else None

    def dims_by_parity(self, label):
        return (len(self.weight_space(label, 0)), len(self.weight_space(label, 1)))

    def block(self, g, label):
        """Matrix (as row lists) of ``g`` from the weight space at ``label`` to ``label + index(g)``."""
        src = self.weight_space(label)
        dst = self.weight_space(label + int(g.index.value))
        columns = self.images[g]
        return [[columns[col].get(row, QQ.zero) for col in src] for row in dst]

    def matrix(self, g):
        rows = {}
        for col, column in self.images[g].items():
            for row, value in column.items():
                rows.setdefault(row, {})[col] = value
        return DomainMatrix(rows, (self.dim, self.dim), QQ)

    def support(self):
        return sorted({self.weights[pos] for pos in range(self.dim)})

    def length(self):
        dims = [max(self.dims_by_parity(label)) for label in self.interior_labels()]
        return max(dims) if dims else 0

    def to_json(self):
        matrices = {}
        for g in self.generators:
            entries = sorted((row, col, rational_str(value))
                             for col, column in self.images[g].items() for row, value in column.items())
            matrices[str(g)] = [[str(row), str(col), value] for row, col, value in entries]
        out = {}
        if self.spec is not None:
            out["module"] = self.spec.describe()
            out["quotient"] = self.spec.quotient
        out["window"] = [str(self.lo), str(self.hi)]
        out["max_index"] = str(self.maxidx)
        out["basis"] = [{"slot": slot, "label": str(label), "parity": str(parity), "weight": rational_str(weight)}
                        for (slot, label), parity, weight in zip(self.basis, self.parities, self.weights)]
        out["boundary_labels"] = [str(l) for l in self.labels() if self.is_boundary(l)]
        out["matrices"] = matrices
        return out


def window_generators(kinds, maxidx):
    return [Generator(kind, m) for kind in kinds if kind != "C" for m in range(-maxidx, maxidx + 1)]


def instantiate_window(spec, lo, hi, maxidx):
    """Realize a module with rational parameters on the labels ``lo..hi``.

    Parameters
    ----------
    spec : ModuleSpec
        Module with concrete parameters; a ``simple-subquotient`` flag removes the
        basis vectors outside the simple sub-quotient and drops images onto them.
    lo, hi : int
        Window of labels, ``lo < hi``.
    maxidx : int
        Largest |index| of the generators realized as matrices.

    Returns
    -------
    WindowedModule
    """
    if not spec.is_concrete:
        raise ValueError("Windows need concrete parameters, got {}".format(spec.describe()))
    if not lo < hi:
        raise ValueError("Empty window [{}, {}]".format(lo, hi))
    if maxidx < 1:
        raise ValueError("maxidx must be at least 1, got {}".format(maxidx))
    keep = _kept_basis(spec)
    a = spec.rational_parameters()["a"]
    basis, parities, weights = [], [], []
    for label in range(lo, hi + 1):
        for slot in spec.slots():
            if keep(slot, label):
                basis.append((slot, label))
                parities.append(spec.slot_parity(slot))
                weights.append(a + label)
    index = {key: pos for pos, key in enumerate(basis)}
    images = {}
    for g in window_generators(FAMILY_KINDS[spec.family], maxidx):
        columns = {}
        for col, (slot, label) in enumerate(basis):
            column = {}
            for (new_slot, new_label), coeff in act(spec, g, slot, label).terms.items():
                target = (new_slot, int(new_label.value))
                if target in index:
                    column[index[target]] = poly_value(coeff)
            columns[col] = column
        images[g] = columns
    return WindowedModule(basis, parities, weights, lo, hi, maxidx, images, spec)


def substitution_bindings(spec):
    return {name: value for name, value in spec.rational_parameters().items()}


def symbolic_entry(spec, g, slot, label, target_slot, target_label):
    """Coefficient of ``(target_slot, target_label)`` in ``act(g, (slot, label))``, symbolic in the family."""
    symbolic = ModuleSpec.symbolic(spec.family)
    coeff = act(symbolic, g, slot, label).coefficient(target_slot, target_label)
    return poly_substitute(coeff, substitution_bindings(spec))
