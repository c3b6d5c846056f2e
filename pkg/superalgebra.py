"""Structure constants of the N=2 and N=1 superconformal algebras.

Generators carry a kind, an index and a sector. Ramond sectors index the odd
generators by integers, Neveu-Schwarz sectors by half-odd integers. Brackets
follow the convention

    [L_m, L_n] = (n - m) L_{m+n} + (1/12)(m^3 - m) δ_{m+n,0} C
    [L_m, H_n] = n H_{m+n}
    [L_m, G^±_p] = (p - m/2) G^±_{m+p}
    [H_m, H_n] = (1/3) m δ_{m+n,0} C
    [H_m, G^±_p] = ± G^±_{m+p}
    [G^+_p, G^-_q] = -2 L_{p+q} + (p - q) H_{p+q} + (1/3)(p^2 - 1/4) δ_{p+q,0} C
    [G^±_p, G^±_q] = 0

and [x, y] = -(-1)^{|x||y|} [y, x]. The N=1 algebra uses L, G, C with
[G_p, G_q] = -2 L_{p+q} + (1/3)(p^2 - 1/4) δ_{p+q,0} C.
"""
from dataclasses import dataclass
from functools import lru_cache

from joblib import Parallel, delayed
from sympy import QQ
from tqdm import tqdm

from exact_arith import RING, IndexExpr, as_poly, idx, poly_substitute

SECTORS = ("n2-ramond", "n2-ns", "n1-ramond", "n1-ns")
SECTOR_KINDS = {
    "n2-ramond": ("L", "H", "Gplus", "Gminus", "C"),
    "n2-ns": ("L", "H", "Gplus", "Gminus", "C"),
    "n1-ramond": ("L", "G", "C"),
    "n1-ns": ("L", "G", "C"),
}
ODD_KINDS = frozenset(("Gplus", "Gminus", "G"))
KIND_RANK = {"L": 0, "H": 1, "Gplus": 2, "G": 2, "Gminus": 3, "C": 4}
KIND_LABEL = {"L": "L", "H": "H", "Gplus": "G+", "Gminus": "G-", "G": "G", "C": "C"}

SUBALGEBRAS = {
    "Vir": frozenset(("L", "C")),
    "t": frozenset(("L", "H", "C")),
    "qplus": frozenset(("L", "H", "Gplus", "C")),
    "qminus": frozenset(("L", "H", "Gminus", "C")),
    # in N=2 sectors s is spanned by G^+ + G^-, never by a single odd generator
    "s": frozenset(("L", "G", "C")),
}

JACOBI_MAX_INDEX = 6
VIRASORO_CENTRAL = QQ(1, 12)
HEISENBERG_CENTRAL = QQ(1, 3)
ODD_CENTRAL = QQ(1, 3)


def is_ramond(sector):
    return sector.endswith("ramond")


def check_sector(sector):
    if sector not in SECTORS:
        raise ValueError("Unknown sector: {}".format(sector))
    return sector


@dataclass(frozen=True)
class Generator:
    kind: str
    index: IndexExpr
    sector: str = "n2-ramond"

    def __post_init__(self):
        check_sector(self.sector)
        if self.kind not in SECTOR_KINDS[self.sector]:
            raise ValueError("Generator kind {} does not exist in sector {}".format(self.kind, self.sector))
        index = idx(self.index)
        object.__setattr__(self, "index", index)
        if self.kind == "C":
            if not index.is_zero:
                raise ValueError("The central element has index 0, got {}".format(index))
        elif index.is_concrete:
            if self.kind in ODD_KINDS and not is_ramond(self.sector):
                ok = index.is_half_odd
            else:
                ok = index.is_integer
            if not ok:
                raise ValueError("Index {} is off the {} lattice for {}".format(index, self.sector, self.kind))

    @property
    def parity(self):
        return 1 if self.kind in ODD_KINDS else 0

    def sort_key(self):
        return (KIND_RANK[self.kind], self.index.sort_key())

    def with_index(self, index):
        return Generator(self.kind, index, self.sector)

    def __str__(self):
        if self.kind == "C":
            return "C"
        return "{}[{}]".format(KIND_LABEL[self.kind], self.index)


def L(m, sector="n2-ramond"):
    return Generator("L", m, sector)


def H(m, sector="n2-ramond"):
    return Generator("H", m, sector)


def Gp(m, sector="n2-ramond"):
    return Generator("Gplus", m, sector)


def Gm(m, sector="n2-ramond"):
    return Generator("Gminus", m, sector)


def G(m, sector="n1-ramond"):
    return Generator("G", m, sector)


def C(sector="n2-ramond"):
    return Generator("C", 0, sector)


def _resolve_guard(guard):
    # a concrete guard either vanishes (term kept unconditionally) or kills the term
    if guard.is_concrete:
        return IndexExpr() if guard.doubled == 0 else None
    return guard


class AlgebraElement:
    """A finite combination of generators plus guarded central terms.

    ``body`` maps non-central generators to polynomial coefficients. ``central``
    maps a guard (an IndexExpr that must vanish for the term to survive) to the
    coefficient of C; the zero guard holds the unconditional central part.
    """
    __slots__ = ("body", "central")

    def __init__(self, body=None, central=None):
        self.body = {}
        self.central = {}
        for gen, coeff in (body or {}).items():
            if gen.kind == "C":
                self._add_central(IndexExpr(), as_poly(coeff))
            else:
                coeff = as_poly(coeff) + self.body.get(gen, RING.zero)
                if coeff:
                    self.body[gen] = coeff
                else:
                    self.body.pop(gen, None)
        for guard, coeff in (central or {}).items():
            self._add_central(guard, as_poly(coeff))

    def _add_central(self, guard, coeff):
        guard = _resolve_guard(idx(guard))
        if guard is None:
            return
        coeff = coeff + self.central.get(guard, RING.zero)
        if coeff:
            self.central[guard] = coeff
        else:
            self.central.pop(guard, None)

    @classmethod
    def of(cls, gen, coeff=1):
        return cls({gen: coeff})

    @property
    def is_zero(self):
        return not self.body and not self.central

    def central_part(self):
        return self.central.get(IndexExpr(), RING.zero)

    def terms(self):
        return sorted(self.body.items(), key=lambda item: item[0].sort_key())

    def __add__(self, other):
        result = AlgebraElement(self.body, self.central)
        for gen, coeff in other.body.items():
            result = AlgebraElement._merge(result, gen, coeff)
        for guard, coeff in other.central.items():
            result._add_central(guard, coeff)
        return result

    @staticmethod
    def _merge(element, gen, coeff):
        coeff = coeff + element.body.get(gen, RING.zero)
        if coeff:
            element.body[gen] = coeff
        else:
            element.body.pop(gen, None)
        return element

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor):
        factor = as_poly(factor)
        return AlgebraElement({g: c * factor for g, c in self.body.items()},
                              {k: c * factor for k, c in self.central.items()})

    __mul__ = scale
    __rmul__ = scale

    def substitute(self, bindings):
        """Substitute index symbols and parameters in indices, guards and coefficients."""
        index_bindings = {k: v for k, v in bindings.items() if isinstance(k, str)}
        body = {}
        for gen, coeff in self.body.items():
            new_gen = gen.with_index(gen.index.substitute(index_bindings))
            body[new_gen] = poly_substitute(coeff, bindings) + body.get(new_gen, RING.zero)
        central = {}
        for guard, coeff in self.central.items():
            new_guard = guard.substitute(index_bindings)
            central[new_guard] = poly_substitute(coeff, bindings) + central.get(new_guard, RING.zero)
        return AlgebraElement(body, central)

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.body == other.body and self.central == other.central

    def __hash__(self):
        return hash((frozenset(self.body.items()), frozenset(self.central.items())))

    def __str__(self):
        if self.is_zero:
            return "0"
        parts = ["({})*{}".format(coeff, gen) for gen, coeff in self.terms()]
        for guard, coeff in sorted(self.central.items(), key=lambda item: item[0].sort_key()):
            if guard.is_zero:
                parts.append("({})*C".format(coeff))
            else:
                parts.append("({})*C*delta[{}]".format(coeff, guard))
        return " + ".join(parts)

    __repr__ = __str__


def _ordered_bracket(x, y):
    """Table lookup for KIND_RANK[x.kind] <= KIND_RANK[y.kind]."""
    sector = x.sector
    m, n = x.index, y.index
    mp, np_ = m.to_poly(), n.to_poly()
    kinds = (x.kind, y.kind)
    if "C" in kinds:
        return AlgebraElement()
    if kinds == ("L", "L"):
        return AlgebraElement({L(m + n, sector): np_ - mp},
                              {m + n: VIRASORO_CENTRAL * (mp ** 3 - mp)})
    if kinds == ("L", "H"):
        return AlgebraElement({H(m + n, sector): np_})
    if x.kind == "L":
        # y is odd
        return AlgebraElement({y.with_index(m + n): np_ - QQ(1, 2) * mp})
    if kinds == ("H", "H"):
        return AlgebraElement(central={m + n: HEISENBERG_CENTRAL * mp})
    if x.kind == "H":
        return AlgebraElement({y.with_index(m + n): 1 if y.kind == "Gplus" else -1})
    if kinds == ("Gplus", "Gminus"):
        return AlgebraElement({L(m + n, sector): -2, H(m + n, sector): mp - np_},
                              {m + n: ODD_CENTRAL * (mp ** 2 - QQ(1, 4))})
    if kinds == ("G", "G"):
        return AlgebraElement({L(m + n, sector): -2},
                              {m + n: ODD_CENTRAL * (mp ** 2 - QQ(1, 4))})
    # [G^±, G^±] = 0
    return AlgebraElement()


@lru_cache(maxsize=None)
def bracket(x, y):
    """The super-bracket of two generators.

    Parameters
    ----------
    x, y : Generator
        Generators of the same sector; indices may be concrete or symbolic.

    Returns
    -------
    AlgebraElement
        The bracket, with central terms guarded by the vanishing of the index sum.

    Raises
    ------
    ValueError
        If the generators belong to different sectors.
    """
    if x.sector != y.sector:
        raise ValueError("Sector mismatch: {} is {} but {} is {}".format(x, x.sector, y, y.sector))
    if KIND_RANK[x.kind] <= KIND_RANK[y.kind]:
        return _ordered_bracket(x, y)
    sign = 1 if x.parity and y.parity else -1
    return _ordered_bracket(y, x).scale(sign)


def n1_bracket(x, y):
    """Bracket of the N=1 algebra: [G_p, G_q] = -2 L_{p+q} + (1/3)(p^2 - 1/4) delta C."""
    for g in (x, y):
        if g.sector not in ("n1-ramond", "n1-ns"):
            raise ValueError("{} is not an N=1 generator".format(g))
    return bracket(x, y)


def as_element(x):
    if isinstance(x, AlgebraElement):
        return x
    if isinstance(x, Generator):
        return AlgebraElement.of(x)
    raise TypeError("Expected a Generator or AlgebraElement, got {!r}".format(x))


def bracket_elements(x, y):
    """Bilinear extension of ``bracket``; central parts bracket to zero."""
    x, y = as_element(x), as_element(y)
    result = AlgebraElement()
    for gx, cx in x.body.items():
        for gy, cy in y.body.items():
            term = bracket(gx, gy)
            if not term.is_zero:
                result = result + term.scale(cx * cy)
    return result


def super_jacobi_residual(x, y, z):
    """[x,[y,z]] - [[x,y],z] - (-1)^{|x||y|}[y,[x,z]] for generators x, y, z."""
    sign = -1 if x.parity and y.parity else 1
    return (bracket_elements(x, bracket(y, z))
            - bracket_elements(bracket(x, y), z)
            - bracket_elements(y, bracket(x, z)).scale(sign))


def generators(sector, max_index=JACOBI_MAX_INDEX):
    """All concrete generators of a sector with |index| <= max_index, in a fixed order."""
    check_sector(sector)
    gens = []
    integers = range(-max_index, max_index + 1)
    half_odds = [QQ(2 * k + 1, 2) for k in range(-max_index, max_index)]
    for kind in SECTOR_KINDS[sector]:
        if kind == "C":
            gens.append(C(sector))
        elif kind in ODD_KINDS and not is_ramond(sector):
            gens.extend(Generator(kind, q, sector) for q in half_odds)
        else:
            gens.extend(Generator(kind, m, sector) for m in integers)
    return gens


def _jacobi_row(k, gens):
    x = gens[k]
    failures = []
    for y in gens:
        residual = check_super_antisymmetry(x, y)
        if not residual.is_zero:
            failures.append((str(x), str(y), "antisymmetry", str(residual)))
    # the residual is graded-alternating in (x, y, z), so one ordering per multiset suffices
    for j in range(k, len(gens)):
        y = gens[j]
        for z in gens[j:]:
            residual = super_jacobi_residual(x, y, z)
            if not residual.is_zero:
                failures.append((str(x), str(y), str(z), str(residual)))
    return failures


def jacobi_sweep(sector, max_index=JACOBI_MAX_INDEX, n_jobs=1, verbose=False):
    """Check the super-Jacobi identity on every ordered triple of concrete generators.

    Super-antisymmetry is checked on every ordered pair and the Jacobi residual on
    every triple ``x <= y <= z`` in generator order; together they cover all ordered
    triples. An antisymmetry failure is reported with ``"antisymmetry"`` as its third entry.

    Returns
    -------
    tuple of (int, list)
        Number of ordered triples covered and the failures with their residuals.
    """
    gens = generators(sector, max_index)
    rows = range(len(gens))
    if verbose:
        rows = tqdm(rows, desc=sector)
    results = Parallel(n_jobs=n_jobs)(delayed(_jacobi_row)(k, gens) for k in rows)
    failures = [f for row in results for f in row]
    return len(gens) ** 3, failures


def check_super_antisymmetry(x, y):
    sign = -1 if x.parity and y.parity else 1
    return bracket(x, y) + bracket(y, x).scale(sign)


def subalgebra_contains(name, g):
    """Membership of a generator in Vir, t, q^+, q^- or the N=1 subalgebra s."""
    try:
        kinds = SUBALGEBRAS[name]
    except KeyError:
        raise ValueError("Unknown subalgebra: {}".format(name)) from None
    return g.kind in kinds


def embedded_odd(p, sector):
    """G^+_p + G^-_p, the unnormalized image of the N=1 generator G_p."""
    return AlgebraElement({Gp(p, sector): 1, Gm(p, sector): 1})


def n1_embedding_check(p, q, sector=None):
    """Residual of [Ĝ_p, Ĝ_q] against twice the N=1 relation, with Ĝ_m = G^+_m + G^-_m."""
    p, q = idx(p), idx(q)
    if not (p.is_concrete and q.is_concrete):
        raise ValueError("Embedding check needs concrete indices")
    if sector is None:
        if p.is_integer and q.is_integer:
            sector = "n2-ramond"
        elif p.is_half_odd and q.is_half_odd:
            sector = "n2-ns"
        else:
            raise ValueError("Indices {} and {} are not on a common lattice".format(p, q))
    lhs = bracket_elements(embedded_odd(p, sector), embedded_odd(q, sector))
    pp = p.to_poly()
    n1 = AlgebraElement({L(p + q, sector): -2}, {p + q: ODD_CENTRAL * (pp ** 2 - QQ(1, 4))})
    return lhs - n1.scale(2)
