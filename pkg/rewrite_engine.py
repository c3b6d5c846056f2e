"""Normal ordering of words of generators.

Two settings share the machinery here:

* words acting on a base layer ``u_j`` that is annihilated by every G^-_m, where
  L_m u_j = (a + b m + j) u_{m+j}, H_m u_j = c u_{m+j} and C acts as zero;
* PBW monomials of a highest-weight (Verma) module with L_0, H_0, C acting by
  h, hp, cc and the positive part (and G^+_0 in the Ramond sector) acting by zero.

Reductions work with symbolic indices: coefficients are polynomials and labels
are IndexExprs.
"""
from dataclasses import dataclass, field

import numpy as np
from sympy import QQ

from exact_arith import RING, IndexExpr, as_poly, idx, poly_substitute, to_rational, var
from superalgebra import (KIND_RANK, Generator, Gm, Gp, H, L, SECTOR_KINDS,
                          bracket, check_sector, is_ramond)

STRATEGIES = ("leftmost", "rightmost")


@dataclass(frozen=True)
class BaseLayer:
    """The layer U^- spanned by u_j, with G^-_m u_j = 0."""
    a: object = field(default_factory=lambda: var("a"))
    b: object = field(default_factory=lambda: var("b"))
    c: object = field(default_factory=lambda: var("c"))
    sector: str = "n2-ramond"

    def __post_init__(self):
        if self.sector not in ("n2-ramond", "n2-ns"):
            raise ValueError("Base layers live in N=2 sectors, got {}".format(self.sector))
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, as_poly(getattr(self, name)))


class NormalForm:
    """Combination of ordered G^+ words applied to base labels u_j.

    Keys are ``(word, label)`` with ``word`` a tuple of Generators and ``label`` an
    IndexExpr; values are nonzero polynomials.
    """
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        for key, coeff in (terms or {}).items():
            self.add_term(key[0], key[1], coeff)

    def add_term(self, word, label, coeff):
        key = (tuple(word), idx(label))
        coeff = as_poly(coeff) + self.terms.get(key, RING.zero)
        if coeff:
            self.terms[key] = coeff
        else:
            self.terms.pop(key, None)

    @property
    def is_zero(self):
        return not self.terms

    def coefficient(self, word=(), label=0):
        return self.terms.get((tuple(word), idx(label)), RING.zero)

    def sorted_terms(self):
        return sorted(self.terms.items(),
                      key=lambda item: ([g.sort_key() for g in item[0][0]], item[0][1].sort_key()))

    def __add__(self, other):
        result = NormalForm(self.terms)
        for (word, label), coeff in other.terms.items():
            result.add_term(word, label, coeff)
        return result

    def scale(self, factor):
        factor = as_poly(factor)
        return NormalForm({key: coeff * factor for key, coeff in self.terms.items()})

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def substitute(self, bindings):
        index_bindings = {k: v for k, v in bindings.items() if isinstance(k, str)}
        result = NormalForm()
        for (word, label), coeff in self.terms.items():
            new_word = tuple(g.with_index(g.index.substitute(index_bindings)) for g in word)
            # after specialization two odd factors may coincide or fall out of order
            result = result + _sort_plus_word(new_word, label.substitute(index_bindings),
                                              poly_substitute(coeff, bindings))
        return result

    def __eq__(self, other):
        if not isinstance(other, NormalForm):
            return NotImplemented
        return self.terms == other.terms

    def __str__(self):
        if self.is_zero:
            return "0"
        parts = []
        for (word, label), coeff in self.sorted_terms():
            factors = "".join("{} ".format(g) for g in word)
            parts.append("({})*{}u[{}]".format(coeff, factors, label))
        return " + ".join(parts)

    __repr__ = __str__


def _sort_plus_word(word, label, coeff):
    """Bubble-sort a word of anticommuting G^+ factors into strictly increasing order."""
    word = list(word)
    sign = 1
    for end in range(len(word) - 1, 0, -1):
        for k in range(end):
            if word[k + 1].index < word[k].index:
                word[k], word[k + 1] = word[k + 1], word[k]
                sign = -sign
    if any(x.index == y.index for x, y in zip(word, word[1:])):
        return NormalForm()
    return NormalForm({(tuple(word), label): coeff * sign})


def _measure(word):
    mixed, plus = 0, 0
    for pos, x in enumerate(word):
        for y in word[pos + 1:]:
            if y.kind == "Gplus":
                if x.kind != "Gplus":
                    mixed += 1
                elif not x.index < y.index:
                    plus += 1
    return (len(word), mixed, plus)


def _redexes(word):
    found = []
    for k in range(len(word) - 1):
        x, y = word[k], word[k + 1]
        if y.kind == "Gplus":
            if x.kind != "Gplus" or not x.index < y.index:
                found.append(k)
    if word and word[-1].kind != "Gplus":
        found.append(len(word) - 1)
    return found


def _act_on_base(x, label, layer):
    m = x.index
    if x.kind == "L":
        return [((), m + label, layer.a + layer.b * m.to_poly() + label.to_poly())]
    if x.kind == "H":
        return [((), m + label, layer.c)]
    # G^- annihilates the layer and C acts as zero
    return []


def _rewrite(word, label, pos, layer):
    """One rewrite step at ``pos``; returns ``(word, label, coeff)`` triples."""
    if pos == len(word) - 1 and word[-1].kind != "Gplus":
        return [(word[:-1] + w, new_label, coeff)
                for w, new_label, coeff in _act_on_base(word[-1], label, layer)]
    x, y = word[pos], word[pos + 1]
    head, tail = word[:pos], word[pos + 2:]
    if x.kind == "Gplus":
        if x.index == y.index:
            return []
        return [(head + (y, x) + tail, label, RING(-1))]
    sign = -1 if x.parity else 1
    out = [(head + (y, x) + tail, label, RING(sign))]
    # central terms drop: C acts as zero on the layer
    for g, coeff in bracket(x, y).body.items():
        out.append((head + (g,) + tail, label, coeff))
    return out


def reduce_combination(terms, layer, j, strategy="leftmost", check_measure=True):
    """Reduce a combination of words acting on u_j to normal form.

    Parameters
    ----------
    terms : dict
        Maps words (tuples of Generators, leftmost acts last) to coefficients.
    layer : BaseLayer
        The annihilator layer the words act on.
    j : IndexExpr, int or str
        The base label.
    strategy : str, optional
        ``"leftmost"`` or ``"rightmost"`` redex selection, by default "leftmost"
    check_measure : bool, optional
        Assert that every rewrite decreases the well-founded measure
        (length, mixed inversions, G^+ inversions), by default True

    Returns
    -------
    NormalForm
    """
    if strategy not in STRATEGIES:
        raise ValueError("Unknown strategy: {}".format(strategy))
    j = idx(j)
    pending = {}
    for word, coeff in terms.items():
        word = tuple(word)
        for g in word:
            if g.sector != layer.sector:
                raise ValueError("Sector mismatch: {} in a {} layer".format(g, layer.sector))
        _accumulate(pending, (word, j), as_poly(coeff))

    result = NormalForm()
    while pending:
        current, pending = pending, {}
        for (word, label), coeff in current.items():
            positions = _redexes(word)
            if not positions:
                result.add_term(word, label, coeff)
                continue
            pos = positions[0] if strategy == "leftmost" else positions[-1]
            before = _measure(word) if check_measure else None
            for new_word, new_label, factor in _rewrite(word, label, pos, layer):
                if check_measure:
                    assert _measure(new_word) < before, \
                        "Rewrite of {} did not decrease the measure".format(" ".join(map(str, word)))
                _accumulate(pending, (new_word, new_label), coeff * factor)
    return result


def _accumulate(store, key, coeff):
    coeff = coeff + store.get(key, RING.zero)
    if coeff:
        store[key] = coeff
    else:
        store.pop(key, None)


def reduce_on_base(word, layer, j, strategy="leftmost", check_measure=True):
    """Normal form of ``word · u_j``; see ``reduce_combination``."""
    return reduce_combination({tuple(word): 1}, layer, j, strategy, check_measure)


def k_action(r, s, layer, i):
    """K_{r,s} = [G^+_r, G^-_s] = -2 L_{r+s} + (r - s) H_{r+s} applied to u_i."""
    r, s, i = idx(r), idx(s), idx(i)
    rp, sp = r.to_poly(), s.to_poly()
    coeff = -2 * (layer.a + layer.b * (rp + sp) + i.to_poly()) + (rp - sp) * layer.c
    return NormalForm({((), r + s + i): coeff})


def k_element(r, s, sector="n2-ramond"):
    r, s = idx(r), idx(s)
    return {L(r + s, sector): RING(-2), H(r + s, sector): r.to_poly() - s.to_poly()}


def k_action_residual(r="r", s="s", layer=None, j="i"):
    """(G^+_r G^-_s + G^-_s G^+_r) u_j reduced by the engine, minus ``k_action``."""
    layer = BaseLayer() if layer is None else layer
    plus, minus = Gp(r, layer.sector), Gm(s, layer.sector)
    lhs = reduce_combination({(plus, minus): 1, (minus, plus): 1}, layer, j)
    return lhs - k_action(r, s, layer, j)


def k_commutator_residual(r="r", s="s", t="t", layer=None, j="i"):
    """[K_{r,s}, G^+_t] - 2(r - t) G^+_{r+s+t}, both sides reduced on u_j."""
    layer = BaseLayer() if layer is None else layer
    r, s, t = idx(r), idx(s), idx(t)
    g_t = Gp(t, layer.sector)
    words = {}
    for g, coeff in k_element(r, s, layer.sector).items():
        _accumulate(words, (g, g_t), coeff)
        _accumulate(words, (g_t, g), -coeff)
    lhs = reduce_combination(words, layer, j)
    rhs = reduce_on_base((Gp(r + s + t, layer.sector),), layer, j).scale(2 * (r.to_poly() - t.to_poly()))
    return lhs - rhs


@dataclass(frozen=True)
class VermaState:
    """Highest-weight data: L_0, H_0 and C act on the generating vector by h, hp, cc."""
    sector: str = "n2-ramond"
    h: object = field(default_factory=lambda: var("h"))
    hp: object = field(default_factory=lambda: var("hp"))
    cc: object = field(default_factory=lambda: var("cc"))

    def __post_init__(self):
        check_sector(self.sector)
        for name in ("h", "hp", "cc"):
            object.__setattr__(self, name, as_poly(getattr(self, name)))


def is_creation(g):
    """Generators allowed in PBW monomials: negative modes plus the Ramond odd zero mode."""
    if g.kind == "C":
        return False
    value = g.index.value
    if value < 0:
        return True
    if value == 0 and is_ramond(g.sector):
        return g.kind in ("Gminus", "G")
    return False


def pbw_key(g):
    return (g.index.value, KIND_RANK[g.kind])


def _act_on_highest(x, state):
    if x.index.value == 0:
        if x.kind == "L":
            return state.h
        if x.kind == "H":
            return state.hp
    if x.kind == "C":
        return state.cc
    return None


def _verma_rewrite(word, state):
    """One straightening step; ``None`` when ``word`` is already a PBW monomial."""
    n = len(word)
    last_annihilator = None
    for k in range(n - 1, -1, -1):
        if not is_creation(word[k]):
            last_annihilator = k
            break
    if last_annihilator == n - 1:
        value = _act_on_highest(word[-1], state)
        return [] if value is None else [(word[:-1], value)]
    if last_annihilator is not None:
        return _verma_swap(word, last_annihilator, state)
    for k in range(n - 1):
        x, y = word[k], word[k + 1]
        if pbw_key(x) > pbw_key(y):
            return _verma_swap(word, k, state)
        if x == y and x.parity:
            # x x = (1/2)[x, x] for an odd x
            return _bracket_terms(word[:k], word[k + 2:], bracket(x, x), QQ(1, 2), state)
    return None


def _bracket_terms(head, tail, element, factor, state):
    out = [(head + (g,) + tail, coeff * factor) for g, coeff in element.body.items()]
    central = element.central_part()
    if central:
        out.append((head + tail, central * state.cc * factor))
    return out


def _verma_swap(word, k, state):
    x, y = word[k], word[k + 1]
    sign = -1 if x.parity and y.parity else 1
    out = [(word[:k] + (y, x) + word[k + 2:], RING(sign))]
    return out + _bracket_terms(word[:k], word[k + 2:], bracket(x, y), QQ.one, state)


def straighten(terms, state):
    """Normal-order a combination of words acting on the highest-weight vector."""
    pending = {}
    for word, coeff in terms.items():
        _accumulate(pending, tuple(word), as_poly(coeff))
    result = {}
    while pending:
        current, pending = pending, {}
        for word, coeff in current.items():
            step = _verma_rewrite(word, state)
            if step is None:
                _accumulate(result, word, coeff)
                continue
            for new_word, factor in step:
                _accumulate(pending, new_word, coeff * factor)
    return dict(sorted(result.items(), key=lambda item: [pbw_key(g) for g in item[0]]))


def verma_act(g, monomial, state):
    """Normal-ordered ``g · (monomial · v)`` as a dict from PBW monomials to coefficients."""
    for x in (g,) + tuple(monomial):
        if x.sector != state.sector:
            raise ValueError("Sector mismatch: {} acting in a {} module".format(x, state.sector))
        if not x.index.is_concrete:
            raise ValueError("Verma actions need concrete indices, got {}".format(x))
    return straighten({(g,) + tuple(monomial): 1}, state)


def _doubled_depth(sector, depth):
    doubled = to_rational(depth) * 2
    if doubled.denominator != 1 or doubled < 0:
        raise ValueError("Depth must be a nonnegative half-integer, got {}".format(depth))
    doubled = int(doubled.numerator)
    if is_ramond(sector) and doubled % 2:
        raise ValueError("Ramond sectors have integer levels only, got {}".format(depth))
    return doubled


def creation_operators(sector, doubled_depth):
    """Creation generators of level at most ``doubled_depth / 2``, in PBW order."""
    ops = []
    for kind in SECTOR_KINDS[sector]:
        if kind == "C":
            continue
        odd_ns = kind in ("Gplus", "Gminus", "G") and not is_ramond(sector)
        for level2 in range(0, doubled_depth + 1):
            if odd_ns and level2 % 2 == 0:
                continue
            if not odd_ns and level2 % 2 == 1:
                continue
            g = Generator(kind, QQ(-level2, 2), sector)
            if is_creation(g):
                ops.append(g)
    return sorted(ops, key=pbw_key)


def pbw_basis(sector, depth):
    """All PBW monomials of level exactly ``depth``, odd factors squarefree.

    Parameters
    ----------
    sector : str
        One of ``superalgebra.SECTORS``.
    depth : int or rational
        Level below the highest weight. Neveu-Schwarz sectors accept half-integers.

    Returns
    -------
    list of tuple of Generator
        Monomials in normal order (index ascending, then L < H < G+ < G-).
    """
    check_sector(sector)
    doubled = _doubled_depth(sector, depth)
    ops = creation_operators(sector, doubled)
    monomials = []

    def extend(pos, remaining, prefix):
        if pos == len(ops):
            if remaining == 0:
                monomials.append(tuple(prefix))
            return
        op = ops[pos]
        level2 = int(-op.index.doubled)
        if op.parity:
            max_mult = 1
        elif level2 == 0:
            max_mult = 0
        else:
            max_mult = remaining // level2
        for mult in range(max_mult + 1):
            if mult * level2 > remaining:
                break
            extend(pos + 1, remaining - mult * level2, prefix + [op] * mult)

    extend(0, doubled, [])
    return sorted(monomials, key=lambda mono: [pbw_key(g) for g in mono])


def levels(sector, depth):
    doubled = _doubled_depth(sector, depth)
    step = 2 if is_ramond(sector) else 1
    return [QQ(d, 2) for d in range(0, doubled + 1, step)]


def verma_weight_dims(sector, depth):
    """Number of PBW monomials at each level from 0 to ``depth``."""
    return [len(pbw_basis(sector, level)) for level in levels(sector, depth)]


def series_oracle(sector, depth):
    """Graded dimensions from the product formula, computed with truncated power series.

    The series variable is q^{1/2}. Bosonic modes contribute 1/(1 - q^n), odd modes
    (1 + q^n) in Ramond sectors and (1 + q^{n - 1/2}) in Neveu-Schwarz sectors, and a
    Ramond odd zero mode contributes the overall factor 2.
    """
    check_sector(sector)
    doubled = _doubled_depth(sector, depth)
    n2 = sector.startswith("n2")
    series = np.zeros(doubled + 1, dtype=np.int64)
    series[0] = 1
    bosons = 2 if n2 else 1
    fermions = 2 if n2 else 1
    for n in range(1, doubled // 2 + 1):
        for _ in range(bosons):
            step = 2 * n
            for e in range(step, doubled + 1):
                series[e] += series[e - step]
    for n in range(1, doubled // 2 + 2):
        step = 2 * n if is_ramond(sector) else 2 * n - 1
        if step > doubled:
            continue
        for _ in range(fermions):
            shifted = np.zeros_like(series)
            shifted[step:] = series[:-step]
            series = series + shifted
    if is_ramond(sector):
        series = 2 * series
        return [int(x) for x in series[0::2]]
    return [int(x) for x in series]
