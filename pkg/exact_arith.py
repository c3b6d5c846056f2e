"""Exact scalars: rationals, polynomials over QQ in a fixed set of named
indeterminates, and linear index expressions with half-integer constants.

Every polynomial lives in the single ring ``RING`` so that values produced by
different modules can be added and compared without coercion.
"""
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from sympy import QQ, Rational
from sympy.polys.rings import ring, PolyElement

# module parameters, Verma weights, recurrence unknowns and formal index symbols
VARIABLES = ("a", "b", "c", "h", "hp", "cc", "g", "bm", "cm",
             "m", "n", "p", "q", "t", "i", "j", "k", "r", "s",
             "r1", "r2", "r3", "s1", "s2", "s3")
PARAMETERS = ("a", "b", "c", "h", "hp", "cc", "g", "bm", "cm")
INDEX_SYMBOLS = VARIABLES[len(PARAMETERS):]

RING, *_GENERATORS = ring(",".join(VARIABLES), QQ)
GENS = dict(zip(VARIABLES, _GENERATORS))

_RATIONAL_RE = re.compile(r"^\s*(-?\d+)(?:\s*/\s*(\d+))?\s*$")
_MPQ = type(QQ.one)


def parse_rational(text):
    """Parse an exact rational written as ``N`` or ``N/D``.

    Parameters
    ----------
    text : str
        The rational to parse. Decimal and float notations are rejected.

    Returns
    -------
    QQ element
        The reduced rational.

    Raises
    ------
    ValueError
        If the text is not an integer or a fraction of integers, or the denominator is zero.
    """
    match = _RATIONAL_RE.match(str(text))
    if match is None:
        raise ValueError("Malformed rational (expected N or N/D): {!r}".format(text))
    num, den = match.group(1), match.group(2)
    den = 1 if den is None else int(den)
    if den == 0:
        raise ValueError("Zero denominator in rational: {!r}".format(text))
    return QQ(int(num), den)


def to_rational(x):
    """Coerce ints, Fractions, sympy Rationals, exact strings and ground polynomials to QQ."""
    if isinstance(x, _MPQ):
        return x
    if isinstance(x, bool):
        raise TypeError("Booleans are not rationals")
    if isinstance(x, int):
        return QQ(x)
    if isinstance(x, Fraction):
        return QQ(x.numerator, x.denominator)
    if isinstance(x, Rational):
        return QQ(int(x.p), int(x.q))
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, PolyElement):
        if not x.is_ground:
            raise ValueError("Polynomial {} is not a constant".format(x))
        return poly_value(x)
    raise TypeError("Cannot interpret {!r} as an exact rational".format(x))


def rational_str(q):
    q = to_rational(q)
    if q.denominator == 1:
        return str(q.numerator)
    return "{}/{}".format(q.numerator, q.denominator)


def var(name):
    try:
        return GENS[name]
    except KeyError:
        raise ValueError("Unknown indeterminate: {}".format(name)) from None


def const(x):
    return RING(to_rational(x))


def as_poly(x):
    """Lift a scalar, an IndexExpr or a polynomial into ``RING``."""
    if isinstance(x, PolyElement):
        if x.ring != RING:
            raise ValueError("Polynomial from a foreign ring: {}".format(x.ring))
        return x
    if isinstance(x, IndexExpr):
        return x.to_poly()
    return const(x)


def poly_value(p):
    """The constant term of ``p`` as a QQ element."""
    return p.get(RING.zero_monom, QQ.zero)


def is_concrete(p):
    return p.is_ground


def poly_arith(op, x, y):
    """Apply a ring operation to two polynomials; the result is canonical."""
    x, y = as_poly(x), as_poly(y)
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "neg":
        return -x
    raise ValueError("Unknown polynomial operation: {}".format(op))


def poly_substitute(p, bindings):
    """Substitute rationals or polynomials for indeterminates of ``p``.

    Parameters
    ----------
    p : PolyElement
        Polynomial in ``RING``.
    bindings : dict
        Maps indeterminate names (or generators) to rationals, IndexExprs or polynomials.
        Unbound indeterminates pass through.

    Returns
    -------
    PolyElement
        The substituted polynomial, in canonical form.
    """
    p = as_poly(p)
    if not bindings:
        return p
    replacements = []
    for key, value in bindings.items():
        gen = key if isinstance(key, PolyElement) else var(key)
        replacements.append((gen, as_poly(value)))
    return p.compose(replacements)


def random_rational(rng, bound=50, max_den=20):
    return QQ(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, max_den + 1)))


def probably_zero(p, trials=1000, rng=None):
    """Sampling test for the zero polynomial.

    Index symbols are drawn from random integers and parameters from random
    rationals. A polynomial over QQ vanishing on all integer points is zero, so
    a ``True`` answer must coincide with ``p`` being the literal zero polynomial.
    """
    p = as_poly(p)
    rng = np.random.default_rng(0) if rng is None else rng
    terms = list(p.iterterms())
    for _ in range(trials):
        point = []
        for name in VARIABLES:
            if name in PARAMETERS:
                point.append(random_rational(rng))
            else:
                point.append(QQ(int(rng.integers(-1000, 1001))))
        total = QQ.zero
        for monom, coeff in terms:
            for value, e in zip(point, monom):
                if e:
                    coeff = coeff * value ** e
            total += coeff
        if total != QQ.zero:
            return False
    return True


def _coerce_doubled(x):
    q = to_rational(x) * 2
    if q.denominator != 1:
        raise ValueError("Index constant {} is not a half-integer".format(rational_str(q / 2)))
    return int(q.numerator)


@dataclass(frozen=True)
class IndexExpr:
    """Integer-linear combination of index symbols plus a half-integer constant.

    ``terms`` is a sorted tuple of ``(symbol, coefficient)`` with nonzero integer
    coefficients and ``doubled`` is twice the constant part. Instances built through
    the constructors below are canonical, so equality is syntactic.
    """
    terms: tuple = ()
    doubled: int = 0

    @classmethod
    def const(cls, x):
        return cls((), _coerce_doubled(x))

    @classmethod
    def symbol(cls, name, coeff=1):
        if name not in INDEX_SYMBOLS:
            raise ValueError("Unknown index symbol: {}".format(name))
        return index_normalize(cls(((name, int(coeff)),), 0))

    @classmethod
    def coerce(cls, x):
        if isinstance(x, cls):
            return x
        if isinstance(x, str) and x in INDEX_SYMBOLS:
            return cls.symbol(x)
        return cls.const(x)

    @property
    def is_concrete(self):
        return not self.terms

    @property
    def is_zero(self):
        return not self.terms and self.doubled == 0

    @property
    def is_integer(self):
        return self.is_concrete and self.doubled % 2 == 0

    @property
    def is_half_odd(self):
        return self.is_concrete and self.doubled % 2 == 1

    @property
    def value(self):
        if not self.is_concrete:
            raise ValueError("Index {} is symbolic".format(self))
        return QQ(self.doubled, 2)

    def symbols(self):
        return tuple(name for name, _ in self.terms)

    def sort_key(self):
        return (self.terms, self.doubled)

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def __add__(self, other):
        other = IndexExpr.coerce(other)
        return index_normalize(IndexExpr(self.terms + other.terms, self.doubled + other.doubled))

    __radd__ = __add__

    def __neg__(self):
        return IndexExpr(tuple((name, -coeff) for name, coeff in self.terms), -self.doubled)

    def __sub__(self, other):
        return self + (-IndexExpr.coerce(other))

    def __rsub__(self, other):
        return IndexExpr.coerce(other) - self

    def __mul__(self, k):
        if not isinstance(k, int):
            raise TypeError("Index expressions scale by integers only")
        return index_normalize(IndexExpr(tuple((n, c * k) for n, c in self.terms), self.doubled * k))

    __rmul__ = __mul__

    def to_poly(self):
        return _index_poly(self)

    def substitute(self, bindings):
        """Replace symbols by ints, half-integers or other IndexExprs."""
        result = IndexExpr((), self.doubled)
        for name, coeff in self.terms:
            if name in bindings:
                result = result + IndexExpr.coerce(bindings[name]) * coeff
            else:
                result = result + IndexExpr(((name, coeff),), 0)
        return result

    def __str__(self):
        parts = []
        for name, coeff in self.terms:
            sign = "-" if coeff < 0 else "+"
            body = name if abs(coeff) == 1 else "{}*{}".format(abs(coeff), name)
            parts.append((sign, body))
        if self.doubled or not parts:
            sign = "-" if self.doubled < 0 else "+"
            parts.append((sign, rational_str(QQ(abs(self.doubled), 2))))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            text += " {} {}".format(sign, body)
        return text


def index_normalize(e):
    """Canonical form of an IndexExpr: symbols sorted, like terms merged, zeros dropped."""
    merged = {}
    for name, coeff in e.terms:
        merged[name] = merged.get(name, 0) + coeff
    terms = tuple(sorted((name, coeff) for name, coeff in merged.items() if coeff != 0))
    return IndexExpr(terms, int(e.doubled))


@lru_cache(maxsize=None)
def _index_poly(e):
    poly = RING(QQ(e.doubled, 2))
    for name, coeff in e.terms:
        poly += coeff * var(name)
    return poly


def idx(x):
    """Shorthand used throughout: ``idx(3)``, ``idx("1/2")``, ``idx("i")``."""
    return IndexExpr.coerce(x)
