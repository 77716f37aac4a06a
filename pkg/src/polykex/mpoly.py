"""Dense multivariate polynomials over F_q in graded-lex monomial order.

A polynomial in ``n`` variables of total degree at most ``D`` is stored as a
dense coefficient tuple of length C(n+D, D), indexed by monomial rank. Ranks
order monomials by total degree first and then lexicographically with
x1 > x2 > ... > xn, so for n = 2, D = 2 the ranks 0..5 are

    1, x2, x1, x2^2, x1*x2, x1^2

Because lower degrees come first, the monomials of degree <= k always occupy
the rank prefix ``[0, C(n+k, k))``.
"""

from __future__ import annotations

import random
from array import array
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterable, Sequence

from ._backend import kernels
from .errors import DegreeOverflow, DimensionMismatch
from .field import UniPoly, element_width

__all__ = [
    "MonomialOrder",
    "Poly",
    "PolyMap",
    "Constraint",
    "monomial_count",
    "monomial_rank",
    "monomial_unrank",
    "poly_eval",
    "poly_add",
    "poly_sub",
    "poly_mul",
    "poly_random",
    "poly_substitute_prefix",
]


def monomial_count(n: int, D: int) -> int:
    """Number of monomials in n variables with total degree <= D."""
    return comb(n + D, D)


def _exponents_of_degree(n: int, deg: int):
    """All exponent vectors of total degree ``deg``, ascending lex order."""
    if n == 0:
        if deg == 0:
            yield ()
        return
    if n == 1:
        yield (deg,)
        return
    for first in range(deg + 1):
        for rest in _exponents_of_degree(n - 1, deg - first):
            yield (first,) + rest


@dataclass(frozen=True)
class _Tables:
    exps: tuple
    index: dict
    parent: array  # rank of the monomial divided by its first variable
    var: array  # which variable that was


@lru_cache(maxsize=None)
def _tables(n: int, D: int) -> _Tables:
    exps = tuple(e for deg in range(D + 1) for e in _exponents_of_degree(n, deg))
    index = {e: r for r, e in enumerate(exps)}
    parent = array("q", [0] * len(exps))
    var = array("q", [0] * len(exps))
    for r, e in enumerate(exps[1:], start=1):
        i = next(k for k, x in enumerate(e) if x)
        parent[r] = index[e[:i] + (e[i] - 1,) + e[i + 1 :]]
        var[r] = i
    return _Tables(exps, index, parent, var)


@dataclass(frozen=True)
class MonomialOrder:
    """Graded-lex order on monomials of n variables up to total degree D."""

    n: int
    D: int

    def __post_init__(self):
        if self.n < 0 or self.D < 0:
            raise ValueError(f"invalid monomial order ({self.n}, {self.D})")

    def __len__(self) -> int:
        return monomial_count(self.n, self.D)

    @property
    def tables(self) -> _Tables:
        return _tables(self.n, self.D)

    def rank(self, exponents: Sequence[int]) -> int:
        e = tuple(int(x) for x in exponents)
        if len(e) != self.n:
            raise DimensionMismatch(f"expected {self.n} exponents, got {len(e)}")
        if any(x < 0 for x in e):
            raise ValueError("negative exponent")
        if sum(e) > self.D:
            raise DegreeOverflow(f"total degree {sum(e)} exceeds {self.D}")
        return self.tables.index[e]

    def unrank(self, r: int) -> tuple:
        if not 0 <= r < len(self):
            raise IndexError(f"rank {r} out of range for {self}")
        return self.tables.exps[r]

    def degree_of(self, r: int) -> int:
        return sum(self.unrank(r))


def monomial_rank(order: MonomialOrder, exponents: Sequence[int]) -> int:
    return order.rank(exponents)


def monomial_unrank(order: MonomialOrder, r: int) -> tuple:
    return order.unrank(r)


@dataclass(frozen=True, eq=True)
class Poly:
    """Dense polynomial: ``coeffs[r]`` multiplies the monomial of rank r."""

    order: MonomialOrder
    coeffs: tuple
    q: int

    def __post_init__(self):
        if len(self.coeffs) != len(self.order):
            raise DimensionMismatch(
                f"{len(self.coeffs)} coefficients for order of size {len(self.order)}"
            )

    @classmethod
    def zero(cls, order: MonomialOrder, q: int) -> "Poly":
        return cls(order, (0,) * len(order), q)

    @classmethod
    def constant(cls, order: MonomialOrder, q: int, c: int) -> "Poly":
        return cls(order, (c % q,) + (0,) * (len(order) - 1), q)

    @classmethod
    def from_terms(cls, order: MonomialOrder, q: int, terms: dict) -> "Poly":
        """Build from ``{exponent tuple: coefficient}``."""
        coeffs = [0] * len(order)
        for e, c in terms.items():
            r = order.rank(e)
            coeffs[r] = (coeffs[r] + c) % q
        return cls(order, tuple(coeffs), q)

    @property
    def n(self) -> int:
        return self.order.n

    @property
    def degree(self) -> int:
        """Total degree, or -1 for the zero polynomial."""
        for r in range(len(self.coeffs) - 1, -1, -1):
            if self.coeffs[r]:
                return self.order.degree_of(r)
        return -1

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def terms(self) -> dict:
        exps = self.order.tables.exps
        return {exps[r]: c for r, c in enumerate(self.coeffs) if c}

    def variables(self) -> set:
        """Indices (0-based) of variables that occur with a nonzero coefficient."""
        used = set()
        for e in self.terms():
            used.update(i for i, x in enumerate(e) if x)
        return used

    def with_order(self, order: MonomialOrder) -> "Poly":
        """Re-embed in another order of the same n (truncation must not drop terms)."""
        if order.n != self.n:
            raise DimensionMismatch(f"cannot move {self.n}-variate poly to n={order.n}")
        if order.D >= self.order.D:
            return Poly(order, self.coeffs + (0,) * (len(order) - len(self.coeffs)), self.q)
        if self.degree > order.D:
            raise DegreeOverflow(f"degree {self.degree} exceeds {order.D}")
        return Poly(order, self.coeffs[: len(order)], self.q)

    def __call__(self, point: Sequence[int]) -> int:
        return poly_eval(self, point)

    def __add__(self, other: "Poly") -> "Poly":
        return poly_add(self, other)

    def __sub__(self, other: "Poly") -> "Poly":
        return poly_sub(self, other)

    def __mul__(self, other: "Poly") -> "Poly":
        return poly_mul(self, other)

    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        for e, c in sorted(self.terms().items(), key=lambda t: -self.order.rank(t[0])):
            mono = "*".join(
                f"x{i + 1}" if x == 1 else f"x{i + 1}^{x}" for i, x in enumerate(e) if x
            )
            parts.append(str(c) if not mono else (mono if c == 1 else f"{c}*{mono}"))
        return " + ".join(parts)

    def to_bytes(self) -> bytes:
        """Header (n: u16, D: u8) followed by every coefficient, W bytes big-endian."""
        w = element_width(self.q)
        head = self.n.to_bytes(2, "big") + self.order.D.to_bytes(1, "big")
        return head + coeffs_to_bytes(self.coeffs, w)

    @classmethod
    def from_bytes(cls, data: bytes, q: int) -> "Poly":
        if len(data) < 3:
            raise ValueError("truncated polynomial header")
        order = MonomialOrder(int.from_bytes(data[:2], "big"), data[2])
        w = element_width(q)
        body = data[3:]
        if len(body) != len(order) * w:
            raise ValueError(f"expected {len(order) * w} coefficient bytes, got {len(body)}")
        coeffs = coeffs_from_bytes(body, w)
        if any(c >= q for c in coeffs):
            raise ValueError("coefficient out of range")
        return cls(order, coeffs, q)


def coeffs_to_bytes(coeffs: Iterable[int], width: int) -> bytes:
    return b"".join(c.to_bytes(width, "big") for c in coeffs)


def coeffs_from_bytes(data: bytes, width: int) -> tuple:
    return tuple(int.from_bytes(data[i : i + width], "big") for i in range(0, len(data), width))


@dataclass(frozen=True)
class PolyMap:
    """A tuple of polynomials sharing q and n."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if comps:
            q, n = comps[0].q, comps[0].n
            if any(c.q != q or c.n != n for c in comps):
                raise DimensionMismatch("components disagree on (q, n)")

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __call__(self, point: Sequence[int]) -> tuple:
        return tuple(poly_eval(c, point) for c in self.components)

    @property
    def degree(self) -> int:
        return max((c.degree for c in self.components), default=-1)


def poly_eval(f: Poly, point: Sequence[int]) -> int:
    if len(point) != f.n:
        raise DimensionMismatch(f"point has {len(point)} coordinates, polynomial has {f.n}")
    deg = f.degree
    if deg < 0:
        return 0
    size = monomial_count(f.n, deg)
    t = _tables(f.n, deg)
    return kernels.eval_poly(f.coeffs[:size], point, t.parent, t.var, f.q)


def _check_compatible(f: Poly, g: Poly):
    if f.q != g.q:
        raise DimensionMismatch(f"moduli differ: {f.q} vs {g.q}")
    if f.n != g.n:
        raise DimensionMismatch(f"variable counts differ: {f.n} vs {g.n}")


def poly_add(f: Poly, g: Poly) -> Poly:
    _check_compatible(f, g)
    order = f.order if f.order.D >= g.order.D else g.order
    a, b = f.with_order(order).coeffs, g.with_order(order).coeffs
    q = f.q
    return Poly(order, tuple((x + y) % q for x, y in zip(a, b)), q)


def poly_sub(f: Poly, g: Poly) -> Poly:
    _check_compatible(f, g)
    order = f.order if f.order.D >= g.order.D else g.order
    a, b = f.with_order(order).coeffs, g.with_order(order).coeffs
    q = f.q
    return Poly(order, tuple((x - y) % q for x, y in zip(a, b)), q)


def poly_scale(f: Poly, c: int) -> Poly:
    return Poly(f.order, tuple(x * c % f.q for x in f.coeffs), f.q)


@lru_cache(maxsize=64)
def _product_table(n: int, df: int, dg: int, dout: int) -> array:
    """Flat table: entry i*len(g) + j is the rank of monomial_i * monomial_j."""
    tf, tg, tout = _tables(n, df), _tables(n, dg), _tables(n, dout)
    index = tout.index
    return array(
        "q",
        [index[tuple(a + b for a, b in zip(ea, eb))] for ea in tf.exps for eb in tg.exps],
    )


def poly_mul(f: Poly, g: Poly, order: MonomialOrder | None = None) -> Poly:
    """Exact product, placed in ``order`` (default: degree bound f.D + g.D)."""
    _check_compatible(f, g)
    if order is None:
        order = MonomialOrder(f.n, f.order.D + g.order.D)
    elif order.n != f.n:
        raise DimensionMismatch(f"output order has n={order.n}, operands n={f.n}")
    df, dg = f.degree, g.degree
    if df < 0 or dg < 0:
        return Poly.zero(order, f.q)
    if df + dg > order.D:
        raise DegreeOverflow(f"product degree {df + dg} exceeds {order.D}")
    a = f.coeffs[: monomial_count(f.n, df)]
    b = g.coeffs[: monomial_count(f.n, dg)]
    table = _product_table(f.n, df, dg, order.D)
    out = kernels.mul_poly(a, b, table, len(order), f.q)
    return Poly(order, tuple(out), f.q)


@dataclass(frozen=True)
class Constraint:
    """Shape requirement enforced by :func:`poly_random`.

    ANY            all coefficients uniform
    NONCONSTANT    resample until some coefficient of degree >= 1 is nonzero
    EXACT_DEGREE   resample until the top-degree part is nonzero
    top_coeff_nonzero(j)  coefficient of x_j**degree drawn from F_q \\ {0}
    """

    kind: str
    var: int | None = None

    @classmethod
    def top_coeff_nonzero(cls, var: int) -> "Constraint":
        return cls("TOP_COEFF_NONZERO", var)


Constraint.ANY = Constraint("ANY")
Constraint.NONCONSTANT = Constraint("NONCONSTANT")
Constraint.EXACT_DEGREE = Constraint("EXACT_DEGREE")


def poly_random(
    order: MonomialOrder,
    degree: int,
    rng: random.Random,
    q: int,
    constraint: Constraint = Constraint.ANY,
    support: int | None = None,
) -> Poly:
    """Random polynomial of degree <= ``degree`` with i.i.d. uniform coefficients.

    ``support`` limits the polynomial to the first ``support`` variables; the
    monomials outside it get zero and consume no randomness. Coefficients are
    drawn in rank order, so equal seeds give equal polynomials.
    """
    if not 0 <= degree <= order.D:
        raise DegreeOverflow(f"degree {degree} not within order bound {order.D}")
    n = order.n
    support = n if support is None else support
    if not 0 <= support <= n:
        raise DimensionMismatch(f"support {support} not within {n} variables")
    live = supported_ranks(n, degree, support)
    coeffs = [0] * len(order)
    for r in live:
        coeffs[r] = rng.randrange(q)

    kind = constraint.kind
    if kind == "ANY":
        pass
    elif kind in ("NONCONSTANT", "EXACT_DEGREE"):
        if degree == 0 or support == 0:
            raise ValueError(f"{kind} needs degree >= 1 and a nonempty support")
        low = 1 if kind == "NONCONSTANT" else monomial_count(n, degree - 1)
        block = [r for r in live if r >= low]
        while not any(coeffs[r] for r in block):
            for r in block:
                coeffs[r] = rng.randrange(q)
    elif kind == "TOP_COEFF_NONZERO":
        j = constraint.var
        if j is None or not 0 <= j < support:
            raise ValueError(f"variable {j} outside support {support}")
        top = tuple(degree if i == j else 0 for i in range(n))
        coeffs[order.rank(top)] = 1 + rng.randrange(q - 1)
    else:
        raise ValueError(f"unknown constraint {constraint!r}")
    return Poly(order, tuple(coeffs), q)


@lru_cache(maxsize=None)
def supported_ranks(n: int, D: int, support: int) -> tuple:
    """Ranks (degree <= D) of monomials that only involve the first ``support`` variables."""
    exps = _tables(n, D).exps
    return tuple(r for r, e in enumerate(exps) if not any(e[support:]))


def poly_substitute_prefix(f: Poly, values: Sequence[int], k: int) -> UniPoly:
    """Fix x1..xk to ``values``; return the univariate polynomial in x_{k+1}.

    ``f`` may only involve x1..x_{k+1}.
    """
    if len(values) != k:
        raise DimensionMismatch(f"{len(values)} values given for k={k}")
    if k >= f.n:
        raise DimensionMismatch(f"k={k} leaves no free variable among {f.n}")
    q = f.q
    out = [0] * (f.order.D + 1)
    for e, c in f.terms().items():
        if any(e[k + 1 :]):
            raise DimensionMismatch(f"polynomial uses variables beyond x{k + 1}")
        term = c
        for v, x in zip(values, e[:k]):
            if x:
                term = term * pow(v, x, q) % q
        out[e[k]] = (out[e[k]] + term) % q
    return UniPoly(tuple(out), q)
