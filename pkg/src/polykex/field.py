"""Prime-field arithmetic over F_q and univariate root finding restricted to Z_p.

Field elements are plain Python ints held in canonical form ``0 <= a < q``;
the modulus travels with a :class:`Field` context instead of with each element.
Python ints are arbitrary precision, so the 66-bit moduli used by the protocol
never overflow.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

from .errors import InvalidParams, InvalidSubrange, ZeroInverse

# deterministic Miller-Rabin witnesses, exact below this bound
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_MR_EXACT_BELOW = 3317044064679887385961981
_MR_RANDOM_ROUNDS = 64  # error <= 4**-64 = 2**-128

# above this subrange size the quadratic closed form beats enumeration
QUADRATIC_THRESHOLD = 64


def _mr_witness(a: int, n: int, d: int, s: int) -> bool:
    """True if ``a`` proves ``n`` composite."""
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return False
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return False
    return True


@lru_cache(maxsize=256)
def is_probable_prime(n: int) -> bool:
    """Miller-Rabin test; exact for n < 3.3e24, error < 2**-128 above."""
    if n < 2:
        return False
    for b in _MR_BASES:
        if n % b == 0:
            return n == b
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    if n < _MR_EXACT_BELOW:
        bases = _MR_BASES
    else:
        rng = random.Random(n)
        bases = [rng.randrange(2, n - 1) for _ in range(_MR_RANDOM_ROUNDS)]
    return not any(_mr_witness(a, n, d, s) for a in bases)


def element_width(q: int) -> int:
    """Bytes per serialized element: ceil(bitlength(q) / 8)."""
    return (q.bit_length() + 7) // 8


@dataclass(frozen=True)
class UniPoly:
    """Univariate polynomial over F_q; ``coeffs[i]`` is the coefficient of x**i."""

    coeffs: tuple
    q: int

    @property
    def degree(self) -> int:
        """Largest index with a nonzero coefficient, or -1 for the zero polynomial."""
        for i in range(len(self.coeffs) - 1, -1, -1):
            if self.coeffs[i]:
                return i
        return -1

    def is_zero(self) -> bool:
        return self.degree < 0

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % self.q
        return acc


class Field:
    """The prime field F_q.

    >>> F = Field(53)
    >>> F.mul(20, 30)
    17
    >>> F.sqrt(47)
    (10, 43)
    """

    __slots__ = ("q", "width")

    def __init__(self, q: int, check_prime: bool = True):
        q = int(q)
        if check_prime and not is_probable_prime(q):
            raise InvalidParams(f"q = {q} is not prime")
        self.q = q
        self.width = element_width(q)

    def __repr__(self):
        return f"Field({self.q})"

    def __eq__(self, other):
        return isinstance(other, Field) and other.q == self.q

    def __hash__(self):
        return hash(("Field", self.q))

    def __call__(self, a: int) -> int:
        return int(a) % self.q

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def neg(self, a: int) -> int:
        return -a % self.q

    def mul(self, a: int, b: int) -> int:
        return a * b % self.q

    def pow(self, a: int, e: int) -> int:
        return pow(a, e, self.q)

    def inv(self, a: int) -> int:
        if a % self.q == 0:
            raise ZeroInverse(f"0 has no inverse mod {self.q}")
        return pow(a, -1, self.q)

    def is_square(self, a: int) -> bool:
        """Euler's criterion; 0 counts as a square."""
        a %= self.q
        if a == 0 or self.q == 2:
            return True
        return pow(a, (self.q - 1) // 2, self.q) == 1

    def sqrt(self, a: int) -> Optional[tuple]:
        """Both square roots ``(r, q - r)`` with ``r <= q - r``, or None for a non-residue.

        Tonelli-Shanks; zero gives ``(0, 0)``.
        """
        q = self.q
        a %= q
        if a == 0:
            return (0, 0)
        if q == 2:
            return (1, 1)
        if pow(a, (q - 1) // 2, q) != 1:
            return None
        if q % 4 == 3:
            r = pow(a, (q + 1) // 4, q)
        else:
            r = _tonelli_shanks(a, q)
        return (r, q - r) if r <= q - r else (q - r, r)

    def roots_in_subrange(self, poly, p: int, method: str = "auto") -> frozenset:
        """All x in {0, ..., p-1} with poly(x) = 0 in F_q.

        ``poly`` is a :class:`UniPoly` or a coefficient sequence (lowest degree
        first). The identically-zero polynomial returns the whole subrange.
        ``method`` is ``"enumerate"``, ``"closed"`` (degree <= 2 only) or
        ``"auto"``, which enumerates unless p is large and the degree allows the
        closed form. ``p == q`` is accepted and means all of F_q.
        """
        q = self.q
        if p <= 1 or p > q:
            raise InvalidSubrange(f"need 1 < p <= q, got p={p}, q={q}")
        coeffs = poly.coeffs if isinstance(poly, UniPoly) else tuple(c % q for c in poly)
        deg = _degree(coeffs)
        if deg < 0:
            return frozenset(range(p))
        if method == "auto":
            method = "closed" if deg <= 2 and p > QUADRATIC_THRESHOLD else "enumerate"
        if method == "enumerate":
            return frozenset(x for x in range(p) if _horner(coeffs, deg, x, q) == 0)
        if method != "closed":
            raise ValueError(f"unknown method {method!r}")
        if deg > 2:
            raise ValueError("closed form only handles degree <= 2")
        return frozenset(r for r in self._low_degree_roots(coeffs, deg) if r < p)

    def _low_degree_roots(self, coeffs: Sequence[int], deg: int) -> set:
        q = self.q
        if deg == 0:
            return set()
        if deg == 1:
            return {-coeffs[0] * self.inv(coeffs[1]) % q}
        c, b, a = coeffs[0], coeffs[1], coeffs[2]
        if q == 2:
            return {x for x in (0, 1) if (a * x * x + b * x + c) % 2 == 0}
        disc = (b * b - 4 * a * c) % q
        roots = self.sqrt(disc)
        if roots is None:
            return set()
        inv2a = self.inv(2 * a)
        return {(-b + r) * inv2a % q for r in roots}


def _tonelli_shanks(a: int, q: int) -> int:
    s, t = 0, q - 1
    while t % 2 == 0:
        t //= 2
        s += 1
    z = 2
    while pow(z, (q - 1) // 2, q) != q - 1:
        z += 1
    m, c, x, b = s, pow(z, t, q), pow(a, (t + 1) // 2, q), pow(a, t, q)
    while b != 1:
        i, b2 = 0, b
        while b2 != 1:
            b2 = b2 * b2 % q
            i += 1
        g = pow(c, 1 << (m - i - 1), q)
        x = x * g % q
        c = g * g % q
        b = b * c % q
        m = i
    return x


def _degree(coeffs: Sequence[int]) -> int:
    for i in range(len(coeffs) - 1, -1, -1):
        if coeffs[i]:
            return i
    return -1


def _horner(coeffs: Sequence[int], deg: int, x: int, q: int) -> int:
    acc = 0
    for i in range(deg, -1, -1):
        acc = (acc * x + coeffs[i]) % q
    return acc
