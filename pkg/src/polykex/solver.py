"""Bob's key recovery: pruned depth-first search for preimages of a triangular map
inside Z_p^n, the f = 0 filter, and an exhaustive oracle for small instances.
"""

from __future__ import annotations

import itertools
from array import array
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

from ._backend import kernels
from .errors import DimensionMismatch, InstanceTooLarge, InvalidSubrange, SearchLimitExceeded
from .mpoly import MonomialOrder, Poly, PolyMap, poly_eval, supported_ranks

DEFAULT_NODE_LIMIT = 10**6
ORACLE_MAX_POINTS = 10**6


class TriangularMap:
    """n polynomials where the j-th (0-based) involves only x_1..x_{j+1}."""

    def __init__(self, psis: Sequence[Poly]):
        psis = tuple(psis)
        if not psis:
            raise DimensionMismatch("empty triangular map")
        n, q = psis[0].n, psis[0].q
        if len(psis) != n:
            raise DimensionMismatch(f"{len(psis)} polynomials for {n} variables")
        for j, psi in enumerate(psis):
            if psi.n != n or psi.q != q:
                raise DimensionMismatch("components disagree on (q, n)")
            allowed = supported_ranks(n, psi.order.D, j + 1)
            if sum(1 for c in psi.coeffs if c) != sum(1 for r in allowed if psi.coeffs[r]):
                raise DimensionMismatch(f"psi_{j + 1} uses variables beyond x{j + 1}")
        self.psis = psis
        self.n = n
        self.q = q

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.psis)

    def __getitem__(self, j):
        return self.psis[j]

    def __call__(self, point: Sequence[int]) -> tuple:
        return tuple(poly_eval(psi, point) for psi in self.psis)

    def as_polymap(self) -> PolyMap:
        return PolyMap(self.psis)

    def max_branching(self) -> int:
        """Upper bound on children per search node (the largest own-variable degree)."""
        return max(max((e[j] for e in psi.terms()), default=0) for j, psi in enumerate(self.psis))

    @cached_property
    def levels(self) -> list:
        """Per-depth term tables consumed by the search kernels."""
        out = []
        for k, psi in enumerate(self.psis):
            t = MonomialOrder(k, psi.order.D).tables
            ranks, xexps, coeffs = array("q"), array("q"), []
            for r, pr, e in _level_layout(psi.n, psi.order.D, k):
                c = psi.coeffs[r]
                if c:
                    ranks.append(pr)
                    xexps.append(e)
                    coeffs.append(c)
            out.append((t.parent, t.var, ranks, xexps, coeffs))
        return out


@lru_cache(maxsize=None)
def _level_layout(n: int, D: int, k: int) -> tuple:
    """(rank, prefix rank, exponent of x_{k+1}) for each monomial in x_1..x_{k+1}."""
    exps = MonomialOrder(n, D).tables.exps
    index = MonomialOrder(k, D).tables.index
    return tuple((r, index[exps[r][:k]], exps[r][k]) for r in supported_ranks(n, D, k + 1))


@dataclass(frozen=True)
class CandidateSet:
    solutions: frozenset
    nodes_visited: int = 0
    max_frontier: int = 0

    def __len__(self):
        return len(self.solutions)

    def __iter__(self):
        return iter(sorted(self.solutions))

    def __contains__(self, item):
        return tuple(item) in self.solutions


def preimage_search(
    psi: TriangularMap, u: Sequence[int], p: int, limit: int = DEFAULT_NODE_LIMIT
) -> CandidateSet:
    """Exactly the points s in Z_p^n with psi(s) = u.

    Walks the tree whose depth-k nodes are partial solutions (s_1..s_k); each
    node's children are the Z_p roots of psi_{k+1}(s_1..s_k, x) - u_{k+1}.
    Raises SearchLimitExceeded once more than ``limit`` nodes are visited.
    """
    if len(u) != psi.n:
        raise DimensionMismatch(f"target has {len(u)} entries, map has {psi.n}")
    if p <= 1 or p > psi.q:
        raise InvalidSubrange(f"need 1 < p <= q, got p={p}, q={psi.q}")
    u = [x % psi.q for x in u]
    sols, nodes, frontier, exceeded = kernels.search(psi.levels, u, psi.n, p, psi.q, limit)
    if exceeded:
        raise SearchLimitExceeded(nodes, limit)
    return CandidateSet(frozenset(sols), nodes, frontier)


def filter_candidates(cands: CandidateSet, f: Iterable[Poly]) -> CandidateSet:
    """Keep the candidates where every f_i vanishes."""
    f = list(f)
    keep = frozenset(s for s in cands.solutions if all(poly_eval(fi, s) == 0 for fi in f))
    return CandidateSet(keep, cands.nodes_visited, cands.max_frontier)


def brute_force_oracle(psi, f, u: Sequence[int], p: int) -> frozenset:
    """Every s in Z_p^n with psi(s) = u and f(s) = 0, by exhaustive enumeration."""
    psi = list(psi)
    n = psi[0].n
    if p**n > ORACLE_MAX_POINTS:
        raise InstanceTooLarge(f"p^n = {p}^{n} exceeds {ORACLE_MAX_POINTS}")
    q = psi[0].q
    target = [x % q for x in u]
    f = list(f)
    found = set()
    for s in itertools.product(range(p), repeat=n):
        if all(poly_eval(g, s) == t for g, t in zip(psi, target)) and all(
            poly_eval(g, s) == 0 for g in f
        ):
            found.add(s)
    return frozenset(found)
