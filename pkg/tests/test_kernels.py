"""The compiled kernels must agree with the pure-Python ones bit for bit."""

import random

import pytest
from hypothesis import given, strategies as st

from polykex import _backend, _pykernels
from polykex.mpoly import Constraint, MonomialOrder, poly_random, _product_table
from polykex.protocol import PROPOSED_Q
from polykex.solver import TriangularMap

compiled = _backend.compiled
needs_compiled = pytest.mark.skipif(compiled is None, reason="extension not built")

MODULI = [2, 3, 13, 53, 65537, 2**61 - 1, PROPOSED_Q, 2**89 - 1]


def random_triangular(q, n, m, rng, mode="top"):
    order = MonomialOrder(n, m)
    psis = []
    for j in range(n):
        c = Constraint.top_coeff_nonzero(j) if mode == "top" else Constraint.ANY
        psis.append(poly_random(order, m, rng, q, c, support=j + 1))
    return TriangularMap(psis)


def test_backend_selection():
    assert _backend.BACKEND in ("cython", "python")
    assert _pykernels in _backend.available_backends()
    if compiled is not None:
        assert _backend.BACKEND == "cython"
        assert compiled.MAX_MODULUS_BITS >= PROPOSED_Q.bit_length()


def test_wide_modulus_routes_to_python():
    q = 2**127 - 1
    assert _backend.kernels._pick(q) is _pykernels
    assert _backend.kernels._pick(PROPOSED_Q) is (compiled or _pykernels)


@needs_compiled
@pytest.mark.parametrize("q", MODULI)
def test_eval_parity(q):
    rng = random.Random(q)
    for n, D in [(1, 3), (3, 2), (6, 2), (32, 2)]:
        order = MonomialOrder(n, D)
        t = order.tables
        for _ in range(30):
            f = poly_random(order, D, rng, q)
            x = [rng.randrange(q) for _ in range(n)]
            a = compiled.eval_poly(f.coeffs, x, t.parent, t.var, q)
            b = _pykernels.eval_poly(f.coeffs, x, t.parent, t.var, q)
            assert a == b


@needs_compiled
@pytest.mark.parametrize("q", MODULI)
def test_mul_parity(q):
    rng = random.Random(q + 1)
    for n, df, dg in [(2, 1, 1), (4, 1, 1), (32, 1, 1), (3, 2, 2)]:
        fo, go = MonomialOrder(n, df), MonomialOrder(n, dg)
        table = _product_table(n, df, dg, df + dg)
        size = len(MonomialOrder(n, df + dg))
        for _ in range(10):
            a = poly_random(fo, df, rng, q).coeffs
            b = poly_random(go, dg, rng, q).coeffs
            assert list(compiled.mul_poly(a, b, table, size, q)) == list(
                _pykernels.mul_poly(a, b, table, size, q)
            )


@needs_compiled
@given(
    st.sampled_from(MODULI),
    st.lists(st.integers(min_value=0), min_size=1, max_size=5),
    st.integers(2, 300),
)
def test_roots_parity(q, coeffs, p):
    coeffs = [c % q for c in coeffs]
    p = min(p, q)
    assert sorted(compiled.subrange_roots(coeffs, p, q)) == sorted(
        _pykernels.subrange_roots(coeffs, p, q)
    )


@needs_compiled
@pytest.mark.parametrize("q,p,n,m", [(3, 2, 12, 2), (13, 3, 5, 2), (53, 19, 8, 2), (7, 4, 6, 3),
                                     (PROPOSED_Q, 19, 12, 2), (2**89 - 1, 5, 6, 2)])
@pytest.mark.parametrize("mode", ["top", "uniform"])
def test_search_parity(q, p, n, m, mode):
    rng = random.Random(n * q + m)
    for _ in range(20):
        psi = random_triangular(q, n, m, rng, mode)
        s = [rng.randrange(p) for _ in range(n)]
        u = list(psi(s))
        a = compiled.search(psi.levels, u, n, p, q, 10**6)
        b = _pykernels.search(psi.levels, u, n, p, q, 10**6)
        assert sorted(a[0]) == sorted(b[0])
        assert a[1:] == b[1:]
        assert tuple(s) in {tuple(x) for x in a[0]}


@needs_compiled
def test_search_limit_parity():
    rng = random.Random(5)
    q, p, n = 3, 3, 10  # p = q: every node has up to m children
    psi = random_triangular(q, n, 2, rng, "uniform")
    u = list(psi([0] * n))
    for mod in (compiled, _pykernels):
        sols, nodes, _, exceeded = mod.search(psi.levels, u, n, p, q, 5)
        assert exceeded and nodes > 5
