import random
from math import comb

import pytest
from hypothesis import given, strategies as st

from conftest import make_poly
from oracles import graded_lex_exponents, naive_eval, naive_mul
from polykex.errors import DegreeOverflow, DimensionMismatch
from polykex.mpoly import (
    Constraint,
    MonomialOrder,
    Poly,
    PolyMap,
    monomial_count,
    monomial_rank,
    monomial_unrank,
    poly_add,
    poly_eval,
    poly_mul,
    poly_random,
    poly_sub,
    poly_substitute_prefix,
)
from polykex.protocol import PROPOSED_Q


def test_rank_order_two_variables():
    order = MonomialOrder(2, 2)
    # 1, x2, x1, x2^2, x1*x2, x1^2
    expected = [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
    assert [monomial_unrank(order, r) for r in range(6)] == expected
    assert [monomial_rank(order, e) for e in expected] == list(range(6))


@pytest.mark.parametrize("n,D", [(1, 4), (2, 3), (3, 2), (4, 2), (5, 3)])
def test_rank_order_matches_sorted_oracle(n, D):
    order = MonomialOrder(n, D)
    assert [order.unrank(r) for r in range(len(order))] == graded_lex_exponents(n, D)


def test_rank_count():
    assert len(MonomialOrder(32, 2)) == 561 == comb(34, 2)
    assert len(MonomialOrder(32, 1)) == 33
    assert MonomialOrder(32, 2).unrank(0) == (0,) * 32


@given(st.integers(1, 6), st.integers(0, 4), st.data())
def test_rank_unrank_roundtrip(n, D, data):
    order = MonomialOrder(n, D)
    r = data.draw(st.integers(0, len(order) - 1))
    assert order.rank(order.unrank(r)) == r
    assert order.degree_of(r) == sum(order.unrank(r))


def test_degree_prefix_property():
    order = MonomialOrder(4, 3)
    for k in range(4):
        size = monomial_count(4, k)
        assert all(order.degree_of(r) <= k for r in range(size))
        assert all(order.degree_of(r) > k for r in range(size, len(order)))


def test_rank_errors():
    order = MonomialOrder(2, 2)
    with pytest.raises(DegreeOverflow):
        order.rank((2, 1))
    with pytest.raises(DimensionMismatch):
        order.rank((1,))
    with pytest.raises(IndexError):
        order.unrank(6)


@pytest.mark.parametrize("n,d", [(1, 1), (4, 2), (8, 2), (32, 1), (32, 2), (50, 2)])
def test_monomial_count_identity(n, d):
    assert sum(comb(k + n - 1, k) for k in range(d + 1)) == comb(n + d, d) == monomial_count(n, d)


def test_eval_toy_psi2(toy_psi):
    # 1 + 2 + 4 + 1 + 3 = 11 = 1 mod 5
    assert poly_eval(toy_psi[1], (1, 1, 0)) == 1


def test_eval_zero_and_constant():
    order = MonomialOrder(3, 2)
    assert poly_eval(Poly.zero(order, 13), (4, 5, 6)) == 0
    assert poly_eval(Poly.constant(order, 13, 9), (4, 5, 6)) == 9
    with pytest.raises(DimensionMismatch):
        poly_eval(Poly.zero(order, 13), (1, 2))


def test_mul_example():
    f = make_poly(7, 1, 1, {(1,): 1, (0,): 1})
    g = make_poly(7, 1, 1, {(1,): 1, (0,): 6})
    assert poly_mul(f, g).terms() == {(2,): 1, (0,): 6}


def test_mul_identity_and_zero():
    rng = random.Random(3)
    order = MonomialOrder(3, 2)
    f = poly_random(order, 2, rng, 13)
    one = Poly.constant(MonomialOrder(3, 0), 13, 1)
    assert poly_mul(f, one, order) == f
    assert poly_mul(f, Poly.zero(order, 13)).is_zero()


def test_mul_degree_overflow():
    f = make_poly(13, 2, 2, {(1, 1): 1})
    with pytest.raises(DegreeOverflow):
        poly_mul(f, f, MonomialOrder(2, 3))
    with pytest.raises(DimensionMismatch):
        poly_mul(f, make_poly(13, 3, 1, {(1, 0, 0): 1}))
    with pytest.raises(DimensionMismatch):
        poly_mul(f, make_poly(11, 2, 1, {(1, 0): 1}))


@pytest.mark.parametrize("q,n,df,dg", [(13, 3, 1, 1), (53, 4, 2, 1), (PROPOSED_Q, 5, 1, 1), (97, 2, 3, 2)])
def test_arithmetic_against_oracle(q, n, df, dg):
    rng = random.Random(q + n)
    for _ in range(1000 if n < 5 else 300):
        f = poly_random(MonomialOrder(n, df), df, rng, q)
        g = poly_random(MonomialOrder(n, dg), dg, rng, q)
        x = [rng.randrange(q) for _ in range(n)]
        fg = poly_mul(f, g)
        assert fg.terms() == naive_mul(f.terms(), g.terms(), q)
        assert poly_eval(fg, x) == poly_eval(f, x) * poly_eval(g, x) % q
        assert poly_eval(poly_add(f, g), x) == (poly_eval(f, x) + poly_eval(g, x)) % q
        assert poly_eval(poly_sub(f, g), x) == (poly_eval(f, x) - poly_eval(g, x)) % q
        assert poly_eval(f, x) == naive_eval(f.terms(), x, q)


@given(
    st.integers(1, 4),
    st.integers(0, 3),
    st.integers(0, 2**32),
    st.sampled_from([2, 13, 53, PROPOSED_Q]),
)
def test_eval_matches_oracle(n, D, seed, q):
    rng = random.Random(seed)
    f = poly_random(MonomialOrder(n, D), D, rng, q)
    x = [rng.randrange(q) for _ in range(n)]
    assert poly_eval(f, x) == naive_eval(f.terms(), x, q)


def test_substitute_toy_psi3(toy_psi):
    u = poly_substitute_prefix(toy_psi[2], (1, 1), 2)
    assert u.coeffs == (0, 4, 2)


def test_substitute_trivial_cases():
    f = make_poly(13, 1, 3, {(3,): 2, (1,): 5, (0,): 7})
    assert poly_substitute_prefix(f, (), 0).coeffs == (7, 5, 0, 2)
    c = Poly.constant(MonomialOrder(3, 2), 13, 4)
    assert poly_substitute_prefix(c, (1, 2), 2).degree == 0


def test_substitute_rejects_later_variables(toy_psi):
    with pytest.raises(DimensionMismatch):
        poly_substitute_prefix(toy_psi[2], (1,), 1)
    with pytest.raises(DimensionMismatch):
        poly_substitute_prefix(toy_psi[0], (1, 2), 1)


def test_substitute_agrees_with_eval():
    rng = random.Random(11)
    for _ in range(1000):
        q = rng.choice([5, 13, 97, PROPOSED_Q])
        n = rng.randint(1, 5)
        k = rng.randrange(n)
        D = rng.randint(1, 3)
        f = poly_random(MonomialOrder(n, D), D, rng, q, support=k + 1)
        vals = [rng.randrange(q) for _ in range(k)]
        t = rng.randrange(q)
        uni = poly_substitute_prefix(f, vals, k)
        assert uni(t) == poly_eval(f, vals + [t] + [0] * (n - k - 1))


def test_random_determinism_and_shape():
    order = MonomialOrder(32, 2)
    a = poly_random(order, 1, random.Random(5), PROPOSED_Q)
    b = poly_random(order, 1, random.Random(5), PROPOSED_Q)
    assert a == b
    assert all(c == 0 for c in a.coeffs[33:])
    assert sum(1 for c in a.coeffs[:33] if c) == 33  # zero draws are vanishingly unlikely
    const = poly_random(order, 0, random.Random(1), 13)
    assert const.degree <= 0 and not any(const.coeffs[1:])


def test_random_support_consumes_no_extra_randomness():
    # a support-limited draw must equal a draw in the smaller variable set, re-embedded
    small = poly_random(MonomialOrder(2, 2), 2, random.Random(9), 53)
    big = poly_random(MonomialOrder(4, 2), 2, random.Random(9), 53, support=2)
    embedded = {(*e, 0, 0): c for e, c in small.terms().items()}
    assert big.terms() == embedded
    assert big.variables() <= {0, 1}


def test_random_constraints():
    rng = random.Random(0)
    order = MonomialOrder(3, 2)
    for _ in range(300):
        # q = 2 makes all-zero blocks common, so resampling actually runs
        g = poly_random(order, 2, rng, 2, Constraint.EXACT_DEGREE)
        assert g.degree == 2
        h = poly_random(order, 1, rng, 2, Constraint.NONCONSTANT)
        assert h.degree == 1
        t = poly_random(order, 2, rng, 2, Constraint.top_coeff_nonzero(1), support=2)
        assert t.coeffs[order.rank((0, 2, 0))] == 1
    with pytest.raises(ValueError):
        poly_random(order, 0, rng, 13, Constraint.EXACT_DEGREE)
    with pytest.raises(ValueError):
        poly_random(order, 2, rng, 13, Constraint.top_coeff_nonzero(2), support=2)
    with pytest.raises(DegreeOverflow):
        poly_random(order, 3, rng, 13)


def test_random_is_uniform_per_coefficient():
    from scipy.stats import chisquare

    rng = random.Random(1)
    order = MonomialOrder(2, 1)
    counts = [0] * 7
    for _ in range(7000):
        counts[poly_random(order, 1, rng, 7).coeffs[2]] += 1
    assert chisquare(counts).pvalue > 1e-4


def test_polymap_checks_shape():
    a = make_poly(13, 2, 1, {(1, 0): 1})
    with pytest.raises(DimensionMismatch):
        PolyMap([a, make_poly(11, 2, 1, {(1, 0): 1})])
    pm = PolyMap([a, a])
    assert pm((3, 4)) == (3, 3)
    assert pm.degree == 1


def test_poly_bytes_roundtrip():
    rng = random.Random(4)
    f = poly_random(MonomialOrder(5, 2), 2, rng, PROPOSED_Q)
    data = f.to_bytes()
    assert data[:3] == bytes([0, 5, 2])
    assert len(data) == 3 + 21 * 9
    assert Poly.from_bytes(data, PROPOSED_Q) == f


def test_with_order_and_str():
    f = make_poly(13, 2, 1, {(1, 0): 3, (0, 0): 1})
    g = f.with_order(MonomialOrder(2, 3))
    assert g.terms() == f.terms()
    assert g.with_order(MonomialOrder(2, 1)) == f
    with pytest.raises(DegreeOverflow):
        make_poly(13, 2, 2, {(2, 0): 1}).with_order(MonomialOrder(2, 1))
    assert str(f) == "3*x1 + 1"
    assert str(Poly.zero(MonomialOrder(1, 1), 5)) == "0"
