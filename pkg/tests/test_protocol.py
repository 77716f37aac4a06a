import random
import warnings

import pytest

from oracles import naive_eval, naive_mul
from polykex import protocol
from polykex.errors import ExhaustedRestarts, InvalidParams, MalformedMessage
from polykex.mpoly import MonomialOrder, Poly, PolyMap, poly_sub
from polykex.protocol import (
    PROPOSED_Q,
    Outcome,
    Params,
    RegimeWarning,
    alice_finalize,
    alice_init,
    bob_recover,
    bob_respond,
    derive_seed,
    key_digest,
    key_to_bytes,
    party_rng,
    run_attempt,
    run_session,
)

SMALL = Params(13, 3, 4, 2, 1, 1)


def test_params_validation():
    assert Params.proposed() == Params(PROPOSED_Q, 19, 32, 2, 1, 1)
    bad = [
        dict(q=12, p=3, n=4, m=2, d=1, ell=1),
        dict(q=53, p=100, n=4, m=2, d=1, ell=1),
        dict(q=53, p=53, n=4, m=2, d=1, ell=1),
        dict(q=53, p=1, n=4, m=2, d=1, ell=1),
        dict(q=53, p=3, n=0, m=2, d=1, ell=1),
        dict(q=53, p=3, n=4, m=2, d=2, ell=1),
        dict(q=53, p=3, n=4, m=2, d=0, ell=1),
        dict(q=53, p=3, n=4, m=2, d=1, ell=0),
        dict(q=53.0, p=3, n=4, m=2, d=1, ell=1),
        dict(q=53, p=True, n=4, m=2, d=1, ell=1),
    ]
    for kw in bad:
        with pytest.raises(InvalidParams):
            Params(**kw)


def test_regime_warning():
    with pytest.warns(RegimeWarning):
        Params(7, 4, 32, 2, 1, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        Params(7, 2, 32, 2, 1, 1)  # alpha = 32/49


def test_params_derived():
    P = Params.proposed()
    assert P.width == 9
    assert len(P.f_order) == 33 and len(P.c_order) == 561 and len(P.r_order) == 33
    assert len(P.digest) == 8
    assert P.digest != Params(PROPOSED_Q, 17, 32, 2, 1, 1).digest
    assert P.as_dict()["l"] == 1


def test_alice_init():
    alice, f = alice_init(Params.proposed(), party_rng(1, "alice"))
    assert len(f) == 1 and len(f[0].coeffs) == 33
    assert all(0 <= x < 19 for x in alice.s)
    assert f(alice.s) == (0,)
    for g, gt in zip(f, alice.f_tilde):
        assert g.coeffs[1:] == gt.coeffs[1:]
        assert g.degree == 1
    again, _ = alice_init(Params.proposed(), party_rng(1, "alice"))
    assert again == alice


@pytest.mark.parametrize("params", [SMALL, Params(53, 19, 6, 3, 2, 3), Params.proposed()])
def test_masking_identity(params):
    alice, f = alice_init(params, party_rng("mask", "alice"))
    bob, c = bob_respond(params, f, party_rng("mask", "bob"))
    assert all(1 <= t <= params.ell for t in bob.t)
    for i in range(params.n):
        # c_i - psi_i must be exactly f_{t_i} * r_i, rebuilt by the naive product
        diff = poly_sub(c[i], bob.psi[i])
        assert diff.terms() == naive_mul(f[bob.t[i] - 1].terms(), bob.r[i].terms(), params.q)
        assert c[i].degree <= params.m
        assert len(c[i].coeffs) == len(params.c_order)
    # any point where f vanishes sees c = psi; Alice's key is one of them
    assert c(alice.s) == bob.psi(alice.s)


def test_ell_one_gives_all_ones():
    _, f = alice_init(SMALL, party_rng(0, "alice"))
    bob, _ = bob_respond(SMALL, f, party_rng(0, "bob"))
    assert bob.t == (1, 1, 1, 1)


def test_psi_is_triangular_with_top_coefficients():
    params = Params(53, 19, 6, 2, 1, 1)
    _, f = alice_init(params, party_rng(3, "alice"))
    bob, _ = bob_respond(params, f, party_rng(3, "bob"))
    for j, psi in enumerate(bob.psi):
        assert psi.variables() <= set(range(j + 1))
        top = tuple(2 if i == j else 0 for i in range(params.n))
        assert psi.coeffs[params.c_order.rank(top)] != 0


def test_alice_finalize_matches_independent_eval():
    t, alice, bob = run_attempt(SMALL, 42)
    u = tuple(naive_eval(ci.terms(), alice.s, SMALL.q) for ci in t.c_msg)
    assert t.u_msg == u == bob.psi(alice.s)


def test_bob_rejects_malformed_f():
    P = SMALL
    rng = random.Random(0)
    const = PolyMap([Poly.constant(P.f_order, P.q, 5)])
    with pytest.raises(MalformedMessage):
        bob_respond(P, const, rng)
    with pytest.raises(MalformedMessage):
        bob_respond(P, PolyMap([]), rng)
    quad = PolyMap([Poly.from_terms(MonomialOrder(4, 2), 13, {(2, 0, 0, 0): 1})])
    with pytest.raises(MalformedMessage):
        bob_respond(P, quad, rng)
    wrong_q = PolyMap([Poly.from_terms(MonomialOrder(4, 1), 11, {(1, 0, 0, 0): 1})])
    with pytest.raises(MalformedMessage):
        bob_respond(P, wrong_q, rng)


def test_alice_and_bob_reject_malformed_replies():
    alice, f = alice_init(SMALL, party_rng(0, "alice"))
    bob, c = bob_respond(SMALL, f, party_rng(0, "bob"))
    with pytest.raises(MalformedMessage):
        alice_finalize(alice, PolyMap(list(c)[:3]))
    with pytest.raises(MalformedMessage):
        bob_recover(bob, f, (1, 2, 3))
    with pytest.raises(MalformedMessage):
        bob_recover(bob, f, (1, 2, 3, 13))


def test_run_attempt_success_and_determinism():
    t1, alice, _ = run_attempt(SMALL, 42)
    t2, _, _ = run_attempt(SMALL, 42)
    assert t1.outcome.success and t1.bob_key == alice.s
    assert t1.to_bytes() == t2.to_bytes()
    t3, _, _ = run_attempt(SMALL, 42, attempt=1)
    assert t3.to_bytes() != t1.to_bytes()


def test_seed_streams_are_separated():
    assert derive_seed(1, "alice/round_0") != derive_seed(1, "bob/round_0")
    assert derive_seed(1, "alice/round_0") != derive_seed(1, "alice/round_1")
    assert derive_seed("1", "x") == derive_seed(1, "x")


def test_recover_reports_limit_as_failure():
    params = Params(3, 2, 12, 2, 1, 1)
    t, alice, bob = run_attempt(params, 0)
    out = bob_recover(bob, t.f_msg, t.u_msg, limit=1)
    assert not out.success and out.candidates is None
    assert "limit" in out.reason
    assert out.n_candidates == -1


def test_failure_when_two_survivors(monkeypatch):
    # force two surviving candidates and check the #S != 1 rule
    t, alice, bob = run_attempt(SMALL, 42)
    fake = protocol.CandidateSet(frozenset({alice.s, (2, 2, 2, 2)}), 3, 1)
    monkeypatch.setattr(protocol, "preimage_search", lambda *a, **k: fake)
    monkeypatch.setattr(protocol, "filter_candidates", lambda c, f: c)
    out = bob_recover(bob, t.f_msg, t.u_msg)
    assert not out.success and out.key is None and out.n_survivors == 2


def test_run_session_restarts(monkeypatch):
    calls = []
    real = protocol.bob_recover

    def flaky(bob, f, u, limit):
        calls.append(1)
        if len(calls) < 3:
            return Outcome(False, reason="forced")
        return real(bob, f, u, limit)

    monkeypatch.setattr(protocol, "bob_recover", flaky)
    res = run_session(SMALL, 7, max_restarts=5)
    assert res.attempts == 3 and res.rounds == 6
    assert [t.attempt for t in res.transcripts] == [0, 1, 2]
    assert res.key == res.transcripts[-1].alice_key
    # every restart regenerates everything
    assert len({t.to_bytes() for t in res.transcripts}) == 3

    calls.clear()
    monkeypatch.setattr(protocol, "bob_recover", lambda *a: Outcome(False, reason="forced"))
    with pytest.raises(ExhaustedRestarts) as info:
        run_session(SMALL, 7, max_restarts=1)
    assert info.value.attempts == 1 and len(info.value.transcripts) == 1
    with pytest.raises(ValueError):
        run_session(SMALL, 7, max_restarts=0)


def test_proposed_session_two_rounds():
    res = run_session(Params.proposed(), "rounds")
    assert res.outcome.success and res.attempts == 1 and res.rounds == 2
    last = res.transcripts[-1]
    assert last.alice_key == last.bob_key


def test_key_export():
    # 19**2 - 1 = 360 needs two bytes
    assert key_to_bytes((1, 0), 19) == b"\x00\x01"
    assert key_to_bytes((0, 1), 19) == b"\x00\x13"
    assert key_to_bytes((18,) * 32, 19) == (19**32 - 1).to_bytes(17, "big")
    assert len(key_digest((1, 2, 3), 19)) == 16
    assert key_digest((1, 2, 3), 19) != key_digest((1, 2, 4), 19)
