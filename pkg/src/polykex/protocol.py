"""The two-party exchange.

Alice picks a key s in Z_p^n and publishes ell polynomials f vanishing at s.
Bob hides a triangular map psi as c_i = psi_i + f_{t_i} * r_i and sends c.
Alice answers with u = c(s), which equals psi(s) because f(s) = 0, and Bob
recovers s by inverting psi on u inside Z_p^n and discarding candidates
where f does not vanish.
"""

from __future__ import annotations

import hashlib
import random
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence

from .errors import (
    ExhaustedRestarts,
    InvalidParams,
    InvariantViolation,
    MalformedMessage,
    SearchLimitExceeded,
)
from .field import element_width, is_probable_prime
from .mpoly import Constraint, MonomialOrder, Poly, PolyMap, poly_eval, poly_mul, poly_random
from .solver import (
    DEFAULT_NODE_LIMIT,
    CandidateSet,
    TriangularMap,
    filter_candidates,
    preimage_search,
)

PROPOSED_Q = 46116646144580573897


class RegimeWarning(UserWarning):
    """Parameters outside the region where the failure bound is meaningful."""


@dataclass(frozen=True)
class Params:
    q: int
    p: int
    n: int
    m: int
    d: int
    ell: int

    def __post_init__(self):
        for name in ("q", "p", "n", "m", "d", "ell"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise InvalidParams(f"{name} must be an integer, got {value!r}")
        if not is_probable_prime(self.q):
            raise InvalidParams(f"q = {self.q} is not prime")
        if not 1 < self.p < self.q:
            raise InvalidParams(f"need 1 < p < q, got p={self.p}, q={self.q}")
        if self.n < 1 or self.ell < 1:
            raise InvalidParams("n and ell must be positive")
        if not 1 <= self.d < self.m:
            raise InvalidParams(f"need 1 <= d < m, got d={self.d}, m={self.m}")
        if self.alpha >= 1:
            warnings.warn(
                f"2p/q + (p/q)^2 = {float(self.alpha):.3g} >= 1; the failure bound is vacuous",
                RegimeWarning,
                stacklevel=3,
            )

    @classmethod
    def proposed(cls) -> "Params":
        return cls(PROPOSED_Q, 19, 32, 2, 1, 1)

    @property
    def alpha(self) -> Fraction:
        r = Fraction(self.p, self.q)
        return 2 * r + r * r

    @property
    def width(self) -> int:
        return element_width(self.q)

    @cached_property
    def f_order(self) -> MonomialOrder:
        return MonomialOrder(self.n, self.d)

    @cached_property
    def c_order(self) -> MonomialOrder:
        return MonomialOrder(self.n, self.m)

    @cached_property
    def r_order(self) -> MonomialOrder:
        return MonomialOrder(self.n, self.m - self.d)

    def encode(self) -> bytes:
        """Canonical byte encoding; both peers must agree on it bit for bit."""
        return (
            b"polykex-params-v1"
            + self.q.to_bytes(32, "big")
            + self.p.to_bytes(32, "big")
            + b"".join(x.to_bytes(4, "big") for x in (self.n, self.m, self.d, self.ell))
        )

    @cached_property
    def digest(self) -> bytes:
        """8-byte params hash carried in every frame."""
        return hashlib.sha256(self.encode()).digest()[:8]

    def as_dict(self) -> dict:
        return {"q": self.q, "p": self.p, "n": self.n, "m": self.m, "d": self.d, "l": self.ell}


def derive_seed(root, label: str) -> int:
    """Domain-separated 256-bit seed for a sub-stream of ``root``."""
    h = hashlib.blake2b(f"polykex/{root}/{label}".encode(), digest_size=32)
    return int.from_bytes(h.digest(), "big")


def party_rng(root, party: str, attempt: int = 0) -> random.Random:
    return random.Random(derive_seed(root, f"{party}/round_{attempt}"))


@dataclass(frozen=True)
class AliceState:
    params: Params
    s: tuple
    f: PolyMap
    f_tilde: PolyMap


@dataclass(frozen=True)
class BobState:
    params: Params
    psi: TriangularMap
    r: PolyMap
    t: tuple  # 1-based indices into f
    c: PolyMap


@dataclass(frozen=True)
class Outcome:
    success: bool
    key: Optional[tuple] = None
    reason: str = ""
    candidates: Optional[CandidateSet] = None
    survivors: Optional[CandidateSet] = None
    nodes_visited: int = 0

    @property
    def n_candidates(self) -> int:
        return len(self.candidates) if self.candidates is not None else -1

    @property
    def n_survivors(self) -> int:
        return len(self.survivors) if self.survivors is not None else -1


def alice_init(params: Params, rng: random.Random):
    """Pick the key and the polynomials that vanish on it; returns (state, f_msg)."""
    s = tuple(rng.randrange(params.p) for _ in range(params.n))
    f_tilde = PolyMap(
        poly_random(params.f_order, params.d, rng, params.q, Constraint.EXACT_DEGREE)
        for _ in range(params.ell)
    )
    f = []
    for g in f_tilde:
        shift = poly_eval(g, s)
        coeffs = ((g.coeffs[0] - shift) % params.q,) + g.coeffs[1:]
        f.append(Poly(g.order, coeffs, params.q))
    f = PolyMap(f)
    return AliceState(params, s, f, f_tilde), f


def _check_polymap(msg, count: int, params: Params, max_degree: int, what: str):
    if not isinstance(msg, PolyMap) or len(msg) != count:
        raise MalformedMessage(f"{what}: expected {count} polynomials")
    for g in msg:
        if g.q != params.q or g.n != params.n:
            raise MalformedMessage(f"{what}: polynomial over wrong (q, n)")
        if g.degree > max_degree:
            raise MalformedMessage(f"{what}: degree {g.degree} exceeds {max_degree}")


PSI_MODES = ("uniform", "exact", "top")


def bob_respond(params: Params, f_msg: PolyMap, rng: random.Random, psi_mode: str = "top"):
    """Build the masked map c = psi + f_t * r; returns (state, c_msg)."""
    _check_polymap(f_msg, params.ell, params, params.d, "f")
    if any(g.degree < 1 for g in f_msg):
        raise MalformedMessage("f contains a constant polynomial")
    q, m = params.q, params.m
    psi = TriangularMap(
        poly_random(params.c_order, m, rng, q, _psi_constraint(psi_mode, j), support=j + 1)
        for j in range(params.n)
    )
    r = PolyMap(
        poly_random(params.r_order, m - params.d, rng, q, Constraint.EXACT_DEGREE)
        for _ in range(params.n)
    )
    t = tuple(1 + rng.randrange(params.ell) for _ in range(params.n))
    c = PolyMap(
        psi[i] + poly_mul(f_msg[t[i] - 1], r[i], params.c_order) for i in range(params.n)
    )
    return BobState(params, psi, r, t, c), c


def _psi_constraint(mode, j):
    if mode == "uniform":
        return Constraint.ANY
    if mode == "exact":
        return Constraint.EXACT_DEGREE
    if mode == "top":
        return Constraint.top_coeff_nonzero(j)
    raise ValueError(f"psi_mode must be one of {PSI_MODES}, not {mode!r}")


def alice_finalize(alice: AliceState, c_msg: PolyMap) -> tuple:
    """u = c(s)."""
    params = alice.params
    _check_polymap(c_msg, params.n, params, params.m, "c")
    return tuple(poly_eval(ci, alice.s) for ci in c_msg)


def bob_recover(
    bob: BobState, f_msg: PolyMap, u_msg: Sequence[int], limit: int = DEFAULT_NODE_LIMIT
) -> Outcome:
    """Search psi^{-1}(u) in Z_p^n, filter by f = 0, accept iff one survivor remains."""
    params = bob.params
    if len(u_msg) != params.n or any(not 0 <= x < params.q for x in u_msg):
        raise MalformedMessage("u: wrong length or element out of range")
    try:
        cands = preimage_search(bob.psi, u_msg, params.p, limit)
    except SearchLimitExceeded as exc:
        return Outcome(False, reason=str(exc), nodes_visited=exc.nodes_visited)
    survivors = filter_candidates(cands, f_msg)
    if len(survivors) == 1:
        (key,) = survivors.solutions
        return Outcome(True, key, "unique survivor", cands, survivors, cands.nodes_visited)
    return Outcome(
        False,
        None,
        f"{len(survivors)} candidates survive the f-filter",
        cands,
        survivors,
        cands.nodes_visited,
    )


@dataclass(frozen=True)
class Transcript:
    params: Params
    f_msg: PolyMap
    c_msg: PolyMap
    u_msg: tuple
    outcome: Outcome
    alice_key: tuple
    attempt: int = 0

    @property
    def bob_key(self) -> Optional[tuple]:
        return self.outcome.key

    def to_bytes(self) -> bytes:
        """The three frames exactly as they cross the wire."""
        from .wire import encode_msg

        return b"".join(
            encode_msg(kind, msg, self.params)
            for kind, msg in (("f", self.f_msg), ("c", self.c_msg), ("u", self.u_msg))
        )


def run_attempt(params: Params, seed, attempt: int = 0, limit: int = DEFAULT_NODE_LIMIT):
    """One execution of the exchange. Returns (transcript, alice state, bob state)."""
    alice, f_msg = alice_init(params, party_rng(seed, "alice", attempt))
    bob, c_msg = bob_respond(params, f_msg, party_rng(seed, "bob", attempt))
    u_msg = alice_finalize(alice, c_msg)
    outcome = bob_recover(bob, f_msg, u_msg, limit)
    if outcome.success and outcome.key != alice.s:
        raise InvariantViolation(f"Bob accepted {outcome.key}, Alice holds {alice.s}")
    return Transcript(params, f_msg, c_msg, u_msg, outcome, alice.s, attempt), alice, bob


ROUNDS_PER_ATTEMPT = 2  # f -> / <- c, then u ->


@dataclass
class SessionResult:
    transcripts: list = field(default_factory=list)
    outcome: Optional[Outcome] = None

    @property
    def attempts(self) -> int:
        return len(self.transcripts)

    @property
    def rounds(self) -> int:
        return ROUNDS_PER_ATTEMPT * self.attempts

    @property
    def key(self) -> Optional[tuple]:
        return self.outcome.key if self.outcome else None


def run_session(
    params: Params, seed, max_restarts: int = 8, limit: int = DEFAULT_NODE_LIMIT
) -> SessionResult:
    """Repeat the exchange with fresh randomness until Bob gets a unique key."""
    if max_restarts < 1:
        raise ValueError("max_restarts must be >= 1")
    result = SessionResult()
    for attempt in range(max_restarts):
        transcript, _, _ = run_attempt(params, seed, attempt, limit)
        result.transcripts.append(transcript)
        result.outcome = transcript.outcome
        if transcript.outcome.success:
            return result
    raise ExhaustedRestarts(max_restarts, result.transcripts)


def key_to_bytes(s: Sequence[int], p: int) -> bytes:
    """Big-endian bytes of sum(s_i * p**i), padded to the width of p**n - 1."""
    value = sum(x * p**i for i, x in enumerate(s))
    width = max(1, ((p ** len(s) - 1).bit_length() + 7) // 8)
    return value.to_bytes(width, "big")


def key_digest(s: Sequence[int], p: int) -> str:
    """Short fingerprint for comparing keys without printing them."""
    return hashlib.sha256(key_to_bytes(s, p)).hexdigest()[:16]
