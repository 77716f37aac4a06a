"""Closed-form calculators and the Monte Carlo harness.

The failure bound is evaluated in exact rational arithmetic: q**ell and
alpha**n are far outside double range for the proposed q.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Optional

from scipy.stats import binomtest

from .errors import InvariantViolation, OracleTooLarge
from .protocol import (
    Params,
    alice_finalize,
    alice_init,
    bob_recover,
    bob_respond,
    derive_seed,
    party_rng,
)
from .solver import DEFAULT_NODE_LIMIT, ORACLE_MAX_POINTS, brute_force_oracle

OMEGA = 2.3  # linear-algebra exponent used in the F5 estimate
SECURITY_TARGET = 128


def _log10(x: Fraction) -> float:
    """log10 of a positive rational without going through float(x)."""
    return (
        math.log10(x.numerator) - math.log10(x.denominator)
        if x.numerator.bit_length() > 1000 or x.denominator.bit_length() > 1000
        else math.log10(float(x))
    )


# --- failure bound -------------------------------------------------------


@dataclass(frozen=True)
class FailureBoundBreakdown:
    alpha: Fraction
    expected_incorrect: Fraction
    bound: Fraction
    valid: bool

    def __float__(self):
        return float(self.bound)

    @property
    def log10_bound(self) -> float:
        return _log10(self.bound)

    def mantissa_exponent(self) -> tuple:
        """(m, e) with bound = m * 10**e and 1 <= m < 10."""
        lg = self.log10_bound
        e = math.floor(lg)
        return 10 ** (lg - e), e


def failure_bound(params: Params) -> FailureBoundBreakdown:
    """Markov bound on Pr[X >= 1], X the number of incorrect surviving candidates.

    E[X] <= (p/q) * (1 + alpha + ... + alpha**(n-1)) * q**-ell. The geometric sum
    is written out as (1 - alpha**n) / (1 - alpha), or n when alpha = 1.
    """
    p, q, n = params.p, params.q, params.n
    ratio = Fraction(p, q)
    alpha = 2 * ratio + ratio * ratio
    geo = Fraction(n) if alpha == 1 else (1 - alpha**n) / (1 - alpha)
    expected = ratio * geo / Fraction(q) ** params.ell
    return FailureBoundBreakdown(alpha, expected, expected, alpha < 1 and expected <= 1)


# --- communication -------------------------------------------------------


class Variant(str, enum.Enum):
    PROPOSED = "proposed"
    AKIYAMA = "akiyama"


@dataclass(frozen=True)
class CommCost:
    variant: Variant
    elements_f: int
    elements_g: int
    elements_c: int
    elements_u: int
    total_elements: int
    total_bits: float
    bytes_on_wire: Optional[int] = None  # payload bytes at W = ceil(log2 q / 8) per element


def _graded_count(n: int, D: int) -> int:
    """sum_{k=0}^{D} C(k+n-1, k), the number of monomials of degree <= D."""
    return sum(comb(k + n - 1, k) for k in range(D + 1))


def comm_cost(params, variant: Variant | str = Variant.PROPOSED) -> CommCost:
    """Field elements sent in one execution.

    ``params`` needs q, n, m, d and (for the proposed protocol) ell; a plain
    namespace works, since the prior protocol's q = 9 is not prime.
    """
    variant = Variant(variant)
    q, n, m, d = params.q, params.n, params.m, params.d
    ell = getattr(params, "ell", 1)
    per_f, per_c = _graded_count(n, d), _graded_count(n, m)
    if variant is Variant.PROPOSED:
        ef, eg = ell * per_f, 0
    else:
        ef, eg = per_f, n * n + n
    ec, eu = n * per_c, n
    total = ef + eg + ec + eu
    width = (q.bit_length() + 7) // 8
    return CommCost(variant, ef, eg, ec, eu, total, total * math.log2(q), total * width)


# --- attack costs --------------------------------------------------------


@dataclass(frozen=True)
class SecurityEstimate:
    groebner_log2: float
    linalg_log2: float
    exhaustive_log2: float
    omega: float
    d_reg: int
    solution_dim: int

    def all_secure(self, target: int = SECURITY_TARGET) -> bool:
        return min(self.groebner_log2, self.linalg_log2, self.exhaustive_log2) > target

    def as_dict(self) -> dict:
        return {
            "groebner_log2": self.groebner_log2,
            "linalg_log2": self.linalg_log2,
            "exhaustive_log2": self.exhaustive_log2,
            "omega": self.omega,
            "d_reg": self.d_reg,
            "solution_dim": self.solution_dim,
        }


def security_estimate(params: Params, omega: float = OMEGA) -> SecurityEstimate:
    """log2 costs of the three generic attacks.

    Groebner (F5): C(n + d_reg, n)**omega with d_reg = n + 1, an empirical
    value measured only for small n. Linearisation: q**N where N counts the
    monomials of degree <= m - d. Exhaustive search over Z_p^n with one
    coordinate fixed by the equations: p**(n-1).
    """
    n = params.n
    d_reg = n + 1
    N = _graded_count(n, params.m - params.d)
    return SecurityEstimate(
        groebner_log2=omega * math.log2(comb(n + d_reg, n)),
        linalg_log2=N * math.log2(params.q),
        exhaustive_log2=(n - 1) * math.log2(params.p),
        omega=omega,
        d_reg=d_reg,
        solution_dim=N,
    )


# --- Monte Carlo ---------------------------------------------------------


@dataclass
class TrialStats:
    """Mergeable aggregate over single-attempt protocol runs."""

    trials: int = 0
    successes: int = 0
    failures: int = 0
    limit_hits: int = 0
    wrong_keys: int = 0
    key_lost: int = 0
    oracle_checked: int = 0
    oracle_mismatches: int = 0
    nodes_total: int = 0
    incorrect_candidate_histogram: Counter = field(default_factory=Counter)
    candidate_histogram: Counter = field(default_factory=Counter)

    def add(self, rec: dict):
        self.trials += 1
        if rec["success"]:
            self.successes += 1
        else:
            self.failures += 1
        self.limit_hits += rec["limit_hit"]
        self.wrong_keys += rec["wrong_key"]
        self.key_lost += rec["key_lost"]
        self.nodes_total += rec["nodes"]
        if rec["oracle"] is not None:
            self.oracle_checked += 1
            self.oracle_mismatches += not rec["oracle"]
        if not rec["limit_hit"]:
            self.incorrect_candidate_histogram[rec["incorrect"]] += 1
            self.candidate_histogram[rec["candidates"]] += 1

    def merge(self, other: "TrialStats") -> "TrialStats":
        out = TrialStats()
        for name in (
            "trials", "successes", "failures", "limit_hits", "wrong_keys", "key_lost",
            "oracle_checked", "oracle_mismatches", "nodes_total",
        ):
            setattr(out, name, getattr(self, name) + getattr(other, name))
        out.incorrect_candidate_histogram = (
            self.incorrect_candidate_histogram + other.incorrect_candidate_histogram
        )
        out.candidate_histogram = self.candidate_histogram + other.candidate_histogram
        return out

    @property
    def mean_nodes_visited(self) -> float:
        return self.nodes_total / self.trials if self.trials else 0.0

    @property
    def success_ratio(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def failure_ratio(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    def failure_ci(self, confidence: float = 0.99) -> tuple:
        """Clopper-Pearson interval for the failure probability."""
        ci = binomtest(self.failures, self.trials).proportion_ci(confidence, method="exact")
        return ci.low, ci.high

    def success_ci(self, confidence: float = 0.99) -> tuple:
        ci = binomtest(self.successes, self.trials).proportion_ci(confidence, method="exact")
        return ci.low, ci.high

    def failure_pvalue(self, rate: float, alternative: str = "two-sided") -> float:
        return binomtest(self.failures, self.trials, rate, alternative=alternative).pvalue

    def success_pvalue(self, rate: float, alternative: str = "two-sided") -> float:
        return binomtest(self.successes, self.trials, rate, alternative=alternative).pvalue


def trial_seed(seed, index: int) -> int:
    return derive_seed(seed, f"trial/{index}")


def run_trial(params: Params, seed, index: int, oracle_check: bool = False,
              limit: int = DEFAULT_NODE_LIMIT) -> dict:
    """One single-attempt exchange; returns a flat record (never raises on a wrong key)."""
    root = trial_seed(seed, index)
    alice, f_msg = alice_init(params, party_rng(root, "alice"))
    bob, c_msg = bob_respond(params, f_msg, party_rng(root, "bob"))
    u_msg = alice_finalize(alice, c_msg)
    out = bob_recover(bob, f_msg, u_msg, limit)
    limit_hit = out.candidates is None
    rec = {
        "index": index,
        "success": out.success,
        "limit_hit": limit_hit,
        "wrong_key": bool(out.success and out.key != alice.s),
        "key_lost": bool(not limit_hit and alice.s not in out.survivors),
        "candidates": -1 if limit_hit else len(out.candidates),
        "incorrect": -1 if limit_hit else len(out.survivors) - (alice.s in out.survivors),
        "nodes": out.nodes_visited,
        "oracle": None,
    }
    if oracle_check and not limit_hit:
        expected = brute_force_oracle(bob.psi, f_msg, u_msg, params.p)
        rec["oracle"] = expected == out.survivors.solutions
    return rec


def _run_chunk(args) -> TrialStats:
    params, seed, start, stop, oracle_check, limit = args
    stats = TrialStats()
    for i in range(start, stop):
        stats.add(run_trial(params, seed, i, oracle_check, limit))
    return stats


def monte_carlo(
    params: Params,
    trials: int,
    seed=0,
    oracle_check: bool = False,
    workers: int = 1,
    limit: int = DEFAULT_NODE_LIMIT,
    strict: bool = True,
) -> TrialStats:
    """Run ``trials`` independent single attempts (no restarts).

    Trial i uses the seed derived from (seed, "trial/i"), so the result does
    not depend on ``workers``. With ``strict`` a wrong accepted key raises
    InvariantViolation after aggregation.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if oracle_check and params.p**params.n > ORACLE_MAX_POINTS:
        raise OracleTooLarge(f"p^n = {params.p}^{params.n} exceeds {ORACLE_MAX_POINTS}")
    workers = max(1, min(workers, trials))
    if workers == 1:
        stats = _run_chunk((params, seed, 0, trials, oracle_check, limit))
    else:
        bounds = [trials * k // workers for k in range(workers + 1)]
        jobs = [(params, seed, a, b, oracle_check, limit) for a, b in zip(bounds, bounds[1:])]
        stats = TrialStats()
        with ProcessPoolExecutor(workers) as pool:
            for part in pool.map(_run_chunk, jobs):
                stats = stats.merge(part)
    if strict and stats.wrong_keys:
        raise InvariantViolation(f"{stats.wrong_keys} trials accepted a wrong key")
    return stats


# --- reporting -----------------------------------------------------------


def bound_record(params: Params, seed=None) -> dict:
    b = failure_bound(params)
    m, e = b.mantissa_exponent()
    return {
        "kind": "bound",
        "params": params.as_dict(),
        "seed": seed,
        "alpha": float(b.alpha),
        "bound": float(b.bound) if e > -300 else 0.0,
        "bound_sci": f"{m:.3f}e{e:+d}",
        "log10_bound": b.log10_bound,
        "valid": b.valid,
    }


def commsize_record(params, variant, seed=None) -> dict:
    c = comm_cost(params, variant)
    return {
        "kind": "commsize",
        "params": params.as_dict() if isinstance(params, Params) else {
            "q": params.q, "p": getattr(params, "p", None), "n": params.n,
            "m": params.m, "d": params.d, "l": getattr(params, "ell", 1),
        },
        "seed": seed,
        "variant": c.variant.value,
        "elements": {"f": c.elements_f, "g": c.elements_g, "c": c.elements_c, "u": c.elements_u},
        "total_elements": c.total_elements,
        "total_bits": c.total_bits,
        "bytes_on_wire": c.bytes_on_wire,
    }


def security_record(params: Params, seed=None) -> dict:
    s = security_estimate(params)
    return {
        "kind": "security",
        "params": params.as_dict(),
        "seed": seed,
        **s.as_dict(),
        "target_log2": SECURITY_TARGET,
        "all_secure": s.all_secure(),
    }


def montecarlo_record(params: Params, seed, stats: TrialStats, confidence: float = 0.99) -> dict:
    lo, hi = stats.failure_ci(confidence)
    b = failure_bound(params)
    return {
        "kind": "montecarlo",
        "params": params.as_dict(),
        "seed": seed,
        "trials": stats.trials,
        "successes": stats.successes,
        "failures": stats.failures,
        "failure_ratio": stats.failure_ratio,
        "failure_ci": [lo, hi],
        "confidence": confidence,
        "bound": float(b.bound) if b.log10_bound > -300 else 0.0,
        "limit_hits": stats.limit_hits,
        "wrong_keys": stats.wrong_keys,
        "key_lost": stats.key_lost,
        "oracle_checked": stats.oracle_checked,
        "oracle_mismatches": stats.oracle_mismatches,
        "mean_nodes_visited": stats.mean_nodes_visited,
        "incorrect_histogram": {
            str(k): v for k, v in sorted(stats.incorrect_candidate_histogram.items())
        },
    }


def to_json(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def format_table(rows: Iterable[dict], columns: list) -> str:
    """Plain fixed-width table; ``columns`` is a list of (header, key or callable)."""
    rows = list(rows)
    cells = [[h for h, _ in columns]]
    for r in rows:
        cells.append([str(k(r) if callable(k) else r.get(k, "")) for _, k in columns])
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
