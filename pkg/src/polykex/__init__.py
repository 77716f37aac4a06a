"""Key exchange over multivariate polynomial systems with keys restricted to Z_p^n.

Alice publishes polynomials f vanishing at her key s in Z_p^n, Bob masks an
easy-to-invert triangular map as c = psi + f*r, Alice returns u = c(s), and
Bob recovers s by searching psi^-1(u) inside Z_p^n.
"""

from ._backend import BACKEND
from .analysis import (
    CommCost,
    FailureBoundBreakdown,
    SecurityEstimate,
    TrialStats,
    Variant,
    comm_cost,
    failure_bound,
    monte_carlo,
    security_estimate,
)
from .errors import *  # noqa: F401,F403
from .field import Field, UniPoly, is_probable_prime
from .mpoly import Constraint, MonomialOrder, Poly, PolyMap, poly_eval, poly_mul, poly_random
from .protocol import (
    PROPOSED_Q,
    Outcome,
    Params,
    SessionResult,
    Transcript,
    alice_finalize,
    alice_init,
    bob_recover,
    bob_respond,
    key_digest,
    key_to_bytes,
    run_attempt,
    run_session,
)
from .solver import CandidateSet, TriangularMap, brute_force_oracle, filter_candidates, preimage_search
from .wire import decode_msg, encode_msg, session_over_stream

__version__ = "0.1.0"
