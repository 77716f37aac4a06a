"""Compare the compiled and pure-Python kernels.

Kernel timings call both modules directly on identical inputs and check that
the results agree. Full protocol attempts are timed in a fresh interpreter per
backend, selected through POLYKEX_BACKEND.

    python benchmarks/bench_backends.py [--repeat 5] [--attempts 20]
"""

import argparse
import json
import os
import random
import subprocess
import sys
import timeit

from polykex import _pykernels
from polykex._backend import compiled
from polykex.mpoly import MonomialOrder, _product_table, poly_random
from polykex.protocol import PROPOSED_Q, Params, alice_init, bob_respond

ATTEMPT_SNIPPET = """
import sys, time
from polykex import BACKEND
from polykex.protocol import Params, run_attempt
P = Params(*map(int, sys.argv[1:7]))
k = int(sys.argv[7])
run_attempt(P, "warmup")
t0 = time.perf_counter()
for i in range(k):
    run_attempt(P, f"bench/{i}")
print(BACKEND, (time.perf_counter() - t0) / k)
"""


def best(fn, repeat, number):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_cases(q):
    rng = random.Random(q)
    n = 32
    o2 = MonomialOrder(n, 2)
    f = poly_random(o2, 2, rng, q)
    g = poly_random(MonomialOrder(n, 1), 1, rng, q)
    point = [rng.randrange(q) for _ in range(n)]
    t = o2.tables
    table = _product_table(n, 1, 1, 2)
    a = g.coeffs
    P = Params(q, 19, n, 2, 1, 1)
    _, f_msg = alice_init(P, rng)
    psi = bob_respond(P, f_msg, rng)[0].psi
    s = [rng.randrange(19) for _ in range(n)]
    u = list(psi(s))
    uni = [rng.randrange(q) for _ in range(3)]
    return {
        "eval (n=32, deg 2)": lambda k: k.eval_poly(f.coeffs, point, t.parent, t.var, q),
        "mul (deg 1 x deg 1)": lambda k: k.mul_poly(a, a, table, len(o2), q),
        "subrange roots (deg 2)": lambda k: k.subrange_roots(uni, 19, q),
        "search (n=32, p=19)": lambda k: k.search(psi.levels, u, n, 19, q, 10**6),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--attempts", type=int, default=20)
    ap.add_argument("--json", action="store_true", help="emit one JSON record per row")
    args = ap.parse_args(argv)

    if compiled is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`",
              file=sys.stderr)
        return 1

    rows = []
    for q in (53, PROPOSED_Q):
        for name, call in kernel_cases(q).items():
            assert call(compiled) == call(_pykernels), name
            number = 50 if "search" not in name else 5
            tc = best(lambda: call(compiled), args.repeat, number)
            tp = best(lambda: call(_pykernels), args.repeat, number)
            rows.append({"what": name, "q": q, "cython_s": tc, "python_s": tp})

    for P in (Params(53, 19, 32, 2, 1, 1), Params.proposed()):
        times = {}
        for backend in ("cython", "python"):
            env = dict(os.environ, POLYKEX_BACKEND=backend)
            argv_ = [str(x) for x in (P.q, P.p, P.n, P.m, P.d, P.ell, args.attempts)]
            out = subprocess.run([sys.executable, "-c", ATTEMPT_SNIPPET, *argv_], env=env,
                                 capture_output=True, text=True, check=True).stdout.split()
            times[out[0]] = float(out[1])
        rows.append({"what": "full attempt", "q": P.q,
                     "cython_s": times["cython"], "python_s": times["python"]})

    if args.json:
        for r in rows:
            print(json.dumps(r, sort_keys=True))
        return 0
    print(f"{'kernel':<24} {'q':>26} {'cython':>11} {'python':>11} {'speedup':>8}")
    for r in rows:
        print(f"{r['what']:<24} {r['q']:>26} {r['cython_s'] * 1e6:>9.1f}us "
              f"{r['python_s'] * 1e6:>9.1f}us {r['python_s'] / r['cython_s']:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
