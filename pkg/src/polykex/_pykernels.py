"""Pure-Python kernels; reference behaviour for the compiled ``_kernels`` module.

Both modules expose the same functions with the same signatures:

eval_poly(coeffs, point, parent, var, q) -> int
mul_poly(a, b, table, out_len, q) -> list
search(levels, u, n, p, q, limit) -> (solutions, nodes, max_frontier, exceeded)
subrange_roots(coeffs, p, q) -> list

``levels[k]`` describes the polynomial solved at depth k (0-based, so it
determines variable k from the already-fixed variables 0..k-1) as a tuple
``(parent, var, prefix_rank, xexp, coeffs)``: the monomial tables of the
k-variable prefix order, then one entry per nonzero term giving the rank of
the term's prefix monomial, its exponent of variable k and its coefficient.
"""

from .field import QUADRATIC_THRESHOLD, Field

BACKEND = "python"


def monomial_values(point, parent, var, q):
    vals = [1] * len(parent)
    for r in range(1, len(parent)):
        vals[r] = vals[parent[r]] * point[var[r]] % q
    return vals


def eval_poly(coeffs, point, parent, var, q):
    vals = monomial_values(point, parent, var, q)
    return sum(c * v for c, v in zip(coeffs, vals)) % q


def mul_poly(a, b, table, out_len, q):
    out = [0] * out_len
    lb = len(b)
    nz_b = [(j, y) for j, y in enumerate(b) if y]
    for i, x in enumerate(a):
        if not x:
            continue
        base = i * lb
        for j, y in nz_b:
            out[table[base + j]] += x * y
    return [c % q for c in out]


def subrange_roots(coeffs, p, q):
    deg = len(coeffs) - 1
    while deg >= 0 and not coeffs[deg]:
        deg -= 1
    if deg < 0:
        return list(range(p))
    if deg <= 2 and p > QUADRATIC_THRESHOLD:
        return sorted(Field(q, check_prime=False).roots_in_subrange(coeffs, p, "closed"))
    roots = []
    for x in range(p):
        acc = 0
        for i in range(deg, -1, -1):
            acc = (acc * x + coeffs[i]) % q
        if acc == 0:
            roots.append(x)
    return roots


def _univariate(level, cur, u_k, q):
    parent, var, prefix_rank, xexp, coeffs = level
    pv = monomial_values(cur, parent, var, q)
    uni = [0] * (max(xexp, default=0) + 1)
    for pr, e, c in zip(prefix_rank, xexp, coeffs):
        uni[e] += c * pv[pr]
    uni[0] -= u_k
    return [c % q for c in uni]


def search(levels, u, n, p, q, limit):
    """Depth-first preimage search over Z_p^n with an explicit stack."""
    cur = [0] * n
    solutions = []
    stack = [(0, 0)]
    nodes = 0
    max_frontier = 1
    while stack:
        depth, value = stack.pop()
        nodes += 1
        if nodes > limit:
            return solutions, nodes, max_frontier, True
        if depth:
            cur[depth - 1] = value
        if depth == n:
            solutions.append(tuple(cur))
            continue
        uni = _univariate(levels[depth], cur, u[depth], q)
        for r in reversed(subrange_roots(uni, p, q)):
            stack.append((depth + 1, r))
        if len(stack) > max_frontier:
            max_frontier = len(stack)
    return solutions, nodes, max_frontier, False
