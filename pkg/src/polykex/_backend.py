"""Kernel selection: compiled ``_kernels`` when importable, else ``_pykernels``.

Set ``POLYKEX_BACKEND=python`` to force the fallback, or ``cython`` to make a
missing extension an import error.
"""

import os

from . import _pykernels

_choice = os.environ.get("POLYKEX_BACKEND", "auto").lower()
if _choice not in ("auto", "python", "cython"):
    raise ImportError(f"POLYKEX_BACKEND must be auto, python or cython, not {_choice!r}")

compiled = None
if _choice != "python":
    try:
        from . import _kernels as compiled
    except ImportError:
        if _choice == "cython":
            raise


class _Dispatch:
    """Routes each call to the compiled kernel unless the modulus is too wide for it."""

    def __init__(self, fast, slow):
        self.fast = fast
        self.slow = slow
        self.name = fast.BACKEND if fast else slow.BACKEND
        self._max_bits = fast.MAX_MODULUS_BITS if fast else 0

    def _pick(self, q):
        return self.fast if self.fast and q.bit_length() <= self._max_bits else self.slow

    def eval_poly(self, coeffs, point, parent, var, q):
        return self._pick(q).eval_poly(coeffs, point, parent, var, q)

    def mul_poly(self, a, b, table, out_len, q):
        return self._pick(q).mul_poly(a, b, table, out_len, q)

    def subrange_roots(self, coeffs, p, q):
        return self._pick(q).subrange_roots(coeffs, p, q)

    def search(self, levels, u, n, p, q, limit):
        return self._pick(q).search(levels, u, n, p, q, limit)


kernels = _Dispatch(compiled, _pykernels)
BACKEND = kernels.name


def available_backends():
    """Kernel modules usable in this process, fastest first."""
    return [m for m in (compiled, _pykernels) if m is not None]
