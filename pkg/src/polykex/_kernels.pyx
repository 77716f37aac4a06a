# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contract as ``_pykernels``.

Field elements are held as unsigned 128-bit integers. Moduli below 2**64
multiply directly; moduli below 2**96 multiply limb by limb so no
intermediate exceeds 128 bits. Callers route larger moduli to the Python
kernels (see ``MAX_MODULUS_BITS``).
"""

from libc.stdlib cimport malloc, free, realloc

cdef extern from *:
    """
    typedef unsigned __int128 pk_u128;
    typedef unsigned long long pk_u64;

    static inline pk_u128 pk_make(pk_u64 hi, pk_u64 lo) {
        return ((pk_u128)hi << 64) | lo;
    }
    static inline pk_u64 pk_hi(pk_u128 x) { return (pk_u64)(x >> 64); }
    static inline pk_u64 pk_lo(pk_u128 x) { return (pk_u64)x; }

    static inline pk_u128 pk_mulmod(pk_u128 a, pk_u128 b, pk_u128 q, int wide) {
        if (!wide) return (a * b) % q;
        pk_u128 acc = 0;
        for (int s = 64; s >= 0; s -= 32) {
            pk_u128 limb = (b >> s) & 0xffffffffu;
            acc = (acc << 32) % q;
            acc = (acc + (a * limb) % q) % q;
        }
        return acc;
    }
    static inline pk_u128 pk_addmod(pk_u128 a, pk_u128 b, pk_u128 q) {
        pk_u128 s = a + b;
        return s >= q ? s - q : s;
    }
    static inline pk_u128 pk_powmod(pk_u128 a, pk_u128 e, pk_u128 q, int wide) {
        pk_u128 r = 1 % q;
        while (e) {
            if (e & 1) r = pk_mulmod(r, a, q, wide);
            a = pk_mulmod(a, a, q, wide);
            e >>= 1;
        }
        return r;
    }
    /* Tonelli-Shanks; returns 0 and sets *ok = 0 for a non-residue */
    static pk_u128 pk_sqrt(pk_u128 a, pk_u128 q, int wide, int *ok) {
        *ok = 1;
        if (a == 0) return 0;
        if (pk_powmod(a, (q - 1) >> 1, q, wide) != 1) { *ok = 0; return 0; }
        if ((q & 3) == 3) return pk_powmod(a, (q + 1) >> 2, q, wide);
        pk_u128 t = q - 1; int s = 0;
        while (!(t & 1)) { t >>= 1; s++; }
        pk_u128 z = 2;
        while (pk_powmod(z, (q - 1) >> 1, q, wide) != q - 1) z++;
        pk_u128 c = pk_powmod(z, t, q, wide);
        pk_u128 x = pk_powmod(a, (t + 1) >> 1, q, wide);
        pk_u128 b = pk_powmod(a, t, q, wide);
        int m = s;
        while (b != 1) {
            int i = 0; pk_u128 b2 = b;
            while (b2 != 1) { b2 = pk_mulmod(b2, b2, q, wide); i++; }
            pk_u128 g = c;
            for (int k = 0; k < m - i - 1; k++) g = pk_mulmod(g, g, q, wide);
            x = pk_mulmod(x, g, q, wide);
            c = pk_mulmod(g, g, q, wide);
            b = pk_mulmod(b, c, q, wide);
            m = i;
        }
        return x;
    }
    """
    # declared with a 64-bit stand-in; all arithmetic is emitted as C on the real type
    ctypedef unsigned long long u128 "pk_u128"
    ctypedef unsigned long long u64 "pk_u64"
    u128 pk_make(u64 hi, u64 lo) nogil
    u64 pk_hi(u128 x) nogil
    u64 pk_lo(u128 x) nogil
    u128 pk_mulmod(u128 a, u128 b, u128 q, int wide) nogil
    u128 pk_addmod(u128 a, u128 b, u128 q) nogil
    u128 pk_powmod(u128 a, u128 e, u128 q, int wide) nogil
    u128 pk_sqrt(u128 a, u128 q, int wide, int *ok) nogil

BACKEND = "cython"
MAX_MODULUS_BITS = 96
DEF QUADRATIC_THRESHOLD = 64

cdef object MASK64 = (1 << 64) - 1


cdef inline u128 to_u128(object x):
    return pk_make(<u64>(x >> 64), <u64>(x & MASK64))


cdef inline object from_u128(u128 x):
    return (<object>pk_hi(x) << 64) | <object>pk_lo(x)


cdef u128* to_array(object values, Py_ssize_t size) except NULL:
    cdef u128* out = <u128*>malloc(max(size, 1) * sizeof(u128))
    if out == NULL:
        raise MemoryError()
    cdef Py_ssize_t i = 0
    for v in values:
        out[i] = to_u128(v)
        i += 1
    return out


cdef inline int is_wide(object q) except -1:
    if q.bit_length() > MAX_MODULUS_BITS:
        raise OverflowError(f"modulus exceeds {MAX_MODULUS_BITS} bits")
    return q.bit_length() > 64


cdef void monomial_values(u128* vals, const long long[:] parent, const long long[:] var,
                          u128* point, u128 q, int wide) noexcept nogil:
    cdef Py_ssize_t r
    vals[0] = 1 % q
    for r in range(1, parent.shape[0]):
        vals[r] = pk_mulmod(vals[parent[r]], point[var[r]], q, wide)


def eval_poly(coeffs, point, const long long[:] parent, const long long[:] var, q):
    cdef int wide = is_wide(q)
    cdef Py_ssize_t size = parent.shape[0], r
    cdef u128 qq = to_u128(q), acc = 0
    cdef u128* pt = to_array(point, len(point))
    cdef u128* cs = NULL
    cdef u128* vals = NULL
    try:
        cs = to_array(coeffs, size)
        vals = <u128*>malloc(size * sizeof(u128))
        if vals == NULL:
            raise MemoryError()
        with nogil:
            monomial_values(vals, parent, var, pt, qq, wide)
            for r in range(size):
                if cs[r]:
                    acc = pk_addmod(acc, pk_mulmod(cs[r], vals[r], qq, wide), qq)
        return from_u128(acc)
    finally:
        free(pt)
        free(cs)
        free(vals)


def mul_poly(a, b, const long long[:] table, Py_ssize_t out_len, q):
    cdef int wide = is_wide(q)
    cdef Py_ssize_t la = len(a), lb = len(b), i, j, base
    cdef u128 qq = to_u128(q)
    cdef u128* xa = to_array(a, la)
    cdef u128* xb = NULL
    cdef u128* out = NULL
    try:
        xb = to_array(b, lb)
        out = <u128*>malloc(max(out_len, 1) * sizeof(u128))
        if out == NULL:
            raise MemoryError()
        with nogil:
            for i in range(out_len):
                out[i] = 0
            for i in range(la):
                if not xa[i]:
                    continue
                base = i * lb
                for j in range(lb):
                    if xb[j]:
                        out[table[base + j]] = pk_addmod(
                            out[table[base + j]], pk_mulmod(xa[i], xb[j], qq, wide), qq)
        return [from_u128(out[i]) for i in range(out_len)]
    finally:
        free(xa)
        free(xb)
        free(out)


cdef Py_ssize_t roots_c(u128* uni, int deg, u128 p, u128 q, int wide, u128* roots) noexcept nogil:
    """Roots of uni in [0, p); returns count, or -1 when uni is identically zero."""
    cdef int top = deg
    cdef u128 x, acc, inv, disc, r, two_a
    cdef Py_ssize_t count = 0
    cdef int ok, i
    while top >= 0 and uni[top] == 0:
        top -= 1
    if top < 0:
        return -1
    if top == 0:
        return 0
    if top <= 2 and p > QUADRATIC_THRESHOLD:
        if top == 1:
            inv = pk_powmod(uni[1], q - 2, q, wide)
            x = pk_mulmod((q - uni[0]) % q, inv, q, wide)
            if x < p:
                roots[0] = x
                return 1
            return 0
        disc = (pk_mulmod(uni[1], uni[1], q, wide)
                + q - pk_mulmod(pk_mulmod(4 % q, uni[2], q, wide), uni[0], q, wide)) % q
        r = pk_sqrt(disc, q, wide, &ok)
        if not ok:
            return 0
        two_a = pk_mulmod(2 % q, uni[2], q, wide)
        inv = pk_powmod(two_a, q - 2, q, wide)
        x = pk_mulmod(((q - uni[1]) + r) % q, inv, q, wide)
        acc = pk_mulmod(((q - uni[1]) + (q - r) % q) % q, inv, q, wide)
        if x > acc:
            x, acc = acc, x
        if x < p:
            roots[count] = x
            count += 1
        if acc != x and acc < p:
            roots[count] = acc
            count += 1
        return count
    x = 0
    while x < p:
        acc = 0
        for i in range(top, -1, -1):
            acc = pk_addmod(pk_mulmod(acc, x, q, wide), uni[i], q)
        if acc == 0:
            roots[count] = x
            count += 1
        x += 1
    return count


def subrange_roots(coeffs, p, q):
    cdef int wide = is_wide(q)
    cdef Py_ssize_t deg = len(coeffs) - 1, count, i
    cdef u128* uni = to_array(coeffs, len(coeffs))
    cdef u128* roots = NULL
    try:
        roots = <u128*>malloc((deg + 2) * sizeof(u128))
        if roots == NULL:
            raise MemoryError()
        count = roots_c(uni, deg, to_u128(p), to_u128(q), wide, roots)
        if count < 0:
            return list(range(p))
        return [from_u128(roots[i]) for i in range(count)]
    finally:
        free(uni)
        free(roots)


cdef struct Level:
    Py_ssize_t nprefix
    Py_ssize_t nterms
    int deg
    const long long* parent
    const long long* var
    const long long* prefix_rank
    const long long* xexp
    u128* coeffs


def search(levels, u, Py_ssize_t n, p, q, long long limit):
    """Depth-first preimage search over Z_p^n with an explicit stack."""
    cdef int wide = is_wide(q)
    cdef u128 qq = to_u128(q), pp = to_u128(p)
    cdef Py_ssize_t k, t, i, maxpre = 1, stack_cap, top, depth, count
    cdef int maxdeg = 0
    cdef long long nodes = 0
    cdef Py_ssize_t max_frontier = 1
    cdef bint exceeded = False
    cdef const long long[:] mv
    cdef u128* us = NULL
    cdef u128* cur = NULL
    cdef u128* pv = NULL
    cdef u128* uni = NULL
    cdef u128* roots = NULL
    cdef Py_ssize_t* st_depth = NULL
    cdef u128* st_val = NULL
    cdef Level* lv = <Level*>malloc(max(n, 1) * sizeof(Level))
    if lv == NULL:
        raise MemoryError()
    for k in range(n):
        lv[k].coeffs = NULL
    keep = []  # owners of the buffers behind the raw pointers below
    solutions = []
    try:
        for k in range(n):
            parent, var, prefix_rank, xexp, coeffs = levels[k]
            keep.extend((parent, var, prefix_rank, xexp))
            mv = parent
            lv[k].parent = &mv[0]
            lv[k].nprefix = mv.shape[0]
            mv = var
            lv[k].var = &mv[0]
            lv[k].nterms = len(coeffs)
            lv[k].deg = 0
            if lv[k].nterms:
                mv = prefix_rank
                lv[k].prefix_rank = &mv[0]
                mv = xexp
                lv[k].xexp = &mv[0]
                lv[k].deg = max(xexp)
            lv[k].coeffs = to_array(coeffs, lv[k].nterms)
            maxpre = max(maxpre, lv[k].nprefix)
            maxdeg = max(maxdeg, lv[k].deg)
        us = to_array(u, n)
        cur = <u128*>malloc(max(n, 1) * sizeof(u128))
        pv = <u128*>malloc(maxpre * sizeof(u128))
        uni = <u128*>malloc((maxdeg + 1) * sizeof(u128))
        stack_cap = 1024
        st_depth = <Py_ssize_t*>malloc(stack_cap * sizeof(Py_ssize_t))
        st_val = <u128*>malloc(stack_cap * sizeof(u128))
        # a nonzero univariate of degree t has at most t roots
        roots = <u128*>malloc((maxdeg + 2) * sizeof(u128))
        if not (cur and pv and uni and st_depth and st_val and roots):
            raise MemoryError()
        st_depth[0] = 0
        st_val[0] = 0
        top = 1
        while top:
            top -= 1
            depth = st_depth[top]
            nodes += 1
            if nodes > limit:
                exceeded = True
                break
            if depth:
                cur[depth - 1] = st_val[top]
            if depth == n:
                solutions.append(tuple(from_u128(cur[i]) for i in range(n)))
                continue
            with nogil:
                vals_node(&lv[depth], cur, pv, uni, us[depth], qq, wide)
                count = roots_c(uni, lv[depth].deg, pp, qq, wide, roots)
            if count < 0:
                # identically zero: every element of Z_p is a child
                count = p
                if top + count > stack_cap:
                    stack_cap = 2 * (top + count)
                    st_depth = <Py_ssize_t*>grow(st_depth, stack_cap * sizeof(Py_ssize_t))
                    st_val = <u128*>grow(st_val, stack_cap * sizeof(u128))
                for i in range(count - 1, -1, -1):
                    st_depth[top] = depth + 1
                    st_val[top] = <u128>i
                    top += 1
            else:
                if top + count > stack_cap:
                    stack_cap = 2 * (top + count)
                    st_depth = <Py_ssize_t*>grow(st_depth, stack_cap * sizeof(Py_ssize_t))
                    st_val = <u128*>grow(st_val, stack_cap * sizeof(u128))
                for i in range(count - 1, -1, -1):
                    st_depth[top] = depth + 1
                    st_val[top] = roots[i]
                    top += 1
            if top > max_frontier:
                max_frontier = top
        return solutions, nodes, max_frontier, exceeded
    finally:
        for k in range(n):
            free(lv[k].coeffs)
        free(lv)
        free(us)
        free(cur)
        free(pv)
        free(uni)
        free(roots)
        free(st_depth)
        free(st_val)


cdef void* grow(void* ptr, size_t size) except NULL:
    cdef void* out = realloc(ptr, size)
    if out == NULL:
        raise MemoryError()
    return out


cdef void vals_node(Level* lv, u128* cur, u128* pv, u128* uni, u128 u_k,
                    u128 q, int wide) noexcept nogil:
    cdef Py_ssize_t r, t
    cdef int e
    pv[0] = 1 % q
    for r in range(1, lv.nprefix):
        pv[r] = pk_mulmod(pv[lv.parent[r]], cur[lv.var[r]], q, wide)
    for e in range(lv.deg + 1):
        uni[e] = 0
    for t in range(lv.nterms):
        e = <int>lv.xexp[t]
        uni[e] = pk_addmod(uni[e], pk_mulmod(lv.coeffs[t], pv[lv.prefix_rank[t]], q, wide), q)
    uni[0] = (uni[0] + q - u_k) % q
