# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.  See :mod:`blab._fallback` for the reference versions."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, fabs, sqrt

cnp.import_array()

DEF LEAF = 64
DEF STACK = 64


cdef struct Reducer:
    double s
    double c
    int n
    int depth
    double vals[STACK]
    long long sizes[STACK]


cdef inline void red_init(Reducer* r) noexcept nogil:
    r.s = 0.0
    r.c = 0.0
    r.n = 0
    r.depth = 0


cdef inline void red_push_leaf(Reducer* r, double v) noexcept nogil:
    cdef long long size = 1
    while r.depth > 0 and r.sizes[r.depth - 1] == size:
        r.depth -= 1
        v = r.vals[r.depth] + v
        size *= 2
    r.vals[r.depth] = v
    r.sizes[r.depth] = size
    r.depth += 1


cdef inline void red_add(Reducer* r, double v) noexcept nogil:
    cdef double t = r.s + v
    if fabs(r.s) >= fabs(v):
        r.c += (r.s - t) + v
    else:
        r.c += (v - t) + r.s
    r.s = t
    r.n += 1
    if r.n == LEAF:
        red_push_leaf(r, r.s + r.c)
        r.s = 0.0
        r.c = 0.0
        r.n = 0


cdef inline double red_finish(Reducer* r) noexcept nogil:
    cdef double x
    if r.n > 0:
        # zero padding keeps the leaf identical to the numpy version
        while r.n != 0:
            red_add(r, 0.0)
    if r.depth == 0:
        return 0.0
    r.depth -= 1
    x = r.vals[r.depth]
    while r.depth > 0:
        r.depth -= 1
        x = r.vals[r.depth] + x
    return x


def pairwise_sum(x):
    cdef double[::1] a = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Reducer r
    cdef Py_ssize_t i
    red_init(&r)
    with nogil:
        for i in range(a.shape[0]):
            red_add(&r, a[i])
    return red_finish(&r)


cdef inline long long isqrt_ll(long long n) noexcept nogil:
    cdef long long k = <long long>sqrt(<double>n)
    while k * k > n:
        k -= 1
    while (k + 1) * (k + 1) <= n:
        k += 1
    return k


def shell_counts(long long max_norm2):
    cdef long long M = max_norm2
    counts_arr = np.zeros(M + 1, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    cdef long long a, b, c, rem, rem2, m, nz, w
    with nogil:
        a = 0
        while 3 * a * a <= M:
            rem = M - a * a
            b = a
            while 2 * b * b <= rem:
                rem2 = rem - b * b
                c = b
                while c * c <= rem2:
                    m = a * a + b * b + c * c
                    nz = (a > 0) + (b > 0) + (c > 0)
                    w = 1 << nz
                    if a == b and b == c:
                        pass
                    elif a == b or b == c:
                        w *= 3
                    else:
                        w *= 6
                    counts[m] += w
                    c += 1
                b += 1
            a += 1
    return counts_arr


def sine_moments(q, nodes, weights):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64).ravel()
    cdef double[::1] s = np.ascontiguousarray(nodes, dtype=np.float64).ravel()
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64).ravel()
    out_arr = np.zeros(qv.shape[0])
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double acc
    with nogil:
        for i in range(qv.shape[0]):
            acc = 0.0
            for j in range(s.shape[0]):
                acc = acc + w[j] * sin(qv[i] * s[j])
            out[i] = acc
    return out_arr


def shifted_table_sum(shift, long long m_lo, long long m_hi, ta, tb):
    cdef double[::1] A = np.ascontiguousarray(ta, dtype=np.float64)
    cdef double[::1] B = np.ascontiguousarray(tb, dtype=np.float64)
    cdef long long sx = int(shift[0]), sy = int(shift[1]), sz = int(shift[2])
    cdef long long K = isqrt_ll(m_hi)
    cdef long long x, y, z, ky, kz, rx, m, d
    cdef Reducer r
    red_init(&r)
    with nogil:
        for x in range(-K, K + 1):
            rx = m_hi - x * x
            ky = isqrt_ll(rx)
            for y in range(-ky, ky + 1):
                kz = isqrt_ll(rx - y * y)
                for z in range(-kz, kz + 1):
                    m = x * x + y * y + z * z
                    if m <= m_lo:
                        continue
                    d = (x - sx) * (x - sx) + (y - sy) * (y - sy) + (z - sz) * (z - sz)
                    red_add(&r, A[d] * B[m])
    return red_finish(&r)
