# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: keyed streams and the counterexample recursion.

Mirrors ``index_rng`` and ``engine._recurse`` operation for operation; the
whole recursion runs without the GIL.
"""

import numpy as np

from libc.math cimport sqrt, log, cos, sin, fabs, isfinite
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free
from libc.string cimport memset, memcpy

cdef enum:
    MAX_PATH = 64

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MUL1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MUL2 = 0x94D049BB133111EBULL
cdef uint64_t LANE0 = 0x243F6A8885A308D3ULL
cdef uint64_t LANE1 = 0x13198A2E03707344ULL
cdef uint64_t LANE1_XOR = 0xA4093822299F31D0ULL
cdef double INV_2_53 = 1.1102230246251565e-16
cdef double TWO_PI = 6.283185307179586


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * MUL1
    z = (z ^ (z >> 27)) * MUL2
    return z ^ (z >> 31)


cdef inline void key_of(uint64_t seed, uint64_t rep, const int64_t* path, int plen,
                        uint64_t* k0, uint64_t* k1) noexcept nogil:
    cdef uint64_t h0 = mix64(seed ^ LANE0)
    cdef uint64_t h1 = mix64(seed + LANE1)
    cdef uint64_t w
    cdef int j
    h0 = mix64(h0 ^ rep)
    h1 = mix64(h1 + (rep ^ LANE1_XOR))
    w = <uint64_t>plen
    h0 = mix64(h0 ^ w)
    h1 = mix64(h1 + (w ^ LANE1_XOR))
    for j in range(plen):
        w = <uint64_t>path[j]
        h0 = mix64(h0 ^ w)
        h1 = mix64(h1 + (w ^ LANE1_XOR))
    k0[0] = h0
    k1[0] = h1


cdef inline double unit(uint64_t k0, uint64_t k1, uint64_t i) noexcept nogil:
    cdef uint64_t z = mix64(mix64(k0 + i * GOLDEN) ^ k1)
    return <double>((z >> 11) + 1) * INV_2_53


cdef inline void normals(uint64_t k0, uint64_t k1, uint64_t start, int d,
                         double* out) noexcept nogil:
    cdef int p
    cdef int pairs = (d + 1) // 2
    cdef double rad, ang
    for p in range(pairs):
        rad = sqrt(-2.0 * log(unit(k0, k1, start + 2 * p)))
        ang = TWO_PI * unit(k0, k1, start + 2 * p + 1)
        out[2 * p] = rad * cos(ang)
        if 2 * p + 1 < d:
            out[2 * p + 1] = rad * sin(ang)


cdef struct Ctx:
    int d
    int64_t m
    uint64_t seed
    uint64_t rep
    bint mirror
    int64_t path[MAX_PATH]
    long long nodes
    long long f_evals
    long long gaussians
    int fail_len
    int64_t fail_path[MAX_PATH]


cdef inline double tail_norm(const double* v, int d) noexcept nogil:
    cdef double acc = 0.0
    cdef int k
    for k in range(1, d):
        acc += v[k] * v[k]
    return sqrt(acc)


cdef int recurse(Ctx* c, int n, int plen, double t, const double* x,
                 double* u_out, double* v_out) noexcept nogil:
    """Returns 0 on success, -1 on a non-finite result, -2 on allocation failure."""
    cdef int d = c.d
    cdef int k, level, status
    cdef int64_t i, count
    cdef uint64_t k0, k1
    cdef double one_minus_t = 1.0 - t
    cdef double sqrt_one_minus_t = sqrt(one_minus_t)
    cdef double gx, u, coef, scale, r, r_time, dur, sd, val, w, u_child
    cdef double* buf

    if plen + 2 > MAX_PATH:
        return -2
    buf = <double*>malloc((3 * d + 1) * sizeof(double))
    if buf == NULL:
        return -2
    cdef double* dw = buf
    cdef double* y = buf + d + 1
    cdef double* v_child = buf + 2 * d + 1

    c.nodes += 1
    gx = fabs(x[0])
    u = gx
    memset(v_out, 0, d * sizeof(double))

    count = 1
    for k in range(n):
        count *= c.m
    for i in range(1, count + 1):
        c.path[plen] = 0
        c.path[plen + 1] = -i
        key_of(c.seed, c.rep, c.path, plen + 2, &k0, &k1)
        normals(k0, k1, 0, d, dw)
        c.gaussians += 1
        sd = sqrt(one_minus_t)
        for k in range(d):
            dw[k] = sd * dw[k]
            if c.mirror:
                dw[k] = -dw[k]
        coef = (fabs(x[0] + dw[0]) - gx) / count
        u += coef
        scale = coef / one_minus_t
        for k in range(d):
            v_out[k] += scale * dw[k]

    for level in range(n):
        count = 1
        for k in range(n - level):
            count *= c.m
        for i in range(1, count + 1):
            c.path[plen] = level
            c.path[plen + 1] = i
            key_of(c.seed, c.rep, c.path, plen + 2, &k0, &k1)
            r = unit(k0, k1, 0)
            r_time = t + one_minus_t * (r * r)
            dur = r_time - t
            normals(k0, k1, 1, d, dw)
            c.gaussians += 1
            sd = sqrt(dur)
            for k in range(d):
                dw[k] = sd * dw[k]
                if c.mirror:
                    dw[k] = -dw[k]
            if level == 0:
                # f(0) = 0 for the counterexample
                val = 0.0
                c.f_evals += 1
            else:
                for k in range(d):
                    y[k] = x[k] + dw[k]
                status = recurse(c, level, plen + 2, r_time, y, &u_child, v_child)
                if status != 0:
                    free(buf)
                    return status
                val = tail_norm(v_child, d)
                if level >= 2:
                    c.path[plen] = -level
                    c.path[plen + 1] = i
                    status = recurse(c, level - 1, plen + 2, r_time, y, &u_child, v_child)
                    if status != 0:
                        free(buf)
                        return status
                    val -= tail_norm(v_child, d)
                c.f_evals += 2
            w = val * (2.0 * sqrt_one_minus_t * sqrt(dur)) / count
            u += w
            scale = w / dur
            for k in range(d):
                v_out[k] += scale * dw[k]

    free(buf)
    u_out[0] = u
    status = isfinite(u)
    for k in range(d):
        if not isfinite(v_out[k]):
            status = 0
    if not status:
        c.fail_len = plen
        memcpy(c.fail_path, c.path, plen * sizeof(int64_t))
        return -1
    return 0


def evaluate_counterexample(int d, int n, int64_t m, uint64_t seed, uint64_t rep,
                            const int64_t[::1] theta, double t, const double[::1] x,
                            bint mirror):
    """One (U, V) draw for ``g = |x_1|``, ``f = ||(v_2..v_d)||``.

    Returns ``(u, v, nodes, f_evals, gaussians)``.
    """
    cdef Ctx c
    cdef int plen = theta.shape[0]
    cdef int status, k
    cdef double u = 0.0
    if x.shape[0] != d:
        raise ValueError("point dimension mismatch")
    if plen < 1 or plen + 2 * n > MAX_PATH:
        raise ValueError("index path length out of range")
    v = np.zeros(d)
    cdef double[::1] vv = v
    if n <= 0:
        return 0.0, v, 0, 0, 0
    c.d = d
    c.m = m
    c.seed = seed
    c.rep = rep
    c.mirror = mirror
    c.nodes = 0
    c.f_evals = 0
    c.gaussians = 0
    c.fail_len = 0
    for k in range(plen):
        c.path[k] = theta[k]
    with nogil:
        status = recurse(&c, n, plen, t, &x[0], &u, &vv[0])
    if status == -2:
        raise MemoryError("recursion buffer allocation failed")
    if status == -1:
        from .engine import NonFiniteError
        raise NonFiniteError([c.fail_path[k] for k in range(c.fail_len)])
    return u, v, c.nodes, c.f_evals, c.gaussians


def stream_key(uint64_t seed, uint64_t rep, const int64_t[::1] path):
    cdef uint64_t k0, k1
    key_of(seed, rep, &path[0], path.shape[0], &k0, &k1)
    return int(k0), int(k1)


def stream_uniforms(uint64_t k0, uint64_t k1, uint64_t start, int count):
    out = np.empty(count)
    cdef double[::1] o = out
    cdef int j
    for j in range(count):
        o[j] = unit(k0, k1, start + j)
    return out


def stream_normals(uint64_t k0, uint64_t k1, uint64_t start, int d):
    out = np.empty(d)
    cdef double[::1] o = out
    normals(k0, k1, start, d, &o[0])
    return out
