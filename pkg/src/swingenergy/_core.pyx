# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels.

Cython twin of swingenergy._fallback with identical contracts. Kept to plain
C loops so the semantics stay auditable against the numpy reference.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, isfinite, sin

BACKEND = "compiled"


cdef void _pe(const double* d, const double* e, const double* g,
              const double* b, double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc, dij
    for i in range(n):
        acc = 0.0
        for j in range(n):
            dij = d[i] - d[j]
            acc += e[i] * e[j] * (g[i * n + j] * cos(dij) + b[i * n + j] * sin(dij))
        out[i] = acc


def electrical_power(const double[::1] delta, const double[::1] emf,
                     const double[:, ::1] g, const double[:, ::1] b):
    cdef Py_ssize_t n = delta.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    _pe(&delta[0], &emf[0], &g[0, 0], &b[0, 0], &o[0], n)
    return out


def electrical_power_many(const double[:, ::1] delta, const double[::1] emf,
                          const double[:, ::1] g, const double[:, ::1] b):
    cdef Py_ssize_t m = delta.shape[0]
    cdef Py_ssize_t n = delta.shape[1]
    out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t k
    with nogil:
        for k in range(m):
            _pe(&delta[k, 0], &emf[0], &g[0, 0], &b[0, 0], &o[k, 0], n)
    return out


def coi_accel_many(const double[:, ::1] delta, const double[::1] m_inertia,
                   const double[::1] p_mech, const double[::1] emf,
                   const double[:, ::1] g, const double[:, ::1] b):
    cdef Py_ssize_t m = delta.shape[0]
    cdef Py_ssize_t n = delta.shape[1]
    out = np.empty((m, n))
    cdef double[:, ::1] f = out
    cdef Py_ssize_t k, i
    cdef double mt = 0.0, pcoi
    for i in range(n):
        mt += m_inertia[i]
    with nogil:
        for k in range(m):
            _pe(&delta[k, 0], &emf[0], &g[0, 0], &b[0, 0], &f[k, 0], n)
            pcoi = 0.0
            for i in range(n):
                f[k, i] = p_mech[i] - f[k, i]
                pcoi += f[k, i]
            for i in range(n):
                f[k, i] -= m_inertia[i] / mt * pcoi
    return out


def rk4_swing(const double[::1] delta0, const double[::1] omega0, const double[::1] m_inertia,
              const double[::1] p_mech, const double[::1] damping, const double[::1] emf,
              const double[:, ::1] g, const double[:, ::1] b, double dt, Py_ssize_t nsteps):
    cdef Py_ssize_t n = delta0.shape[0]
    delta = np.empty((nsteps + 1, n))
    omega = np.empty((nsteps + 1, n))
    cdef double[:, ::1] dd = delta
    cdef double[:, ::1] ww = omega
    scratch = np.empty((10, n))
    cdef double[:, ::1] s = scratch
    cdef Py_ssize_t k, i, steps_done = 0
    cdef double h = dt, dn, wn
    cdef int bad
    # scratch rows: 0 pe, 1 k1w, 2 k2d, 3 k2w, 4 k3d, 5 k3w, 6 k4d, 7 k4w, 8 dtmp, 9 wtmp
    for i in range(n):
        dd[0, i] = delta0[i]
        ww[0, i] = omega0[i]
    with nogil:
        for k in range(nsteps):
            # k1 (k1d is omega itself)
            _pe(&dd[k, 0], &emf[0], &g[0, 0], &b[0, 0], &s[0, 0], n)
            for i in range(n):
                s[1, i] = (p_mech[i] - s[0, i] - damping[i] * ww[k, i]) / m_inertia[i]
            # k2
            for i in range(n):
                s[8, i] = dd[k, i] + 0.5 * h * ww[k, i]
                s[2, i] = ww[k, i] + 0.5 * h * s[1, i]
            _pe(&s[8, 0], &emf[0], &g[0, 0], &b[0, 0], &s[0, 0], n)
            for i in range(n):
                s[3, i] = (p_mech[i] - s[0, i] - damping[i] * s[2, i]) / m_inertia[i]
            # k3
            for i in range(n):
                s[8, i] = dd[k, i] + 0.5 * h * s[2, i]
                s[4, i] = ww[k, i] + 0.5 * h * s[3, i]
            _pe(&s[8, 0], &emf[0], &g[0, 0], &b[0, 0], &s[0, 0], n)
            for i in range(n):
                s[5, i] = (p_mech[i] - s[0, i] - damping[i] * s[4, i]) / m_inertia[i]
            # k4
            for i in range(n):
                s[8, i] = dd[k, i] + h * s[4, i]
                s[6, i] = ww[k, i] + h * s[5, i]
            _pe(&s[8, 0], &emf[0], &g[0, 0], &b[0, 0], &s[0, 0], n)
            for i in range(n):
                s[7, i] = (p_mech[i] - s[0, i] - damping[i] * s[6, i]) / m_inertia[i]
            bad = 0
            for i in range(n):
                dn = dd[k, i] + (h / 6.0) * (ww[k, i] + 2.0 * s[2, i] + 2.0 * s[4, i] + s[6, i])
                wn = ww[k, i] + (h / 6.0) * (s[1, i] + 2.0 * s[3, i] + 2.0 * s[5, i] + s[7, i])
                if not (isfinite(dn) and isfinite(wn)):
                    bad = 1
                    break
                dd[k + 1, i] = dn
                ww[k + 1, i] = wn
            if bad:
                break
            steps_done = k + 1
    return delta, omega, steps_done


def ray_smpe(const double[::1] start, const double[::1] end, Py_ssize_t substeps,
             const double[::1] m_inertia, const double[::1] p_mech, const double[::1] emf,
             const double[:, ::1] g, const double[:, ::1] b):
    cdef Py_ssize_t n = start.shape[0]
    cdef Py_ssize_t m = substeps + 1
    cdef Py_ssize_t k, i
    cdef double seglen = 0.0
    seg = np.empty(n)
    cdef double[::1] sg = seg
    for i in range(n):
        sg[i] = end[i] - start[i]
        seglen += sg[i] * sg[i]
    if seglen == 0.0:
        return 0.0
    pts = np.empty(n)
    pe = np.empty(n)
    cdef double[::1] p = pts
    cdef double[::1] w = pe
    cdef double mt = 0.0, pcoi, val, acc = 0.0, h = 1.0 / substeps, alpha
    for i in range(n):
        mt += m_inertia[i]
    with nogil:
        for k in range(m):
            alpha = k * h
            for i in range(n):
                p[i] = start[i] + alpha * sg[i]
            _pe(&p[0], &emf[0], &g[0, 0], &b[0, 0], &w[0], n)
            pcoi = 0.0
            for i in range(n):
                w[i] = p_mech[i] - w[i]
                pcoi += w[i]
            val = 0.0
            for i in range(n):
                val -= (w[i] - m_inertia[i] / mt * pcoi) * sg[i]
            if k == 0 or k == m - 1:
                acc += 0.5 * val
            else:
                acc += val
    return acc * h
