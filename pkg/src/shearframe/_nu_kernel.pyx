# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation of the tabulated transition function."""

from libc.math cimport sqrt, floor


cdef inline double _cubic(double x, const double[::1] nodes, const double[:, ::1] coef,
                          double inv_h, Py_ssize_t m) noexcept nogil:
    cdef double u = (x - nodes[0]) * inv_h
    cdef Py_ssize_t i
    cdef double d
    if u < 0.0:
        i = 0
    else:
        i = <Py_ssize_t>floor(u)
        if i > m - 1:
            i = m - 1
    d = x - nodes[i]
    return ((coef[i, 0] * d + coef[i, 1]) * d + coef[i, 2]) * d + coef[i, 3]


def nu_fill(const double[::1] x, double[::1] out, const double[::1] nodes,
            const double[:, ::1] coef):
    """Write the transition value of every entry of ``x`` into ``out``."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = coef.shape[0]
    cdef double inv_h = m / (nodes[m] - nodes[0])
    cdef Py_ssize_t k
    cdef double v, gp, gm
    with nogil:
        for k in range(n):
            v = x[k]
            if v <= -1.0:
                out[k] = 0.0
            elif v >= 1.0:
                out[k] = 1.0
            elif v != v:
                out[k] = v
            else:
                gp = _cubic(v, nodes, coef, inv_h, m)
                gm = _cubic(-v, nodes, coef, inv_h, m)
                out[k] = gp / sqrt(gp * gp + gm * gm)
