# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled inner loop of the truncated Cauchy product."""


def mul_into(const double[::1] a, const double[::1] b,
             const int[::1] ia, const int[::1] ib, const int[::1] ic,
             double[::1] out):
    """out[ic[t]] += a[ia[t]] * b[ib[t]] for every triple t, in order."""
    cdef Py_ssize_t t, m = ia.shape[0]
    cdef double prod
    with nogil:
        for t in range(m):
            prod = a[ia[t]] * b[ib[t]]
            out[ic[t]] += prod
