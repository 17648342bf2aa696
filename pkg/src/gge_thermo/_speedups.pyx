# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the sequential loops in ``_kernels_py``.

Semantics must match the pure-Python module exactly; the test suite runs
both and compares.
"""
from libc.math cimport exp, expm1


cdef inline double _excited(double x) nogil:
    cdef double e
    if x >= 0.0:
        e = exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + exp(x))


def excited_population(double x):
    return _excited(x)


def raise_level(double x_start, double dx, long n_steps, double tail_tol,
                long max_steps=100000000):
    if dx <= 0.0:
        raise ValueError("dx must be positive")
    cdef double x = x_start
    cdef double p = _excited(x)
    cdef double work = 0.0
    cdef long k = 0
    with nogil:
        if n_steps >= 0:
            while k < n_steps:
                work += p * dx
                k += 1
                x = x_start + k * dx
                p = _excited(x)
        else:
            while p >= tail_tol and k < max_steps:
                work += p * dx
                k += 1
                x = x_start + k * dx
                p = _excited(x)
    if n_steps < 0 and p >= tail_tol:
        raise RuntimeError("raise_level hit max_steps before reaching tail_tol")
    return work, k, x, p


def spin_bath_series(double alpha, double hbar, double tail_tol,
                     long max_terms=100000000):
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    cdef double one_minus_r = -expm1(-alpha)
    cdef double total = 0.0
    cdef double e
    cdef long n = 0
    with nogil:
        while n < max_terms:
            e = exp(-alpha * n)
            total += hbar * e / (1.0 + e)
            n += 1
            if hbar * exp(-alpha * n) / one_minus_r < tail_tol:
                break
    return total, n
