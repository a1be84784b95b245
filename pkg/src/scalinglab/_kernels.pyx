# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled permanent kernels (Glynn's formula in Gray-code order)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef double complex _glynn(double complex[:, :] a) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k, row, bit
    cdef double complex total, prod
    cdef double sign = 1.0
    cdef double complex sums[64]
    cdef double delta[64]
    if n == 0:
        return 1.0
    if n == 1:
        return a[0, 0]
    for j in range(n):
        sums[j] = 0
        for i in range(n):
            sums[j] = sums[j] + a[i, j]
    for i in range(n):
        delta[i] = 1.0
    prod = 1.0
    for j in range(n):
        prod = prod * sums[j]
    total = prod
    for k in range(1, 1 << (n - 1)):
        bit = 0
        while not ((k >> bit) & 1):
            bit += 1
        row = bit + 1
        delta[row] = -delta[row]
        for j in range(n):
            sums[j] = sums[j] + 2.0 * delta[row] * a[row, j]
        sign = -sign
        prod = 1.0
        for j in range(n):
            prod = prod * sums[j]
        total = total + sign * prod
    return total / (1 << (n - 1))


def permanent(a):
    """Permanent of a square complex matrix (at most 63 x 63)."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] arr = np.ascontiguousarray(a, dtype=np.complex128)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError("permanent needs a square matrix")
    if arr.shape[0] > 63:
        raise ValueError("matrix too large for the compiled kernel")
    return complex(_glynn(arr))


def permanent_batch(stack):
    """Permanents of a stack of square matrices with shape (k, n, n)."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] arr = np.ascontiguousarray(stack, dtype=np.complex128)
    cdef Py_ssize_t k, m = arr.shape[0]
    if arr.shape[1] != arr.shape[2]:
        raise ValueError("permanent needs square matrices")
    if arr.shape[1] > 63:
        raise ValueError("matrix too large for the compiled kernel")
    out = np.empty(m, dtype=np.complex128)
    cdef double complex[:] view = out
    cdef double complex[:, :, :] src = arr
    with nogil:
        for k in range(m):
            view[k] = _glynn(src[k])
    return out
