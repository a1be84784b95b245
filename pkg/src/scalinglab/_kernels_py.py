"""Pure-Python permanent kernels (fallback for the compiled extension)."""
from __future__ import annotations

import numpy as np


def permanent(a) -> complex:
    """Permanent of a square complex matrix by Glynn's formula in Gray-code order."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("permanent needs a square matrix")
    if n == 0:
        return 1.0 + 0.0j
    if n == 1:
        return complex(a[0, 0])
    if n == 2:
        return complex(a[0, 0] * a[1, 1] + a[0, 1] * a[1, 0])
    # delta starts as all +1; row sums over i of delta_i a_ij
    sums = a.sum(axis=0)
    sign = 1.0
    delta = np.ones(n)
    total = np.prod(sums)
    for k in range(1, 2 ** (n - 1)):
        # Gray code: step k flips bit (index of lowest set bit of k); row 0 is never flipped
        bit = (k & -k).bit_length() - 1
        row = bit + 1
        delta[row] = -delta[row]
        sums += 2.0 * delta[row] * a[row]
        sign = -sign
        total += sign * np.prod(sums)
    return complex(total / 2 ** (n - 1))


def permanent_batch(stack) -> np.ndarray:
    """Permanents of a stack of square matrices with shape (k, n, n)."""
    stack = np.asarray(stack, dtype=complex)
    return np.array([permanent(m) for m in stack], dtype=complex)
