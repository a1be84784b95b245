"""Frozen mode-expansion convention for the free field at the time-zero plane.

With ``Phi(eta) = a(eta) + a*(eta)`` and ``[a(eta), a*(zeta)] = <eta, zeta>``:

* ``phi(h) = Phi(xi_h)`` and ``d0 phi(h) = Phi(xi_{i h})`` for real ``h``, so
  ``xi_{i h} = i (omega / 2)**0.5 h~`` and the time derivative is the physical
  Heisenberg derivative (``xi -> exp(i t omega) xi`` under time evolution);
* consequently ``W(f) = exp(i Phi(xi_f)) = exp i(phi(f_R) + d0 phi(f_I))``;
* the derivative ``d^nu phi(0)`` is ``Phi(kappa_nu)`` with
  ``kappa_nu(p) = (2 pi)**(-s/2) (2 omega)**(-1/2) (i omega)**nu_0 prod_k (-i p_k)**nu_k``.

These choices make the closed-form coefficient of ``phi_{n,nu}`` agree with
the Taylor expansion of ``:exp(i Phi(xi_f)):`` and with the nested-commutator
definition evaluated in Fock space (see ``tests/test_fock.py``).
"""
from __future__ import annotations

import numpy as np

from .testfn import dispersion

# overall constant of the point-field kernel, times (2 pi)**(-s/2)
FIELD_NORMALISATION = 2.0 ** -0.5
# factor multiplying omega for each time derivative
TIME_DERIVATIVE_FACTOR = 1j
# factor multiplying p_k for each spatial derivative
SPACE_DERIVATIVE_FACTOR = -1j


def field_kernel(leg, m: float, p: np.ndarray) -> np.ndarray:
    """kappa_nu(p) for one leg ``(nu_0, nu_1, ..., nu_s)``."""
    p = np.asarray(p, dtype=float)
    s = p.shape[-1]
    nu0, alpha = int(leg[0]), np.asarray(leg[1:], dtype=int)
    if len(alpha) != s:
        raise ValueError("leg has the wrong number of spatial entries")
    w = dispersion(m, p)
    out = (2 * np.pi) ** (-s / 2) * FIELD_NORMALISATION / np.sqrt(w) + 0j
    if nu0:
        out = out * TIME_DERIVATIVE_FACTOR * w
    if alpha.any():
        out = out * np.prod((SPACE_DERIVATIVE_FACTOR * p) ** alpha, axis=-1)
    return out


def smeared_field_vector(h_tilde: np.ndarray, m: float, p: np.ndarray, time_derivative: bool) -> np.ndarray:
    """One-particle vector of phi(h) (or d0 phi(h)) for real ``h`` with transform ``h_tilde``."""
    w = dispersion(m, p)
    if time_derivative:
        return 1j * np.sqrt(w / 2.0) * h_tilde
    return h_tilde / np.sqrt(2.0 * w)
