"""Radial cutoff profiles and the Fourier transforms of ``x^alpha h(|x| / r)``.

For a radial ``h`` the transform ``h~(p) = G(|p|^2 / 2)`` and the q-derivatives
of ``G`` are Hankel-type integrals

    G^(j)(q) = (-1)^j rho^-(s/2-1+j) int_0^2r h(u) J_{s/2-1+j}(rho u) u^(s/2+j) du,

with ``rho = |p|``.  Derivatives in ``p`` are expanded symbolically into
terms ``c * G^(j)(q) * p^beta`` and ``(x^alpha h)~ = i^|alpha| d^alpha h~``.
"""
from __future__ import annotations

import hashlib
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from math import gamma
from typing import Callable

import numpy as np
from scipy.special import jv, spherical_jn

from .quadrature import gauss_legendre


@dataclass(frozen=True, eq=False)
class CutoffFunction:
    """Radial profile equal to 1 on [0, 1] and 0 on [2, inf)."""

    profile: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    smoothness: str = ""

    def __post_init__(self):
        x = np.linspace(0.0, 3.0, 601)
        v = self.profile(x)
        if np.any(v < -1e-15) or np.any(v > 1 + 1e-15):
            raise ValueError("cutoff profile must take values in [0, 1]")
        if abs(self.profile(np.array([0.5]))[0] - 1) > 0 or self.profile(np.array([3.0]))[0] != 0:
            raise ValueError("cutoff profile must be 1 at 0.5 and 0 at 3")

    def __call__(self, x) -> np.ndarray:
        return self.profile(np.asarray(x, dtype=float))


def _smoothstep5(x):
    x = np.asarray(x, dtype=float)
    t = np.clip(x - 1.0, 0.0, 1.0)
    return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def _smooth_transition(x):
    x = np.asarray(x, dtype=float)
    t = np.clip(x - 1.0, 0.0, 1.0)
    out = np.ones_like(t)
    mid = (t > 0) & (t < 1)
    a = np.exp(-1.0 / t[mid])
    b = np.exp(-1.0 / (1.0 - t[mid]))
    out[mid] = b / (a + b)
    out[t >= 1] = 0.0
    return out


def smoothstep5() -> CutoffFunction:
    """Quintic smoothstep transition on [1, 2] (C^2 at both ends)."""
    return CutoffFunction(_smoothstep5, "smoothstep5", "C2")


def smooth_bump() -> CutoffFunction:
    """exp(-1/t) based transition on [1, 2] (C-infinity)."""
    return CutoffFunction(_smooth_transition, "bump", "Cinf")


def _bessel_kernel(mu: float, rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    """rho^-mu J_mu(rho u) on the outer grid, with its rho -> 0 limit."""
    rho = np.asarray(rho, dtype=float)[:, None]
    u = np.asarray(u, dtype=float)[None, :]
    z = rho * u
    small = z < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        if float(mu - 0.5).is_integer() and mu > 0:
            # half-integer order: J_{n+1/2}(z) = sqrt(2z/pi) j_n(z) is several times faster
            out = np.sqrt(2.0 * z / np.pi) * spherical_jn(int(mu - 0.5), z) / rho ** mu
        else:
            out = jv(mu, z) / rho ** mu
    # leading two terms of the power series of (z/2)^mu / Gamma(mu+1) (1 - z^2 / (4(mu+1)))
    series = (u / 2.0) ** mu / gamma(mu + 1.0) * (1.0 - z * z / (4.0 * (mu + 1.0)))
    return np.where(small, series, out)


_RADIAL_CACHE: dict = {}
_RADIAL_CACHE_SIZE = 64


def radial_transform_derivatives(h: CutoffFunction, r: float, s: int, j_max: int,
                                 rho: np.ndarray, n_u: int = 160) -> np.ndarray:
    """Array ``G[j, i] = G^(j)(rho_i^2 / 2)`` for the profile ``h(u / r)``, j = 0..j_max.

    Rows are cached per (profile, radius, rho grid) since every leg of a
    multi-index reuses them.
    """
    rho = np.ascontiguousarray(rho, dtype=float)
    key = (h.profile, float(r), s, n_u, rho.shape, hashlib.sha1(rho.tobytes()).hexdigest())
    rows = _RADIAL_CACHE.get(key, [])
    if len(rows) <= j_max:
        us, ws = [], []
        for a, b in ((0.0, r), (r, 2.0 * r)):
            u, w = gauss_legendre(a, b, n_u)
            us.append(u)
            ws.append(w)
        u = np.concatenate(us)
        w = np.concatenate(ws) * h(u / r)
        rows = list(rows)
        for j in range(len(rows), j_max + 1):
            mu = s / 2.0 - 1.0 + j
            rows.append((-1) ** j * (_bessel_kernel(mu, rho, u) @ (w * u ** (s / 2.0 + j))))
        if len(_RADIAL_CACHE) >= _RADIAL_CACHE_SIZE:
            _RADIAL_CACHE.pop(next(iter(_RADIAL_CACHE)))
        _RADIAL_CACHE[key] = rows
    return np.array(rows[: j_max + 1])


@lru_cache(maxsize=None)
def derivative_terms(alpha: tuple[int, ...]) -> tuple[tuple[float, int, tuple[int, ...]], ...]:
    """Expansion of d^alpha G(|p|^2/2) as terms (coef, j, beta) meaning coef G^(j) p^beta."""
    s = len(alpha)
    terms = {(0, (0,) * s): 1.0}
    for k, count in enumerate(alpha):
        for _ in range(count):
            new = defaultdict(float)
            for (j, beta), c in terms.items():
                # d_k [G^(j)(q) p^beta] = G^(j+1) p_k p^beta + beta_k G^(j) p^(beta - e_k)
                up = list(beta)
                up[k] += 1
                new[(j + 1, tuple(up))] += c
                if beta[k]:
                    down = list(beta)
                    down[k] -= 1
                    new[(j, tuple(down))] += c * beta[k]
            terms = dict(new)
    return tuple((c, j, beta) for (j, beta), c in sorted(terms.items()) if c != 0)


def moment_transform(h: CutoffFunction, r: float, alpha, p: np.ndarray, n_u: int = 160) -> np.ndarray:
    """Fourier transform of ``x^alpha h(|x|/r)`` (with the (2 pi)^(-s/2) convention) at ``p``."""
    p = np.asarray(p, dtype=float)
    alpha = tuple(int(a) for a in alpha)
    s = p.shape[-1]
    if len(alpha) != s:
        raise ValueError("alpha must have s entries")
    flat = p.reshape(-1, s)
    rho = np.linalg.norm(flat, axis=1)
    uniq, inv = np.unique(rho, return_inverse=True)
    terms = derivative_terms(alpha)
    j_max = max(j for _, j, _ in terms)
    G = radial_transform_derivatives(h, r, s, j_max, uniq, n_u)[:, inv]
    out = np.zeros(len(flat))
    for c, j, beta in terms:
        out += c * G[j] * np.prod(flat ** np.asarray(beta), axis=1)
    return ((1j) ** sum(alpha) * out).reshape(p.shape[:-1])
