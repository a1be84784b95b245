"""Weyl-operator expectations in the mass-m vacuum and the scaling-limit experiments.

Everything here reduces to Gaussians in ``||f||_m`` and phases built from
``sigma(f, g)``; no operator matrices are formed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import RouteMismatch
from .quadrature import QuadratureScheme, gauss_legendre
from .symm import dilate, poincare
from .testfn import MomentumFunction, mass_norm_sq, symplectic_form


@dataclass(frozen=True, eq=False)
class WeylLabel:
    """W(f) in the representation of the vacuum with mass ``m``."""

    f: MomentumFunction
    m: float = 0.0


def weyl_expectation(w: WeylLabel, q: QuadratureScheme) -> complex:
    """omega^(m)(W(f)) = exp(-||f||_m^2 / 2)."""
    return complex(np.exp(-0.5 * mass_norm_sq(w.f, w.m, q)))


def weyl_product_expectation(ws: Sequence[WeylLabel], q: QuadratureScheme) -> complex:
    """Vacuum expectation of W(f_1)...W(f_k), folding the Weyl relation left to right."""
    if not ws:
        raise ValueError("need at least one Weyl operator")
    m = ws[0].m
    if any(w.m != m for w in ws):
        raise ValueError("all Weyl labels must share the representation mass")
    acc = ws[0].f
    phase = 0.0
    for w in ws[1:]:
        phase += symplectic_form(acc, w.f, q)
        acc = acc + w.f
    return complex(np.exp(-0.5j * phase) * weyl_expectation(WeylLabel(acc, m), q))


def coherent_overlap(g: WeylLabel, h: WeylLabel, q: QuadratureScheme) -> complex:
    """<W(g) Omega, W(h) Omega> = omega(W(-g) W(h))."""
    return weyl_product_expectation([WeylLabel(-g.f, g.m), h], q)


def scaling_limit_gap(f: MomentumFunction, m: float, lam: float, q: QuadratureScheme,
                      *, return_routes: bool = False):
    """|omega^(m)(W(delta_lam f)) - omega^(0)(W(f))|, checked by two routes.

    Route (i) integrates the dilated function on a scheme stretched by
    ``1/lam``; route (ii) uses ``||f||_{lam m}`` on the original scheme.
    """
    if m <= 0:
        raise ValueError("scaling_limit_gap needs m > 0")
    direct = np.exp(-0.5 * mass_norm_sq(dilate(f, lam), m, q.scaled(1.0 / lam)))
    intertwined = np.exp(-0.5 * mass_norm_sq(f, lam * m, q))
    if abs(direct - intertwined) > 10 * q.rel_tol * max(abs(intertwined), 1e-300):
        raise RouteMismatch(f"dilation routes differ: {direct!r} vs {intertwined!r}")
    gap = float(abs(direct - np.exp(-0.5 * mass_norm_sq(f, 0.0, q))))
    if return_routes:
        return gap, float(direct), float(intertwined)
    return gap


@dataclass(frozen=True, eq=False)
class AveragingKernel:
    """Dilation x space-time translation averaging kernel with its quadrature.

    ``mu_nodes/mu_weights`` integrate against ``d mu / mu``; ``x_nodes`` are
    space-time points ``(t, x)`` with weights for ``dx``.
    """

    hD: Callable[[np.ndarray], np.ndarray]
    hT: Callable[[np.ndarray], np.ndarray]
    mu_nodes: np.ndarray
    mu_weights: np.ndarray
    x_nodes: np.ndarray
    x_weights: np.ndarray

    def weights(self) -> np.ndarray:
        """Combined weights hD(mu) hT(x) dmu/mu dx, shape (n_mu, n_x)."""
        wd = self.mu_weights * self.hD(self.mu_nodes)
        wt = self.x_weights * self.hT(self.x_nodes)
        return np.outer(wd, wt)


def _bump(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def bump_kernel(s: int, a: float = 1.5, t_width: float = 0.3, x_width: float = 0.0,
                n_mu: int = 8, n_t: int = 8, n_x: int = 4) -> AveragingKernel:
    """Smooth bumps normalised to unit mass: in log(mu) on (1/a, a) and in each space-time coordinate.

    A zero width collapses that coordinate to a point mass at 0.
    """
    if a <= 1:
        raise ValueError("need a > 1")
    la = np.log(a)
    u, wu = gauss_legendre(-1.0, 1.0, n_mu)
    norm_d = np.dot(wu, _bump(u)) * la
    mu_nodes = np.exp(la * u)

    def hD(mu):
        return _bump(np.log(mu) / la) / norm_d

    mu_weights = wu * la  # d mu / mu = d log mu

    axes, axw, widths = [], [], []
    for width, n in [(t_width, n_t)] + [(x_width, n_x)] * s:
        if width == 0:
            axes.append(np.zeros(1))
            axw.append(np.ones(1))
        else:
            v, wv = gauss_legendre(-width, width, n)
            axes.append(v)
            axw.append(wv)
        widths.append(width)
    norm_t = 1.0
    for v, wv, width in zip(axes, axw, widths):
        if width > 0:
            norm_t *= np.dot(wv, _bump(v / width))
    grids = np.meshgrid(*axes, indexing="ij")
    x_nodes = np.stack([g.ravel() for g in grids], axis=1)
    x_weights = np.ones(len(x_nodes))
    for w in np.meshgrid(*axw, indexing="ij"):
        x_weights = x_weights * w.ravel()

    def hT(x):
        x = np.atleast_2d(x)
        out = np.ones(len(x))
        for k, width in enumerate(widths):
            if width > 0:
                out = out * _bump(x[:, k] / width)
        return out / norm_t

    return AveragingKernel(hD, hT, mu_nodes, mu_weights, x_nodes, x_weights)


def averaged_matrix_element(g: WeylLabel, f: MomentumFunction, k: AveragingKernel, lam: float,
                            m: float, q: QuadratureScheme) -> complex:
    """<W(g) Omega, sigma_lam^-1(W_lam) Omega> in the massless vacuum representation.

    The integrand at (mu, x) is the overlap with W(delta_mu tau^(mu lam m)_x f).
    """
    if g.m != 0:
        raise ValueError("the averaged element is evaluated in the massless representation")
    W = k.weights()
    total = 0.0 + 0.0j
    for i, mu in enumerate(k.mu_nodes):
        for j, x in enumerate(k.x_nodes):
            if W[i, j] == 0:
                continue
            h = dilate(poincare(f, x, None, mu * lam * m), mu)
            total += W[i, j] * coherent_overlap(g, WeylLabel(h, 0.0), q)
    return complex(total)
