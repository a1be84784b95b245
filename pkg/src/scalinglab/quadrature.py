"""Radial x angular product quadrature on R^s.

All momentum-space integrals in the package go through a
:class:`QuadratureScheme`.  The radial part is a composite Gauss-Legendre rule
in the variable ``u = sqrt(r)`` on geometrically growing panels, which
resolves the ``r**(+-1/2)`` behaviour of ``omega_0(p)**(+-1/2)`` at the
origin.  The angular part is a trapezoid rule in the azimuth (s = 2) or a
Gauss-Legendre x trapezoid product on the sphere (s = 3).  Every node set is
symmetric under ``p -> -p``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np

from .errors import NonFiniteIntegral, ToleranceUnreachable

SUPPORTED_DIMS = (2, 3)


def sphere_area(s: int) -> float:
    """Surface area of the unit sphere S^(s-1) in R^s."""
    return 2.0 * pi ** (s / 2) / gamma(s / 2)


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def panel_edges(r_max: float, r_first: float = 1e-3, ratio: float = 2.0,
                max_width: float | None = None) -> np.ndarray:
    """Edges 0 < r_first < r_first*ratio < ... <= r_max, optionally capped in width."""
    edges = [0.0, min(r_first, r_max)]
    while edges[-1] < r_max:
        edges.append(min(edges[-1] * ratio, r_max))
    if max_width is not None:
        fine = [edges[0]]
        for a, b in zip(edges[:-1], edges[1:]):
            k = max(1, int(np.ceil((b - a) / max_width)))
            fine.extend(np.linspace(a, b, k + 1)[1:])
        edges = fine
    return np.asarray(edges)


def radial_rule(edges: np.ndarray, n_per_panel: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for int_0^R g(r) dr, GL in u = sqrt(r) on each panel."""
    rs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        u, wu = gauss_legendre(np.sqrt(a), np.sqrt(b), n_per_panel)
        rs.append(u * u)
        ws.append(2.0 * u * wu)
    return np.concatenate(rs), np.concatenate(ws)


def angular_rule(s: int, n_polar: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit directions and weights on S^(s-1); weights sum to the sphere area."""
    if s == 2:
        n_az = 2 * n_polar
        phi = 2.0 * pi * np.arange(n_az) / n_az
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        return dirs, np.full(n_az, 2.0 * pi / n_az)
    if s == 3:
        ct, wt = np.polynomial.legendre.leggauss(n_polar)
        n_az = 2 * n_polar
        phi = 2.0 * pi * np.arange(n_az) / n_az
        st = np.sqrt(1.0 - ct ** 2)
        dirs = np.stack([
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.repeat(ct, n_az),
        ], axis=1)
        return dirs, np.repeat(wt, n_az) * (2.0 * pi / n_az)
    raise ValueError(f"spatial dimension s={s} not supported (use one of {SUPPORTED_DIMS})")


@dataclass(frozen=True)
class QuadratureScheme:
    """Nodes/weights in R^s with a declared relative tolerance."""

    nodes: np.ndarray
    weights: np.ndarray
    rel_tol: float
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    @property
    def s(self) -> int:
        return self.nodes.shape[1]

    @property
    def radii(self) -> np.ndarray:
        r = self.params.get("_radii")
        if r is None:
            r = np.linalg.norm(self.nodes, axis=1)
            self.params["_radii"] = r
        return r

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values):
        """Weighted sum of ``values`` sampled at the nodes."""
        total = np.dot(self.weights, values)
        if not np.all(np.isfinite(total)):
            raise NonFiniteIntegral("quadrature sum is not finite")
        return total

    def refined(self) -> "QuadratureScheme":
        """Same construction with doubled radial and angular node counts."""
        p = {k: v for k, v in self.params.items() if not k.startswith("_")}
        p["n_radial"] = 2 * p["n_radial"]
        p["n_polar"] = 2 * p["n_polar"]
        return product_scheme(self.s, rel_tol=self.rel_tol, **p)

    def scaled(self, factor: float) -> "QuadratureScheme":
        """The scheme for integrands living on scale ``factor`` (nodes * factor)."""
        p = {k: v for k, v in self.params.items() if not k.startswith("_")}
        p["r_max"] = p["r_max"] * factor
        p["r_first"] = p["r_first"] * factor
        if p.get("max_width") is not None:
            p["max_width"] = p["max_width"] * factor
        return product_scheme(self.s, rel_tol=self.rel_tol, **p)


def product_scheme(s: int, *, rel_tol: float = 1e-8, r_max: float = 80.0,
                   n_radial: int = 16, n_polar: int = 24, r_first: float = 1e-3,
                   ratio: float = 2.0, max_width: float | None = None) -> QuadratureScheme:
    """Build the radial x angular product scheme without self-testing it."""
    edges = panel_edges(r_max, r_first, ratio, max_width)
    r, wr = radial_rule(edges, n_radial)
    dirs, wa = angular_rule(s, n_polar)
    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, s)
    weights = (wr * r ** (s - 1))[:, None] * wa[None, :]
    params = dict(r_max=r_max, n_radial=n_radial, n_polar=n_polar,
                  r_first=r_first, ratio=ratio, max_width=max_width)
    return QuadratureScheme(nodes, weights.ravel(), rel_tol, params)


def reference_integrals(s: int) -> list[tuple[str, callable, float]]:
    """Closed-form reference integrands used by the scheme self-test."""
    area = sphere_area(s)
    x0 = np.array([2.0, 1.0, 0.5][:s])
    return [
        ("gauss", lambda p, r: np.exp(-r * r), pi ** (s / 2)),
        ("exp", lambda p, r: np.exp(-2.0 * r), area * gamma(s) / 2.0 ** s),
        ("inv_r_gauss", lambda p, r: np.exp(-r * r) / r, area * gamma((s - 1) / 2) / 2.0),
        ("plane_wave", lambda p, r: np.exp(-r * r) * np.cos(p @ x0),
         pi ** (s / 2) * np.exp(-x0 @ x0 / 4.0)),
    ]


def self_test(q: QuadratureScheme) -> dict[str, float]:
    """Relative errors of ``q`` on the reference integrands."""
    r = q.radii
    return {name: abs(q.integrate(fn(q.nodes, r)) - exact) / abs(exact)
            for name, fn, exact in reference_integrals(q.s)}


def quad_build(s: int, rel_tol: float = 1e-8, *, r_max: float = 80.0,
               max_level: int = 6, **kw) -> QuadratureScheme:
    """Smallest scheme of the refinement ladder passing the self-test at ``rel_tol``.

    Raises
    ------
    ToleranceUnreachable
        If ``max_level`` refinements do not reach ``rel_tol``.
    """
    if not 0 < rel_tol <= 1e-2:
        raise ValueError("rel_tol must lie in (0, 1e-2]")
    if s not in SUPPORTED_DIMS:
        raise ValueError(f"spatial dimension s={s} not supported")
    worst = None
    for level in range(max_level + 1):
        q = product_scheme(s, rel_tol=rel_tol, r_max=r_max,
                           n_radial=kw.get("n_radial", 8) + 4 * level,
                           n_polar=kw.get("n_polar", 12) + 4 * level,
                           **{k: v for k, v in kw.items() if k not in ("n_radial", "n_polar")})
        errs = self_test(q)
        worst = max(errs.values())
        if worst <= rel_tol:
            return q
    raise ToleranceUnreachable(f"best self-test error {worst:.3e} > rel_tol {rel_tol:.1e}")


def ball_scheme(s: int, radius: float, n_radial: int = 48, n_polar: int = 16) -> QuadratureScheme:
    """Scheme on the closed ball |p| <= radius (single radial panel)."""
    r, wr = radial_rule(np.array([0.0, radius]), n_radial)
    dirs, wa = angular_rule(s, n_polar)
    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, s)
    weights = ((wr * r ** (s - 1))[:, None] * wa[None, :]).ravel()
    return QuadratureScheme(nodes, weights, 1e-10,
                            dict(r_max=radius, n_radial=n_radial, n_polar=n_polar))
