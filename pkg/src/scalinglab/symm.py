"""Mass-dependent Poincare action and the dilation action on test functions.

Every action returns a new :class:`~scalinglab.testfn.MomentumFunction` whose
evaluators call the original ones at transformed momenta, so compositions
stay exact (no interpolation).  Space-time points are ``(t, x_1, ..., x_s)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import QuadratureScheme
from .testfn import MomentumFunction, dispersion, mass_norm_sq

# below this energy the omega**-1 factors are replaced by their small-omega limits
OMEGA_FLOOR = 1e-8


def minkowski_metric(s: int) -> np.ndarray:
    return np.diag([1.0] + [-1.0] * s)


@dataclass(frozen=True, eq=False)
class LorentzBoost:
    """Orthochronous Lorentz matrix acting on (p_0, p_1, ..., p_s)."""

    matrix: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.matrix, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] < 3:
            raise ValueError("Lorentz matrix must be square of size s+1 >= 3")
        eta = minkowski_metric(L.shape[0] - 1)
        if np.max(np.abs(L.T @ eta @ L - eta)) > 1e-12:
            raise ValueError("matrix does not preserve the Minkowski metric")
        if L[0, 0] < 1.0 - 1e-12:
            raise ValueError("matrix is not orthochronous")
        object.__setattr__(self, "matrix", L)

    @property
    def s(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def inverse_matrix(self) -> np.ndarray:
        eta = minkowski_metric(self.s)
        return eta @ self.matrix.T @ eta

    def __matmul__(self, other: "LorentzBoost") -> "LorentzBoost":
        return LorentzBoost(self.matrix @ other.matrix)

    @classmethod
    def identity(cls, s: int) -> "LorentzBoost":
        return cls(np.eye(s + 1))

    @classmethod
    def along(cls, s: int, axis: int, rapidity: float) -> "LorentzBoost":
        """Pure boost with the given rapidity along spatial axis ``axis`` (0-based)."""
        L = np.eye(s + 1)
        c, sh = np.cosh(rapidity), np.sinh(rapidity)
        k = axis + 1
        L[0, 0] = L[k, k] = c
        L[0, k] = L[k, 0] = sh
        return cls(L)

    @classmethod
    def rotation(cls, R: np.ndarray) -> "LorentzBoost":
        R = np.asarray(R, dtype=float)
        s = R.shape[0]
        L = np.eye(s + 1)
        L[1:, 1:] = R
        return cls(L)


def rotation_matrix(s: int, angle: float, plane: tuple[int, int] = (0, 1)) -> np.ndarray:
    R = np.eye(s)
    i, j = plane
    c, sn = np.cos(angle), np.sin(angle)
    R[i, i] = R[j, j] = c
    R[i, j], R[j, i] = -sn, sn
    return R


def translate_space(f: MomentumFunction, x) -> MomentumFunction:
    """(tau_x f)(y) = f(y - x): multiply both slots by exp(-i p.x)."""
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        return f

    def phase(p):
        return np.exp(-1j * (np.asarray(p) @ x))

    return MomentumFunction(lambda p: phase(p) * f.fr(p), lambda p: phase(p) * f.fi(p),
                            f.s, f.decay_class, f"tx({f.label})")


def translate_time(f: MomentumFunction, t: float, m: float) -> MomentumFunction:
    """Free time evolution by ``t`` at mass ``m``."""
    if t == 0:
        return f

    def parts(p):
        w = dispersion(m, p)
        c = np.cos(t * w)
        # np.sinc(x) = sin(pi x)/(pi x) gives sin(t w)/w = t sinc(t w / pi) smoothly through w = 0
        sin_over_w = t * np.sinc(t * w / np.pi)
        a, b = f(p)
        return c * a - w * np.sin(t * w) * b, c * b + sin_over_w * a

    return MomentumFunction(lambda p: parts(p)[0], lambda p: parts(p)[1],
                            f.s, f.decay_class, f"tt({f.label})")


def boost(f: MomentumFunction, L: LorentzBoost, m: float) -> MomentumFunction:
    """Lorentz transformation of the Cauchy data at mass ``m``."""
    if L.s != f.s:
        raise ValueError("dimension mismatch")
    if np.allclose(L.matrix, np.eye(f.s + 1), atol=0.0, rtol=0.0):
        return f
    Lt = L.matrix.T
    Linv = L.inverse_matrix

    def parts(p):
        p = np.asarray(p, dtype=float)
        w = dispersion(m, p)
        small = w < OMEGA_FLOOR
        if np.any(small):
            # only reachable at m < OMEGA_FLOOR: move the point radially out to
            # omega = OMEGA_FLOOR, where psi/omega has reached its directional limit
            r = np.linalg.norm(p, axis=-1, keepdims=True)
            direction = np.where(r > 0, p / np.where(r > 0, r, 1.0), np.eye(f.s)[0])
            target = np.sqrt(max(OMEGA_FLOOR ** 2 - m * m, 0.0))
            p = np.where(small[..., None], direction * target, p)
            w = dispersion(m, p)
        p4 = np.concatenate([w[..., None], p], axis=-1)
        a4 = p4 @ Linv.T
        b4 = p4 @ Lt.T
        ra, ia = f(a4[..., 1:])
        rb, ib = f(b4[..., 1:])
        phi = 0.5 * (ra + rb) + (a4[..., 0] * ia - b4[..., 0] * ib) / 2j
        psi = -(ra - rb) / 2j + 0.5 * (a4[..., 0] * ia + b4[..., 0] * ib)
        return phi, psi / w

    return MomentumFunction(lambda p: parts(p)[0], lambda p: parts(p)[1],
                            f.s, f.decay_class, f"bo({f.label})")


def dilate(f: MomentumFunction, lam: float) -> MomentumFunction:
    """delta_lambda: FR -> lam^((s-1)/2) FR(lam p), FI -> lam^((s+1)/2) FI(lam p)."""
    if lam <= 0:
        raise ValueError("dilation parameter must be positive")
    if lam == 1:
        return f
    s = f.s
    kr, ki = lam ** ((s - 1) / 2), lam ** ((s + 1) / 2)
    return MomentumFunction(lambda p: kr * f.fr(lam * np.asarray(p)),
                            lambda p: ki * f.fi(lam * np.asarray(p)),
                            s, f.decay_class, f"dl({f.label})")


def poincare(f: MomentumFunction, x, L: LorentzBoost | None, m: float) -> MomentumFunction:
    """tau^(m)_{x,L} f: the Lorentz part first, then time, then space translation."""
    x = np.asarray(x, dtype=float)
    if x.shape != (f.s + 1,):
        raise ValueError("space-time point must have length s+1")
    g = f if L is None else boost(f, L, m)
    g = translate_time(g, float(x[0]), m)
    return translate_space(g, x[1:])


def norm0(f: MomentumFunction, q: QuadratureScheme) -> float:
    return float(np.sqrt(max(mass_norm_sq(f, 0.0, q), 0.0)))


def mass_rescaling_check(f: MomentumFunction, x, L: LorentzBoost | None, lam: float, m: float,
                         q: QuadratureScheme) -> float:
    """||delta_lam tau^(lam m)_{x,L} f - tau^(m)_{lam x,L} delta_lam f||_0."""
    x = np.asarray(x, dtype=float)
    left = dilate(poincare(f, x, L, lam * m), lam)
    right = poincare(dilate(f, lam), lam * x, L, m)
    return norm0(left - right, q)


def mass_zero_gap(f: MomentumFunction, x, L: LorentzBoost | None, m: float,
                  q: QuadratureScheme) -> float:
    """||tau^(m)_{x,L} f - tau^(0)_{x,L} f||_0."""
    if m == 0:
        return 0.0
    return norm0(poincare(f, x, L, m) - poincare(f, x, L, 0.0), q)
