"""Momentum-space test functions, the mass-m one-particle norm and the symplectic form.

A test function ``f = f_R + i f_I`` on R^s is carried by the Fourier
transforms of its real and imaginary parts, ``FR = (f_R)~`` and
``FI = (f_I)~``, each an evaluator ``(N, s) -> (N,)`` complex.  Both satisfy
``F(-p) = conj(F(p))``.

Conventions fixed here and used throughout:

* one-particle vector ``xi_f = 2**-0.5 * (w**-0.5 FR + 1j * w**0.5 FI)`` with
  ``w = omega_m(p)``, so that ``||f||_m**2 = ||xi_f||**2``;
* ``sigma(f, g) = Im int conj(f~) g~ dp = 2 Im <xi_f, xi_g>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import QuadratureScheme

Evaluator = Callable[[np.ndarray], np.ndarray]


def _zero(p: np.ndarray) -> np.ndarray:
    return np.zeros(p.shape[:-1], dtype=complex)


@dataclass(frozen=True, eq=False)
class MomentumFunction:
    """Evaluable momentum-space representation (FR, FI) of a test function."""

    fr: Evaluator
    fi: Evaluator
    s: int
    decay_class: str = "gaussian"
    label: str = ""

    def __call__(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p = np.asarray(p, dtype=float)
        return (np.asarray(self.fr(p), dtype=complex),
                np.asarray(self.fi(p), dtype=complex))

    def full(self, p: np.ndarray) -> np.ndarray:
        """Transform of the complex function, ``FR + i FI``."""
        a, b = self(p)
        return a + 1j * b

    def memoized(self) -> "MomentumFunction":
        """Copy that remembers its values on the most recent node arrays (by identity)."""
        store: dict = {}

        def wrap(slot, ev):
            def inner(p):
                hit = store.get((slot, id(p)))
                if hit is not None and hit[0] is p:
                    return hit[1]
                val = ev(p)
                if len(store) > 16:
                    store.clear()
                store[(slot, id(p))] = (p, val)
                return val
            return inner

        return MomentumFunction(wrap(0, self.fr), wrap(1, self.fi), self.s, self.decay_class, self.label)

    def __add__(self, other: "MomentumFunction") -> "MomentumFunction":
        if other.s != self.s:
            raise ValueError("dimension mismatch")
        return MomentumFunction(lambda p: self.fr(p) + other.fr(p),
                                lambda p: self.fi(p) + other.fi(p), self.s,
                                label=f"({self.label}+{other.label})")

    def __mul__(self, c) -> "MomentumFunction":
        # c f has real part Re(c) f_R - Im(c) f_I and imaginary part Re(c) f_I + Im(c) f_R
        a, b = float(np.real(c)), float(np.imag(c))
        return MomentumFunction(lambda p: a * self.fr(p) - b * self.fi(p),
                                lambda p: a * self.fi(p) + b * self.fr(p), self.s,
                                label=f"{c}*{self.label}")

    __rmul__ = __mul__

    def __neg__(self) -> "MomentumFunction":
        return self * -1.0

    def __sub__(self, other: "MomentumFunction") -> "MomentumFunction":
        return self + (-other)


def zero(s: int) -> MomentumFunction:
    return MomentumFunction(_zero, _zero, s, label="0")


def from_parts(fr: Evaluator | None, fi: Evaluator | None, s: int, label: str = "") -> MomentumFunction:
    return MomentumFunction(fr or _zero, fi or _zero, s, label=label)


def gaussian_poly(s: int, alpha: float = 0.5, coeffs: dict | None = None,
                  part: str = "R", shift=None) -> MomentumFunction:
    """``sum_a c_a (i p)^a exp(-alpha |p|^2)`` placed in the real or imaginary slot.

    Real coefficients keep the conjugate symmetry.  ``shift`` translates the
    function in position space by the given vector.
    """
    coeffs = {(0,) * s: 1.0} if coeffs is None else dict(coeffs)
    for k, c in coeffs.items():
        if len(k) != s or np.imag(c) != 0:
            raise ValueError("coefficients must be real and indexed by s-tuples")
    shift = None if shift is None else np.asarray(shift, dtype=float)

    def ev(p):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape[:-1], dtype=complex)
        for a, c in coeffs.items():
            out += c * np.prod((1j * p) ** np.asarray(a), axis=-1)
        out *= np.exp(-alpha * np.sum(p * p, axis=-1))
        if shift is not None:
            out *= np.exp(-1j * (p @ shift))
        return out

    if part == "R":
        return MomentumFunction(ev, _zero, s, label=f"gR{alpha}")
    if part == "I":
        return MomentumFunction(_zero, ev, s, label=f"gI{alpha}")
    raise ValueError("part must be 'R' or 'I'")


def gaussian(s: int, alpha: float = 0.5, amp: float = 1.0, part: str = "R", shift=None) -> MomentumFunction:
    """``amp * exp(-alpha |p|^2)`` in the requested slot."""
    return gaussian_poly(s, alpha, {(0,) * s: amp}, part=part, shift=shift)


def conjugate_symmetry_defect(f: MomentumFunction, p: np.ndarray) -> float:
    """max |F(-p) - conj F(p)| over both slots at the sampled points."""
    a, b = f(p)
    am, bm = f(-np.asarray(p))
    return float(max(np.max(np.abs(am - np.conj(a)), initial=0.0),
                     np.max(np.abs(bm - np.conj(b)), initial=0.0)))


def dispersion(m: float, p) -> np.ndarray:
    """omega_m(p) = sqrt(m^2 + |p|^2) over the last axis of ``p``."""
    p = np.asarray(p, dtype=float)
    return np.sqrt(m * m + np.sum(p * p, axis=-1))


def one_particle(f: MomentumFunction, m: float, p: np.ndarray) -> np.ndarray:
    """xi_f(p) = 2^(-1/2) (omega^(-1/2) FR + i omega^(1/2) FI)."""
    a, b = f(p)
    w = dispersion(m, p)
    return (a / np.sqrt(w) + 1j * np.sqrt(w) * b) / np.sqrt(2.0)


def mass_norm_sq(f: MomentumFunction, m: float, q: QuadratureScheme) -> float:
    """||f||_m^2 = 1/2 int |omega^(-1/2) FR + i omega^(1/2) FI|^2 dp."""
    if m < 0:
        raise ValueError("mass must be nonnegative")
    xi = one_particle(f, m, q.nodes)
    return float(q.integrate(np.abs(xi) ** 2))


def symplectic_form(f: MomentumFunction, g: MomentumFunction, q: QuadratureScheme) -> float:
    """sigma(f, g) = Im int conj(f~(p)) g~(p) dp."""
    return float(np.imag(q.integrate(np.conj(f.full(q.nodes)) * g.full(q.nodes))))
