"""Truncated Fock-space engine for the free field.

Vectors are finite sums of creation monomials ``c * a*(e_1) ... a*(e_k) Omega``
on single-particle evaluators; every scalar product reduces to permanents of
single-particle Gram matrices computed with a :class:`QuadratureScheme`.

This module provides the Wick fields ``phi_{n,nu}``, the coefficients
``sigma_{n,nu}(W(f))`` (closed form, plus the nested-commutator oracle), and
the short-distance expansion of Weyl operators between finite-particle vectors.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial, perm as n_perm
from typing import Callable, Iterable, Sequence

import numpy as np

from .conventions import field_kernel, smeared_field_vector
from .cutoff import CutoffFunction, moment_transform, smooth_bump, smoothstep5
from .errors import ContractionOverflow, CutoffDependence
from .kernels import permanent
from .quadrature import QuadratureScheme, product_scheme
from .symm import translate_time
from .testfn import MomentumFunction, dispersion, mass_norm_sq, one_particle

CONTRACTION_BUDGET = 10 ** 6
# the sigma route assumes h = 1 on the support of f; Gaussian test data are
# effectively supported well inside this radius
DEFAULT_CUTOFF_RADIUS = 5.0


def sigma_scheme(s: int, rel_tol: float = 1e-8) -> QuadratureScheme:
    """Scheme resolving the oscillations of the cutoff transforms at the default radius."""
    return product_scheme(s, rel_tol=rel_tol, r_max=11.0, n_radial=8, n_polar=8, max_width=0.5)


class SingleParticleVector:
    """Single-particle wave function ``p -> eval(p)`` at mass ``m``."""

    __slots__ = ("evaluator", "m", "label", "_cache")

    def __init__(self, evaluator: Callable[[np.ndarray], np.ndarray], m: float, label: str = ""):
        self.evaluator = evaluator
        self.m = float(m)
        self.label = label
        self._cache: dict = {}

    def __repr__(self):
        return f"SingleParticleVector({self.label or '?'}, m={self.m})"

    def __call__(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(p, dtype=float)), dtype=complex)

    def values(self, q: QuadratureScheme) -> np.ndarray:
        hit = self._cache.get(id(q))
        if hit is None or hit[0] is not q:
            hit = (q, self(q.nodes))
            self._cache[id(q)] = hit
        return hit[1]

    def damped(self, beta: float) -> "SingleParticleVector":
        if beta == 0:
            return self
        m = self.m
        return SingleParticleVector(lambda p: np.exp(-beta * dispersion(m, p)) * self.evaluator(p),
                                    m, f"e^-{beta}w {self.label}")

    def norm(self, q: QuadratureScheme) -> float:
        return float(np.sqrt(q.integrate(np.abs(self.values(q)) ** 2)))


def one_particle_vector(f: MomentumFunction, m: float) -> SingleParticleVector:
    """xi_f as a single-particle vector."""
    return SingleParticleVector(lambda p: one_particle(f, m, p), m, f"xi[{f.label}]")


class Pairing:
    """Memoised single-particle inner products <a, b> under a fixed scheme."""

    def __init__(self, q: QuadratureScheme):
        self.q = q
        self._cache: dict = {}

    def __call__(self, a: SingleParticleVector, b: SingleParticleVector) -> complex:
        key = (id(a), id(b))
        hit = self._cache.get(key)
        if hit is None:
            val = complex(self.q.integrate(np.conj(a.values(self.q)) * b.values(self.q)))
            hit = (a, b, val)
            self._cache[key] = hit
            self._cache[(id(b), id(a))] = (b, a, np.conj(val))
        return hit[2]

    def gram(self, left: Sequence[SingleParticleVector], right: Sequence[SingleParticleVector]) -> np.ndarray:
        out = np.empty((len(left), len(right)), dtype=complex)
        for i, a in enumerate(left):
            for j, b in enumerate(right):
                out[i, j] = self(a, b)
        return out


Term = tuple[complex, tuple[SingleParticleVector, ...]]


def _collect(terms: Iterable[Term]) -> tuple[Term, ...]:
    """Merge terms whose mode multisets coincide (by identity)."""
    acc: dict = {}
    for c, modes in terms:
        if c == 0:
            continue
        modes = tuple(sorted(modes, key=id))
        key = tuple(id(e) for e in modes)
        if key in acc:
            acc[key] = (acc[key][0] + c, modes)
        else:
            acc[key] = (c, modes)
    return tuple((c, modes) for c, modes in acc.values() if c != 0)


@dataclass(frozen=True, eq=False)
class FockVector:
    """Finite sum of creation monomials applied to the vacuum."""

    terms: tuple[Term, ...]
    m: float = 0.0
    tail_bound: float = 0.0

    @classmethod
    def vacuum(cls, m: float = 0.0) -> "FockVector":
        return cls(((1.0 + 0.0j, ()),), m)

    @classmethod
    def particles(cls, modes: Sequence[SingleParticleVector], coef: complex = 1.0) -> "FockVector":
        """coef * a*(e_1) ... a*(e_k) Omega."""
        modes = tuple(modes)
        m = modes[0].m if modes else 0.0
        if any(e.m != m for e in modes):
            raise ValueError("modes must share the mass")
        return cls(((complex(coef), modes),), m)

    @property
    def n_max(self) -> int:
        return max((len(modes) for _, modes in self.terms), default=0)

    def __add__(self, other: "FockVector") -> "FockVector":
        return FockVector(_collect(self.terms + other.terms), self.m,
                          self.tail_bound + other.tail_bound)

    def scale(self, c: complex) -> "FockVector":
        return FockVector(tuple((c * a, modes) for a, modes in self.terms), self.m, abs(c) * self.tail_bound)

    def create(self, e: SingleParticleVector) -> "FockVector":
        """a*(e) applied to the vector."""
        return FockVector(_collect((c, modes + (e,)) for c, modes in self.terms), self.m, self.tail_bound)

    def annihilate(self, e: SingleParticleVector, pairing: Pairing) -> "FockVector":
        """a(e) applied to the vector."""
        out = []
        for c, modes in self.terms:
            for i, ei in enumerate(modes):
                out.append((c * pairing(e, ei), modes[:i] + modes[i + 1:]))
        return FockVector(_collect(out), self.m, self.tail_bound)

    def field(self, e: SingleParticleVector, pairing: Pairing) -> "FockVector":
        """Phi(e) = a(e) + a*(e) applied to the vector."""
        return self.annihilate(e, pairing) + self.create(e)

    def exp_annihilate(self, e: SingleParticleVector, c: complex, pairing: Pairing) -> "FockVector":
        """exp(c a(e)) applied to the vector (a finite series)."""
        total = self
        power = self
        for k in range(1, self.n_max + 1):
            power = power.annihilate(e, pairing).scale(c / k)
            total = total + power
        return total


def inner_product(a: FockVector, b: FockVector, q: QuadratureScheme | Pairing) -> complex:
    """<a, b>: sum over equal-particle-number term pairs of conj(c_a) c_b perm(Gram)."""
    pairing = q if isinstance(q, Pairing) else Pairing(q)
    if a.m != b.m:
        raise ValueError("vectors live in different Fock representations")
    total = 0.0 + 0.0j
    for ca, ma in a.terms:
        for cb, mb in b.terms:
            if len(ma) == len(mb):
                total += np.conj(ca) * cb * permanent(pairing.gram(ma, mb))
    return complex(total)


def norm(v: FockVector, q: QuadratureScheme | Pairing) -> float:
    return float(np.sqrt(max(inner_product(v, v, q).real, 0.0)))


def apply_energy_damping(v: FockVector, beta: float, m: float | None = None) -> FockVector:
    """exp(-beta H) acting mode-wise: e -> exp(-beta omega_m) e."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if m is not None and m != v.m:
        raise ValueError("mass differs from the vector's representation")
    if beta == 0:
        return v
    damped: dict = {}

    def d(e):
        if id(e) not in damped:
            damped[id(e)] = e.damped(beta)
        return damped[id(e)]

    return FockVector(tuple((c, tuple(d(e) for e in modes)) for c, modes in v.terms), v.m, v.tail_bound)


def coherent_truncated(f: MomentumFunction, m: float, N_max: int, q: QuadratureScheme) -> FockVector:
    """exp(-||f||^2/2) sum_{n <= N_max} i^n/n! a*(xi_f)^n Omega, with its tail bound on the norm^2."""
    if N_max < 0:
        raise ValueError("N_max must be nonnegative")
    x = mass_norm_sq(f, m, q)
    if x == 0:
        return FockVector.vacuum(m)
    xi = one_particle_vector(f, m)
    terms = tuple((np.exp(-x / 2) * 1j ** n / factorial(n), (xi,) * n) for n in range(N_max + 1))
    head = sum(x ** n / factorial(n) for n in range(N_max + 1))
    tail = max(0.0, 1.0 - np.exp(-x) * head)
    return FockVector(terms, m, tail)


@dataclass(frozen=True)
class MultiIndex:
    """n legs, each ``(nu_0 in {0,1}, nu_1, ..., nu_s)``."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        entries = tuple(tuple(int(x) for x in e) for e in self.entries)
        for e in entries:
            if e[0] not in (0, 1) or min(e) < 0:
                raise ValueError(f"invalid leg {e}")
        if len({len(e) for e in entries}) > 1:
            raise ValueError("legs must have a common length")
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def order(self) -> int:
        """|nu|."""
        return sum(sum(e) for e in self.entries)

    @property
    def factorial(self) -> int:
        """nu! = prod_j prod_k nu_jk!."""
        out = 1
        for e in self.entries:
            for x in e:
                out *= factorial(x)
        return out

    @property
    def time_count(self) -> int:
        return sum(e[0] for e in self.entries)

    @classmethod
    def zero(cls, n: int, s: int) -> "MultiIndex":
        return cls(((0,) * (s + 1),) * n)


@dataclass(frozen=True)
class WickField:
    n: int
    nu: MultiIndex

    def __post_init__(self):
        if self.nu.n != self.n:
            raise ValueError("multi-index length must equal n")


def leg_labels(s: int, max_order: int) -> list[tuple[int, ...]]:
    """All single legs (nu_0, alpha) with nu_0 + |alpha| <= max_order."""
    out = []
    for total in range(max_order + 1):
        for nu0 in (0, 1):
            rest = total - nu0
            if rest < 0:
                continue
            for alpha in itertools.product(range(rest + 1), repeat=s):
                if sum(alpha) == rest:
                    out.append((nu0,) + alpha)
    return out


def iter_multi_indices(n: int, s: int, nu_cap: int):
    """Ordered n-tuples of legs with |nu| <= nu_cap."""
    legs = leg_labels(s, nu_cap)

    def rec(prefix, budget):
        if len(prefix) == n:
            yield MultiIndex(tuple(prefix))
            return
        for leg in legs:
            if sum(leg) <= budget:
                yield from rec(prefix + [leg], budget - sum(leg))

    yield from rec([], nu_cap)


class _LegVectors:
    """Cache of the point-field kernels kappa_nu as single-particle vectors."""

    def __init__(self, m: float):
        self.m = m
        self._legs: dict = {}

    def __call__(self, leg) -> SingleParticleVector:
        leg = tuple(leg)
        if leg not in self._legs:
            m = self.m
            self._legs[leg] = SingleParticleVector(lambda p, leg=leg: field_kernel(leg, m, p), m, f"k{leg}")
        return self._legs[leg]


def _injections(k: int, r: int):
    return itertools.permutations(range(k), r)


def phi_matrix_element(w: WickField, bra: FockVector, ket: FockVector, m: float, q: QuadratureScheme | Pairing,
                       *, budget: int = CONTRACTION_BUDGET, legs: _LegVectors | None = None) -> complex:
    """<bra, phi_{n,nu} ket> by enumeration of all Wick contractions."""
    pairing = q if isinstance(q, Pairing) else Pairing(q)
    if bra.m != m or ket.m != m:
        raise ValueError("vectors must live in the mass-m representation")
    n = w.n
    if n == 0:
        return inner_product(bra, ket, pairing)
    legs = legs or _LegVectors(m)
    kap = [legs(e) for e in w.nu.entries]

    count = 0
    plan = []
    for cb, mb in bra.terms:
        for ck, mk in ket.terms:
            kb, kk = len(mb), len(mk)
            for size in range(n + 1):
                # legs in S annihilate bra modes, the others annihilate ket modes
                if size > kb or n - size > kk or kb - size != kk - (n - size):
                    continue
                for S in itertools.combinations(range(n), size):
                    count += n_perm(kb, size) * n_perm(kk, n - size)
                    plan.append((cb, mb, ck, mk, S))
            if count > budget:
                raise ContractionOverflow(
                    f"phi_{{{n},{w.nu.entries}}}: more than {budget} contractions required")

    total = 0.0 + 0.0j
    for cb, mb, ck, mk, S in plan:
        Sc = [j for j in range(n) if j not in S]
        kb, kk = len(mb), len(mk)
        for ib in _injections(kb, len(S)):
            fb = 1.0 + 0.0j
            for j, i in zip(S, ib):
                fb *= pairing(mb[i], kap[j])
            rest_b = [mb[i] for i in range(kb) if i not in ib]
            for ik in _injections(kk, len(Sc)):
                fk = 1.0 + 0.0j
                for j, i in zip(Sc, ik):
                    fk *= pairing(kap[j], mk[i])
                rest_k = [mk[i] for i in range(kk) if i not in ik]
                total += np.conj(cb) * ck * fb * fk * permanent(pairing.gram(rest_b, rest_k))
    return complex(total)


class _MomentTransforms:
    """Cached transforms of x^alpha h(|x|/r) on the nodes of one scheme."""

    def __init__(self, h: CutoffFunction, r: float, q: QuadratureScheme):
        self.h, self.r, self.q = h, r, q
        self._vals: dict = {}

    def __call__(self, alpha) -> np.ndarray:
        alpha = tuple(alpha)
        if alpha not in self._vals:
            self._vals[alpha] = moment_transform(self.h, self.r, alpha, self.q.nodes)
        return self._vals[alpha]


_TRANSFORM_CACHE: dict = {}


def _transforms(h: CutoffFunction, r: float, q: QuadratureScheme) -> _MomentTransforms:
    key = (id(h.profile), float(r), id(q))
    hit = _TRANSFORM_CACHE.get(key)
    if hit is None or hit.q is not q or hit.h.profile is not h.profile:
        if len(_TRANSFORM_CACHE) > 64:
            _TRANSFORM_CACHE.clear()
        hit = _MomentTransforms(h, r, q)
        _TRANSFORM_CACHE[key] = hit
    return hit


def _alternative_profile(h: CutoffFunction) -> CutoffFunction:
    return smooth_bump() if h.name != "bump" else smoothstep5()


class SigmaContext:
    """Shared state for evaluating many coefficients sigma_{n,nu}(W(f)).

    The per-leg pairing ``c_j`` is ``-2 Im <eta_j, xi_f>`` where ``eta_j`` is
    the one-particle vector of ``d0 phi(h_nu)`` (nu_0 = 0) or ``phi(h_nu)``
    (nu_0 = 1).  By Parseval this is ``+int f_R x^alpha h`` for nu_0 = 0 and
    ``-int f_I x^alpha h`` for nu_0 = 1.  Each leg is evaluated with two cutoff
    profiles which must agree to ``cutoff_tol``.
    """

    def __init__(self, f: MomentumFunction, m: float, q: QuadratureScheme,
                 h: CutoffFunction | None = None, r: float = DEFAULT_CUTOFF_RADIUS,
                 cutoff_tol: float = 1e-8, check_cutoff: bool = True):
        self.f, self.m, self.q = f, m, q
        self.h = h or smoothstep5()
        self.r = r
        self.cutoff_tol = cutoff_tol
        self.check_cutoff = check_cutoff
        self.norm_sq = mass_norm_sq(f, m, q)
        fr, fi = f(q.nodes)
        self._slots = (np.conj(fr), np.conj(fi))
        self._main = _transforms(self.h, r, q)
        self._alt = _transforms(_alternative_profile(self.h), r, q)
        self._legs: dict = {}

    def moment(self, leg, transforms) -> float:
        nu0, alpha = leg[0], tuple(leg[1:])
        # int f_slot x^alpha h dx = int conj(F_slot) (x^alpha h)~ dp, both real functions
        return complex(self.q.integrate(self._slots[nu0] * transforms(alpha))).real

    def leg_pairing(self, leg) -> float:
        leg = tuple(leg)
        if leg not in self._legs:
            mom = self.moment(leg, self._main)
            if self.check_cutoff:
                alt = self.moment(leg, self._alt)
                scale = max(1.0, abs(mom))
                if abs(alt - mom) > self.cutoff_tol * scale:
                    raise CutoffDependence(f"leg {leg}: profiles give {mom!r} and {alt!r}")
            self._legs[leg] = -mom if leg[0] else mom
        return self._legs[leg]

    def coefficient(self, nu: MultiIndex) -> complex:
        n = nu.n
        pref = (1j) ** n * (-1) ** nu.time_count / (factorial(n) * nu.factorial)
        prod = 1.0
        for leg in nu.entries:
            prod *= self.leg_pairing(leg)
            if prod == 0:
                break
        return complex(pref * prod * np.exp(-0.5 * self.norm_sq))


def sigma_coefficient(n: int, nu: MultiIndex, f: MomentumFunction, m: float, h_choice: CutoffFunction | None,
                      q: QuadratureScheme, *, r: float = DEFAULT_CUTOFF_RADIUS, cutoff_tol: float = 1e-8) -> complex:
    """sigma_{n,nu}(W(f)) by the closed-form route, checked against a second cutoff profile."""
    if nu.n != n:
        raise ValueError("n must equal the number of legs")
    return SigmaContext(f, m, q, h_choice, r, cutoff_tol).coefficient(nu)


def weyl_matrix_element(bra: FockVector, ket: FockVector, f: MomentumFunction,
                        q: QuadratureScheme | Pairing) -> complex:
    """<bra, W(f) ket> exactly, using W = exp(-|xi|^2/2) exp(i a*(xi)) exp(i a(xi))."""
    pairing = q if isinstance(q, Pairing) else Pairing(q)
    m = ket.m
    xi = one_particle_vector(f, m)
    x = mass_norm_sq(f, m, pairing.q)
    left = bra.exp_annihilate(xi, -1j, pairing)
    right = ket.exp_annihilate(xi, 1j, pairing)
    return complex(np.exp(-0.5 * x) * inner_product(left, right, pairing))


def sigma_commutator_oracle(n: int, nu: MultiIndex, f: MomentumFunction, m: float, h: CutoffFunction | None,
                            q: QuadratureScheme, *, r: float = DEFAULT_CUTOFF_RADIUS) -> complex:
    """sigma_{n,nu}(W(f)) from the nested commutators evaluated on finite-particle vectors.

    ``<Omega, [A_1, [A_2, ... [A_n, W] ...]] Omega>`` is expanded into the
    2^n words ``(-1)^|R| <A_L* Omega, W A_R Omega>`` and each word is computed
    exactly in Fock space.
    """
    if nu.n != n:
        raise ValueError("n must equal the number of legs")
    h = h or smoothstep5()
    pairing = Pairing(q)
    vac = FockVector.vacuum(m)
    transforms = _transforms(h, r, q)
    etas = []
    for leg in nu.entries:
        nu0, alpha = leg[0], tuple(leg[1:])

        def ev(p, alpha=alpha, td=(nu0 == 0)):
            return smeared_field_vector(moment_transform(h, r, alpha, p), m, p, td)

        eta = SingleParticleVector(ev, m, f"eta{leg}")
        # seed the node values from the shared transform cache
        eta._cache[id(q)] = (q, smeared_field_vector(transforms(alpha), m, q.nodes, nu0 == 0))
        etas.append(eta)
    total = 0.0 + 0.0j
    for mask in range(2 ** n):
        L = [j for j in range(n) if mask >> j & 1]
        R = [j for j in range(n) if not mask >> j & 1]
        u = vac
        for j in L:
            u = u.field(etas[j], pairing)
        v = vac
        for j in R:
            v = v.field(etas[j], pairing)
        total += (-1) ** len(R) * weyl_matrix_element(u, v, f, pairing)
    pref = (1j) ** n * (-1) ** nu.time_count / (factorial(n) * nu.factorial)
    return complex(pref * total)


def expansion_partial_sum(f: MomentumFunction, bra: FockVector, ket: FockVector, m: float, n_max: int,
                          nu_cap: int, q: QuadratureScheme, *, h: CutoffFunction | None = None,
                          r: float = DEFAULT_CUTOFF_RADIUS, budget: int = CONTRACTION_BUDGET,
                          context: SigmaContext | None = None) -> complex:
    """sum_{n <= n_max} sum_{|nu| <= nu_cap} sigma_{n,nu}(W(f)) <bra, phi_{n,nu} ket>."""
    ctx = context or SigmaContext(f, m, q, h, r)
    pairing = Pairing(q)
    legs = _LegVectors(m)
    s = q.s
    total = 0.0 + 0.0j
    # particle numbers present on each side decide which n can contribute at all
    nb = {len(modes) for _, modes in bra.terms}
    nk = {len(modes) for _, modes in ket.terms}
    for n in range(n_max + 1):
        if not any(abs(a - b) <= n and (a + b - n) % 2 == 0 and a + b >= n for a in nb for b in nk):
            continue
        for nu in iter_multi_indices(n, s, nu_cap):
            coef = ctx.coefficient(nu)
            if coef == 0:
                continue
            total += coef * phi_matrix_element(WickField(n, nu), bra, ket, m, pairing, budget=budget, legs=legs)
    return complex(total)


def chi_norm(n: int, nu: MultiIndex, beta: float, m: float, s: int, q: QuadratureScheme) -> float:
    """||exp(-beta H) phi_{n,nu} Omega|| = perm(G)^(1/2), G_ij = <e^-bw kappa_i, e^-bw kappa_j>."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if nu.n != n:
        raise ValueError("n must equal the number of legs")
    if n == 0:
        return 1.0
    if q.s != s:
        raise ValueError("scheme dimension differs from s")
    legs = _LegVectors(m)
    vecs = [legs(e).damped(beta) for e in nu.entries]
    G = Pairing(q).gram(vecs, vecs)
    return float(np.sqrt(max(permanent(G).real, 0.0)))


@dataclass(frozen=True)
class DampingProfile:
    """A function of the energy with its time-domain representation.

    ``profile(E) = sum_k t_weights[k] exp(i t_nodes[k] E)`` approximately,
    i.e. the weights already contain the Fourier density.
    """

    profile: Callable[[np.ndarray], np.ndarray]
    t_nodes: np.ndarray
    t_weights: np.ndarray
    name: str = ""


def unit_damping() -> DampingProfile:
    return DampingProfile(lambda E: np.ones_like(np.asarray(E, dtype=float)), np.zeros(1), np.ones(1), "one")


def gaussian_damping(n_t: int = 160) -> DampingProfile:
    """exp(-E^2) = int dt g(t) exp(i t E) with g(t) = exp(-t^2/4) / (2 sqrt(pi)), via Gauss-Hermite."""
    u, w = np.polynomial.hermite.hermgauss(n_t)
    return DampingProfile(lambda E: np.exp(-np.asarray(E, dtype=float) ** 2), 2.0 * u, w / np.sqrt(np.pi), "gauss")


def _energy_density(weights: np.ndarray, energies: np.ndarray, h: float, n_bins: int) -> np.ndarray:
    """Cloud-in-cell deposit of the complex measure sum_i weights_i delta(E - energies_i)."""
    x = energies / h
    k = np.floor(x).astype(int)
    frac = x - k
    out = np.zeros(n_bins + 1, dtype=complex)
    ok = k < n_bins
    np.add.at(out, k[ok], weights[ok] * (1 - frac[ok]))
    np.add.at(out, k[ok] + 1, weights[ok] * frac[ok])
    return out[:n_bins]


def smoothing_identity_check(f: MomentumFunction, g: MomentumFunction, damp: DampingProfile, m: float,
                             q: QuadratureScheme, *, N: int = 8, e_max: float | None = None, h: float = 5e-4,
                             return_sides: bool = False):
    """|<W(g) Omega, damp(H) W(f) Omega> - int dt g^(t) <W(g) Omega, W(tau_t f) Omega>|.

    The first term is evaluated sector by sector on the truncated coherent
    vectors: the n-particle contribution is ``(1/n!) int damp d mu^{*n}``
    with ``mu`` the energy distribution of ``conj(xi_g) xi_f``.  The second
    term uses Gaussian overlaps of time-translated Weyl operators.
    """
    from .vacuum import WeylLabel, coherent_overlap

    f, g = f.memoized(), g.memoized()
    xf = mass_norm_sq(f, m, q)
    xg = mass_norm_sq(g, m, q)
    dens = np.conj(one_particle(g, m, q.nodes)) * one_particle(f, m, q.nodes)
    energies = dispersion(m, q.nodes)
    if e_max is None:
        # n-particle energies reach N times the single-particle support
        weight = np.abs(q.weights * dens)
        e_max = N * float(np.max(energies[weight > 1e-17 * weight.sum()], initial=1.0))
    n_bins = int(np.ceil(e_max / h)) + 1
    mu = _energy_density(q.weights * dens, energies, h, n_bins)
    grid = h * np.arange(n_bins)
    dvals = damp.profile(grid)
    size = 1 << int(np.ceil(np.log2(2 * n_bins)))
    mu_hat = np.fft.fft(mu, size)
    conv = np.zeros(n_bins, dtype=complex)
    conv[0] = 1.0
    lhs = 0.0 + 0.0j
    for n in range(N + 1):
        if n > 0:
            conv = np.fft.ifft(np.fft.fft(conv, size) * mu_hat)[:n_bins]
        lhs += np.dot(dvals, conv) / factorial(n)
    lhs *= np.exp(-0.5 * (xf + xg))

    rhs = 0.0 + 0.0j
    for t, wt in zip(damp.t_nodes, damp.t_weights):
        rhs += wt * coherent_overlap(WeylLabel(g, m), WeylLabel(translate_time(f, float(t), m), m), q)
    val = float(abs(lhs - rhs))
    if return_sides:
        return val, complex(lhs), complex(rhs)
    return val
