"""Finite-dimensional direct integrals, GNS representations and central decompositions.

A direct integral over a finite measure space is the weighted direct sum
``(+)_z H_z`` with the isometric embedding ``chi -> (sqrt(w(z)) chi(z))_z``.
Decomposable operators are block diagonal, diagonalizable ones are scalar on
each block.  Finite C*-algebras are spans of matrices; states are stored by
their values on an explicit orthonormal (Hilbert-Schmidt) basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np
from scipy.linalg import orth

from .errors import (NotAState, NotConditionalExpectation, NotDecomposable, NotIsometric,
                     PreconditionViolated, RouteMismatch)

PSD_FLOOR = 1e-12
EXACT_TOL = 1e-10


@dataclass(frozen=True)
class FinitePointMeasure:
    points: tuple
    weight: Mapping[Hashable, float]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if len(set(self.points)) != len(self.points):
            raise ValueError("points must be distinct")
        for z in self.points:
            if z not in self.weight or not self.weight[z] > 0:
                raise ValueError(f"weight at {z!r} must be positive")

    @classmethod
    def uniform(cls, points: Sequence, total: float = 1.0) -> "FinitePointMeasure":
        points = tuple(points)
        return cls(points, {z: total / len(points) for z in points})

    @property
    def total(self) -> float:
        return float(sum(self.weight[z] for z in self.points))

    def normalized(self) -> "FinitePointMeasure":
        t = self.total
        return FinitePointMeasure(self.points, {z: self.weight[z] / t for z in self.points})


@dataclass(frozen=True)
class FiberFamily:
    dim: Mapping[Hashable, int]

    def __post_init__(self):
        for z, d in self.dim.items():
            if int(d) < 1:
                raise ValueError(f"fiber at {z!r} must have dimension >= 1")


@dataclass(frozen=True)
class VectorField:
    at: Mapping[Hashable, np.ndarray]

    def __call__(self, z) -> np.ndarray:
        return np.asarray(self.at[z], dtype=complex)


@dataclass(frozen=True)
class FundamentalFamilySpan:
    generators: tuple = ()


@dataclass(frozen=True)
class OperatorField:
    at: Mapping[Hashable, np.ndarray]

    def __call__(self, z) -> np.ndarray:
        return np.asarray(self.at[z], dtype=complex)


def _check_field(v: VectorField, sp: FinitePointMeasure, ff: FiberFamily) -> None:
    for z in sp.points:
        if z not in v.at:
            raise ValueError(f"vector field undefined at {z!r}")
        if np.shape(v.at[z]) != (ff.dim[z],):
            raise ValueError(f"vector field has the wrong dimension at {z!r}")


def integrable_closure(gamma: FundamentalFamilySpan, sp: FinitePointMeasure,
                       ff: FiberFamily) -> dict:
    """Per-point subspaces S(z) = span{gamma(z)} as orthonormal column bases (dim(z) x k)."""
    out = {}
    for g in gamma.generators:
        _check_field(g, sp, ff)
    for z in sp.points:
        cols = [g(z) for g in gamma.generators]
        if cols:
            out[z] = orth(np.column_stack(cols), rcond=1e-12)
        else:
            out[z] = np.zeros((ff.dim[z], 0), dtype=complex)
    return out


def di_inner(a: VectorField, b: VectorField, sp: FinitePointMeasure) -> complex:
    """sum_z w(z) <a(z), b(z)>, linear in the second argument."""
    total = 0j
    for z in sp.points:
        az, bz = a(z), b(z)
        if az.shape != bz.shape:
            raise ValueError(f"incompatible fiber dimensions at {z!r}")
        total += sp.weight[z] * np.vdot(az, bz)
    return complex(total)


class DirectIntegral:
    """The weighted direct sum of the subspaces S(z) (full fibers when no family is given)."""

    def __init__(self, sp: FinitePointMeasure, ff: FiberFamily, gamma: FundamentalFamilySpan | None = None):
        self.sp, self.ff = sp, ff
        if gamma is None:
            self.bases = {z: np.eye(ff.dim[z], dtype=complex) for z in sp.points}
        else:
            self.bases = integrable_closure(gamma, sp, ff)
        self.slices = {}
        start = 0
        for z in sp.points:
            k = self.bases[z].shape[1]
            self.slices[z] = slice(start, start + k)
            start += k
        self.dim = start

    def embed(self, v: VectorField) -> np.ndarray:
        """chi -> (sqrt(w(z)) coordinates of chi(z) in S(z))_z; isometric on fields in S."""
        out = np.zeros(self.dim, dtype=complex)
        for z in self.sp.points:
            out[self.slices[z]] = np.sqrt(self.sp.weight[z]) * (self.bases[z].conj().T @ v(z))
        return out

    def field(self, x: np.ndarray) -> VectorField:
        """Inverse of ``embed`` on the total space."""
        x = np.asarray(x, dtype=complex)
        return VectorField({z: self.bases[z] @ x[self.slices[z]] / np.sqrt(self.sp.weight[z])
                            for z in self.sp.points})

    def indicator(self, z) -> np.ndarray:
        """M_{1_z}, multiplication by the indicator of the point z."""
        d = np.zeros(self.dim)
        d[self.slices[z]] = 1.0
        return np.diag(d).astype(complex)

    def diagonal(self, f: Mapping[Hashable, complex]) -> np.ndarray:
        """M_f, the diagonalizable operator multiplying the fiber at z by f(z)."""
        d = np.zeros(self.dim, dtype=complex)
        for z in self.sp.points:
            d[self.slices[z]] = f[z]
        return np.diag(d)

    def assemble(self, B: OperatorField) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for z in self.sp.points:
            out[self.slices[z], self.slices[z]] = B(z)
        return out


def _null_space(M: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Null space with a floor of ``tol`` on the singular-value cut.

    scipy's relative cut treats an all-zero constraint matrix as rank one.
    """
    _, sv, vh = np.linalg.svd(M)
    cut = tol * max(1.0, float(sv[0]) if sv.size else 0.0)
    rank = int(np.sum(sv > cut))
    return vh[rank:].conj().T


def _tol(B: np.ndarray) -> float:
    return EXACT_TOL * (1.0 + float(np.max(np.abs(B), initial=0.0)))


def commutes_with_diagonals(B: np.ndarray, di: DirectIntegral) -> bool:
    tol = _tol(B)
    for z in di.sp.points:
        P = di.indicator(z)
        if np.max(np.abs(B @ P - P @ B), initial=0.0) > tol:
            return False
    return True


def is_block_diagonal(B: np.ndarray, di: DirectIntegral) -> bool:
    tol = _tol(B)
    mask = np.ones(B.shape, dtype=bool)
    for z in di.sp.points:
        mask[di.slices[z], di.slices[z]] = False
    return bool(np.max(np.abs(B[mask]), initial=0.0) <= tol)


def is_decomposable(B: np.ndarray, di: DirectIntegral) -> bool:
    """True iff B commutes with every M_{1_z}; the block test is run as a second route."""
    B = np.asarray(B, dtype=complex)
    if B.shape != (di.dim, di.dim):
        raise ValueError("operator does not act on the direct integral")
    a, b = commutes_with_diagonals(B, di), is_block_diagonal(B, di)
    if a != b:
        raise RouteMismatch("commutation and block tests disagree")
    return a


def decompose_operator(B: np.ndarray, di: DirectIntegral) -> OperatorField:
    B = np.asarray(B, dtype=complex)
    if not is_decomposable(B, di):
        raise NotDecomposable("operator mixes fibers")
    return OperatorField({z: B[di.slices[z], di.slices[z]].copy() for z in di.sp.points})


def commutant_dimension(mats: Sequence[np.ndarray]) -> int:
    """dim {X : X A = A X for all A in mats}, by a linear solve on vec(X)."""
    n = mats[0].shape[0]
    eye = np.eye(n)
    # vec(XA - AX) = (A^T kron 1 - 1 kron A) vec(X) with column-major vec
    rows = [np.kron(A.T, eye) - np.kron(eye, A) for A in mats]
    return int(_null_space(np.vstack(rows)).shape[1])


def random_configuration(rng: np.random.Generator, max_points: int = 4, max_dim: int = 3) -> DirectIntegral:
    k = int(rng.integers(1, max_points + 1))
    points = tuple(range(k))
    sp = FinitePointMeasure(points, {z: float(rng.uniform(0.1, 1.0)) for z in points})
    ff = FiberFamily({z: int(rng.integers(1, max_dim + 1)) for z in points})
    return DirectIntegral(sp, ff)


def random_operator(rng: np.random.Generator, di: DirectIntegral) -> np.ndarray:
    """Block-diagonal operator, optionally with one cross-point entry switched on."""
    B = np.zeros((di.dim, di.dim), dtype=complex)
    for z in di.sp.points:
        sl = di.slices[z]
        k = sl.stop - sl.start
        B[sl, sl] = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    if len(di.sp.points) > 1 and rng.random() < 0.5:
        z1, z2 = rng.choice(len(di.sp.points), size=2, replace=False)
        i = di.slices[di.sp.points[z1]].start
        j = di.slices[di.sp.points[z2]].start
        B[i, j] = rng.normal() + 1j * rng.normal()
    return B


# -- finite C*-algebras ------------------------------------------------------


class FiniteCStarAlgebra:
    """The *-algebra generated by square matrices, with the identity adjoined.

    ``basis`` is orthonormal for the Hilbert-Schmidt inner product, so
    coordinates are ``c_k(x) = tr(B_k^* x)``.
    """

    def __init__(self, generators: Sequence[np.ndarray], max_rounds: int = 20):
        gens = [np.asarray(g, dtype=complex) for g in generators]
        if not gens:
            raise ValueError("need at least one generator (use the identity for scalars)")
        n = gens[0].shape[0]
        if any(g.shape != (n, n) for g in gens):
            raise ValueError("generators must be square matrices of a common size")
        self.n = n
        self.generators = gens
        seed = [np.eye(n, dtype=complex)] + gens + [g.conj().T for g in gens]
        basis = self._orthonormal(seed)
        for _ in range(max_rounds):
            prods = [a @ b for a in basis for b in basis]
            new = self._orthonormal(basis + prods)
            if len(new) == len(basis):
                break
            basis = new
        else:
            raise RuntimeError("closure did not stabilise")
        self.basis = basis
        self._check_closed()

    @staticmethod
    def _orthonormal(mats: list) -> list:
        n = mats[0].shape[0]
        vecs = orth(np.column_stack([m.reshape(-1) for m in mats]), rcond=1e-10)
        return [vecs[:, k].reshape(n, n) for k in range(vecs.shape[1])]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coords(self, x: np.ndarray) -> np.ndarray:
        return np.array([np.vdot(b, x) for b in self.basis])

    def element(self, c: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(c), np.array(self.basis), axes=1)

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=complex)
        return bool(np.linalg.norm(x - self.element(self.coords(x))) <= tol * (1 + np.linalg.norm(x)))

    def _check_closed(self) -> None:
        for a in self.basis:
            if not self.contains(a.conj().T):
                raise AssertionError("basis is not closed under the adjoint")
            for b in self.basis:
                if not self.contains(a @ b):
                    raise AssertionError("basis is not closed under products")

    def left_multiplication(self, a: np.ndarray) -> np.ndarray:
        """Matrix of b -> a b in basis coordinates."""
        return np.column_stack([self.coords(a @ b) for b in self.basis])

    def center_basis(self) -> list:
        """Orthonormal basis of the center, by a null-space solve in coordinates."""
        rows = []
        for g in self.generators + [g.conj().T for g in self.generators]:
            rows.append(np.column_stack([(b @ g - g @ b).reshape(-1) for b in self.basis]))
        ns = _null_space(np.vstack(rows))
        return self._orthonormal([self.element(ns[:, k]) for k in range(ns.shape[1])])

    def central_projections(self, seed: int = 0) -> list:
        """Minimal central projections, from the spectrum of a generic self-adjoint central element."""
        zb = self.center_basis()
        rng = np.random.default_rng(seed)
        x = sum(rng.normal() * (b + b.conj().T) + rng.normal() * 1j * (b - b.conj().T) for b in zb)
        vals, vecs = np.linalg.eigh(x)
        groups: list[list[int]] = []
        for i, v in enumerate(vals):
            if groups and abs(v - vals[groups[-1][-1]]) <= 1e-8 * (1 + abs(v)):
                groups[-1].append(i)
            else:
                groups.append([i])
        projs = [vecs[:, g] @ vecs[:, g].conj().T for g in groups]
        # a generic combination separates the points of the spectrum; verify it did
        for p in projs:
            if not self.contains(p):
                raise AssertionError("spectral projection is not in the algebra")
            for b in zb:
                pb = p @ b
                lam = np.trace(pb) / np.trace(p)
                if np.linalg.norm(pb - lam * p) > 1e-8 * (1 + np.linalg.norm(b)):
                    raise AssertionError("central element is not constant on a spectral projection")
        return projs


@dataclass(frozen=True)
class State:
    """A linear functional given by its values on the algebra basis."""

    alg: FiniteCStarAlgebra
    values: np.ndarray

    def __call__(self, x: np.ndarray) -> complex:
        return complex(self.alg.coords(x) @ self.values)

    @classmethod
    def from_density(cls, alg: FiniteCStarAlgebra, rho: np.ndarray) -> "State":
        return cls(alg, np.array([np.trace(rho @ b) for b in alg.basis]))

    @classmethod
    def from_functional(cls, alg: FiniteCStarAlgebra, fn: Callable[[np.ndarray], complex]) -> "State":
        return cls(alg, np.array([fn(b) for b in alg.basis]))


def random_density(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    a = rng.normal(size=(n, rank or n)) + 1j * rng.normal(size=(n, rank or n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def gram_matrix(state: State) -> np.ndarray:
    """G_kl = omega(B_k^* B_l)."""
    alg = state.alg
    return np.array([[state(a.conj().T @ b) for b in alg.basis] for a in alg.basis])


@dataclass
class GNSRepresentation:
    alg: FiniteCStarAlgebra
    state: State
    embed: np.ndarray            # coordinates -> GNS Hilbert space (the class map a -> [a])
    pullback: np.ndarray         # right inverse of embed on the quotient
    omega: np.ndarray            # cyclic vector [1]

    @property
    def dim(self) -> int:
        return self.embed.shape[0]

    def pi(self, a: np.ndarray) -> np.ndarray:
        return self.embed @ self.alg.left_multiplication(a) @ self.pullback

    def vector(self, a: np.ndarray) -> np.ndarray:
        """pi(a) Omega = [a]."""
        return self.embed @ self.alg.coords(a)

    def representation_matrices(self) -> list:
        return [self.pi(b) for b in self.alg.basis]


def gns_construct(alg: FiniteCStarAlgebra, state: State) -> GNSRepresentation:
    """Quotient by the null ideal of <a, b> = omega(a^* b), left multiplication, Omega = [1]."""
    eye = np.eye(alg.n)
    if abs(state(eye) - 1) > EXACT_TOL:
        raise NotAState(f"omega(1) = {state(eye)} is not 1")
    G = gram_matrix(state)
    if np.max(np.abs(G - G.conj().T)) > 1e-9 * (1 + np.max(np.abs(G))):
        raise NotAState("Gram matrix is not Hermitian")
    G = 0.5 * (G + G.conj().T)
    vals, vecs = np.linalg.eigh(G)
    scale = max(1.0, float(vals.max()))
    if vals.min() < -PSD_FLOOR * scale:
        raise NotAState(f"Gram matrix has negative eigenvalue {vals.min():.3g}")
    keep = vals > 1e-10 * scale
    lam, V = vals[keep], vecs[:, keep]
    embed = np.sqrt(lam)[:, None] * V.conj().T
    pullback = V / np.sqrt(lam)[None, :]
    rep = GNSRepresentation(alg, state, embed, pullback, embed @ alg.coords(eye))
    for b in alg.basis:
        if abs(np.vdot(rep.omega, rep.pi(b) @ rep.omega) - state(b)) > EXACT_TOL * (1 + abs(state(b))):
            raise AssertionError("GNS vector does not reproduce the state")
    return rep


# -- central decomposition -----------------------------------------------------


def trace_expectation(alg: FiniteCStarAlgebra, seed: int = 0) -> Callable[[np.ndarray], np.ndarray]:
    """E(a) = sum_z tr(p_z a) / tr(p_z) p_z, the trace-preserving expectation onto the center."""
    projs = alg.central_projections(seed)
    return lambda a: sum(np.trace(p @ a) / np.trace(p).real * p for p in projs)


def state_expectation(alg: FiniteCStarAlgebra, state: State, seed: int = 0) -> Callable[[np.ndarray], np.ndarray]:
    """E(a) = sum_z omega(p_z a) / omega(p_z) p_z, the expectation leaving ``state`` invariant.

    Points with omega(p_z) = 0 use the normalized trace instead.
    """
    projs = alg.central_projections(seed)

    def E(a):
        out = 0
        for p in projs:
            w = state(p).real
            if w > EXACT_TOL:
                out = out + state(p @ a) / w * p
            else:
                out = out + np.trace(p @ a) / np.trace(p).real * p
        return out

    return E


def check_conditional_expectation(alg: FiniteCStarAlgebra, E: Callable, seed: int = 0,
                                  n_random: int = 8) -> None:
    """Positivity, unitality, idempotence and range in the center, on the basis and random elements."""
    eye = np.eye(alg.n)
    zb = alg.center_basis()
    center = FiniteCStarAlgebra(zb) if zb else None
    tol = 1e-9
    if np.linalg.norm(E(eye) - eye) > tol:
        raise NotConditionalExpectation("E(1) != 1")
    rng = np.random.default_rng(seed)
    samples = list(alg.basis) + [alg.element(rng.normal(size=alg.dim) + 1j * rng.normal(size=alg.dim))
                                 for _ in range(n_random)]
    for a in samples:
        ea = E(a)
        if center is None or not center.contains(ea, tol):
            raise NotConditionalExpectation("E(a) is not central")
        if np.linalg.norm(E(ea) - ea) > tol * (1 + np.linalg.norm(ea)):
            raise NotConditionalExpectation("E is not idempotent")
        pos = E(a.conj().T @ a)
        if np.linalg.eigvalsh(0.5 * (pos + pos.conj().T)).min() < -tol * (1 + np.linalg.norm(pos)):
            raise NotConditionalExpectation("E is not positive")
    for zc in zb:
        if np.linalg.norm(E(zc) - zc) > tol:
            raise NotConditionalExpectation("E does not fix the center")


@dataclass
class Component:
    point: int
    weight: float
    state: State
    projection: np.ndarray


def decompose_state(alg: FiniteCStarAlgebra, state: State, E: Callable, seed: int = 0) -> list[Component]:
    """Components omega_z(a) = omega(p_z E(a)) / w(z) over the minimal central projections.

    Points where the state vanishes carry no weight and are dropped, so the
    returned measure is strictly positive.
    """
    check_conditional_expectation(alg, E, seed)
    projs = alg.central_projections(seed)
    comps = []
    for z, p in enumerate(projs):
        w = state(p).real
        if w <= EXACT_TOL:
            continue
        vals = np.array([state(p @ E(b)) / w for b in alg.basis])
        comps.append(Component(z, float(w), State(alg, vals), p))
    return comps


def reconstruction_residual(state: State, E: Callable, comps: Sequence[Component]) -> float:
    """max over the basis of |sum_z w(z) omega_z(b) - omega(E(b))|."""
    alg = state.alg
    worst = 0.0
    for k, b in enumerate(alg.basis):
        lhs = sum(c.weight * c.state.values[k] for c in comps)
        worst = max(worst, abs(lhs - state(E(b))))
    return float(worst)


def components_measure(comps: Sequence[Component]) -> FinitePointMeasure:
    return FinitePointMeasure(tuple(c.point for c in comps), {c.point: c.weight for c in comps})


@dataclass
class Decomposition:
    unitary: np.ndarray
    integral: DirectIntegral
    gns0: GNSRepresentation
    parts: list


def build_decomposition_unitary(gns0: GNSRepresentation, parts: Sequence[GNSRepresentation],
                                sp: FinitePointMeasure) -> Decomposition:
    """W: pi_0(a) Omega_0 -> (z -> pi_z(a) Omega_z), as a matrix onto the weighted direct sum."""
    if len(parts) != len(sp.points):
        raise ValueError("one GNS representation per point is required")
    ff = FiberFamily({z: g.dim for z, g in zip(sp.points, parts)})
    di = DirectIntegral(sp, ff)
    # images of the algebra basis classes
    M = np.vstack([np.sqrt(sp.weight[z]) * g.embed for z, g in zip(sp.points, parts)])
    W = M @ gns0.pullback
    if np.linalg.norm(W @ gns0.embed - M) > EXACT_TOL * (1 + np.linalg.norm(M)):
        raise NotIsometric("correspondence is not well defined on the null ideal")
    if W.shape[0] != W.shape[1]:
        raise NotIsometric(f"dimensions differ: {W.shape[1]} -> {W.shape[0]}")
    eye = np.eye(W.shape[0])
    if max(np.linalg.norm(W.conj().T @ W - eye), np.linalg.norm(W @ W.conj().T - eye)) > EXACT_TOL:
        raise NotIsometric("decomposition map is not unitary")
    return Decomposition(W, di, gns0, list(parts))


def intertwining_residual(dec: Decomposition) -> float:
    """max over the basis of ||W pi_0(a) W^* - (+)_z pi_z(a)||."""
    W = dec.unitary
    worst = 0.0
    for b in dec.gns0.alg.basis:
        blocks = OperatorField({z: g.pi(b) for z, g in zip(dec.integral.sp.points, dec.parts)})
        diff = W @ dec.gns0.pi(b) @ W.conj().T - dec.integral.assemble(blocks)
        worst = max(worst, float(np.linalg.norm(diff)))
    return worst


def decompose_symmetry(U0: np.ndarray, dec: Decomposition) -> OperatorField:
    """Per-point unitaries U_z with W U_0 W^* = (+)_z U_z."""
    U0 = np.asarray(U0, dtype=complex)
    if np.linalg.norm(U0.conj().T @ U0 - np.eye(U0.shape[0])) > EXACT_TOL:
        raise PreconditionViolated("U0 is not unitary")
    V = dec.unitary @ U0 @ dec.unitary.conj().T
    return decompose_operator(V, dec.integral)


def full_decomposition(alg: FiniteCStarAlgebra, state: State, E: Callable | None = None,
                       seed: int = 0) -> tuple[list[Component], Decomposition]:
    """decompose_state followed by the GNS constructions and the decomposition unitary."""
    E = E or state_expectation(alg, state, seed)
    comps = decompose_state(alg, state, E, seed)
    parts = [gns_construct(alg, c.state) for c in comps]
    return comps, build_decomposition_unitary(gns_construct(alg, state), parts, components_measure(comps))


# -- dilation cocycles on finite toy systems --------------------------------


@dataclass
class ToyDilationSystem:
    """Z_k acting on the points of a measure, with fiber unitaries U(g, z): H_z -> H_{g.z}."""

    order: int
    sp: FinitePointMeasure
    ff: FiberFamily
    act: Mapping[tuple, Hashable]
    U: dict

    def mul(self, g: int, h: int) -> int:
        return (g + h) % self.order

    def inv(self, g: int) -> int:
        return (-g) % self.order

    def total_operator(self, g: int) -> np.ndarray:
        """(U(g) chi)(g.z) = U(g, z) chi(z) on the weighted direct sum."""
        di = DirectIntegral(self.sp, self.ff)
        out = np.zeros((di.dim, di.dim), dtype=complex)
        for z in self.sp.points:
            gz = self.act[(g, z)]
            scale = np.sqrt(self.sp.weight[gz] / self.sp.weight[z])
            out[di.slices[gz], di.slices[z]] = scale * self.U[(g, z)]
        return out


def cyclic_system(order: int, n_points: int | None = None, dim: int = 1,
                  weights: Sequence[float] | None = None, step: int = 1,
                  unitaries: Callable | None = None) -> ToyDilationSystem:
    """Z_order acting on n_points by z -> z + step g (mod n_points), identity fiber maps by default."""
    n = n_points or order
    points = tuple(range(n))
    sp = FinitePointMeasure(points, {z: (weights[z] if weights else 1.0 / n) for z in points})
    ff = FiberFamily({z: dim for z in points})
    act = {(g, z): (z + step * g) % n for g in range(order) for z in points}
    U = {}
    for g in range(order):
        for z in points:
            U[(g, z)] = np.eye(dim, dtype=complex) if unitaries is None else unitaries(g, z)
    return ToyDilationSystem(order, sp, ff, act, U)


def coboundary_system(order: int, dim: int, seed: int = 0) -> ToyDilationSystem:
    """Cyclic shift with U(g, z) = V(g.z) V(z)^*, a cocycle for any unitaries V."""
    rng = np.random.default_rng(seed)
    V = {}
    for z in range(order):
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        V[z], _ = np.linalg.qr(a)
    return cyclic_system(order, dim=dim, unitaries=lambda g, z: V[(z + g) % order] @ V[z].conj().T)


def perturb(sys: ToyDilationSystem, g0: int, z0, phase: complex) -> ToyDilationSystem:
    U = dict(sys.U)
    U[(g0, z0)] = phase * U[(g0, z0)]
    return ToyDilationSystem(sys.order, sys.sp, sys.ff, sys.act, U)


def predicted_composition_failures(sys: ToyDilationSystem, g0: int, z0) -> set:
    """Triples (g', g, z) whose composition law breaks when U(g0, z0) gets a generic phase.

    The phase appears on the left as often as (g, z) = (g0, z0) and
    (g', g.z) = (g0, z0) hold, on the right once if (g' g, z) = (g0, z0);
    the law fails exactly where the two counts differ.
    """
    out = set()
    for gp in range(sys.order):
        for g in range(sys.order):
            for z in sys.sp.points:
                left = int((g, z) == (g0, z0)) + int((gp, sys.act[(g, z)]) == (g0, z0))
                right = int((sys.mul(gp, g), z) == (g0, z0))
                if left != right:
                    out.add((gp, g, z))
    return out


@dataclass
class CocycleReport:
    invariance: list = field(default_factory=list)
    identity: list = field(default_factory=list)
    unitarity: list = field(default_factory=list)
    adjoint: list = field(default_factory=list)
    composition: list = field(default_factory=list)
    intertwining: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(getattr(self, k) for k in self.__dataclass_fields__)

    def counts(self) -> dict:
        return {k: len(getattr(self, k)) for k in self.__dataclass_fields__}


def cocycle_check(sys: ToyDilationSystem, tol: float = 1e-12, seed: int = 0) -> CocycleReport:
    rep = CocycleReport()
    pts = sys.sp.points
    for g in range(sys.order):
        if sorted(sys.act[(g, z)] for z in pts) != sorted(pts):
            raise ValueError(f"action of {g} is not a bijection")
    for g in range(sys.order):
        for z in pts:
            gz = sys.act[(g, z)]
            if abs(sys.sp.weight[gz] - sys.sp.weight[z]) > tol:
                rep.invariance.append((g, z))
            u = sys.U[(g, z)]
            if np.linalg.norm(u.conj().T @ u - np.eye(u.shape[1])) > tol:
                rep.unitarity.append((g, z))
            if np.linalg.norm(u.conj().T - sys.U[(sys.inv(g), gz)]) > tol:
                rep.adjoint.append((g, z))
    for z in pts:
        if sys.act[(0, z)] != z or np.linalg.norm(sys.U[(0, z)] - np.eye(sys.ff.dim[z])) > tol:
            rep.identity.append(z)
    for gp in range(sys.order):
        for g in range(sys.order):
            for z in pts:
                lhs = sys.U[(gp, sys.act[(g, z)])] @ sys.U[(g, z)]
                if sys.act[(gp, sys.act[(g, z)])] != sys.act[(sys.mul(gp, g), z)] or \
                        np.linalg.norm(lhs - sys.U[(sys.mul(gp, g), z)]) > tol:
                    rep.composition.append((gp, g, z))
    # total-space operators move multiplication operators along the action
    di = DirectIntegral(sys.sp, sys.ff)
    rng = np.random.default_rng(seed)
    f = {z: complex(rng.normal(), rng.normal()) for z in pts}
    for g in range(sys.order):
        T = sys.total_operator(g)
        moved = {sys.act[(g, z)]: f[z] for z in pts}
        if np.linalg.norm(T @ di.diagonal(f) - di.diagonal(moved) @ T) > tol * 10:
            rep.intertwining.append(g)
    return rep
