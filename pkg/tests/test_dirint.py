import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import block_diag

from scalinglab import dirint
from scalinglab.dirint import (DirectIntegral, FiberFamily, FiniteCStarAlgebra, FinitePointMeasure,
                               FundamentalFamilySpan, OperatorField, State, VectorField)
from scalinglab.errors import NotAState, NotConditionalExpectation, NotDecomposable, NotIsometric, \
    PreconditionViolated


def block_algebra(sizes, rng):
    gens = []
    for k, n in enumerate(sizes):
        blocks = [np.zeros((d, d)) for d in sizes]
        blocks[k] = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        gens.append(block_diag(*blocks))
    return FiniteCStarAlgebra(gens)


@pytest.fixture
def two_point():
    sp = FinitePointMeasure((0, 1), {0: 0.25, 1: 0.75})
    ff = FiberFamily({0: 2, 1: 1})
    return DirectIntegral(sp, ff)


class TestMeasureAndFields:
    def test_rejects_zero_weight(self):
        with pytest.raises(ValueError):
            FinitePointMeasure((0, 1), {0: 1.0, 1: 0.0})

    def test_rejects_duplicate_points(self):
        with pytest.raises(ValueError):
            FinitePointMeasure((0, 0), {0: 1.0})

    def test_uniform_and_normalized(self):
        sp = FinitePointMeasure.uniform("abc", total=3.0)
        assert sp.total == pytest.approx(3.0)
        assert sp.normalized().total == pytest.approx(1.0)

    def test_fiber_dimension(self):
        with pytest.raises(ValueError):
            FiberFamily({0: 0})

    def test_inner_product(self):
        sp = FinitePointMeasure((0, 1), {0: 0.5, 1: 2.0})
        a = VectorField({0: np.array([1, 1j]), 1: np.array([2.0])})
        b = VectorField({0: np.array([1, 0]), 1: np.array([1j])})
        assert dirint.di_inner(a, b, sp) == pytest.approx(0.5 + 2.0 * 2j)

    def test_embed_is_isometric(self, two_point, rng):
        a = VectorField({0: rng.normal(size=2) + 0j, 1: rng.normal(size=1) + 0j})
        b = VectorField({0: rng.normal(size=2) + 1j, 1: rng.normal(size=1) + 0j})
        assert np.vdot(two_point.embed(a), two_point.embed(b)) == pytest.approx(dirint.di_inner(a, b, two_point.sp))
        back = two_point.field(two_point.embed(a))
        assert np.allclose(back(0), a(0)) and np.allclose(back(1), a(1))

    def test_closure_of_family(self):
        sp = FinitePointMeasure.uniform((0, 1))
        ff = FiberFamily({0: 3, 1: 2})
        gens = (VectorField({0: np.array([1.0, 0, 0]), 1: np.array([1.0, 1.0])}),
                VectorField({0: np.array([2.0, 0, 0]), 1: np.array([0.0, 1.0])}))
        bases = dirint.integrable_closure(FundamentalFamilySpan(gens), sp, ff)
        assert bases[0].shape == (3, 1)
        assert bases[1].shape == (2, 2)
        assert DirectIntegral(sp, ff, FundamentalFamilySpan(gens)).dim == 3

    def test_closure_rejects_bad_field(self):
        sp = FinitePointMeasure.uniform((0,))
        ff = FiberFamily({0: 2})
        with pytest.raises(ValueError):
            dirint.integrable_closure(FundamentalFamilySpan((VectorField({0: np.ones(3)}),)), sp, ff)


class TestDecomposable:
    def test_diagonal_is_decomposable(self, two_point):
        M = two_point.diagonal({0: 2.0, 1: -1j})
        assert dirint.is_decomposable(M, two_point)

    def test_round_trip(self, two_point, rng):
        blocks = OperatorField({0: rng.normal(size=(2, 2)) + 0j, 1: np.array([[3.0 + 0j]])})
        B = two_point.assemble(blocks)
        out = dirint.decompose_operator(B, two_point)
        assert np.allclose(out(0), blocks(0)) and np.allclose(out(1), blocks(1))

    def test_mixing_rejected(self, two_point):
        B = np.zeros((3, 3), dtype=complex)
        B[0, 2] = 1.0
        assert not dirint.is_decomposable(B, two_point)
        with pytest.raises(NotDecomposable):
            dirint.decompose_operator(B, two_point)

    def test_wrong_shape(self, two_point):
        with pytest.raises(ValueError):
            dirint.is_decomposable(np.eye(2), two_point)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_routes_agree(self, seed):
        rng = np.random.default_rng(seed)
        di = dirint.random_configuration(rng)
        B = dirint.random_operator(rng, di)
        assert dirint.commutes_with_diagonals(B, di) == dirint.is_block_diagonal(B, di)

    def test_commutant_of_diagonals(self):
        # the diagonal algebra is maximal abelian exactly when all fibers are one dimensional
        rng = np.random.default_rng(3)
        for dims in ({0: 1, 1: 1, 2: 1}, {0: 2, 1: 1}, {0: 3, 1: 2}):
            sp = FinitePointMeasure.uniform(tuple(dims))
            di = DirectIntegral(sp, FiberFamily(dims))
            mats = [di.indicator(z) for z in sp.points]
            assert dirint.commutant_dimension(mats) == sum(d * d for d in dims.values())
        di = DirectIntegral(FinitePointMeasure.uniform((0, 1, 2)), FiberFamily({0: 1, 1: 1, 2: 1}))
        M = di.diagonal({z: complex(rng.normal()) for z in range(3)})
        assert dirint.commutant_dimension([M]) == 3


class TestAlgebra:
    def test_block_algebra(self, rng):
        alg = block_algebra([2, 3], rng)
        assert alg.dim == 13
        assert len(alg.center_basis()) == 2
        projs = alg.central_projections()
        assert len(projs) == 2
        assert np.allclose(sum(projs), np.eye(5))

    def test_full_matrix_algebra(self, rng):
        alg = FiniteCStarAlgebra([rng.normal(size=(3, 3))])
        assert alg.dim == 9
        assert len(alg.central_projections()) == 1

    def test_abelian_algebra(self):
        alg = FiniteCStarAlgebra([np.diag([1.0, 2.0, 2.0])])
        assert alg.dim == 2
        assert len(alg.central_projections()) == 2

    def test_no_generators(self):
        with pytest.raises(ValueError):
            FiniteCStarAlgebra([])


class TestGNS:
    def test_faithful_state(self, rng):
        alg = block_algebra([2, 1], rng)
        state = State.from_density(alg, dirint.random_density(rng, 3))
        rep = dirint.gns_construct(alg, state)
        assert rep.dim == alg.dim
        a, b = alg.basis[1], alg.basis[2]
        assert np.allclose(rep.pi(a @ b), rep.pi(a) @ rep.pi(b), atol=1e-10)
        assert np.allclose(rep.pi(a.conj().T), rep.pi(a).conj().T, atol=1e-10)

    def test_pure_state_dimension(self, rng):
        alg = FiniteCStarAlgebra([rng.normal(size=(3, 3))])
        rho = dirint.random_density(rng, 3, rank=1)
        assert dirint.gns_construct(alg, State.from_density(alg, rho)).dim == 3

    def test_not_normalized(self, rng):
        alg = FiniteCStarAlgebra([np.diag([1.0, 2.0])])
        with pytest.raises(NotAState):
            dirint.gns_construct(alg, State.from_density(alg, np.eye(2)))

    def test_not_positive(self):
        alg = FiniteCStarAlgebra([np.diag([1.0, 2.0])])
        with pytest.raises(NotAState):
            dirint.gns_construct(alg, State.from_density(alg, np.diag([1.5, -0.5])))


class TestCentralDecomposition:
    @pytest.mark.parametrize("sizes", [[1, 1], [2, 3], [1, 2, 2]])
    def test_round_trip(self, rng, sizes):
        alg = block_algebra(sizes, rng)
        state = State.from_density(alg, dirint.random_density(rng, alg.n))
        E = dirint.state_expectation(alg, state)
        comps, dec = dirint.full_decomposition(alg, state, E)
        assert len(comps) == len(sizes)
        assert sum(c.weight for c in comps) == pytest.approx(1.0)
        assert dirint.reconstruction_residual(state, E, comps) <= 1e-10
        W = dec.unitary
        assert np.linalg.norm(W.conj().T @ W - np.eye(W.shape[0])) <= 1e-10
        assert dirint.intertwining_residual(dec) <= 1e-10

    def test_zero_weight_point_dropped(self, rng):
        alg = block_algebra([2, 1], rng)
        rho = np.zeros((3, 3), dtype=complex)
        rho[:2, :2] = dirint.random_density(rng, 2)
        comps = dirint.decompose_state(alg, State.from_density(alg, rho), dirint.trace_expectation(alg))
        assert len(comps) == 1

    def test_trace_expectation_with_generic_state(self, rng):
        alg = block_algebra([2, 2], rng)
        state = State.from_density(alg, dirint.random_density(rng, 4))
        with pytest.raises(NotIsometric):
            dirint.full_decomposition(alg, state, dirint.trace_expectation(alg))

    def test_trace_expectation_with_trace_state(self, rng):
        alg = block_algebra([2, 2], rng)
        state = State.from_density(alg, np.eye(4) / 4)
        comps, dec = dirint.full_decomposition(alg, state, dirint.trace_expectation(alg))
        assert dirint.intertwining_residual(dec) <= 1e-10

    def test_not_an_expectation(self, rng):
        alg = block_algebra([2, 1], rng)
        with pytest.raises(NotConditionalExpectation):
            dirint.check_conditional_expectation(alg, lambda a: a)
        with pytest.raises(NotConditionalExpectation):
            dirint.check_conditional_expectation(alg, lambda a: 2 * dirint.trace_expectation(alg)(a))

    def test_symmetry(self, rng):
        alg = block_algebra([2, 2], rng)
        state = State.from_density(alg, np.eye(4) / 4)
        _, dec = dirint.full_decomposition(alg, state, dirint.trace_expectation(alg))
        # conjugation by a block unitary u preserves the trace state; U0 [a] = [u a u^*]
        u = block_diag(np.linalg.qr(rng.normal(size=(2, 2)) + 0j)[0], np.linalg.qr(rng.normal(size=(2, 2)) + 0j)[0])
        g = dec.gns0
        U0 = np.column_stack([g.vector(u @ alg.element(g.pullback[:, k]) @ u.conj().T) for k in range(g.dim)])
        field = dirint.decompose_symmetry(U0, dec)
        assert np.allclose(dec.integral.assemble(field), dec.unitary @ U0 @ dec.unitary.conj().T, atol=1e-12)

    def test_symmetry_not_unitary(self, rng):
        alg = block_algebra([1, 1], rng)
        state = State.from_density(alg, np.eye(2) / 2)
        _, dec = dirint.full_decomposition(alg, state)
        with pytest.raises(PreconditionViolated):
            dirint.decompose_symmetry(2 * np.eye(dec.unitary.shape[0]), dec)


class TestCocycles:
    @pytest.mark.parametrize("order", [2, 3, 4, 5])
    def test_shift(self, order):
        assert dirint.cocycle_check(dirint.cyclic_system(order)).passed

    @pytest.mark.parametrize("order", [2, 3, 4, 5])
    def test_coboundary(self, order):
        assert dirint.cocycle_check(dirint.coboundary_system(order, 2, seed=order)).passed

    @pytest.mark.parametrize("order", [2, 3, 4, 5])
    def test_perturbation_matches_prediction(self, order):
        sys_ = dirint.coboundary_system(order, 2, seed=order)
        rep = dirint.cocycle_check(dirint.perturb(sys_, 1, order - 1, np.exp(0.7j)))
        predicted = dirint.predicted_composition_failures(sys_, 1, order - 1)
        assert set(rep.composition) == predicted
        assert len(predicted) == 3 * order - 4

    def test_non_invariant_measure(self):
        rep = dirint.cocycle_check(dirint.cyclic_system(3, weights=[0.2, 0.3, 0.5]))
        assert rep.invariance and not rep.passed

    def test_non_unitary_fiber_map(self):
        sys_ = dirint.cyclic_system(2, unitaries=lambda g, z: np.array([[2.0 if g else 1.0]]))
        rep = dirint.cocycle_check(sys_)
        assert rep.unitarity

    def test_total_operator_unitary(self):
        sys_ = dirint.coboundary_system(4, 2, seed=1)
        for g in range(4):
            T = sys_.total_operator(g)
            assert np.allclose(T.conj().T @ T, np.eye(T.shape[0]), atol=1e-12)


def test_commutant_of_zero_operator():
    assert dirint.commutant_dimension([np.zeros((3, 3))]) == 9
