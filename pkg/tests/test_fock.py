import numpy as np
import pytest

from scalinglab.cli import expansion_data
from scalinglab.conventions import field_kernel
from scalinglab.cutoff import smooth_bump, smoothstep5
from scalinglab.errors import ContractionOverflow
from scalinglab.fock import (FockVector, MultiIndex, Pairing, SigmaContext, SingleParticleVector, WickField,
                             apply_energy_damping, chi_norm, coherent_truncated, expansion_partial_sum,
                             gaussian_damping, inner_product, iter_multi_indices, leg_labels, norm,
                             one_particle_vector, phi_matrix_element, sigma_coefficient, sigma_commutator_oracle,
                             sigma_scheme, smoothing_identity_check, unit_damping, weyl_matrix_element)
from scalinglab.testfn import dispersion, gaussian, mass_norm_sq
from scalinglab.vacuum import WeylLabel, weyl_expectation


def gauss_mode(m, a=1.0, shift=0.0):
    return SingleParticleVector(lambda p: np.exp(-a * np.sum((p - shift) ** 2, axis=-1)), m, f"g{a}")


@pytest.fixture(scope="module")
def qs():
    return sigma_scheme(3)


class TestInnerProduct:
    def test_vacuum(self, q3):
        v = FockVector.vacuum(1.0)
        assert inner_product(v, v, q3) == 1.0

    def test_one_particle_gaussian(self, q3):
        # int exp(-2 p^2) d^3p = (pi/2)^(3/2)
        v = FockVector.particles([gauss_mode(1.0)])
        assert inner_product(v, v, q3).real == pytest.approx((np.pi / 2) ** 1.5, rel=1e-9)

    def test_two_particle_permanent(self, q3):
        e1, e2 = gauss_mode(1.0, 1.0), gauss_mode(1.0, 0.5, 0.3)
        pr = Pairing(q3)
        v = FockVector.particles([e1, e2])
        expected = pr(e1, e1) * pr(e2, e2) + abs(pr(e1, e2)) ** 2
        assert inner_product(v, v, q3) == pytest.approx(expected, rel=1e-12)

    def test_orthogonal_sectors(self, q3):
        e = gauss_mode(1.0)
        assert inner_product(FockVector.particles([e]), FockVector.particles([e, e]), q3) == 0

    def test_mass_mismatch(self, q3):
        with pytest.raises(ValueError):
            inner_product(FockVector.vacuum(0.0), FockVector.vacuum(1.0), q3)

    def test_ccr(self, q3):
        # <a*(e) Omega, a*(g) Omega> - <a(e)... > reduces to <e, g> on the vacuum
        e, g = gauss_mode(1.0, 1.0), gauss_mode(1.0, 0.7, 0.2)
        pr = Pairing(q3)
        v = FockVector.vacuum(1.0).create(g).annihilate(e, pr)
        assert inner_product(FockVector.vacuum(1.0), v, q3) == pytest.approx(pr(e, g), rel=1e-14)


class TestDamping:
    def test_single_mode(self, q3):
        # ||e^-bH a*(g) Omega||^2 with g = 1/omega-like: use g(p) = exp(-p^2) at m = 0
        beta = 0.8
        e = gauss_mode(0.0)
        v = apply_energy_damping(FockVector.particles([e]), beta)
        expected = q3.integrate(np.exp(-2 * q3.radii ** 2 - 2 * beta * q3.radii))
        assert norm(v, q3) ** 2 == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    def test_exponential_mode(self, q3, beta):
        # ||e^-bH a*(e^-omega) Omega||^2 = 4 pi int p^2 e^-2(1+b)p dp = pi / (1+b)^3
        e = SingleParticleVector(lambda p: np.exp(-dispersion(0.0, p)), 0.0)
        v = apply_energy_damping(FockVector.particles([e]), beta)
        assert norm(v, q3) ** 2 == pytest.approx(np.pi / (1 + beta) ** 3, rel=1e-8)

    def test_zero_beta(self):
        v = FockVector.vacuum(1.0)
        assert apply_energy_damping(v, 0.0) is v

    def test_negative_beta(self):
        with pytest.raises(ValueError):
            apply_energy_damping(FockVector.vacuum(), -1.0)


class TestCoherent:
    def test_norm_and_tail(self, q3, mixed3):
        v = coherent_truncated(mixed3, 1.0, 6, q3)
        assert norm(v, q3) ** 2 + v.tail_bound == pytest.approx(1.0, abs=1e-12)

    def test_vacuum_overlap(self, q3, mixed3):
        v = coherent_truncated(mixed3, 1.0, 8, q3)
        expected = weyl_expectation(WeylLabel(mixed3, 1.0), q3)
        assert inner_product(FockVector.vacuum(1.0), v, q3) == pytest.approx(expected, rel=1e-12)

    def test_weyl_matrix_element_matches(self, q3, mixed3):
        v = coherent_truncated(mixed3, 1.0, 10, q3)
        e = gauss_mode(1.0, 0.5)
        bra = FockVector.particles([e])
        assert weyl_matrix_element(bra, FockVector.vacuum(1.0), mixed3, q3) == pytest.approx(
            inner_product(bra, v, q3), rel=1e-10)

    def test_negative_cutoff(self, q3, mixed3):
        with pytest.raises(ValueError):
            coherent_truncated(mixed3, 1.0, -1, q3)


class TestWeylMatrixElement:
    def test_one_particle_diagonal(self, q3, mixed3):
        # <e, W(f) e> = exp(-|xi|^2/2) (<e, e> - |<xi, e>|^2)
        e = gauss_mode(1.0, 0.6)
        v = FockVector.particles([e])
        vac = FockVector.vacuum(1.0)
        pr = Pairing(q3)
        xi = one_particle_vector(mixed3, 1.0)
        x = mass_norm_sq(mixed3, 1.0, q3)
        expected = np.exp(-x / 2) * (pr(e, e) - abs(pr(xi, e)) ** 2)
        assert weyl_matrix_element(v, v, mixed3, q3) == pytest.approx(expected, rel=1e-12)
        assert weyl_matrix_element(vac, vac, mixed3, q3) == pytest.approx(np.exp(-x / 2))


class TestWickFields:
    def test_leg_count(self):
        assert len(leg_labels(3, 0)) == 1
        assert len(leg_labels(3, 1)) == 1 + 1 + 3
        assert all(sum(leg) <= 2 for leg in leg_labels(3, 2))

    def test_multi_index_count(self):
        assert sum(1 for _ in iter_multi_indices(2, 3, 0)) == 1
        assert sum(1 for _ in iter_multi_indices(1, 3, 2)) == len(leg_labels(3, 2))

    def test_invalid_leg(self):
        with pytest.raises(ValueError):
            MultiIndex(((2, 0, 0, 0),))
        with pytest.raises(ValueError):
            WickField(2, MultiIndex(((0, 0, 0, 0),)))

    def test_phi1_is_field_pairing(self, q3):
        m = 1.0
        leg = (0, 1, 0, 0)
        e = gauss_mode(m, 0.7, 0.2)
        w = WickField(1, MultiIndex((leg,)))
        got = phi_matrix_element(w, FockVector.particles([e]), FockVector.vacuum(m), m, q3)
        kappa = SingleParticleVector(lambda p: field_kernel(leg, m, p), m)
        assert got == pytest.approx(Pairing(q3)(e, kappa), rel=1e-14)

    def test_wick_ordering_vacuum(self, q3):
        w = WickField(2, MultiIndex.zero(2, 3))
        vac = FockVector.vacuum(1.0)
        assert phi_matrix_element(w, vac, vac, 1.0, q3) == 0

    def test_two_particle_element(self, q3):
        # <a*(e1) a*(e2) Omega, :phi phi: Omega> = 2 <e1, k><e2, k>
        m = 1.0
        e1, e2 = gauss_mode(m, 0.7), gauss_mode(m, 0.4, 0.1)
        legs = MultiIndex.zero(2, 3)
        pr = Pairing(q3)
        k = SingleParticleVector(lambda p: field_kernel((0, 0, 0, 0), m, p), m)
        got = phi_matrix_element(WickField(2, legs), FockVector.particles([e1, e2]), FockVector.vacuum(m), m, q3)
        assert got == pytest.approx(2 * pr(e1, k) * pr(e2, k), rel=1e-12)

    def test_overflow(self, q3):
        m = 1.0
        e = gauss_mode(m)
        bra = FockVector.particles([e] * 3)
        ket = FockVector.particles([e] * 3)
        with pytest.raises(ContractionOverflow, match="phi_"):
            phi_matrix_element(WickField(2, MultiIndex.zero(2, 3)), bra, ket, m, q3, budget=5)


class TestSigmaCoefficient:
    @pytest.fixture(scope="class")
    @staticmethod
    def f():
        return expansion_data(3)[0]

    def test_zero_index(self, qs, f):
        c = sigma_coefficient(0, MultiIndex.zero(0, 3), f, 1.0, None, qs)
        assert c == pytest.approx(np.exp(-0.5 * mass_norm_sq(f, 1.0, qs)), rel=1e-14)

    @pytest.mark.parametrize("entries", [((0, 0, 0, 0),), ((1, 0, 0, 0),), ((0, 1, 0, 0),),
                                         ((0, 0, 0, 0), (1, 0, 0, 0)), ((1, 0, 0, 0), (0, 0, 1, 0))])
    @pytest.mark.parametrize("m", [0.0, 1.0])
    def test_matches_commutator_oracle(self, qs, f, entries, m):
        nu = MultiIndex(entries)
        closed = sigma_coefficient(nu.n, nu, f, m, None, qs)
        oracle = sigma_commutator_oracle(nu.n, nu, f, m, None, qs)
        assert abs(closed - oracle) <= 1e-6 * max(1.0, abs(closed))

    def test_profile_independence(self, qs, f):
        for nu in iter_multi_indices(2, 3, 2):
            a = sigma_coefficient(2, nu, f, 1.0, smoothstep5(), qs)
            b = sigma_coefficient(2, nu, f, 1.0, smooth_bump(), qs)
            assert abs(a - b) <= 1e-8

    def test_length_mismatch(self, qs, f):
        with pytest.raises(ValueError):
            sigma_coefficient(2, MultiIndex.zero(1, 3), f, 1.0, None, qs)


class TestExpansion:
    @pytest.fixture(scope="class")
    @staticmethod
    def setup():
        f, probe = expansion_data(3)
        q = sigma_scheme(3)
        m = 1.0
        ctx = SigmaContext(f, m, q)
        bra = FockVector.particles([probe(m)])
        vac = FockVector.vacuum(m)
        return f, q, m, ctx, bra, vac

    def test_vacuum_exact(self, setup):
        f, q, m, ctx, _, vac = setup
        exact = weyl_matrix_element(vac, vac, f, q)
        assert abs(exact - expansion_partial_sum(f, vac, vac, m, 0, 0, q, context=ctx)) <= 1e-14

    def test_residual_decreases(self, setup):
        f, q, m, ctx, bra, vac = setup
        exact = weyl_matrix_element(bra, vac, f, q)
        res = [abs(exact - expansion_partial_sum(f, bra, vac, m, 3, cap, q, context=ctx)) for cap in range(3)]
        assert res[0] > res[1] > res[2]
        assert res[2] < 1e-4

    def test_small_budget_overflows(self, setup):
        f, q, m, ctx, bra, vac = setup
        with pytest.raises(ContractionOverflow):
            expansion_partial_sum(f, bra, bra, m, 2, 0, q, context=ctx, budget=1)


class TestChiNorm:
    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    def test_single_massless_leg(self, q3, beta):
        assert chi_norm(1, MultiIndex.zero(1, 3), beta, 0.0, 3, q3) == pytest.approx(1 / (4 * np.pi * beta),
                                                                                     rel=1e-8)

    def test_two_legs(self, q3):
        # perm of a rank-one 2x2 Gram matrix is 2 g^2
        one = chi_norm(1, MultiIndex.zero(1, 3), 1.0, 0.0, 3, q3)
        assert chi_norm(2, MultiIndex.zero(2, 3), 1.0, 0.0, 3, q3) == pytest.approx(np.sqrt(2) * one ** 2, rel=1e-12)

    def test_vacuum(self, q3):
        assert chi_norm(0, MultiIndex.zero(0, 3), 1.0, 0.0, 3, q3) == 1.0

    def test_decreasing_in_beta(self, q3):
        nu = MultiIndex(((1, 0, 0, 0), (0, 1, 0, 0)))
        vals = [chi_norm(2, nu, b, 1.0, 3, q3) for b in (0.5, 1.0, 2.0)]
        assert vals[0] > vals[1] > vals[2]

    def test_bad_beta(self, q3):
        with pytest.raises(ValueError):
            chi_norm(1, MultiIndex.zero(1, 3), 0.0, 0.0, 3, q3)


class TestSmoothing:
    def test_unit_damping(self, q3_coarse):
        f = gaussian(3, 0.5, amp=0.6)
        g = gaussian(3, 0.6, amp=0.4, part="I", shift=[0.2, 0, 0])
        assert smoothing_identity_check(f, g, unit_damping(), 1.0, q3_coarse) < 1e-7

    def test_gaussian_damping(self, q3_coarse):
        f = gaussian(3, 0.5, amp=0.6)
        g = gaussian(3, 0.6, amp=0.4, part="I", shift=[0.2, 0, 0])
        assert smoothing_identity_check(f, g, gaussian_damping(), 1.0, q3_coarse) < 1e-6
