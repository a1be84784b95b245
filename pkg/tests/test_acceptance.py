"""One test per acceptance criterion, each printing a single PASS/FAIL line."""
import numpy as np
import pytest

from scalinglab import bounds, dirint
from scalinglab.cli import _block_algebra, _probe_function, _symmetry_panel, expansion_data
from scalinglab.cutoff import smooth_bump, smoothstep5
from scalinglab.fock import (FockVector, MultiIndex, SigmaContext, expansion_partial_sum, iter_multi_indices,
                             sigma_commutator_oracle, sigma_scheme, weyl_matrix_element)
from scalinglab.quadrature import quad_build
from scalinglab.symm import dilate, poincare
from scalinglab.testfn import gaussian, mass_norm_sq
from scalinglab.vacuum import scaling_limit_gap


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def q():
    return quad_build(3, 1e-8)


@pytest.fixture(scope="module")
def qs():
    return sigma_scheme(3)


def test_criterion_01_vacuum_invariance(q, report):
    f = _probe_function(3, 0.5).memoized()
    worst, cases = 0.0, 0
    for m in (0.0, 1.0):
        base = mass_norm_sq(f, m, q)
        for _, x, L in _symmetry_panel(3):
            worst = max(worst, abs(mass_norm_sq(poincare(f, x, L, m), m, q) - base) / base)
            cases += 1
    report(1, cases == 20 and worst <= 1e-6, f"{cases} cases, max relative change {worst:.2e} (tol 1e-6)")


def test_criterion_02_dilation_invariance(q, report):
    f = _probe_function(3, 0.5).memoized()
    base = mass_norm_sq(f, 0.0, q)
    errs = [abs(mass_norm_sq(dilate(f, lam), 0.0, q) - base) / base for lam in (0.1, 0.5, 2.0, 10.0)]
    report(2, max(errs) <= 1e-7, f"max relative change {max(errs):.2e} (tol 1e-7)")


def test_criterion_03_scaling_limit_gap(q, report):
    f = gaussian(3, 0.5)
    gaps, route = [], 0.0
    for lam in (1.0, 0.1, 0.01, 0.001):
        gap, direct, inter = scaling_limit_gap(f, 1.0, lam, q, return_routes=True)
        gaps.append(gap)
        route = max(route, abs(direct - inter))
    ok = all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < gaps[0] / 10 and route <= 1e-7
    report(3, ok, "gaps " + ", ".join(f"{g:.3e}" for g in gaps) + f"; route difference {route:.1e}")


def test_criterion_04_sigma_cross_check(qs, report):
    f = expansion_data(3)[0]
    worst_oracle, worst_profile, count = 0.0, 0.0, 0
    for m in (0.0, 1.0):
        main = SigmaContext(f, m, qs, smoothstep5(), check_cutoff=False)
        alt = SigmaContext(f, m, qs, smooth_bump(), check_cutoff=False)
        for n in range(3):
            for nu in iter_multi_indices(n, 3, 2):
                closed = main.coefficient(nu)
                oracle = sigma_commutator_oracle(n, nu, f, m, smoothstep5(), qs)
                worst_oracle = max(worst_oracle, abs(closed - oracle) / max(1.0, abs(closed)))
                worst_profile = max(worst_profile, abs(closed - alt.coefficient(nu)))
                count += 1
    ok = worst_oracle <= 1e-6 and worst_profile <= 1e-8
    report(4, ok, f"{count} coefficients, oracle {worst_oracle:.1e} (tol 1e-6), profiles {worst_profile:.1e} "
                  "(tol 1e-8)")


def test_criterion_05_expansion_convergence(qs, report):
    f, probe = expansion_data(3)
    m = 1.0
    ctx = SigmaContext(f, m, qs)
    vac = FockVector.vacuum(m)
    vac_err = abs(weyl_matrix_element(vac, vac, f, qs) - expansion_partial_sum(f, vac, vac, m, 0, 0, qs,
                                                                                context=ctx))
    bra = FockVector.particles([probe(m)])
    exact = weyl_matrix_element(bra, vac, f, qs)
    res = [abs(exact - expansion_partial_sum(f, bra, vac, m, 3, cap, qs, context=ctx)) for cap in range(3)]
    ok = vac_err <= 1e-14 and all(b < a for a, b in zip(res, res[1:])) and res[-1] < 1e-4
    report(5, ok, f"vacuum {vac_err:.1e}; residuals " + ", ".join(f"{r:.2e}" for r in res))


@pytest.mark.parametrize("m", [0.0, 1.0])
def test_criterion_06_norm_bounds(report, m):
    fit, hold = bounds.fit_panel(1.0), bounds.holdout_panel(1.0)
    assert not set(fit.betas) & set(hold.betas) and not set(fit.radii) & set(hold.radii)
    assert not set(fit.energies) & set(hold.energies)
    consts = bounds.fit_constant_c(3, m, 1.0, fit)
    reps = bounds.validate_panel(consts, 3, m, 1.0, hold)
    bad = sum(not r.passed for r in reps)
    kinds = sorted({r.kind for r in reps})
    report(6, bad == 0 and kinds == ["a", "b", "c"],
           f"m={m}: c={consts.c:.4f}, {len(reps)} hold-out points ({'/'.join(kinds)}), {bad} violations")


@pytest.mark.parametrize("m", [0.0, 1.0])
def test_criterion_07_nuclearity_decay(report, m):
    c = bounds.fit_constant_c(3, m, 1.0).c
    beta = 1.0
    r = 0.1 * beta / 6
    sums, qratio = bounds.nuclearity_partial_sum(r, beta, 3, 4, 2, m, c)
    ratios = [sums[n + 1] / sums[n] for n in range(4)]
    report(7, all(x <= qratio for x in ratios),
           f"m={m}: ratios " + ", ".join(f"{x:.2e}" for x in ratios) + f" <= q={qratio:.3f}")


def test_criterion_08_commutant(report):
    rng = np.random.default_rng(0)
    disagree, decomposable = 0, 0
    for _ in range(100):
        di = dirint.random_configuration(rng, max_points=4, max_dim=3)
        B = dirint.random_operator(rng, di)
        a, b = dirint.commutes_with_diagonals(B, di), dirint.is_block_diagonal(B, di)
        disagree += a != b
        decomposable += a
    report(8, disagree == 0 and 0 < decomposable < 100,
           f"100 cases, {decomposable} decomposable, {disagree} disagreements")


def test_criterion_09_decomposition(report):
    rng = np.random.default_rng(0)
    worst = dict(reconstruction=0.0, unitarity=0.0, intertwining=0.0)
    for sizes in ([1, 1], [2, 3], [1, 2, 2]):
        alg = _block_algebra(sizes, rng)
        assert len(alg.center_basis()) == len(sizes)
        state = dirint.State.from_density(alg, dirint.random_density(rng, alg.n))
        E = dirint.state_expectation(alg, state)
        comps, dec = dirint.full_decomposition(alg, state, E)
        W = dec.unitary
        worst["reconstruction"] = max(worst["reconstruction"], dirint.reconstruction_residual(state, E, comps))
        worst["unitarity"] = max(worst["unitarity"], float(np.linalg.norm(W.conj().T @ W - np.eye(W.shape[0]))))
        worst["intertwining"] = max(worst["intertwining"], dirint.intertwining_residual(dec))
    report(9, max(worst.values()) <= 1e-10, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (tol 1e-10)")


def test_criterion_10_cocycles(report):
    clean, matched = [], []
    for order in range(2, 6):
        for sys_ in (dirint.cyclic_system(order), dirint.coboundary_system(order, 2, seed=order)):
            clean.append(dirint.cocycle_check(sys_).passed)
        sys_ = dirint.coboundary_system(order, 2, seed=order)
        g0, z0 = 1, order - 1
        rep = dirint.cocycle_check(dirint.perturb(sys_, g0, z0, np.exp(0.7j)))
        predicted = dirint.predicted_composition_failures(sys_, g0, z0)
        matched.append(bool(predicted) and set(rep.composition) == predicted)
    report(10, all(clean) and all(matched),
           f"{sum(clean)}/{len(clean)} clean systems pass, {sum(matched)}/{len(matched)} perturbations match")
