import numpy as np
import pytest

from swiptsec import allocator as A
from swiptsec.channel import GramSet, gram_matrices, sample_channels
from swiptsec.metrics import QosTargets, secrecy_capacity, secrecy_floor, transmit_power
from swiptsec.oracle import feasibility_residuals, grid_oracle
from swiptsec.sdp import DomainError

# (seed, F1*, baseline 1 tau at (0.5, 0.5)) for the two-antenna, one-idle-receiver
# configuration; F1* and tau cross-checked against the exhaustive search
TINY = [
    (1, -4.547078436631869e-05, 2.04651526560297e-05),
    (2, -0.0015714192642893058, 0.0006354517183470465),
    (3, -0.00019413055322051496, 7.752836739183553e-05),
]


def _single_user():
    h = np.array([1.0, 1.0], dtype=complex)
    return GramSet(np.outer(h, h.conj()), ()), QosTargets(10.0, (), 100.0, 1.0), np.zeros(0)


def _tiny(cfg, seed):
    system, qos = cfg.system(), cfg.qos()
    grams = gram_matrices(sample_channels(seed, system))
    return grams, qos, system.eps, A.compute_utopia(grams, qos, system.eps)


# single-objective programs -----------------------------------------------------


def test_min_power_single_user_is_mrt():
    grams, qos, eps = _single_user()
    value, ts = A.solve_single_objective(grams, qos, eps, A.ProblemKind.P2)
    assert value == pytest.approx(5.0, rel=1e-7)
    w = A.recover(ts).w
    assert np.allclose(w, np.sqrt(2.5) * np.ones(2), rtol=1e-6)
    assert ts.V_bar.trace().real == pytest.approx(0.0, abs=1e-8)


def test_p1_needs_idle_receivers():
    grams, qos, eps = _single_user()
    with pytest.raises(DomainError):
        A.solve_single_objective(grams, qos, eps, A.ProblemKind.P1)
    assert A.compute_utopia(grams, qos, eps).F1_star == 0.0


def test_p3_kind_rejected_for_single_objective():
    grams, qos, eps = _single_user()
    with pytest.raises(DomainError):
        A.solve_single_objective(grams, qos, eps, A.ProblemKind.P3)


def test_p3_power_weight_matches_p2(feasible_draws):
    for grams, qos, eps, utopia in feasible_draws:
        r = A.solve_relaxed_p3(grams, qos, eps, (0.0, 1.0), utopia)
        assert r.metrics.tp == pytest.approx(utopia.F2_star, rel=1e-6)
        assert r.tau == pytest.approx(0.0, abs=1e-6 * utopia.F2_star)


def test_p2_rank_one_and_trace(feasible_draws):
    for grams, qos, eps, utopia in feasible_draws:
        _, ts = A.solve_single_objective(grams, qos, eps, A.ProblemKind.P2)
        assert A.check_rank_one(ts.W_bar)[0]
        assert ts.trace_sum == pytest.approx(1.0, abs=1e-6)
        assert transmit_power(A.recover(ts)) == pytest.approx(1.0 / ts.xi, rel=1e-6)


@pytest.mark.parametrize("seed,f1,_tau", TINY)
def test_p1_frozen(tiny_config, seed, f1, _tau):
    grams, qos, eps, utopia = _tiny(tiny_config, seed)
    assert utopia.F1_star == pytest.approx(f1, rel=1e-6)


@pytest.mark.parametrize("seed,f1,_tau", TINY)
def test_p1_matches_exhaustive_search(tiny_config, seed, f1, _tau):
    grams, qos, eps, utopia = _tiny(tiny_config, seed)
    res = grid_oracle(grams, qos, eps, (1.0, 0.0), utopia, resolution=64)
    # the oracle is a feasible point, the relaxation a bound
    assert -res.eta >= utopia.F1_star - 1e-9 * abs(utopia.F1_star)
    assert -res.eta == pytest.approx(utopia.F1_star, rel=1e-5)


# rank-one certification and recovery ----------------------------------------------


def test_check_rank_one_examples():
    w = np.array([1.0, 2j, -1.0])
    assert A.check_rank_one(np.outer(w, w.conj())) == (True, pytest.approx(0.0, abs=1e-15))
    assert A.check_rank_one(np.eye(2)) == (False, 1.0)
    ok, ratio = A.check_rank_one(np.diag([1.0, 9e-7]))
    assert ok and ratio == pytest.approx(9e-7)
    assert A.check_rank_one(np.diag([1.0, 2e-6]))[0] is False
    assert A.check_rank_one(np.zeros((2, 2))) == (False, 0.0)


def _transformed(W_bar, V_bar, xi):
    cert = A.DualCertificate(0.0, np.zeros(0), 0.0, 0.0, 0.0, (0.0, 0.0), None, None)
    return A.TransformedSolution(W_bar, V_bar, xi, None, 0.0, cert, None)


def test_recover_example():
    e1 = np.array([1.0, 0.0])
    alloc = A.recover(_transformed(0.5 * np.outer(e1, e1), np.diag([0.25, 0.25]), 0.1))
    assert np.allclose(alloc.w, np.sqrt(5.0) * e1)
    assert np.allclose(alloc.V, np.diag([2.5, 2.5]))
    assert transmit_power(alloc) == pytest.approx(10.0)


def test_recover_complex_vector():
    w = np.array([0.3 - 0.4j, 1.0 + 2.0j, -0.5j])
    xi = 0.25
    alloc = A.recover(_transformed(xi * np.outer(w, w.conj()), np.zeros((3, 3)), xi))
    assert np.allclose(alloc.W, np.outer(w, w.conj()), atol=1e-12)
    k = int(np.argmax(np.abs(alloc.w)))
    assert alloc.w[k].imag == pytest.approx(0.0, abs=1e-12) and alloc.w[k].real > 0


def test_recover_rejects_zero_xi():
    with pytest.raises(A.RecoveryError):
        A.recover(_transformed(np.eye(2), np.zeros((2, 2)), 0.0))


# schemes ---------------------------------------------------------------------------


def test_epigraph_is_tight(feasible_draws):
    grams, qos, eps, utopia = feasible_draws[0]
    for lam in [(0.8, 0.2), (0.5, 0.5), (0.2, 0.8)]:
        r = A.solve_relaxed_p3(grams, qos, eps, lam, utopia)
        ts = r.transformed
        hp = sum(e * np.trace(G @ (ts.W_bar + ts.V_bar)).real for e, G in zip(eps, grams.G))
        f1 = -hp / ts.trace_sum
        tp = 1.0 / ts.xi
        target = max(lam[0] * (f1 - utopia.F1_star), lam[1] * (tp - utopia.F2_star))
        assert r.tau == pytest.approx(target, rel=1e-6, abs=1e-9 * utopia.F2_star)


def test_tau_ordering(feasible_draws):
    for grams, qos, eps, utopia in feasible_draws:
        for lam in [(0.7, 0.3), (0.3, 0.7)]:
            out = A.solve_schemes(grams, qos, eps, lam, utopia, A.SCHEME_ORDER)
            relaxed = out[A.Scheme.RELAXED_P3]
            scale = 1e-7 * max(1.0, abs(relaxed.tau))
            for s, r in out.items():
                if r is not None and s is not A.Scheme.RELAXED_P3:
                    assert r.tau >= relaxed.tau - scale
                    assert r.achieved_tau >= relaxed.tau - scale


def test_suboptimal2_selection(feasible_draws):
    grams, qos, eps, utopia = feasible_draws[0]
    out = A.solve_schemes(grams, qos, eps, (0.5, 0.5), utopia, A.SCHEME_ORDER)
    sub2, relaxed = out[A.Scheme.SUBOPTIMAL2], out[A.Scheme.RELAXED_P3]
    if relaxed.rank_one:
        assert sub2.branch is A.Scheme.RELAXED_P3 and sub2.tau == relaxed.tau
    else:
        assert sub2.branch is A.Scheme.SUBOPTIMAL1 and sub2.tau == out[A.Scheme.SUBOPTIMAL1].tau
    assert sub2.recovered is not None


def test_suboptimal1_rank_one(feasible_draws):
    for grams, qos, eps, utopia in feasible_draws:
        r = A.suboptimal1(grams, qos, eps, (0.5, 0.5), utopia)
        assert r.rank_one and r.prop2_holds


def test_baseline1_noise_in_null_space(feasible_draws):
    for grams, qos, eps, utopia in feasible_draws:
        try:
            r = A.baseline1(grams, qos, eps, (0.5, 0.5), utopia)
        except A.InfeasibleInstance:
            continue
        ts = r.transformed
        assert abs(np.trace(grams.H @ ts.V_bar).real) <= 1e-10 * max(1.0, ts.trace_sum)


@pytest.mark.parametrize("seed,_f1,tau", TINY)
def test_baseline1_frozen_and_exhaustive(tiny_config, seed, _f1, tau):
    grams, qos, eps, utopia = _tiny(tiny_config, seed)
    r = A.baseline1(grams, qos, eps, (0.5, 0.5), utopia)
    assert r.tau == pytest.approx(tau, rel=1e-6)
    res = grid_oracle(grams, qos, eps, (0.5, 0.5), utopia, resolution=64, noise="nullspace")
    assert res.value == pytest.approx(tau, rel=1e-5)


def test_baseline2_is_mrt(feasible_draws):
    for grams, qos, eps, utopia in feasible_draws:
        try:
            r = A.baseline2(grams, qos, eps, (0.5, 0.5), utopia)
        except A.InfeasibleInstance:
            continue
        assert r.eigen_ratio <= 1e-12 and r.rank_one
        h = np.linalg.eigh(grams.H)[1][:, -1]
        w = r.recovered.w
        assert abs(np.vdot(h, w)) == pytest.approx(np.linalg.norm(w), rel=1e-9)


def test_recovered_allocations_feasible(feasible_draws):
    for grams, qos, eps, utopia in feasible_draws:
        out = A.solve_schemes(grams, qos, eps, (0.5, 0.5), utopia, A.SCHEME_ORDER)
        for r in out.values():
            if r is None or r.recovered is None:
                continue
            assert feasibility_residuals(r.recovered, grams, qos).feasible
            assert secrecy_capacity(r.recovered, grams, qos.sigma_s2) >= secrecy_floor(qos) - 1e-6
            assert r.metrics.tp == pytest.approx(1.0 / r.transformed.xi, rel=1e-6)


def test_infeasible_cache_skips_schemes(feasible_draws):
    grams, qos, eps, utopia = feasible_draws[0]
    known = {A.Scheme.BASELINE2}
    out = A.solve_schemes(grams, qos, eps, (0.5, 0.5), utopia, [A.Scheme.BASELINE2], infeasible=known)
    assert out[A.Scheme.BASELINE2] is None


def test_unreachable_target_is_infeasible(feasible_draws):
    grams, qos, eps, _ = feasible_draws[0]
    weak = QosTargets(qos.gamma_req, qos.gamma_tol, 1e-9, qos.sigma_s2)
    with pytest.raises(A.InfeasibleInstance):
        A.compute_utopia(grams, weak, eps)


# weights and sweeps ----------------------------------------------------------------


def test_weight_validation():
    assert A.validate_weights((0.25, 0.75)) == (0.25, 0.75)
    for bad in [(0.5, 0.6), (-0.1, 1.1), (float("nan"), 0.5)]:
        with pytest.raises(DomainError):
            A.validate_weights(bad)


def test_weight_grid():
    assert A.weight_grid(3) == [(1.0, 0.0), (0.5, 0.5), (0.0, 1.0)]
    assert A.weight_grid(1) == [(0.5, 0.5)]
    assert len(A.weight_grid(11)) == 11
    with pytest.raises(DomainError):
        A.weight_grid(0)


def test_p3_needs_utopia(feasible_draws):
    grams, qos, eps, _ = feasible_draws[0]
    with pytest.raises(DomainError):
        A.build_transformed(grams, qos, eps, A.ProblemKind.P3, (0.5, 0.5))


def test_pareto_sweep(feasible_draws):
    grams, qos, eps, utopia = feasible_draws[0]
    grid = A.weight_grid(3)
    pts = A.pareto_sweep(grams, qos, eps, grid, [A.Scheme.SUBOPTIMAL2, A.Scheme.RELAXED_P3], utopia)
    assert len(pts) == 6
    assert [p.scheme for p in pts[:2]] == [A.Scheme.RELAXED_P3, A.Scheme.SUBOPTIMAL2]
    sub2 = [p for p in pts if p.scheme is A.Scheme.SUBOPTIMAL2]
    # more weight on power buys lower power and lower efficiency
    assert sub2[0].tp >= sub2[-1].tp * (1 - 1e-9)
    assert sub2[0].eta >= sub2[-1].eta * (1 - 1e-9)
    with pytest.raises(DomainError):
        A.pareto_sweep(grams, qos, eps, [], [A.Scheme.RELAXED_P3], utopia)
