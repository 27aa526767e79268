import dataclasses

import numpy as np
import pytest

from oracles import reference_sdp
from swiptsec.sdp import (
    Block,
    BlockKind,
    ConeProgram,
    ConeSolution,
    Constraint,
    DomainError,
    SolverOptions,
    SolveStatus,
    embed_hermitian,
    residuals,
    solve,
    unembed,
)
from swiptsec.sdp.conformance import analytic_cases, run_case
from swiptsec.sdp.textio import dumps, loads

SYM, HERM, NN, FREE = BlockKind.SYMMETRIC, BlockKind.HERMITIAN, BlockKind.NONNEG, BlockKind.FREE


def _random_program(seed, sizes=(3, 2, 2), m=4):
    """Strictly primal and dual feasible block program plus its single-block dense form."""
    rng = np.random.default_rng(seed)
    n = sum(sizes)

    def blkdiag(ms):
        out = np.zeros((n, n))
        o = 0
        for M in ms:
            k = M.shape[0]
            out[o : o + k, o : o + k] = M
            o += k
        return out

    def rsym(k):
        M = rng.standard_normal((k, k))
        return M + M.T

    def rpd(k):
        G = rng.standard_normal((k, k))
        return G @ G.T + np.eye(k)

    A_blocks = [[rsym(k) for k in sizes] for _ in range(m)]
    X0 = [rpd(k) for k in sizes]
    S0 = [rpd(k) for k in sizes]
    y0 = rng.standard_normal(m)
    A = [blkdiag(a) for a in A_blocks]
    b = np.array([np.sum(Ai * blkdiag(X0)) for Ai in A])
    C = blkdiag(S0) + sum(yi * Ai for yi, Ai in zip(y0, A))
    offs = np.cumsum((0,) + tuple(sizes))
    Cb = {i: C[offs[i] : offs[i + 1], offs[i] : offs[i + 1]] for i in range(len(sizes))}
    cons = tuple(Constraint({i: A_blocks[j][i] for i in range(len(sizes))}, "=", b[j], f"r{j}") for j in range(m))
    prog = ConeProgram(tuple(Block(SYM, k) for k in sizes), Cb, cons)
    return prog, (C, A, b)


# embedding -----------------------------------------------------------------


def test_embed_scalar():
    assert np.array_equal(embed_hermitian([[1]]), np.eye(2))


def test_embed_pauli_y():
    E = embed_hermitian(np.array([[0, -1j], [1j, 0]]))
    assert E.shape == (4, 4)
    assert np.allclose(np.linalg.eigvalsh(E), [-1, -1, 1, 1], atol=1e-14)


def test_embed_trace_and_spectrum():
    rng = np.random.default_rng(3)
    B = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    A = B + B.conj().T
    E = embed_hermitian(A)
    assert np.trace(E) == pytest.approx(2 * np.trace(A).real)
    ev = np.linalg.eigvalsh(A)
    assert np.allclose(np.linalg.eigvalsh(E), np.sort(np.repeat(ev, 2)))
    assert np.allclose(unembed(E), A)


def test_embed_rejects_non_hermitian():
    with pytest.raises(DomainError):
        embed_hermitian(np.array([[0, 1], [0, 0]]))


# solve -----------------------------------------------------------------------


def test_unit_trace_analytic_center():
    prog = ConeProgram((Block(SYM, 2),), {0: np.eye(2)}, (Constraint({0: np.eye(2)}, "=", 1.0),))
    sol = solve(prog)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.primal_objective == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(sol.primal[0], np.eye(2) / 2, atol=1e-8)


def test_schur_minimum():
    E01 = np.array([[0, 0.5], [0.5, 0]])
    prog = ConeProgram(
        (Block(SYM, 2),),
        {0: np.diag([1.0, 0.0])},
        (Constraint({0: E01}, "=", 1.0), Constraint({0: np.diag([0.0, 1.0])}, "=", 1.0)),
    )
    sol = solve(prog)
    assert sol.primal_objective == pytest.approx(1.0, abs=1e-7)


def test_matches_reference_iteration():
    prog, (C, A, b) = _random_program(7)
    ref, _, _ = reference_sdp(C, A, b)
    # frozen from the dense reference iteration at tolerance 1e-10
    assert ref == pytest.approx(-24.131792182803274, rel=1e-9)
    sol = solve(prog)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.primal_objective == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("seed", [8, 9, 10])
def test_matches_reference_iteration_more(seed):
    prog, (C, A, b) = _random_program(seed)
    ref, _, _ = reference_sdp(C, A, b)
    assert solve(prog).primal_objective == pytest.approx(ref, rel=1e-6)


def test_infeasible_status():
    prog = ConeProgram((Block(SYM, 2),), {0: np.eye(2)}, (Constraint({0: np.eye(2)}, "=", -1.0),))
    assert solve(prog).status is SolveStatus.INFEASIBLE


def test_unbounded_status():
    prog = ConeProgram((Block(FREE, 1),), {0: np.array([-1.0])}, (Constraint({0: np.array([1.0])}, ">=", 0.0),))
    assert solve(prog).status is SolveStatus.UNBOUNDED


def test_iteration_cap_status():
    prog, _ = _random_program(7)
    sol = solve(prog, SolverOptions(max_iterations=2))
    assert sol.status is SolveStatus.MAX_ITERATIONS
    assert len(sol.primal) == 3


def test_inequality_multipliers_nonnegative():
    for case in analytic_cases():
        sol = solve(case.program)
        for c, m in zip(case.program.constraints, sol.multipliers):
            if c.relation.value != "=":
                assert m >= -1e-8


def test_options_validation():
    with pytest.raises(DomainError):
        SolverOptions(gap_tol=0.0)
    with pytest.raises(DomainError):
        SolverOptions(step_fraction=1.0)
    with pytest.raises(DomainError):
        SolverOptions(max_iterations=0)


def test_program_validation():
    with pytest.raises(DomainError):
        ConeProgram((Block(SYM, 2),), {0: np.eye(2)}, ())
    with pytest.raises(DomainError):
        ConeProgram((Block(SYM, 2),), {0: np.eye(3)}, (Constraint({0: np.eye(2)}, "=", 1.0),))
    with pytest.raises(DomainError):
        ConeProgram((Block(SYM, 2),), {0: np.array([[0, 1], [0, 0]])}, (Constraint({0: np.eye(2)}, "=", 1.0),))
    with pytest.raises(DomainError):
        ConeProgram((Block(SYM, 2),), {0: np.eye(2)}, (Constraint({0: np.eye(2)}, "=", np.inf),))


# analytic suite ---------------------------------------------------------------


def test_analytic_suite_size():
    assert len(analytic_cases()) >= 10


@pytest.mark.parametrize("case", analytic_cases(), ids=lambda c: c.name)
def test_analytic_suite(case):
    r = run_case(case)
    assert r.status is SolveStatus.OPTIMAL
    assert r.objective_error <= 1e-7
    assert r.gap <= 1e-8
    assert max(r.primal_infeas, r.dual_infeas) <= 1e-8


# residuals -----------------------------------------------------------------------


def _manual_pair(X, y, S):
    prog = ConeProgram((Block(SYM, 2),), {0: np.eye(2)}, (Constraint({0: np.eye(2)}, "=", 1.0),))
    sol = ConeSolution(
        status=SolveStatus.OPTIMAL,
        primal=[X],
        multipliers=np.array([y]),
        dual_slacks=[S],
        duality_gap=0.0,
        primal_infeas=0.0,
        dual_infeas=0.0,
        primal_objective=0.0,
        dual_objective=0.0,
        iterations=0,
    )
    return prog, sol


def test_residuals_of_analytic_pair():
    prog, sol = _manual_pair(np.eye(2) / 2, 1.0, np.zeros((2, 2)))
    r = residuals(prog, sol)
    assert max(r.primal_infeas, r.dual_infeas, r.gap) <= 1e-8


def test_residuals_track_perturbation():
    prog, sol = _manual_pair(np.eye(2) / 2 + 0.1 * np.eye(2), 1.0, np.zeros((2, 2)))
    r = residuals(prog, sol)
    # violation 0.2 scaled by 1 + |b|
    assert r.primal_infeas == pytest.approx(0.1, rel=1e-12)


def test_residual_gap_matches_solver():
    prog, _ = _random_program(9)
    sol = solve(prog)
    assert abs(residuals(prog, sol).gap - sol.duality_gap) <= 1e-10


# invariants --------------------------------------------------------------------------


def test_complementary_slackness_and_weak_duality():
    opts = SolverOptions()
    for case in analytic_cases():
        sol = solve(case.program, opts)
        for blk, X, S in zip(case.program.blocks, sol.primal, sol.dual_slacks):
            if blk.kind.is_matrix:
                assert abs(np.vdot(X, S).real) <= 10 * opts.gap_tol * max(1.0, abs(sol.primal_objective))
        assert sol.primal_objective - sol.dual_objective >= -opts.feas_tol


def test_deterministic():
    prog, _ = _random_program(10)
    a, b = solve(prog), solve(prog)
    assert all(x.tobytes() == y.tobytes() for x, y in zip(a.primal, b.primal))
    assert a.multipliers.tobytes() == b.multipliers.tobytes()


def test_objective_scaling():
    prog, _ = _random_program(8)
    scaled = dataclasses.replace(prog, objective={k: 3.0 * v for k, v in prog.objective.items()})
    a, b = solve(prog), solve(scaled)
    assert b.primal_objective == pytest.approx(3.0 * a.primal_objective, rel=1e-7)
    for x, y in zip(a.primal, b.primal):
        assert np.max(np.abs(x - y)) <= 1e-6 * max(1.0, np.max(np.abs(x)))


# text listing --------------------------------------------------------------------


def test_textio_round_trip():
    prog = analytic_cases()[-1].program
    text = dumps(prog)
    again = loads(text)
    assert dumps(again) == text
    assert solve(again).primal_objective == solve(prog).primal_objective


def test_textio_round_trip_random():
    prog, _ = _random_program(7)
    assert dumps(loads(dumps(prog))) == dumps(prog)


def test_textio_rejects_bad_input():
    with pytest.raises(DomainError):
        loads("not a program\nend\n")
    with pytest.raises(DomainError):
        loads("coneprogram 1\nblock 0 symmetric 2\nobjective\nbogus 1\nend\n")
    with pytest.raises(DomainError):
        loads("coneprogram 1\nblock 0 symmetric 2\nobjective\nentry 0 0 1 1.0 2.0\nend\n")
