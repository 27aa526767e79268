"""Small conic programs with closed-form optima, used to certify the solver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .program import Block, BlockKind, ConeProgram, Constraint, SolverOptions, SolveStatus
from .residuals import residuals
from .solver import solve

SYM, HERM, NN, FREE = BlockKind.SYMMETRIC, BlockKind.HERMITIAN, BlockKind.NONNEG, BlockKind.FREE


@dataclass(frozen=True)
class AnalyticCase:
    name: str
    program: ConeProgram
    optimum: float


@dataclass(frozen=True)
class CaseResult:
    name: str
    objective_error: float
    gap: float
    primal_infeas: float
    dual_infeas: float
    status: SolveStatus

    def passed(self, obj_tol: float = 1e-7, gap_tol: float = 1e-8, res_tol: float = 1e-8) -> bool:
        return (
            self.status is SolveStatus.OPTIMAL
            and self.objective_error <= obj_tol
            and self.gap <= gap_tol
            and max(self.primal_infeas, self.dual_infeas) <= res_tol
        )


def _e(n, i, j, dtype=float):
    E = np.zeros((n, n), dtype=dtype)
    E[i, j] += 0.5
    E[j, i] += 0.5
    return E


def analytic_cases() -> list:
    cases = []

    def add(name, blocks, objective, constraints, optimum):
        cons = tuple(Constraint(c, rel, rhs, f"c{i}") for i, (c, rel, rhs) in enumerate(constraints))
        cases.append(AnalyticCase(name, ConeProgram(tuple(Block(*b) for b in blocks), objective, cons), optimum))

    # min Tr X over unit-trace PSD: every feasible point is optimal
    add("unit_trace", [(SYM, 2)], {0: np.eye(2)}, [({0: np.eye(2)}, "=", 1.0)], 1.0)
    # [[t, 1], [1, 1]] >= 0 iff t >= 1
    add(
        "schur_2x2",
        [(SYM, 2)],
        {0: _e(2, 0, 0)},
        [({0: _e(2, 0, 1)}, "=", 1.0), ({0: _e(2, 1, 1)}, "=", 1.0)],
        1.0,
    )
    # [[x, 1], [1, y]] >= 0 with y <= 4 gives x >= 1/4
    add(
        "schur_bounded",
        [(SYM, 2)],
        {0: _e(2, 0, 0)},
        [({0: _e(2, 0, 1)}, "=", 1.0), ({0: _e(2, 1, 1)}, "<=", 4.0)],
        0.25,
    )
    # smallest eigenvalue of [[2, 1], [1, 2]]
    add("min_eig_real", [(SYM, 2)], {0: np.array([[2.0, 1.0], [1.0, 2.0]])}, [({0: np.eye(2)}, "=", 1.0)], 1.0)
    # largest eigenvalue of diag(1, 4, 2), as a minimization
    add("max_eig_real", [(SYM, 3)], {0: -np.diag([1.0, 4.0, 2.0])}, [({0: np.eye(3)}, "=", 1.0)], -4.0)
    # eigenvalues of [[2, i], [-i, 2]] are 1 and 3
    add(
        "min_eig_hermitian",
        [(HERM, 2)],
        {0: np.array([[2.0, 1j], [-1j, 2.0]])},
        [({0: np.eye(2, dtype=complex)}, "=", 1.0)],
        1.0,
    )
    # 2I + Pauli-Y embedded in 3x3 has eigenvalues 1, 2, 3
    C = 2 * np.eye(3, dtype=complex)
    C[0, 1], C[1, 0] = 1j, -1j
    add("min_eig_hermitian_3", [(HERM, 3)], {0: C}, [({0: np.eye(3, dtype=complex)}, "=", 1.0)], 1.0)
    # two-node max-cut relaxation: X = ones
    add(
        "maxcut_2",
        [(SYM, 2)],
        {0: -np.array([[0.0, 1.0], [1.0, 0.0]])},
        [({0: _e(2, 0, 0)}, "=", 1.0), ({0: _e(2, 1, 1)}, "=", 1.0)],
        -2.0,
    )
    add("lp_cover", [(NN, 2)], {0: np.array([1.0, 2.0])}, [({0: np.array([1.0, 1.0])}, ">=", 1.0)], 1.0)
    # vertex (1.6, 1.2)
    add(
        "lp_packing",
        [(NN, 2)],
        {0: np.array([-1.0, -1.0])},
        [({0: np.array([1.0, 2.0])}, "<=", 4.0), ({0: np.array([3.0, 1.0])}, "<=", 6.0)],
        -2.8,
    )
    add(
        "free_interval",
        [(FREE, 1)],
        {0: np.array([1.0])},
        [({0: np.array([1.0])}, ">=", 2.0), ({0: np.array([1.0])}, "<=", 5.0)],
        2.0,
    )
    # X_11 >= 1 on a 2x2 block plus a bounded scalar
    add(
        "mixed_blocks",
        [(SYM, 2), (NN, 1)],
        {0: np.eye(2), 1: np.array([1.0])},
        [({0: _e(2, 0, 0)}, ">=", 1.0), ({1: np.array([1.0])}, ">=", 0.5)],
        1.5,
    )
    # coupled: Tr X + t = 2, minimize -X_11 + t; optimum puts everything in X_11
    add(
        "coupled_budget",
        [(HERM, 2), (NN, 1)],
        {0: -_e(2, 0, 0, complex), 1: np.array([1.0])},
        [({0: np.eye(2, dtype=complex), 1: np.array([1.0])}, "=", 2.0)],
        -2.0,
    )
    return cases


def run_case(case: AnalyticCase, options: SolverOptions | None = None) -> CaseResult:
    sol = solve(case.program, options)
    res = residuals(case.program, sol)
    return CaseResult(
        name=case.name,
        objective_error=abs(res.primal_objective - case.optimum),
        gap=res.gap,
        primal_infeas=res.primal_infeas,
        dual_infeas=res.dual_infeas,
        status=sol.status,
    )
