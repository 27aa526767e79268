"""Recompute feasibility and optimality residuals of a primal/dual pair from scratch."""
from __future__ import annotations

import numpy as np

from .program import BlockKind, ConeProgram, ConeSolution, Relation, Residuals


def signed_multipliers(program: ConeProgram, multipliers) -> np.ndarray:
    """Map the nonnegative-inequality convention to ``C - sum y_i A_i = S`` form."""
    y = np.array(multipliers, dtype=float)
    for i, c in enumerate(program.constraints):
        if c.relation is Relation.LE:
            y[i] = -y[i]
    return y


def _min_eig(block, X) -> float:
    if block.kind.is_matrix:
        return float(np.linalg.eigvalsh(X)[0])
    if block.kind is BlockKind.NONNEG:
        return float(np.min(X))
    return float("inf")


def residuals(program: ConeProgram, solution: ConeSolution) -> Residuals:
    """Primal/dual infeasibility, relative duality gap and cone margins.

    primal_infeas = ||violation|| / (1 + ||b||), dual_infeas =
    ||C - sum y_i A_i - S|| / (1 + ||C||) (sign errors on inequality
    multipliers count as dual violation), gap = |p - d| / (1 + |p| + |d|).
    """
    X = solution.primal
    S = solution.dual_slacks
    rhs = np.array([c.rhs for c in program.constraints])
    viol = np.empty(len(rhs))
    for i, c in enumerate(program.constraints):
        v = program.evaluate(c.coefs, X) - c.rhs
        if c.relation is Relation.LE:
            v = max(v, 0.0)
        elif c.relation is Relation.GE:
            v = max(-v, 0.0)
        viol[i] = v
    primal_infeas = float(np.linalg.norm(viol) / (1.0 + np.linalg.norm(rhs)))

    y = signed_multipliers(program, solution.multipliers)
    sign_viol = [
        min(float(solution.multipliers[i]), 0.0)
        for i, c in enumerate(program.constraints)
        if c.relation is not Relation.EQ
    ]
    sq = float(np.sum(np.square(sign_viol)))
    c_norm_sq = 0.0
    for b, block in enumerate(program.blocks):
        C = program.objective.get(b)
        R = np.zeros(block.shape, dtype=block.dtype) if C is None else np.array(C)
        if C is not None:
            c_norm_sq += float(np.sum(np.abs(C) ** 2))
        for i, c in enumerate(program.constraints):
            A = c.coefs.get(b)
            if A is not None:
                R = R - y[i] * A
        if block.kind is not BlockKind.FREE:
            R = R - S[b]
        sq += float(np.sum(np.abs(R) ** 2))
    dual_infeas = float(np.sqrt(sq) / (1.0 + np.sqrt(c_norm_sq)))

    pobj = program.objective_value(X)
    dobj = float(y @ rhs)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return Residuals(
        primal_infeas=primal_infeas,
        dual_infeas=dual_infeas,
        gap=float(gap),
        primal_objective=pobj,
        dual_objective=dobj,
        min_eigenvalues=tuple(_min_eig(blk, X[b]) for b, blk in enumerate(program.blocks)),
        min_dual_eigenvalues=tuple(
            _min_eig(blk, S[b]) if blk.kind is not BlockKind.FREE else float("inf")
            for b, blk in enumerate(program.blocks)
        ),
    )
