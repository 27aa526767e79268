"""Containers for block-structured conic programs and their solutions."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class BlockKind(str, enum.Enum):
    HERMITIAN = "hermitian"
    SYMMETRIC = "symmetric"
    NONNEG = "nonneg"
    FREE = "free"

    @property
    def is_matrix(self) -> bool:
        return self in (BlockKind.HERMITIAN, BlockKind.SYMMETRIC)


class Relation(str, enum.Enum):
    EQ = "="
    LE = "<="
    GE = ">="


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    MAX_ITERATIONS = "MaxIterations"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class Block:
    """A variable block: a matrix cone of order ``size`` or a vector of ``size`` scalars."""

    kind: BlockKind
    size: int

    def __post_init__(self):
        object.__setattr__(self, "kind", BlockKind(self.kind))
        if self.size < 1:
            raise DomainError(f"block size must be positive, got {self.size}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.size, self.size) if self.kind.is_matrix else (self.size,)

    @property
    def dtype(self):
        return complex if self.kind is BlockKind.HERMITIAN else float


def hermitian_residual(A: np.ndarray) -> float:
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(A - A.conj().T)))


def _check_coef(block: Block, coef, where: str) -> np.ndarray:
    arr = np.asarray(coef, dtype=block.dtype)
    if block.kind.is_matrix and arr.ndim == 0 and block.size == 1:
        arr = arr.reshape(1, 1)
    if block.kind is BlockKind.NONNEG or block.kind is BlockKind.FREE:
        arr = np.atleast_1d(arr)
    if arr.shape != block.shape:
        raise DomainError(f"{where}: coefficient shape {arr.shape} does not match block {block.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{where}: non-finite coefficient")
    if block.kind.is_matrix and hermitian_residual(arr) > 1e-9 * max(1.0, float(np.max(np.abs(arr)))):
        raise DomainError(f"{where}: coefficient is not symmetric/Hermitian")
    if block.kind.is_matrix:
        arr = 0.5 * (arr + arr.conj().T)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Constraint:
    """``sum_b <coefs[b], X_b> (relation) rhs``."""

    coefs: dict
    relation: Relation
    rhs: float
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "relation", Relation(self.relation))
        object.__setattr__(self, "rhs", float(self.rhs))


@dataclass(frozen=True)
class ConeProgram:
    """Minimize a linear objective over a product of PSD / nonnegative / free blocks.

    ``objective`` and each constraint's ``coefs`` map block index to a coefficient
    with the block's shape; absent blocks have zero coefficient. The inner product
    on Hermitian blocks is ``Re Tr(A X)``.
    """

    blocks: tuple
    objective: dict
    constraints: tuple

    def __post_init__(self):
        blocks = tuple(b if isinstance(b, Block) else Block(*b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise DomainError("program has no blocks")
        obj = {int(k): _check_coef(blocks[k], v, "objective") for k, v in self.objective.items()}
        object.__setattr__(self, "objective", obj)
        cons = []
        for i, c in enumerate(self.constraints):
            coefs = {int(k): _check_coef(blocks[k], v, f"constraint {c.name or i}") for k, v in c.coefs.items()}
            if not np.isfinite(c.rhs):
                raise DomainError(f"constraint {c.name or i}: non-finite right-hand side")
            cons.append(Constraint(coefs, c.relation, c.rhs, c.name))
        if not cons:
            raise DomainError("program needs at least one constraint")
        object.__setattr__(self, "constraints", tuple(cons))

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def constraint_index(self, name: str) -> int:
        for i, c in enumerate(self.constraints):
            if c.name == name:
                return i
        raise KeyError(name)

    def evaluate(self, coefs: dict, primal: list) -> float:
        total = 0.0
        for b, coef in coefs.items():
            total += float(np.real(np.vdot(coef, primal[b])))
        return total

    def objective_value(self, primal: list) -> float:
        return self.evaluate(self.objective, primal)


@dataclass(frozen=True)
class SolverOptions:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iterations: int = 100
    step_fraction: float = 0.98
    infeasibility_tol: float = 1e-8

    def __post_init__(self):
        for name in ("gap_tol", "feas_tol", "infeasibility_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be positive")
        if not 0.0 < self.step_fraction < 1.0:
            raise DomainError("step_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class Residuals:
    primal_infeas: float
    dual_infeas: float
    gap: float
    primal_objective: float
    dual_objective: float
    min_eigenvalues: tuple  # per block, of the primal variable
    min_dual_eigenvalues: tuple  # per block, of the dual slack


@dataclass(frozen=True)
class ConeSolution:
    """Primal/dual pair returned by :func:`swiptsec.sdp.solve`.

    ``multipliers`` are reported with a sign convention that makes every
    inequality multiplier nonnegative: the Lagrangian is
    ``<C,X> + sum_{<=} m_i (a_i(X) - b_i) - sum_{>=} m_i (a_i(X) - b_i)
    - sum_{=} m_i (a_i(X) - b_i) - sum_b <S_b, X_b>``.
    """

    status: SolveStatus
    primal: list
    multipliers: np.ndarray
    dual_slacks: list
    duality_gap: float
    primal_infeas: float
    dual_infeas: float
    primal_objective: float
    dual_objective: float
    iterations: int
    names: tuple = field(default=())

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def multiplier(self, name: str) -> float:
        return float(self.multipliers[self.names.index(name)])
