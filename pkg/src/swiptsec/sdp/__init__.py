"""Self-contained interior-point solver for small block-structured SDPs."""
from .embedding import embed_hermitian, unembed
from .program import (
    Block,
    BlockKind,
    ConeProgram,
    ConeSolution,
    Constraint,
    DomainError,
    Relation,
    Residuals,
    SolverOptions,
    SolveStatus,
)
from .residuals import residuals
from .solver import solve

__all__ = [
    "Block",
    "BlockKind",
    "ConeProgram",
    "ConeSolution",
    "Constraint",
    "DomainError",
    "Relation",
    "Residuals",
    "SolverOptions",
    "SolveStatus",
    "embed_hermitian",
    "residuals",
    "solve",
    "unembed",
]
