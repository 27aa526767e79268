"""Plain-text listing of a :class:`ConeProgram` for cross-checking with other solvers.

Grammar (one record per line, fields separated by single spaces, ``#`` starts
a comment line)::

    program   := header block+ section+ "end"
    header    := "coneprogram 1"
    block     := "block" INDEX KIND SIZE          KIND in hermitian|symmetric|nonneg|free
    section   := ("objective" | "constraint" NAME REL RHS) entry*
    entry     := "entry" BLOCK ROW COL RE IM      matrix blocks, ROW <= COL
               | "entry" BLOCK POS RE             scalar blocks
    REL       := "=" | "<=" | ">="
    NAME      := identifier, "-" when unnamed

Matrix entries list the upper triangle only; the lower triangle is the
conjugate. Numbers use ``repr`` so a dump round-trips exactly. Zero entries
are omitted.
"""
from __future__ import annotations

import numpy as np

from .program import Block, BlockKind, ConeProgram, Constraint, DomainError, Relation

HEADER = "coneprogram 1"


def _entries(blocks, coefs):
    lines = []
    for b in sorted(coefs):
        arr = coefs[b]
        if blocks[b].kind.is_matrix:
            n = blocks[b].size
            for i in range(n):
                for j in range(i, n):
                    v = complex(arr[i, j])
                    if v != 0:
                        lines.append(f"entry {b} {i} {j} {v.real!r} {v.imag!r}")
        else:
            for i, v in enumerate(arr):
                if v != 0:
                    lines.append(f"entry {b} {i} {float(v)!r}")
    return lines


def dumps(program: ConeProgram) -> str:
    lines = [HEADER]
    for i, blk in enumerate(program.blocks):
        lines.append(f"block {i} {blk.kind.value} {blk.size}")
    lines.append("objective")
    lines += _entries(program.blocks, program.objective)
    for c in program.constraints:
        lines.append(f"constraint {c.name or '-'} {c.relation.value} {c.rhs!r}")
        lines += _entries(program.blocks, c.coefs)
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads(text: str) -> ConeProgram:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != HEADER:
        raise DomainError("missing coneprogram header")
    if lines[-1] != "end":
        raise DomainError("missing end marker")
    blocks: list[Block] = []
    sections: list[tuple] = []  # (name, relation, rhs, coefs); objective has relation None
    for lineno, ln in enumerate(lines[1:-1], start=2):
        tok = ln.split()
        if tok[0] == "block":
            if sections:
                raise DomainError(f"line {lineno}: block after first section")
            if int(tok[1]) != len(blocks):
                raise DomainError(f"line {lineno}: blocks must be listed in order")
            blocks.append(Block(BlockKind(tok[2]), int(tok[3])))
        elif tok[0] == "objective":
            sections.append((None, None, 0.0, {}))
        elif tok[0] == "constraint":
            name = "" if tok[1] == "-" else tok[1]
            sections.append((name, Relation(tok[2]), float(tok[3]), {}))
        elif tok[0] == "entry":
            if not sections:
                raise DomainError(f"line {lineno}: entry outside a section")
            coefs = sections[-1][3]
            b = int(tok[1])
            blk = blocks[b]
            if b not in coefs:
                coefs[b] = np.zeros(blk.shape, dtype=blk.dtype)
            if blk.kind.is_matrix:
                i, j = int(tok[2]), int(tok[3])
                v = complex(float(tok[4]), float(tok[5]))
                if blk.kind is BlockKind.SYMMETRIC:
                    if v.imag != 0:
                        raise DomainError(f"line {lineno}: imaginary entry in a symmetric block")
                    v = v.real
                coefs[b][i, j] = v
                coefs[b][j, i] = np.conj(v)
            else:
                coefs[b][int(tok[2])] = float(tok[3])
        else:
            raise DomainError(f"line {lineno}: unknown record {tok[0]!r}")
    if not sections or sections[0][1] is not None:
        raise DomainError("objective section must come first")
    constraints = tuple(Constraint(c, rel, rhs, name) for name, rel, rhs, c in sections[1:])
    return ConeProgram(tuple(blocks), sections[0][3], constraints)


def dump(program: ConeProgram, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(program))


def load(path) -> ConeProgram:
    with open(path) as fh:
        return loads(fh.read())
