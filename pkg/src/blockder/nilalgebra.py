"""The Lie algebra N of strictly block upper triangular matrices.

Basis elements are the matrix units ``E^{ij}_{pq}`` (1 at position (p, q) of
block (i, j), i < j), ordered lexicographically by block and row-major
inside a block. Every coordinate-level object in the package uses this
order.
"""

from __future__ import annotations

from functools import cached_property
from typing import Sequence

from .exactfield import FieldSpec
from .matrixcore import (Mat, Partition, ShapeError, echelon_basis, embed_block,
                         is_strict_block_upper, sparse_nullspace, unit_matrix)


class NotInAlgebraError(ValueError):
    pass


class NilAlgebra:
    """N for a given field and partition."""

    def __init__(self, field: FieldSpec, partition: Partition):
        self.field = field
        self.partition = partition
        P = partition
        basis = []
        for i in range(1, P.t + 1):
            for j in range(i + 1, P.t + 1):
                for p in range(1, P.size(i) + 1):
                    for q in range(1, P.size(j) + 1):
                        basis.append((i, j, p, q))
        self.basis: tuple[tuple[int, int, int, int], ...] = tuple(basis)
        self.index = {b: k for k, b in enumerate(basis)}
        offs = P.offsets
        # 0-based global (row, col) of each basis unit
        self.positions = tuple((offs[i - 1] + p - 1, offs[j - 1] + q - 1) for i, j, p, q in basis)
        self.position_index = {pos: k for k, pos in enumerate(self.positions)}

    def __eq__(self, other):
        return (isinstance(other, NilAlgebra) and self.field == other.field
                and self.partition == other.partition)

    def __hash__(self):
        return hash((self.field, self.partition))

    def __repr__(self):
        return f"NilAlgebra({self.field}, ({self.partition}))"

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def t(self) -> int:
        return self.partition.t

    @property
    def is_zero(self) -> bool:
        """True when t = 1 and N = {0}."""
        return self.dim == 0

    def block(self, k: int) -> tuple[int, int]:
        i, j, _, _ = self.basis[k]
        return (i, j)

    def block_indices(self, i: int, j: int) -> list[int]:
        """Basis indices lying in N^{ij}, in basis order."""
        return [k for k, b in enumerate(self.basis) if b[0] == i and b[1] == j]

    @cached_property
    def blocks(self) -> tuple[tuple[int, int], ...]:
        t = self.t
        return tuple((i, j) for i in range(1, t + 1) for j in range(i + 1, t + 1))

    @cached_property
    def structure(self) -> dict[tuple[int, int], tuple[int, int]]:
        """``(a, b) -> (k, sign)`` with ``[e_a, e_b] = sign * e_k``; absent means 0.

        A product of two units in N is again a unit, and ``e_a e_b`` and
        ``e_b e_a`` cannot both be nonzero, so each bracket is a signed unit.
        """
        table = {}
        pos = self.positions
        where = self.position_index
        for a, (ra, ca) in enumerate(pos):
            for b, (rb, cb) in enumerate(pos):
                if ca == rb:
                    table[(a, b)] = (where[(ra, cb)], 1)
                elif cb == ra:
                    table[(a, b)] = (where[(rb, ca)], -1)
        return table

    @cached_property
    def right_action(self) -> list[list[tuple[int, int, int]]]:
        """For each b: the list of ``(a, k, sign)`` with ``[e_a, e_b] = sign e_k``."""
        out = [[] for _ in range(self.dim)]
        for (a, b), (k, s) in self.structure.items():
            out[b].append((a, k, s))
        return out

    @cached_property
    def left_action(self) -> list[list[tuple[int, int, int]]]:
        """For each a: the list of ``(b, k, sign)`` with ``[e_a, e_b] = sign e_k``."""
        out = [[] for _ in range(self.dim)]
        for (a, b), (k, s) in self.structure.items():
            out[a].append((b, k, s))
        return out

    def header(self) -> dict:
        return {"field": self.field.characteristic, "partition": self.partition.to_json()}

    @classmethod
    def from_header(cls, obj: dict) -> "NilAlgebra":
        return cls(FieldSpec(int(obj["field"])), Partition.from_json(obj["partition"]))


def standard_basis_elem(L: NilAlgebra, i: int, j: int, p: int, q: int) -> Mat:
    P = L.partition
    if not i < j:
        raise IndexError(f"E^{{{i}{j}}} is not in N (needs i < j)")
    return embed_block(unit_matrix(L.field, P.size(i), P.size(j), p, q), i, j, P)


def bracket(A: Mat, B: Mat) -> Mat:
    if A.shape != B.shape or A.rows != A.cols:
        raise ShapeError(f"bracket needs equal square shapes, got {A.shape}, {B.shape}")
    return A @ B - B @ A


def to_coordinates(L: NilAlgebra, A: Mat) -> tuple:
    if not is_strict_block_upper(A, L.partition):
        raise NotInAlgebraError("matrix is not strictly block upper triangular")
    return tuple(A.entries[r][c] for r, c in L.positions)


def from_coordinates(L: NilAlgebra, v: Sequence) -> Mat:
    if len(v) != L.dim:
        raise ShapeError(f"expected {L.dim} coordinates, got {len(v)}")
    F = L.field
    n = L.partition.n
    rows = [[F.zero] * n for _ in range(n)]
    for (r, c), x in zip(L.positions, v):
        rows[r][c] = F.elem(x)
    return Mat._raw(F, [tuple(r) for r in rows], n)


def vector_bracket(L: NilAlgebra, u: Sequence, v: Sequence) -> list:
    """Bracket of two coordinate vectors via structure constants."""
    F = L.field
    out = [F.zero] * L.dim
    nz_v = [(b, y) for b, y in enumerate(v) if y]
    for a, x in enumerate(u):
        if not x:
            continue
        for b, y in nz_v:
            e = L.structure.get((a, b))
            if e:
                k, s = e
                out[k] = F.add(out[k], F.mul(s, F.mul(x, y)))
    return out


def derived_algebra_basis(L: NilAlgebra) -> list[int]:
    """Indices of E^{ij}_{pq} with j > i + 1."""
    return [k for k, (i, j, _, _) in enumerate(L.basis) if j > i + 1]


def center_basis(L: NilAlgebra) -> list[int]:
    """Indices of the top-right block N^{1t}; empty when ``L.is_zero``."""
    if L.t < 2:
        return []
    return L.block_indices(1, L.t)


def derived_algebra_bruteforce(L: NilAlgebra) -> list[tuple]:
    """RREF basis of span{[e_a, e_b]} computed from raw matrix brackets."""
    basis = [from_coordinates(L, _unit(L, k)) for k in range(L.dim)]
    vecs = [to_coordinates(L, bracket(x, y)) for x in basis for y in basis]
    return echelon_basis(vecs, L.field, L.dim)


def center_bruteforce(L: NilAlgebra) -> list[tuple]:
    """RREF basis of the centralizer of N, as the kernel of the stacked ad-action."""
    F = L.field
    d = L.dim
    mats = [from_coordinates(L, _unit(L, k)) for k in range(d)]
    # row (b, c): c-th coordinate of [x, e_b] as a linear form in x
    rows = []
    for b in range(d):
        images = [to_coordinates(L, bracket(mats[a], mats[b])) for a in range(d)]
        for c in range(d):
            rows.append({a: images[a][c] for a in range(d) if images[a][c]})
    return echelon_basis(sparse_nullspace(rows, d, F), F, d)


def _unit(L: NilAlgebra, k: int) -> tuple:
    F = L.field
    return tuple(F.one if i == k else F.zero for i in range(L.dim))
