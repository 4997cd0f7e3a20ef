"""Dense exact matrices, block partitions and Gaussian elimination.

All public indices are 1-based (blocks and entries) to line up with the
usual matrix-unit notation; storage is 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import accumulate
from typing import Iterable, Sequence

from .exactfield import FieldSpec


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Block sizes ``(n_1, ..., n_t)`` of a square matrix."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes:
            raise ShapeError("partition needs at least one block")
        if any((not isinstance(s, int)) or s < 1 for s in sizes):
            raise ShapeError(f"block sizes must be positive integers: {sizes}")

    @property
    def t(self) -> int:
        return len(self.sizes)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        """0-based start of each block, followed by ``n``."""
        return (0,) + tuple(accumulate(self.sizes))

    def size(self, i: int) -> int:
        self._check_block(i)
        return self.sizes[i - 1]

    def block_index(self, r: int) -> int:
        """1-based block containing 0-based global row/column ``r``."""
        offs = self.offsets
        for i in range(self.t):
            if offs[i] <= r < offs[i + 1]:
                return i + 1
        raise IndexError(r)

    def _check_block(self, i: int):
        if not 1 <= i <= self.t:
            raise IndexError(f"block index {i} outside 1..{self.t}")

    def to_json(self) -> dict:
        return {"sizes": list(self.sizes)}

    @classmethod
    def from_json(cls, obj: dict) -> "Partition":
        return cls(tuple(int(s) for s in obj["sizes"]))

    @classmethod
    def parse(cls, text: str) -> "Partition":
        try:
            return cls(tuple(int(s) for s in text.split(",") if s.strip()))
        except ValueError as exc:
            raise ShapeError(f"malformed partition {text!r}") from exc

    def __str__(self):
        return ",".join(map(str, self.sizes))


def compositions(n: int) -> list[tuple[int, ...]]:
    """All ordered tuples of positive integers summing to ``n``."""
    if n == 0:
        return [()]
    out = []
    for first in range(1, n + 1):
        out.extend((first,) + rest for rest in compositions(n - first))
    return out


class Mat:
    """Immutable dense matrix over a :class:`FieldSpec`."""

    __slots__ = ("field", "rows", "cols", "entries", "_hash")

    def __init__(self, field: FieldSpec, entries: Sequence[Sequence], cols: int | None = None):
        rows = [tuple(field.elem(x) for x in row) for row in entries]
        if cols is None:
            if not rows:
                raise ShapeError("cannot infer column count of an empty matrix")
            cols = len(rows[0])
        if any(len(r) != cols for r in rows):
            raise ShapeError("ragged matrix entries")
        self.field = field
        self.rows = len(rows)
        self.cols = cols
        self.entries = tuple(rows)
        self._hash = None

    @classmethod
    def _raw(cls, field, rows, cols):
        # rows already canonical tuples
        m = cls.__new__(cls)
        m.field = field
        m.rows = len(rows)
        m.cols = cols
        m.entries = tuple(rows)
        m._hash = None
        return m

    @classmethod
    def zeros(cls, field: FieldSpec, r: int, c: int) -> "Mat":
        z = field.zero
        return cls._raw(field, [(z,) * c for _ in range(r)], c)

    @classmethod
    def identity(cls, field: FieldSpec, n: int) -> "Mat":
        z, o = field.zero, field.one
        return cls._raw(field, [tuple(o if i == j else z for j in range(n)) for i in range(n)], n)

    @classmethod
    def column(cls, field: FieldSpec, values: Sequence) -> "Mat":
        return cls(field, [[v] for v in values], 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, idx):
        r, c = idx
        return self.entries[r][c]

    def __eq__(self, other):
        if not isinstance(other, Mat):
            return NotImplemented
        return (self.field == other.field and self.shape == other.shape
                and self.entries == other.entries)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.field, self.rows, self.cols, self.entries))
        return self._hash

    def __repr__(self):
        F = self.field
        body = "; ".join(" ".join(F.format(x) for x in row) for row in self.entries)
        return f"Mat[{F}]({self.rows}x{self.cols}: {body})"

    def _same_shape(self, other: "Mat"):
        if self.shape != other.shape or self.field != other.field:
            raise ShapeError(f"shape/field mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: "Mat") -> "Mat":
        self._same_shape(other)
        add = self.field.add
        return Mat._raw(self.field, [tuple(add(a, b) for a, b in zip(r, s))
                                     for r, s in zip(self.entries, other.entries)], self.cols)

    def __sub__(self, other: "Mat") -> "Mat":
        self._same_shape(other)
        sub = self.field.sub
        return Mat._raw(self.field, [tuple(sub(a, b) for a, b in zip(r, s))
                                     for r, s in zip(self.entries, other.entries)], self.cols)

    def __neg__(self) -> "Mat":
        neg = self.field.neg
        return Mat._raw(self.field, [tuple(neg(a) for a in r) for r in self.entries], self.cols)

    def scale(self, c) -> "Mat":
        F = self.field
        c = F.elem(c)
        return Mat._raw(F, [tuple(F.mul(c, a) for a in r) for r in self.entries], self.cols)

    def __matmul__(self, other: "Mat") -> "Mat":
        if self.cols != other.rows or self.field != other.field:
            raise ShapeError(f"cannot multiply {self.shape} by {other.shape}")
        F = self.field
        p = F.characteristic
        zero = F.zero
        cols = list(zip(*other.entries)) if other.rows else [()] * other.cols
        out = []
        for row in self.entries:
            nz = [(k, a) for k, a in enumerate(row) if a]
            new = []
            for col in cols:
                s = zero
                for k, a in nz:
                    b = col[k]
                    if b:
                        s += a * b
                new.append(s % p if p else s)
            out.append(tuple(new))
        return Mat._raw(F, out, other.cols)

    def transpose(self) -> "Mat":
        return Mat._raw(self.field, list(zip(*self.entries)) if self.rows else [], self.rows)

    def is_zero(self) -> bool:
        return not any(any(r) for r in self.entries)

    def support(self) -> list[tuple[int, int]]:
        """0-based positions of nonzero entries."""
        return [(i, j) for i, r in enumerate(self.entries) for j, a in enumerate(r) if a]

    def submatrix(self, r0: int, r1: int, c0: int, c1: int) -> "Mat":
        return Mat._raw(self.field, [row[c0:c1] for row in self.entries[r0:r1]], c1 - c0)

    def flat(self) -> tuple:
        """Row-major entries."""
        return tuple(x for row in self.entries for x in row)

    def to_json(self) -> dict:
        fmt = self.field.format
        return {"rows": self.rows, "cols": self.cols,
                "entries": [[fmt(x) for x in row] for row in self.entries]}

    @classmethod
    def from_json(cls, field: FieldSpec, obj: dict) -> "Mat":
        r, c = int(obj["rows"]), int(obj["cols"])
        entries = obj["entries"]
        if len(entries) != r or any(len(row) != c for row in entries):
            raise ShapeError(f"entries do not match declared shape {r}x{c}")
        return cls(field, [[field.parse(str(x)) for x in row] for row in entries], c)


def unit_matrix(field: FieldSpec, m: int, n: int, p: int, q: int) -> Mat:
    """The (p, q) standard matrix of size m x n."""
    if not (1 <= p <= m and 1 <= q <= n):
        raise IndexError(f"unit position ({p},{q}) outside {m}x{n}")
    z, o = field.zero, field.one
    rows = [tuple(o if (i == p - 1 and j == q - 1) else z for j in range(n)) for i in range(m)]
    return Mat._raw(field, rows, n)


def _check_square(A: Mat, P: Partition):
    if A.shape != (P.n, P.n):
        raise ShapeError(f"matrix {A.shape} does not fit partition of n={P.n}")


def block_of(A: Mat, i: int, j: int, P: Partition) -> Mat:
    _check_square(A, P)
    P._check_block(i)
    P._check_block(j)
    offs = P.offsets
    return A.submatrix(offs[i - 1], offs[i], offs[j - 1], offs[j])


def embed_block(B: Mat, i: int, j: int, P: Partition) -> Mat:
    if B.shape != (P.size(i), P.size(j)):
        raise ShapeError(f"block ({i},{j}) expects {P.size(i)}x{P.size(j)}, got {B.shape}")
    F = B.field
    offs = P.offsets
    z = F.zero
    rows = [[z] * P.n for _ in range(P.n)]
    r0, c0 = offs[i - 1], offs[j - 1]
    for a, row in enumerate(B.entries):
        rows[r0 + a][c0:c0 + B.cols] = row
    return Mat._raw(F, [tuple(r) for r in rows], P.n)


def is_block_upper(A: Mat, P: Partition) -> bool:
    _check_square(A, P)
    return all(P.block_index(r) <= P.block_index(c) for r, c in A.support())


def is_strict_block_upper(A: Mat, P: Partition) -> bool:
    _check_square(A, P)
    return all(P.block_index(r) < P.block_index(c) for r, c in A.support())


# --- elimination -----------------------------------------------------------

def _echelon(rows: Iterable[dict], field: FieldSpec) -> dict[int, dict]:
    """Reduced row echelon form of sparse rows.

    Rows are ``{column: nonzero canonical element}``. Returns
    ``{pivot column: row}`` where each row has a 1 in its pivot column,
    nothing left of it, and zeros in every other pivot column.
    """
    p = field.characteristic
    inv = field.inv
    pivots: dict[int, dict] = {}
    for src in rows:
        row = {c: v for c, v in src.items() if v}
        while row:
            lead = min(row)
            prow = pivots.get(lead)
            if prow is None:
                s = inv(row[lead])
                if p:
                    row = {c: v * s % p for c, v in row.items()}
                else:
                    row = {c: v * s for c, v in row.items()}
                pivots[lead] = row
                break
            coef = row[lead]
            for c, v in prow.items():
                nv = row.get(c, 0) - coef * v
                if p:
                    nv %= p
                if nv:
                    row[c] = nv
                else:
                    row.pop(c, None)
    leads = sorted(pivots)
    for idx in range(len(leads) - 1, -1, -1):
        c = leads[idx]
        prow = pivots[c]
        for c2 in leads[:idx]:
            row = pivots[c2]
            coef = row.get(c)
            if not coef:
                continue
            for k, v in prow.items():
                nv = row.get(k, 0) - coef * v
                if p:
                    nv %= p
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
    return pivots


def _sparse_rows(A: Mat) -> list[dict]:
    return [{j: a for j, a in enumerate(row) if a} for row in A.entries]


def sparse_nullspace(rows: Iterable[dict], ncols: int, field: FieldSpec) -> list[tuple]:
    """Kernel basis of a sparse system, one dense tuple per free column."""
    pivots = _echelon(rows, field)
    zero = field.zero
    neg = field.neg
    basis = []
    for free in range(ncols):
        if free in pivots:
            continue
        v = [zero] * ncols
        v[free] = field.one
        for c, row in pivots.items():
            a = row.get(free)
            if a:
                v[c] = neg(a)
        basis.append(tuple(v))
    return basis


def nullspace(A: Mat) -> list[Mat]:
    """Basis of ``{x : A x = 0}`` as column matrices.

    Vectors come in increasing order of their free column; each has a 1 in
    its own free column and 0 in every other free column.
    """
    return [Mat.column(A.field, v) for v in sparse_nullspace(_sparse_rows(A), A.cols, A.field)]


def rank(A: Mat) -> int:
    return len(_echelon(_sparse_rows(A), A.field))


def rref(A: Mat) -> Mat:
    F = A.field
    pivots = _echelon(_sparse_rows(A), F)
    zero = F.zero
    out = []
    for c in sorted(pivots):
        row = [zero] * A.cols
        for k, v in pivots[c].items():
            row[k] = v
        out.append(tuple(row))
    out.extend([(zero,) * A.cols] * (A.rows - len(out)))
    return Mat._raw(F, out, A.cols)


def echelon_basis(vectors: Iterable[Sequence], field: FieldSpec, ncols: int) -> list[tuple]:
    """Canonical basis (RREF rows) of the span of ``vectors``."""
    rows = ({j: a for j, a in enumerate(v) if a} for v in vectors)
    pivots = _echelon(rows, field)
    zero = field.zero
    out = []
    for c in sorted(pivots):
        row = [zero] * ncols
        for k, v in pivots[c].items():
            row[k] = v
        out.append(tuple(row))
    return out


def in_span(vector: Sequence, basis: Sequence[Sequence], field: FieldSpec) -> bool:
    """Membership test by rank comparison."""
    base = _echelon(({j: a for j, a in enumerate(v) if a} for v in basis), field)
    extended = _echelon(
        [dict(r) for r in base.values()] + [{j: a for j, a in enumerate(vector) if a}], field)
    return len(extended) == len(base)


def solve(A: Mat, b: Sequence) -> tuple | None:
    """One solution of ``A x = b`` (free variables set to 0), or None."""
    F = A.field
    if len(b) != A.rows:
        raise ShapeError("right-hand side length mismatch")
    n = A.cols
    rows = []
    for row, rhs in zip(A.entries, b):
        d = {j: a for j, a in enumerate(row) if a}
        rhs = F.elem(rhs)
        if rhs:
            d[n] = rhs
        rows.append(d)
    pivots = _echelon(rows, F)
    if n in pivots:
        return None
    x = [F.zero] * n
    for c, row in pivots.items():
        x[c] = row.get(n, F.zero)
    return tuple(x)
