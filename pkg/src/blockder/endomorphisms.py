"""Linear endomorphisms of N in coordinates, and derivations among them."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable, Iterable, Sequence

from .matrixcore import Mat, ShapeError, echelon_basis, in_span, is_block_upper, sparse_nullspace
from .nilalgebra import NilAlgebra, from_coordinates, to_coordinates


class NotBlockUpperError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Endo:
    """Endomorphism of N; column k of ``matrix`` is the image of basis element k."""

    algebra: NilAlgebra
    matrix: Mat

    def __post_init__(self):
        d = self.algebra.dim
        if self.matrix.shape != (d, d) or self.matrix.field != self.algebra.field:
            raise ShapeError(f"endomorphism matrix must be {d}x{d} over {self.algebra.field}")

    # construction --------------------------------------------------------

    @classmethod
    def zero(cls, L: NilAlgebra) -> "Endo":
        return cls(L, Mat.zeros(L.field, L.dim, L.dim))

    @classmethod
    def from_columns(cls, L: NilAlgebra, columns: Sequence[Sequence]) -> "Endo":
        d = L.dim
        if len(columns) != d:
            raise ShapeError(f"need {d} columns")
        rows = [[columns[a][c] for a in range(d)] for c in range(d)]
        return cls(L, Mat(L.field, rows, d))

    @classmethod
    def from_images(cls, L: NilAlgebra, images: dict[int, dict[int, object]]) -> "Endo":
        """Sparse constructor: ``images[a][c]`` is coordinate c of f(e_a)."""
        F = L.field
        d = L.dim
        rows = [[F.zero] * d for _ in range(d)]
        for a, img in images.items():
            for c, v in img.items():
                rows[c][a] = F.add(rows[c][a], F.elem(v))
        return cls(L, Mat._raw(F, [tuple(r) for r in rows], d))

    @classmethod
    def from_function(cls, L: NilAlgebra, fn: Callable[[Mat], Mat]) -> "Endo":
        """Tabulate a linear map given on matrices of N."""
        cols = []
        for k in range(L.dim):
            e = from_coordinates(L, _unit(L, k))
            cols.append(to_coordinates(L, fn(e)))
        return cls.from_columns(L, cols)

    @classmethod
    def from_vector(cls, L: NilAlgebra, v: Sequence) -> "Endo":
        """Inverse of :meth:`vector` (row-major flattening)."""
        d = L.dim
        return cls(L, Mat._raw(L.field, [tuple(v[c * d:(c + 1) * d]) for c in range(d)], d))

    # access ----------------------------------------------------------------

    @property
    def field(self):
        return self.algebra.field

    @cached_property
    def columns(self) -> tuple[tuple, ...]:
        d = self.algebra.dim
        return tuple(tuple(self.matrix.entries[c][a] for c in range(d)) for a in range(d))

    @cached_property
    def sparse_columns(self) -> tuple[tuple[tuple[int, object], ...], ...]:
        return tuple(tuple((c, x) for c, x in enumerate(col) if x) for col in self.columns)

    def vector(self) -> tuple:
        return self.matrix.flat()

    def apply(self, v: Sequence) -> tuple:
        F = self.field
        out = [F.zero] * self.algebra.dim
        for a, x in enumerate(v):
            if x:
                for c, y in self.sparse_columns[a]:
                    out[c] = F.add(out[c], F.mul(x, y))
        return tuple(out)

    def apply_matrix(self, A: Mat) -> Mat:
        L = self.algebra
        return from_coordinates(L, self.apply(to_coordinates(L, A)))

    def image_block(self, k: int, i: int, j: int) -> Mat:
        """Block (i, j) of f(e_k), as an n_i x n_j matrix."""
        L = self.algebra
        P = L.partition
        F = self.field
        rows = [[F.zero] * P.size(j) for _ in range(P.size(i))]
        for c, x in self.sparse_columns[k]:
            bi, bj, p, q = L.basis[c]
            if (bi, bj) == (i, j):
                rows[p - 1][q - 1] = x
        return Mat._raw(F, [tuple(r) for r in rows], P.size(j))

    def image_blocks(self, i: int, j: int) -> set[tuple[int, int]]:
        """Blocks touched by f(N^{ij})."""
        L = self.algebra
        out = set()
        for k in L.block_indices(i, j):
            for c, _ in self.sparse_columns[k]:
                out.add(L.block(c))
        return out

    def restrict(self, keep: Callable[[int, int], bool]) -> "Endo":
        """Keep only matrix coefficients (c, a) with ``keep(a, c)``."""
        F = self.field
        d = self.algebra.dim
        rows = [tuple(x if (x and keep(a, c)) else F.zero for a, x in enumerate(row))
                for c, row in enumerate(self.matrix.entries)]
        return Endo(self.algebra, Mat._raw(F, rows, d))

    def is_zero(self) -> bool:
        return self.matrix.is_zero()

    # algebra ---------------------------------------------------------------

    def _check(self, other: "Endo"):
        if self.algebra != other.algebra:
            raise ShapeError("endomorphisms of different algebras")

    def __add__(self, other: "Endo") -> "Endo":
        self._check(other)
        return Endo(self.algebra, self.matrix + other.matrix)

    def __sub__(self, other: "Endo") -> "Endo":
        self._check(other)
        return Endo(self.algebra, self.matrix - other.matrix)

    def __neg__(self) -> "Endo":
        return Endo(self.algebra, -self.matrix)

    def scale(self, c) -> "Endo":
        return Endo(self.algebra, self.matrix.scale(c))

    def __matmul__(self, other: "Endo") -> "Endo":
        """Composition ``self after other``."""
        self._check(other)
        return Endo(self.algebra, self.matrix @ other.matrix)

    def commutator(self, other: "Endo") -> "Endo":
        return self @ other - other @ self

    def __eq__(self, other):
        if not isinstance(other, Endo):
            return NotImplemented
        return self.algebra == other.algebra and self.matrix == other.matrix

    def __hash__(self):
        return hash((self.algebra, self.matrix))

    def __repr__(self):
        return f"Endo({self.algebra}, nnz={sum(len(c) for c in self.sparse_columns)})"

    def describe(self) -> list[str]:
        """Human-readable images of basis elements, skipping zeros."""
        L = self.algebra
        F = self.field
        lines = []
        for a, col in enumerate(self.sparse_columns):
            if not col:
                continue
            terms = " + ".join(f"{F.format(x)}*{basis_name(L, c)}" for c, x in col)
            lines.append(f"{basis_name(L, a)} -> {terms}")
        return lines

    # serialization -----------------------------------------------------------

    def to_json(self) -> dict:
        return {"algebra": self.algebra.header(), "matrix": self.matrix.to_json()}

    @classmethod
    def from_json(cls, obj: dict, algebra: NilAlgebra | None = None) -> "Endo":
        L = NilAlgebra.from_header(obj["algebra"])
        if algebra is not None and algebra != L:
            raise ShapeError("endomorphism header does not match the expected algebra")
        return cls(L, Mat.from_json(L.field, obj["matrix"]))


def basis_name(L: NilAlgebra, k: int) -> str:
    i, j, p, q = L.basis[k]
    return f"E^{i},{j}_{p},{q}"


def _unit(L: NilAlgebra, k: int) -> tuple:
    F = L.field
    return tuple(F.one if i == k else F.zero for i in range(L.dim))


# --- derivations -------------------------------------------------------------

def leibniz_defect(f: Endo):
    """First ordered basis pair violating the Leibniz rule.

    Returns ``None`` for a derivation, otherwise ``(a, b, defect)`` where
    ``defect = [f(e_a), e_b] + [e_a, f(e_b)] - f([e_a, e_b])`` in coordinates.
    """
    L = f.algebra
    F = f.field
    p = F.characteristic
    d = L.dim
    cols = f.sparse_columns
    right, left, structure = L.right_action, L.left_action, L.structure
    for a in range(d):
        fa = dict(cols[a])
        for b in range(d):
            acc: dict[int, object] = {}
            for x, k, s in right[b]:
                v = fa.get(x)
                if v:
                    acc[k] = acc.get(k, 0) + s * v
            if left[a]:
                fb = dict(cols[b])
                for y, k, s in left[a]:
                    v = fb.get(y)
                    if v:
                        acc[k] = acc.get(k, 0) + s * v
            e = structure.get((a, b))
            if e:
                k0, s0 = e
                for c, v in cols[k0]:
                    acc[c] = acc.get(c, 0) - s0 * v
            bad = {c: (v % p if p else v) for c, v in acc.items()}
            bad = {c: v for c, v in bad.items() if v}
            if bad:
                defect = tuple(F.elem(bad.get(c, 0)) for c in range(d))
                return (a, b, defect)
    return None


def is_derivation(f: Endo) -> bool:
    return leibniz_defect(f) is None


def ad_endo(L: NilAlgebra, X: Mat) -> Endo:
    """Y -> [X, Y] for block upper triangular X."""
    if not is_block_upper(X, L.partition):
        raise NotBlockUpperError("ad X leaves N unless X is block upper triangular")
    F = L.field
    n = L.partition.n
    where = L.position_index
    E = X.entries
    images = {}
    for a, (r, c) in enumerate(L.positions):
        img: dict[int, object] = {}
        # X E_rc - E_rc X = sum_i X[i][r] E_ic - sum_j X[c][j] E_rj
        for i in range(n):
            x = E[i][r]
            if x:
                k = where[(i, c)]
                img[k] = F.add(img.get(k, F.zero), x)
        for j in range(n):
            x = E[c][j]
            if x:
                k = where[(r, j)]
                img[k] = F.sub(img.get(k, F.zero), x)
        images[a] = img
    return Endo.from_images(L, images)


def leibniz_rows(L: NilAlgebra, relabel: Sequence[int] | None = None) -> list[dict]:
    """Linear constraints on the d^2 unknowns ``F[c][x]`` (index ``c*d + x``).

    One row per ordered basis pair (a, b) and output coordinate c. With
    ``relabel``, basis element k is renamed ``relabel[k]`` before indexing
    the unknowns.
    """
    d = L.dim
    lab = list(range(d)) if relabel is None else list(relabel)
    right, left, structure = L.right_action, L.left_action, L.structure
    rows = []
    for a in range(d):
        for b in range(d):
            acc: dict[int, dict[int, int]] = {}
            for x, k, s in right[b]:
                row = acc.setdefault(k, {})
                u = lab[x] * d + lab[a]
                row[u] = row.get(u, 0) + s
            for y, k, s in left[a]:
                row = acc.setdefault(k, {})
                u = lab[y] * d + lab[b]
                row[u] = row.get(u, 0) + s
            e = structure.get((a, b))
            if e:
                k0, s0 = e
                for c in range(d):
                    row = acc.setdefault(c, {})
                    u = lab[c] * d + lab[k0]
                    row[u] = row.get(u, 0) - s0
            for row in acc.values():
                rows.append(row)
    return rows


@dataclass(frozen=True, eq=False)
class DerBasis:
    """Echelon-normalized basis of a space of endomorphisms."""

    algebra: NilAlgebra
    generators: tuple[Endo, ...] = dc_field(default=())

    @classmethod
    def from_endos(cls, L: NilAlgebra, endos: Iterable[Endo]) -> "DerBasis":
        d = L.dim
        vecs = echelon_basis((f.vector() for f in endos), L.field, d * d)
        return cls(L, tuple(Endo.from_vector(L, v) for v in vecs))

    @property
    def dimension(self) -> int:
        return len(self.generators)

    def contains(self, f: Endo) -> bool:
        return in_span(f.vector(), [g.vector() for g in self.generators], self.algebra.field)

    def __eq__(self, other):
        if not isinstance(other, DerBasis):
            return NotImplemented
        return self.algebra == other.algebra and self.generators == other.generators

    def __hash__(self):
        return hash((self.algebra, self.generators))

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def to_json(self) -> list:
        return [g.to_json() for g in self.generators]

    @classmethod
    def from_json(cls, items: list) -> "DerBasis":
        endos = [Endo.from_json(obj) for obj in items]
        if not endos:
            raise ValueError("empty basis carries no algebra header")
        return cls.from_endos(endos[0].algebra, endos)


def derivation_space_bruteforce(L: NilAlgebra, basis_order: Sequence[int] | None = None) -> DerBasis:
    """Der(N) as the kernel of the full Leibniz system.

    ``basis_order`` (a permutation of range(d)) relabels the basis before
    building the system; the result is mapped back to the canonical order.
    """
    d = L.dim
    F = L.field
    if d == 0:
        return DerBasis(L, ())
    lab = list(range(d)) if basis_order is None else list(basis_order)
    if sorted(lab) != list(range(d)):
        raise ValueError("basis_order must be a permutation")
    rows = [{u: F.elem(v) for u, v in r.items() if v} for r in leibniz_rows(L, lab)]
    kernel = sparse_nullspace(rows, d * d, F)
    endos = []
    for v in kernel:
        back = [v[lab[c] * d + lab[x]] for c in range(d) for x in range(d)]
        endos.append(Endo.from_vector(L, back))
    return DerBasis.from_endos(L, endos)


# --- support lemmas ------------------------------------------------------------

def allowed_targets(L: NilAlgebra, i: int, j: int, char2: bool) -> set[tuple[int, int]] | None:
    """Blocks that f(N^{ij}) may touch for a derivation f; None if unconstrained."""
    t = L.t
    if t < 3:
        return None
    rules: list[set] = []
    if j == i + 1:
        if 1 < i < t - 1:
            rules.append({(p, i + 1) for p in range(1, i)} | {(i, q) for q in range(i + 1, t + 1)}
                         | {(1, t)})
        if i == 1:
            s = {(1, q) for q in range(2, t + 1)} | {(2, t)}
            if char2 and t >= 4:
                s.add((3, t))
            rules.append(s)
        if i == t - 1:
            s = {(p, t) for p in range(1, t)} | {(1, t - 1)}
            if char2 and t >= 4:
                s.add((1, t - 2))
            rules.append(s)
    else:
        generic = {(p, j) for p in range(1, i)} | {(i, q) for q in range(j, t + 1)}
        special = False
        if char2 and (i, j) == (1, 3):
            rules.append({(1, q) for q in range(3, t + 1)} | {(2, t)})
            special = True
        if char2 and (i, j) == (t - 2, t):
            rules.append({(p, t) for p in range(1, t - 1)} | {(1, t - 1)})
            special = True
        if not special:
            rules.append(generic)
    out = set(L.blocks)
    for r in rules:
        out &= r
    return out


@dataclass
class SupportViolation:
    generator: int
    lemma: str
    detail: str


@dataclass
class SupportReport:
    checked: int
    violations: list[SupportViolation]

    @property
    def ok(self) -> bool:
        return not self.violations


def _rows_equal(A: Mat, i: int, B: Mat, j: int) -> bool:
    return A.entries[i] == B.entries[j]


def _cols_equal(A: Mat, i: int, B: Mat, j: int) -> bool:
    return all(r[i] == s[j] for r, s in zip(A.entries, B.entries))


def support_violations(f: Endo, index: int = 0) -> list[SupportViolation]:
    """All block-support and corner-matching conditions f breaks."""
    L = f.algebra
    t = L.t
    P = L.partition
    char2 = f.field.characteristic == 2
    out = []
    if t < 3:
        return out
    for (i, j) in L.blocks:
        allowed = allowed_targets(L, i, j, char2)
        extra = f.image_blocks(i, j) - allowed
        if extra:
            out.append(SupportViolation(index, "support", f"f(N^{i},{j}) hits {sorted(extra)}"))

    def k12(c):
        return L.index[(1, 2, 1, c)]

    def kt(r):
        return L.index[(t - 1, t, r, 1)]

    n1, nt = P.size(1), P.size(t)
    if n1 >= 2:
        if any(not f.image_block(k, 2, t).is_zero() for k in L.block_indices(1, 2)):
            out.append(SupportViolation(index, "corner-12", "f(N^12)_2t nonzero with n_1 >= 2"))
    else:
        M = [f.image_block(k12(c), 2, t) for c in range(1, P.size(2) + 1)]
        for a in range(len(M)):
            for b in range(len(M)):
                if not _rows_equal(M[b], a, M[a], b):
                    out.append(SupportViolation(index, "corner-12",
                                                f"row {a+1} of f(E12_1{b+1})_2t != row {b+1} of f(E12_1{a+1})_2t"))
    if nt >= 2:
        if any(not f.image_block(k, 1, t - 1).is_zero() for k in L.block_indices(t - 1, t)):
            out.append(SupportViolation(index, "corner-t", "f(N^{t-1,t})_{1,t-1} nonzero with n_t >= 2"))
    else:
        M = [f.image_block(kt(r), 1, t - 1) for r in range(1, P.size(t - 1) + 1)]
        for a in range(len(M)):
            for b in range(len(M)):
                if not _cols_equal(M[b], a, M[a], b):
                    out.append(SupportViolation(index, "corner-t",
                                                f"column {a+1} of f(E_{b+1}1)_1,t-1 mismatch"))
    if char2 and t >= 4:
        if n1 >= 2:
            if (any(not f.image_block(k, 3, t).is_zero() for k in L.block_indices(1, 2))
                    or any(not f.image_block(k, 2, t).is_zero() for k in L.block_indices(1, 3))):
                out.append(SupportViolation(index, "psi-12-13", "nonzero with n_1 >= 2"))
        else:
            U = [f.image_block(k12(c), 3, t) for c in range(1, P.size(2) + 1)]
            V = [f.image_block(L.index[(1, 3, 1, c)], 2, t) for c in range(1, P.size(3) + 1)]
            for a in range(len(U)):
                for b in range(len(V)):
                    if not _rows_equal(V[b], a, U[a], b):
                        out.append(SupportViolation(index, "psi-12-13", f"row match ({a+1},{b+1})"))
        if nt >= 2:
            if (any(not f.image_block(k, 1, t - 2).is_zero() for k in L.block_indices(t - 1, t))
                    or any(not f.image_block(k, 1, t - 1).is_zero() for k in L.block_indices(t - 2, t))):
                out.append(SupportViolation(index, "psi-t", "nonzero with n_t >= 2"))
        else:
            U = [f.image_block(kt(r), 1, t - 2) for r in range(1, P.size(t - 1) + 1)]
            V = [f.image_block(L.index[(t - 2, t, r, 1)], 1, t - 1) for r in range(1, P.size(t - 2) + 1)]
            for a in range(len(U)):
                for b in range(len(V)):
                    if not _cols_equal(V[b], a, U[a], b):
                        out.append(SupportViolation(index, "psi-t", f"column match ({a+1},{b+1})"))
    return out


def check_support_lemmas(B: DerBasis) -> SupportReport:
    violations = []
    for idx, f in enumerate(B.generators):
        violations.extend(support_violations(f, idx))
    return SupportReport(len(B.generators), violations)
