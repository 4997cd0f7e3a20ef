"""Recover the matrices behind linear maps of matrix spaces.

Each solver takes linear maps between spaces of rectangular matrices that
satisfy a multiplicative functional equation, checks that equation on every
pair of standard units, and then builds the witnessing matrices by reading
entries off images of particular units:

* :func:`solve_right_factor`: ``phi(AB) = A varphi(B)`` gives ``X`` with
  ``phi(C) = CX`` and ``varphi(D) = DX``.
* :func:`solve_left_factor`: ``phi(BA) = varphi(B) A`` gives ``X`` with
  ``phi(C) = XC`` and ``varphi(D) = XD``.
* :func:`solve_balanced`: ``phi(A) B = A varphi(B)`` gives ``X`` with
  ``phi(C) = CX`` and ``varphi(D) = XD``.
* :func:`solve_sandwich`: ``f(AB) = g(A) B + A h(B)`` gives ``X, Y, Z`` with
  ``f(C) = XC + CY``, ``g(A) = XA + AZ`` and ``h(B) = BY - ZB``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .exactfield import FieldSpec
from .matrixcore import Mat, ShapeError, unit_matrix


class HypothesisViolation(ValueError):
    """The functional equation fails on a named pair of standard units."""

    def __init__(self, message: str, pair):
        super().__init__(message)
        self.pair = pair


class ConsistencyError(RuntimeError):
    """A constructed witness does not reproduce its maps (a solver bug)."""


Shape = tuple[int, int]


class BlockLinMap:
    """Linear map ``M_{in_shape} -> M_{out_shape}`` stored by its action matrix.

    Column ``u`` of ``action`` is the row-major flattening of the image of
    the u-th standard unit (units enumerated row-major).
    """

    def __init__(self, in_shape: Shape, out_shape: Shape, action: Mat):
        self.in_shape = tuple(in_shape)
        self.out_shape = tuple(out_shape)
        if action.shape != (out_shape[0] * out_shape[1], in_shape[0] * in_shape[1]):
            raise ShapeError(f"action {action.shape} does not fit {in_shape} -> {out_shape}")
        self.action = action
        self.field = action.field

    @classmethod
    def from_function(cls, field: FieldSpec, in_shape: Shape, out_shape: Shape,
                      fn: Callable[[Mat], Mat]) -> "BlockLinMap":
        m, n = in_shape
        cols = []
        for p in range(1, m + 1):
            for q in range(1, n + 1):
                img = fn(unit_matrix(field, m, n, p, q))
                if img.shape != tuple(out_shape):
                    raise ShapeError(f"image has shape {img.shape}, expected {out_shape}")
                cols.append(img.flat())
        rows = [[c[r] for c in cols] for r in range(out_shape[0] * out_shape[1])]
        return cls(in_shape, out_shape, Mat(field, rows, m * n))

    def __call__(self, C: Mat) -> Mat:
        if C.shape != self.in_shape:
            raise ShapeError(f"map expects {self.in_shape}, got {C.shape}")
        v = self.action @ Mat.column(self.field, C.flat())
        flat = [row[0] for row in v.entries]
        r, c = self.out_shape
        return Mat._raw(self.field, [tuple(flat[i * c:(i + 1) * c]) for i in range(r)], c)

    def unit(self, p: int, q: int) -> Mat:
        """Image of the (p, q) standard unit (1-based)."""
        r, c = self.out_shape
        col = (p - 1) * self.in_shape[1] + (q - 1)
        flat = [row[col] for row in self.action.entries]
        return Mat._raw(self.field, [tuple(flat[i * c:(i + 1) * c]) for i in range(r)], c)

    def to_json(self) -> dict:
        return {"in_shape": list(self.in_shape), "out_shape": list(self.out_shape),
                "action": self.action.to_json()}

    @classmethod
    def from_json(cls, field: FieldSpec, obj: dict) -> "BlockLinMap":
        return cls(tuple(obj["in_shape"]), tuple(obj["out_shape"]),
                   Mat.from_json(field, obj["action"]))


@dataclass(frozen=True)
class SandwichSolution:
    X: Mat
    Y: Mat
    Z: Mat


def _units(field: FieldSpec, m: int, n: int):
    for p in range(1, m + 1):
        for q in range(1, n + 1):
            yield (p, q), unit_matrix(field, m, n, p, q)


def _expect(shape, want, what):
    if tuple(shape) != tuple(want):
        raise ShapeError(f"{what}: expected shape {want}, got {shape}")


def solve_right_factor(phi: BlockLinMap, varphi: BlockLinMap) -> Mat:
    """phi: M_mp -> M_mq, varphi: M_np -> M_nq with phi(AB) = A varphi(B)."""
    F = phi.field
    (m, p), (m2, q) = phi.in_shape, phi.out_shape
    (n, p2), (n2, q2) = varphi.in_shape, varphi.out_shape
    if m != m2 or n != n2 or p != p2 or q != q2:
        raise ShapeError("incompatible shapes for solve_right_factor")
    for ia, A in _units(F, m, n):
        for ib, B in _units(F, n, p):
            if phi(A @ B) != A @ varphi(B):
                raise HypothesisViolation(
                    f"phi(AB) != A varphi(B) for A=E{ia} ({m}x{n}), B=E{ib} ({n}x{p})", (ia, ib))
    # row k of X is the first row of phi(E_{1k})
    X = Mat(F, [phi.unit(1, k).entries[0] for k in range(1, p + 1)], q)
    for ic, C in _units(F, m, p):
        if phi(C) != C @ X:
            raise ConsistencyError(f"phi(C) != CX at C=E{ic}")
    for idd, D in _units(F, n, p):
        if varphi(D) != D @ X:
            raise ConsistencyError(f"varphi(D) != DX at D=E{idd}")
    return X


def solve_left_factor(phi: BlockLinMap, varphi: BlockLinMap) -> Mat:
    """phi: M_mp -> M_np, varphi: M_mq -> M_nq with phi(BA) = varphi(B) A."""
    F = phi.field
    (m, p), (n, p2) = phi.in_shape, phi.out_shape
    (m2, q), (n2, q2) = varphi.in_shape, varphi.out_shape
    if m != m2 or n != n2 or p != p2 or q != q2:
        raise ShapeError("incompatible shapes for solve_left_factor")
    for ib, B in _units(F, m, q):
        for ia, A in _units(F, q, p):
            if phi(B @ A) != varphi(B) @ A:
                raise HypothesisViolation(
                    f"phi(BA) != varphi(B) A for B=E{ib} ({m}x{q}), A=E{ia} ({q}x{p})", (ib, ia))
    # column k of X is the first column of phi(E_{k1})
    cols = [[row[0] for row in phi.unit(k, 1).entries] for k in range(1, m + 1)]
    X = Mat(F, [[cols[k][r] for k in range(m)] for r in range(n)], m)
    for ic, C in _units(F, m, p):
        if phi(C) != X @ C:
            raise ConsistencyError(f"phi(C) != XC at C=E{ic}")
    for idd, D in _units(F, m, q):
        if varphi(D) != X @ D:
            raise ConsistencyError(f"varphi(D) != XD at D=E{idd}")
    return X


def solve_balanced(phi: BlockLinMap, varphi: BlockLinMap) -> Mat:
    """phi: M_mp -> M_mq, varphi: M_qn -> M_pn with phi(A) B = A varphi(B)."""
    F = phi.field
    (m, p), (m2, q) = phi.in_shape, phi.out_shape
    (q2, n), (p2, n2) = varphi.in_shape, varphi.out_shape
    if m != m2 or n != n2 or p != p2 or q != q2:
        raise ShapeError("incompatible shapes for solve_balanced")
    for ia, A in _units(F, m, p):
        fa = phi(A)
        for ib, B in _units(F, q, n):
            if fa @ B != A @ varphi(B):
                raise HypothesisViolation(
                    f"phi(A) B != A varphi(B) for A=E{ia} ({m}x{p}), B=E{ib} ({q}x{n})", (ia, ib))
    # row j of X is the first row of phi(E_{1j})
    X = Mat(F, [phi.unit(1, j).entries[0] for j in range(1, p + 1)], q)
    for ic, C in _units(F, m, p):
        if phi(C) != C @ X:
            raise ConsistencyError(f"phi(C) != CX at C=E{ic}")
    for idd, D in _units(F, q, n):
        if varphi(D) != X @ D:
            raise ConsistencyError(f"varphi(D) != XD at D=E{idd}")
    return X


def solve_sandwich(f: BlockLinMap, g: BlockLinMap, h: BlockLinMap) -> SandwichSolution:
    """f: M_pr, g: M_pq, h: M_qr (endomorphisms) with f(AB) = g(A) B + A h(B)."""
    F = f.field
    p, r = f.in_shape
    p2, q = g.in_shape
    q2, r2 = h.in_shape
    if (p, r) != f.out_shape or (p2, q) != g.out_shape or (q2, r2) != h.out_shape:
        raise ShapeError("solve_sandwich needs endomorphisms of matrix spaces")
    if p != p2 or q != q2 or r != r2:
        raise ShapeError("incompatible shapes for solve_sandwich")
    for ia, A in _units(F, p, q):
        ga = g(A)
        for ib, B in _units(F, q, r):
            if f(A @ B) != ga @ B + A @ h(B):
                raise HypothesisViolation(
                    f"f(AB) != g(A)B + A h(B) for A=E{ia} ({p}x{q}), B=E{ib} ({q}x{r})", (ia, ib))
    f11 = f.unit(1, 1).entries[0][0]
    # X_ij = f(E_j1)_i1 - [i == j] f(E_11)_11 ;  Y_kl = f(E_1k)_1l
    first_cols = [f.unit(j, 1) for j in range(1, p + 1)]
    X = Mat(F, [[F.sub(first_cols[j].entries[i][0], f11 if i == j else F.zero)
                 for j in range(p)] for i in range(p)], p)
    Y = Mat(F, [f.unit(1, k).entries[0] for k in range(1, r + 1)], r)
    phi = BlockLinMap.from_function(F, (p, q), (p, q), lambda A: g(A) - X @ A)
    varphi = BlockLinMap.from_function(F, (q, r), (q, r), lambda B: B @ Y - h(B))
    Z = solve_balanced(phi, varphi)
    sol = SandwichSolution(X, Y, Z)
    if not sandwich_holds(sol, f, g, h):
        raise ConsistencyError("sandwich witness does not reproduce f, g, h")
    return sol


def sandwich_holds(sol: SandwichSolution, f: BlockLinMap, g: BlockLinMap, h: BlockLinMap) -> bool:
    F = f.field
    X, Y, Z = sol.X, sol.Y, sol.Z
    p, r = f.in_shape
    q = g.in_shape[1]
    return (all(f(C) == X @ C + C @ Y for _, C in _units(F, p, r))
            and all(g(A) == X @ A + A @ Z for _, A in _units(F, p, q))
            and all(h(B) == B @ Y - Z @ B for _, B in _units(F, q, r)))
