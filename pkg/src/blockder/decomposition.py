"""Split a derivation of N into ad X plus corner maps, and rebuild it.

Every derivation f is written as

    f = ad X + varphi_1t + phi_12_2t + phi_t1t_1t1 (+ psi_12_13 + psi_t1_t2 in char 2)

with X block upper triangular. :func:`decompose` runs the constructive
pipeline (off-diagonal reads, corner maps, the centre map, then diagonal
peeling through the factor solvers) and checks each stage's support
property as it goes. :func:`derivation_space_structural` assembles a
spanning set of Der(N) from the same component classes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .endomorphisms import DerBasis, Endo, ad_endo, basis_name, leibniz_defect
from .factorsolvers import (BlockLinMap, ConsistencyError, HypothesisViolation, solve_right_factor,
                            solve_sandwich)
from .matrixcore import Mat, block_of, embed_block, is_block_upper, solve, unit_matrix
from .nilalgebra import NilAlgebra

log = logging.getLogger(__name__)


class NotADerivationError(ValueError):
    """Input to :func:`decompose` breaks the Leibniz rule on ``pair``."""

    def __init__(self, message: str, pair, defect):
        super().__init__(message)
        self.pair = pair
        self.defect = defect


class DecompositionError(RuntimeError):
    """A pipeline stage failed its own postcondition."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def omega(t: int) -> frozenset[tuple[int, int]]:
    pairs = {(p, q) for p in range(1, t + 1) for q in range(p + 1, t + 1)}
    return frozenset(pairs - {(1, t - 1), (1, t), (2, t)})


@dataclass(frozen=True, eq=False)
class DerivationDecomposition:
    algebra: NilAlgebra
    X: Mat
    varphi_1t: Endo
    phi_12_2t: Endo
    phi_t1t_1t1: Endo
    psi_12_13: Optional[Endo] = None
    psi_t1_t2: Optional[Endo] = None

    def maps(self) -> list[tuple[str, Endo]]:
        out = [("varphi_1t", self.varphi_1t), ("phi_12_2t", self.phi_12_2t),
               ("phi_t1t_1t1", self.phi_t1t_1t1)]
        if self.psi_12_13 is not None:
            out.append(("psi_12_13", self.psi_12_13))
        if self.psi_t1_t2 is not None:
            out.append(("psi_t1_t2", self.psi_t1_t2))
        return out

    def components(self) -> list[tuple[str, Endo]]:
        return [("ad_X", ad_endo(self.algebra, self.X))] + self.maps()

    def to_json(self) -> dict:
        def endo(e):
            return None if e is None else e.to_json()
        return {"algebra": self.algebra.header(), "X": self.X.to_json(),
                "varphi_1t": endo(self.varphi_1t), "phi_12_2t": endo(self.phi_12_2t),
                "phi_t1t_1t1": endo(self.phi_t1t_1t1), "psi_12_13": endo(self.psi_12_13),
                "psi_t1_t2": endo(self.psi_t1_t2)}

    @classmethod
    def from_json(cls, obj: dict) -> "DerivationDecomposition":
        L = NilAlgebra.from_header(obj["algebra"])

        def endo(key):
            v = obj.get(key)
            return None if v is None else Endo.from_json(v, L)
        return cls(L, Mat.from_json(L.field, obj["X"]), endo("varphi_1t"), endo("phi_12_2t"),
                   endo("phi_t1t_1t1"), endo("psi_12_13"), endo("psi_t1_t2"))


# --- helpers -----------------------------------------------------------------

def _block_map(f: Endo, src: tuple[int, int], dst: tuple[int, int]) -> BlockLinMap:
    """A -> block ``dst`` of f(A^{src}) as a map between block matrix spaces."""
    L = f.algebra
    P = L.partition
    i, j = src
    k, l = dst

    def fn(A: Mat) -> Mat:
        return block_of(f.apply_matrix(embed_block(A, i, j, P)), k, l, P)
    return BlockLinMap.from_function(L.field, (P.size(i), P.size(j)), (P.size(k), P.size(l)), fn)


def _moves(L: NilAlgebra, src: tuple[int, int], dst: tuple[int, int]):
    return lambda a, c: L.block(a) == src and L.block(c) == dst


def _stray_blocks(f: Endo, allowed) -> list[str]:
    L = f.algebra
    bad = []
    for (i, j) in L.blocks:
        extra = f.image_blocks(i, j) - allowed(i, j)
        if extra:
            bad.append(f"N^{i},{j} -> {sorted(extra)}")
    return bad


def _require_derivation(stage: str, name: str, g: Endo):
    d = leibniz_defect(g)
    if d is not None:
        a, b, _ = d
        raise DecompositionError(stage, f"{name} is not a derivation "
                                 f"(pair {basis_name(g.algebra, a)}, {basis_name(g.algebra, b)})")


# --- extraction steps ---------------------------------------------------------

def extract_offdiag(f: Endo) -> Mat:
    """X_0 = sum of X_pq over Omega, read from images of standard basis elements."""
    L = f.algebra
    P = L.partition
    F = f.field
    t = L.t
    X0 = Mat.zeros(F, P.n, P.n)
    for (p, q) in sorted(omega(t)):
        npp, nq = P.size(p), P.size(q)
        X = [[None] * nq for _ in range(npp)]

        def put(a, b, v, probe):
            if X[a][b] is None:
                X[a][b] = v
            elif X[a][b] != v:
                raise DecompositionError(
                    "extract_offdiag", f"X_{p},{q} reads disagree at probe {probe}; not a derivation")
        if q < t:
            # column r of X_pq is column s of f(E^{q,q+1}_rs)_{p,q+1}
            for r in range(1, nq + 1):
                for s in range(1, P.size(q + 1) + 1):
                    blk = f.image_block(L.index[(q, q + 1, r, s)], p, q + 1)
                    for a in range(npp):
                        put(a, r - 1, blk.entries[a][s - 1], (q, q + 1, r, s))
        else:
            # row s of X_pt is minus row r of f(E^{1p}_rs)_{1t}
            for r in range(1, P.size(1) + 1):
                for s in range(1, npp + 1):
                    blk = f.image_block(L.index[(1, p, r, s)], 1, t)
                    for b in range(nq):
                        put(s - 1, b, F.neg(blk.entries[r - 1][b]), (1, p, r, s))
        Xpq = Mat(F, X, nq)
        _validate_xpq(f, p, q, Xpq)
        X0 = X0 + embed_block(Xpq, p, q, P)
    return X0


def _validate_xpq(f: Endo, p: int, q: int, Xpq: Mat):
    L = f.algebra
    P = L.partition
    F = f.field
    for i in range(1, p):
        for a in range(1, P.size(i) + 1):
            for b in range(1, P.size(p) + 1):
                A = unit_matrix(F, P.size(i), P.size(p), a, b)
                if f.image_block(L.index[(i, p, a, b)], i, q) != -(A @ Xpq):
                    raise DecompositionError(
                        "extract_offdiag", f"f(E^{i},{p}_{a},{b})_{i},{q} != -A X_{p},{q}")
    for j in range(q + 1, L.t + 1):
        for a in range(1, P.size(q) + 1):
            for b in range(1, P.size(j) + 1):
                A = unit_matrix(F, P.size(q), P.size(j), a, b)
                if f.image_block(L.index[(q, j, a, b)], p, j) != Xpq @ A:
                    raise DecompositionError(
                        "extract_offdiag", f"f(E^{q},{j}_{a},{b})_{p},{j} != X_{p},{q} A")


def extract_corner_phis(f: Endo) -> tuple[Endo, Endo]:
    """(phi_12_2t, phi_t1t_1t1): f on N^{12} into N^{2t}, and on N^{t-1,t} into N^{1,t-1}."""
    L = f.algebra
    P = L.partition
    t = L.t
    zero = Endo.zero(L)
    if t < 3:
        return zero, zero
    phi12 = f.restrict(_moves(L, (1, 2), (2, t))) if P.size(1) == 1 else zero
    phit = f.restrict(_moves(L, (t - 1, t), (1, t - 1))) if P.size(t) == 1 else zero
    _require_derivation("extract_corner_phis", "phi_12_2t", phi12)
    _require_derivation("extract_corner_phis", "phi_t1t_1t1", phit)
    return phi12, phit


def extract_psis(f: Endo) -> tuple[Endo, Endo]:
    """Characteristic-2 corner pairs: (N^12 -> N^3t, N^13 -> N^2t) and the mirror pair."""
    L = f.algebra
    if f.field.characteristic != 2:
        raise ValueError("psi components exist only in characteristic 2")
    P = L.partition
    t = L.t
    zero = Endo.zero(L)
    if t < 4:
        return zero, zero
    if P.size(1) == 1:
        m1, m2 = _moves(L, (1, 2), (3, t)), _moves(L, (1, 3), (2, t))
        psi12 = f.restrict(lambda a, c: m1(a, c) or m2(a, c))
    else:
        psi12 = zero
    if P.size(t) == 1:
        m1, m2 = _moves(L, (t - 1, t), (1, t - 2)), _moves(L, (t - 2, t), (1, t - 1))
        psit = f.restrict(lambda a, c: m1(a, c) or m2(a, c))
    else:
        psit = zero
    _require_derivation("extract_psis", "psi_12_13", psi12)
    _require_derivation("extract_psis", "psi_t1_t2", psit)
    return psi12, psit


def extract_varphi_1t(f: Endo) -> Endo:
    """Superdiagonal sources, centre (N^{1t}) targets; everything else dropped."""
    L = f.algebra
    t = L.t
    if t < 2:
        return Endo.zero(L)

    def keep(a, c):
        i, j = L.block(a)
        return j == i + 1 and L.block(c) == (1, t)
    return f.restrict(keep)


def extract_diagonal(f2: Endo) -> Mat:
    """Block-diagonal D with f2 = ad D, for f2 preserving every block N^{ij}."""
    L = f2.algebra
    P = L.partition
    F = f2.field
    t = L.t
    n = P.n
    D = Mat.zeros(F, n, n)
    if t < 2 or f2.is_zero():
        return D
    if t == 2:
        return _diagonal_direct(f2)
    stage = "extract_diagonal"
    try:
        sol = solve_sandwich(_block_map(f2, (1, 3), (1, 3)), _block_map(f2, (1, 2), (1, 2)),
                             _block_map(f2, (2, 3), (2, 3)))
    except (HypothesisViolation, ConsistencyError) as exc:
        raise DecompositionError(stage, f"step 1: {exc}") from exc
    D = embed_block(sol.X, 1, 1, P) + embed_block(-sol.Z, 2, 2, P)
    cur = f2 - ad_endo(L, D)
    _require_killed(cur, 2, stage)
    for k in range(2, t):
        try:
            Xr = solve_right_factor(_block_map(cur, (1, k + 1), (1, k + 1)),
                                    _block_map(cur, (k, k + 1), (k, k + 1)))
        except (HypothesisViolation, ConsistencyError) as exc:
            raise DecompositionError(stage, f"step {k}: {exc}") from exc
        Dk = embed_block(-Xr, k + 1, k + 1, P)
        D = D + Dk
        cur = cur - ad_endo(L, Dk)
        _require_killed(cur, k + 1, stage)
    if not cur.is_zero():
        raise DecompositionError(stage, "residual after diagonal peeling is nonzero")
    return D


def _require_killed(cur: Endo, upto: int, stage: str):
    L = cur.algebra
    for (p, q) in L.blocks:
        if q <= upto and cur.image_blocks(p, q):
            raise DecompositionError(stage, f"N^{p},{q} not annihilated after peeling to {upto}")


def _diagonal_direct(f2: Endo) -> Mat:
    """Solve ad D = f2 over block-diagonal D by elimination; 0 if unsolvable."""
    L = f2.algebra
    P = L.partition
    F = f2.field
    n = P.n
    units = [(r, c) for r in range(n) for c in range(n) if P.block_index(r) == P.block_index(c)]
    cols = [ad_endo(L, unit_matrix(F, n, n, r + 1, c + 1)).vector() for r, c in units]
    A = Mat(F, [[col[i] for col in cols] for i in range(L.dim ** 2)], len(units))
    x = solve(A, f2.vector())
    D = Mat.zeros(F, n, n)
    if x is None:
        return D
    for (r, c), v in zip(units, x):
        if v:
            D = D + unit_matrix(F, n, n, r + 1, c + 1).scale(v)
    return D


# --- pipeline ------------------------------------------------------------------

def decompose(f: Endo) -> DerivationDecomposition:
    L = f.algebra
    F = f.field
    t = L.t
    char2 = F.characteristic == 2
    defect = leibniz_defect(f)
    if defect is not None:
        a, b, vec = defect
        raise NotADerivationError(
            f"not a derivation: Leibniz rule fails on ({basis_name(L, a)}, {basis_name(L, b)})",
            (a, b), vec)

    X0 = extract_offdiag(f)
    f0 = f - ad_endo(L, X0)
    _check_f0(f0)

    phi12, phit = extract_corner_phis(f)
    if (phi12, phit) != extract_corner_phis(f0):
        raise DecompositionError("extract_corner_phis", "ad X_0 touched a corner block")
    f1 = f0 - phi12 - phit
    psi12 = psit = None
    if char2:
        psi12, psit = extract_psis(f)
        if (psi12, psit) != extract_psis(f0):
            raise DecompositionError("extract_psis", "ad X_0 touched a psi block")
        f1 = f1 - psi12 - psit

    def f1_allowed(i, j):
        return {(i, j), (1, t)} if j == i + 1 else {(i, j)}
    bad = _stray_blocks(f1, f1_allowed)
    if bad:
        raise DecompositionError("f_1 support", "; ".join(bad))

    varphi = extract_varphi_1t(f)
    if varphi != extract_varphi_1t(f1):
        raise DecompositionError("extract_varphi_1t", "centre blocks changed between f and f_1")
    f2 = f1 - varphi
    bad = _stray_blocks(f2, lambda i, j: {(i, j)})
    if bad:
        raise DecompositionError("f_2 support", "; ".join(bad))

    X = X0 + extract_diagonal(f2)
    dec = DerivationDecomposition(L, X, varphi, phi12, phit, psi12, psit)
    for name, g in dec.maps():
        _require_derivation("decompose", name, g)
    if synthesize(dec) != f:
        raise DecompositionError("decompose", "synthesis does not reproduce the input")
    log.debug("decomposed %r: X nnz=%d", L, len(X.support()))
    return dec


def _check_f0(f0: Endo):
    """f_0(N^{ip})_{iq} = 0 and f_0(N^{qj})_{pj} = 0 for every (p, q) in Omega."""
    L = f0.algebra
    t = L.t
    for (p, q) in omega(t):
        for i in range(1, p):
            for k in L.block_indices(i, p):
                if not f0.image_block(k, i, q).is_zero():
                    raise DecompositionError("f_0 support", f"f_0(N^{i},{p})_{i},{q} != 0")
        for j in range(q + 1, t + 1):
            for k in L.block_indices(q, j):
                if not f0.image_block(k, p, j).is_zero():
                    raise DecompositionError("f_0 support", f"f_0(N^{q},{j})_{p},{j} != 0")


def synthesize(D: DerivationDecomposition) -> Endo:
    L = D.algebra
    if not is_block_upper(D.X, L.partition):
        raise ValueError("X must be block upper triangular")
    out = ad_endo(L, D.X)
    for name, g in D.maps():
        if g.algebra != L:
            raise ValueError(f"component {name} lives on a different algebra")
        out = out + g
    return out


# --- structural generators --------------------------------------------------------

CLASS_NAMES = ("ad", "varphi_1t", "phi_12_2t", "phi_t1t_1t1", "psi_12_13", "psi_t1_t2")


def structural_generators(L: NilAlgebra) -> dict[str, list[Endo]]:
    """Spanning families for each component class, keyed by class name."""
    F = L.field
    P = L.partition
    t = L.t
    n = P.n
    one = F.one
    idx = L.index
    gens: dict[str, list[Endo]] = {name: [] for name in CLASS_NAMES}
    if L.dim == 0:
        return gens

    for r in range(n):
        for c in range(n):
            if P.block_index(r) <= P.block_index(c):
                gens["ad"].append(ad_endo(L, unit_matrix(F, n, n, r + 1, c + 1)))

    centre = L.block_indices(1, t)
    for a, (i, j, _, _) in enumerate(L.basis):
        if j == i + 1:
            for c in centre:
                gens["varphi_1t"].append(Endo.from_images(L, {a: {c: one}}))

    if t >= 3 and P.size(1) == 1:
        # row i of f(E^12_1j)_2t equals row j of f(E^12_1i)_2t
        n2 = P.size(2)
        for i in range(1, n2 + 1):
            for j in range(i, n2 + 1):
                for s in range(1, P.size(t) + 1):
                    images = {idx[(1, 2, 1, j)]: {idx[(2, t, i, s)]: one}}
                    images.setdefault(idx[(1, 2, 1, i)], {})[idx[(2, t, j, s)]] = one
                    gens["phi_12_2t"].append(Endo.from_images(L, images))
    if t >= 3 and P.size(t) == 1:
        # column i of f(E^{t-1,t}_j1)_{1,t-1} equals column j of f(E^{t-1,t}_i1)_{1,t-1}
        m = P.size(t - 1)
        for i in range(1, m + 1):
            for j in range(i, m + 1):
                for r in range(1, P.size(1) + 1):
                    images = {idx[(t - 1, t, j, 1)]: {idx[(1, t - 1, r, i)]: one}}
                    images.setdefault(idx[(t - 1, t, i, 1)], {})[idx[(1, t - 1, r, j)]] = one
                    gens["phi_t1t_1t1"].append(Endo.from_images(L, images))

    if F.characteristic == 2 and t >= 4:
        # Besides the row matching between f(N^12)_3t and f(N^13)_2t, the pairs
        # [N^12, N^23] force f(N^12)_3t = 0 unless N^12 is 1x1.
        if P.size(1) == 1 and P.size(2) == 1:
            for j in range(1, P.size(3) + 1):
                for s in range(1, P.size(t) + 1):
                    gens["psi_12_13"].append(Endo.from_images(L, {
                        idx[(1, 2, 1, 1)]: {idx[(3, t, j, s)]: one},
                        idx[(1, 3, 1, j)]: {idx[(2, t, 1, s)]: one}}))
        if P.size(t) == 1 and P.size(t - 1) == 1:
            for j in range(1, P.size(t - 2) + 1):
                for r in range(1, P.size(1) + 1):
                    gens["psi_t1_t2"].append(Endo.from_images(L, {
                        idx[(t - 1, t, 1, 1)]: {idx[(1, t - 2, r, j)]: one},
                        idx[(t - 2, t, j, 1)]: {idx[(1, t - 1, r, 1)]: one}}))
    return gens


def psi_lemma_candidates(L: NilAlgebra) -> dict[str, list[Endo]]:
    """The psi families parametrized by the corner row/column matching alone.

    These over-count when N^12 (or N^{t-1,t}) is not 1x1: some members are
    not derivations. Kept for auditing :func:`structural_generators`.
    """
    F = L.field
    P = L.partition
    t = L.t
    one = F.one
    idx = L.index
    out: dict[str, list[Endo]] = {"psi_12_13": [], "psi_t1_t2": []}
    if F.characteristic != 2 or t < 4:
        return out
    if P.size(1) == 1:
        for i in range(1, P.size(2) + 1):
            for j in range(1, P.size(3) + 1):
                for s in range(1, P.size(t) + 1):
                    out["psi_12_13"].append(Endo.from_images(L, {
                        idx[(1, 2, 1, i)]: {idx[(3, t, j, s)]: one},
                        idx[(1, 3, 1, j)]: {idx[(2, t, i, s)]: one}}))
    if P.size(t) == 1:
        for i in range(1, P.size(t - 1) + 1):
            for j in range(1, P.size(t - 2) + 1):
                for r in range(1, P.size(1) + 1):
                    out["psi_t1_t2"].append(Endo.from_images(L, {
                        idx[(t - 1, t, i, 1)]: {idx[(1, t - 2, r, j)]: one},
                        idx[(t - 2, t, j, 1)]: {idx[(1, t - 1, r, i)]: one}}))
    return out


def derivation_space_structural(L: NilAlgebra) -> DerBasis:
    gens = structural_generators(L)
    return DerBasis.from_endos(L, (g for name in CLASS_NAMES for g in gens[name]))


def class_dimensions(L: NilAlgebra) -> dict[str, int]:
    """Generator count per class plus each class's contribution beyond the others."""
    gens = structural_generators(L)
    everything = [g for name in CLASS_NAMES for g in gens[name]]
    total = DerBasis.from_endos(L, everything).dimension
    out = {f"{name}_generators": len(gens[name]) for name in CLASS_NAMES}
    for name in CLASS_NAMES:
        rest = [g for other in CLASS_NAMES if other != name for g in gens[other]]
        out[f"{name}_excess"] = total - DerBasis.from_endos(L, rest).dimension
    out["total"] = total
    return out
