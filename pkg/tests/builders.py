"""Conforming and perturbed inputs for the factor solvers."""

from blockder.factorsolvers import BlockLinMap
from blockder.matrixcore import Mat


def random_mat(F, rng, r, c):
    return Mat(F, [[F.random_elem(rng) for _ in range(c)] for _ in range(r)], c)


def lin(F, src, dst, fn):
    return BlockLinMap.from_function(F, src, dst, fn)


def right_factor_maps(F, rng, m, n, p, q):
    X = random_mat(F, rng, p, q)
    return X, (lin(F, (m, p), (m, q), lambda C: C @ X), lin(F, (n, p), (n, q), lambda D: D @ X))


def left_factor_maps(F, rng, m, n, p, q):
    X = random_mat(F, rng, n, m)
    return X, (lin(F, (m, p), (n, p), lambda C: X @ C), lin(F, (m, q), (n, q), lambda D: X @ D))


def balanced_maps(F, rng, m, n, p, q):
    X = random_mat(F, rng, p, q)
    return X, (lin(F, (m, p), (m, q), lambda C: C @ X), lin(F, (q, n), (p, n), lambda D: X @ D))


def sandwich_maps(F, rng, p, q, r):
    X, Y, Z = random_mat(F, rng, p, p), random_mat(F, rng, r, r), random_mat(F, rng, q, q)
    f = lin(F, (p, r), (p, r), lambda C: X @ C + C @ Y)
    g = lin(F, (p, q), (p, q), lambda A: X @ A + A @ Z)
    h = lin(F, (q, r), (q, r), lambda B: B @ Y - Z @ B)
    return (X, Y, Z), (f, g, h)


def perturb(maps, rng):
    """Add a nonzero constant to one action entry of one of the maps.

    Any single-entry change breaks each of the functional equations on some
    pair of units, so the result is always non-conforming.
    """
    maps = list(maps)
    k = rng.randrange(len(maps))
    M = maps[k]
    F = M.field
    r = rng.randrange(M.action.rows)
    c = rng.randrange(M.action.cols)
    delta = F.zero
    while delta == F.zero:
        delta = F.random_elem(rng)
    rows = [list(row) for row in M.action.entries]
    rows[r][c] = F.add(rows[r][c], delta)
    maps[k] = BlockLinMap(M.in_shape, M.out_shape, Mat(F, rows, M.action.cols))
    return maps
