import random

import pytest
from hypothesis import given, settings, strategies as st

from blockder.endomorphisms import (DerBasis, Endo, NotBlockUpperError, ad_endo, allowed_targets,
                                    check_support_lemmas, derivation_space_bruteforce,
                                    is_derivation, leibniz_defect)
from blockder.exactfield import FieldSpec
from blockder.matrixcore import Mat, Partition, ShapeError, embed_block, unit_matrix
from blockder.nilalgebra import NilAlgebra, bracket, center_basis


def alg(c, *sizes):
    return NilAlgebra(FieldSpec(c), Partition(sizes))


def is_derivation_by_matrices(f: Endo) -> bool:
    """Leibniz rule checked with explicit matrix products, not structure constants."""
    L = f.algebra
    P = L.partition
    units = []
    for (i, j, p, q) in L.basis:
        units.append(embed_block(unit_matrix(L.field, P.size(i), P.size(j), p, q), i, j, P))
    for A in units:
        for B in units:
            lhs = f.apply_matrix(bracket(A, B))
            rhs = bracket(f.apply_matrix(A), B) + bracket(A, f.apply_matrix(B))
            if lhs != rhs:
                return False
    return True


def random_block_upper(L, rng):
    F = L.field
    P = L.partition
    X = Mat.zeros(F, P.n, P.n)
    for i in range(1, P.t + 1):
        for j in range(i, P.t + 1):
            B = Mat(F, [[F.random_elem(rng) for _ in range(P.size(j))] for _ in range(P.size(i))])
            X = X + embed_block(B, i, j, P)
    return X


def test_known_dimensions():
    assert derivation_space_bruteforce(alg(2, 1, 1)).dimension == 1
    for c in (2, 3, 5, 0):
        assert derivation_space_bruteforce(alg(c, 1, 1, 1)).dimension == 6
    assert derivation_space_bruteforce(alg(2, 1, 1, 1, 1)).dimension == 13
    assert derivation_space_bruteforce(alg(3, 1, 1, 1, 1)).dimension == 11
    assert derivation_space_bruteforce(alg(2, 3)).dimension == 0


def test_abelian_case_every_map_is_derivation(field):
    # t = 2: [N, N] = 0 so Der(N) = End(N)
    L = NilAlgebra(field, Partition((1, 2)))
    assert derivation_space_bruteforce(L).dimension == L.dim ** 2


@pytest.mark.parametrize("sizes", [(1, 1, 1), (2, 1, 1), (1, 2, 1), (1, 1, 1, 1)])
def test_oracle_generators_are_derivations_by_matrices(field, sizes):
    B = derivation_space_bruteforce(NilAlgebra(field, Partition(sizes)))
    for g in B:
        assert is_derivation(g)
        assert is_derivation_by_matrices(g)


@pytest.mark.parametrize("sizes", [(1, 1, 1, 1), (2, 1, 2), (1, 1, 2, 1)])
def test_shuffled_basis_order_gives_same_space(field, sizes):
    L = NilAlgebra(field, Partition(sizes))
    order = list(range(L.dim))
    random.Random(7).shuffle(order)
    assert derivation_space_bruteforce(L, order) == derivation_space_bruteforce(L)


def test_bad_basis_order():
    with pytest.raises(ValueError):
        derivation_space_bruteforce(alg(2, 1, 1, 1), [0, 0, 1])


@pytest.mark.parametrize("sizes", [(1, 1, 1, 1), (2, 1, 1), (1, 2, 1, 1)])
def test_commutator_closure_and_center(field, sizes):
    L = NilAlgebra(field, Partition(sizes))
    B = derivation_space_bruteforce(L)
    gens = list(B)
    for f in gens:
        for g in gens:
            assert is_derivation(f.commutator(g))
    center = set(center_basis(L))
    for f in gens:
        for k in center:
            assert {c for c, _ in f.sparse_columns[k]} <= center


def test_ad_endo_linear_and_scalar_kills(field):
    L = NilAlgebra(field, Partition((1, 2, 1)))
    rng = random.Random(3)
    X, Y = random_block_upper(L, rng), random_block_upper(L, rng)
    a = field.random_elem(rng)
    assert ad_endo(L, X + Y.scale(a)) == ad_endo(L, X) + ad_endo(L, Y).scale(a)
    assert ad_endo(L, Mat.identity(field, 4).scale(field.elem(3))).is_zero()
    f = ad_endo(L, X)
    assert is_derivation(f) and is_derivation_by_matrices(f)
    E = embed_block(unit_matrix(field, 1, 2, 1, 2), 1, 2, L.partition)
    assert f.apply_matrix(E) == bracket(X, E)


def test_ad_endo_rejects_lower_blocks():
    L = alg(3, 1, 1)
    X = Mat(FieldSpec(3), [[0, 0], [1, 0]])
    with pytest.raises(NotBlockUpperError):
        ad_endo(L, X)


def test_leibniz_defect_reports_pair():
    L = alg(3, 1, 1, 1)
    i = L.index
    # f(E13) = E13 and zero elsewhere breaks the rule on [E12, E23] = E13
    f = Endo.from_images(L, {i[(1, 3, 1, 1)]: {i[(1, 3, 1, 1)]: 1}})
    a, b, defect = leibniz_defect(f)
    assert {L.basis[a][:2], L.basis[b][:2]} == {(1, 2), (2, 3)}
    assert any(defect)
    assert not is_derivation(f)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([2, 3, 5, 0]), st.integers(0, 10**6))
def test_random_combinations_of_generators_are_derivations(c, seed):
    L = alg(c, 1, 2, 1)
    B = derivation_space_bruteforce(L)
    rng = random.Random(seed)
    f = Endo.zero(L)
    for g in B:
        f = f + g.scale(L.field.random_elem(rng))
    assert is_derivation(f)
    assert B.contains(f)


def test_endo_constructors_agree(field):
    L = NilAlgebra(field, Partition((1, 1, 2)))
    rng = random.Random(5)
    cols = [[field.random_elem(rng) for _ in range(L.dim)] for _ in range(L.dim)]
    f = Endo.from_columns(L, cols)
    assert Endo.from_vector(L, f.vector()) == f
    assert Endo.from_function(L, f.apply_matrix) == f
    assert f.columns == tuple(tuple(c) for c in cols)
    g = Endo.from_columns(L, [list(reversed(c)) for c in cols])
    assert (f @ g).apply(cols[0]) == f.apply(g.apply(cols[0]))
    assert f - f == Endo.zero(L) and -(-f) == f


def test_endo_shape_checked():
    L = alg(2, 1, 1, 1)
    with pytest.raises(ShapeError):
        Endo(L, Mat.zeros(FieldSpec(2), 2, 2))
    with pytest.raises(ShapeError):
        Endo(L, Mat.zeros(FieldSpec(3), 3, 3))


def test_endo_and_derbasis_json(field):
    L = NilAlgebra(field, Partition((1, 1, 1)))
    B = derivation_space_bruteforce(L)
    f = list(B)[2]
    obj = f.to_json()
    assert set(obj) == {"algebra", "matrix"}
    assert Endo.from_json(obj) == f
    assert DerBasis.from_json(B.to_json()) == B
    with pytest.raises(ShapeError):
        Endo.from_json(obj, alg(7, 1, 1, 1))


def test_support_audit_char3_has_zero_psi_blocks():
    L = alg(3, 1, 1, 1, 1)
    B = derivation_space_bruteforce(L)
    assert check_support_lemmas(B).ok
    for f in B:
        for k in L.block_indices(1, 2):
            assert f.image_block(k, 3, 4).is_zero()
        for k in L.block_indices(3, 4):
            assert f.image_block(k, 1, 2).is_zero()


def test_support_audit_char2_needs_relaxation():
    L = alg(2, 1, 1, 1, 1)
    B = derivation_space_bruteforce(L)
    report = check_support_lemmas(B)
    assert report.ok and report.checked == 13
    # some generator really uses the (3,t) allowance
    assert any(not f.image_block(L.index[(1, 2, 1, 1)], 3, 4).is_zero() for f in B)
    assert (3, 4) in allowed_targets(L, 1, 2, True)
    assert (3, 4) not in allowed_targets(L, 1, 2, False)


def test_support_audit_flags_a_non_derivation():
    L = alg(3, 1, 1, 1, 1)
    i = L.index
    f = Endo.from_images(L, {i[(1, 2, 1, 1)]: {i[(3, 4, 1, 1)]: 1}})
    report = check_support_lemmas(DerBasis(L, (f,)))
    assert not report.ok
    assert report.violations[0].generator == 0
