import random

import pytest

from blockder.cli import example41_map
from blockder.decomposition import (DerivationDecomposition, NotADerivationError, class_dimensions,
                                    decompose, derivation_space_structural, extract_psis, omega,
                                    psi_lemma_candidates, structural_generators, synthesize)
from blockder.endomorphisms import Endo, ad_endo, derivation_space_bruteforce, is_derivation
from blockder.exactfield import FieldSpec
from blockder.matrixcore import Mat, Partition, embed_block, unit_matrix
from blockder.nilalgebra import NilAlgebra


def alg(c, *sizes):
    return NilAlgebra(FieldSpec(c), Partition(sizes))


def random_derivation(L, seed):
    rng = random.Random(seed)
    f = Endo.zero(L)
    for g in derivation_space_bruteforce(L):
        f = f + g.scale(L.field.random_elem(rng))
    return f


def test_omega():
    assert omega(3) == frozenset()
    assert omega(4) == {(1, 2), (2, 3), (3, 4)}
    assert (1, 4) not in omega(5) and (2, 5) not in omega(5) and (1, 3) in omega(5)


def test_zero_map():
    L = alg(3, 1, 2, 1)
    dec = decompose(Endo.zero(L))
    assert dec.X.is_zero()
    assert all(g.is_zero() for _, g in dec.maps())
    assert dec.psi_12_13 is None and dec.psi_t1_t2 is None


def test_t2_convention(field):
    L = NilAlgebra(field, Partition((2, 1)))
    f = random_derivation(L, 4)
    dec = decompose(f)
    assert dec.X.is_zero() and dec.varphi_1t == f


def test_t1_convention():
    L = alg(5, 3)
    dec = decompose(Endo.zero(L))
    assert dec.X.is_zero() and synthesize(dec).is_zero()


@pytest.mark.parametrize("sizes", [(1, 1, 1), (2, 1, 1), (1, 2, 1), (1, 1, 1, 1), (1, 2, 2, 1),
                                   (2, 1, 1, 2), (1, 1, 1, 1, 1)])
def test_roundtrip_random_derivations(field, sizes):
    L = NilAlgebra(field, Partition(sizes))
    for seed in range(3):
        f = random_derivation(L, seed)
        dec = decompose(f)
        assert synthesize(dec) == f
        assert all(is_derivation(g) for _, g in dec.components())


def test_inner_derivation_recovers_ad(field):
    L = NilAlgebra(field, Partition((1, 2, 1, 1)))
    rng = random.Random(9)
    P = L.partition
    X = Mat.zeros(field, P.n, P.n)
    for i in range(1, P.t + 1):
        for j in range(i, P.t + 1):
            X = X + embed_block(Mat(field, [[field.random_elem(rng) for _ in range(P.size(j))]
                                            for _ in range(P.size(i))]), i, j, P)
    dec = decompose(ad_endo(L, X))
    assert ad_endo(L, dec.X) + sum((g for _, g in dec.maps()), Endo.zero(L)) == ad_endo(L, X)


def test_gauge_invariance(field):
    L = NilAlgebra(field, Partition((1, 2, 1, 1)))
    f = random_derivation(L, 2)
    lam = field.elem(1)
    shifted = f + ad_endo(L, Mat.identity(field, L.partition.n).scale(lam))
    assert shifted == f
    a, b = decompose(f), decompose(shifted)
    assert a.X == b.X and [g for _, g in a.maps()] == [g for _, g in b.maps()]
    # moving X along the centre changes nothing
    P = L.partition
    E = embed_block(unit_matrix(field, P.size(1), P.size(P.t), 1, 1), 1, P.t, P)
    moved = DerivationDecomposition(L, a.X + E, a.varphi_1t, a.phi_12_2t, a.phi_t1t_1t1,
                                    a.psi_12_13, a.psi_t1_t2)
    assert synthesize(moved) == synthesize(a)


def test_non_derivation_rejected():
    L = alg(3, 1, 1, 1)
    i = L.index
    f = Endo.from_images(L, {i[(1, 3, 1, 1)]: {i[(1, 3, 1, 1)]: 1}})
    with pytest.raises(NotADerivationError) as exc:
        decompose(f)
    assert any(exc.value.defect)


def test_example_map_over_gf2():
    f = example41_map(FieldSpec(2))
    dec = decompose(f)
    assert dec.X.is_zero()
    assert dec.psi_12_13 == f
    for name in ("varphi_1t", "phi_12_2t", "phi_t1t_1t1", "psi_t1_t2"):
        assert getattr(dec, name).is_zero()


def test_example_map_over_gf3_is_not_a_derivation():
    F = FieldSpec(3)
    f = example41_map(F)
    L = f.algebra
    with pytest.raises(NotADerivationError) as exc:
        decompose(f)
    a, b = exc.value.pair
    assert {L.basis[a][:2], L.basis[b][:2]} == {(1, 2), (1, 3)}
    assert exc.value.defect == tuple(2 if k == L.index[(1, 4, 1, 1)] else 0 for k in range(L.dim))


def test_char3_has_no_psi_components():
    for sizes in [(1, 1, 1, 1), (1, 2, 1, 1), (1, 1, 1, 1, 1)]:
        L = alg(3, *sizes)
        for g in derivation_space_bruteforce(L):
            dec = decompose(g)
            assert dec.psi_12_13 is None and dec.psi_t1_t2 is None
    with pytest.raises(ValueError):
        extract_psis(Endo.zero(alg(3, 1, 1, 1, 1)))


def test_structural_generators_are_derivations(field):
    for sizes in [(1, 1, 1, 1), (1, 2, 2, 1), (2, 1, 1, 2), (1, 1, 2, 1, 1)]:
        L = NilAlgebra(field, Partition(sizes))
        for name, gens in structural_generators(L).items():
            for g in gens:
                assert is_derivation(g), (sizes, name)


@pytest.mark.parametrize("sizes", [(1, 1, 1), (1, 1, 1, 1), (2, 1, 1), (1, 2, 2, 1), (2, 1, 1, 1, 1)])
def test_structural_equals_oracle(field, sizes):
    L = NilAlgebra(field, Partition(sizes))
    assert derivation_space_structural(L) == derivation_space_bruteforce(L)


def test_class_dimensions_1111_gf2():
    dims = class_dimensions(alg(2, 1, 1, 1, 1))
    assert dims["total"] == 13
    assert dims["psi_12_13_excess"] == 1 and dims["psi_t1_t2_excess"] == 1
    assert dims["varphi_1t_generators"] == 3


def test_psi_lemma_candidates_overcount():
    # single-line first block but a wider second block: the row-matching
    # candidates are not derivations, and no psi class survives
    L = alg(2, 1, 2, 2, 1)
    cands = psi_lemma_candidates(L)
    assert len(cands["psi_12_13"]) == 4 and len(cands["psi_t1_t2"]) == 4
    assert not any(is_derivation(g) for g in cands["psi_12_13"] + cands["psi_t1_t2"])
    assert class_dimensions(L)["psi_12_13_generators"] == 0
    assert derivation_space_bruteforce(L).dimension == derivation_space_bruteforce(alg(3, 1, 2, 2, 1)).dimension
    # 1x1 corner: candidates and the structural class coincide
    L = alg(2, 1, 1, 2, 1)
    assert all(is_derivation(g) for g in psi_lemma_candidates(L)["psi_12_13"])


def test_decomposition_json(field):
    L = NilAlgebra(field, Partition((1, 1, 1, 1)))
    dec = decompose(random_derivation(L, 6))
    obj = dec.to_json()
    assert set(obj) == {"algebra", "X", "varphi_1t", "phi_12_2t", "phi_t1t_1t1", "psi_12_13", "psi_t1_t2"}
    assert (obj["psi_12_13"] is None) == (field.characteristic != 2)
    back = DerivationDecomposition.from_json(obj)
    assert synthesize(back) == synthesize(dec)
    assert back.X == dec.X


def test_synthesize_rejects_lower_x():
    L = alg(2, 1, 1)
    z = Endo.zero(L)
    bad = DerivationDecomposition(L, Mat(FieldSpec(2), [[0, 0], [1, 0]]), z, z, z)
    with pytest.raises(ValueError):
        synthesize(bad)
