"""Derivations of the Lie algebra of strictly block upper triangular matrices."""

from .decomposition import (DerivationDecomposition, decompose, derivation_space_structural,
                            omega, synthesize)
from .endomorphisms import DerBasis, Endo, ad_endo, derivation_space_bruteforce, is_derivation
from .exactfield import FieldSpec, field_make
from .matrixcore import Mat, Partition
from .nilalgebra import NilAlgebra

__all__ = [
    "DerBasis", "DerivationDecomposition", "Endo", "FieldSpec", "Mat", "NilAlgebra", "Partition",
    "ad_endo", "decompose", "derivation_space_bruteforce", "derivation_space_structural",
    "field_make", "is_derivation", "omega", "synthesize",
]
