from .boys import boys, boys_array
from .engine import (ERITensor, OneElectronMatrices, UnsupportedAngularMomentum, cross_overlap,
                     eri, eri_block, eri_tensor, h1_gram, hardy_ratio, kinetic, kinetic_matrix,
                     nuclear, nuclear_matrix, one_electron_matrices, overlap, overlap_matrix,
                     pair_index, shell_pair)

__all__ = [
    "boys", "boys_array", "ERITensor", "OneElectronMatrices", "UnsupportedAngularMomentum",
    "cross_overlap", "eri", "eri_block", "eri_tensor", "h1_gram", "hardy_ratio", "kinetic",
    "kinetic_matrix", "nuclear", "nuclear_matrix", "one_electron_matrices", "overlap",
    "overlap_matrix", "pair_index", "shell_pair",
]
