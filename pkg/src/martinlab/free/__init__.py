from .words import FreeWord, ball, word_from_document
from .walk import FreeWalkSpec, estimate_R_mu, parse_walk, sample_path, transitional_chain
from .hilbert import birkhoff_delta, chained_product, hilbert_distance, matrix_diameter
from .hitting import (HittingMatrix, hitting_matrix, induced_kernel,
                      martin_ratio_trace)

__all__ = [
    "FreeWord", "ball", "word_from_document",
    "FreeWalkSpec", "parse_walk", "sample_path", "estimate_R_mu",
    "transitional_chain",
    "hilbert_distance", "matrix_diameter", "birkhoff_delta", "chained_product",
    "HittingMatrix", "hitting_matrix", "martin_ratio_trace", "induced_kernel",
]
