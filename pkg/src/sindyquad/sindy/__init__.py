"""Sparse identification of the planar model with control inputs."""

from .differentiation import finite_difference
from .library import CandidateLibrary, LibrarySpec, build_library, evaluate_terms, library_terms
from .model import (OptimizerConfig, SparseModel, discover, fit, predict_derivative, simulate_model,
                    truth_model)
from .optimizers import sr3, stlsq

__all__ = [
    "CandidateLibrary", "LibrarySpec", "OptimizerConfig", "SparseModel", "build_library", "discover",
    "evaluate_terms", "finite_difference", "fit", "library_terms", "predict_derivative",
    "simulate_model", "sr3", "stlsq", "truth_model",
]
