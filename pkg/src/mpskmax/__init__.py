"""Exact polynomial-time maximization of ||V^H s||^2 over MPSK sequences.

The feasible set of M^(N-1) sequences is reduced to a polynomial-size
candidate set by partitioning an auxiliary-angle space with the decision
boundary surfaces of each matrix row; the maximizer provably lies in the
candidate set, which is enumerated combination by combination.
"""

__version__ = "0.1.0"

from ._backend import available_backends, get_backend
from .arrangement import (CandidateSet, CellCandidate, cardinality_formula,
                          enumerate_candidates, write_candidate_dump)
from .core import DEGENERATE, REJECTED, canonicalize, metric
from .sims import (BeamformingConfig, ErrorRateTable, MlsdConfig,
                   simulate_beamforming, simulate_mlsd)
from .solver import (BudgetExceededError, SolveResult, exhaustive_oracle,
                     preprocess, solve, solve_rank_reduced)

__all__ = [
    "__version__",
    "available_backends", "get_backend",
    "CandidateSet", "CellCandidate", "cardinality_formula",
    "enumerate_candidates", "write_candidate_dump",
    "DEGENERATE", "REJECTED", "canonicalize", "metric",
    "BeamformingConfig", "ErrorRateTable", "MlsdConfig",
    "simulate_beamforming", "simulate_mlsd",
    "BudgetExceededError", "SolveResult", "exhaustive_oracle",
    "preprocess", "solve", "solve_rank_reduced",
]
