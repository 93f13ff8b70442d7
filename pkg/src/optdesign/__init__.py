"""Exact optimal designs for the second-order model on [-1, 1]^K."""

from optdesign._jit import BACKEND
from optdesign.criteria import Criterion, CriterionScore, d_score, efficiency, i_score, score, spv
from optdesign.exchange import ExchangeSettings, SearchResult, cexch_element, exch_row, random_start
from optdesign.localsolve import BoxBounds, SolveSettings, minimize_box, minimize_scalar
from optdesign.model import (
    ModelSpec,
    expand_point,
    information_matrix,
    model_matrix,
    moments_matrix,
)
from optdesign.swarm import PsoSettings, pso_search

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoxBounds", "Criterion", "CriterionScore", "ExchangeSettings", "ModelSpec",
    "PsoSettings", "SearchResult", "SolveSettings", "cexch_element", "d_score", "efficiency",
    "exch_row", "expand_point", "i_score", "information_matrix", "minimize_box",
    "minimize_scalar", "model_matrix", "moments_matrix", "pso_search", "random_start", "score",
    "spv",
]
