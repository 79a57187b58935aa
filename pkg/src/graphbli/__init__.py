"""Bilingual lexicon induction with seeded graph matching (SGM, GOAT) and Procrustes."""

from .errors import (DomainError, GraphBLIError, NumericalError, ParseError, ShapeError,
                     ValidationError, VocabularyError)
from .graphmatch import (MatchProblem, MatchResult, faq, goat, gradient, line_search_alpha,
                         seeded_align, solve)
from .lap import AssignmentSolution, solve_lap_max, solve_lap_min
from .numeric import barycenter, edge_disagreement, qap_objective
from .procrustes import OrthogonalMap, csls_scores, fit_orthogonal, translate
from .sinkhorn import LotParams, TransportPlan, lot, lot_plan, sinkhorn_plan

__version__ = "0.1.0"

__all__ = [
    "AssignmentSolution", "DomainError", "GraphBLIError", "LotParams", "MatchProblem",
    "MatchResult", "NumericalError", "OrthogonalMap", "ParseError", "ShapeError",
    "TransportPlan", "ValidationError", "VocabularyError", "barycenter", "csls_scores",
    "edge_disagreement", "faq", "fit_orthogonal", "goat", "gradient", "line_search_alpha",
    "lot", "lot_plan", "qap_objective", "seeded_align", "sinkhorn_plan", "solve",
    "solve_lap_max", "solve_lap_min", "translate",
]
