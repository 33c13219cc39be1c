"""Numerical toolkit for iterated fractional Brownian motion and Cauchy compositions."""

from .errors import (DomainError, IterlabError, NonConvergence, SeriesDivergence,
                     SingularPoint, ToleranceBudgetExceeded)
from .models import (BmOfCauchy, Cauchy, CauchyOfCauchy, CauchyOfFBm, FBm,
                     HalfProductCauchy, IteratedFBm, IteratedFBmChain, ProcessModel,
                     ProductFBm, ReciprocalCC, ScaledIterated, WeightedJ, parse_model)
from .sampling import RngState, sample_marginal

__version__ = "0.1.0"

__all__ = [
    "BmOfCauchy", "Cauchy", "CauchyOfCauchy", "CauchyOfFBm", "DomainError", "FBm",
    "HalfProductCauchy", "IterlabError", "IteratedFBm", "IteratedFBmChain",
    "NonConvergence", "ProcessModel", "ProductFBm", "ReciprocalCC", "RngState",
    "ScaledIterated", "SeriesDivergence", "SingularPoint", "ToleranceBudgetExceeded",
    "WeightedJ", "parse_model", "sample_marginal",
]
