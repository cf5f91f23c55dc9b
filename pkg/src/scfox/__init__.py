"""Selection combining over Fisher-Snedecor F fading channels.

Exact performance metrics are evaluated from multiple Mellin-Barnes
integrals and checked against direct quadrature and Monte Carlo.
"""

from .channel import (BranchParams, ScChannel, branch_cdf, branch_pdf, sc_cdf,
                      sc_cdf_foxh, sc_mgf, sc_pdf_foxh, sc_pdf_product_rule)
from .mellin import (ContourSpec, EvalResult, GammaFactor, LinearFactor, MellinIntegrand,
                     PowerTerm, decay_rate, evaluate, feasible_contour)

__version__ = "0.1.0"

__all__ = [
    "BranchParams", "ScChannel", "branch_cdf", "branch_pdf", "sc_cdf", "sc_cdf_foxh", "sc_mgf",
    "sc_pdf_foxh", "sc_pdf_product_rule", "ContourSpec", "EvalResult", "GammaFactor",
    "LinearFactor", "MellinIntegrand", "PowerTerm", "decay_rate", "evaluate",
    "feasible_contour",
]
