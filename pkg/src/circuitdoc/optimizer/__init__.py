from .ecibo import EciboResult, coordinate_scores, ecibo_refine, expected_improvement, line_ei
from .gp import GpModel, gp_fit, se_kernel, stable_cholesky, thompson_select
from .ism import BudgetConfig, IsmReport, IsmState, ism_iterate, ism_run
from .mturbo import MturboConfig, OptimizationResult, mturbo_minimize
from .trust_region import TrustRegion, trust_region_update

__all__ = [
    "BudgetConfig",
    "EciboResult",
    "GpModel",
    "IsmReport",
    "IsmState",
    "MturboConfig",
    "OptimizationResult",
    "TrustRegion",
    "coordinate_scores",
    "ecibo_refine",
    "expected_improvement",
    "gp_fit",
    "ism_iterate",
    "ism_run",
    "line_ei",
    "mturbo_minimize",
    "se_kernel",
    "stable_cholesky",
    "thompson_select",
    "trust_region_update",
]
