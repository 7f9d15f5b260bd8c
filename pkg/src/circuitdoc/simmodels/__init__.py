from .models import (
    CascadeModel,
    ModelPair,
    QuadraticToy,
    Variable,
    coarse_eval,
    default_grid,
    fine_eval,
    get_model,
    lc_match,
    load_model,
    model_ids,
    register,
    two_stage,
)
from .response import (
    Constraint,
    ObjectiveSpec,
    ParamVector,
    ResponseCurve,
    alignment_norm,
    band_mask,
    objective,
)

__all__ = [
    "CascadeModel",
    "Constraint",
    "ModelPair",
    "ObjectiveSpec",
    "ParamVector",
    "QuadraticToy",
    "ResponseCurve",
    "Variable",
    "alignment_norm",
    "band_mask",
    "coarse_eval",
    "default_grid",
    "fine_eval",
    "get_model",
    "lc_match",
    "load_model",
    "model_ids",
    "objective",
    "register",
    "two_stage",
]
