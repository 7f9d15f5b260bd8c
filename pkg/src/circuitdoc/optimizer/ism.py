"""Implicit space mapping: coarse optimization, one fine check, auxiliary alignment.

Each outer iteration
  A. minimizes the coarse cost over the design vector with the auxiliary
     vector frozen,
  B. evaluates the fine model once at that design, and
  C. re-fits the auxiliary vector so the coarse response at the design
     matches the fine response.
The loop stops when the coarse/fine deviation and the coarse cost are both
within tolerance, or when the outer-iteration budget is spent.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..errors import ConfigError
from ..simmodels import ModelPair, ObjectiveSpec, alignment_norm, objective
from .ecibo import ecibo_refine
from .mturbo import MturboConfig, mturbo_minimize

log = logging.getLogger(__name__)

ALIGN_TOL = 0.05  # dB RMS
COST_TOL = 1e-6


@dataclass(frozen=True)
class BudgetConfig:
    max_outer_iters: int = 6
    coarse_budget: int = 200  # step A global search
    coarse_refine: int = 20  # step A coordinate refinement
    align_budget: int = 100  # step C global search
    align_refine: int = 10
    align_tol: float = ALIGN_TOL
    cost_tol: float = COST_TOL
    seed: int = 0
    regions: int = 3
    batch: int = 8

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise ConfigError("max_outer_iters must be >= 1")
        for name in ("coarse_budget", "align_budget"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("coarse_refine", "align_refine"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "BudgetConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown budget keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class IsmState:
    i: int  # completed outer iterations
    x_c: np.ndarray  # latest coarse optimum (start point before the first iteration)
    x_a: np.ndarray  # auxiliary vector for the next iteration
    fine_eval_count: int = 0
    coarse_eval_count: int = 0
    converged: bool = False
    records: list[dict] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    @classmethod
    def initial(cls, pair: ModelPair) -> "IsmState":
        return cls(0, pair.design_vector().array.copy(), pair.aux_vector().array.copy())


class _Counted:
    def __init__(self, fn):
        self.fn = fn
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.fn(x)


def _seed(base: int, i: int, step: int) -> int:
    return int(np.random.SeedSequence([base, i, step]).generate_state(1)[0])


def _search(f, bounds, x0, budget, refine, seed, cfg: BudgetConfig, diagnostics, label):
    """Global multi-region search then coordinate refinement; returns all evaluations."""
    res = mturbo_minimize(
        f, bounds, cfg.regions, cfg.batch, budget, seed, x0=x0,
        config=MturboConfig(regions=cfg.regions, batch=cfg.batch),
    )
    diagnostics.extend(f"{label}: {d}" for d in res.diagnostics)
    X, Y = res.X, res.Y
    if refine > 0 and len(bounds):
        ref = ecibo_refine(f, X, Y, res.x, bounds, refine, seed)
        diagnostics.extend(f"{label}: {d}" for d in ref.diagnostics)
        if len(ref.Y):
            X, Y = np.vstack([X, ref.X]), np.concatenate([Y, ref.Y])
    if res.n_evals >= budget:
        diagnostics.append(f"{label}: global search used its full budget of {budget}")
    return X, Y


def ism_iterate(pair: ModelPair, state: IsmState, budget: BudgetConfig,
                spec: ObjectiveSpec | None = None) -> IsmState:
    """One outer iteration; exactly one fine evaluation."""
    spec = spec or pair.spec
    dv, av = pair.design_vector(), pair.aux_vector()
    x_a = np.clip(np.asarray(state.x_a, dtype=float), av.bounds[:, 0], av.bounds[:, 1])
    i = state.i + 1
    diagnostics = list(state.diagnostics)

    # step A: coarse design optimum under the current auxiliary vector
    cost_a = _Counted(lambda x: objective(pair.coarse_eval(x, x_a), spec))
    X, Y = _search(cost_a, dv.bounds, state.x_c, budget.coarse_budget, budget.coarse_refine,
                   _seed(budget.seed, i, 0), budget, diagnostics, f"iteration {i} step A")
    best = int(np.argmin(Y))
    x_c, coarse_cost = X[best].copy(), float(Y[best])

    # step B: the single fine evaluation
    fine = pair.fine_eval(x_c)
    fine_cost = objective(fine, spec)
    residual = alignment_norm(pair.coarse_eval(x_c, x_a), fine, spec)
    converged = residual <= budget.align_tol and coarse_cost <= budget.cost_tol

    # step C: align the coarse model to the fine response at x_c
    post = residual
    coarse_calls = cost_a.calls
    if not converged and len(av):
        # the squared norm has the same minimizers and no kink at zero
        align = _Counted(lambda a: alignment_norm(pair.coarse_eval(x_c, a), fine, spec) ** 2)
        A, R2 = _search(align, av.bounds, x_a, budget.align_budget, budget.align_refine,
                       _seed(budget.seed, i, 1), budget, diagnostics, f"iteration {i} step C")
        coarse_calls += align.calls
        post = float(np.sqrt(np.min(R2)))
        ties = np.flatnonzero(R2 == np.min(R2))
        pick = min(ties, key=lambda k: (float(np.linalg.norm(A[k] - x_a)), tuple(A[k])))
        if post <= residual:
            x_a = A[pick].copy()
        else:  # the start point is always evaluated, so this only guards rounding
            post = residual
    record = {
        "i": i,
        "coarse_cost": coarse_cost,
        "align_residual": float(residual),
        "post_align_residual": float(post),
        "fine_cost": float(fine_cost),
        "fine_eval_count": state.fine_eval_count + 1,
        "coarse_evals": coarse_calls,
        "x_c": x_c.tolist(),
        "x_a": x_a.tolist(),
    }
    log.info("ism iteration %d: coarse %.6g fine %.6g residual %.4g", i, coarse_cost, fine_cost, residual)
    return replace(
        state, i=i, x_c=x_c, x_a=x_a,
        fine_eval_count=state.fine_eval_count + 1,
        coarse_eval_count=state.coarse_eval_count + coarse_calls,
        converged=converged, records=state.records + [record], diagnostics=diagnostics,
    )


@dataclass
class IsmReport:
    records: list[dict]
    fine_eval_count: int
    coarse_eval_count: int
    converged: bool
    final_fine_cost: float
    diagnostics: list[str]

    def to_dict(self) -> dict:
        return asdict(self)


def ism_run(pair: ModelPair, budget: BudgetConfig | None = None, spec: ObjectiveSpec | None = None,
            state: IsmState | None = None):
    """Iterate until converged or ``max_outer_iters``; returns (design ParamVector, IsmReport)."""
    budget = budget or BudgetConfig()
    state = state or IsmState.initial(pair)
    while state.i < budget.max_outer_iters and not state.converged:
        state = ism_iterate(pair, state, budget, spec)
    final = pair.design_vector().with_values(state.x_c)
    report = IsmReport(
        state.records, state.fine_eval_count, state.coarse_eval_count, state.converged,
        state.records[-1]["fine_cost"], state.diagnostics,
    )
    return final, report
