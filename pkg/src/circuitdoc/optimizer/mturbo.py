"""Batch Bayesian optimization over several trust regions (global stage).

Each region keeps its own incumbent and trust box.  Every round, a local GP
is fitted to the evaluations nearest the region center, a Sobol candidate
set is drawn inside the box, and a batch is chosen by Thompson sampling.
Regions that shrink below the minimum length restart from the unexplored
Latin-hypercube point the data currently rates best.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .gp import GpModel, gp_fit, thompson_select
from .trust_region import L_INIT, L_MAX, L_MIN, TAU_FAIL, TAU_SUCC, TrustRegion, trust_region_update

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MturboConfig:
    regions: int = 3
    batch: int = 8
    n_init: int | None = None  # per region; default min(2d, budget / (3 * regions)), at least 2
    n_candidates: int | None = None  # default min(100 d, 5000)
    max_gp_points: int = 200
    improvement_rel: float = 1e-3
    perturb_prob: float | None = None
    gp_starts: int = 3
    l_init: float = L_INIT
    l_min: float = L_MIN
    l_max: float = L_MAX
    tau_succ: int = TAU_SUCC
    tau_fail: int = TAU_FAIL


@dataclass
class OptimizationResult:
    x: np.ndarray
    fx: float
    X: np.ndarray  # every evaluated point, in evaluation order
    Y: np.ndarray
    history: list[dict] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    @property
    def n_evals(self) -> int:
        return len(self.Y)


class Evaluations:
    """Evaluation log in unit-box coordinates with non-finite values mapped to +inf."""

    def __init__(self, f: Callable, bounds: np.ndarray, budget: int, diagnostics: list[str]):
        self.f = f
        self.lo, self.hi = bounds[:, 0], bounds[:, 1]
        self.budget = budget
        self.U: list[np.ndarray] = []
        self.Y: list[float] = []
        self.diagnostics = diagnostics

    @property
    def remaining(self) -> int:
        return self.budget - len(self.Y)

    def to_x(self, u) -> np.ndarray:
        return np.clip(self.lo + np.clip(u, 0.0, 1.0) * (self.hi - self.lo), self.lo, self.hi)

    def to_u(self, x) -> np.ndarray:
        span = np.where(self.hi > self.lo, self.hi - self.lo, 1.0)
        return np.clip((np.asarray(x, dtype=float) - self.lo) / span, 0.0, 1.0)

    def __call__(self, us) -> list[float]:
        out = []
        for u in np.atleast_2d(us):
            if self.remaining <= 0:
                break
            x = self.to_x(u)
            try:
                y = float(self.f(x))
            except (ArithmeticError, ValueError) as exc:
                y = float("nan")
                self.diagnostics.append(f"objective raised {type(exc).__name__} at {x.tolist()}: {exc}")
            if not np.isfinite(y):
                self.diagnostics.append(f"non-finite objective at {x.tolist()}; recorded as +inf")
                y = float("inf")
            self.U.append(np.clip(u, 0.0, 1.0))
            self.Y.append(y)
            out.append(y)
        return out

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        d = len(self.lo)
        return np.array(self.U).reshape(-1, d), np.array(self.Y, dtype=float)

    def result(self, history) -> OptimizationResult:
        U, Y = self.arrays()
        X = np.array([self.to_x(u) for u in U]).reshape(U.shape)
        best = int(np.argmin(Y))
        return OptimizationResult(X[best], float(Y[best]), X, Y, history, self.diagnostics)


def finite_targets(y: np.ndarray) -> np.ndarray:
    """Replace +inf with the worst finite value so the GP stays well posed."""
    finite = np.isfinite(y)
    if finite.all():
        return y
    fill = y[finite].max() if finite.any() else 0.0
    return np.where(finite, y, fill)


def local_gp(U, Y, center, max_points, rng, init=None, starts=3) -> GpModel:
    """GP on the ``max_points`` evaluations nearest ``center`` (unit box)."""
    if len(U) > max_points:
        dist = np.sum((U - center) ** 2, axis=1)
        keep = np.sort(np.argsort(dist, kind="stable")[:max_points])
        U, Y = U[keep], Y[keep]
    d = U.shape[1]
    unit = np.column_stack([np.zeros(d), np.ones(d)])
    return gp_fit(U, finite_targets(Y), rng, unit, n_starts=starts if init is None else 2, init=init)


@dataclass
class _Region:
    tr: TrustRegion
    members: list[int]  # evaluation indices owned by this region
    rng: np.random.Generator
    hypers: tuple | None = None

    def best(self, Y) -> tuple[int, float]:
        idx = min(self.members, key=lambda i: (Y[i], i))
        return idx, Y[idx]


def _candidates(tr: TrustRegion, model: GpModel, n: int, rng: np.random.Generator,
                perturb_prob: float | None = None) -> np.ndarray:
    """Sobol points in the region box; each keeps the center's value in some coordinates.

    A coordinate is perturbed with probability ``perturb_prob`` (default
    ``min(1, 20/d)``); rows left untouched get one random coordinate.
    """
    d = len(tr.center)
    lo, hi = tr.box(model.lengthscales)
    m = max(0, int(np.ceil(np.log2(max(n, 1)))))
    sobol = qmc.Sobol(d, scramble=True, seed=rng).random_base2(m)[:n]
    pts = lo + sobol * (hi - lo)
    prob = min(1.0, 20.0 / d) if perturb_prob is None else perturb_prob
    if prob < 1.0:
        mask = rng.random((n, d)) <= prob
        rows = ~mask.any(axis=1)
        mask[rows, rng.integers(0, d, rows.sum())] = True
        pts = np.where(mask, pts, np.asarray(tr.center))
    return pts


def mturbo_minimize(
    f: Callable[[np.ndarray], float],
    bounds,
    regions: int = 3,
    batch: int = 8,
    budget: int = 100,
    seed: int = 0,
    *,
    x0=None,
    f_target: float | None = None,
    config: MturboConfig | None = None,
) -> OptimizationResult:
    """Minimize ``f`` over the box ``bounds`` (d, 2) with at most ``budget`` calls."""
    bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
    if budget < 1:
        raise ValueError("budget must be positive")
    if regions < 1 or batch < 1:
        raise ValueError("regions and batch must be >= 1")
    cfg = config or MturboConfig(regions=regions, batch=batch)
    d = len(bounds)
    seq = np.random.SeedSequence(seed)
    main_rng, *region_rngs = [np.random.default_rng(s) for s in seq.spawn(regions + 1)]
    n_init = cfg.n_init or max(2, min(2 * d, budget // (3 * regions)))
    n_cand = cfg.n_candidates or min(100 * d, 5000)
    pool = qmc.LatinHypercube(d, seed=main_rng).random(max(n_init * regions * 4, 64))
    pool_used = np.zeros(len(pool), dtype=bool)
    diagnostics: list[str] = []
    ev = Evaluations(f, bounds, budget, diagnostics)
    history: list[dict] = []

    def take_pool(k):
        idx = np.flatnonzero(~pool_used)[:k]
        pool_used[idx] = True
        return pool[idx]

    def new_tr(center):
        return TrustRegion(tuple(center), cfg.l_init, 0, 0, cfg.l_min, cfg.l_max, cfg.tau_succ, cfg.tau_fail)

    def done():
        return ev.remaining <= 0 or (f_target is not None and ev.Y and min(ev.Y) <= f_target)

    region_list: list[_Region] = []
    for r in range(regions):
        start = len(ev.Y)
        if r == 0 and x0 is not None:
            ev([ev.to_u(x0)])
        ev(take_pool(n_init))
        members = list(range(start, len(ev.Y)))
        if not members:
            break
        _, Ynow = ev.arrays()
        center = ev.U[min(members, key=lambda i: (Ynow[i], i))]
        region_list.append(_Region(new_tr(center), members, region_rngs[r]))
    history.append({"round": 0, "evals": len(ev.Y), "best": float(min(ev.Y))})

    rnd = 0
    while not done():
        rnd += 1
        for reg in region_list:
            if done():
                break
            U, Y = ev.arrays()
            _, best_before = reg.best(Y)
            model = local_gp(U, Y, np.asarray(reg.tr.center), cfg.max_gp_points, reg.rng,
                             reg.hypers, cfg.gp_starts)
            reg.hypers = (model.lengthscales, model.signal_var if model.signal_var > 0 else 1.0)
            cand = _candidates(reg.tr, model, n_cand, reg.rng, cfg.perturb_prob)
            q = min(cfg.batch, ev.remaining, len(cand))
            chosen, _ = thompson_select(model, cand, q, reg.rng)
            start = len(ev.Y)
            values = ev(chosen)
            reg.members.extend(range(start, start + len(values)))
            threshold = best_before - cfg.improvement_rel * abs(best_before)
            improved = bool(values) and min(values) < threshold
            reg.tr = trust_region_update(reg.tr, improved)
            _, Y = ev.arrays()
            idx, _ = reg.best(Y)
            reg.tr = TrustRegion(tuple(ev.U[idx]), *[getattr(reg.tr, k) for k in (
                "length", "success_count", "failure_count", "l_min", "l_max", "tau_succ", "tau_fail", "converged")])
            if reg.tr.converged and not done():
                _restart(reg, ev, pool, pool_used, cfg, new_tr)
        history.append({
            "round": rnd,
            "evals": len(ev.Y),
            "best": float(min(ev.Y)),
            "lengths": [float(r.tr.length) for r in region_list],
        })
    return ev.result(history)


def _restart(reg: _Region, ev: Evaluations, pool, pool_used, cfg: MturboConfig, new_tr) -> None:
    """Move a collapsed region to the unexplored pool point with the lowest posterior mean."""
    free = np.flatnonzero(~pool_used)
    if len(free) == 0:
        extra = qmc.LatinHypercube(pool.shape[1], seed=reg.rng).random(len(pool))
        pool[:] = extra
        pool_used[:] = False
        free = np.arange(len(pool))
    U, Y = ev.arrays()
    order = np.argsort(finite_targets(Y), kind="stable")[: cfg.max_gp_points]
    model = gp_fit(U[order], finite_targets(Y[order]), reg.rng,
                   np.column_stack([np.zeros(U.shape[1]), np.ones(U.shape[1])]), n_starts=1)
    mean, _ = model.predict_unit(pool[free])
    pick = int(free[int(np.argmin(mean))])
    pool_used[pick] = True
    start = len(ev.Y)
    ev([pool[pick]])
    reg.members = list(range(start, len(ev.Y)))
    reg.hypers = None
    reg.tr = new_tr(pool[pick])
    log.debug("region restarted at pool point %d", pick)
