"""Local refinement by expected coordinate improvement.

Each step scores every axis-aligned line through the incumbent by the best
expected improvement attainable on it, moves along the winning coordinate
only, and refits.  High-dimensional refinement thus becomes a sequence of
one-dimensional searches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from .gp import GpModel
from .mturbo import Evaluations, OptimizationResult, local_gp

EI_TOL = 1e-6
LINE_GRID = 101


def expected_improvement(mean, var, f_best) -> np.ndarray:
    """EI for minimization; zero-variance points give ``max(f_best - mean, 0)``."""
    mean = np.asarray(mean, dtype=float)
    sd = np.sqrt(np.maximum(np.asarray(var, dtype=float), 0.0))
    gap = f_best - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, gap / np.where(sd > 0, sd, 1.0), 0.0)
    ei = np.where(sd > 0, gap * norm.cdf(z) + sd * norm.pdf(z), np.maximum(gap, 0.0))
    return np.maximum(ei, 0.0)


def line_ei(model: GpModel, u_best: np.ndarray, f_best_std: float, coord: int, t) -> np.ndarray:
    """EI (standardized units) at unit-box positions ``t`` along coordinate ``coord``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pts = np.repeat(np.atleast_2d(u_best), len(t), axis=0)
    pts[:, coord] = t
    mean, var = model.predict_unit(pts)
    return expected_improvement(mean, var, f_best_std)


def line_window(model: GpModel, coord: int) -> tuple[float, float]:
    """Span of the model's training inputs along ``coord``.

    Beyond it the local model reverts to its prior, whose variance would
    make every distant point look promising.
    """
    if model.n == 0:
        return 0.0, 1.0
    col = model.x_unit[:, coord]
    return float(max(col.min(), 0.0)), float(min(col.max(), 1.0))


def maximize_line_ei(model, u_best, f_best_std, coord, grid: int = LINE_GRID) -> tuple[float, float]:
    """Grid scan over the data window then bounded Brent polish around the best cell."""
    ts = np.linspace(*line_window(model, coord), grid)
    eis = line_ei(model, u_best, f_best_std, coord, ts)
    k = int(np.argmax(eis))
    best_t, best_ei = float(ts[k]), float(eis[k])
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, grid - 1)]
    if hi > lo:
        res = minimize_scalar(
            lambda t: -float(line_ei(model, u_best, f_best_std, coord, t)[0]),
            bounds=(lo, hi), method="bounded", options={"xatol": 1e-9},
        )
        if -res.fun > best_ei:
            best_t, best_ei = float(res.x), float(-res.fun)
    return best_t, best_ei


def coordinate_scores(model: GpModel, u_best, f_best_std, grid: int = LINE_GRID) -> list[tuple[float, float]]:
    """(position, EI) of the best point on every coordinate line."""
    return [maximize_line_ei(model, u_best, f_best_std, j, grid) for j in range(len(u_best))]


@dataclass
class EciboStep:
    step: int
    coord: int
    ei: float
    scores: list[float]
    value: float | None = None


@dataclass
class EciboResult(OptimizationResult):
    steps: list[EciboStep] = field(default_factory=list)
    stopped: str = ""


def ecibo_refine(
    f: Callable[[np.ndarray], float],
    X,
    Y,
    x_best,
    bounds,
    budget: int,
    seed: int = 0,
    *,
    ei_tol: float = EI_TOL,
    max_gp_points: int | None = None,
    model: GpModel | None = None,
) -> EciboResult:
    """Refine around ``x_best`` using prior evaluations ``X``/``Y`` and ``budget`` new calls.

    The local GP uses the ``max_gp_points`` evaluations nearest the incumbent
    (default ``max(10, 5 d)``), which keeps its output scale matched to the
    neighbourhood being refined.  ``model`` only seeds the GP hyperparameters; the GP is refitted after
    each evaluation on the points nearest the incumbent.
    """
    bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
    diagnostics: list[str] = []
    ev = Evaluations(f, bounds, max(budget, 0), diagnostics)
    X = np.atleast_2d(np.asarray(X, dtype=float)).reshape(-1, len(bounds))
    Y = np.asarray(Y, dtype=float).ravel()
    prior_U = [ev.to_u(x) for x in X]
    prior_Y = [float(y) if np.isfinite(y) else float("inf") for y in Y]
    u_best = ev.to_u(x_best)
    dist = [float(np.max(np.abs(u - u_best))) for u in prior_U]
    if prior_U and min(dist) == 0.0:
        f_best = prior_Y[int(np.argmin(dist))]
    else:
        f_best = ev([u_best])[0] if budget > 0 else float("inf")
        prior_U, prior_Y = prior_U + ev.U[:], prior_Y + ev.Y[:]
    rng = np.random.default_rng(seed)
    if max_gp_points is None:
        max_gp_points = max(10, 5 * len(bounds))
    hypers = None if model is None else (model.lengthscales, max(model.signal_var, 1e-3))
    steps: list[EciboStep] = []
    stopped = "budget"
    all_U, all_Y = list(prior_U), list(prior_Y)
    while ev.remaining > 0:
        U = np.array(all_U)
        Yarr = np.array(all_Y)
        gp = local_gp(U, Yarr, u_best, max_gp_points, rng, hypers)
        hypers = (gp.lengthscales, gp.signal_var if gp.signal_var > 0 else 1.0)
        if gp.signal_var == 0.0:
            stopped = "flat"
            break
        f_std = float(gp.standardize(f_best))
        scores = coordinate_scores(gp, u_best, f_std)
        eis = [s[1] for s in scores]
        coord = int(np.argmax(eis))
        step = EciboStep(len(steps) + 1, coord, eis[coord], eis)
        steps.append(step)
        if eis[coord] < ei_tol:
            stopped = "ei_tol"
            break
        u_new = u_best.copy()
        u_new[coord] = scores[coord][0]
        if np.min(np.max(np.abs(U - u_new), axis=1)) < 1e-12:
            stopped = "repeat"
            break
        value = ev([u_new])[0]
        step.value = value
        all_U.append(u_new)
        all_Y.append(value)
        if value < f_best:
            u_best, f_best = u_new, value
    if budget <= 0:
        stopped = "budget"
    new_U, new_Y = ev.arrays()
    X_new = np.array([ev.to_x(u) for u in new_U]).reshape(new_U.shape)
    return EciboResult(ev.to_x(u_best), float(f_best), X_new, new_Y, [], diagnostics, steps, stopped)
