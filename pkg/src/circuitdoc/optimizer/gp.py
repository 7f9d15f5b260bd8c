"""Gaussian-process regression with a squared-exponential ARD kernel.

Inputs are mapped to the unit box and outputs standardized before fitting;
predictions are returned in the caller's units.  Hyperparameters
(lengthscales and signal variance) maximize the log marginal likelihood
using L-BFGS-B with analytic gradients from several seeded starts.  The
noise term is a jitter floor that only grows when a Cholesky factorization
fails.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

log = logging.getLogger(__name__)

JITTER = 1e-9
JITTER_MAX = 1e-3
LENGTHSCALE_BOUNDS = (5e-3, 100.0)
SIGNAL_BOUNDS = (1e-3, 1e6)
# second deterministic start: smooth, high-amplitude surfaces (bowls) sit in a
# basin random starts rarely reach
SMOOTH_START = (2.0, 100.0)


def se_kernel(a: np.ndarray, b: np.ndarray, lengthscales: np.ndarray, signal_var: float) -> np.ndarray:
    sa, sb = a / lengthscales, b / lengthscales
    d2 = np.sum(sa * sa, axis=1)[:, None] + np.sum(sb * sb, axis=1)[None, :] - 2.0 * sa @ sb.T
    return signal_var * np.exp(-0.5 * np.maximum(d2, 0.0))


def stable_cholesky(k: np.ndarray, jitter: float = JITTER, limit: float = JITTER_MAX):
    """Lower Cholesky factor of ``k + jitter*I``, growing jitter tenfold on failure."""
    eye = np.eye(len(k))
    while True:
        try:
            return cholesky(k + jitter * eye, lower=True), jitter
        except LinAlgError:
            if jitter >= limit:
                raise
            jitter *= 10


@dataclass
class GpModel:
    x_unit: np.ndarray  # (n, d) training inputs in the unit box
    y_std: np.ndarray  # (n,) standardized outputs
    y_mean: float
    y_scale: float
    lengthscales: np.ndarray
    signal_var: float
    noise_var: float
    lower: np.ndarray  # (d, 2) box used for normalization
    upper: np.ndarray
    chol: np.ndarray | None = None
    alpha: np.ndarray | None = None
    nll: float = float("nan")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def n(self) -> int:
        return len(self.y_std)

    def to_unit(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return (x - self.lower) / (self.upper - self.lower)

    def from_unit(self, u) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * (self.upper - self.lower)

    # predictions in standardized units on unit-box inputs

    def predict_unit(self, u, full_cov: bool = False):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if self.n == 0 or self.signal_var == 0.0:
            mean = np.zeros(len(u))
            if full_cov:
                return mean, se_kernel(u, u, self.lengthscales, self.signal_var)
            return mean, np.full(len(u), self.signal_var)
        kq = se_kernel(u, self.x_unit, self.lengthscales, self.signal_var)
        mean = kq @ self.alpha
        v = solve_triangular(self.chol, kq.T, lower=True)
        if full_cov:
            cov = se_kernel(u, u, self.lengthscales, self.signal_var) - v.T @ v
            return mean, cov
        var = self.signal_var - np.sum(v * v, axis=0)
        return mean, np.maximum(var, 0.0)

    def predict(self, x, full_cov: bool = False):
        """Posterior mean and variance (or covariance) of the latent function."""
        mean, var = self.predict_unit(self.to_unit(x), full_cov)
        return self.y_mean + self.y_scale * mean, var * self.y_scale ** 2

    def standardize(self, y):
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_scale


def _nll_and_grad(theta, x, y, jitter, sq_diffs):
    d = x.shape[1]
    ls = np.exp(theta[:d])
    sf2 = np.exp(theta[d])
    scaled = sq_diffs / (ls * ls)  # (n, n, d)
    kse = sf2 * np.exp(-0.5 * scaled.sum(axis=-1))
    try:
        chol, _ = stable_cholesky(kse, jitter)
    except LinAlgError:
        return 1e25, np.zeros_like(theta)
    alpha = cho_solve((chol, True), y)
    n = len(y)
    nll = 0.5 * y @ alpha + np.log(np.diag(chol)).sum() + 0.5 * n * np.log(2 * np.pi)
    w = np.outer(alpha, alpha) - cho_solve((chol, True), np.eye(n))
    grad = np.empty_like(theta)
    wk = w * kse
    grad[:d] = -0.5 * np.einsum("ij,ijk->k", wk, scaled)
    grad[d] = -0.5 * np.sum(wk)
    return float(nll), grad


def gp_fit(
    points,
    values,
    seed: int | np.random.Generator = 0,
    bounds=None,
    *,
    n_starts: int = 3,
    jitter: float = JITTER,
    init: tuple[np.ndarray, float] | None = None,
    optimize: bool = True,
    maxiter: int = 100,
) -> GpModel:
    """Fit a GP to ``points`` (n, d) and ``values`` (n,).

    ``bounds`` (d, 2) defines the unit-box mapping; it defaults to the data
    hull.  ``init`` seeds the first start with (lengthscales, signal_var), in
    which case ``optimize=False`` uses it as is.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        d = 0 if bounds is None else len(bounds)
        x = x.reshape(0, d)
    if len(x) != len(y):
        raise ValueError("points and values differ in length")
    d = x.shape[1]
    if bounds is None:
        lo, hi = (x.min(axis=0), x.max(axis=0)) if len(x) else (np.zeros(d), np.ones(d))
        hi = np.where(hi > lo, hi, lo + 1.0)
    else:
        b = np.asarray(bounds, dtype=float)
        lo, hi = b[:, 0], b[:, 1]
    u = (x - lo) / (hi - lo)
    ls0 = np.full(d, 0.5) if init is None else np.asarray(init[0], dtype=float)
    sf0 = 1.0 if init is None else float(init[1])

    if len(y) == 0:
        return GpModel(u, y, 0.0, 1.0, ls0, sf0, jitter, lo, hi)
    y_mean = float(y.mean())
    y_scale = float(y.std())
    if y_scale <= 1e-12 * max(1.0, abs(y_mean)):
        # every output equal: flat mean, no signal
        return GpModel(u, np.zeros_like(y), y_mean, 1.0, ls0, 0.0, jitter, lo, hi)
    ys = (y - y_mean) / y_scale

    sq_diffs = (u[:, None, :] - u[None, :, :]) ** 2
    log_bounds = [tuple(np.log(LENGTHSCALE_BOUNDS))] * d + [tuple(np.log(SIGNAL_BOUNDS))]
    lb = np.array([b[0] for b in log_bounds])
    ub = np.array([b[1] for b in log_bounds])
    first = np.clip(np.concatenate([np.log(ls0), [np.log(sf0)]]), lb, ub)
    best_theta, best_nll = first, _nll_and_grad(first, u, ys, jitter, sq_diffs)[0]
    if optimize and len(y) > 1:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        smooth = np.clip(np.log(np.r_[np.full(d, SMOOTH_START[0]), SMOOTH_START[1]]), lb, ub)
        starts = [first, smooth][:max(1, n_starts)]
        starts += [rng.uniform(lb, ub) for _ in range(max(0, n_starts - 2))]
        for start in starts:
            res = minimize(
                _nll_and_grad, start, args=(u, ys, jitter, sq_diffs), jac=True,
                method="L-BFGS-B", bounds=log_bounds, options={"maxiter": maxiter},
            )
            if np.isfinite(res.fun) and res.fun < best_nll:
                best_theta, best_nll = res.x, float(res.fun)
    ls = np.exp(best_theta[:d])
    sf2 = float(np.exp(best_theta[d]))
    chol, used = stable_cholesky(se_kernel(u, u, ls, sf2), jitter)
    if used > jitter:
        log.debug("GP jitter raised to %g", used)
    alpha = cho_solve((chol, True), ys)
    return GpModel(u, ys, y_mean, y_scale, ls, sf2, used, lo, hi, chol, alpha, best_nll)


def _sqrt_psd(cov: np.ndarray) -> np.ndarray:
    scale = max(float(np.max(np.diag(cov))), 1e-300) if len(cov) else 1.0
    try:
        chol, _ = stable_cholesky(cov, JITTER * scale, JITTER_MAX * scale)
        return chol
    except LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def thompson_select(
    model: GpModel, candidates, n: int, seed: int | np.random.Generator = 0
) -> tuple[np.ndarray, list[int]]:
    """Pick ``n`` candidates, each the argmin of a fresh joint posterior sample.

    Picks are without replacement.  Returns the chosen points and their
    indices into ``candidates``.
    """
    cand = np.atleast_2d(np.asarray(candidates, dtype=float))
    if len(cand) == 0:
        raise ValueError("no candidates")
    if not 1 <= n <= len(cand):
        raise ValueError("n must lie in [1, number of candidates]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    mean, cov = model.predict_unit(model.to_unit(cand), full_cov=True)
    root = _sqrt_psd(0.5 * (cov + cov.T))
    available = np.ones(len(cand), dtype=bool)
    chosen = []
    for _ in range(n):
        sample = mean + root @ rng.standard_normal(len(cand))
        sample[~available] = np.inf
        idx = int(np.argmin(sample))
        chosen.append(idx)
        available[idx] = False
    return cand[chosen], chosen
