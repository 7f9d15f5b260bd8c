"""Trust-region bookkeeping for the multi-region search."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

TAU_SUCC = 3
TAU_FAIL = 3
L_INIT = 0.8
L_MIN = 2.0 ** -7
L_MAX = 1.6


@dataclass(frozen=True)
class TrustRegion:
    """Box around ``center`` (unit-box coordinates) with base side length ``length``.

    Per-dimension side lengths are ``length`` scaled by GP lengthscale
    weights whose geometric mean is 1; see :meth:`box`.
    """

    center: tuple[float, ...]
    length: float = L_INIT
    success_count: int = 0
    failure_count: int = 0
    l_min: float = L_MIN
    l_max: float = L_MAX
    tau_succ: int = TAU_SUCC
    tau_fail: int = TAU_FAIL
    converged: bool = False

    def box(self, lengthscales=None) -> tuple[np.ndarray, np.ndarray]:
        """Region clipped to the unit box."""
        c = np.asarray(self.center, dtype=float)
        if lengthscales is None:
            weights = np.ones_like(c)
        else:
            ls = np.asarray(lengthscales, dtype=float)
            weights = ls / np.exp(np.mean(np.log(ls)))
        half = 0.5 * self.length * weights
        return np.clip(c - half, 0.0, 1.0), np.clip(c + half, 0.0, 1.0)


def trust_region_update(tr: TrustRegion, batch_improved: bool) -> TrustRegion:
    succ, fail, length = tr.success_count, tr.failure_count, tr.length
    if batch_improved:
        succ, fail = succ + 1, 0
    else:
        succ, fail = 0, fail + 1
    if succ >= tr.tau_succ:
        length, succ = min(2.0 * length, tr.l_max), 0
    elif fail >= tr.tau_fail:
        length, fail = length / 2.0, 0
    return replace(
        tr, length=length, success_count=succ, failure_count=fail, converged=length < tr.l_min
    )
