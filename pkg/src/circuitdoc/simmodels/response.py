"""Parameter vectors, response curves and the scalar costs built on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DomainError

RELATIONS = (">=", "<=")


@dataclass(frozen=True)
class ParamVector:
    names: tuple[str, ...]
    values: tuple[float, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        n = len(self.names)
        if not (len(self.values) == len(self.lo) == len(self.hi) == n):
            raise DomainError("names, values and bounds must have equal length")
        if len(set(self.names)) != n:
            raise DomainError("parameter names must be unique")
        bad = [nm for nm, l, h in zip(self.names, self.lo, self.hi) if not l <= h]
        if bad:
            raise DomainError(f"inverted bounds for {', '.join(bad)}")
        out = [
            nm for nm, v, l, h in zip(self.names, self.values, self.lo, self.hi)
            if not (np.isfinite(v) and l <= v <= h)
        ]
        if out:
            raise DomainError(f"out of bounds: {', '.join(out)}")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    @property
    def bounds(self) -> np.ndarray:
        return np.column_stack([self.lo, self.hi]).astype(float)

    def with_values(self, values) -> "ParamVector":
        return ParamVector(self.names, tuple(float(v) for v in values), self.lo, self.hi)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def __len__(self):
        return len(self.names)


@dataclass(frozen=True)
class ResponseCurve:
    freq_hz: np.ndarray
    channels: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.asarray(self.freq_hz, dtype=float)
        if f.ndim != 1 or len(f) == 0 or np.any(np.diff(f) <= 0):
            raise DomainError("frequency grid must be non-empty and strictly ascending")
        for name, ch in self.channels.items():
            if np.shape(ch) != f.shape:
                raise DomainError(f"channel {name} has {np.shape(ch)} samples, grid has {f.shape}")

    @property
    def s21_db(self) -> np.ndarray:
        return self.channels["s21_db"]

    def channel(self, name: str) -> np.ndarray:
        try:
            return np.asarray(self.channels[name], dtype=float)
        except KeyError:
            raise DomainError(f"response has no channel {name!r}") from None


@dataclass(frozen=True)
class Constraint:
    channel: str
    relation: str
    target: float
    weight: float = 1.0

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ConfigError(f"relation must be one of {RELATIONS}, not {self.relation!r}")
        if not self.weight > 0:
            raise ConfigError("constraint weight must be > 0")


@dataclass(frozen=True)
class ObjectiveSpec:
    band: tuple[float, float]
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        if not self.band[0] < self.band[1]:
            raise ConfigError("band must satisfy f_lo < f_hi")

    @classmethod
    def from_dict(cls, data: dict) -> "ObjectiveSpec":
        try:
            cons = tuple(
                Constraint(c["channel"], c["relation"], float(c["target"]), float(c.get("weight", 1.0)))
                for c in data.get("constraints", [])
            )
            return cls((float(data["band"][0]), float(data["band"][1])), cons)
        except (KeyError, TypeError, IndexError) as exc:
            raise ConfigError(f"bad objective spec: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "band": list(self.band),
            "constraints": [
                {"channel": c.channel, "relation": c.relation, "target": c.target, "weight": c.weight}
                for c in self.constraints
            ],
        }


def band_mask(freq: np.ndarray, band: tuple[float, float]) -> np.ndarray:
    f = np.asarray(freq, dtype=float)
    if band[0] < f[0] or band[1] > f[-1]:
        raise DomainError(f"band {band} is not inside the response grid [{f[0]}, {f[-1]}]")
    return (f >= band[0]) & (f <= band[1])


def objective(resp: ResponseCurve, spec: ObjectiveSpec) -> float:
    """Weighted hinge sum of constraint violations over in-band samples."""
    mask = band_mask(resp.freq_hz, spec.band)
    cost = 0.0
    for c in spec.constraints:
        y = resp.channel(c.channel)[mask]
        gap = c.target - y if c.relation == ">=" else y - c.target
        cost += c.weight * float(np.sum(np.maximum(gap, 0.0)))
    return cost


def alignment_norm(coarse: ResponseCurve, fine: ResponseCurve, spec: ObjectiveSpec) -> float:
    """Weighted RMS difference over in-band samples of the constrained channels.

    A channel's weight is the largest weight among its constraints; without
    constraints the S21 channel is compared with weight 1.
    """
    if not np.array_equal(np.asarray(coarse.freq_hz), np.asarray(fine.freq_hz)):
        raise DomainError("responses are sampled on different grids")
    mask = band_mask(coarse.freq_hz, spec.band)
    weights: dict[str, float] = {}
    for c in spec.constraints:
        weights[c.channel] = max(weights.get(c.channel, 0.0), c.weight)
    if not weights:
        weights = {"s21_db": 1.0}
    num = den = 0.0
    for name, w in weights.items():
        diff = coarse.channel(name)[mask] - fine.channel(name)[mask]
        num += w * float(np.sum(diff * diff))
        den += w * int(mask.sum())
    return float(np.sqrt(num / den)) if den else 0.0
