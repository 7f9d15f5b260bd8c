"""Coarse/fine model pairs and the registry that names them.

A pair shares one structure.  The coarse model exposes auxiliary parasitics
as free inputs; the fine model is the same structure with those parasitics
frozen at hidden values the optimizer never sees.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DomainError, NotFoundError
from . import twoport
from .response import Constraint, ObjectiveSpec, ParamVector, ResponseCurve

ROLES = ("design", "auxiliary", "hidden")
ELEMENT_KINDS = ("series", "shunt", "series_tank", "shunt_tank", "tline")
GRID_POINTS = 81
GRID_SPAN = 0.2
LC_GAIN_TARGET_DB = -0.05  # a little past what the fine model can reach everywhere in band


def default_grid(band: tuple[float, float], points: int = GRID_POINTS) -> np.ndarray:
    """``points`` samples over the band widened by 20% on each side."""
    return np.linspace((1 - GRID_SPAN) * band[0], (1 + GRID_SPAN) * band[1], points)


@dataclass(frozen=True)
class Variable:
    name: str
    role: str
    lo: float
    hi: float
    value: float  # design start, auxiliary start, or the coarse value of a hidden term
    hidden: float | None = None  # what the fine model uses for auxiliary/hidden terms

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigError(f"variable {self.name}: role must be one of {ROLES}")
        if self.role != "design" and self.hidden is None:
            raise ConfigError(f"variable {self.name}: {self.role} variables need a hidden value")


class ModelPair:
    """Interface shared by every registered pair."""

    model_id: str
    spec: ObjectiveSpec
    freq: np.ndarray

    def design_vector(self) -> ParamVector:
        raise NotImplementedError

    def aux_vector(self) -> ParamVector:
        raise NotImplementedError

    def hidden_aux(self) -> np.ndarray:
        raise NotImplementedError

    def coarse_eval(self, x_c, x_a) -> ResponseCurve:
        raise NotImplementedError

    def fine_eval(self, x_c) -> ResponseCurve:
        return self.coarse_eval(x_c, self.hidden_aux())

    def _checked(self, template: ParamVector, x) -> np.ndarray:
        values = x.values if isinstance(x, ParamVector) else np.ravel(np.asarray(x, dtype=float))
        if len(values) != len(template):
            raise DomainError(f"expected {len(template)} values, got {len(values)}")
        template.with_values(values)  # raises DomainError naming offenders
        return np.asarray(values, dtype=float)


@dataclass
class CascadeModel(ModelPair):
    """Ladder of two-port elements between real source and load impedances.

    Element parameters are either numbers or variable names.  An optional
    noise proxy channel ``nf_db`` grows with the total series resistance and
    inductance, a stand-in for element Q rather than a device noise model.
    """

    model_id: str
    variables: list[Variable]
    elements: list[dict]
    spec: ObjectiveSpec
    z_source: float = 50.0
    z_load: float = 50.0
    freq: np.ndarray = None
    noise_proxy: dict | None = None
    description: str = ""
    _by_role: dict = field(init=False, repr=False, default=None)

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ConfigError(f"model {self.model_id}: duplicate variable names")
        if self.freq is None:
            self.freq = default_grid(self.spec.band)
        self.freq = np.asarray(self.freq, dtype=float)
        known = set(names)
        for el in self.elements:
            if el.get("kind") not in ELEMENT_KINDS:
                raise ConfigError(f"model {self.model_id}: unknown element kind {el.get('kind')!r}")
            for key, ref in el.items():
                if key != "kind" and isinstance(ref, str) and ref not in known:
                    raise ConfigError(f"model {self.model_id}: element references unknown variable {ref!r}")
        self._by_role = {r: [v for v in self.variables if v.role == r] for r in ROLES}

    def _vector(self, role: str) -> ParamVector:
        vs = self._by_role[role]
        return ParamVector(
            tuple(v.name for v in vs), tuple(v.value for v in vs),
            tuple(v.lo for v in vs), tuple(v.hi for v in vs),
        )

    def design_vector(self) -> ParamVector:
        return self._vector("design")

    def aux_vector(self) -> ParamVector:
        return self._vector("auxiliary")

    def hidden_aux(self) -> np.ndarray:
        return np.array([v.hidden for v in self._by_role["auxiliary"]], dtype=float)

    def _values(self, x_c, x_a, fine: bool) -> dict[str, float]:
        values = dict(zip(self.design_vector().names, self._checked(self.design_vector(), x_c)))
        values.update(zip(self.aux_vector().names, self._checked(self.aux_vector(), x_a)))
        for v in self._by_role["hidden"]:
            values[v.name] = v.hidden if fine else v.value
        return values

    def _response(self, values: dict[str, float]) -> ResponseCurve:
        f = self.freq

        def val(el, key):
            ref = el.get(key)
            return values[ref] if isinstance(ref, str) else ref

        stages = []
        for el in self.elements:
            kind = el["kind"]
            if kind == "tline":
                stages.append(twoport.tline(f, val(el, "z0"), val(el, "theta_deg"), val(el, "f0")))
                continue
            r, l, c = val(el, "R"), val(el, "L"), val(el, "C")
            if kind == "series":
                stages.append(twoport.series(twoport.branch_impedance(f, r, l, c)))
            elif kind == "shunt":
                z = twoport.branch_impedance(f, r, l, c)
                with np.errstate(divide="ignore", invalid="ignore"):
                    y = np.where(z == 0, 1e12, 1.0 / np.where(z == 0, 1.0, z))
                stages.append(twoport.shunt(y))
            elif kind == "series_tank":
                y = twoport.tank_admittance(f, r, l, c)
                with np.errstate(divide="ignore", invalid="ignore"):
                    z = np.where(y == 0, 1e12, 1.0 / np.where(y == 0, 1.0, y))
                stages.append(twoport.series(z))
            else:
                stages.append(twoport.shunt(twoport.tank_admittance(f, r, l, c)))
        abcd = twoport.cascade(f, stages)
        channels = {"s21_db": twoport.to_db(twoport.s21(abcd, self.z_source, self.z_load))}
        if self.noise_proxy:
            channels["nf_db"] = self._noise(values)
        return ResponseCurve(f, channels)

    def _noise(self, values: dict[str, float]) -> np.ndarray:
        p = self.noise_proxy
        loss = p.get("base", 0.0)
        for name, per_unit in p.get("terms", {}).items():
            loss = loss + per_unit * values[name]
        ratio = self.freq / p.get("f0", self.freq[len(self.freq) // 2])
        return 10 * np.log10(1.0 + loss * ratio)

    def coarse_eval(self, x_c, x_a) -> ResponseCurve:
        return self._response(self._values(x_c, x_a, fine=False))

    def fine_eval(self, x_c) -> ResponseCurve:
        return self._response(self._values(x_c, self.hidden_aux(), fine=True))

    # -- structured-text form

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "description": self.description,
            "z_source": self.z_source,
            "z_load": self.z_load,
            "objective": self.spec.to_dict(),
            "freq_hz": [float(x) for x in self.freq],
            "variables": [
                {k: getattr(v, k) for k in ("name", "role", "lo", "hi", "value", "hidden")}
                for v in self.variables
            ],
            "elements": self.elements,
            "noise_proxy": self.noise_proxy,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CascadeModel":
        try:
            spec = ObjectiveSpec.from_dict(data["objective"])
            variables = [
                Variable(v["name"], v["role"], float(v["lo"]), float(v["hi"]), float(v["value"]),
                         None if v.get("hidden") is None else float(v["hidden"]))
                for v in data["variables"]
            ]
            freq = data.get("freq_hz")
            return cls(
                model_id=str(data["model_id"]),
                variables=variables,
                elements=list(data["elements"]),
                spec=spec,
                z_source=float(data.get("z_source", 50.0)),
                z_load=float(data.get("z_load", 50.0)),
                freq=None if freq is None else np.asarray(freq, dtype=float),
                noise_proxy=data.get("noise_proxy"),
                description=data.get("description", ""),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad model definition: {exc}") from exc


class QuadraticToy(ModelPair):
    """Coarse ``(x - a)^2``, fine ``(x - 1)^2``, reported as a flat channel ``f``.

    The cost is ``f <= 0`` on the single in-band sample, so it equals the
    response itself.  ``a`` is confined to [0, 2], which leaves the fine model
    reachable by exactly one auxiliary value.
    """

    model_id = "toy"

    def __init__(self, a_start: float = 0.0, hidden: float = 1.0):
        self.freq = np.array([0.5, 1.0, 1.5])
        self.spec = ObjectiveSpec((0.9, 1.1), (Constraint("f", "<=", 0.0, 1.0),))
        self._a_start = a_start
        self._hidden = hidden

    def design_vector(self) -> ParamVector:
        return ParamVector(("x",), (0.0,), (-2.0,), (2.0,))

    def aux_vector(self) -> ParamVector:
        return ParamVector(("a",), (self._a_start,), (0.0,), (2.0,))

    def hidden_aux(self) -> np.ndarray:
        return np.array([self._hidden])

    def coarse_eval(self, x_c, x_a) -> ResponseCurve:
        x = self._checked(self.design_vector(), x_c)[0]
        a = self._checked(self.aux_vector(), x_a)[0]
        return ResponseCurve(self.freq, {"f": np.full(3, (x - a) ** 2)})


# ---------------------------------------------------------------- built-ins

def lc_match() -> CascadeModel:
    """Shunt C / series L / shunt C pi network matching 50 ohm to 12.5 ohm at 30-38 GHz.

    The coarse auxiliaries are the series inductance of the first shunt
    capacitor and the capacitance across the series inductor.
    """
    band = (30e9, 38e9)
    variables = [
        Variable("C1", "design", 0.05e-12, 1.0e-12, 0.2e-12),
        Variable("L1", "design", 0.02e-9, 0.5e-9, 0.1e-9),
        Variable("C2", "design", 0.01e-12, 1.0e-12, 0.1e-12),
        Variable("Lesl", "auxiliary", 0.0, 40e-12, 0.0, hidden=25e-12),
        Variable("Cp", "auxiliary", 0.0, 30e-15, 0.0, hidden=18e-15),
    ]
    elements = [
        {"kind": "shunt", "L": "Lesl", "C": "C1"},
        {"kind": "series_tank", "L": "L1", "C": "Cp"},
        {"kind": "shunt", "C": "C2"},
    ]
    spec = ObjectiveSpec(band, (Constraint("s21_db", ">=", LC_GAIN_TARGET_DB, 1.0),))
    return CascadeModel("lc_match", variables, elements, spec, 50.0, 12.5,
                        description="three-element pi match, 50 to 12.5 ohm")


def two_stage() -> CascadeModel:
    """Eight design values across two L-sections joined by a quarter-wave-ish line."""
    band = (30e9, 38e9)
    d = "design"
    variables = [
        Variable("L1", d, 0.05e-9, 0.6e-9, 0.2e-9),
        Variable("C1", d, 0.05e-12, 0.8e-12, 0.2e-12),
        Variable("Z1", d, 20.0, 90.0, 50.0),
        Variable("T1", d, 30.0, 120.0, 90.0),
        Variable("L2", d, 0.05e-9, 0.6e-9, 0.2e-9),
        Variable("C2", d, 0.05e-12, 0.8e-12, 0.2e-12),
        Variable("C3", d, 0.05e-12, 0.8e-12, 0.2e-12),
        Variable("L3", d, 0.05e-9, 0.6e-9, 0.2e-9),
        Variable("Lp", "auxiliary", 0.0, 40e-12, 0.0, hidden=15e-12),
        Variable("Cq", "auxiliary", 0.0, 30e-15, 0.0, hidden=10e-15),
        Variable("Rs", "auxiliary", 0.0, 3.0, 0.0, hidden=1.2),
    ]
    elements = [
        {"kind": "series", "R": "Rs", "L": "L1"},
        {"kind": "shunt", "L": "Lp", "C": "C1"},
        {"kind": "tline", "z0": "Z1", "theta_deg": "T1", "f0": 34e9},
        {"kind": "series_tank", "L": "L2", "C": "Cq"},
        {"kind": "shunt", "C": "C2"},
        {"kind": "series", "C": "C3"},
        {"kind": "shunt", "L": "L3"},
    ]
    spec = ObjectiveSpec(band, (
        Constraint("s21_db", ">=", -1.0, 1.0),
        Constraint("nf_db", "<=", 1.5, 0.5),
    ))
    noise = {"base": 0.05, "terms": {"L1": 2e8, "L2": 2e8, "L3": 2e8, "Rs": 0.02}, "f0": 34e9}
    return CascadeModel("two_stage", variables, elements, spec, 50.0, 25.0, noise_proxy=noise,
                        description="two-section match with a noise proxy channel")


_REGISTRY = {"toy": QuadraticToy, "lc_match": lc_match, "two_stage": two_stage}


def register(model_id: str, factory) -> None:
    _REGISTRY[model_id] = factory


def get_model(model_id: str) -> ModelPair:
    try:
        return _REGISTRY[model_id]()
    except KeyError:
        raise NotFoundError(f"unknown model {model_id!r}; known: {', '.join(sorted(_REGISTRY))}") from None


def model_ids() -> list[str]:
    return sorted(_REGISTRY)


def load_model(path: str | Path) -> CascadeModel:
    """Read a model definition file and register it under its model_id."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    model = CascadeModel.from_dict(data)
    register(model.model_id, lambda: CascadeModel.from_dict(data))
    return model


def coarse_eval(x_c, x_a, model_id: str) -> ResponseCurve:
    return get_model(model_id).coarse_eval(x_c, x_a)


def fine_eval(x_c, model_id: str) -> ResponseCurve:
    return get_model(model_id).fine_eval(x_c)
