"""Parameter records and the text grammar used to pull them out of blocks.

Recognized shapes, one or more per line::

    Capacitors (Unit: pF)          <- header, sets the shared unit
    C1=0.02, C2=0.07               <- NAME=VALUE list using the header unit
    VG1=-0.35 V, VG2=VG3=0.4 V     <- inline units, chained names
    TL1=60 Ω ∠ 38°                 <- impedance with electrical length
    Power Consumption: 76 mW       <- "Label: value unit"
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass

from .units import CANONICAL_UNITS, parse_unit, to_si

DESIGNATOR = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")

_HEADER = re.compile(r"\(\s*unit\s*:\s*([^)]*)\)", re.IGNORECASE)
_VALUE = re.compile(
    r"""^(?P<num>[+\-−]?(?:\d+\.?\d*|\.\d+)(?:[eE][+\-]?\d+)?)
        \s*(?P<unit>[^\s∠(]*)
        \s*(?:∠\s*(?P<ang>[+\-−]?\d+(?:\.\d+)?(?:[eE][+\-]?\d+)?)\s*°?)?
        \s*(?:\([^)]*\))?\s*$""",
    re.VERBOSE,
)
_NUMERIC_START = re.compile(r"^[+\-−±]?\.?\d")
_DECORATION = re.compile(r"\*\*|__|[Ⓞ•▪◦]")


@dataclass(frozen=True)
class ParamRecord:
    name: str
    value: float
    unit: str
    raw_text: str = ""
    source_block: str = ""
    angle_deg: float | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("parameter name must be non-empty")
        if not math.isfinite(self.value):
            raise ValueError(f"{self.name}: value must be finite")
        if self.unit not in CANONICAL_UNITS:
            raise ValueError(f"{self.name}: unit {self.unit!r} is not canonical")

    def key(self) -> tuple:
        return (self.name, self.value, self.unit, self.angle_deg)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ParamRecord":
        return cls(
            name=data["name"],
            value=float(data["value"]),
            unit=data["unit"],
            raw_text=data.get("raw_text", ""),
            source_block=data.get("source_block", ""),
            angle_deg=data.get("angle_deg"),
        )


def _clean(line: str) -> str:
    line = _DECORATION.sub("", line).strip()
    return line.lstrip("-*>·").strip()


def _parse_value(text: str, header_unit):
    """Returns (value, unit, angle) or an error string."""
    m = _VALUE.match(text.strip())
    if not m:
        return f"cannot parse value {text.strip()!r}"
    unit_text = m.group("unit")
    if unit_text:
        parsed = parse_unit(unit_text)
        if parsed is None:
            return f"unknown unit {unit_text!r}"
    elif header_unit is not None:
        parsed = header_unit
    else:
        return "no unit given and no unit header in scope"
    scale, unit = parsed
    value = to_si(m.group("num"), scale)
    ang = m.group("ang")
    angle = float(ang.replace("−", "-")) if ang is not None else None
    return value, unit, angle


def parse_param_text(
    text: str, source_block: str = "", diagnostics: list[str] | None = None
) -> list[ParamRecord]:
    """Extract every parameter assignment in ``text``.

    Tokens that look like assignments but cannot be parsed are skipped; a
    message for each is appended to ``diagnostics`` when a list is given.
    """
    diags: list[str] = [] if diagnostics is None else diagnostics
    records: list[ParamRecord] = []
    header_unit = None

    for raw_line in text.splitlines():
        line = _clean(raw_line)
        if not line:
            continue
        header_here = False
        m = _HEADER.search(line)
        if m:
            header_unit = parse_unit(m.group(1).strip())
            header_here = True
            line = (line[: m.start()] + line[m.end():]).strip()

        if "=" in line:
            colon, eq = line.find(":"), line.find("=")
            if 0 <= colon < eq:
                line = line[colon + 1:]
            for item in re.split(r"[,;]", line):
                item = item.strip()
                if not item:
                    continue
                if "=" not in item:
                    diags.append(f"{item!r}: no value assigned")
                    continue
                parts = [p.strip() for p in item.split("=")]
                names, value_text = parts[:-1], parts[-1]
                bad = [n for n in names if not DESIGNATOR.match(n)]
                if bad:
                    diags.append(f"{item!r}: invalid designator {bad[0]!r}")
                    continue
                parsed = _parse_value(value_text, header_unit)
                if isinstance(parsed, str):
                    diags.append(f"{item!r}: {parsed}")
                    continue
                value, unit, angle = parsed
                for name in names:
                    records.append(ParamRecord(name, value, unit, item, source_block, angle))
        elif ":" in line:
            label, _, value_text = line.partition(":")
            label, value_text = label.strip(), value_text.strip()
            if label and _NUMERIC_START.match(value_text):
                parsed = _parse_value(value_text, header_unit)
                if isinstance(parsed, str):
                    diags.append(f"{line!r}: {parsed}")
                else:
                    value, unit, angle = parsed
                    records.append(ParamRecord(label, value, unit, line, source_block, angle))
            elif not header_here:
                header_unit = None
        elif not header_here:
            header_unit = None
    return records


def format_value(value: float) -> str:
    """Shortest decimal that round-trips to ``value``; integral values lose the '.0'."""
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def format_params(records: list[ParamRecord]) -> str:
    """Serialize records in a form :func:`parse_param_text` reads back unchanged."""
    lines = []
    for r in records:
        body = f"{format_value(r.value)} {r.unit}"
        if r.angle_deg is not None:
            body += f" ∠ {format_value(r.angle_deg)}°"
        sep = "=" if DESIGNATOR.match(r.name) else ": "
        lines.append(f"{r.name}{sep}{body}")
    return "\n".join(lines) + ("\n" if lines else "")


def records_to_json(records: list[ParamRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], ensure_ascii=False, indent=2)


def records_from_json(text: str) -> list[ParamRecord]:
    return [ParamRecord.from_dict(d) for d in json.loads(text)]
