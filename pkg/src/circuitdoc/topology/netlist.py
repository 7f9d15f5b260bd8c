"""Netlist text: emission from a circuit graph and parsing back.

Grammar, one component per line::

    <refdes> <node>+ <value>

``refdes`` starts with one of R C L D Q M V I X, nodes are non-negative
integers with 0 as ground, and ``value`` is a decimal or ``?``.  Lines
starting with ``*`` are comments.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from ..errors import ConflictError, NetlistError
from ..extract.params import ParamRecord, format_value
from .graph import GROUND, CircuitGraph, GraphComponent

log = logging.getLogger(__name__)

HEADER = "* circuitdoc netlist"
_REFDES = re.compile(r"^[RCLDQMVIX][A-Za-z0-9_]*$")
_NODE = re.compile(r"^\d+$")
_DECIMAL = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


@dataclass(frozen=True)
class NetlistLine:
    refdes: str
    nodes: tuple[int, ...]
    value: float | None

    def render(self) -> str:
        value = "?" if self.value is None else format_value(self.value)
        return " ".join([self.refdes, *map(str, self.nodes), value])


@dataclass
class Netlist:
    lines: list[str]
    diagnostics: list[str] = field(default_factory=list)

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _value_table(params) -> dict[str, float]:
    if isinstance(params, dict):
        return {k: v for k, v in params.items() if v is not None}
    values: dict[str, float] = {}
    for p in params:
        if p.name in values and values[p.name] != p.value:
            raise ConflictError(f"{p.name} has conflicting values {values[p.name]!r} and {p.value!r}")
        values[p.name] = p.value
    return values


def node_numbers(components: list[GraphComponent]) -> dict[str, int]:
    """Ground is 0; every other net gets 1..N in order of first appearance."""
    numbers = {GROUND: 0}
    for comp in components:
        for net in comp.pins:
            if net not in numbers:
                numbers[net] = len(numbers)
    return numbers


def emit_netlist(
    graph: CircuitGraph,
    params: list[ParamRecord] | dict[str, float] = (),
    source: str | None = None,
) -> Netlist:
    """One line per component; values are joined from ``params`` by refdes."""
    values = _value_table(params if isinstance(params, dict) else list(params))
    numbers = node_numbers(graph.components)
    lines = [HEADER]
    if source:
        lines.append(f"* source: {source}")
    diags: list[str] = []
    for comp in graph.components:
        nodes = [numbers[n] for n in comp.pins]
        if comp.class_label == "PORT":
            lines.append(f"*PORT {comp.refdes} {' '.join(map(str, nodes))}".rstrip())
            continue
        if not nodes:
            lines.append(f"* floating {comp.refdes}")
            continue
        value = values.get(comp.refdes)
        if value is None:
            diags.append(f"{comp.refdes}: no parameter value, written as '?'")
        lines.append(NetlistLine(comp.refdes, tuple(nodes), value).render())
    for d in diags:
        log.debug(d)
    return Netlist(lines, diags)


def parse_netlist(text: str) -> list[NetlistLine]:
    out = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("*"):
            continue
        tokens = line.split()
        if len(tokens) < 3:
            raise NetlistError(f"line {lineno}: expected '<refdes> <node>+ <value>', got {line!r}")
        refdes, *nodes, value = tokens
        if not _REFDES.match(refdes):
            raise NetlistError(f"line {lineno}: bad reference designator {refdes!r}")
        if refdes in seen:
            raise NetlistError(f"line {lineno}: duplicate reference designator {refdes}")
        seen.add(refdes)
        bad = [n for n in nodes if not _NODE.match(n)]
        if bad:
            raise NetlistError(f"line {lineno}: node tokens must be non-negative integers, got {bad}")
        if value != "?" and not _DECIMAL.match(value):
            raise NetlistError(f"line {lineno}: bad value token {value!r}")
        out.append(NetlistLine(refdes, tuple(int(n) for n in nodes), None if value == "?" else float(value)))
    return out


def graph_from_netlist(lines: list[NetlistLine]) -> CircuitGraph:
    """Circuit graph of a parsed netlist; class is the designator's first letter."""
    comps = []
    for ln in lines:
        pins = tuple(GROUND if n == 0 else f"n{n}" for n in ln.nodes)
        comps.append(GraphComponent(ln.refdes, ln.refdes[0], pins))
    nets = sorted({p for c in comps for p in c.pins}, key=lambda n: (n != GROUND, len(n), n))
    return CircuitGraph(comps, nets, has_ground=GROUND in nets)


def params_from_netlist(lines: list[NetlistLine]) -> list[ParamRecord]:
    """Values as records so a parsed netlist can be re-emitted.

    Only classes with an obvious SI unit are covered; D, Q, M and X values are
    model names in practice and are skipped.
    """
    units = {"R": "Ω", "C": "F", "L": "H", "V": "V", "I": "A"}
    return [
        ParamRecord(ln.refdes, ln.value, units[ln.refdes[0]])
        for ln in lines
        if ln.value is not None and ln.refdes[0] in units
    ]
