"""Image-to-graph recovery plus the helpers used to score it on synthetic data."""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from ..vision import DEFAULT_MARGIN, ComponentBox, NetExtraction, extract_nets, to_grayscale
from .graph import GROUND, CircuitGraph, build_graph, detect_intersections
from .netlist import NetlistLine

TWO_PIN_CLASSES = ("R", "R", "C", "C", "L", "L", "D", "V", "I")
VALUES = {"R": [10, 50, 70, 330, 1056], "C": [2e-14, 7e-14, 1.5e-13, 5.79e-12],
          "L": [1e-10, 2.5e-10, 4.2e-10], "D": [1], "V": [0.4, 1.2, 5], "I": [1e-3, 5e-3],
          "Q": [1], "M": [1]}


def random_netlist(rng: np.random.Generator, n_components: int) -> list[NetlistLine]:
    """A ladder-style circuit: series parts advance a backbone node, shunts go to ground.

    Transistors take the current node as their control input and open a new
    node on their output, with the third terminal grounded.  The construction
    keeps every net local to a run of consecutive parts, which the slot-grid
    renderer can always draw without crossings given enough room.
    """
    lines, counters = [], {}
    current, next_node = 1, 2

    def name(cls):
        counters[cls] = counters.get(cls, 0) + 1
        return f"{cls}{counters[cls]}"

    for _ in range(n_components):
        roll = rng.random()
        if roll < 0.15:
            cls = "Q" if rng.random() < 0.5 else "M"
            nodes = (next_node, current, 0)
            current, next_node = next_node, next_node + 1
        else:
            cls = TWO_PIN_CLASSES[int(rng.integers(len(TWO_PIN_CLASSES)))]
            if cls in "VI" or rng.random() < 0.4:
                nodes = (current, 0)
            else:
                nodes = (current, next_node)
                current, next_node = next_node, next_node + 1
        value = float(VALUES[cls][int(rng.integers(len(VALUES[cls])))])
        lines.append(NetlistLine(name(cls), nodes, value))
    return lines


@dataclass
class Recovery:
    graph: CircuitGraph
    nets: NetExtraction
    diagnostics: list[str] = field(default_factory=list)


def recover_graph(
    image: np.ndarray,
    boxes: list[ComponentBox],
    min_domain_ratio: float = 0.10,
    margin: int = DEFAULT_MARGIN,
    ratio_base: str = "foreground",
) -> Recovery:
    """Full raster pipeline: grayscale, binarize, filter domains, intersect, build."""
    gray = to_grayscale(image)
    nets = extract_nets(gray, boxes, min_domain_ratio, margin, ratio_base)
    incidences = detect_intersections(nets.domains, boxes, margin)
    diags = list(nets.diagnostics)
    graph = build_graph(boxes, incidences, diags)
    return Recovery(graph, nets, diags)


def to_bipartite(graph: CircuitGraph) -> nx.Graph:
    """Component and net vertices; edge weight counts pins joining the pair."""
    g = nx.Graph()
    for net in graph.nets:
        g.add_node(("net", net), kind="net", ground=net == GROUND)
    for c in graph.components:
        g.add_node(("comp", c.refdes), kind=c.class_label, ground=False)
        for net in c.pins:
            key = (("comp", c.refdes), ("net", net))
            if g.has_edge(*key):
                g.edges[key]["pins"] += 1
            else:
                g.add_edge(*key, pins=1)
    return g


def graphs_isomorphic(a: CircuitGraph, b: CircuitGraph) -> bool:
    """Class-preserving bijection of components and nets that keeps every pin.

    Ground maps to ground.  Pin order is ignored, so transistor terminal
    permutations count as the same circuit.
    """
    ga, gb = to_bipartite(a), to_bipartite(b)
    if ga.number_of_nodes() != gb.number_of_nodes() or ga.number_of_edges() != gb.number_of_edges():
        return False
    return nx.is_isomorphic(
        ga,
        gb,
        node_match=lambda x, y: x["kind"] == y["kind"] and x["ground"] == y["ground"],
        edge_match=lambda x, y: x["pins"] == y["pins"],
    )
