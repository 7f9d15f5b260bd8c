from .graph import (
    GROUND,
    CircuitGraph,
    GraphComponent,
    Incidence,
    assign_refdes,
    build_graph,
    detect_intersections,
)
from .netlist import (
    Netlist,
    NetlistLine,
    emit_netlist,
    graph_from_netlist,
    node_numbers,
    params_from_netlist,
    parse_netlist,
)
from .render import RenderResult, RenderStyle, render_synthetic
from .roundtrip import Recovery, graphs_isomorphic, random_netlist, recover_graph, to_bipartite

__all__ = [
    "GROUND",
    "CircuitGraph",
    "GraphComponent",
    "Incidence",
    "Netlist",
    "NetlistLine",
    "Recovery",
    "RenderResult",
    "RenderStyle",
    "assign_refdes",
    "build_graph",
    "detect_intersections",
    "emit_netlist",
    "graph_from_netlist",
    "graphs_isomorphic",
    "node_numbers",
    "params_from_netlist",
    "parse_netlist",
    "random_netlist",
    "recover_graph",
    "render_synthetic",
    "to_bipartite",
]
