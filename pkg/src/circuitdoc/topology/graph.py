"""Intersection detection and circuit-graph assembly."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..errors import AmbiguityError, ConflictError, InputError
from ..vision import EIGHT_CONNECTED, ComponentBox, NetDomain

log = logging.getLogger(__name__)

GROUND = "0"
TWO_TERMINAL = frozenset("RCLDVI")
REFDES_PREFIX = {c: c for c in "RCLDQMVIX"} | {"PORT": "P"}


@dataclass(frozen=True)
class Incidence:
    """One contact region between a net domain and a (margin-expanded) box."""

    box_id: str
    domain_id: int
    contact_pixels: int
    contact_centroid: tuple[float, float]  # (x, y)
    region: int = 0

    def __post_init__(self):
        if self.contact_pixels < 1:
            raise ValueError("an incidence needs at least one contact pixel")


def _contact_regions(domain: NetDomain, rect: tuple[int, int, int, int]) -> list[np.ndarray]:
    x0, y0, x1, y1 = rect
    inside = (domain.xs >= x0) & (domain.xs < x1) & (domain.ys >= y0) & (domain.ys < y1)
    if not inside.any():
        return []
    xs, ys = domain.xs[inside], domain.ys[inside]
    ox, oy = int(xs.min()), int(ys.min())
    patch = np.zeros((int(ys.max()) - oy + 1, int(xs.max()) - ox + 1), dtype=bool)
    patch[ys - oy, xs - ox] = True
    labels, count = ndimage.label(patch, structure=EIGHT_CONNECTED)
    regions = []
    for lab in range(1, count + 1):
        ry, rx = np.nonzero(labels == lab)
        regions.append(np.stack([rx + ox, ry + oy], axis=1))
    # np.nonzero scans row-major, so the first row of each region is its first pixel
    regions.sort(key=lambda r: (int(r[0, 1]), int(r[0, 0])))
    return regions


def detect_intersections(
    domains: list[NetDomain], boxes: list[ComponentBox], margin: int = 2
) -> list[Incidence]:
    """Incidences ordered by (box_id, domain_id, region)."""
    if margin < 0:
        raise InputError("margin must be >= 0")
    found = []
    for box in sorted(boxes, key=lambda b: b.box_id):
        rect = box.expanded(margin)
        for dom in sorted(domains, key=lambda d: d.domain_id):
            for i, pts in enumerate(_contact_regions(dom, rect)):
                cx, cy = pts.mean(axis=0)
                found.append(Incidence(box.box_id, dom.domain_id, len(pts), (float(cx), float(cy)), i))
    return found


@dataclass(frozen=True)
class GraphComponent:
    refdes: str
    class_label: str
    pins: tuple[str, ...]
    box_id: str | None = None


@dataclass
class CircuitGraph:
    components: list[GraphComponent]
    nets: list[str]
    has_ground: bool = False
    diagnostics: list[str] = field(default_factory=list)

    @property
    def pins(self) -> dict[str, list[str]]:
        return {c.refdes: list(c.pins) for c in self.components}

    def component(self, refdes: str) -> GraphComponent:
        for c in self.components:
            if c.refdes == refdes:
                return c
        raise KeyError(refdes)


def _clock_angle(point: tuple[float, float], center: tuple[float, float]) -> float:
    """Angle from 12 o'clock, clockwise on screen (y grows downward)."""
    dx, dy = point[0] - center[0], point[1] - center[1]
    return math.atan2(dx, -dy) % (2 * math.pi)


def _reading_order(box: ComponentBox):
    x0, y0, _, _ = box.bbox
    return (y0, x0, box.box_id)


def assign_refdes(boxes: list[ComponentBox]) -> dict[str, str]:
    """box_id -> refdes; supplied designators are kept, the rest numbered per class."""
    taken = {}
    for b in boxes:
        if b.refdes:
            if b.refdes in taken:
                raise ConflictError(f"refdes {b.refdes} supplied for boxes {taken[b.refdes]} and {b.box_id}")
            taken[b.refdes] = b.box_id
    names = {b.box_id: b.refdes for b in boxes if b.refdes}
    counters: dict[str, int] = defaultdict(int)
    for b in sorted(boxes, key=_reading_order):
        if b.box_id in names or b.class_label == "GND":
            continue
        prefix = REFDES_PREFIX[b.class_label]
        while True:
            counters[prefix] += 1
            candidate = f"{prefix}{counters[prefix]}"
            if candidate not in taken:
                break
        taken[candidate] = b.box_id
        names[b.box_id] = candidate
    return names


def build_graph(
    boxes: list[ComponentBox],
    incidences: list[Incidence],
    diagnostics: list[str] | None = None,
) -> CircuitGraph:
    """Assemble components and nets; GND boxes pull their nets into node 0.

    The result depends only on the incidence set, not its order.
    """
    diags = diagnostics if diagnostics is not None else []
    by_id = {b.box_id: b for b in boxes}
    if len(by_id) != len(boxes):
        raise InputError("duplicate box ids")
    incidences = sorted(incidences, key=lambda i: (i.box_id, i.domain_id, i.region, i.contact_centroid))
    per_box: dict[str, list[Incidence]] = defaultdict(list)
    for inc in incidences:
        if inc.box_id not in by_id:
            raise InputError(f"incidence references unknown box {inc.box_id}")
        per_box[inc.box_id].append(inc)

    grounded = {
        inc.domain_id for b in boxes if b.class_label == "GND" for inc in per_box[b.box_id]
    }
    has_ground = any(b.class_label == "GND" for b in boxes)

    def net_of(domain_id: int) -> str:
        return GROUND if domain_id in grounded else f"n{domain_id}"

    names = assign_refdes(boxes)
    components = []
    for box in sorted(boxes, key=_reading_order):
        if box.class_label == "GND":
            if not per_box[box.box_id]:
                diags.append(f"ground symbol {box.box_id} touches no net")
            continue
        refdes = names[box.box_id]
        x0, y0, x1, y1 = box.bbox
        center = ((x0 + x1 - 1) / 2, (y0 + y1 - 1) / 2)
        incs = sorted(
            per_box[box.box_id],
            key=lambda i: (_clock_angle(i.contact_centroid, center), i.domain_id, i.region),
        )
        pins = tuple(net_of(i.domain_id) for i in incs)
        if not pins:
            msg = f"{refdes} ({box.box_id}) touches no net; emitted as floating"
            log.warning(msg)
            diags.append(msg)
        elif box.class_label in TWO_TERMINAL and len(pins) >= 3:
            raise AmbiguityError(refdes, list(pins))
        components.append(GraphComponent(refdes, box.class_label, pins, box.box_id))

    used = {p for c in components for p in c.pins}
    nets = sorted(used, key=_net_sort_key)
    return CircuitGraph(components, nets, has_ground, diags)


def _net_sort_key(net: str):
    if net == GROUND:
        return (0, 0, "")
    if net[1:].isdigit():
        return (1, int(net[1:]), net)
    return (2, 0, net)
