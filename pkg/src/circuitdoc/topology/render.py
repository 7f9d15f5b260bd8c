"""Draw a netlist as a clean raster schematic with exact ground-truth boxes.

Used to manufacture labeled test images for the image-to-netlist pipeline.
Components sit on a serpentine slot grid; each net is routed on a coarse
node lattice with a Lee (breadth-first) maze router, so wires are orthogonal
and never cross.  Every grounded pin gets its own ground glyph, so node 0 is
never routed.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..errors import RenderError
from ..vision import ComponentBox
from .netlist import NetlistLine, parse_netlist

log = logging.getLogger(__name__)

LEFT, RIGHT, UP, DOWN = (-1, 0), (1, 0), (0, -1), (0, 1)
INK = {"light": (250, 20), "dark": (20, 235)}  # (background, ink)


@dataclass(frozen=True)
class RenderStyle:
    background: str = "light"
    pitch: int = 8  # pixels between lattice nodes
    slot: int = 12  # lattice nodes per placement slot
    border: int = 4  # empty lattice nodes around the drawing
    stray_text: int = 0  # free-floating text snippets to add as clutter
    seed: int = 0
    attempts: int = 6  # routing orders tried per slot size
    grow_steps: int = 3  # times the slot is enlarged before giving up
    labels: bool = True


@dataclass
class RenderResult:
    image: np.ndarray  # H x W x 3 uint8
    boxes: list[ComponentBox]
    slot: int
    diagnostics: list[str] = field(default_factory=list)


@dataclass
class _Pin:
    comp: int
    node: tuple[int, int]  # lattice node on the box outline
    out: tuple[int, int]  # outward direction
    net: int

    def step(self, k: int) -> tuple[int, int]:
        return (self.node[0] + k * self.out[0], self.node[1] + k * self.out[1])


def _pin_sides(n_pins: int, forward: tuple[int, int]) -> list[tuple[int, int]]:
    back = (-forward[0], -forward[1])
    if n_pins == 1:
        return [back]
    if n_pins == 2:
        return [back, forward]
    if n_pins == 3:
        return [forward, back, DOWN]
    if n_pins == 4:
        return [forward, back, DOWN, UP]
    raise RenderError(f"cannot draw a component with {n_pins} pins")


def _place(lines: list[NetlistLine], slot: int, border: int):
    """Serpentine placement: even rows run left to right, odd rows back."""
    cols = max(1, int(np.ceil(np.sqrt(len(lines)))))
    rows = int(np.ceil(len(lines) / cols))
    off = (slot - 3) // 2
    origins, pins = [], []
    for k, ln in enumerate(lines):
        row, col = divmod(k, cols)
        forward = RIGHT
        if row % 2:
            col, forward = cols - 1 - col, LEFT
        gx0 = border + col * slot + off
        gy0 = border + row * slot + off
        origins.append((gx0, gy0))
        cx, cy = gx0 + 1, gy0 + 1
        for side, net in zip(_pin_sides(len(ln.nodes), forward), ln.nodes):
            pins.append(_Pin(k, (cx + side[0], cy + side[1]), side, net))
    size = (2 * border + cols * slot, 2 * border + rows * slot)
    return origins, pins, size


def _bfs(sources: set, target: tuple[int, int], free, size) -> list | None:
    width, height = size
    prev = {s: None for s in sources}
    queue = deque(sorted(sources))
    while queue:
        cur = queue.popleft()
        if cur == target:
            path = []
            while cur is not None:
                path.append(cur)
                cur = prev[cur]
            return path[::-1]
        for dx, dy in (RIGHT, DOWN, LEFT, UP):
            nxt = (cur[0] + dx, cur[1] + dy)
            if nxt in prev or not (0 <= nxt[0] < width and 0 <= nxt[1] < height):
                continue
            if not free(nxt):
                continue
            prev[nxt] = cur
            queue.append(nxt)
    return None


def _route(nets: dict[int, list], blocked: set, size, order: list[int]):
    """Route each net as a tree over lattice nodes; None on congestion."""
    owner: dict[tuple[int, int], int] = {}
    for net, terms in nets.items():
        for t in terms:
            owner[t] = net
    edges: dict[int, list] = {n: [] for n in nets}
    for net in order:
        terms = nets[net]
        tree = {terms[0]}
        remaining = list(terms[1:])

        def free(node, net=net):
            return node not in blocked and owner.get(node, net) == net

        while remaining:
            remaining.sort(key=lambda t: min(abs(t[0] - s[0]) + abs(t[1] - s[1]) for s in tree))
            target = remaining.pop(0)
            if target in tree:
                continue
            path = _bfs(tree, target, free, size)
            if path is None:
                return None
            for a, b in zip(path, path[1:]):
                edges[net].append((a, b))
            for node in path:
                owner[node] = net
                tree.add(node)
    return edges


def _layout_and_route(lines, style: RenderStyle, slot: int, rng: np.random.Generator):
    origins, pins, size = _place(lines, slot, style.border)
    blocked = set()
    for gx0, gy0 in origins:
        blocked.update((gx0 + i, gy0 + j) for i in range(3) for j in range(3))
    glyphs, dangling = [], []
    nets: dict[int, list] = {}
    fanout: dict[int, int] = {}
    for pin in pins:
        fanout[pin.net] = fanout.get(pin.net, 0) + 1
    for pin in pins:
        if pin.net == 0 or fanout[pin.net] == 1:
            # grounded pins end in a glyph; lone pins get a stub long enough
            # to survive the small-domain filter
            stub = [pin.step(1), pin.step(2), pin.step(3)]
            if any(s in blocked or not (0 <= s[0] < size[0] and 0 <= s[1] < size[1]) for s in stub):
                return None
            blocked.update(stub)
            (glyphs if pin.net == 0 else dangling).append(pin)
        else:
            nets.setdefault(pin.net, []).append(pin.step(1))
    terminals = [t for ts in nets.values() for t in ts]
    if len(set(terminals)) != len(terminals) or any(t in blocked for t in terminals):
        return None
    base = sorted(nets, key=lambda n: (len(nets[n]), n))
    for attempt in range(style.attempts):
        order = list(base)
        if attempt:
            rng.shuffle(order)
        edges = _route(nets, blocked, size, order)
        if edges is not None:
            return origins, pins, glyphs, dangling, edges, size
    return None


def _draw_segment(img, a, b, pitch, ink):
    (xa, ya), (xb, yb) = a, b
    x0, x1 = sorted((xa * pitch, xb * pitch))
    y0, y1 = sorted((ya * pitch, yb * pitch))
    img[y0: y1 + 2, x0: x1 + 2] = ink


def _node_rect(gx0, gy0, gx1, gy1, pitch):
    return (gx0 * pitch - 2, gy0 * pitch - 2, gx1 * pitch + 4, gy1 * pitch + 4)


def _draw_box(img, rect, bg, ink):
    x0, y0, x1, y1 = rect
    img[y0:y1, x0:x1] = ink
    img[y0 + 2: y1 - 2, x0 + 2: x1 - 2] = bg


def _draw_labels(img, items, ink):
    """Write each designator inside its box, clipped to the box interior."""
    from PIL import Image, ImageDraw

    for (x0, y0, x1, y1), text in items:
        canvas = Image.new("L", (x1 - x0, y1 - y0), 0)
        ImageDraw.Draw(canvas).text((3, 3), text, fill=255)
        glyph = np.asarray(canvas)[2:-2, 2:-2] > 127
        img[y0 + 2: y1 - 2, x0 + 2: x1 - 2][glyph] = ink


def _add_stray_text(img, count, bg, ink, rng, clearance=10):
    from PIL import Image, ImageDraw

    words = ["Vdd", "note", "rev B", "fig 3", "GAIN", "out", "12dB", "bias"]
    occupied = ndimage.binary_dilation(img != bg, iterations=clearance)
    height, width = img.shape
    placed = 0
    for _ in range(200 * max(count, 1)):
        if placed >= count:
            break
        word = words[int(rng.integers(len(words)))]
        tw, th = 6 * len(word) + 2, 12
        x = int(rng.integers(0, max(1, width - tw)))
        y = int(rng.integers(0, max(1, height - th)))
        if occupied[y: y + th, x: x + tw].any():
            continue
        pil = Image.fromarray(img)
        ImageDraw.Draw(pil).text((x, y), word, fill=int(ink))
        img = np.asarray(pil).copy()
        occupied[max(0, y - clearance): y + th + clearance, max(0, x - clearance): x + tw + clearance] = True
        placed += 1
    return img


def render_synthetic(netlist, style: RenderStyle = RenderStyle()) -> RenderResult:
    """Rasterize ``netlist`` (text or parsed lines); raises RenderError on congestion."""
    lines = parse_netlist(netlist) if isinstance(netlist, str) else list(netlist)
    if not lines:
        raise RenderError("empty netlist")
    if style.background not in INK:
        raise RenderError(f"unknown background style {style.background!r}")
    rng = np.random.default_rng(style.seed)
    slot = style.slot
    routed = None
    for _ in range(style.grow_steps + 1):
        routed = _layout_and_route(lines, style, slot, rng)
        if routed is not None:
            break
        log.debug("routing failed at slot %d; enlarging", slot)
        slot += 4
    if routed is None:
        raise RenderError(f"router congestion with {len(lines)} components up to slot {slot - 4}")
    origins, pins, glyphs, dangling, edges, (nw, nh) = routed

    bg, ink = INK[style.background]
    p = style.pitch
    img = np.full((nh * p, nw * p), bg, dtype=np.uint8)
    for segs in edges.values():
        for a, b in segs:
            _draw_segment(img, a, b, p, ink)
    for pin in pins:
        if pin.net != 0:
            _draw_segment(img, pin.node, pin.step(1), p, ink)
    for pin in dangling:
        _draw_segment(img, pin.node, pin.step(3), p, ink)
    for pin in glyphs:
        _draw_segment(img, pin.node, pin.step(3), p, ink)

    boxes, labels = [], []
    for k, ((gx0, gy0), ln) in enumerate(zip(origins, lines)):
        rect = _node_rect(gx0, gy0, gx0 + 2, gy0 + 2, p)
        _draw_box(img, rect, bg, ink)
        boxes.append(ComponentBox(f"b{k:03d}", ln.refdes[0], rect, 1.0, ln.refdes))
        labels.append((rect, ln.refdes))
    for k, pin in enumerate(glyphs):
        gx, gy = pin.step(3)
        rect = _node_rect(gx, gy, gx, gy, p)
        _draw_box(img, rect, bg, ink)
        boxes.append(ComponentBox(f"g{k:03d}", "GND", rect, 1.0))

    if style.labels:
        _draw_labels(img, labels, ink)
    if style.stray_text:
        img = _add_stray_text(img, style.stray_text, bg, ink, rng)
    rgb = np.repeat(img[:, :, None], 3, axis=2)
    return RenderResult(rgb, boxes, slot)
