"""Schematic raster preprocessing: grayscale, thresholding, net domains.

Images are numpy arrays indexed ``[row, col]``.  Rectangles are
``(x0, y0, x1, y1)`` in pixels with a top-left origin and exclusive upper
edges, so a box covers columns ``x0 .. x1-1``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import InputError

log = logging.getLogger(__name__)

COMPONENT_CLASSES = ("R", "C", "L", "D", "Q", "M", "V", "I", "GND", "PORT", "X")
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)
DEFAULT_MIN_DOMAIN_RATIO = 0.10
DEFAULT_MARGIN = 2


# ---------------------------------------------------------------- image io

def load_image(path: str | Path) -> np.ndarray:
    """Read PNG/PGM/PPM (anything Pillow reads) as uint8 RGB or grayscale."""
    from PIL import Image

    with Image.open(path) as im:
        if im.mode in ("L", "1", "I;16", "I"):
            return np.asarray(im.convert("L"), dtype=np.uint8)
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_image(path: str | Path, image: np.ndarray) -> None:
    from PIL import Image

    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(path)


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Luma ``round(0.299 R + 0.587 G + 0.114 B)`` with halves rounded up."""
    image = np.asarray(image)
    if image.ndim < 2 or image.shape[0] == 0 or image.shape[1] == 0:
        raise InputError(f"image has zero size: shape {image.shape}")
    if image.ndim == 2:
        return image.astype(np.uint8, copy=True)
    if image.ndim != 3 or image.shape[2] not in (3, 4):
        raise InputError(f"expected an RGB image, got shape {image.shape}")
    rgb = image[..., :3].astype(np.int64)
    luma = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return luma.astype(np.uint8)


def histogram(gray: np.ndarray) -> np.ndarray:
    return np.bincount(np.asarray(gray, dtype=np.uint8).ravel(), minlength=256).astype(np.int64)


# -------------------------------------------------------------- thresholds

def _check_hist(hist) -> list[int]:
    counts = [int(c) for c in np.asarray(hist).ravel()]
    if len(counts) != 256:
        raise InputError("histogram must have 256 bins")
    if any(c < 0 for c in counts) or sum(counts) <= 0:
        raise InputError("histogram needs non-negative counts with positive total")
    return counts


def otsu_threshold(hist) -> int:
    """Split ``t`` maximizing between-class variance of ``{<= t}`` vs ``{> t}``.

    Comparisons use exact integers; ties go to the smallest ``t``.  A histogram
    with a single occupied bin returns that bin.
    """
    h = _check_hist(hist)
    nonzero = [i for i, c in enumerate(h) if c]
    if len(nonzero) == 1:
        return nonzero[0]
    n_total = sum(h)
    s_total = sum(i * c for i, c in enumerate(h))
    # sigma_b^2 * N^2 = (s0*n1 - s1*n0)^2 / (n0*n1); compare as fractions
    best_t, best_num, best_den = 0, -1, 1
    n0 = s0 = 0
    for t in range(255):
        n0 += h[t]
        s0 += t * h[t]
        n1 = n_total - n0
        if n0 == 0 or n1 == 0:
            num, den = 0, 1
        else:
            num, den = (s0 * n1 - (s_total - s0) * n0) ** 2, n0 * n1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t


def triangle_threshold(hist) -> int:
    """Bin farthest from the chord joining the peak to the far end of the longer tail.

    The peak is the first maximal bin.  When both tails are equally long the
    upper one is used.  Ties in distance go to the bin nearest the peak.
    """
    h = np.asarray(_check_hist(hist), dtype=np.int64)
    occupied = np.flatnonzero(h)
    lo, hi = int(occupied[0]), int(occupied[-1])
    if lo == hi:
        return lo
    peak = int(np.argmax(h))
    end = hi if (hi - peak) >= (peak - lo) else lo
    step = 1 if end >= peak else -1
    bins = np.arange(peak, end + step, step)
    # perpendicular distance up to the constant chord-length factor
    num = np.abs((end - peak) * (h[peak] - h[bins]) - (peak - bins) * (h[end] - h[peak]))
    return int(bins[int(np.argmax(num))])


def binarize(gray: np.ndarray, method: str) -> np.ndarray:
    """Foreground mask; ``otsu`` takes dark ink (<= t), ``triangle`` bright ink (> t)."""
    h = histogram(gray)
    if np.count_nonzero(h) <= 1:
        return np.zeros(gray.shape, dtype=bool)
    if method == "otsu":
        return gray <= otsu_threshold(h)
    if method == "triangle":
        return gray > triangle_threshold(h)
    raise InputError(f"unknown binarization method {method!r}")


def binarize_auto(gray: np.ndarray) -> tuple[np.ndarray, str]:
    """Pick the method from background polarity: mean >= 128 means a light page."""
    gray = np.asarray(gray, dtype=np.uint8)
    method = "otsu" if gray.mean() >= 128 else "triangle"
    return binarize(gray, method), method


# ------------------------------------------------------------ net domains

@dataclass(eq=False)
class NetDomain:
    domain_id: int
    ys: np.ndarray
    xs: np.ndarray

    @property
    def pixel_count(self) -> int:
        return int(self.ys.size)

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        return (int(self.xs.min()), int(self.ys.min()), int(self.xs.max()) + 1, int(self.ys.max()) + 1)

    def pixel_set(self) -> set[tuple[int, int]]:
        return set(zip(self.ys.tolist(), self.xs.tolist()))


def connected_components(mask: np.ndarray) -> list[NetDomain]:
    """8-connected foreground components ordered by their first pixel in raster order."""
    mask = np.asarray(mask, dtype=bool)
    labels, count = ndimage.label(mask, structure=EIGHT_CONNECTED)
    if count == 0:
        return []
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    sizes = np.bincount(flat, minlength=count + 1)
    starts = np.concatenate([[0], np.cumsum(sizes)])
    groups = [order[starts[lab]: starts[lab + 1]] for lab in range(1, count + 1)]
    groups.sort(key=lambda g: int(g[0]))
    width = mask.shape[1]
    return [
        NetDomain(domain_id=i, ys=g // width, xs=g % width)
        for i, g in enumerate(groups)
    ]


def domain_size_base(mask: np.ndarray, base: str = "foreground") -> int:
    """Pixel count the small-domain ratio is measured against."""
    if base == "foreground":
        return int(np.count_nonzero(mask))
    if base == "image":
        return int(np.asarray(mask).size)
    raise InputError(f"ratio base must be 'foreground' or 'image', not {base!r}")


def filter_small_domains(domains: list[NetDomain], foreground_total: int, ratio: float) -> list[NetDomain]:
    if not 0.0 <= ratio <= 1.0:
        raise InputError("ratio must lie in [0, 1]")
    floor = ratio * foreground_total
    return [d for d in domains if d.pixel_count >= floor]


# ------------------------------------------------------------- components

@dataclass(frozen=True)
class ComponentBox:
    box_id: str
    class_label: str
    bbox: tuple[int, int, int, int]
    score: float = 1.0
    refdes: str | None = None

    def __post_init__(self):
        if self.class_label not in COMPONENT_CLASSES:
            raise InputError(f"box {self.box_id}: unknown class {self.class_label!r}")
        if not 0.0 <= self.score <= 1.0:
            raise InputError(f"box {self.box_id}: score must lie in [0, 1]")
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise InputError(f"box {self.box_id}: degenerate bbox {self.bbox}")

    def expanded(self, margin: int) -> tuple[int, int, int, int]:
        x0, y0, x1, y1 = self.bbox
        return (x0 - margin, y0 - margin, x1 + margin, y1 + margin)

    def to_dict(self) -> dict:
        data = {"id": self.box_id, "class": self.class_label, "bbox": list(self.bbox), "score": self.score}
        if self.refdes is not None:
            data["refdes"] = self.refdes
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ComponentBox":
        try:
            return cls(
                box_id=str(data["id"]),
                class_label=str(data["class"]),
                bbox=tuple(int(round(v)) for v in data["bbox"]),
                score=float(data.get("score", 1.0)),
                refdes=data.get("refdes"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed component box {data!r}: {exc}") from exc


def load_boxes(text: str) -> list[ComponentBox]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"boxes file: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("boxes", [])
    if not isinstance(data, list):
        raise InputError("boxes file must hold a list of boxes")
    boxes = [ComponentBox.from_dict(d) for d in data]
    ids = [b.box_id for b in boxes]
    if len(set(ids)) != len(ids):
        raise InputError("duplicate box ids in boxes file")
    return boxes


def dump_boxes(boxes: list[ComponentBox]) -> str:
    return json.dumps([b.to_dict() for b in boxes], indent=2)


def check_boxes_in_image(boxes: list[ComponentBox], shape: tuple[int, ...]) -> None:
    height, width = shape[:2]
    for b in boxes:
        x0, y0, x1, y1 = b.bbox
        if x0 < 0 or y0 < 0 or x1 > width or y1 > height:
            raise InputError(f"box {b.box_id} {b.bbox} lies outside the {width}x{height} image")


def mask_components(mask: np.ndarray, boxes: list[ComponentBox]) -> np.ndarray:
    """Clear component interiors so symbol ink does not join the nets on either side."""
    out = np.array(mask, dtype=bool, copy=True)
    for b in boxes:
        x0, y0, x1, y1 = b.bbox
        out[max(y0, 0): max(y1, 0), max(x0, 0): max(x1, 0)] = False
    return out


def _touches(domain: NetDomain, rect: tuple[int, int, int, int]) -> bool:
    x0, y0, x1, y1 = rect
    return bool(np.any((domain.xs >= x0) & (domain.xs < x1) & (domain.ys >= y0) & (domain.ys < y1)))


def filter_by_component_overlap(
    domains: list[NetDomain],
    boxes: list[ComponentBox],
    margin: int = DEFAULT_MARGIN,
    diagnostics: list[str] | None = None,
) -> list[NetDomain]:
    """Keep domains with at least one pixel inside some margin-expanded box."""
    if margin < 0:
        raise InputError("margin must be >= 0")
    if not boxes:
        msg = "no component boxes given; every net domain discarded"
        log.warning(msg)
        if diagnostics is not None:
            diagnostics.append(msg)
        return []
    rects = [b.expanded(margin) for b in boxes]
    return [d for d in domains if any(_touches(d, r) for r in rects)]


@dataclass
class NetExtraction:
    mask: np.ndarray
    method: str
    domains: list[NetDomain]
    candidates: int
    diagnostics: list[str] = field(default_factory=list)


def extract_nets(
    gray: np.ndarray,
    boxes: list[ComponentBox],
    min_domain_ratio: float = DEFAULT_MIN_DOMAIN_RATIO,
    margin: int = DEFAULT_MARGIN,
    ratio_base: str = "foreground",
) -> NetExtraction:
    """Binarize, blank out components, label, then apply both domain filters."""
    mask, method = binarize_auto(gray)
    wires = mask_components(mask, boxes)
    domains = connected_components(wires)
    diagnostics: list[str] = []
    kept = filter_small_domains(domains, domain_size_base(wires, ratio_base), min_domain_ratio)
    kept = filter_by_component_overlap(kept, boxes, margin, diagnostics)
    return NetExtraction(wires, method, kept, len(domains), diagnostics)
