"""Typed access to document-layout analysis output and priority ranking.

The layout file is JSON::

    {"doc_id": "lna-paper",
     "blocks": [{"id": "b1", "page": 1, "bbox": [x0, y0, x1, y1],
                 "category": "Text", "section_label": "Abstract", "text": "..."}]}

Bounding boxes use a top-left origin with y growing downward.
"""

from __future__ import annotations

import enum
import fnmatch
import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, DuplicateIdError, LayoutParseError


class BlockCategory(str, enum.Enum):
    TEXT = "Text"
    TITLE = "Title"
    LIST = "List"
    TABLE = "Table"
    FUNCTIONAL_BLOCK_DIAGRAM = "FunctionalBlockDiagram"
    FLOWCHART = "Flowchart"
    CHARACTERISTIC_CURVE = "CharacteristicCurve"
    TIMING_DIAGRAM = "TimingDiagram"
    CIRCUIT_DIAGRAM = "CircuitDiagram"
    PIN_DIAGRAM = "PinDiagram"
    ENGINEERING_DRAWING = "EngineeringDrawing"
    SAMPLING_DIAGRAM = "SamplingDiagram"
    SCHEMATIC_3D = "Schematic3D"
    PIN_NAME_DIAGRAM = "PinNameDiagram"
    MARKING_DIAGRAM = "MarkingDiagram"
    APPEARANCE_DIAGRAM = "AppearanceDiagram"
    FUNCTIONAL_REGISTER_DIAGRAM = "FunctionalRegisterDiagram"
    LAYOUT_DIAGRAM = "LayoutDiagram"
    DATA_STRUCTURE_DIAGRAM = "DataStructureDiagram"
    OTHER_PARTS_DIAGRAM = "OtherPartsDiagram"
    UNKNOWN = "Unknown"

    @classmethod
    def parse(cls, label: str) -> "BlockCategory":
        """Map a free-form category string onto the taxonomy; unlisted -> UNKNOWN."""
        return _ALIASES.get(_category_key(label), cls.UNKNOWN)


def _category_key(label: str) -> str:
    text = re.sub(r"[^\w\s]", " ", str(label).lower())
    text = " ".join(text.split())
    return text.replace(" ", "").replace("_", "")


_EXTRA_ALIASES = {
    BlockCategory.FUNCTIONAL_BLOCK_DIAGRAM: ["block diagram", "functional block"],
    BlockCategory.FLOWCHART: ["flow chart", "flow diagram"],
    BlockCategory.CHARACTERISTIC_CURVE: [
        "characteristic curve diagram", "characteristic curves", "performance curve", "curve",
    ],
    BlockCategory.CIRCUIT_DIAGRAM: ["circuit", "schematic diagram", "circuit schematic"],
    BlockCategory.SCHEMATIC_3D: ["3d schematic", "3d view", "schematic 3d"],
    BlockCategory.TABLE: ["tables"],
    BlockCategory.TITLE: ["heading", "section header"],
    BlockCategory.TEXT: ["paragraph", "plain text"],
    BlockCategory.OTHER_PARTS_DIAGRAM: ["other parts", "other"],
}


def _build_aliases() -> dict[str, BlockCategory]:
    aliases: dict[str, BlockCategory] = {}
    for cat in BlockCategory:
        if cat is BlockCategory.UNKNOWN:
            continue
        aliases[_category_key(cat.value)] = cat
        aliases[_category_key(cat.name)] = cat
    for cat, names in _EXTRA_ALIASES.items():
        for name in names:
            aliases[_category_key(name)] = cat
    return aliases


_ALIASES = _build_aliases()


@dataclass(frozen=True)
class LayoutBlock:
    block_id: str
    doc_id: str
    page: int
    bbox: tuple[float, float, float, float]
    category: BlockCategory
    text: str = ""
    section_label: str = ""

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"block {self.block_id}: degenerate bbox {self.bbox}")
        if self.page < 1:
            raise ValueError(f"block {self.block_id}: page must be >= 1")


def _field(entry: dict, name: str, index: int, line: int | None):
    if name not in entry:
        raise LayoutParseError(f"block {index} is missing a value", line=line, field=name)
    return entry[name]


def _line_index(raw: str) -> dict[str, list[int]]:
    """Line numbers of every ``"id": "<value>"`` occurrence, for error messages."""
    found: dict[str, list[int]] = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        for m in re.finditer(r'"id"\s*:\s*"((?:[^"\\]|\\.)*)"', line):
            found.setdefault(m.group(1), []).append(lineno)
    return found


def parse_layout(document: bytes | str) -> list[LayoutBlock]:
    """Parse a layout file into blocks, preserving file order."""
    raw = document.decode("utf-8") if isinstance(document, bytes) else document
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LayoutParseError(exc.msg, line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise LayoutParseError("top level must be an object", line=1)
    doc_id = data.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise LayoutParseError("doc_id must be a non-empty string", field="doc_id")
    entries = data.get("blocks")
    if not isinstance(entries, list):
        raise LayoutParseError("blocks must be a list", field="blocks")

    lines = _line_index(raw)
    seen: set[str] = set()
    blocks = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise LayoutParseError(f"block {i} is not an object", field="blocks")
        block_id = entry.get("id")
        line = lines.get(str(block_id), [None])[0] if block_id is not None else None
        block_id = _field(entry, "id", i, line)
        if not isinstance(block_id, str) or not block_id:
            raise LayoutParseError(f"block {i} id must be a non-empty string", line=line, field="id")
        if block_id in seen:
            dup_lines = lines.get(block_id, [])
            raise DuplicateIdError(
                f"duplicate block id {block_id!r}"
                + (f" (lines {', '.join(map(str, dup_lines))})" if dup_lines else "")
            )
        seen.add(block_id)

        page = _field(entry, "page", i, line)
        if isinstance(page, bool) or not isinstance(page, int) or page < 1:
            raise LayoutParseError(f"block {block_id}: page must be an integer >= 1", line=line, field="page")
        bbox = _field(entry, "bbox", i, line)
        if (
            not isinstance(bbox, list)
            or len(bbox) != 4
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)
        ):
            raise LayoutParseError(f"block {block_id}: bbox must be 4 numbers", line=line, field="bbox")
        x0, y0, x1, y1 = bbox
        if not (x0 < x1 and y0 < y1):
            raise LayoutParseError(f"block {block_id}: bbox needs x0<x1 and y0<y1", line=line, field="bbox")
        category = entry.get("category", "")
        if not isinstance(category, str):
            raise LayoutParseError(f"block {block_id}: category must be a string", line=line, field="category")
        text = entry.get("text", "") or ""
        label = entry.get("section_label", "") or ""
        if not isinstance(text, str) or not isinstance(label, str):
            raise LayoutParseError(f"block {block_id}: text fields must be strings", line=line, field="text")
        blocks.append(
            LayoutBlock(
                block_id=block_id,
                doc_id=doc_id,
                page=page,
                bbox=(x0, y0, x1, y1),
                category=BlockCategory.parse(category),
                text=text,
                section_label=label,
            )
        )
    return blocks


def serialize_layout(blocks: list[LayoutBlock], doc_id: str | None = None) -> str:
    if doc_id is None:
        if not blocks:
            raise ValueError("doc_id is required for an empty block list")
        doc_id = blocks[0].doc_id
    payload = {
        "doc_id": doc_id,
        "blocks": [
            {
                "id": b.block_id,
                "page": b.page,
                "bbox": list(b.bbox),
                "category": b.category.value,
                "section_label": b.section_label,
                "text": b.text,
            }
            for b in blocks
        ],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False)


@dataclass(frozen=True)
class PriorityTable:
    """Ordered (section-label pattern, rank) pairs; rank 1 is searched first.

    Patterns are shell-style globs matched case-insensitively against the
    whole section label.
    """

    entries: tuple[tuple[str, int], ...]
    default_rank: int = 9

    def __post_init__(self):
        for pattern, rank in self.entries:
            if rank < 1:
                raise ConfigError(f"rank for {pattern!r} must be >= 1")
            if rank > self.default_rank:
                raise ConfigError(
                    f"default_rank {self.default_rank} is below rank {rank} of {pattern!r}"
                )
        if self.default_rank < 1:
            raise ConfigError("default_rank must be >= 1")

    @classmethod
    def default(cls) -> "PriorityTable":
        return cls(
            entries=(
                ("Abstract", 1),
                ("Circuit Design", 2),
                ("Measurement Results", 3),
                ("Simulation Results", 4),
                ("Introduction", 5),
            ),
            default_rank=9,
        )

    @classmethod
    def from_text(cls, text: str) -> "PriorityTable":
        """Parse ``pattern = rank`` lines; ``default = N`` sets the fallback rank."""
        entries = []
        default = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"priority table line {lineno}: expected key=value")
            key, _, value = line.rpartition("=")
            key, value = key.strip(), value.strip()
            try:
                rank = int(value)
            except ValueError:
                raise ConfigError(f"priority table line {lineno}: rank {value!r} is not an integer") from None
            if not key:
                raise ConfigError(f"priority table line {lineno}: empty section pattern")
            if key.lower() == "default":
                default = rank
            else:
                entries.append((key, rank))
        if default is None:
            default = max([9] + [r for _, r in entries])
        return cls(entries=tuple(entries), default_rank=default)

    @classmethod
    def load(cls, path: str | Path) -> "PriorityTable":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def to_text(self) -> str:
        lines = [f"{pattern} = {rank}" for pattern, rank in self.entries]
        lines.append(f"default = {self.default_rank}")
        return "\n".join(lines) + "\n"


def assign_priority(block: LayoutBlock, table: PriorityTable) -> int:
    label = block.section_label.strip().lower()
    for pattern, rank in table.entries:
        if fnmatch.fnmatchcase(label, pattern.strip().lower()):
            return rank
    return table.default_rank
