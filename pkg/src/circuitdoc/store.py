"""Single-file row store for documents and everything parsed out of them.

On-disk format (JSON lines, UTF-8)::

    {"format": "circuitdoc-store", "version": 1}
    {"op": "put", "table": "documents", "row": {...}}
    {"op": "delete", "table": "layouts", "key": "..."}

The journal is replayed on open; :meth:`Store.compact` rewrites it as one
``put`` per live row.  Image blobs live in ``<store>.blobs/<sha256>`` and are
referenced from image rows as ``sha256:<hex>``.

Writers must be serialized by the caller (see :func:`store_lock`).
"""

from __future__ import annotations

import contextlib
import fcntl
import fnmatch
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import ClassVar, Iterator

from .errors import InputError, IntegrityError, NotFoundError
from .layout import BlockCategory

FORMAT = {"format": "circuitdoc-store", "version": 1}
PARSING_STATUSES = ("pending", "parsed", "failed")


def _bbox(value) -> tuple[float, float, float, float]:
    box = tuple(float(v) for v in value)
    if len(box) != 4:
        raise InputError(f"bbox needs 4 numbers, got {len(box)}")
    return box


def _category(value) -> str:
    if isinstance(value, BlockCategory):
        return value.value
    try:
        return BlockCategory(value).value
    except ValueError:
        raise InputError(f"unknown block category {value!r}") from None


@dataclass(frozen=True)
class DocumentRow:
    TABLE: ClassVar[str] = "documents"
    KEY: ClassVar[str] = "doc_id"

    doc_id: str
    source: str = ""
    parsing_status: str = "pending"
    ingested_at: str = ""

    def __post_init__(self):
        if self.parsing_status not in PARSING_STATUSES:
            raise InputError(f"parsing_status must be one of {PARSING_STATUSES}")


@dataclass(frozen=True)
class ParameterRow:
    TABLE: ClassVar[str] = "parameters"
    KEY: ClassVar[str] = "param_id"

    param_id: str
    doc_id: str
    name: str
    value: float
    unit: str
    source_block: str = ""
    angle_deg: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        if not math.isfinite(self.value):
            raise InputError(f"parameter {self.param_id}: value must be finite")


@dataclass(frozen=True)
class LayoutRow:
    TABLE: ClassVar[str] = "layouts"
    KEY: ClassVar[str] = "layout_id"

    layout_id: str
    doc_id: str
    category: str
    page: int
    bbox: tuple[float, float, float, float]
    block_id: str = ""
    section_label: str = ""
    text: str = ""

    def __post_init__(self):
        object.__setattr__(self, "category", _category(self.category))
        object.__setattr__(self, "bbox", _bbox(self.bbox))
        if int(self.page) < 1:
            raise InputError(f"layout {self.layout_id}: page must be >= 1")


@dataclass(frozen=True)
class TopologyRow:
    TABLE: ClassVar[str] = "topologies"
    KEY: ClassVar[str] = "topo_id"

    topo_id: str
    doc_id: str
    nodes: tuple[str, ...]
    component_list: tuple[tuple[str, str], ...]  # (refdes, class_label)
    connections: tuple[tuple[str, int, str], ...]  # (refdes, pin index, node)
    netlist_text: str = ""

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(str(n) for n in self.nodes))
        object.__setattr__(self, "component_list", tuple((str(r), str(c)) for r, c in self.component_list))
        object.__setattr__(
            self, "connections", tuple((str(r), int(i), str(n)) for r, i, n in self.connections)
        )
        nodes = set(self.nodes)
        comps = {r for r, _ in self.component_list}
        for refdes, _, node in self.connections:
            if refdes not in comps:
                raise IntegrityError(f"topology {self.topo_id}: connection to unknown component {refdes!r}")
            if node not in nodes:
                raise IntegrityError(f"topology {self.topo_id}: connection to unknown node {node!r}")


@dataclass(frozen=True)
class ImageRow:
    TABLE: ClassVar[str] = "images"
    KEY: ClassVar[str] = "image_id"

    image_id: str
    doc_id: str
    image_type: str
    region_bbox: tuple[float, float, float, float]
    caption: str
    blob_ref: str

    def __post_init__(self):
        object.__setattr__(self, "image_type", _category(self.image_type))
        object.__setattr__(self, "region_bbox", _bbox(self.region_bbox))


@dataclass(frozen=True)
class LabelRow:
    TABLE: ClassVar[str] = "labels"
    KEY: ClassVar[str] = "label_id"

    label_id: str
    target_table: str
    target_key: str
    content: str


ROW_TYPES = {cls.TABLE: cls for cls in (DocumentRow, ParameterRow, LayoutRow, TopologyRow, ImageRow, LabelRow)}
TABLES = tuple(ROW_TYPES)


def row_to_dict(row) -> dict:
    data = asdict(row)
    for name, value in data.items():
        if isinstance(value, tuple):
            data[name] = json.loads(json.dumps(value))
    return data


def row_from_dict(table: str, data: dict):
    cls = ROW_TYPES[table]
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise InputError(f"{table}: unknown fields {sorted(unknown)}")
    return cls(**data)


def row_key(row) -> str:
    return getattr(row, row.KEY)


class Store:
    """Row store with referential integrity; ``path=None`` keeps it in memory."""

    def __init__(self, path: str | Path | None = None, fsync: bool = False):
        self.path = Path(path) if path is not None else None
        self.fsync = fsync
        self._tables: dict[str, dict[str, object]] = {t: {} for t in TABLES}
        self._fh = None
        self._memory_blobs: dict[str, bytes] = {}
        if self.path is not None:
            self._load()

    # ------------------------------------------------------------------ io
    @property
    def blob_dir(self) -> Path | None:
        return None if self.path is None else Path(str(self.path) + ".blobs")

    def _load(self) -> None:
        if self.path.exists() and self.path.stat().st_size > 0:
            raw = self.path.read_bytes()
            lines = raw.split(b"\n")
            torn_tail = not raw.endswith(b"\n")
            try:
                header = json.loads(lines[0])
            except json.JSONDecodeError:
                raise InputError(f"{self.path} is not a store file") from None
            if header != FORMAT:
                raise InputError(f"{self.path}: unsupported store header {header!r}")
            for lineno, line in enumerate(lines[1:], start=2):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError:
                    if torn_tail and lineno == len(lines):
                        break  # interrupted final write
                    raise InputError(f"{self.path}: corrupt journal line {lineno}") from None
                self._replay(entry)
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(FORMAT) + "\n")

    def _replay(self, entry: dict) -> None:
        table = entry["table"]
        if entry["op"] == "put":
            row = row_from_dict(table, entry["row"])
            self._tables[table][row_key(row)] = row
        elif entry["op"] == "delete":
            self._tables[table].pop(entry["key"], None)
        else:
            raise InputError(f"unknown journal op {entry['op']!r}")

    def _append(self, entry: dict) -> None:
        if self.path is None:
            return
        if self._fh is None:
            self._fh = open(self.path, "a", encoding="utf-8")
        self._fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")
        self._fh.flush()
        if self.fsync:
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def compact(self) -> None:
        """Rewrite the journal as one put per live row (atomic replace)."""
        if self.path is None:
            return
        self.close()
        tmp = self.path.with_name(self.path.name + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(FORMAT) + "\n")
            for table in TABLES:
                for key in sorted(self._tables[table]):
                    entry = {"op": "put", "table": table, "row": row_to_dict(self._tables[table][key])}
                    fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.path)

    # --------------------------------------------------------------- blobs
    def put_blob(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        if self.blob_dir is None:
            self._memory_blobs[digest] = bytes(data)
        else:
            self.blob_dir.mkdir(parents=True, exist_ok=True)
            target = self.blob_dir / digest
            if not target.exists():
                tmp = target.with_suffix(".tmp")
                tmp.write_bytes(data)
                os.replace(tmp, target)
        return f"sha256:{digest}"

    def get_blob(self, ref: str) -> bytes:
        digest = self._digest(ref)
        if self.blob_dir is None:
            if digest not in self._memory_blobs:
                raise NotFoundError(f"blob {ref} not stored")
            return self._memory_blobs[digest]
        target = self.blob_dir / digest
        if not target.exists():
            raise NotFoundError(f"blob {ref} not stored")
        return target.read_bytes()

    @staticmethod
    def _digest(ref: str) -> str:
        scheme, _, digest = ref.partition(":")
        if scheme != "sha256" or len(digest) != 64:
            raise IntegrityError(f"malformed blob reference {ref!r}")
        return digest

    # ----------------------------------------------------------- integrity
    def _require(self, table: str, key: str, who: str) -> None:
        if key not in self._tables[table]:
            raise IntegrityError(f"{who}: {table} key {key!r} does not exist")

    def _check(self, row) -> None:
        who = f"{row.TABLE}[{row_key(row)!r}]"
        if isinstance(row, (ParameterRow, LayoutRow, TopologyRow, ImageRow)):
            self._require("documents", row.doc_id, who)
        if isinstance(row, ImageRow):
            data = self.get_blob(row.blob_ref)
            if hashlib.sha256(data).hexdigest() != self._digest(row.blob_ref):
                raise IntegrityError(f"{who}: blob content does not match {row.blob_ref}")
        if isinstance(row, LabelRow):
            if row.target_table not in ROW_TYPES or row.target_table == "labels":
                raise IntegrityError(f"{who}: labels cannot target table {row.target_table!r}")
            self._require(row.target_table, row.target_key, who)

    def _referrers(self, table: str, key: str) -> list[str]:
        refs = []
        if table == "documents":
            for t in ("parameters", "layouts", "topologies", "images"):
                refs += [f"{t}[{k!r}]" for k, r in self._tables[t].items() if r.doc_id == key]
        refs += [
            f"labels[{k!r}]"
            for k, r in self._tables["labels"].items()
            if r.target_table == table and r.target_key == key
        ]
        return refs

    # ----------------------------------------------------------------- api
    def put(self, row) -> str:
        if row.TABLE not in ROW_TYPES or not isinstance(row, ROW_TYPES[row.TABLE]):
            raise InputError(f"not a row type: {type(row).__name__}")
        self._check(row)
        self._append({"op": "put", "table": row.TABLE, "row": row_to_dict(row)})
        key = row_key(row)
        self._tables[row.TABLE][key] = row
        return key

    def get(self, table: str, key: str):
        return self._tables[table].get(key)

    def delete(self, table: str, key: str) -> None:
        if key not in self._tables[table]:
            raise NotFoundError(f"{table} key {key!r} does not exist")
        refs = self._referrers(table, key)
        if refs:
            raise IntegrityError(f"{table}[{key!r}] is still referenced by {', '.join(refs[:5])}")
        self._append({"op": "delete", "table": table, "key": key})
        del self._tables[table][key]

    def rows(self, table: str) -> Iterator:
        return iter(list(self._tables[table].values()))

    def count(self, table: str) -> int:
        return len(self._tables[table])

    def check_integrity(self) -> list[str]:
        """All referential violations currently present (empty when consistent)."""
        problems = []
        for table in TABLES:
            for row in self._tables[table].values():
                try:
                    self._check(row)
                except (IntegrityError, NotFoundError) as exc:
                    problems.append(str(exc))
        return problems

    def query_params(self, doc_id: str, name_pattern: str = "*") -> list[ParameterRow]:
        hits = [
            r
            for r in self._tables["parameters"].values()
            if r.doc_id == doc_id and fnmatch.fnmatchcase(r.name, name_pattern)
        ]
        return sorted(hits, key=lambda r: (r.name, r.param_id))

    def layouts_for(self, doc_id: str) -> list[LayoutRow]:
        return [r for r in self._tables["layouts"].values() if r.doc_id == doc_id]

    def _belongs(self, table: str, key: str, doc_id: str) -> bool:
        row = self._tables[table].get(key)
        if row is None:
            return False
        return key == doc_id if table == "documents" else getattr(row, "doc_id", None) == doc_id

    def export_training_view(self, doc_id: str) -> bytes:
        """Byte-stable JSON bundle of every row belonging to ``doc_id``."""
        if doc_id not in self._tables["documents"]:
            raise NotFoundError(f"document {doc_id!r} not in store")
        bundle = {}
        for table in TABLES:
            if table == "labels":
                rows = [r for r in self._tables[table].values() if self._belongs(r.target_table, r.target_key, doc_id)]
            elif table == "documents":
                rows = [self._tables[table][doc_id]]
            else:
                rows = [r for r in self._tables[table].values() if r.doc_id == doc_id]
            bundle[table] = [row_to_dict(r) for r in sorted(rows, key=row_key)]
        text = json.dumps(bundle, sort_keys=True, indent=2, ensure_ascii=False)
        return (text + "\n").encode("utf-8")


@contextlib.contextmanager
def store_lock(path: str | Path):
    """Advisory exclusive lock on ``<path>.lock`` for the duration of a write session."""
    lock_path = Path(str(path) + ".lock")
    lock_path.parent.mkdir(parents=True, exist_ok=True)
    with open(lock_path, "w") as fh:
        fcntl.flock(fh.fileno(), fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh.fileno(), fcntl.LOCK_UN)
