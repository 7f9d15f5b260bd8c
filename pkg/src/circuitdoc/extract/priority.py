"""Priority-ordered parameter search over layout blocks."""

from __future__ import annotations

import fnmatch
from dataclasses import replace
from typing import Callable, NamedTuple

from ..layout import LayoutBlock, PriorityTable, assign_priority
from .params import ParamRecord, parse_param_text

Extractor = Callable[[str], list]


class SearchResult(NamedTuple):
    record: ParamRecord | None
    probes: int
    visited: list[tuple[str, int]]  # (block_id, rank) in probe order


def priority_order(blocks: list[LayoutBlock], table: PriorityTable) -> list[tuple[LayoutBlock, int]]:
    """Blocks with their ranks, ascending rank; ties keep document order."""
    ranked = [(b, assign_priority(b, table)) for b in blocks]
    return sorted(ranked, key=lambda pair: pair[1])  # sorted() is stable


def po_search(
    blocks: list[LayoutBlock],
    table: PriorityTable,
    target: str,
    extractor: Extractor = parse_param_text,
) -> SearchResult:
    """Find the first record whose name matches the glob ``target``.

    Lower-priority blocks are only examined once every block of a higher
    priority has been examined without a hit.
    """
    visited = []
    for block, rank in priority_order(blocks, table):
        visited.append((block.block_id, rank))
        for record in extractor(block.text):
            if fnmatch.fnmatchcase(record.name, target):
                return SearchResult(replace(record, source_block=block.block_id), len(visited), visited)
    return SearchResult(None, len(visited), visited)


def collect_by_priority(
    blocks: list[LayoutBlock],
    table: PriorityTable,
    extractor: Extractor = parse_param_text,
) -> list[ParamRecord]:
    """Every record in every block; on duplicate names the higher-priority block wins."""
    seen: dict[str, ParamRecord] = {}
    for block, _ in priority_order(blocks, table):
        for record in extractor(block.text):
            if record.name not in seen:
                seen[record.name] = replace(record, source_block=block.block_id)
    return list(seen.values())
