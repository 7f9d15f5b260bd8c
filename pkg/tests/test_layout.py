import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from circuitdoc.errors import ConfigError, DuplicateIdError, LayoutParseError
from circuitdoc.layout import (
    BlockCategory,
    LayoutBlock,
    PriorityTable,
    assign_priority,
    parse_layout,
    serialize_layout,
)


def _doc(*blocks, doc_id="d1"):
    return json.dumps({"doc_id": doc_id, "blocks": list(blocks)})


def test_taxonomy_has_twenty_named_values_plus_unknown():
    named = [c for c in BlockCategory if c is not BlockCategory.UNKNOWN]
    assert len(named) == 20
    assert BlockCategory.UNKNOWN.value == "Unknown"


def test_single_block_maps_fields():
    blocks = parse_layout(_doc({"id": "b1", "page": 1, "bbox": [0, 0, 10, 10], "category": "Table", "text": "..."}))
    assert len(blocks) == 1
    b = blocks[0]
    assert (b.block_id, b.doc_id, b.page, b.bbox, b.category, b.text) == ("b1", "d1", 1, (0, 0, 10, 10), BlockCategory.TABLE, "...")


@pytest.mark.parametrize("label,expected", [
    ("circuit diagram", BlockCategory.CIRCUIT_DIAGRAM),
    ("  Circuit   DIAGRAM ", BlockCategory.CIRCUIT_DIAGRAM),
    ("circuit-diagram", BlockCategory.CIRCUIT_DIAGRAM),
    ("holographic view", BlockCategory.UNKNOWN),
    ("", BlockCategory.UNKNOWN),
])
def test_category_normalization(label, expected):
    assert BlockCategory.parse(label) is expected


def test_every_taxonomy_value_parses_to_itself():
    for cat in BlockCategory:
        assert BlockCategory.parse(cat.value) is cat


def test_file_order_preserved(fixtures):
    blocks = parse_layout((fixtures / "limiter_lna_layout.json").read_bytes())
    assert [b.block_id for b in blocks] == [f"b{i:02d}" for i in range(1, 13)]


def test_malformed_json_names_line():
    with pytest.raises(LayoutParseError) as err:
        parse_layout('{"doc_id": "d",\n "blocks": [,]}')
    assert err.value.line == 2


def test_missing_field_names_field():
    with pytest.raises(LayoutParseError) as err:
        parse_layout(_doc({"id": "b1", "bbox": [0, 0, 1, 1]}))
    assert err.value.field == "page"


@pytest.mark.parametrize("bbox", [[0, 0, 0, 5], [5, 0, 1, 5], [0, 0, 1]])
def test_bad_bbox_rejected(bbox):
    with pytest.raises(LayoutParseError):
        parse_layout(_doc({"id": "b1", "page": 1, "bbox": bbox}))


def test_duplicate_ids_rejected():
    b = {"id": "b1", "page": 1, "bbox": [0, 0, 1, 1]}
    with pytest.raises(DuplicateIdError):
        parse_layout(_doc(b, b))


TABLE = PriorityTable((("Abstract", 1), ("Measurement Results", 2)), default_rank=9)


def _block(label):
    return LayoutBlock("b", "d", 1, (0, 0, 1, 1), BlockCategory.TEXT, "", label)


@pytest.mark.parametrize("label,rank", [("Abstract", 1), ("Appendix", 9), ("measurement results", 2)])
def test_assign_priority(label, rank):
    assert assign_priority(_block(label), TABLE) == rank


def test_first_matching_pattern_wins():
    table = PriorityTable((("*results", 4), ("measurement*", 2)), default_rank=9)
    assert assign_priority(_block("Measurement Results"), table) == 4


def test_default_table():
    t = PriorityTable.default()
    assert dict(t.entries) == {"Abstract": 1, "Circuit Design": 2, "Measurement Results": 3,
                               "Simulation Results": 4, "Introduction": 5}
    assert t.default_rank == 9


def test_priority_table_text_round_trip():
    t = PriorityTable.from_text("# ranks\nAbstract = 1\nResults* = 3\ndefault = 7\n")
    assert t.entries == (("Abstract", 1), ("Results*", 3)) and t.default_rank == 7
    assert PriorityTable.from_text(t.to_text()) == t


@pytest.mark.parametrize("text", ["Abstract = 0", "Abstract = 5\ndefault = 3", "Abstract", "Abstract = one"])
def test_priority_table_validation(text):
    with pytest.raises(ConfigError):
        PriorityTable.from_text(text)


_text = st.text(st.characters(blacklist_categories=("Cs",)), max_size=20)
_blocks = st.lists(
    st.builds(
        lambda i, page, x, y, w, h, cat, text, label: LayoutBlock(
            f"b{i}", "doc", page, (x, y, x + w, y + h), cat, text, label),
        st.integers(0, 10_000), st.integers(1, 50),
        st.integers(-1000, 1000), st.integers(-1000, 1000), st.integers(1, 500), st.integers(1, 500),
        st.sampled_from(list(BlockCategory)), _text, _text,
    ),
    min_size=1, max_size=8, unique_by=lambda b: b.block_id,
)


@given(_blocks)
def test_serialize_parse_round_trip(blocks):
    assert parse_layout(serialize_layout(blocks)) == blocks


@given(_text)
def test_assign_priority_total(label):
    rank = assign_priority(_block(label), PriorityTable.default())
    assert 1 <= rank <= 9
