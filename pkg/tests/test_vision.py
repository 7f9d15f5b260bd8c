import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from circuitdoc.errors import InputError
from circuitdoc.vision import (
    ComponentBox,
    NetDomain,
    binarize,
    binarize_auto,
    connected_components,
    dump_boxes,
    extract_nets,
    filter_by_component_overlap,
    filter_small_domains,
    histogram,
    load_boxes,
    otsu_threshold,
    to_grayscale,
    triangle_threshold,
)

from oracles import flood_fill_partition, otsu_oracle, random_histogram, triangle_oracle


def test_luma_examples():
    img = np.array([[[255, 255, 255], [0, 0, 0], [255, 0, 0]]], dtype=np.uint8)
    assert to_grayscale(img).tolist() == [[255, 0, 76]]
    assert round(0.299 * 255) == 76


def test_luma_matches_formula_on_random_pixels():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (20, 20, 3), dtype=np.uint8)
    got = to_grayscale(img)
    for (y, x), v in np.ndenumerate(got):
        r, g, b = (int(c) for c in img[y, x])
        exact = 0.299 * r + 0.587 * g + 0.114 * b
        assert abs(v - exact) <= 0.5 + 1e-9


def test_zero_size_image():
    with pytest.raises(InputError):
        to_grayscale(np.zeros((0, 4, 3), dtype=np.uint8))


def test_otsu_examples():
    h = np.zeros(256, dtype=int)
    h[50] = h[200] = 100
    assert otsu_threshold(h) == 50 == otsu_oracle(h)
    h = np.zeros(256, dtype=int)
    h[7] = 10
    assert otsu_threshold(h) == 7


def test_triangle_examples():
    spike = np.zeros(256, dtype=int)
    spike[99] = 5
    assert triangle_threshold(spike) == 99
    tail = np.zeros(256, dtype=int)
    tail[20] = 1000
    tail[21:120] = np.linspace(300, 1, 99).astype(int)
    t = triangle_threshold(tail)
    assert 21 <= t < 120 and t == triangle_oracle(tail)


def test_triangle_symmetric_uses_upper_tail():
    h = np.zeros(256, dtype=int)
    h[100] = 100
    h[60:100] = np.arange(1, 41)
    h[101:141] = np.arange(40, 0, -1)
    t = triangle_threshold(h)
    assert t > 100 and t == triangle_oracle(h)


def test_thresholds_against_oracles():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        h = random_histogram(rng)
        assert otsu_threshold(h) == otsu_oracle(h)
        assert triangle_threshold(h) == triangle_oracle(h)


def test_histogram_validation():
    with pytest.raises(InputError):
        otsu_threshold(np.zeros(256))
    with pytest.raises(InputError):
        triangle_threshold(np.ones(10))


def _drawing(dark: bool):
    img = np.full((40, 60), 255, dtype=np.uint8)
    img[10, 5:55] = 0
    img[10:30, 30] = 0
    img[30, 10:50] = 0
    return 255 - img if dark else img


def test_binarize_auto_polarity():
    light_mask, light_method = binarize_auto(_drawing(False))
    dark_mask, dark_method = binarize_auto(_drawing(True))
    assert light_method == "otsu" and dark_method == "triangle"
    assert np.array_equal(light_mask, _drawing(False) == 0)
    assert np.array_equal(light_mask, dark_mask)


def test_uniform_gray_is_empty():
    mask, _ = binarize_auto(np.full((8, 8), 128, dtype=np.uint8))
    assert not mask.any()


@settings(max_examples=60)
@given(arrays(np.bool_, (12, 12)), st.integers(0, 80), st.integers(170, 255))
def test_two_level_inversion_gives_same_mask(mask, ink, paper):
    if mask.sum() * 2 >= mask.size or not mask.any():
        return  # ink must be the minority for the page to read as background
    img = np.where(mask, ink, paper).astype(np.uint8)
    a, _ = binarize_auto(img)
    b, _ = binarize_auto(255 - img)
    assert np.array_equal(a, mask) and np.array_equal(b, mask)


@settings(max_examples=60)
@given(arrays(np.bool_, (10, 10)))
def test_binarize_rendered_mask_is_idempotent(mask):
    if mask.all() or not mask.any():
        return
    img = np.where(mask, 0, 255).astype(np.uint8)
    assert np.array_equal(binarize(img, "otsu"), mask)
    assert np.array_equal(binarize(255 - img, "triangle"), mask)


def test_components_examples():
    assert connected_components(np.zeros((5, 5), dtype=bool)) == []
    plus = np.zeros((3, 3), dtype=bool)
    plus[1, :] = plus[:, 1] = True
    (d,) = connected_components(plus)
    assert d.pixel_count == 5


def test_diagonal_join_is_one_domain():
    m = np.eye(4, dtype=bool)
    assert len(connected_components(m)) == 1


def test_components_match_flood_fill():
    rng = np.random.default_rng(7)
    for _ in range(40):
        mask = rng.random((64, 64)) < rng.uniform(0.2, 0.6)
        doms = connected_components(mask)
        assert {frozenset(d.pixel_set()) for d in doms} == flood_fill_partition(mask)
        firsts = [min(d.pixel_set()) for d in doms]
        assert firsts == sorted(firsts)


@given(arrays(np.bool_, st.tuples(st.integers(1, 12), st.integers(1, 12))))
def test_components_partition_foreground(mask):
    doms = connected_components(mask)
    pixels = [p for d in doms for p in d.pixel_set()]
    assert len(pixels) == len(set(pixels))
    assert set(pixels) == set(zip(*np.nonzero(mask)))


def _dom(i, n):
    return NetDomain(i, np.zeros(n, dtype=int), np.arange(n))


def test_small_domain_examples():
    doms = [_dom(0, 900), _dom(1, 60), _dom(2, 40)]
    assert [d.domain_id for d in filter_small_domains(doms, 1000, 0.10)] == [0]
    assert len(filter_small_domains(doms, 1000, 0.0)) == 3
    assert [d.domain_id for d in filter_small_domains(doms, 1000, 1.0)] == []
    assert [d.domain_id for d in filter_small_domains([_dom(0, 1000)], 1000, 1.0)] == [0]
    with pytest.raises(InputError):
        filter_small_domains(doms, 1000, 1.5)


@given(st.lists(st.integers(1, 500), max_size=10), st.floats(0, 1), st.floats(0, 1))
def test_small_domain_filter_monotone(sizes, r1, r2):
    lo, hi = sorted((r1, r2))
    doms = [_dom(i, n) for i, n in enumerate(sizes)]
    total = sum(sizes)
    strict = {d.domain_id for d in filter_small_domains(doms, total, hi)}
    loose = {d.domain_id for d in filter_small_domains(doms, total, lo)}
    assert strict <= loose <= set(range(len(sizes)))


def _wire(x_end):
    return NetDomain(0, np.full(x_end, 5), np.arange(x_end))


def test_overlap_examples():
    box = ComponentBox("r", "R", (20, 0, 30, 10))
    assert filter_by_component_overlap([_wire(21)], [box], 0)
    far = NetDomain(1, np.array([50]), np.array([80]))
    assert filter_by_component_overlap([far], [box], 2) == []
    gap = _wire(18)  # last pixel x=17, two columns short of the box
    assert filter_by_component_overlap([gap], [box], 3) == [gap]
    assert filter_by_component_overlap([gap], [box], 0) == []


def test_overlap_without_boxes_warns():
    diags = []
    assert filter_by_component_overlap([_wire(5)], [], 2, diags) == []
    assert diags


def test_box_validation_and_round_trip():
    with pytest.raises(InputError):
        ComponentBox("a", "Z", (0, 0, 1, 1))
    with pytest.raises(InputError):
        ComponentBox("a", "R", (0, 0, 0, 1))
    boxes = [ComponentBox("a", "R", (0, 0, 3, 4), 0.9, "R1"), ComponentBox("b", "GND", (5, 5, 9, 9))]
    assert load_boxes(dump_boxes(boxes)) == boxes
    with pytest.raises(InputError):
        load_boxes('[{"id": "a", "class": "R", "bbox": [0,0,1,1]}, {"id": "a", "class": "R", "bbox": [0,0,1,1]}]')


def test_extract_nets_drops_text_keeps_wires():
    img = np.full((40, 80), 255, dtype=np.uint8)
    img[20, 0:30] = 0  # wire into the box
    img[20, 40:80] = 0  # wire out of the box
    img[18:23, 30:40] = 0  # component body
    img[2:4, 70:72] = 0  # stray speck
    box = ComponentBox("r", "R", (30, 15, 40, 25))
    out = extract_nets(img, [box], min_domain_ratio=0.05)
    assert out.method == "otsu" and len(out.domains) == 2 and out.candidates == 3
