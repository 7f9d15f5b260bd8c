import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circuitdoc.errors import ConfigError, DomainError, NotFoundError
from circuitdoc.simmodels import (
    CascadeModel,
    Constraint,
    ObjectiveSpec,
    QuadraticToy,
    ResponseCurve,
    Variable,
    alignment_norm,
    coarse_eval,
    fine_eval,
    get_model,
    lc_match,
    load_model,
    model_ids,
    objective,
    two_stage,
)

BAND = (30e9, 38e9)
SPEC = ObjectiveSpec(BAND, (Constraint("s21_db", ">=", 17.0, 1.0),))


def _single(elements, variables=(), spec=ObjectiveSpec(BAND)):
    return CascadeModel("t", list(variables), elements, spec)


def _s21_oracle(a, b, c, d, z0=50.0):
    return 20 * math.log10(abs(2 / (a + b / z0 + c * z0 + d)))


def test_through_is_zero_db():
    m = _single([])
    assert np.all(m.coarse_eval([], []).s21_db == 0.0)


def test_series_50_ohm_oracle():
    m = _single([{"kind": "series", "R": 50.0}])
    expected = _s21_oracle(1, 50, 0, 1)
    assert expected == pytest.approx(20 * math.log10(2 / 3))
    assert np.allclose(m.coarse_eval([], []).s21_db, expected, atol=1e-12)
    assert round(expected, 2) == -3.52


def test_series_lc_against_scalar_oracle():
    m = _single([{"kind": "series", "L": 0.2e-9}, {"kind": "shunt", "C": 0.1e-12}])
    resp = m.coarse_eval([], [])
    for f, got in zip(resp.freq_hz[::10], resp.s21_db[::10]):
        w = 2 * math.pi * f
        zl, yc = 1j * w * 0.2e-9, 1j * w * 0.1e-12
        # [1 zl; 0 1] @ [1 0; yc 1]
        a, b, c, d = 1 + zl * yc, zl, yc, 1
        assert got == pytest.approx(_s21_oracle(a, b, c, d), abs=1e-10)


def test_quarter_wave_line_oracle():
    m = _single([{"kind": "tline", "z0": 35.0, "theta_deg": 90.0, "f0": 34e9}])
    resp = m.coarse_eval([], [])
    for f, got in zip(resp.freq_hz[::20], resp.s21_db[::20]):
        th = math.pi / 2 * f / 34e9
        a, b, c, d = cmath.cos(th), 1j * 35 * cmath.sin(th), 1j * cmath.sin(th) / 35, cmath.cos(th)
        assert got == pytest.approx(_s21_oracle(a, b, c, d), abs=1e-10)


def test_zero_inductor_and_zero_parasitic_vanish():
    m = _single(
        [{"kind": "series", "L": "L"}, {"kind": "shunt_tank", "C": "Cp"}],
        [Variable("L", "design", 0.0, 1e-9, 0.0), Variable("Cp", "auxiliary", 0.0, 1e-12, 0.0, hidden=0.0)],
    )
    assert np.all(m.coarse_eval([0.0], [0.0]).s21_db == 0.0)


def test_zero_hidden_parasitics_give_equal_models():
    m = lc_match()
    data = m.to_dict()
    for v in data["variables"]:
        if v["role"] == "auxiliary":
            v["hidden"] = 0.0
    zero = CascadeModel.from_dict(data)
    rng = np.random.default_rng(0)
    b = zero.design_vector().bounds
    for _ in range(5):
        x = rng.uniform(b[:, 0], b[:, 1])
        assert np.array_equal(zero.fine_eval(x).s21_db, zero.coarse_eval(x, np.zeros(2)).s21_db)


@pytest.mark.parametrize("factory", [lc_match, two_stage])
def test_fine_equals_coarse_at_hidden(factory):
    m = factory()
    rng = np.random.default_rng(1)
    b = m.design_vector().bounds
    for _ in range(10):
        x = rng.uniform(b[:, 0], b[:, 1])
        fine, coarse = m.fine_eval(x), m.coarse_eval(x, m.hidden_aux())
        for name in fine.channels:
            assert np.array_equal(fine.channel(name), coarse.channel(name))


def test_toy_closed_form():
    toy = QuadraticToy()
    for x in (-2.0, -0.3, 1.0, 1.7):
        assert objective(toy.fine_eval([x]), toy.spec) == pytest.approx((x - 1) ** 2, abs=1e-15)
        assert objective(toy.coarse_eval([x], [0.25]), toy.spec) == pytest.approx((x - 0.25) ** 2, abs=1e-15)


def _flat(db, n=81):
    f = np.linspace(24e9, 45.6e9, n)
    return ResponseCurve(f, {"s21_db": np.full(n, db)})


def test_objective_examples():
    assert objective(_flat(20.0), SPEC) == 0.0
    nine = ResponseCurve(np.linspace(30e9, 38e9, 9), {"s21_db": np.full(9, 16.0)})
    assert objective(nine, SPEC) == 9.0
    assert objective(_flat(-50.0), ObjectiveSpec(BAND)) == 0.0


def test_band_outside_grid():
    with pytest.raises(DomainError):
        objective(_flat(0.0), ObjectiveSpec((1e9, 38e9), SPEC.constraints))


@given(st.lists(st.floats(-30, 30), min_size=9, max_size=9), st.lists(st.floats(0, 10), min_size=9, max_size=9))
def test_objective_monotone(base, lift):
    f = np.linspace(30e9, 38e9, 9)
    spec = ObjectiveSpec(BAND, (Constraint("s21_db", ">=", 17.0, 2.0), Constraint("nf_db", "<=", 1.0, 0.5)))
    lo = ResponseCurve(f, {"s21_db": np.array(base), "nf_db": np.array(base) / 10 + np.array(lift)})
    hi = ResponseCurve(f, {"s21_db": np.array(base) + np.array(lift), "nf_db": np.array(base) / 10})
    assert objective(hi, spec) <= objective(lo, spec)
    assert objective(lo, spec) >= 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["lc_match", "two_stage"]))
def test_finite_and_bounded_slope(seed, model_id):
    m = get_model(model_id)
    rng = np.random.default_rng(seed)
    b, ab = m.design_vector().bounds, m.aux_vector().bounds
    x = rng.uniform(b[:, 0], b[:, 1])
    a = rng.uniform(ab[:, 0], ab[:, 1])
    base = m.coarse_eval(x, a)
    assert all(np.all(np.isfinite(ch)) for ch in base.channels.values())
    j = int(rng.integers(len(x)))

    def slope(step):  # dB per unit of normalized range
        h = step * (b[j, 1] - b[j, 0])
        x2 = x.copy()
        x2[j] = x[j] + h if x[j] + h <= b[j, 1] else x[j] - h
        return np.max(np.abs(m.coarse_eval(x2, a).s21_db - base.s21_db)) / step

    # a jump would make the difference quotient grow like 1/step
    coarse, fine = slope(1e-5), slope(1e-7)
    assert np.isfinite(fine) and fine <= 2.0 * coarse + 1e-3


def test_out_of_bounds_names_offenders():
    m = lc_match()
    x = m.design_vector().array
    x[1] = 10.0
    with pytest.raises(DomainError, match="L1"):
        m.coarse_eval(x, np.zeros(2))
    with pytest.raises(DomainError):
        m.fine_eval(x[:2])


def test_alignment_norm_examples():
    a, b = _flat(1.0), _flat(3.0)
    assert alignment_norm(a, a, SPEC) == 0.0
    assert alignment_norm(a, b, SPEC) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        alignment_norm(a, _flat(1.0, 41), SPEC)


def test_registry_and_module_functions():
    assert {"toy", "lc_match", "two_stage"} <= set(model_ids())
    m = lc_match()
    x = m.design_vector().array
    assert np.array_equal(fine_eval(x, "lc_match").s21_db, m.fine_eval(x).s21_db)
    assert np.array_equal(coarse_eval(x, [0, 0], "lc_match").s21_db, m.coarse_eval(x, [0, 0]).s21_db)
    with pytest.raises(NotFoundError):
        get_model("nope")


def test_model_file_round_trip(tmp_path):
    data = two_stage().to_dict()
    data["model_id"] = "custom_two_stage"
    path = tmp_path / "m.json"
    path.write_text(json.dumps(data))
    m = load_model(path)
    ref = two_stage()
    x = ref.design_vector().array
    assert np.array_equal(m.fine_eval(x).channel("nf_db"), ref.fine_eval(x).channel("nf_db"))
    assert get_model("custom_two_stage").model_id == "custom_two_stage"
    data["elements"].append({"kind": "bogus"})
    path.write_text(json.dumps(data))
    with pytest.raises(ConfigError):
        load_model(path)


def test_spec_validation():
    with pytest.raises(ConfigError):
        ObjectiveSpec((2.0, 1.0))
    with pytest.raises(ConfigError):
        Constraint("s21_db", ">=", 1.0, 0.0)
    with pytest.raises(ConfigError):
        Constraint("s21_db", "==", 1.0)
