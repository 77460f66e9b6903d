import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pielimits.link import ASTRONOMICAL_UNIT, SPEED_OF_LIGHT, LinkGeometry
from pielimits.scenario import Scenario, ScenarioError, parse_range

BASE = {
    "p_tx_w": 1.0, "d_tx_m": 0.22, "d_rx_m": 11.8, "wavelength_m": 1.55e-6,
    "range_m": 1.496e11, "eta_rx": 0.5, "bandwidth_hz": 1e9, "n_b": 1e-3,
}


def test_wavelength_converted():
    s = Scenario.from_dict(BASE)
    assert s.geometry.f_c == SPEED_OF_LIGHT / 1.55e-6
    assert s.output_format == "text" and s.m_cap is None


def test_round_trip():
    s = Scenario.from_dict({**BASE, "m_cap": 4096, "n_a_axis": [1e-3, 1e-2],
                            "coherence_time_s": 1e-3, "output_format": "json"})
    again = Scenario.loads(s.dumps())
    assert again == s
    assert Scenario.loads(again.dumps()).dumps() == s.dumps()


@given(st.floats(1e-3, 1e3), st.floats(1e-2, 10), st.floats(1e13, 1e16),
       st.floats(1e3, 1e14), st.floats(1e-3, 1.0), st.floats(0, 10))
def test_round_trip_property(p_tx, d, f_c, r, eta, n_b):
    s = Scenario(LinkGeometry(p_tx, d, d, f_c, r, eta, 1e8), n_b)
    assert Scenario.loads(s.dumps()) == s


@pytest.mark.parametrize("key,name", [("d_rx_m", "d_rx"), ("p_tx_w", "p_tx"),
                                      ("range_m", "r")])
def test_missing_field_named(key, name):
    data = dict(BASE)
    del data[key]
    with pytest.raises(ScenarioError, match=name):
        Scenario.from_dict(data)


@pytest.mark.parametrize("patch,match", [
    ({"f_c_hz": 1e14}, "exactly one"),
    ({"eta_rx": 1.5}, "eta_rx"),
    ({"bogus": 1}, "bogus"),
    ({"n_b": "lots"}, "n_b"),
    ({"m_cap": 0}, "m_cap"),
    ({"output_format": "xml"}, "output_format"),
    ({"n_b_axis": "1e-3"}, "n_b_axis"),
])
def test_validation(patch, match):
    with pytest.raises(ScenarioError, match=match):
        Scenario.from_dict({**BASE, **patch})


def test_bad_json(tmp_path):
    path = tmp_path / "s.json"
    path.write_text("{not json")
    with pytest.raises(ScenarioError):
        Scenario.load(path)
    with pytest.raises(ScenarioError):
        Scenario.load(tmp_path / "missing.json")


def test_shipped_scenario_loads():
    from pathlib import Path

    s = Scenario.load(Path(__file__).parent.parent / "scenarios" / "one_au.json")
    assert s.coherence_time_s == 1e-3


@pytest.mark.parametrize("text,metres", [
    ("1AU", ASTRONOMICAL_UNIT), ("2 au", 2 * ASTRONOMICAL_UNIT), ("384400km", 3.844e8),
    ("1e11m", 1e11), ("1e11", 1e11),
])
def test_parse_range(text, metres):
    assert parse_range(text) == pytest.approx(metres, rel=1e-15)


@pytest.mark.parametrize("text", ["", "AU", "1 parsec", "-1AU", "0"])
def test_parse_range_errors(text):
    with pytest.raises(ScenarioError):
        parse_range(text)
