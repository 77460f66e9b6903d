"""JSON scenario files and unit-suffixed quantities.

A scenario is a flat JSON object; every physical quantity carries its unit in
the key name::

    {
      "p_tx_w": 1.0,
      "d_tx_m": 0.22,
      "d_rx_m": 11.8,
      "wavelength_m": 1.55e-6,        # or "f_c_hz"
      "range_m": 1.496e11,
      "eta_rx": 0.5,
      "bandwidth_hz": 1e9,
      "n_b": 1e-3,
      "m_cap": null,                  # optional
      "coherence_time_s": null,       # optional
      "n_a_axis": [...],              # optional, for `sweep`
      "n_b_axis": [...],              # optional, for `sweep`
      "output_format": "text"         # optional: text | json | csv
    }

Serialising always writes ``f_c_hz``, so parse -> dump -> parse is lossless.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainError, PieError
from .link import ASTRONOMICAL_UNIT, SPEED_OF_LIGHT, LinkGeometry

OUTPUT_FORMATS = ("text", "json", "csv")

# scenario key -> LinkGeometry field
_GEOMETRY_KEYS = {
    "p_tx_w": "p_tx",
    "d_tx_m": "d_tx",
    "d_rx_m": "d_rx",
    "range_m": "r",
    "eta_rx": "eta_rx",
    "bandwidth_hz": "bandwidth",
}
_KNOWN_KEYS = set(_GEOMETRY_KEYS) | {
    "f_c_hz", "wavelength_m", "n_b", "m_cap", "coherence_time_s",
    "n_a_axis", "n_b_axis", "output_format",
}

_RANGE_UNITS = {"m": 1.0, "km": 1e3, "au": ASTRONOMICAL_UNIT}
_RANGE_RE = re.compile(r"^\s*([0-9.eE+-]+)\s*([a-zA-Z]*)\s*$")


class ScenarioError(PieError):
    """A scenario file or CLI quantity failed validation."""


def parse_range(text: str) -> float:
    """Parse a range such as ``"1AU"``, ``"384400 km"`` or ``"1e11"`` to metres."""
    match = _RANGE_RE.match(text)
    if not match:
        raise ScenarioError(f"cannot parse range {text!r}")
    number, unit = match.groups()
    factor = _RANGE_UNITS.get(unit.lower() or "m")
    if factor is None:
        raise ScenarioError(f"unknown range unit {unit!r} (use m, km or AU)")
    try:
        value = float(number) * factor
    except ValueError:
        raise ScenarioError(f"cannot parse range {text!r}") from None
    if not math.isfinite(value) or value <= 0:
        raise ScenarioError(f"range must be positive, got {text!r}")
    return value


def _number(data: dict, key: str, *, required: bool = True) -> float | None:
    if key not in data or data[key] is None:
        if required:
            raise ScenarioError(f"scenario field {key!r} is missing")
        return None
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"scenario field {key!r} must be a number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class Scenario:
    geometry: LinkGeometry
    n_b: float
    m_cap: int | None = None
    coherence_time_s: float | None = None
    n_a_axis: tuple[float, ...] | None = None
    n_b_axis: tuple[float, ...] | None = None
    output_format: str = "text"

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a JSON object")
        unknown = sorted(set(data) - _KNOWN_KEYS)
        if unknown:
            raise ScenarioError(f"unknown scenario field(s): {', '.join(unknown)}")

        fields = {}
        for key, name in _GEOMETRY_KEYS.items():
            try:
                fields[name] = _number(data, key)
            except ScenarioError as exc:
                raise ScenarioError(f"{exc} ({name})") from None
        f_c = _number(data, "f_c_hz", required=False)
        wavelength = _number(data, "wavelength_m", required=False)
        if (f_c is None) == (wavelength is None):
            raise ScenarioError("give exactly one of 'f_c_hz' or 'wavelength_m' (f_c)")
        if f_c is None:
            if wavelength <= 0:
                raise ScenarioError(f"wavelength_m must be > 0, got {wavelength!r}")
            f_c = SPEED_OF_LIGHT / wavelength
        fields["f_c"] = f_c
        try:
            geometry = LinkGeometry(**fields)
        except DomainError as exc:
            raise ScenarioError(str(exc)) from None

        n_b = _number(data, "n_b")
        if n_b < 0 or not math.isfinite(n_b):
            raise ScenarioError(f"n_b must be finite and >= 0, got {n_b!r}")
        m_cap = data.get("m_cap")
        if m_cap is not None and (isinstance(m_cap, bool) or not isinstance(m_cap, int)
                                  or m_cap < 1):
            raise ScenarioError(f"m_cap must be a positive integer, got {m_cap!r}")
        output_format = data.get("output_format", "text")
        if output_format not in OUTPUT_FORMATS:
            raise ScenarioError(f"output_format must be one of {OUTPUT_FORMATS}")

        return cls(
            geometry=geometry,
            n_b=n_b,
            m_cap=m_cap,
            coherence_time_s=_number(data, "coherence_time_s", required=False),
            n_a_axis=_axis(data, "n_a_axis"),
            n_b_axis=_axis(data, "n_b_axis"),
            output_format=output_format,
        )

    def to_dict(self) -> dict:
        g = self.geometry
        data = {
            "p_tx_w": g.p_tx,
            "d_tx_m": g.d_tx,
            "d_rx_m": g.d_rx,
            "f_c_hz": g.f_c,
            "range_m": g.r,
            "eta_rx": g.eta_rx,
            "bandwidth_hz": g.bandwidth,
            "n_b": self.n_b,
            "m_cap": self.m_cap,
            "coherence_time_s": self.coherence_time_s,
            "output_format": self.output_format,
        }
        if self.n_a_axis is not None:
            data["n_a_axis"] = list(self.n_a_axis)
        if self.n_b_axis is not None:
            data["n_b_axis"] = list(self.n_b_axis)
        return data

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from None
        return cls.loads(text)


def _axis(data: dict, key: str) -> tuple[float, ...] | None:
    values = data.get(key)
    if values is None:
        return None
    if not isinstance(values, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
    ):
        raise ScenarioError(f"scenario field {key!r} must be a list of numbers")
    return tuple(float(v) for v in values)
