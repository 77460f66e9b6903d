"""Diffraction-limited link budget and range scaling."""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

from .errors import DomainError, PieError
from .model import OperatingPoint, coherent_detection_limit
from .optimize import optimize_format_order

# SI defining constants
PLANCK = 6.62607015e-34  # J s
SPEED_OF_LIGHT = 299792458.0  # m / s
ASTRONOMICAL_UNIT = 1.495978707e11  # m

CLOSED_FORM_RTOL = 1e-12


class NearFieldWarning(UserWarning):
    """Channel transmission above one: the far-field formula does not apply."""


@dataclass(frozen=True)
class LinkGeometry:
    """Transmitter, receiver and channel parameters (SI units).

    ``eta_rx`` is the lumped receiver efficiency (optics and detector).
    """

    p_tx: float
    d_tx: float
    d_rx: float
    f_c: float
    r: float
    eta_rx: float
    bandwidth: float

    def __post_init__(self):
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise DomainError(f"{field.name} must be finite and > 0, got {value!r}")
        if self.eta_rx > 1:
            raise DomainError(f"eta_rx must be <= 1, got {self.eta_rx!r}")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    def replace(self, **changes) -> "LinkGeometry":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class LinkAnalysis:
    eta_ch: float
    n_a: float
    n_b: float
    pie_star: float
    rate: float
    t_s_star: float
    m_star: int
    n_s_star: float
    background_counts_per_frame: float
    coherent_pie: float
    coherent_rate: float
    near_field: bool = False
    converged: bool = True
    capped: bool = False
    coherence_time: float | None = None

    @property
    def within_coherence_time(self) -> bool | None:
        if self.coherence_time is None:
            return None
        return self.t_s_star < self.coherence_time


def _diffraction_transmission(geom: LinkGeometry) -> float:
    return (
        geom.f_c**2 * math.pi**2 * geom.d_rx**2 * geom.d_tx**2
        / (16.0 * SPEED_OF_LIGHT**2)
        / geom.r**2
    )


def channel_transmission(geom: LinkGeometry) -> float:
    """Far-field diffraction transmission between two circular apertures.

    Values above one are returned unclamped with a NearFieldWarning.
    """
    eta = _diffraction_transmission(geom)
    if eta > 1:
        warnings.warn(
            f"channel transmission {eta:.3g} > 1: near-field geometry", NearFieldWarning,
            stacklevel=2,
        )
    return eta


def detected_photon_flux(geom: LinkGeometry) -> float:
    """Detected signal photons per second."""
    return geom.eta_rx * _diffraction_transmission(geom) * geom.p_tx / (PLANCK * geom.f_c)


def detected_signal_photons(geom: LinkGeometry) -> float:
    """Mean detected signal photons per slot, n_a."""
    return detected_photon_flux(geom) / geom.bandwidth


def closed_form_rate(geom: LinkGeometry, pie: float) -> float:
    """Information rate with range and apertures written out explicitly."""
    return (
        geom.f_c * geom.p_tx * pie / geom.r**2
        * math.pi**2 * geom.eta_rx * geom.d_rx**2 * geom.d_tx**2
        / (16.0 * PLANCK * SPEED_OF_LIGHT**2)
    )


def optimal_symbol_duration(geom: LinkGeometry, n_s_star: float) -> float:
    """Time needed to collect ``n_s_star`` detected signal photons."""
    if not math.isfinite(n_s_star) or n_s_star <= 0:
        raise DomainError(f"n_s_star must be finite and > 0, got {n_s_star!r}")
    return n_s_star / detected_photon_flux(geom)


def information_rate(
    geom: LinkGeometry,
    n_b: float,
    m_cap: int | None = None,
    coherence_time: float | None = None,
) -> LinkAnalysis:
    """Optimise the format at the link's operating point and report the rate.

    Raises PieError if the two equivalent rate expressions disagree.
    """
    eta_ch = channel_transmission(geom)
    near_field = eta_ch > 1

    n_a = detected_signal_photons(geom)
    result = optimize_format_order(OperatingPoint(n_a, n_b), m_cap)
    rate = geom.bandwidth * n_a * result.pie_star
    check = closed_form_rate(geom, result.pie_star)
    if not math.isclose(rate, check, rel_tol=CLOSED_FORM_RTOL, abs_tol=0.0):
        raise PieError(f"rate mismatch: B*n_a*PIE={rate!r} vs closed form {check!r}")
    coherent = coherent_detection_limit(n_b)
    return LinkAnalysis(
        eta_ch=eta_ch,
        n_a=n_a,
        n_b=n_b,
        pie_star=result.pie_star,
        rate=rate,
        t_s_star=optimal_symbol_duration(geom, result.n_s_star),
        m_star=result.m_star,
        n_s_star=result.n_s_star,
        background_counts_per_frame=result.m_star * n_b,
        coherent_pie=coherent,
        coherent_rate=geom.bandwidth * n_a * coherent,
        near_field=near_field,
        converged=result.converged,
        capped=result.capped,
        coherence_time=coherence_time,
    )


def design_variable_bandwidth(
    geom_at_reference: LinkGeometry,
    n_a_target: float,
    n_b: float,
    r_new: float,
    bandwidth_cap: float | None = None,
    m_cap: int | None = None,
) -> tuple[LinkGeometry, LinkAnalysis]:
    """Move the link to ``r_new`` and rescale B so that n_a stays at target.

    The operating point, hence M* and PIE*, is range independent; slot and
    symbol durations grow as r**2 and the rate falls as r**-2.
    """
    if not math.isfinite(n_a_target) or n_a_target <= 0:
        raise DomainError(f"n_a_target must be finite and > 0, got {n_a_target!r}")
    moved = geom_at_reference.replace(r=r_new)
    new_bandwidth = moved.bandwidth * detected_signal_photons(moved) / n_a_target
    if bandwidth_cap is not None and new_bandwidth > bandwidth_cap:
        raise DomainError(
            f"required bandwidth {new_bandwidth:.6g} Hz exceeds cap {bandwidth_cap:.6g} Hz"
        )
    geom = moved.replace(bandwidth=new_bandwidth)
    return geom, information_rate(geom, n_b, m_cap)
