"""Geiger-detection channel model and closed-form PIE expressions.

All PIE values are in bits per detected signal photon. Internally every
divergence is evaluated in nats with the complement probabilities carried as
exact logarithms, so background levels down to ~1e-12 photons/slot keep full
relative precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InfiniteDivergenceError
from .kernel import LOG2E, lambert_w0

# Per-photon normalisation is refused below this symbol energy.
MIN_SYMBOL_PHOTONS = 1e-12


@dataclass(frozen=True)
class OperatingPoint:
    """Mean detected signal (``n_a``) and background (``n_b``) photons per slot."""

    n_a: float
    n_b: float

    def __post_init__(self):
        for name in ("n_a", "n_b"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")

    @property
    def snr(self) -> float:
        return self.n_a / self.n_b if self.n_b > 0 else math.inf


@dataclass(frozen=True)
class ModulationFormat:
    """Format order M and the photon number carried by one symbol."""

    order_m: int
    n_s: float

    def __post_init__(self):
        if int(self.order_m) != self.order_m or self.order_m < 1:
            raise DomainError(f"order_m must be an integer >= 1, got {self.order_m!r}")
        if not math.isfinite(self.n_s) or self.n_s < 0:
            raise DomainError(f"n_s must be finite and >= 0, got {self.n_s!r}")

    @classmethod
    def from_point(cls, point: OperatingPoint, order_m: int) -> "ModulationFormat":
        return cls(order_m, order_m * point.n_a)

    @property
    def frame_slots(self) -> int:
        return self.order_m


def _check_nonneg(name: str, value: float) -> None:
    if not math.isfinite(value) or value < 0:
        raise DomainError(f"{name} must be finite and >= 0, got {value!r}")


def _check_symbol_photons(n_s: float) -> None:
    if not math.isfinite(n_s) or n_s < MIN_SYMBOL_PHOTONS:
        raise DomainError(
            f"n_s must be >= {MIN_SYMBOL_PHOTONS:g} for a per-photon bound, got {n_s!r}"
        )


def photocount_probabilities(n_s: float, n_b: float) -> tuple[float, float]:
    """Click probabilities of the signal mode and of a background-only mode."""
    _check_nonneg("n_s", n_s)
    _check_nonneg("n_b", n_b)
    return -math.expm1(-n_s - n_b), -math.expm1(-n_b)


def _kl_nats(n_s: float, n_b: float, inv_m: float) -> float:
    """D(p_c || q) in nats with q = inv_m*p_c + (1 - inv_m)*p_b.

    Uses the closed forms p_c - q = (1 - inv_m) exp(-n_b) (1 - exp(-n_s)) and
    log((1 - p_c)/(1 - q)) = -n_s - log1p(inv_m * expm1(-n_s)), so no
    difference of nearly equal probabilities is ever formed.
    """
    p_c = -math.expm1(-n_s - n_b)
    signal_excess = -math.exp(-n_b) * math.expm1(-n_s)  # p_c - p_b
    q = -math.expm1(-n_b) + inv_m * signal_excess
    gap = (1.0 - inv_m) * signal_excess
    if q <= 0.0:
        raise InfiniteDivergenceError(
            f"bound is infinite at n_s={n_s!r}, n_b={n_b!r} (no background clicks)"
        )
    head = p_c * math.log1p(gap / q)
    tail = math.exp(-n_s - n_b) * (-n_s - math.log1p(inv_m * math.expm1(-n_s)))
    return max(head + tail, 0.0)


def bound_nats_per_symbol(n_s: float, n_b: float, m: float) -> float:
    """D(p_c || q) in nats for a (possibly non-integer) format order ``m``.

    No validation; this is the inner loop of the optimizer.
    """
    if m == 1:
        return 0.0
    return _kl_nats(n_s, n_b, 1.0 / m)


def pie_bound_ns(n_s: float, n_b: float, order_m: int) -> float:
    """Relative-entropy PIE lower bound for an explicit (n_s, n_b, M) triple."""
    _check_symbol_photons(n_s)
    _check_nonneg("n_b", n_b)
    if int(order_m) != order_m or order_m < 1:
        raise DomainError(f"order_m must be an integer >= 1, got {order_m!r}")
    return bound_nats_per_symbol(n_s, n_b, order_m) / n_s * LOG2E


def pie_bound(point: OperatingPoint, fmt: ModulationFormat) -> float:
    """PIE lower bound at an operating point for a format built from it.

    ``fmt.n_s`` must equal ``fmt.order_m * point.n_a``; use
    :func:`pie_bound_ns` to fix n_s independently of n_a.
    """
    expected = fmt.order_m * point.n_a
    if not math.isclose(fmt.n_s, expected, rel_tol=1e-12, abs_tol=0.0):
        raise DomainError(
            f"format n_s={fmt.n_s!r} inconsistent with M*n_a={expected!r}"
        )
    return pie_bound_ns(fmt.n_s, point.n_b, fmt.order_m)


def pie_bound_vanishing_signal(n_s: float, n_b: float) -> float:
    """M -> infinity limit of the bound at fixed symbol energy: D(p_c||p_b)/n_s.

    Raises InfiniteDivergenceError for ``n_b == 0``, where the noiseless
    efficiency grows without limit.
    """
    _check_symbol_photons(n_s)
    _check_nonneg("n_b", n_b)
    return _kl_nats(n_s, n_b, 0.0) / n_s * LOG2E


def pie_approx_lambert(n_b: float) -> float:
    """Closed-form approximation of the optimal PIE for n_a << n_b.

    Accurate only for n_b << 1. The bracket equals (W-1)**2/W, so it is never
    negative, but for n_b > 2/e it grows again with increasing noise.
    """
    if not math.isfinite(n_b) or n_b <= 0:
        raise DomainError(f"n_b must be finite and > 0, got {n_b!r}")
    w = lambert_w0(2.0 / n_b)
    return (w - 2.0 + 1.0 / w) * LOG2E


def coherent_detection_limit(n_b: float) -> float:
    """PIE ceiling of coherent detection, reached as n_a -> 0."""
    _check_nonneg("n_b", n_b)
    return 2.0 * LOG2E / (1.0 + n_b)


def noiseless_pie(fmt: ModulationFormat) -> float:
    """log2 M: the noiseless, n_s -> 0 reference ceiling for order M."""
    return math.log2(fmt.order_m)
