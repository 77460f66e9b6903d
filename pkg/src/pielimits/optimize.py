"""Maximisation of the PIE bound over the format order and symbol energy."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize as sopt

from .errors import DomainError, PieError
from .kernel import LOG2E
from .model import OperatingPoint, bound_nats_per_symbol, pie_bound_vanishing_signal

log = logging.getLogger(__name__)

# Overflow guard on the format order.
MAX_ORDER = 2**63 - 1
# Two orders whose PIE agrees to this relative tolerance count as tied; the
# smaller one wins.
TIE_RTOL = 1e-12
# Brackets up to this size are scanned exhaustively if the neighbour
# certificate fails after ternary search.
_FALLBACK_SCAN_LIMIT = 1 << 22

VANISHING_NS_RANGE = (1e-6, 1e2)
VANISHING_PRESCAN_POINTS = 200
VANISHING_NS_RTOL = 1e-8


@dataclass(frozen=True)
class PieResult:
    """Optimised bound at one operating point.

    ``n_s_star`` is exactly ``m_star * n_a``. ``converged`` is False only if
    the overflow guard stopped the search; ``capped`` marks a user cap on M
    that bound the optimum.
    """

    n_a: float
    n_b: float
    pie_star: float
    m_star: int
    n_s_star: float
    converged: bool = True
    evaluations: int = 0
    capped: bool = False
    m_continuous: float | None = None

    @property
    def log2_m_star(self) -> float:
        return math.log2(self.m_star)


class VanishingOptimum(NamedTuple):
    pie_star: float
    n_s_star: float


class _Objective:
    """Cached PIE(M) at a fixed operating point."""

    def __init__(self, n_a: float, n_b: float):
        self.n_a = n_a
        self.n_b = n_b
        self.cache: dict[int, float] = {}

    def __call__(self, m: int) -> float:
        value = self.cache.get(m)
        if value is None:
            n_s = m * self.n_a
            value = bound_nats_per_symbol(n_s, self.n_b, m) / n_s * LOG2E
            self.cache[m] = value
        return value


def _check_point(point: OperatingPoint) -> None:
    if not point.n_a > 0:
        raise DomainError(f"n_a must be > 0 to optimise M, got {point.n_a!r}")


def _smallest_tied(f: _Objective, lo: int, peak: int, best: float) -> int:
    """Smallest M in [lo, peak] with f(M) >= best*(1 - TIE_RTOL); f rises on it."""
    threshold = best * (1.0 - TIE_RTOL)
    if f(lo) >= threshold:
        return lo
    a, b = lo, peak
    while b - a > 1:
        mid = (a + b) // 2
        if f(mid) >= threshold:
            b = mid
        else:
            a = mid
    return b


def _result(point, f, m_star, converged, capped):
    return PieResult(
        n_a=point.n_a,
        n_b=point.n_b,
        pie_star=f(m_star),
        m_star=m_star,
        n_s_star=m_star * point.n_a,
        converged=converged,
        evaluations=len(f.cache),
        capped=capped,
    )


def optimize_format_order(
    point: OperatingPoint,
    m_cap: int | None = None,
    *,
    continuous: bool = False,
) -> PieResult:
    """Integer format order maximising the PIE bound at ``point``.

    Doubles M until the bound has failed to improve twice in a row, runs a
    ternary search inside the bracket around the best power of two, then
    checks the +-1 neighbours (falling back to a scan if that check fails).
    With ``continuous=True`` the real-valued maximiser is attached as a
    diagnostic in ``m_continuous``.
    """
    _check_point(point)
    if m_cap is not None and m_cap < 1:
        raise DomainError(f"m_cap must be >= 1, got {m_cap!r}")
    cap = MAX_ORDER if m_cap is None else min(int(m_cap), MAX_ORDER)
    f = _Objective(point.n_a, point.n_b)

    best_m, prev, stalls, m = 1, f(1), 0, 1
    hit_limit = False
    while stalls < 2:
        if m >= cap:
            hit_limit = True
            break
        m = min(2 * m, cap)
        value = f(m)
        if value > f(best_m):
            best_m = m
        stalls = stalls + 1 if value <= prev else 0
        prev = value

    lo = max(1, best_m // 2)
    hi = min(2 * best_m, cap)
    a, b = lo, hi
    while b - a > 2:
        third = (b - a) // 3
        m1, m2 = a + third, b - third
        if f(m1) < f(m2):
            a = m1 + 1
        else:
            b = m2
    peak = max(range(a, b + 1), key=lambda k: (f(k), -k))

    certified = (peak == 1 or f(peak - 1) <= f(peak)) and (
        peak == cap or f(peak + 1) <= f(peak)
    )
    if not certified:
        # happens where PIE(M) is flat to rounding, e.g. M ~ 1e9
        log.debug("neighbour certificate failed at n_a=%g n_b=%g; rescanning",
                  point.n_a, point.n_b)
        if hi - lo <= _FALLBACK_SCAN_LIMIT:
            peak = max(range(lo, hi + 1), key=lambda k: (f(k), -k))
        else:
            while peak < cap and f(peak + 1) > f(peak):
                peak += 1
            while peak > 1 and f(peak - 1) > f(peak):
                peak -= 1
        lo = min(lo, peak)

    m_star = _smallest_tied(f, lo, peak, f(peak))
    capped = hit_limit and m_cap is not None and m_star == cap and cap < MAX_ORDER
    converged = not (hit_limit and cap == MAX_ORDER and m_star == cap)
    result = _result(point, f, m_star, converged, capped)
    if continuous:
        result = _with_continuous(result, f)
    return result


def _with_continuous(result: PieResult, f: _Objective) -> PieResult:
    n_a, n_b = result.n_a, result.n_b

    def neg_pie(log_m):
        m = math.exp(log_m)
        return -bound_nats_per_symbol(m * n_a, n_b, m) / (m * n_a) * LOG2E

    lo = math.log(max(1, result.m_star - 1))
    hi = math.log(result.m_star + 1)
    opt = sopt.minimize_scalar(neg_pie, bounds=(lo, hi), method="bounded",
                               options={"xatol": 1e-12})
    return PieResult(**{**result.__dict__, "m_continuous": math.exp(opt.x),
                        "evaluations": len(f.cache) + opt.nfev})


def optimize_format_order_exhaustive(point: OperatingPoint, m_max: int) -> PieResult:
    """Reference scan over every M in [1, m_max] with the same tie rule."""
    _check_point(point)
    f = _Objective(point.n_a, point.n_b)
    values = [f(m) for m in range(1, m_max + 1)]
    threshold = max(values) * (1.0 - TIE_RTOL)
    m_star = next(m for m, v in enumerate(values, start=1) if v >= threshold)
    return _result(point, f, m_star, True, False)


def is_locally_optimal(result: PieResult, m_cap: int | None = None) -> bool:
    """Re-evaluate the +-1 neighbour certificate of a result from scratch."""
    f = _Objective(result.n_a, result.n_b)
    here = f(result.m_star)
    if here != result.pie_star:
        return False
    slack = 1.0 - TIE_RTOL
    if result.m_star > 1 and here < f(result.m_star - 1) * slack:
        return False
    at_cap = m_cap is not None and result.m_star >= m_cap
    if not at_cap and here < f(result.m_star + 1) * slack:
        return False
    return True


def optimize_vanishing_signal(n_b: float) -> VanishingOptimum:
    """Best PIE over symbol energy in the n_a -> 0 limit.

    A 200-point log-spaced prescan of n_s over [1e-6, 1e2] locates the peak;
    golden-section search then refines n_s to 1e-8 relative.
    """
    if not math.isfinite(n_b) or n_b <= 0:
        raise DomainError(f"n_b must be finite and > 0, got {n_b!r}")
    grid = np.geomspace(*VANISHING_NS_RANGE, VANISHING_PRESCAN_POINTS)
    values = np.array([pie_bound_vanishing_signal(ns, n_b) for ns in grid])
    i = int(np.argmax(values))
    turns = np.count_nonzero(np.diff(np.sign(np.diff(values))) != 0)
    if turns > 1:
        log.warning("prescan at n_b=%g is not unimodal (%d turns)", n_b, turns)
    if i == 0 or i == len(grid) - 1:
        log.warning("vanishing-signal optimum at n_b=%g sits on the n_s range edge", n_b)
        return VanishingOptimum(float(values[i]), float(grid[i]))

    opt = sopt.minimize_scalar(
        lambda ns: -pie_bound_vanishing_signal(ns, n_b),
        bracket=(grid[i - 1], grid[i], grid[i + 1]),
        method="golden",
        options={"xtol": VANISHING_NS_RTOL / 2},
    )
    n_s = float(opt.x)
    return VanishingOptimum(pie_bound_vanishing_signal(n_s, n_b), n_s)


@dataclass(frozen=True)
class CellError:
    """Marker stored in a sweep cell whose optimisation raised."""

    message: str


@dataclass(frozen=True)
class SweepGrid:
    n_a_axis: tuple[float, ...]
    n_b_axis: tuple[float, ...]
    cells: tuple[tuple[PieResult | CellError, ...], ...]

    def __post_init__(self):
        if len(self.cells) != len(self.n_a_axis) or any(
            len(row) != len(self.n_b_axis) for row in self.cells
        ):
            raise DomainError("cell matrix does not match axis lengths")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.n_a_axis), len(self.n_b_axis)

    def iter_cells(self):
        """Yield (n_a, n_b, cell) row-major over n_a then n_b."""
        for n_a, row in zip(self.n_a_axis, self.cells):
            for n_b, cell in zip(self.n_b_axis, row):
                yield n_a, n_b, cell

    @property
    def failures(self) -> list[tuple[int, int, CellError]]:
        return [
            (i, j, cell)
            for i, row in enumerate(self.cells)
            for j, cell in enumerate(row)
            if isinstance(cell, CellError)
        ]

    def panel(self, field: str) -> np.ndarray:
        """Matrix of one PieResult attribute (NaN where a cell failed)."""
        out = np.full(self.shape, np.nan)
        for i, row in enumerate(self.cells):
            for j, cell in enumerate(row):
                if isinstance(cell, PieResult):
                    out[i, j] = getattr(cell, field)
        return out


def default_axis(points: int = 50) -> np.ndarray:
    """Default log-spaced axis over [1e-8, 1] used for both n_a and n_b."""
    return np.geomspace(1e-8, 1.0, points)


def check_axis(name: str, axis: Sequence[float]) -> tuple[float, ...]:
    values = tuple(float(v) for v in axis)
    if not values:
        raise DomainError(f"{name} is empty")
    if any(not math.isfinite(v) or v <= 0 for v in values):
        raise DomainError(f"{name} must contain finite positive values")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise DomainError(f"{name} must be strictly increasing")
    return values


def _sweep_row(args) -> tuple[PieResult | CellError, ...]:
    n_a, n_b_axis, m_cap = args
    row = []
    for n_b in n_b_axis:
        try:
            row.append(optimize_format_order(OperatingPoint(n_a, n_b), m_cap))
        except PieError as exc:
            row.append(CellError(str(exc)))
    return tuple(row)


def sweep(
    n_a_axis: Sequence[float],
    n_b_axis: Sequence[float],
    m_cap: int | None = None,
    workers: int | None = None,
) -> SweepGrid:
    """Optimise every (n_a, n_b) cell of a grid.

    Rows are farmed out to ``workers`` processes (default: CPU count) and
    reassembled by index, so the result does not depend on scheduling.
    """
    a_axis = check_axis("n_a axis", n_a_axis)
    b_axis = check_axis("n_b axis", n_b_axis)
    jobs = [(n_a, b_axis, m_cap) for n_a in a_axis]
    workers = workers or os.cpu_count() or 1
    if workers == 1 or len(jobs) == 1:
        rows = [_sweep_row(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    return SweepGrid(a_axis, b_axis, tuple(rows))
