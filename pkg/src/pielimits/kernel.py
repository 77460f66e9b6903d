"""Special functions and binary information measures.

Everything here is a pure function of its arguments. Natural logarithms are
used internally; the public divergence is returned in bits.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, InfiniteDivergenceError

LOG2E = 1.0 / math.log(2.0)

# Halley steps stop once the update is below this fraction of |w|; with cubic
# convergence the iterate after that step is exact to rounding.
_W_REL_TOL = 1e-12
_W_MAX_ITER = 50


def _w_initial_guess(x: np.ndarray) -> np.ndarray:
    guess = np.log1p(x)
    small = x < 0.5
    guess[small] = x[small] * (1.0 - x[small])
    big = x > math.e
    if np.any(big):
        lx = np.log(x[big])
        guess[big] = lx - np.log(lx)
    return guess


def lambert_w0(x):
    """Principal branch of the Lambert W function on ``x >= 0``.

    Accepts a scalar or an array; returns the same shape (a float for scalar
    input). Halley iteration on ``w*exp(w) - x`` below ``x = e`` and on the
    overflow-free form ``w + log(w) - log(x)`` above it.

    >>> round(lambert_w0(math.e), 12)
    1.0
    """
    arr = np.array(x, dtype=float, ndmin=1)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"lambert_w0 requires finite x, got {x!r}")
    if np.any(arr < 0):
        raise DomainError(f"lambert_w0 requires x >= 0, got {x!r}")

    w = _w_initial_guess(arr)
    low = arr <= math.e
    high = ~low
    x_lo, w_lo = arr[low], w[low]
    log_x_hi, w_hi = np.log(arr[high]), w[high]

    for _ in range(_W_MAX_ITER):
        ew = np.exp(w_lo)
        f = w_lo * ew - x_lo
        wp1 = w_lo + 1.0
        dw_lo = f / (ew * wp1 - (w_lo + 2.0) * f / (2.0 * wp1))
        w_lo = w_lo - dw_lo

        g = w_hi + np.log(w_hi) - log_x_hi
        g1 = 1.0 + 1.0 / w_hi
        g2 = -1.0 / (w_hi * w_hi)
        dw_hi = g / (g1 - g * g2 / (2.0 * g1))
        w_hi = w_hi - dw_hi

        done_lo = np.all(np.abs(dw_lo) <= _W_REL_TOL * np.abs(w_lo))
        done_hi = np.all(np.abs(dw_hi) <= _W_REL_TOL * np.abs(w_hi))
        if done_lo and done_hi:
            break

    w[low] = w_lo
    w[high] = w_hi
    if np.ndim(x) == 0:
        return float(w[0])
    return w.reshape(np.shape(x))


def lambert_w0_asymptotic(x: float) -> float:
    """Leading terms ``log x - log log x`` of W at large argument."""
    if not math.isfinite(x) or x <= math.e:
        raise DomainError(f"asymptotic expansion requires finite x > e, got {x!r}")
    lx = math.log(x)
    return lx - math.log(lx)


def _check_probability(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")


def binary_kl_nats(p: float, q: float, log1m_p: float, log1m_q: float) -> float:
    """D(p || q) in nats, with the complements supplied as logarithms.

    Passing ``log(1-p)`` and ``log(1-q)`` directly lets callers that know them
    in closed form (``1 - p = exp(-mu)``) avoid cancellation when p, q are
    close to 1 or to each other.
    """
    if p > 0.0:
        if q <= 0.0:
            raise InfiniteDivergenceError(f"D(p||q) infinite: p={p!r} > 0 but q=0")
        head = p * math.log(p / q)
    else:
        head = 0.0
    one_minus_p = math.exp(log1m_p)
    if one_minus_p > 0.0:
        if log1m_q == -math.inf:
            raise InfiniteDivergenceError(f"D(p||q) infinite: p={p!r} < 1 but q=1")
        tail = one_minus_p * (log1m_p - log1m_q)
    else:
        tail = 0.0
    return max(head + tail, 0.0)


def binary_relative_entropy(
    p: float,
    q: float,
    *,
    p_complement: float | None = None,
    q_complement: float | None = None,
) -> float:
    """Relative entropy between Bernoulli(p) and Bernoulli(q), in bits.

    Optional ``p_complement``/``q_complement`` give 1-p and 1-q when the caller
    has them more accurately than ``1 - p`` would be.

    Raises InfiniteDivergenceError when q puts zero mass where p does not.
    """
    _check_probability("p", p)
    _check_probability("q", q)
    pc = 1.0 - p if p_complement is None else p_complement
    qc = 1.0 - q if q_complement is None else q_complement
    _check_probability("p_complement", pc)
    _check_probability("q_complement", qc)
    log_p = _accurate_log(p, pc, p_complement is not None)
    log_q = _accurate_log(q, qc, q_complement is not None)
    log1m_p = _accurate_log(pc, p, p_complement is None)
    log1m_q = _accurate_log(qc, q, q_complement is None)

    head = 0.0
    if p > 0.0:
        if q <= 0.0:
            raise InfiniteDivergenceError(f"D(p||q) infinite: p={p!r} > 0 but q=0")
        head = p * (log_p - log_q)
    tail = 0.0
    if pc > 0.0:
        if qc <= 0.0:
            raise InfiniteDivergenceError(f"D(p||q) infinite: p={p!r} < 1 but q=1")
        tail = pc * (log1m_p - log1m_q)
    return max(head + tail, 0.0) * LOG2E


def _accurate_log(value: float, complement: float, complement_exact: bool) -> float:
    """log(value), via log1p(-complement) when that is the more accurate route."""
    if value <= 0.0:
        return -math.inf
    if complement_exact and complement < 0.5:
        return math.log1p(-complement)
    return math.log(value)
