"""Exact mutual information of the M-slot click/no-click channel.

The input is one of M symbols, uniformly chosen; the output is the M-bit
click pattern. Given the symbol, the signal slot clicks with probability
``p_c`` and every other slot independently with ``p_b``. The likelihood
ratio ``P(y)/P(y|x)`` depends only on whether the signal slot clicked and on
how many background slots clicked, so the 2**M-term sum collapses to
2*M binomially weighted terms.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, InfeasibleError
from .kernel import LOG2E
from .model import OperatingPoint, ModulationFormat, photocount_probabilities, pie_bound

MAX_ORDER = 10**6
BRUTE_FORCE_MAX_ORDER = 16
CERTIFY_TOL = 1e-10


@dataclass(frozen=True)
class ChannelSpec:
    order_m: int
    p_c: float
    p_b: float

    def __post_init__(self):
        if int(self.order_m) != self.order_m or not 1 <= self.order_m:
            raise DomainError(f"order_m must be an integer >= 1, got {self.order_m!r}")
        if self.order_m > MAX_ORDER:
            raise InfeasibleError(f"order_m={self.order_m} exceeds the cap {MAX_ORDER}")
        for name in ("p_c", "p_b"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
        if self.p_c < self.p_b:
            raise DomainError(f"need p_c >= p_b, got p_c={self.p_c!r} p_b={self.p_b!r}")

    @classmethod
    def from_photons(cls, order_m: int, n_s: float, n_b: float) -> "ChannelSpec":
        p_c, p_b = photocount_probabilities(n_s, n_b)
        return cls(order_m, p_c, p_b)


def _log_binomial_pmf(n: int, p: float) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    log_comb = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    if p == 0.0:
        out = np.full(n + 1, -np.inf)
        out[0] = 0.0
        return out
    if p == 1.0:
        out = np.full(n + 1, -np.inf)
        out[n] = 0.0
        return out
    return log_comb + k * math.log(p) + (n - k) * math.log1p(-p)


def exact_mutual_information(spec: ChannelSpec) -> float:
    """I(X;Y) in bits per symbol, to machine precision.

    Conditioned on symbol 0, let s be the signal-slot bit and k the number of
    background clicks. With ``lam = p_c(1-p_b) / ((1-p_c) p_b)``::

        s=1: P(y)/P(y|0) = (k + 1 + (M-k-1)/lam) / M
        s=0: P(y)/P(y|0) = (k*lam + M - k) / M

    and I = -E[log P(y)/P(y|0)]. Zero-probability classes are dropped before
    taking logs; the weighted sum uses compensated summation.
    """
    m, p_c, p_b = spec.order_m, spec.p_c, spec.p_b
    if m == 1 or p_c == p_b:
        return 0.0

    log_w = _log_binomial_pmf(m - 1, p_b)
    keep = np.isfinite(log_w)
    k = np.arange(m, dtype=float)[keep]
    w = np.exp(log_w[keep])
    log_m = math.log(m)
    terms = []

    if p_c > 0.0:
        # inv_lam = 0 when p_b = 0 or p_c = 1
        if p_b == 0.0 or p_c == 1.0:
            ratio = k + 1.0
        else:
            inv_lam = (1.0 - p_c) * p_b / (p_c * (1.0 - p_b))
            ratio = k + 1.0 + (m - k - 1.0) * inv_lam
        terms.append(p_c * w * (log_m - np.log(ratio)))

    if p_c < 1.0:
        if p_b == 0.0:
            ratio = np.full_like(k, float(m))  # only k = 0 survives
        else:
            lam = p_c * (1.0 - p_b) / ((1.0 - p_c) * p_b)
            ratio = k * lam + (m - k)
        terms.append((1.0 - p_c) * w * (log_m - np.log(ratio)))

    nats = math.fsum(np.concatenate(terms))
    return max(nats, 0.0) * LOG2E


def brute_force_mutual_information(spec: ChannelSpec) -> float:
    """I(X;Y) in bits by enumerating all 2**M click patterns (small M only).

    Independent of the class reduction: builds P(y|x) for every pattern and
    symbol and evaluates H(Y) - H(Y|X) directly.
    """
    m, p_c, p_b = spec.order_m, spec.p_c, spec.p_b
    if m > BRUTE_FORCE_MAX_ORDER:
        raise InfeasibleError(f"brute force limited to M <= {BRUTE_FORCE_MAX_ORDER}")
    cond = np.empty((m, 2**m))
    for col, pattern in enumerate(itertools.product((0, 1), repeat=m)):
        for x in range(m):
            prob = 1.0
            for slot, bit in enumerate(pattern):
                p = p_c if slot == x else p_b
                prob *= p if bit else 1.0 - p
            cond[x, col] = prob
    marginal = cond.mean(axis=0)

    def entropy(dist):
        dist = dist[dist > 0]
        return -math.fsum(dist * np.log2(dist))

    h_y = entropy(marginal)
    h_y_given_x = math.fsum(entropy(row) for row in cond) / m
    return h_y - h_y_given_x


@dataclass(frozen=True)
class Certificate:
    bound_bits: float
    exact_bits: float

    @property
    def margin_bits(self) -> float:
        return self.exact_bits - self.bound_bits

    @property
    def holds(self) -> bool:
        return self.margin_bits >= -CERTIFY_TOL


def certify_bound_ns(n_s: float, n_b: float, order_m: int) -> Certificate:
    """Compare n_s * PIE bound against the exact MI (both bits/symbol)."""
    point = OperatingPoint(n_s / order_m, n_b)
    return certify_bound(point, ModulationFormat(order_m, n_s))


def certify_bound(point: OperatingPoint, fmt: ModulationFormat) -> Certificate:
    spec = ChannelSpec.from_photons(fmt.order_m, fmt.n_s, point.n_b)
    exact = exact_mutual_information(spec)
    bound = pie_bound(point, fmt) * fmt.n_s
    return Certificate(bound, exact)
