"""Pure-Python curve kernels: the fallback backend.

Raw binary64 arithmetic with no validation or quantization; both live in
the calling layer. The compiled backend in ``_kernels.pyx`` performs the
same IEEE-754 operations in the same order, so the two backends agree
bit-for-bit on every input.
"""

from __future__ import annotations

import math

BACKEND = "python"


def deviation(u: float, k_delta: float, c_d: float) -> float:
    """Parabolic price deviation in percent: k_delta * u^2 + c_d."""
    return k_delta * u * u + c_d


def base_fee(u: float, k_b: float, c_b: float) -> float:
    """Parabolic annualized base borrowing fee in percent: k_b * u^2 + c_b."""
    return k_b * u * u + c_b


def dynamic_fee(sigma: float, m_max: float, steepness: float) -> float:
    """Sigmoid annualized dynamic fee: m_max * (1 - e^{-k*s}) / (1 + e^{-k*s})."""
    e = math.exp(-steepness * sigma)
    return m_max * (1.0 - e) / (1.0 + e)


def skew(long_oi: float, short_oi: float, pool_value: float) -> float:
    """Market skew in percent: 100 * |L - S| / P."""
    diff = long_oi - short_oi
    if diff < 0.0:
        diff = -diff
    return 100.0 * diff / pool_value


def utilization(reserved: float, pool_value: float) -> float:
    """Pool utilization in percent: 100 * reserved / P."""
    return 100.0 * reserved / pool_value
