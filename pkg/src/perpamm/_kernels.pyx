# cython: language_level=3, boundscheck=False, cdivision=True
"""Compiled curve kernels: the fast backend.

Mirrors ``_kernels_py`` operation-for-operation so results are bit-identical
to the pure-Python fallback (same IEEE-754 doubles, same libm exp).
"""

from libc.math cimport exp, fabs

BACKEND = "cython"


cpdef double deviation(double u, double k_delta, double c_d):
    """Parabolic price deviation in percent: k_delta * u^2 + c_d."""
    return k_delta * u * u + c_d


cpdef double base_fee(double u, double k_b, double c_b):
    """Parabolic annualized base borrowing fee in percent: k_b * u^2 + c_b."""
    return k_b * u * u + c_b


cpdef double dynamic_fee(double sigma, double m_max, double steepness):
    """Sigmoid annualized dynamic fee: m_max * (1 - e^{-k*s}) / (1 + e^{-k*s})."""
    cdef double e = exp(-steepness * sigma)
    return m_max * (1.0 - e) / (1.0 + e)


cpdef double skew(double long_oi, double short_oi, double pool_value):
    """Market skew in percent: 100 * |L - S| / P."""
    return 100.0 * fabs(long_oi - short_oi) / pool_value


cpdef double utilization(double reserved, double pool_value):
    """Pool utilization in percent: 100 * reserved / P."""
    return 100.0 * reserved / pool_value
