"""Standard normal CDF and quantile without external dependencies.

The quantile uses Acklam's rational approximation (relative error below
1.15e-9 on its own) followed by one Halley refinement step against the
erfc-based CDF, which brings the result to machine precision for all
practical arguments.
"""

from __future__ import annotations

import math

from .errors import DomainError

__all__ = ["normal_cdf", "normal_ppf"]

# Acklam coefficients, central region |q| <= 0.425-ish (p in [0.02425, 0.97575]).
_A = (
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
)
_B = (
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
)
# Tail region coefficients.
_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
)
_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
)

_P_LOW = 0.02425
_P_HIGH = 1.0 - _P_LOW

_SQRT2 = math.sqrt(2.0)


def normal_cdf(x: float) -> float:
    """P(Z <= x) for Z ~ N(0, 1), accurate in both tails via erfc."""
    return 0.5 * math.erfc(-x / _SQRT2)


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    if p > _P_HIGH:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    )


def normal_ppf(p: float) -> float:
    """Inverse of normal_cdf on the open interval (0, 1).

    Raises DomainError at or outside the endpoints; the quantile is
    unbounded there and callers should treat that as a configuration
    problem, not as infinity.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"normal_ppf requires 0 < p < 1, got {p!r}")
    x = _acklam(p)
    # One Halley step: u = (CDF(x) - p) / pdf(x), then correct for curvature.
    e = normal_cdf(x) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)
