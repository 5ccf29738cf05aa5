"""The consistent-Gaussian density-evolution function phi and its inverse.

For x > 0::

    phi(x) = 1 - (4 pi x)^(-1/2) * int tanh(u/2) exp(-(u - x)^2 / (4x)) du

Writing ``1 - tanh(u/2) = 2 / (1 + e^u)`` and completing the square in the
exponent gives the equivalent form::

    phi(x) = exp(-x/4) / sqrt(4 pi x) * int sech(u/2) exp(-u^2 / (4x)) du

The remaining integrand is even, lies in (0, 1] and is analytic in the strip
|Im u| < pi, so a uniform trapezoid rule converges geometrically. Working with
``log phi`` keeps full relative precision for arguments where ``phi`` itself
underflows, which density evolution reaches quickly above threshold.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

_LOG_4PI = math.log(4.0 * math.pi)
# sech(u/2) < 2 exp(-u/2) < 1e-21 beyond this
_U_MAX = 100.0


def _check_x(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise DomainError(f"phi argument must be finite and >= 0, got {x!r}")
    return x


def _sech_integral(x: float) -> tuple[float, float]:
    """Return (I, dI/dx) for I(x) = int sech(u/2) exp(-u^2/(4x)) du."""
    # Step h <= 0.5 keeps the pole-strip error below e^{-2 pi^2 / h};
    # h <= sqrt(x)/2 resolves the Gaussian factor for small x.
    h = min(0.5, 0.5 * math.sqrt(x))
    half_width = min(_U_MAX, math.sqrt(200.0 * x))
    k = int(math.ceil(half_width / h))
    u = np.arange(1, k + 1) * h
    w = np.exp(-u * u / (4.0 * x)) / np.cosh(0.5 * u)
    total = h * (1.0 + 2.0 * w.sum())
    deriv = h * 2.0 * (w * (u * u)).sum() / (4.0 * x * x)
    return float(total), float(deriv)


def log_phi(x: float) -> float:
    """Natural log of phi(x); finite for every finite x >= 0."""
    x = _check_x(x)
    if x == 0.0:
        return 0.0
    integral, _ = _sech_integral(x)
    return -0.25 * x - 0.5 * (_LOG_4PI + math.log(x)) + math.log(integral)


def _log_phi_and_slope(x: float) -> tuple[float, float]:
    integral, d_integral = _sech_integral(x)
    value = -0.25 * x - 0.5 * (_LOG_4PI + math.log(x)) + math.log(integral)
    slope = -0.25 - 0.5 / x + d_integral / integral
    return value, slope


def phi(x: float) -> float:
    """Evaluate phi(x). Equals 1 exactly at x = 0 and decreases strictly."""
    return math.exp(log_phi(x))


def phi_bounds(x: float) -> tuple[float, float]:
    """Closed-form lower and upper bounds on phi(x) for x > 0.

    The lower bound is only informative (positive) for x > 3.
    """
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"phi_bounds requires x > 0, got {x!r}")
    lead = math.sqrt(math.pi / x) * math.exp(-0.25 * x)
    return lead * (1.0 - 3.0 / x), lead * (1.0 - 1.0 / (7.0 * x))


def log_phi_inv(log_y: float, xtol: float = 1e-12) -> float:
    """Solve log_phi(x) = log_y for x >= 0.

    Safeguarded Newton iteration inside a bracket that is expanded by
    doubling; the bracket always contains the unique root because phi is
    strictly decreasing.
    """
    log_y = float(log_y)
    if math.isnan(log_y) or log_y > 0.0:
        raise DomainError(f"phi_inv requires y in (0, 1], got log y = {log_y!r}")
    if log_y == 0.0:
        return 0.0
    if log_y == -math.inf:
        raise DomainError("phi_inv requires y > 0")

    lo, hi = 0.0, 1.0
    while log_phi(hi) > log_y:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise DomainError(f"log y = {log_y!r} is out of range")

    # phi(x) ~ exp(-x/4) for large x, so 4*(-log y) is a good first guess
    x = min(max(-4.0 * log_y, 0.5 * (lo + hi)), hi) if hi > 4.0 else 0.5 * (lo + hi)
    for _ in range(200):
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
        value, slope = _log_phi_and_slope(x)
        resid = value - log_y
        if resid > 0.0:
            lo = x
        else:
            hi = x
        step = resid / slope
        x_new = x - step
        if abs(step) <= xtol * max(1.0, x) or hi - lo <= xtol * max(1.0, x):
            return x_new if lo <= x_new <= hi else x
        x = x_new
    return 0.5 * (lo + hi)


def phi_inv(y: float) -> float:
    """Inverse of phi on (0, 1]; phi_inv(1) == 0."""
    y = float(y)
    if not (0.0 < y <= 1.0):
        raise DomainError(f"phi_inv requires y in (0, 1], got {y!r}")
    if y == 1.0:
        return 0.0
    return log_phi_inv(math.log(y))
