"""Lower bounds on check-output LLR growth and the SNR thresholds they imply.

All bounds are stated for a d_v-regular ensemble whose check side may be
irregular. ``delta`` is the correction factor 1 - 3/m from the lower bound
on phi evaluated at the *next* mean m; it is either passed explicitly or
resolved with one substitution of the density-evolution prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .de_engine import ChannelCondition, EnsembleSpec, check_output_mean
from .errors import BoundNotApplicableError, ConvergenceError, DomainError, ValidationError
from .gauss_phi import phi

# below this argument the bounds on phi are loose; curve points are flagged
BOUND_REGIME_X = 8.0


@dataclass(frozen=True)
class GrowthQuery:
    """Target growth rate ``r`` (e.g. a trapping set's spectral radius)."""

    ens: EnsembleSpec
    r: float

    def __post_init__(self):
        if not (0.0 <= self.r < self.ens.d_v - 1):
            raise ValidationError(f"r must lie in [0, {self.ens.d_v - 1}), got {self.r!r}")

    @property
    def epsilon(self) -> float:
        return self.ens.d_v - 1 - self.r


def lemma1_unique_y(alpha: float, x: float, beta: float) -> float:
    """The unique y > -x with y + beta*ln(1 + y/x) = alpha."""
    if x <= 0 or beta <= 0:
        raise DomainError("x and beta must be positive")
    if alpha == 0:
        return 0.0
    # substitute y = x*(e^s - 1); g(s) = x*(e^s - 1) + beta*s is increasing on all of R
    def g(s: float) -> float:
        return x * math.expm1(s) + beta * s - alpha

    lo, hi = -1.0, 1.0
    while g(lo) > 0:
        lo *= 2.0
    while g(hi) < 0:
        hi *= 2.0
    s = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return x * math.expm1(s)


def lemma2_lower_bound(x: float, alpha: float, beta: float) -> float:
    """x + alpha / (1 + beta/x): lower bound on m given m + beta ln m > x + beta ln x + alpha."""
    if x <= 0 or beta <= 0:
        raise DomainError("x and beta must be positive")
    return x + alpha / (1.0 + beta / x)


def _delta_from_mean(m: float) -> float:
    if m <= 3.0:
        raise BoundNotApplicableError(f"next mean {m:.6g} <= 3 leaves delta = 1 - 3/m non-positive")
    return 1.0 - 3.0 / m


def _resolve_deltas(x: float, ens: EnsembleSpec, delta: float | None) -> list[float]:
    """One delta per check degree in ``ens.rho``."""
    if delta is not None:
        if not (0.0 < delta <= 1.0):
            raise DomainError(f"delta must lie in (0, 1], got {delta!r}")
        return [delta] * len(ens.rho)
    if ens.is_regular:
        return [_delta_from_mean(check_output_mean(x, ens.d_c))]
    return [_delta_from_mean(check_output_mean(x, j)) for j, _ in ens.rho]


def _penalty(x: float, ens: EnsembleSpec, deltas: Sequence[float]) -> float:
    """sum_j rho_j ln{((j-1)/delta_j)(1 - 1/(7x))} / (1 + 2/x)."""
    shrink = 1.0 - 1.0 / (7.0 * x)
    total = math.fsum(frac * math.log((j - 1) / d * shrink) for (j, frac), d in zip(ens.rho, deltas))
    return total / (1.0 + 2.0 / x)


def growth_lower_bound_step(
    m_prev: float, ens: EnsembleSpec, ch: ChannelCondition, delta: float | None = None
) -> float:
    """Lower bound on the next DE mean given the previous one.

    Raises :class:`BoundNotApplicableError` when (d_r - 1) * phi(x) >= 1 or
    when the self-consistent delta is not positive.
    """
    if m_prev <= 0:
        raise DomainError("m_prev must be positive")
    x = ch.m_lambda + (ens.d_v - 1) * m_prev
    if (ens.d_r - 1) * phi(x) >= 1.0:
        raise BoundNotApplicableError(
            f"(d_r - 1) * phi(x) >= 1 at x = {x:.6g}; truncated binomial bound does not hold"
        )
    deltas = _resolve_deltas(x, ens, delta)
    return x - 4.0 * _penalty(x, ens, deltas)


def snr_threshold_breakout(ens: EnsembleSpec, delta: float = 1.0, rate: float | None = None) -> float:
    """Eb/N0 (dB) above which growth by d_v - 1 per iteration is guaranteed."""
    if not (0.0 < delta <= 1.0):
        raise DomainError(f"delta must lie in (0, 1], got {delta!r}")
    rate = ens.rate if rate is None else rate
    level = math.fsum(frac * math.log((j - 1) / delta) for j, frac in ens.rho)
    if level <= 0:
        return -math.inf
    return 10.0 * math.log10(level / rate)


def _growth_margin(m_prev: float, q: GrowthQuery, ch: ChannelCondition, delta: float | None) -> float:
    """R Eb/N0 minus the right-hand side of the rate-r growth condition.

    Positive means growth by at least ``q.r`` is guaranteed; -inf when the
    self-consistent delta is undefined.
    """
    ens = q.ens
    x = ch.m_lambda + (ens.d_v - 1) * m_prev
    try:
        deltas = _resolve_deltas(x, ens, delta)
    except BoundNotApplicableError:
        return -math.inf
    return ch.rate * ch.ebn0 - (_penalty(x, ens, deltas) - q.epsilon * m_prev / 4.0)


@dataclass(frozen=True)
class CurvePoint:
    m_prev: float
    ebn0_db: float | None
    # False when the smallest argument x is below the bound's accurate regime
    in_bound_regime: bool
    # "ok", "no_solution" (fails even at hi_db) or "below_bracket" (holds at lo_db)
    status: str = "ok"


def snr_llr_threshold_curve(
    q: GrowthQuery,
    m_grid: Sequence[float],
    rate: float | None = None,
    delta: float | None = None,
    lo_db: float = -10.0,
    hi_db: float = 30.0,
    tol_db: float = 1e-3,
) -> list[CurvePoint]:
    """Minimum Eb/N0 at each incoming mean for growth faster than ``q.r``.

    Points without a crossing inside [lo_db, hi_db] have ``ebn0_db=None``
    and a ``status`` saying on which side the crossing lies.
    """
    rate = q.ens.rate if rate is None else rate
    out = []
    for m in m_grid:
        if m <= 0:
            raise DomainError("m_grid entries must be positive")

        def ok(db: float) -> bool:
            return _growth_margin(m, q, ChannelCondition(db, rate), delta) > 0

        if not ok(hi_db):
            out.append(CurvePoint(m, None, False, "no_solution"))
            continue
        lo, hi = lo_db, hi_db
        if ok(lo):
            out.append(CurvePoint(m, None, False, "below_bracket"))
            continue
        while hi - lo > tol_db:
            mid = 0.5 * (lo + hi)
            if ok(mid):
                hi = mid
            else:
                lo = mid
        x = ChannelCondition(hi, rate).m_lambda + (q.ens.d_v - 1) * m
        out.append(CurvePoint(m, hi, x >= BOUND_REGIME_X))
    return out


def required_mean_for_growth(
    q: GrowthQuery,
    ebn0_db: float,
    rate: float | None = None,
    delta: float | None = None,
    m_max: float = 1e6,
    rtol: float = 1e-9,
) -> float:
    """Smallest incoming mean at which growth faster than ``q.r`` is guaranteed.

    Returns 0 when the condition already holds for vanishing means. Raises
    :class:`ConvergenceError` if it fails all the way up to ``m_max``.
    """
    rate = q.ens.rate if rate is None else rate
    ch = ChannelCondition(ebn0_db, rate)

    def ok(m: float) -> bool:
        return _growth_margin(m, q, ch, delta) > 0

    lo = 1e-9
    if ok(lo):
        return 0.0
    hi = 1.0
    while not ok(hi):
        lo = hi
        hi *= 2.0
        if hi > m_max:
            raise ConvergenceError(f"growth rate {q.r} unreachable for m <= {m_max:g} at {ebn0_db} dB")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
