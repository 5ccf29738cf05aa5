"""Consistent-Gaussian density evolution for d_v-regular ensembles.

The tracked quantity is the mean check-node output LLR. Variances follow
the consistent-Gaussian convention, variance = 2 * mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConvergenceError, ValidationError
from .gauss_phi import log_phi, log_phi_inv

DEFAULT_CEILING = 1e6


@dataclass(frozen=True)
class EnsembleSpec:
    """Degree description of a variable-regular ensemble.

    ``rho`` holds edge-perspective check degree fractions as (degree, fraction)
    pairs. Use :meth:`regular` for a single check degree.
    """

    d_v: int
    rho: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if int(self.d_v) != self.d_v or self.d_v < 3:
            raise ValidationError(f"d_v must be an integer >= 3, got {self.d_v!r}")
        if not self.rho:
            raise ValidationError("rho must have at least one check degree")
        merged: dict[int, float] = {}
        for j, frac in self.rho:
            if int(j) != j or j < 2:
                raise ValidationError(f"check degree must be an integer >= 2, got {j!r}")
            if frac < 0:
                raise ValidationError(f"rho_{j} is negative")
            merged[int(j)] = merged.get(int(j), 0.0) + float(frac)
        total = sum(merged.values())
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"rho fractions sum to {total!r}, expected 1")
        object.__setattr__(self, "rho", tuple(sorted((j, f) for j, f in merged.items() if f > 0)))

    @classmethod
    def regular(cls, d_v: int, d_c: int) -> "EnsembleSpec":
        return cls(d_v, ((d_c, 1.0),))

    @classmethod
    def parse(cls, text: str) -> "EnsembleSpec":
        """Parse ``"dv:dc"``."""
        try:
            dv, dc = (int(t) for t in text.split(":"))
        except ValueError:
            raise ValidationError(f"expected 'dv:dc', got {text!r}") from None
        return cls.regular(dv, dc)

    @property
    def is_regular(self) -> bool:
        return len(self.rho) == 1

    @property
    def d_c(self) -> int:
        if not self.is_regular:
            raise ValidationError("ensemble is check-irregular; no single d_c")
        return self.rho[0][0]

    @property
    def d_r(self) -> int:
        """Maximum check degree."""
        return max(j for j, _ in self.rho)

    @property
    def rate(self) -> float:
        """Design rate 1 - d_v * sum_j rho_j / j."""
        return 1.0 - self.d_v * sum(f / j for j, f in self.rho)


@dataclass(frozen=True)
class ChannelCondition:
    """AWGN operating point for BPSK at a given Eb/N0 and code rate."""

    ebn0_db: float
    rate: float

    def __post_init__(self):
        if not (0.0 < self.rate < 1.0):
            raise ValidationError(f"rate must be in (0, 1), got {self.rate!r}")
        if not math.isfinite(self.ebn0_db):
            raise ValidationError("ebn0_db must be finite")

    @property
    def ebn0(self) -> float:
        return 10.0 ** (self.ebn0_db / 10.0)

    @property
    def sigma_sq(self) -> float:
        return 1.0 / (2.0 * self.rate * self.ebn0)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)

    @property
    def m_lambda(self) -> float:
        """Mean channel LLR, 4 R Eb/N0 (= 2 / sigma^2)."""
        return 4.0 * self.rate * self.ebn0


@dataclass
class DETrajectory:
    """Mean check-output LLRs for iterations 1..L (``means[0]`` is iteration 1)."""

    means: list[float] = field(default_factory=list)
    diverged: bool = False
    converged_to: float | None = None

    @property
    def variances(self) -> list[float]:
        return [2.0 * m for m in self.means]

    def __len__(self) -> int:
        return len(self.means)

    def first_iteration_above(self, level: float) -> int | None:
        """Smallest iteration l whose incoming mean (iteration l-1) exceeds ``level``."""
        for i, m in enumerate(self.means):
            if m > level:
                return i + 2
        return None


def _log_one_minus_pow(log_p: float, k: int) -> float:
    """log(1 - (1 - p)^k) for p = exp(log_p), accurate for tiny p."""
    p = math.exp(log_p)
    if p < 1e-200:
        # 1 - (1-p)^k = k p (1 - (k-1) p / 2 + ...)
        return math.log(k) + log_p
    return math.log(-math.expm1(k * math.log1p(-p)))


def check_output_mean(x: float, degree: int) -> float:
    """phi^{-1}(1 - [1 - phi(x)]^(degree-1)) for one check degree."""
    if x <= 0.0:
        return 0.0
    return log_phi_inv(_log_one_minus_pow(log_phi(x), degree - 1))


def de_step(m_prev: float, ens: EnsembleSpec, ch: ChannelCondition) -> float:
    """One density-evolution update of the mean check-node output LLR."""
    if m_prev < 0:
        raise ValidationError(f"m_prev must be >= 0, got {m_prev!r}")
    x = ch.m_lambda + (ens.d_v - 1) * m_prev
    return math.fsum(frac * check_output_mean(x, j) for j, frac in ens.rho)


def de_trajectory(
    ens: EnsembleSpec,
    ch: ChannelCondition,
    max_iters: int,
    ceiling: float = DEFAULT_CEILING,
    stall_rtol: float = 0.0,
) -> DETrajectory:
    """Iterate :func:`de_step` from a zero incoming mean.

    Stops early once a mean exceeds ``ceiling`` (``diverged`` is set). With
    ``stall_rtol > 0`` it also stops when successive means agree to that
    relative tolerance, recording the fixed point in ``converged_to``.
    """
    if max_iters < 1:
        raise ValidationError("max_iters must be >= 1")
    traj = DETrajectory()
    m = 0.0
    for _ in range(max_iters):
        m_next = de_step(m, ens, ch)
        traj.means.append(m_next)
        if m_next > ceiling:
            traj.diverged = True
            break
        if stall_rtol > 0 and abs(m_next - m) <= stall_rtol * max(m_next, 1e-300):
            traj.converged_to = m_next
            break
        m = m_next
    return traj


@dataclass(frozen=True)
class ThresholdResult:
    ebn0_db: float
    bracket: tuple[float, float]
    converged: bool


def decoding_threshold(
    ens: EnsembleSpec,
    tol_db: float = 0.01,
    max_iters: int = 2000,
    lo_db: float = -2.0,
    hi_db: float = 8.0,
    ceiling: float = DEFAULT_CEILING,
) -> ThresholdResult:
    """Bisect for the smallest Eb/N0 at which DE diverges to certainty.

    ``converged`` is False when the iteration budget was exhausted without
    the trajectory either diverging or settling on a fixed point at some
    probe; the returned bracket is then the best one found.
    """
    if tol_db <= 0:
        raise ValidationError("tol_db must be positive")
    rate = ens.rate

    def status(ebn0_db: float) -> bool | None:
        traj = de_trajectory(ens, ChannelCondition(ebn0_db, rate), max_iters, ceiling, stall_rtol=1e-13)
        if traj.diverged:
            return True
        if traj.converged_to is not None:
            return False
        return None

    if status(hi_db) is not True:
        raise ConvergenceError(f"DE does not diverge at the upper bracket end {hi_db} dB")
    if status(lo_db) is not False:
        raise ConvergenceError(f"DE does not stall at the lower bracket end {lo_db} dB")
    lo, hi = lo_db, hi_db
    converged = True
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        s = status(mid)
        if s is None:
            # budget exhausted near threshold; treat as non-divergent but flag
            converged = False
            lo = mid
        elif s:
            hi = mid
        else:
            lo = mid
    return ThresholdResult(hi, (lo, hi), converged)
