"""Flooding sum-product decoding on the AWGN channel with LLR statistics.

The check-node rule is evaluated in a log-magnitude/sign form. With
psi(x) = -log tanh(x / 2) the extrinsic magnitude on edge e of a check is
psi(sum over the other edges of psi(|m|)). The sum is carried as a
log-sum-exp of log psi, so magnitudes far beyond where tanh rounds to 1
(about 38) keep full relative accuracy; for large arguments
psi(x) ~ 2 exp(-x) and the rule reduces to a soft minimum.

Decoding runs on a batch of frames at once (arrays of shape
``(frames, edges)``), which is what makes Monte-Carlo runs practical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .de_engine import ChannelCondition
from .errors import ValidationError
from .ldpc_codes import ParityCheckMatrix

OVERFLOW_GUARD = 1e9
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class DecoderConfig:
    max_iters: int = 20
    saturation_limit: float | None = None
    early_termination: bool = False

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValidationError(f"max_iters must be an integer >= 1, got {self.max_iters!r}")
        if self.saturation_limit is not None and not self.saturation_limit > 0:
            raise ValidationError(f"saturation_limit must be positive, got {self.saturation_limit!r}")

    @property
    def clip(self) -> float:
        return OVERFLOW_GUARD if self.saturation_limit is None else float(self.saturation_limit)


@dataclass
class LLRIterationStats:
    """Running count/mean/variance/min/max of check outputs per iteration.

    ``m2`` is the sum of squared deviations from the mean. Iterations that
    received no samples have count 0.
    """

    count: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    m2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    min: np.ndarray = field(default_factory=lambda: np.zeros(0))
    max: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def empty(cls, iters: int) -> "LLRIterationStats":
        return cls(
            np.zeros(iters, dtype=np.int64),
            np.zeros(iters),
            np.zeros(iters),
            np.full(iters, np.inf),
            np.full(iters, -np.inf),
        )

    @classmethod
    def from_samples(cls, samples) -> "LLRIterationStats":
        """Stats of explicit per-iteration sample arrays."""
        out = cls.empty(len(samples))
        for l, x in enumerate(samples):
            out.add(l, np.asarray(x, dtype=float).ravel())
        return out

    @property
    def iterations(self) -> int:
        return len(self.count)

    @property
    def variance(self) -> np.ndarray:
        """Unbiased sample variance (nan with fewer than two samples)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.count > 1, self.m2 / np.maximum(self.count - 1, 1), np.nan)

    def _grow(self, iters: int) -> None:
        extra = iters - self.iterations
        if extra > 0:
            pad = LLRIterationStats.empty(extra)
            self.count = np.concatenate([self.count, pad.count])
            self.mean = np.concatenate([self.mean, pad.mean])
            self.m2 = np.concatenate([self.m2, pad.m2])
            self.min = np.concatenate([self.min, pad.min])
            self.max = np.concatenate([self.max, pad.max])

    def add(self, iteration: int, x: np.ndarray) -> None:
        """Fold the samples ``x`` into iteration ``iteration`` (0-based)."""
        if x.size == 0:
            return
        self._grow(iteration + 1)
        mu = float(x.mean())
        m2 = float(np.square(x - mu).sum())
        self._combine(iteration, x.size, mu, m2, float(x.min()), float(x.max()))

    def _combine(self, l, n_b, mu_b, m2_b, lo, hi):
        n_a = int(self.count[l])
        n = n_a + n_b
        delta = mu_b - self.mean[l]
        self.mean[l] += delta * n_b / n
        self.m2[l] += m2_b + delta * delta * n_a * n_b / n
        self.count[l] = n
        self.min[l] = min(self.min[l], lo)
        self.max[l] = max(self.max[l], hi)

    def merge(self, other: "LLRIterationStats") -> "LLRIterationStats":
        """Pooled statistics of both sample sets (returns a new object)."""
        out = LLRIterationStats.empty(max(self.iterations, other.iterations))
        for src in (self, other):
            for l in range(src.iterations):
                if src.count[l]:
                    out._combine(l, int(src.count[l]), src.mean[l], src.m2[l], src.min[l], src.max[l])
        return out


def awgn_llr_channel(n: int, sigma: float, rng_seed=None) -> np.ndarray:
    """Channel LLRs 2y/sigma^2 for the all-zero codeword sent as +1 symbols.

    ``rng_seed`` may be anything accepted by :func:`numpy.random.default_rng`.
    """
    if not sigma > 0:
        raise ValidationError(f"sigma must be positive, got {sigma!r}")
    rng = np.random.default_rng(rng_seed)
    y = 1.0 + sigma * rng.standard_normal(n)
    return 2.0 * y / (sigma * sigma)


class TannerGraph:
    """Edge layout of H used by the vectorised decoder.

    Edges are numbered check-major. ``row_groups`` holds, for each distinct
    check degree j, an (m_j, j) array of edge indices.
    """

    def __init__(self, H: ParityCheckMatrix):
        self.H = H
        edge_check, edge_var = [], []
        for i, r in enumerate(H.rows):
            for j in r:
                edge_check.append(i)
                edge_var.append(j)
        self.edge_check = np.asarray(edge_check, dtype=np.int64)
        self.edge_var = np.asarray(edge_var, dtype=np.int64)
        self.n_edges = len(edge_var)
        if any(len(c) == 0 for c in H.cols):
            raise ValidationError("every variable needs at least one check")
        self.var_order = np.argsort(self.edge_var, kind="stable")
        counts = np.bincount(self.edge_var, minlength=H.n)
        self.var_starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        starts = np.concatenate([[0], np.cumsum(H.row_weights)])
        groups: dict[int, list[np.ndarray]] = {}
        for i, w in enumerate(H.row_weights):
            if w:
                groups.setdefault(w, []).append(np.arange(starts[i], starts[i + 1]))
        self.row_groups = {w: np.vstack(rows) for w, rows in sorted(groups.items())}
        self.row_edges = [np.arange(starts[i], starts[i + 1]) for i in range(H.m)]

    def var_sums(self, msgs: np.ndarray) -> np.ndarray:
        """Per-variable sums of edge values, shape (F, n)."""
        return np.add.reduceat(msgs[:, self.var_order], self.var_starts, axis=1)

    def syndromes(self, hard: np.ndarray) -> np.ndarray:
        """(F, m) parity of each check for hard decisions of shape (F, n)."""
        bits = hard[:, self.edge_var].astype(np.int64)
        out = np.zeros((hard.shape[0], self.H.m), dtype=np.int64)
        np.add.at(out.T, self.edge_check, bits.T)
        return out & 1


def _log_psi(x: np.ndarray) -> np.ndarray:
    """log psi(x) for x > 0, psi(x) = -log tanh(x/2)."""
    x = np.maximum(x, 1e-300)
    out = np.empty_like(x)
    big = x > 20.0
    xb = x[big]
    t2 = np.exp(-2.0 * xb)
    # psi = 2 t (1 + t^2/3 + t^4/5 + ...), t = exp(-x)
    out[big] = _LOG2 - xb + np.log1p(t2 / 3.0 + t2 * t2 / 5.0)
    xs = x[~big]
    out[~big] = np.log(-np.log(np.tanh(0.5 * xs)))
    return out


def _psi_from_log(log_s: np.ndarray) -> np.ndarray:
    """psi(s) with s = exp(log_s)."""
    out = np.empty_like(log_s)
    tiny = log_s < -18.0
    ls = log_s[tiny]
    s = np.exp(ls)
    # tanh(s/2) = (s/2)(1 - s^2/12 + ...)
    out[tiny] = _LOG2 - ls + s * s / 12.0
    s = np.exp(log_s[~tiny])
    out[~tiny] = -np.log(np.tanh(0.5 * s))
    return out


def _leave_one_out_logsumexp(v: np.ndarray) -> np.ndarray:
    """For v of shape (..., j), log sum over k != i of exp(v[..., k])."""
    j = v.shape[-1]
    neg_inf = np.full(v.shape[:-1], -np.inf)
    prefix = [neg_inf]
    for k in range(j - 1):
        prefix.append(np.logaddexp(prefix[-1], v[..., k]))
    out = np.empty_like(v)
    suffix = neg_inf
    for k in range(j - 1, -1, -1):
        out[..., k] = np.logaddexp(prefix[k], suffix)
        suffix = np.logaddexp(suffix, v[..., k])
    return out


def check_update(graph: TannerGraph, v2c: np.ndarray) -> np.ndarray:
    """Extrinsic check-to-variable LLRs for messages v2c of shape (F, E)."""
    out = np.empty_like(v2c)
    neg = v2c < 0
    log_psi = _log_psi(np.abs(v2c))
    for w, idx in graph.row_groups.items():
        if w == 1:
            # a degree-1 check carries no information
            out[:, idx[:, 0]] = 0.0
            continue
        lp = log_psi[:, idx]
        mag = _psi_from_log(_leave_one_out_logsumexp(lp))
        sgn = neg[:, idx]
        flip = np.logical_xor(sgn, np.logical_xor.reduce(sgn, axis=-1, keepdims=True))
        out[:, idx] = np.where(flip, -mag, mag)
    return out


@dataclass
class BatchResult:
    decisions: np.ndarray  # (F, n) uint8
    success: np.ndarray  # (F,) bool
    iterations: np.ndarray  # (F,) iterations run per frame
    stats: LLRIterationStats


def decode_batch(graph: TannerGraph, llr: np.ndarray, cfg: DecoderConfig) -> BatchResult:
    """Decode a batch of frames; ``llr`` has shape (F, n)."""
    llr = np.atleast_2d(np.asarray(llr, dtype=float))
    F, n = llr.shape
    if n != graph.H.n:
        raise ValidationError(f"llr length {n} does not match code length {graph.H.n}")
    clip = cfg.clip
    stats = LLRIterationStats.empty(cfg.max_iters)
    active = np.ones(F, dtype=bool)
    iters_run = np.zeros(F, dtype=np.int64)
    c2v = np.zeros((F, graph.n_edges))
    total = llr.copy()
    hard = (total < 0).astype(np.uint8)
    for l in range(cfg.max_iters):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        v2c = np.clip(total[rows][:, graph.edge_var] - c2v[rows], -clip, clip)
        new_c2v = check_update(graph, v2c)
        # statistics are taken before the propagated messages are clipped
        stats.add(l, new_c2v)
        new_c2v = np.clip(new_c2v, -clip, clip)
        c2v[rows] = new_c2v
        total[rows] = llr[rows] + graph.var_sums(new_c2v)
        hard[rows] = (total[rows] < 0).astype(np.uint8)
        iters_run[rows] += 1
        if cfg.early_termination:
            ok = ~graph.syndromes(hard[rows]).any(axis=1)
            active[rows[ok]] = False
    success = ~graph.syndromes(hard).any(axis=1)
    return BatchResult(hard, success, iters_run, stats)


@dataclass
class DecodeResult:
    decisions: np.ndarray
    success: bool
    stats: LLRIterationStats
    iterations: int


def spa_decode(H: ParityCheckMatrix | TannerGraph, llr, cfg: DecoderConfig) -> DecodeResult:
    """Decode one frame. ``H`` may be a prebuilt :class:`TannerGraph`."""
    graph = H if isinstance(H, TannerGraph) else TannerGraph(H)
    llr = np.asarray(llr, dtype=float)
    if llr.ndim != 1:
        raise ValidationError("spa_decode takes a single frame; use decode_batch for several")
    res = decode_batch(graph, llr[None, :], cfg)
    return DecodeResult(res.decisions[0], bool(res.success[0]), res.stats, int(res.iterations[0]))


@dataclass
class MonteCarloResult:
    stats: LLRIterationStats
    frames: int
    frame_errors: int
    bit_errors: int
    n: int
    seed: int
    first_frame: int

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.n)


def frame_llrs(n: int, sigma: float, seed: int, frames: range) -> np.ndarray:
    """Channel LLRs for the given frame indices; frame k uses sub-seed (seed, k)."""
    out = np.empty((len(frames), n))
    for row, k in enumerate(frames):
        out[row] = awgn_llr_channel(n, sigma, np.random.SeedSequence(seed, spawn_key=(k,)))
    return out


def monte_carlo_run(
    H: ParityCheckMatrix | TannerGraph,
    ebn0_db: float,
    rate: float,
    num_frames: int,
    cfg: DecoderConfig,
    seed: int,
    *,
    first_frame: int = 0,
    batch_size: int = 64,
) -> MonteCarloResult:
    """Transmit the all-zero codeword ``num_frames`` times and pool statistics.

    Frame ``k`` draws its noise from ``SeedSequence(seed, spawn_key=(k,))``,
    so a run over frames [0, N) and the merge of runs over [0, K) and
    [K, N) see identical channel outputs.
    """
    if num_frames < 1:
        raise ValidationError("num_frames must be >= 1")
    graph = H if isinstance(H, TannerGraph) else TannerGraph(H)
    n = graph.H.n
    sigma = ChannelCondition(ebn0_db, rate).sigma
    stats = LLRIterationStats.empty(cfg.max_iters)
    frame_errors = bit_errors = 0
    stop = first_frame + num_frames
    for start in range(first_frame, stop, batch_size):
        frames = range(start, min(start + batch_size, stop))
        res = decode_batch(graph, frame_llrs(n, sigma, seed, frames), cfg)
        stats = stats.merge(res.stats)
        errs = res.decisions.sum(axis=1)
        bit_errors += int(errs.sum())
        frame_errors += int((errs > 0).sum())
    return MonteCarloResult(stats, num_frames, frame_errors, bit_errors, n, seed, first_frame)
