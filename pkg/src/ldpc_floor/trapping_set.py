"""Elementary trapping sets and their linear state-space model.

A trapping set is described by its induced Tanner subgraph: ``a`` variable
nodes, each degree-2 check as the pair of variables it joins, and each
degree-1 check as the variable it hangs off. The state vector holds the
messages on directed edges (variable -> degree-2 check); one full decoding
iteration maps it as::

    x_l = g_l * A x_{l-1} + B lam + B_ex lam_ex_l,   x_0 = B lam
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ValidationError


@dataclass(frozen=True)
class TrappingSetTopology:
    a: int
    d_v: int
    deg2_checks: tuple[tuple[int, int], ...]
    deg1_checks: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "deg2_checks", tuple((int(u), int(v)) for u, v in self.deg2_checks))
        object.__setattr__(self, "deg1_checks", tuple(int(v) for v in self.deg1_checks))
        self.validate()

    @property
    def b(self) -> int:
        return len(self.deg1_checks)

    @property
    def n_edges(self) -> int:
        return 2 * len(self.deg2_checks)

    def validate(self) -> None:
        if self.d_v < 3:
            raise ValidationError(f"d_v must be >= 3, got {self.d_v}")
        if self.a < 1:
            raise ValidationError(f"a must be >= 1, got {self.a}")
        degree = [0] * self.a
        for k, (u, v) in enumerate(self.deg2_checks):
            for w in (u, v):
                if not 0 <= w < self.a:
                    raise ValidationError(f"degree-2 check {k} references variable {w} outside [0, {self.a})")
            if u == v:
                raise ValidationError(f"degree-2 check {k} joins variable {u} to itself")
            degree[u] += 1
            degree[v] += 1
        for k, v in enumerate(self.deg1_checks):
            if not 0 <= v < self.a:
                raise ValidationError(f"degree-1 check {k} references variable {v} outside [0, {self.a})")
            degree[v] += 1
        bad = [v for v, d in enumerate(degree) if d != self.d_v]
        if bad:
            v = bad[0]
            raise ValidationError(
                f"variable {v} has {degree[v]} incident checks, expected d_v = {self.d_v}"
                + (f" ({len(bad)} variables affected)" if len(bad) > 1 else "")
            )

    def to_dict(self) -> dict:
        return {
            "dv": self.d_v,
            "a": self.a,
            "deg2_checks": [list(p) for p in self.deg2_checks],
            "deg1_checks": list(self.deg1_checks),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrappingSetTopology":
        try:
            return cls(
                a=int(data["a"]),
                d_v=int(data["dv"]),
                deg2_checks=tuple(tuple(p) for p in data["deg2_checks"]),
                deg1_checks=tuple(data["deg1_checks"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed topology record: {exc}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict()) + "\n"

    @classmethod
    def loads(cls, text: str) -> "TrappingSetTopology":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"topology file is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "TrappingSetTopology":
        return cls.loads(Path(path).read_text())


# trapping sets found in the Margulis code by the subgraph search in ts_search
BUNDLED_TOPOLOGIES = {
    "margulis-12-4": "margulis_ts_12_4.json",
    "margulis-14-4": "margulis_ts_14_4.json",
}


def bundled_topology(name: str) -> TrappingSetTopology:
    try:
        fname = BUNDLED_TOPOLOGIES[name]
    except KeyError:
        raise ValidationError(f"unknown bundled topology {name!r}; choose from {sorted(BUNDLED_TOPOLOGIES)}") from None
    return TrappingSetTopology.loads(resources.files("ldpc_floor").joinpath("data", fname).read_text())


@dataclass
class StateSpaceModel:
    A: np.ndarray
    B: np.ndarray
    B_ex: np.ndarray
    # edges[i] = (source variable, index into deg2_checks)
    edges: list[tuple[int, int]] = field(default_factory=list)

    @property
    def r(self) -> float:
        return spectral_radius(self.A)


def build_state_space(ts: TrappingSetTopology) -> StateSpaceModel:
    """Construct A, B and B_ex for ``ts``.

    State ``2k`` is the edge from the first variable of degree-2 check ``k``
    into that check, state ``2k + 1`` the edge from the second variable.
    """
    ts.validate()
    edges = []
    for k, (u, v) in enumerate(ts.deg2_checks):
        edges.append((u, k))
        edges.append((v, k))
    n_e = len(edges)
    index = {e: i for i, e in enumerate(edges)}
    by_var: list[list[int]] = [[] for _ in range(ts.a)]
    for k, (u, v) in enumerate(ts.deg2_checks):
        by_var[u].append(k)
        by_var[v].append(k)

    A = np.zeros((n_e, n_e), dtype=np.int8)
    B = np.zeros((n_e, ts.a), dtype=np.int8)
    B_ex = np.zeros((n_e, ts.b), dtype=np.int8)
    for i, (v, c) in enumerate(edges):
        B[i, v] = 1
        for c2 in by_var[v]:
            if c2 == c:
                continue
            u1, u2 = ts.deg2_checks[c2]
            other = u2 if u1 == v else u1
            A[i, index[(other, c2)]] = 1
        for k, w in enumerate(ts.deg1_checks):
            if w == v:
                B_ex[i, k] = 1
    return StateSpaceModel(A=A, B=B, B_ex=B_ex, edges=edges)


def _perron_power(M: np.ndarray, rtol: float, max_iter: int, restarts: int) -> float | None:
    """Power iteration on M + I for an irreducible nonnegative M; None if it stalls."""
    n = M.shape[0]
    shifted = M + np.eye(n)
    rng = np.random.default_rng(0)
    for attempt in range(restarts):
        x = np.ones(n) if attempt == 0 else rng.uniform(0.5, 1.5, n)
        for _ in range(max_iter):
            y = shifted @ x
            ratios = y / x
            lo, hi = ratios.min(), ratios.max()
            if hi - lo <= rtol * hi:
                return 0.5 * (lo + hi) - 1.0
            x = y / hi
    return None


def spectral_radius(A, *, rtol: float = 1e-10, max_iter: int = 5000, restarts: int = 2, with_method: bool = False):
    """Perron root of a square nonnegative matrix.

    The matrix is split into strongly connected components; the Perron root
    is the largest over the irreducible diagonal blocks. Each block is
    handled by power iteration on block + I (the positive diagonal rules out
    the periodic non-convergence of cyclic matrices), stopping when the
    Collatz-Wielandt bounds agree to ``rtol``. If a block does not converge
    the dense eigenvalues of A + 1e-3 I are used instead. With
    ``with_method`` the result is returned as ``(value, "power" | "eig")``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"spectral_radius needs a square matrix, got shape {A.shape}")
    if (A < 0).any():
        raise ValidationError("spectral_radius needs a nonnegative matrix")
    n = A.shape[0]
    if n == 0 or not A.any():
        return (0.0, "power") if with_method else 0.0

    n_comp, labels = connected_components(csr_matrix(A), directed=True, connection="strong")
    best = 0.0
    for k in range(n_comp):
        idx = np.flatnonzero(labels == k)
        block = A[np.ix_(idx, idx)]
        if idx.size == 1:
            best = max(best, float(block[0, 0]))
            continue
        value = _perron_power(block, rtol, max_iter, restarts)
        if value is None:
            eta = 1e-3
            value = float(np.max(np.abs(np.linalg.eigvals(A + eta * np.eye(n))))) - eta
            value = max(value, 0.0)
            return (value, "eig") if with_method else value
        best = max(best, value)
    return (best, "power") if with_method else best


def simulate_state_space(
    model: StateSpaceModel,
    gains,
    lam: Sequence[float],
    lam_ex_seq,
    L: int,
) -> np.ndarray:
    """Run the linear recursion for L iterations; row l of the result is x_l.

    ``gains`` is a scalar or a sequence with at least L entries (entry l-1
    is used at iteration l); ``lam_ex_seq`` has shape (L, b).
    """
    if L < 1:
        raise ValidationError("L must be >= 1")
    lam = np.asarray(lam, dtype=float)
    n_e, a = model.B.shape
    b = model.B_ex.shape[1]
    if lam.shape != (a,):
        raise ValidationError(f"lam must have length {a}, got shape {lam.shape}")
    lam_ex = np.asarray(lam_ex_seq, dtype=float)
    if b == 0 and lam_ex.size == 0:
        lam_ex = np.zeros((L, 0))
    if lam_ex.shape != (L, b):
        raise ValidationError(f"lam_ex_seq must have shape ({L}, {b}), got {lam_ex.shape}")
    g = np.broadcast_to(np.asarray(gains, dtype=float), (L,)) if np.ndim(gains) == 0 else np.asarray(gains, float)
    if g.shape[0] < L:
        raise ValidationError(f"gain schedule has {g.shape[0]} entries, need {L}")
    if ((g[:L] <= 0) | (g[:L] > 1)).any():
        raise ValidationError("gains must lie in (0, 1]")

    A = model.A.astype(float)
    B = model.B.astype(float)
    B_ex = model.B_ex.astype(float)
    drive = B @ lam
    out = np.empty((L + 1, n_e))
    out[0] = drive
    for l in range(1, L + 1):
        out[l] = g[l - 1] * (A @ out[l - 1]) + drive + B_ex @ lam_ex[l - 1]
    return out


def mean_to_std_ratio(means: Sequence[float], variances: Sequence[float]) -> np.ndarray:
    """Elementwise mean / sqrt(variance); inf where the variance is zero."""
    means = np.asarray(means, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if means.shape != variances.shape:
        raise ValidationError("means and variances differ in length")
    if (variances < 0).any():
        raise ValidationError("variances must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = means / np.sqrt(variances)
    ratio[variances == 0] = math.inf
    return ratio


def random_topology(a: int, d_v: int, rng: np.random.Generator, extra_edge_prob: float | None = None) -> TrappingSetTopology:
    """Random connected elementary topology with at least one degree-1 check.

    A random spanning tree (respecting the degree cap) is grown first, then
    further degree-2 checks are added between distinct, not yet adjacent
    variables with spare capacity. Leftover capacity becomes degree-1 checks.
    """
    if a < 1:
        raise ValidationError("a must be >= 1")
    degree = [0] * a
    pairs: set[tuple[int, int]] = set()
    tree: set[tuple[int, int]] = set()
    order = list(rng.permutation(a))
    placed = [order[0]]
    for v in order[1:]:
        hosts = [u for u in placed if degree[u] < d_v]
        u = hosts[int(rng.integers(len(hosts)))]
        pairs.add((min(u, v), max(u, v)))
        tree.add((min(u, v), max(u, v)))
        degree[u] += 1
        degree[v] += 1
        placed.append(v)
    p = rng.uniform(0.3, 1.0) if extra_edge_prob is None else extra_edge_prob
    for _ in range(4 * a * d_v):
        if rng.uniform() > p:
            break
        free = [v for v in range(a) if degree[v] < d_v]
        if len(free) < 2:
            break
        u, v = rng.choice(free, size=2, replace=False)
        key = (int(min(u, v)), int(max(u, v)))
        if key in pairs:
            continue
        pairs.add(key)
        degree[u] += 1
        degree[v] += 1
    if all(d == d_v for d in degree):
        # every variable saturated: drop one non-tree check so b >= 1 and
        # the subgraph stays connected
        removable = sorted(pairs - tree)
        pairs.discard(removable[int(rng.integers(len(removable)))])
        degree = [0] * a
        for u, v in pairs:
            degree[u] += 1
            degree[v] += 1
    deg1 = [v for v in range(a) for _ in range(d_v - degree[v])]
    return TrappingSetTopology(a=a, d_v=d_v, deg2_checks=tuple(sorted(pairs)), deg1_checks=tuple(deg1))
