"""Sparse parity-check matrices, alist I/O and code constructions."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .de_engine import EnsembleSpec
from .errors import AlistParseError, ValidationError


@dataclass(frozen=True)
class ParityCheckMatrix:
    """Binary parity-check matrix stored as sorted adjacency lists.

    ``cols[j]`` lists the rows holding a 1 in column ``j`` and ``rows[i]`` the
    columns holding a 1 in row ``i``, both 0-based.
    """

    n: int
    m: int
    cols: tuple[tuple[int, ...], ...]
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.cols) != self.n or len(self.rows) != self.m:
            raise ValidationError(f"adjacency sizes ({len(self.cols)}, {len(self.rows)}) do not match n={self.n}, m={self.m}")
        from_cols = sorted((i, j) for j, c in enumerate(self.cols) for i in c)
        from_rows = sorted((i, j) for i, r in enumerate(self.rows) for j in r)
        if from_cols != from_rows:
            raise ValidationError("row and column adjacency lists are inconsistent")
        if len(set(from_cols)) != len(from_cols):
            raise ValidationError("repeated (row, column) entry")

    @classmethod
    def from_columns(cls, m: int, cols: Iterable[Iterable[int]]) -> "ParityCheckMatrix":
        col_lists = [tuple(sorted(int(i) for i in c)) for c in cols]
        row_lists: list[list[int]] = [[] for _ in range(m)]
        for j, c in enumerate(col_lists):
            for i in c:
                if not 0 <= i < m:
                    raise ValidationError(f"column {j} references row {i} outside [0, {m})")
                row_lists[i].append(j)
        return cls(len(col_lists), m, tuple(col_lists), tuple(tuple(r) for r in row_lists))

    @classmethod
    def from_dense(cls, H) -> "ParityCheckMatrix":
        H = np.asarray(H)
        if H.ndim != 2:
            raise ValidationError("dense matrix must be 2-D")
        return cls.from_columns(H.shape[0], [np.flatnonzero(H[:, j] % 2) for j in range(H.shape[1])])

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        for j, c in enumerate(self.cols):
            H[list(c), j] = 1
        return H

    @property
    def column_weights(self) -> list[int]:
        return [len(c) for c in self.cols]

    @property
    def row_weights(self) -> list[int]:
        return [len(r) for r in self.rows]

    @property
    def n_edges(self) -> int:
        return sum(self.column_weights)

    def syndrome(self, word: Sequence[int]) -> np.ndarray:
        word = np.asarray(word, dtype=np.uint8) & 1
        if word.shape != (self.n,):
            raise ValidationError(f"word must have length {self.n}")
        return np.array([int(word[list(r)].sum()) & 1 for r in self.rows], dtype=np.uint8)

    def is_codeword(self, word: Sequence[int]) -> bool:
        return not self.syndrome(word).any()


# ---------------------------------------------------------------------------
# alist format


def format_alist(H: ParityCheckMatrix) -> str:
    """Canonical alist text: sorted 1-based indices, no zero padding."""
    cw, rw = H.column_weights, H.row_weights
    lines = [
        f"{H.n} {H.m}",
        f"{max(cw, default=0)} {max(rw, default=0)}",
        " ".join(map(str, cw)),
        " ".join(map(str, rw)),
    ]
    lines += [" ".join(str(i + 1) for i in c) for c in H.cols]
    lines += [" ".join(str(j + 1) for j in r) for r in H.rows]
    return "\n".join(lines) + "\n"


def _ints(line: str, lineno: int) -> list[int]:
    try:
        return [int(t) for t in line.split()]
    except ValueError:
        raise AlistParseError(f"non-integer token in {line.strip()!r}", lineno) from None


def parse_alist(text: str) -> ParityCheckMatrix:
    """Parse alist text. Zero entries are treated as padding and dropped."""
    lines = text.splitlines()
    # keep original 1-based line numbers while skipping blank lines
    numbered = [(k + 1, ln) for k, ln in enumerate(lines) if ln.strip()]
    if len(numbered) < 4:
        raise AlistParseError("header needs 4 lines", len(lines) or 1)

    it = iter(numbered)
    lineno, line = next(it)
    head = _ints(line, lineno)
    if len(head) != 2 or min(head) < 1:
        raise AlistParseError("first line must be 'n m' with positive values", lineno)
    n, m = head
    lineno, line = next(it)
    maxes = _ints(line, lineno)
    if len(maxes) != 2:
        raise AlistParseError("second line must hold two maximum weights", lineno)
    lineno, line = next(it)
    cw = _ints(line, lineno)
    if len(cw) != n:
        raise AlistParseError(f"expected {n} column weights, found {len(cw)}", lineno)
    lineno, line = next(it)
    rw = _ints(line, lineno)
    if len(rw) != m:
        raise AlistParseError(f"expected {m} row weights, found {len(rw)}", lineno)
    if max(cw) != maxes[0] or max(rw) != maxes[1]:
        raise AlistParseError(f"maximum weights {maxes} disagree with weight lists ({max(cw)}, {max(rw)})", numbered[1][0])

    cols: list[list[int]] = []
    for j in range(n):
        try:
            lineno, line = next(it)
        except StopIteration:
            raise AlistParseError(f"file ends before column {j + 1}", len(lines)) from None
        idx = [i for i in _ints(line, lineno) if i != 0]
        if len(idx) != cw[j]:
            raise AlistParseError(f"column {j + 1} lists {len(idx)} rows but its weight is {cw[j]}", lineno)
        if any(not 1 <= i <= m for i in idx):
            raise AlistParseError(f"column {j + 1} has a row index outside [1, {m}]", lineno)
        if len(set(idx)) != len(idx):
            raise AlistParseError(f"column {j + 1} repeats a row index", lineno)
        cols.append(sorted(i - 1 for i in idx))

    rows: list[list[int]] = []
    for i in range(m):
        try:
            lineno, line = next(it)
        except StopIteration:
            raise AlistParseError(f"file ends before row {i + 1}", len(lines)) from None
        idx = [j for j in _ints(line, lineno) if j != 0]
        if len(idx) != rw[i]:
            raise AlistParseError(f"row {i + 1} lists {len(idx)} columns but its weight is {rw[i]}", lineno)
        if any(not 1 <= j <= n for j in idx):
            raise AlistParseError(f"row {i + 1} has a column index outside [1, {n}]", lineno)
        rows.append(sorted(j - 1 for j in idx))

    extra = next(it, None)
    if extra is not None:
        raise AlistParseError("unexpected trailing content", extra[0])

    # cross-check the two halves
    by_row: list[list[int]] = [[] for _ in range(m)]
    for j, c in enumerate(cols):
        for i in c:
            by_row[i].append(j)
    for i in range(m):
        if by_row[i] != rows[i]:
            raise AlistParseError(f"row {i + 1} disagrees with the column lists", numbered[4 + n + i][0])
    return ParityCheckMatrix(n, m, tuple(map(tuple, cols)), tuple(map(tuple, rows)))


def load_alist(path: str | Path) -> ParityCheckMatrix:
    return parse_alist(Path(path).read_text())


def save_alist(H: ParityCheckMatrix, path: str | Path) -> None:
    Path(path).write_text(format_alist(H))


# ---------------------------------------------------------------------------
# constructions


def generate_regular(n: int, d_v: int, d_c: int, seed: int, max_retries: int = 50) -> ParityCheckMatrix:
    """Random (d_v, d_c)-regular matrix without repeated entries or 4-cycles.

    Sockets are paired one variable at a time: each edge of variable ``v``
    goes to a check drawn with probability proportional to its free sockets,
    excluding checks already adjacent to ``v`` and checks that would close a
    4-cycle. If the draw gets stuck the whole pairing is restarted, up to
    ``max_retries`` times. Six-cycles are allowed.
    """
    if n < 1 or d_v < 1 or d_c < 2:
        raise ValidationError("need n >= 1, d_v >= 1, d_c >= 2")
    if (n * d_v) % d_c:
        raise ValidationError(f"n * d_v = {n * d_v} is not divisible by d_c = {d_c}")
    m = n * d_v // d_c
    if d_v > m:
        raise ValidationError(f"d_v = {d_v} exceeds the number of checks {m}")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        cols = _try_pairing(n, m, d_v, d_c, rng)
        if cols is not None:
            return ParityCheckMatrix.from_columns(m, cols)
    raise ValidationError(f"no 4-cycle-free pairing found in {max_retries} attempts (n={n}, d_v={d_v}, d_c={d_c})")


def _try_pairing(n, m, d_v, d_c, rng):
    free = np.full(m, d_c, dtype=np.int64)
    check_vars: list[list[int]] = [[] for _ in range(m)]
    cols: list[list[int]] = [[] for _ in range(n)]
    blocked = np.zeros(m, dtype=bool)
    for v in rng.permutation(n):
        chosen: list[int] = []
        for _ in range(d_v):
            blocked[:] = False
            for c in chosen:
                blocked[c] = True
                for u in check_vars[c]:
                    blocked[cols[u]] = True
            weight = np.where(blocked, 0, free).astype(float)
            total = weight.sum()
            if total == 0:
                return None
            c = int(rng.choice(m, p=weight / total))
            chosen.append(c)
            free[c] -= 1
        for c in chosen:
            check_vars[c].append(int(v))
        cols[v] = chosen
    return cols


# SL(2, Z_11) Cayley construction
_P = 11
_GEN = {
    "A": (1, 2, 0, 1),
    "B": (1, 0, 2, 1),
    "a": (1, _P - 2, 0, 1),  # A^-1
    "b": (1, 0, _P - 2, 1),  # B^-1
}
# each variable class is a triple of words; column (k, g) touches rows w*g
MARGULIS_CLASSES = (("", "A", "AB"), ("", "ab", "aB"))


def _matmul(x, y, p=_P):
    return (
        (x[0] * y[0] + x[1] * y[2]) % p,
        (x[0] * y[1] + x[1] * y[3]) % p,
        (x[2] * y[0] + x[3] * y[2]) % p,
        (x[2] * y[1] + x[3] * y[3]) % p,
    )


def _word(w: str, p=_P):
    out = (1, 0, 0, 1)
    for ch in w:
        out = _matmul(out, _GEN[ch], p)
    return out


def special_linear_group(p: int = _P) -> list[tuple[int, int, int, int]]:
    """Elements (a, b, c, d) of SL(2, Z_p) in lexicographic order."""
    return [g for g in itertools.product(range(p), repeat=4) if (g[0] * g[3] - g[1] * g[2]) % p == 1]


def construct_margulis(classes=MARGULIS_CLASSES) -> ParityCheckMatrix:
    """The (2640, 1320) Margulis-type code over SL(2, Z_11).

    Rows are the 1320 group elements. Column ``k * 1320 + i`` belongs to
    variable class ``k`` and group element ``g_i``, and has its ones at rows
    ``w g_i`` for the three words ``w`` of that class. Words are spelled with
    the generators A = [[1,2],[0,1]], B = [[1,0],[2,1]] and their inverses
    a, b, multiplied left to right.
    """
    G = special_linear_group()
    index = {g: i for i, g in enumerate(G)}
    cols = []
    for words in classes:
        mats = [_word(w) for w in words]
        for g in G:
            cols.append([index[_matmul(M, g)] for M in mats])
    return ParityCheckMatrix.from_columns(len(G), cols)


def degree_profile(H: ParityCheckMatrix) -> EnsembleSpec:
    """Variable degree and edge-perspective check-degree distribution of ``H``."""
    cw = H.column_weights
    d_v = cw[0] if cw else 0
    for j, w in enumerate(cw):
        if w != d_v:
            raise ValidationError(f"column {j} has weight {w}, expected {d_v}: matrix is not variable-regular")
    counts = Counter(H.row_weights)
    counts.pop(0, None)
    total = sum(j * k for j, k in counts.items())
    rho = [(j, j * k / total) for j, k in sorted(counts.items())]
    # absorb rounding so the fractions sum to one exactly
    rho[-1] = (rho[-1][0], 1.0 - sum(f for _, f in rho[:-1]))
    return EnsembleSpec(d_v, tuple(rho))
