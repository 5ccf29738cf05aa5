"""Search a Tanner graph for small elementary trapping sets.

The search is seeded with every short cycle through a chosen variable node
and grows each seed one variable at a time. A variable may join a set only
if it touches no check that already has two neighbours inside the set, so
every set visited is elementary. Growth is pruned on the number of
degree-1 checks.

For a vertex-transitive code (such as the Margulis construction, whose two
variable classes are each an orbit of the group) it is enough to seed from
one variable per orbit.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .ldpc_codes import ParityCheckMatrix
from .trapping_set import TrappingSetTopology


@dataclass(frozen=True)
class FoundTrappingSet:
    variables: tuple[int, ...]
    a: int
    b: int

    def topology(self, H: ParityCheckMatrix) -> TrappingSetTopology:
        return induced_topology(H, self.variables)


def induced_topology(H: ParityCheckMatrix, variables) -> TrappingSetTopology:
    """Topology of the subgraph induced by ``variables`` (relabelled 0..a-1).

    Raises ValidationError (through the topology constructor) if the
    induced subgraph is not elementary or not variable-regular.
    """
    variables = sorted(int(v) for v in variables)
    local = {v: k for k, v in enumerate(variables)}
    members: dict[int, list[int]] = {}
    for v in variables:
        for c in H.cols[v]:
            members.setdefault(c, []).append(local[v])
    deg2, deg1 = [], []
    d_v = len(H.cols[variables[0]])
    for c in sorted(members):
        vs = members[c]
        if len(vs) == 1:
            deg1.append(vs[0])
        elif len(vs) == 2:
            deg2.append((vs[0], vs[1]))
        else:
            # leave it to the validator to report via an impossible degree
            deg2.extend((vs[0], w) for w in vs[1:])
    deg2.sort()
    deg1.sort()
    return TrappingSetTopology(a=len(variables), d_v=d_v, deg2_checks=tuple(deg2), deg1_checks=tuple(deg1))


def _cycle_seeds(H: ParityCheckMatrix, v0: int, max_len: int) -> set[frozenset]:
    """Variable sets of simple cycles through ``v0`` with at most ``max_len`` variables."""
    seeds: set[frozenset] = set()
    path = [v0]
    used: set[int] = set()

    def walk(first_check):
        v = path[-1]
        for c in H.cols[v]:
            if c in used:
                continue
            for w in H.rows[c]:
                if w == v:
                    continue
                if w == v0:
                    if len(path) >= 2 and c != first_check:
                        seeds.add(frozenset(path))
                    continue
                if w in path or len(path) >= max_len:
                    continue
                path.append(w)
                used.add(c)
                walk(c if first_check is None else first_check)
                path.pop()
                used.discard(c)

    walk(None)
    return seeds


def _check_counts(H, S):
    return Counter(c for v in S for c in H.cols[v])


def find_elementary_trapping_sets(
    H: ParityCheckMatrix,
    a: int,
    b: int,
    *,
    roots=(0,),
    max_cycle: int = 6,
    b_cap: int | None = None,
) -> list[FoundTrappingSet]:
    """Elementary (a, b') sets with b' <= b containing one of ``roots``.

    Seeds are the cycles of at most ``max_cycle`` variables through each
    root. Intermediate sets whose degree-1 check count exceeds ``b_cap``
    (default ``b + 4``) are dropped, as are sets that cannot come back down
    to ``b`` in the remaining growth steps (each added variable lowers the
    count by at most ``d_v``). The result is therefore exhaustive only
    relative to these limits. Sets are returned sorted by (b, variables).
    """
    if b_cap is None:
        b_cap = b + 4
    found: dict[frozenset, int] = {}
    for root in roots:
        layers: dict[int, set[frozenset]] = {}
        for S in _cycle_seeds(H, int(root), max_cycle):
            if len(S) <= a and max(_check_counts(H, S).values()) <= 2:
                layers.setdefault(len(S), set()).add(S)
        for size in range(1, a + 1):
            layer = layers.pop(size, set())
            for S in layer:
                cnt = _check_counts(H, S)
                opens = [c for c, k in cnt.items() if k == 1]
                nb = len(opens)
                if size == a:
                    if nb <= b:
                        found[S] = nb
                    continue
                for c in opens:
                    for w in H.rows[c]:
                        if w in S:
                            continue
                        touched = 0
                        for c2 in H.cols[w]:
                            k = cnt.get(c2, 0)
                            if k >= 2:
                                break
                            touched += k
                        else:
                            d_w = len(H.cols[w])
                            new_b = nb + d_w - 2 * touched
                            if new_b > b_cap or new_b - d_w * (a - size - 1) > b:
                                continue
                            layers.setdefault(size + 1, set()).add(S | {w})
    out = [FoundTrappingSet(tuple(sorted(S)), a, nb) for S, nb in found.items()]
    out.sort(key=lambda t: (t.b, t.variables))
    return out
