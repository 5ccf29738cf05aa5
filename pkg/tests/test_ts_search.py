import os

import pytest

from ldpc_floor.errors import ValidationError
from ldpc_floor.ldpc_codes import ParityCheckMatrix
from ldpc_floor.trapping_set import build_state_space, bundled_topology, spectral_radius
from ldpc_floor.ts_search import find_elementary_trapping_sets, induced_topology

slow = pytest.mark.skipif(not os.environ.get("LDPC_FLOOR_SLOW"), reason="set LDPC_FLOOR_SLOW=1 for the full Margulis search")


def code_from_topology(ts):
    """A Tanner graph that is exactly the trapping set's induced subgraph."""
    cols = [[] for _ in range(ts.a)]
    check = 0
    for u, v in ts.deg2_checks:
        cols[u].append(check)
        cols[v].append(check)
        check += 1
    for v in ts.deg1_checks:
        cols[v].append(check)
        check += 1
    return ParityCheckMatrix.from_columns(check, cols)


def brute_force_eight_cycles(H, root):
    """Variable sets {root, p, q, s} forming a Tanner 8-cycle, by nested loops."""
    nbrs = {v: {w for c in H.cols[v] for w in H.rows[c] if w != v} for v in range(H.n)}

    def shared(u, v):
        return set(H.cols[u]) & set(H.cols[v])

    out = set()
    for p in nbrs[root]:
        for q in nbrs[p]:
            if q == root:
                continue
            for s in nbrs[q] & nbrs[root]:
                if s in (p,):
                    continue
                c = [shared(root, p), shared(p, q), shared(q, s), shared(s, root)]
                if any(len(x) != 1 for x in c) or len(set.union(*c)) != 4:
                    continue
                out.add(frozenset((root, p, q, s)))
    return out


def test_eight_cycles_match_brute_force(margulis):
    found = find_elementary_trapping_sets(margulis, 4, 4, roots=(0,))
    expected = brute_force_eight_cycles(margulis, 0)
    assert {frozenset(t.variables) for t in found} == expected
    for t in found:
        topo = t.topology(margulis)
        assert (topo.a, topo.b) == (4, 4)
        assert spectral_radius(build_state_space(topo).A) == pytest.approx(1.0)


def test_small_sets_are_elementary_and_consistent(margulis):
    found = find_elementary_trapping_sets(margulis, 6, 4, roots=(0, 1320))
    assert found
    for t in found:
        assert 0 in t.variables or 1320 in t.variables
        topo = induced_topology(margulis, t.variables)
        assert topo.b == t.b <= 4
        assert spectral_radius(build_state_space(topo).A) < 2


@pytest.mark.parametrize("name", ["margulis-12-4", "margulis-14-4"])
def test_search_recovers_fixture_in_isolation(name):
    ts = bundled_topology(name)
    H = code_from_topology(ts)
    found = find_elementary_trapping_sets(H, ts.a, ts.b, roots=(0,))
    assert [t.variables for t in found] == [tuple(range(ts.a))]
    assert found[0].topology(H) == ts


def test_induced_topology_rejects_non_elementary():
    # three variables on one check
    H = ParityCheckMatrix.from_columns(7, [[0, 1, 2], [0, 3, 4], [0, 5, 6]])
    with pytest.raises(ValidationError):
        induced_topology(H, [0, 1, 2])


@slow
def test_margulis_contains_12_4(margulis):
    found = find_elementary_trapping_sets(margulis, 12, 4, roots=(0,))
    radii = sorted(spectral_radius(build_state_space(t.topology(margulis)).A) for t in found)
    assert any(abs(r - 1.696) <= 0.005 for r in radii)
