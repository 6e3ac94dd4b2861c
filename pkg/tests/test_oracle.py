"""Path-weight oracle: brute-force cross-checks and the progressivity guard."""

import itertools
import math
import random

import pytest

from fieldcalc.errors import NonTermination
from fieldcalc.runtime import lex_cmp
from fieldcalc.stability.oracle import dijkstra, hop_counts, path_weight_oracle


def brute_force_min_weight(topology, edge_inputs, fmp, local_field,
                           max_len=None):
    """Enumerate all simple paths: the independent oracle for the oracle."""
    devices = sorted(topology)
    max_len = max_len or len(devices)
    best = dict(local_field)

    def extend(path, weight):
        tail = path[-1]
        if lex_cmp(weight, best[tail]) < 0:
            best[tail] = weight
        if len(path) >= max_len:
            return
        for nxt in sorted(topology[tail]):
            if nxt in path:
                continue
            extend(path + (nxt,), fmp(weight, *edge_inputs(nxt, tail)))

    for d in devices:
        extend((d,), local_field[d])
    return best


def _random_geometric(rng, n=8, side=60.0, radius=25.0):
    pts = {i: (rng.uniform(0, side), rng.uniform(0, side)) for i in range(n)}
    topo = {i: set() for i in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            if math.hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]) <= radius:
                topo[i].add(j)
                topo[j].add(i)
    return pts, {d: frozenset(v) for d, v in topo.items()}


def test_dijkstra_matches_brute_force():
    rng = random.Random("oracle-brute")
    for trial in range(12):
        pts, topo = _random_geometric(rng)
        seeds = {d: (0.0 if d == 0 else math.inf) for d in topo}

        def w(u, v):
            return math.hypot(pts[u][0] - pts[v][0], pts[u][1] - pts[v][1])

        got = dijkstra(topo, w, seeds)
        expected = brute_force_min_weight(
            topo, lambda v, u: (w(u, v),), lambda val, d: val + d, seeds)
        for d in topo:
            if math.isinf(expected[d]):
                assert math.isinf(got[d])
            else:
                assert got[d] == pytest.approx(expected[d], abs=1e-9)


def test_hop_counts_line_of_five():
    topo = {i: frozenset(x for x in (i - 1, i + 1) if 0 <= x < 5)
            for i in range(5)}
    seeds = {d: (0.0 if d == 0 else math.inf) for d in topo}
    assert hop_counts(topo, seeds) == {0: 0.0, 1: 1.0, 2: 2.0, 3: 3.0, 4: 4.0}


def test_lexicographic_pair_weights():
    """G's path function on (distance, value) pairs vs brute force."""
    rng = random.Random("oracle-pairs")
    pts, topo = _random_geometric(rng, n=7)

    def w(u, v):
        return math.hypot(pts[u][0] - pts[v][0], pts[u][1] - pts[v][1])

    def fmp(value, d):
        return (value[0] + d, value[1] + d)

    local = {d: ((0.0, 0.0) if d == 0 else (math.inf, 0.0)) for d in topo}
    got = path_weight_oracle(topo, lambda v, u: (w(u, v),), fmp, local)
    expected = brute_force_min_weight(topo, lambda v, u: (w(u, v),), fmp, local)
    for d in topo:
        assert got[d] == pytest.approx(expected[d], abs=1e-9) \
            if not math.isinf(expected[d][0]) else got[d][0] == math.inf


def test_disconnected_stays_infinite():
    topo = {0: frozenset({1}), 1: frozenset({0}), 2: frozenset()}
    seeds = {0: 0.0, 1: math.inf, 2: math.inf}
    out = dijkstra(topo, lambda u, v: 1.0, seeds)
    assert out[2] == math.inf


def test_non_progressive_fmp_guard():
    topo = {0: frozenset({1}), 1: frozenset({0})}
    local = {0: 0.0, 1: math.inf}
    with pytest.raises(NonTermination):
        path_weight_oracle(topo, lambda v, u: (),
                           lambda value: value - 1.0, local)


def test_oracle_matches_g_simulation():
    """Cross-check: G's stable field equals the oracle on random geometry."""
    from conftest import fire_rounds, make_net
    from fieldcalc import blocks
    from fieldcalc.network import Environment, snapshot_field, is_stable
    from fieldcalc.runtime import compile_program

    prog = blocks.instantiate("G_distanceTo(src())")
    code = compile_program(prog)
    rng = random.Random("oracle-sim")
    checked = 0
    for trial in range(8):
        pts, topo = _random_geometric(rng, n=10, side=50.0, radius=28.0)
        sensors = {d: {"src": d == 0} for d in topo}
        net = make_net(Environment(topo, sensors, pts))
        fire_rounds(net, code, 14)
        if not is_stable(net, code):
            continue
        got = snapshot_field(net)

        def w(u, v):
            return math.hypot(pts[u][0] - pts[v][0], pts[u][1] - pts[v][1])

        seeds = {d: (0.0 if d == 0 else math.inf) for d in topo}
        truth = dijkstra(topo, w, seeds)
        for d in topo:
            if math.isinf(truth[d]):
                assert got[d] == math.inf
            else:
                assert got[d] == pytest.approx(truth[d], abs=1e-9)
        checked += 1
    assert checked >= 6
