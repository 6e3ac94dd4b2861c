"""Block catalog contracts: every spec example with its oracle."""

import math
import random

import pytest

from conftest import fire_rounds, make_net
from fieldcalc import blocks
from fieldcalc.network import Environment, is_stable, snapshot_field
from fieldcalc.runtime import SensorSnapshot, compile_program, evaluate
from fieldcalc.stability.oracle import dijkstra, hop_counts


def geometric_env(rng, n, side_w, side_h, radius, src=0, connected=True,
                  extra_sensors=None):
    while True:
        pts = {i: (rng.uniform(0, side_w), rng.uniform(0, side_h))
               for i in range(n)}
        topo = {i: set() for i in range(n)}
        for i in range(n):
            for j in range(i + 1, n):
                if math.hypot(pts[i][0] - pts[j][0],
                              pts[i][1] - pts[j][1]) <= radius:
                    topo[i].add(j)
                    topo[j].add(i)
        topo = {d: frozenset(v) for d, v in topo.items()}
        if not connected or _connected(topo):
            break
    sensors = {d: {"src": d == src, **(extra_sensors or {})} for d in topo}
    return Environment(topo, sensors, pts)


def _connected(topo):
    ids = sorted(topo)
    seen = {ids[0]}
    stack = [ids[0]]
    while stack:
        u = stack.pop()
        for v in topo[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(ids)


def run_to_stability(main, env, max_rounds=60, period=1.0):
    code = compile_program(blocks.instantiate(main))
    net = make_net(env, period=period)
    for _ in range(max_rounds):
        fire_rounds(net, code, 1, dt=period / len(env.topology))
        if is_stable(net, code):
            return snapshot_field(net), net, code
    raise AssertionError(f"no stability after {max_rounds} rounds: {main}")


def line_env(n=3, spacing=10.0, src=0):
    pts = {i: (spacing * i, 0.0) for i in range(n)}
    topo = {i: frozenset(x for x in (i - 1, i + 1) if 0 <= x < n)
            for i in range(n)}
    sensors = {d: {"src": d == src} for d in topo}
    return Environment(topo, sensors, pts)


class TestBlockG:
    def test_distance_on_line(self):
        field, _, _ = run_to_stability("G_distanceTo(src())", line_env())
        assert field == {0: 0.0, 1: 10.0, 2: 20.0}

    def test_broadcast_constant_field(self):
        field, _, _ = run_to_stability("G_broadcast(src(), snsNum() * 0 + 9)",
                                       line_env())
        assert field == {0: 9.0, 1: 9.0, 2: 9.0}

    def test_broadcast_spreads_source_value(self):
        env = line_env()
        for d in env.sensors:
            env.sensors[d]["val"] = float(10 + d)
        field, _, _ = run_to_stability("G_broadcast(src(), val())", env)
        assert field == {0: 10.0, 1: 10.0, 2: 10.0}

    def test_disconnected_distance_infinite(self):
        env = line_env()
        topo = dict(env.topology)
        topo[2] = frozenset()
        topo[1] = frozenset({0})
        env2 = Environment(topo, env.sensors, env.positions)
        field, _, _ = run_to_stability("G_distanceTo(src())", env2)
        assert field[2] == math.inf

    def test_matches_dijkstra_on_random_graphs(self):
        rng = random.Random("blocks-g")
        for _ in range(5):
            env = geometric_env(rng, 12, 60, 40, 25)
            field, _, _ = run_to_stability("G_distanceTo(src())", env)
            truth = _dijkstra_truth(env)
            for d in truth:
                assert field[d] == pytest.approx(truth[d], abs=1e-9)


def _dijkstra_truth(env, src=0):
    pts = env.positions

    def w(u, v):
        return math.hypot(pts[u][0] - pts[v][0], pts[u][1] - pts[v][1])

    seeds = {d: (0.0 if d == src else math.inf) for d in env.topology}
    return dijkstra(env.topology, w, seeds)


class TestBlockC:
    def test_sum_counts_devices_seven_nodes(self):
        rng = random.Random("blocks-c7")
        env = geometric_env(rng, 7, 40, 30, 25)
        main = "C_sum(hopcount(mux(src(), 0, infinity)), 1)"
        field, _, _ = run_to_stability(main, env)
        assert field[0] == 7.0

    def test_any_all_false(self):
        field, _, _ = run_to_stability(
            "C_any(hopcount(mux(src(), 0, infinity)), false)", line_env())
        assert field[0] is False

    def test_any_detects_true(self):
        env = line_env()
        for d in env.sensors:
            env.sensors[d]["flag"] = (d == 2)
        field, _, _ = run_to_stability(
            "C_any(hopcount(mux(src(), 0, infinity)), flag())", env)
        assert field[0] is True

    def test_single_device_is_local(self):
        env = Environment({0: frozenset()}, {0: {"src": True}}, {0: (0.0, 0.0)})
        field, _, _ = run_to_stability("C_sum(G_distanceTo(src()), 1)", env)
        assert field[0] == 1.0


class TestBlockCPrime:
    def test_sum_within_division_error(self):
        rng = random.Random("blocks-cp")
        env = geometric_env(rng, 7, 40, 30, 25)
        main = "C'_sum(G_distanceTo(src()), 1)"
        field, _, _ = run_to_stability(main, env)
        assert field[0] == pytest.approx(7.0, abs=1e-6)

    def test_single_device(self):
        env = Environment({0: frozenset()}, {0: {"src": True}}, {0: (0.0, 0.0)})
        field, _, _ = run_to_stability("C'_sum(G_distanceTo(src()), 1)", env)
        assert field[0] == 1.0

    def test_two_equal_potential_children(self):
        # Y shape: two devices equidistant from the source forward their
        # whole value only to the source
        pts = {0: (0.0, 0.0), 1: (10.0, 5.0), 2: (10.0, -5.0)}
        topo = {0: frozenset({1, 2}), 1: frozenset({0}), 2: frozenset({0})}
        env = Environment(topo, {d: {"src": d == 0} for d in topo}, pts)
        field, _, _ = run_to_stability("C'_sum(G_distanceTo(src()), 1)", env)
        assert field[0] == pytest.approx(3.0, abs=1e-9)
        assert field[1] == pytest.approx(1.0, abs=1e-9)


class TestBlockT:
    def _single(self):
        return Environment({0: frozenset()}, {0: {}}, {0: (0.0, 0.0)})

    def test_countdown_values(self):
        code = compile_program(blocks.instantiate("T(10, 0)(sub1)"))
        net = make_net(self._single())
        seen = []
        for k in range(12):
            net.clock += 1.0
            net.fire_inplace(0, code, net.clock)
            seen.append(snapshot_field(net)[0])
        assert seen == [9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0, 0.0,
                        0.0, 0.0]

    def test_track_constant_after_first_round(self):
        code = compile_program(blocks.instantiate("T_track(snsNum())"))
        net = make_net(self._single())
        net.env.sensors[0]["snsNum"] = 5.5
        net.fire_inplace(0, code, 1.0)
        assert snapshot_field(net)[0] == 5.5

    def test_memory_holds_then_null(self):
        code = compile_program(blocks.instantiate("T_memory(7, 3, 0)"))
        net = make_net(self._single())
        seen = []
        for k in range(6):
            net.clock += 1.0
            net.fire_inplace(0, code, net.clock)
            seen.append(snapshot_field(net)[0])
        # derived by stepping the countdown with sns_interval = 1
        assert seen == [7.0, 7.0, 7.0, 0.0, 0.0, 0.0]


class TestBlockCRF:
    def test_matches_dijkstra_on_random_graphs(self):
        rng = random.Random("blocks-crf")
        for _ in range(4):
            env = geometric_env(rng, 10, 50, 40, 25)
            field, _, _ = run_to_stability("crf_distance(src(), 2)", env,
                                           max_rounds=220)
            truth = _dijkstra_truth(env)
            for d in truth:
                assert field[d] == pytest.approx(truth[d], abs=1e-9)

    def test_source_zero_after_first_round(self):
        code = compile_program(blocks.instantiate("crf_distance(src(), 1)"))
        env = line_env()
        net = make_net(env)
        tree = net.fire_inplace(0, code, 1.0)
        assert tree[0] == 0.0

    def test_recovers_after_source_move(self):
        env = line_env(n=4)
        field, net, code = run_to_stability("crf_distance(src(), 2)", env,
                                            max_rounds=220)
        assert field == {0: 0.0, 1: 10.0, 2: 20.0, 3: 30.0}
        net.env.sensors[0]["src"] = False
        net.env.sensors[3]["src"] = True
        for _ in range(400):
            fire_rounds(net, code, 1, dt=0.25)
            if is_stable(net, code):
                break
        assert snapshot_field(net) == {0: 30.0, 1: 20.0, 2: 10.0, 3: 0.0}


class TestBlockFLEX:
    def test_matches_distorted_dijkstra(self):
        rng = random.Random("blocks-flex")
        for _ in range(4):
            env = geometric_env(rng, 10, 50, 40, 25)
            radius = 25.0
            field, _, _ = run_to_stability(
                f"G'_flex_distance(src(), {radius})", env, max_rounds=220)
            pts = env.positions

            def w(u, v):
                d = math.hypot(pts[u][0] - pts[v][0], pts[u][1] - pts[v][1])
                return max(d, 0.2 * radius)

            seeds = {d: (0.0 if d == 0 else math.inf) for d in env.topology}
            truth = dijkstra(env.topology, w, seeds)
            for d in truth:
                assert field[d] == pytest.approx(truth[d], abs=1e-9)

    def test_distortion_formula_close_pair(self):
        # nodes 1 m apart, radius 30, distortion 0.2: effective edge 6 m
        pts = {0: (0.0, 0.0), 1: (1.0, 0.0)}
        topo = {0: frozenset({1}), 1: frozenset({0})}
        env = Environment(topo, {d: {"src": d == 0} for d in topo}, pts)
        field, _, _ = run_to_stability("G'_flex_distance(src(), 30)", env,
                                       max_rounds=220)
        assert field[1] == pytest.approx(6.0, abs=1e-9)


class TestBlockTPrime:
    def test_converges_to_constant_scalar_recurrence(self):
        # single device: deviation contracts by the smoothing factor each round
        code = compile_program(blocks.instantiate("T'_track_05(sig())"))
        env = Environment({0: frozenset()}, {0: {"sig": 10.0}}, {0: (0.0, 0.0)})
        net = make_net(env)
        net.fire_inplace(0, code, 1.0)
        values = [snapshot_field(net)[0]]
        for k in range(2, 8):
            net.fire_inplace(0, code, float(k))
            values.append(snapshot_field(net)[0])
        # v_{k+1} = c + a (v_k - c) with c = 10, a = 0.5, v_0 = 10 (init)
        expect = 10.0
        dev = 0.0
        for v in values:
            assert v == pytest.approx(10.0 + dev, abs=1e-12)
            dev *= 0.5
        # zero smoothing equals the tracked value after one round
        code0 = compile_program(blocks.instantiate("T'_track_0(sig())"))
        net0 = make_net(env)
        net0.fire_inplace(0, code0, 1.0)
        assert snapshot_field(net0)[0] == 10.0

    def test_tracks_on_line(self):
        env = line_env()
        for d in env.sensors:
            env.sensors[d]["sig"] = 4.0
        field, _, _ = run_to_stability("T'_track_05(sig())", env,
                                       max_rounds=400)
        for d in field:
            assert field[d] == pytest.approx(4.0, abs=1e-9)


class TestCatalogMeta:
    def test_entries_inspectable(self):
        e = blocks.entry("FLEX")
        assert e.oracle == "dijkstra_distorted"
        assert dict(e.parameters)["epsilon"].startswith("slope tolerance")
        with pytest.raises(KeyError):
            blocks.entry("nope")

    def test_manifest_parses_as_registry(self):
        regs = blocks.catalog_registry()
        names = {a.fn_name for a in regs}
        assert {"fr", "crf_raise", "flex_raise", "fc__identity"} <= names

    def test_catalog_obligations_validate(self):
        results = blocks.validate_catalog(trials=120)
        assert all(r.passed for r in results.values()), {
            str(a): r.reason for a, r in results.items() if not r.passed}
