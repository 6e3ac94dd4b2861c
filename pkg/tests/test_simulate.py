"""Scheduler, scenario files, mobility, reproducibility and fairness."""

import math
import random

import pytest

from fieldcalc import blocks
from fieldcalc.errors import ScenarioError
from fieldcalc.parser import parse
from fieldcalc.runtime import compile_program
from fieldcalc.simulate import (Perturbation, Scenario, Simulator,
                                parse_scenario, run)

CONST = compile_program(parse("0"))
COUNTER = compile_program(parse("rep(0){(x) => x + 1}"))


def test_single_still_device_firing_count():
    sc = Scenario(device_count=1, base_period=1.0, duration=3.5, seed=1,
                  width=10, height=10, comm_radius=5)
    trace = run(sc, COUNTER)
    fires = [r for r in trace.records if r.action == "fire"]
    assert len(fires) in (3, 4)
    times = [r.time for r in fires]
    assert times == sorted(times)


def test_reproducibility_bit_identical():
    sc = Scenario(device_count=12, duration=20.0, seed=7, mobility="random_walk",
                  speed=1.0, width=60, height=30, comm_radius=25)
    prog = blocks.instantiate("G_distanceTo(src())")
    code = compile_program(prog)
    sc.sensors = {"src": ("indicator", frozenset({0}), True, False)}
    t1 = run(sc, code).to_csv()
    t2 = run(sc, code).to_csv()
    assert t1 == t2


def test_different_seeds_differ():
    import dataclasses
    sc1 = Scenario(device_count=5, duration=10.0, seed=1, width=50, height=50,
                   comm_radius=30)
    sc2 = dataclasses.replace(sc1, seed=2)
    assert run(sc1, COUNTER).to_csv() != run(sc2, COUNTER).to_csv()


def test_fairness_window():
    sc = Scenario(device_count=8, duration=40.0, seed=3, jitter="uniform",
                  period_lo=0.5, period_hi=2.0, width=40, height=40,
                  comm_radius=30)
    trace = run(sc, CONST)
    fires = [(r.time, r.device) for r in trace.records if r.action == "fire"]
    window = 3 * 2.0
    for start in range(0, 34):
        inside = {d for t, d in fires if start <= t < start + window}
        assert inside == set(range(8))


def test_random_walk_step_length():
    sc = Scenario(device_count=1, duration=6.0, seed=5, mobility="random_walk",
                  speed=1.0, width=1000.0, height=1000.0, comm_radius=10,
                  positions=[(500.0, 500.0)])
    code = CONST
    sim = Simulator(sc, code)
    fires = []
    pos = []
    while True:
        t = sim.step()
        if t is None:
            break
        fires.append(t)
        pos.append(sim.positions[0])
    for i in range(1, len(fires)):
        dist = math.hypot(pos[i][0] - pos[i - 1][0], pos[i][1] - pos[i - 1][1])
        elapsed = fires[i] - fires[i - 1]
        assert dist == pytest.approx(sc.speed * elapsed, abs=1e-9)


def test_mean_degree_matches_geometry():
    """Monte-Carlo oracle: expected degree of a uniform placement, clipped
    disc area, vs the simulator's realised mean degree over seeds."""
    n, w, h, r = 100, 200.0, 20.0, 30.0
    rng = random.Random("degree-oracle")
    total = 0
    trials = 60
    for _ in range(trials):
        pts = [(rng.uniform(0, w), rng.uniform(0, h)) for _ in range(n)]
        deg = 0
        for i in range(n):
            for j in range(n):
                if i != j and math.hypot(pts[i][0] - pts[j][0],
                                         pts[i][1] - pts[j][1]) <= r:
                    deg += 1
        total += deg / n
    expected = total / trials

    realised = []
    for seed in range(5):
        sc = Scenario(device_count=n, width=w, height=h, comm_radius=r,
                      duration=1.0, seed=seed)
        sim = Simulator(sc, CONST)
        topo = sim.net.env.topology
        realised.append(sum(len(v) for v in topo.values()) / n)
    mean_realised = sum(realised) / len(realised)
    assert abs(mean_realised - expected) / expected < 0.2


def test_perturbation_set_sensor():
    sc = Scenario(device_count=2, duration=10.0, seed=2, width=10, height=10,
                  comm_radius=20,
                  sensors={"alert": False},
                  perturbations=[Perturbation(5.0, "set_sensor", None,
                                              ("alert", True))])
    code = compile_program(parse("mux(alert(), 1, 0)"))
    trace = run(sc, code)
    early = [r.value for r in trace.records if r.action == "fire" and r.time < 5]
    late = [r.value for r in trace.records if r.action == "fire" and r.time > 6]
    assert set(early) == {0.0}
    assert set(late) == {1.0}


def test_default_horizon_is_three_periods():
    sc = Scenario(device_count=1, base_period=2.0, duration=1.0, seed=0,
                  width=1, height=1, comm_radius=1)
    assert sc.staleness_horizon() == 6.0


class TestScenarioFiles:
    GOOD = """
    [arena]
    width = 100
    height = 50
    comm_radius = 25

    [devices]
    count = 10
    mobility = random_walk
    speed = 1.0

    [schedule]
    base_period = 1.0
    jitter = uniform
    period_lo = 0.9
    period_hi = 1.1
    duration = 30
    seed = 42

    [sensors]
    src = indicator 0 true false
    level = const 3.5

    [perturbations]
    at = 10 set_sensor src 0 false
    at = 10 set_sensor src 9 true
    at = 15 teleport 3 50 25
    """

    def test_parse_good(self):
        sc = parse_scenario(self.GOOD)
        assert sc.device_count == 10
        assert sc.comm_radius == 25.0
        assert sc.jitter == "uniform"
        assert sc.seed == 42
        assert len(sc.perturbations) == 3
        assert sc.sensors["level"] == 3.5
        assert sc.sensors["src"][0] == "indicator"

    def test_unknown_key_rejected(self):
        with pytest.raises(ScenarioError):
            parse_scenario("[arena]\nwidht = 3\n")

    def test_unknown_section_rejected(self):
        with pytest.raises(ScenarioError):
            parse_scenario("[misc]\nx = 1\n")

    def test_key_outside_section_rejected(self):
        with pytest.raises(ScenarioError):
            parse_scenario("x = 1\n")

    def test_bad_perturbation_rejected(self):
        with pytest.raises(ScenarioError):
            parse_scenario("[perturbations]\nat = 5 explode 1\n")

    def test_explicit_positions(self):
        sc = parse_scenario("""
        [devices]
        position = 0 0
        position = 3 4
        [schedule]
        duration = 2
        """)
        assert sc.positions == [(0.0, 0.0), (3.0, 4.0)]
        sim = Simulator(sc, CONST)
        assert sim.net.env.topology[0] == frozenset({1})


def test_invalid_scenario_values():
    with pytest.raises(ScenarioError):
        Scenario(device_count=1, comm_radius=0.0, duration=1.0)
    with pytest.raises(ScenarioError):
        Scenario(device_count=1, comm_radius=1.0, duration=-1.0)
