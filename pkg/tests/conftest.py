import math
import sys
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parents[1] / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))


@pytest.fixture
def line3():
    """Three devices on a line, 10 m apart, A-B and B-C connected."""
    from fieldcalc.network import Environment
    pos = {0: (0.0, 0.0), 1: (10.0, 0.0), 2: (20.0, 0.0)}
    topo = {0: frozenset({1}), 1: frozenset({0, 2}), 2: frozenset({1})}
    sensors = {0: {"snsNum": 1.0, "src": True},
               1: {"snsNum": 2.0, "src": False},
               2: {"snsNum": 3.0, "src": False}}
    return Environment(topo, sensors, pos)


def fire_rounds(net, code, rounds, n=None, dt=0.25):
    """Fire every device `rounds` times in id order, advancing the clock."""
    ids = sorted(net.status) if n is None else list(range(n))
    for _ in range(rounds):
        for d in ids:
            net.clock += dt
            net.fire_inplace(d, code, net.clock)
    return net


def make_net(env, horizon=math.inf, period=1.0):
    from fieldcalc.network import NetworkConfiguration
    net = NetworkConfiguration(env, horizon)
    net.default_interval = {d: period for d in env.topology}
    return net
