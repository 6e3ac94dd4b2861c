"""Whole-network small-step semantics: firings, environment changes,
staleness filtering, stability and field snapshots.

A network configuration pairs an environment (topology + sensors, plus
optional geometry for range sensors) with a status field Ψ mapping each
device to its value-tree environment.  Communication is shared-state: a
firing stores the produced tree into the device's own env and into the env of
every current neighbour, tagged with the send time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield
from typing import Callable, Dict, FrozenSet, Optional, Tuple

from .errors import DeviceError, FieldCalcError, IllFormedEnvironment, NeverFired
from .runtime import Code, SensorSnapshot, evaluate

RESERVED_SENSORS = ("snsNum",)


@dataclass
class Environment:
    """⟨topology, sensor map⟩ plus optional device positions."""

    topology: Dict[int, FrozenSet[int]]
    sensors: Dict[int, dict]
    positions: Optional[Dict[int, Tuple[float, float]]] = None

    def check_wellformed(self) -> None:
        dom = set(self.topology)
        if set(self.sensors) != dom:
            raise IllFormedEnvironment("topology and sensors domains differ")
        for d, nbrs in self.topology.items():
            if not set(nbrs) <= dom:
                raise IllFormedEnvironment(
                    f"topology of {d} escapes the domain: {set(nbrs) - dom}")
        if self.positions is not None and set(self.positions) != dom:
            raise IllFormedEnvironment("positions domain differs from topology")

    def devices(self):
        return sorted(self.topology)


# stored entry: (tree, send_time)
Entry = Tuple[tuple, float]


class NetworkConfiguration:
    """Environment plus status field Ψ, clock and firing metadata."""

    def __init__(self, env: Environment, horizon: float = math.inf):
        env.check_wellformed()
        self.env = env
        self.status: Dict[int, Dict[int, Entry]] = {d: {} for d in env.topology}
        self.clock: float = 0.0
        self.horizon = horizon
        self.last_fire: Dict[int, float] = {}
        self.last_sensors: Dict[int, SensorSnapshot] = {}
        self.default_interval: Dict[int, float] = {}

    # -- views ---------------------------------------------------------------

    def filtered_view(self, d: int, now: Optional[float] = None) -> Dict[int, Entry]:
        """Staleness/topology filter F(Ψ)(d): drops entries older than the
        horizon or from devices no longer neighbours (own entry only ages
        out)."""
        now = self.clock if now is None else now
        nbrs = self.env.topology[d]
        out = {}
        for j, entry in self.status[d].items():
            if now - entry[1] > self.horizon:
                continue
            if j != d and j not in nbrs:
                continue
            out[j] = entry
        return out

    def sensor_snapshot(self, d: int, now: Optional[float] = None,
                        offered=None) -> SensorSnapshot:
        now = self.clock if now is None else now
        if offered is None:
            offered = self.filtered_view(d, now)
        named = self.env.sensors.get(d, {})
        nbr_range: Dict[int, float] = {}
        nbr_lag: Dict[int, float] = {}
        pos = self.env.positions
        for j, entry in offered.items():
            if j == d:
                continue
            # quantise to the nanosecond grid: scheduler float arithmetic
            # drifts by ulps, and steady-state trees must repeat bit-exactly
            nbr_lag[j] = round(now - entry[1], 9)
            if pos is not None:
                xd, yd = pos[d]
                xj, yj = pos[j]
                nbr_range[j] = math.hypot(xd - xj, yd - yj)
        static_ranges = named.get("nbrRange")
        if static_ranges is not None:
            nbr_range = {j: static_ranges[j] for j in nbr_lag if j in static_ranges}
        if d in self.last_fire:
            interval = round(now - self.last_fire[d], 9)
        else:
            interval = self.default_interval.get(d, 1.0)
        if interval <= 0:
            interval = self.default_interval.get(d, 1.0)
        extras = {}
        for name, value in named.items():
            if name in RESERVED_SENSORS or name == "nbrRange":
                continue
            extras[name] = value(d, now) if callable(value) else value
        return SensorSnapshot(
            sns_num=named.get("snsNum", 0.0),
            interval=interval,
            nbr_range=nbr_range,
            nbr_lag=nbr_lag,
            extras=extras,
        )

    # -- transitions -----------------------------------------------------------

    def fire_inplace(self, d: int, code: Code, now: Optional[float] = None,
                     rep_seed=None) -> tuple:
        """Rule N-FIR at device ``d``; returns the produced value tree."""
        if d not in self.status:
            raise FieldCalcError(f"unknown device {d}")
        now = self.clock if now is None else now
        offered = self.filtered_view(d, now)
        sensors = self.sensor_snapshot(d, now, offered)
        env_list = [(j, entry[0]) for j, entry in offered.items()]
        try:
            tree = evaluate(d, env_list, sensors, code, rep_seed)
        except FieldCalcError as exc:
            raise DeviceError(d, now, exc) from exc
        entry = (tree, now)
        self.status[d][d] = entry
        for j in self.env.topology[d]:
            if j in self.status:
                self.status[j][d] = entry
        self.last_fire[d] = now
        self.last_sensors[d] = sensors
        self.clock = max(self.clock, now)
        return tree

    def copy(self) -> "NetworkConfiguration":
        dup = NetworkConfiguration.__new__(NetworkConfiguration)
        dup.env = Environment(
            {d: frozenset(v) for d, v in self.env.topology.items()},
            {d: dict(v) for d, v in self.env.sensors.items()},
            None if self.env.positions is None else dict(self.env.positions))
        dup.status = {d: dict(v) for d, v in self.status.items()}
        dup.clock = self.clock
        dup.horizon = self.horizon
        dup.last_fire = dict(self.last_fire)
        dup.last_sensors = dict(self.last_sensors)
        dup.default_interval = dict(self.default_interval)
        return dup


def fire(n: NetworkConfiguration, d: int, code: Code,
         now: Optional[float] = None) -> NetworkConfiguration:
    """Functional N-FIR: returns the successor configuration."""
    out = n.copy()
    out.fire_inplace(d, code, now)
    return out


def env_change(n: NetworkConfiguration, env2: Environment) -> NetworkConfiguration:
    """Rule N-ENV: new devices get empty contexts, removed devices drop,
    surviving devices keep their value-tree environments."""
    env2.check_wellformed()
    out = n.copy()
    out.env = env2
    out.status = {d: (n.status.get(d, {}).copy()) for d in env2.topology}
    out.last_fire = {d: t for d, t in n.last_fire.items() if d in env2.topology}
    out.last_sensors = {d: s for d, s in n.last_sensors.items()
                        if d in env2.topology}
    out.default_interval = {d: p for d, p in n.default_interval.items()
                            if d in env2.topology}
    return out


def initial_configuration(env: Environment,
                          horizon: float = math.inf) -> NetworkConfiguration:
    """N-ENV applied to the empty network."""
    return NetworkConfiguration(env, horizon)


def filter_stale(n: NetworkConfiguration, horizon: float):
    """Per-device filtered views at the current clock (spec operation)."""
    saved = n.horizon
    n.horizon = horizon
    try:
        return {d: {j: e[0] for j, e in n.filtered_view(d).items()}
                for d in n.status}
    finally:
        n.horizon = saved


def snapshot_field(n: NetworkConfiguration) -> Dict[int, object]:
    """Φ(δ) = root of Ψ(δ)(δ): each device's own latest root value."""
    missing = [d for d in sorted(n.status) if d not in n.status[d]]
    if missing:
        raise NeverFired(missing)
    return {d: n.status[d][d][0][0] for d in sorted(n.status)}


def is_stable(n: NetworkConfiguration, code: Code) -> bool:
    """A configuration is stable iff no firing changes it: every device's
    re-evaluation reproduces its stored tree exactly (modulo receipt
    timestamps).

    Time-derived sensor values (nbrLag, sns_interval) are replayed from the
    device's last firing: under an interleaved schedule no single probe
    instant reproduces every device's lag pattern, and the stability notion
    is about the exchanged trees, not the wall clock."""
    for d in sorted(n.status):
        stored = n.status[d].get(d)
        if stored is None:
            return False
        now = n.last_fire.get(d, n.clock) + n.default_interval.get(d, 0.0)
        offered = n.filtered_view(d, now)
        sensors = n.sensor_snapshot(d, now, offered)
        replay = n.last_sensors.get(d)
        if replay is not None:
            sensors = SensorSnapshot(
                sns_num=sensors.sns_num, interval=replay.interval,
                nbr_range=sensors.nbr_range,
                nbr_lag={j: replay.nbr_lag.get(j, lag)
                         for j, lag in sensors.nbr_lag.items()},
                extras=sensors.extras)
        env_list = [(j, entry[0]) for j, entry in offered.items()]
        try:
            tree = evaluate(d, env_list, sensors, code)
        except FieldCalcError as exc:
            raise DeviceError(d, n.clock, exc) from exc
        if stored[0] != tree:
            return False
    return True
