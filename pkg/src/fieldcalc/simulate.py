"""Discrete-event network simulator: seeded fair scheduler, mobility,
perturbations, trace recording and CSV export.

Each device fires periodically at its own period (optionally jittered),
positions update at the device's own firings (random walk), topology is
recomputed from positions and the communication radius before each firing,
and scheduled perturbations apply as environment changes.  Identical
(scenario, program, seed) triples produce bit-identical traces.
"""

from __future__ import annotations

import heapq
import io
import math
import random
from dataclasses import dataclass, field as dfield
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import ScenarioError
from .network import Environment, NetworkConfiguration
from .runtime import Code, render_value


@dataclass
class Perturbation:
    time: float
    kind: str          # "set_sensor" | "teleport"
    device: Optional[int]  # None = all devices (set_sensor)
    payload: tuple

    def __post_init__(self):
        if self.kind not in ("set_sensor", "teleport"):
            raise ScenarioError(f"unknown perturbation kind {self.kind!r}")


@dataclass
class Scenario:
    device_count: int
    width: float = 200.0
    height: float = 20.0
    comm_radius: float = 30.0
    base_period: float = 1.0
    jitter: str = "fixed"              # "fixed" | "uniform"
    period_lo: float = 0.0
    period_hi: float = 0.0
    mobility: str = "still"            # "still" | "random_walk"
    speed: float = 0.0
    duration: float = 10.0
    seed: int = 0
    horizon: Optional[float] = None    # default 3 x base period
    sensors: Dict[str, object] = dfield(default_factory=dict)
    perturbations: List[Perturbation] = dfield(default_factory=list)
    positions: Optional[List[Tuple[float, float]]] = None
    require_connected: bool = False

    def __post_init__(self):
        if self.comm_radius <= 0:
            raise ScenarioError("commRadius must be positive")
        if self.duration <= 0:
            raise ScenarioError("duration must be positive")

    def staleness_horizon(self) -> float:
        if self.horizon is not None:
            return self.horizon
        hi = self.period_hi if self.jitter == "uniform" else self.base_period
        return 3.0 * max(self.base_period, hi)


@dataclass
class TraceRecord:
    time: float
    action: str        # "fire" | "env"
    device: int        # -1 for env actions
    value: object      # root value produced (None for env actions)


class Trace:
    """Ordered transition records plus sampled per-device value series."""

    def __init__(self):
        self.records: List[TraceRecord] = []
        self.final_snapshot: Dict[int, object] = {}
        self.schedule_hash: int = 0

    def add(self, rec: TraceRecord):
        self.records.append(rec)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("time,action,deviceId,value\n")
        for r in self.records:
            val = "" if r.value is None else render_value(r.value)
            dev = "" if r.device < 0 else str(r.device)
            out.write(f"{r.time:.6f},{r.action},{dev},{val}\n")
        return out.getvalue()


def _uniform_positions(rng: random.Random, n: int, w: float, h: float):
    return [(rng.uniform(0.0, w), rng.uniform(0.0, h)) for _ in range(n)]


def _full_topology(positions: Dict[int, Tuple[float, float]], radius: float):
    ids = sorted(positions)
    topo = {d: set() for d in ids}
    for i, d in enumerate(ids):
        xd, yd = positions[d]
        for j in ids[i + 1:]:
            xj, yj = positions[j]
            if math.hypot(xd - xj, yd - yj) <= radius:
                topo[d].add(j)
                topo[j].add(d)
    return {d: frozenset(v) for d, v in topo.items()}


def _connected(topo: Dict[int, frozenset]) -> bool:
    ids = sorted(topo)
    if not ids:
        return True
    seen = {ids[0]}
    stack = [ids[0]]
    while stack:
        d = stack.pop()
        for j in topo[d]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(ids)


class Simulator:
    """One deterministic run of a scenario; step() advances one event.

    ``rep_seed_factory(device, round_index)`` may return a per-firing rep
    seeding hook (or None); used to randomise initial states."""

    def __init__(self, scenario: Scenario, code: Code, rep_seed=None,
                 rep_seed_factory=None, mobility_fn=None, record=True):
        self.sc = scenario
        self.code = code
        # seed with a string: str seeding is stable across processes, while
        # tuple seeding falls back to randomised hash()
        self.rng = random.Random(f"fieldcalc:{scenario.seed}")
        n = scenario.device_count

        if scenario.positions is not None:
            if len(scenario.positions) != n:
                raise ScenarioError("positions list length != device count")
            positions = {d: scenario.positions[d] for d in range(n)}
        else:
            while True:
                pts = _uniform_positions(self.rng, n, scenario.width,
                                         scenario.height)
                positions = {d: pts[d] for d in range(n)}
                if not scenario.require_connected:
                    break
                if _connected(_full_topology(positions, scenario.comm_radius)):
                    break
        self.positions = positions

        if scenario.jitter == "uniform":
            if not (0 < scenario.period_lo <= scenario.period_hi):
                raise ScenarioError("uniform jitter needs 0 < lo <= hi")
            self.periods = {d: self.rng.uniform(scenario.period_lo,
                                                scenario.period_hi)
                            for d in range(n)}
        elif scenario.jitter == "fixed":
            self.periods = {d: scenario.base_period for d in range(n)}
        else:
            raise ScenarioError(f"unknown jitter mode {scenario.jitter!r}")

        sensors = {d: {} for d in range(n)}
        for name, spec in scenario.sensors.items():
            for d in range(n):
                sensors[d][name] = _sensor_value(spec, d)

        env = Environment(_full_topology(positions, scenario.comm_radius),
                          sensors, positions)
        self.net = NetworkConfiguration(env, scenario.staleness_horizon())
        self.net.default_interval = dict(self.periods)

        self.directions = {d: self.rng.uniform(0.0, 2 * math.pi)
                           for d in range(n)}
        self.rounds = {d: 0 for d in range(n)}
        self.rep_seed = rep_seed
        self.rep_seed_factory = rep_seed_factory
        self.mobility_fn = mobility_fn
        self.record = record
        self.fire_count = 0
        self.last_change: float = 0.0

        self.queue: List[Tuple[float, int, int]] = []
        for d in range(n):
            t0 = self.rng.uniform(0.0, self.periods[d])
            heapq.heappush(self.queue, (t0, 1, d))
        self._perts = sorted(scenario.perturbations, key=lambda p: p.time)
        for i, p in enumerate(self._perts):
            heapq.heappush(self.queue, (p.time, 0, i))
        self.trace = Trace()
        self._hash = 0

    # -- event handling -------------------------------------------------------

    def _apply_perturbation(self, p: Perturbation, now: float):
        env = self.net.env
        if p.kind == "set_sensor":
            name, value = p.payload
            targets = env.sensors if p.device is None else {p.device: None}
            for d in targets:
                env.sensors[d][name] = value
        elif p.kind == "teleport":
            x, y = p.payload
            self.positions[p.device] = (x, y)
            env.positions[p.device] = (x, y)
            env.topology = _full_topology(self.positions, self.sc.comm_radius)
        self.trace.add(TraceRecord(now, "env", -1, None))

    def _move(self, d: int, now: float):
        sc = self.sc
        if sc.mobility != "random_walk" or sc.speed <= 0:
            return
        last = self.net.last_fire.get(d)
        if last is None:
            return
        dist = sc.speed * (now - last)
        x, y = self.positions[d]
        ang = self.directions[d]
        x += dist * math.cos(ang)
        y += dist * math.sin(ang)
        # reflect at the arena walls
        if x < 0:
            x = -x
        if x > sc.width:
            x = 2 * sc.width - x
        if y < 0:
            y = -y
        if y > sc.height:
            y = 2 * sc.height - y
        x = min(max(x, 0.0), sc.width)
        y = min(max(y, 0.0), sc.height)
        self.positions[d] = (x, y)
        self.net.env.positions[d] = (x, y)
        self.directions[d] = self.rng.uniform(0.0, 2 * math.pi)

    def _refresh_neighbourhood(self, d: int):
        radius = self.sc.comm_radius
        xd, yd = self.positions[d]
        nbrs = set()
        topo = dict(self.net.env.topology)
        for j, (xj, yj) in self.positions.items():
            if j != d and math.hypot(xd - xj, yd - yj) <= radius:
                nbrs.add(j)
        old = topo.get(d, frozenset())
        topo[d] = frozenset(nbrs)
        # keep links symmetric so delivery and later firings agree
        for j in nbrs - old:
            topo[j] = topo[j] | {d}
        for j in old - nbrs:
            topo[j] = topo[j] - {d}
        self.net.env.topology = topo

    def step(self) -> Optional[float]:
        """Process one event; returns its time or None when past duration."""
        if not self.queue:
            return None
        t, prio, key = heapq.heappop(self.queue)
        if t > self.sc.duration:
            return None
        if prio == 0:
            self._apply_perturbation(self._perts[key], t)
            self.net.clock = max(self.net.clock, t)
            return t
        d = key
        if self.mobility_fn is not None:
            pos = self.mobility_fn(self, d, t)
            if pos is not None:
                self.positions[d] = pos
                self.net.env.positions[d] = pos
            self._refresh_neighbourhood(d)
        elif self.sc.mobility == "random_walk":
            self._move(d, t)
            self._refresh_neighbourhood(d)
        self.rounds[d] += 1
        hook = self.rep_seed
        if self.rep_seed_factory is not None:
            hook = self.rep_seed_factory(d, self.rounds[d])
        prev = self.net.status[d].get(d)
        tree = self.net.fire_inplace(d, self.code, t, hook)
        if prev is None or prev[0] != tree:
            self.last_change = t
        self.fire_count += 1
        if self.record:
            self.trace.add(TraceRecord(t, "fire", d, tree[0]))
        self._hash = hash((self._hash, round(t * 1e9), d,
                           tuple(sorted(self.net.env.topology[d]))))
        heapq.heappush(self.queue, (t + self.periods[d], 1, d))
        return t

    def run(self) -> Trace:
        while self.step() is not None:
            pass
        tr = self.trace
        tr.schedule_hash = self._hash
        try:
            from .network import snapshot_field
            tr.final_snapshot = snapshot_field(self.net)
        except Exception:
            tr.final_snapshot = {}
        return tr


def _sensor_value(spec, device):
    """Expand a scenario sensor spec into a per-device value or callable."""
    if isinstance(spec, tuple) and spec and spec[0] == "indicator":
        _, ids, on, off = spec
        return on if device in ids else off
    if isinstance(spec, tuple) and spec and spec[0] == "sine_noise":
        _, amp, period, noise, seed = spec

        def value(d, now, _amp=amp, _p=period, _n=noise, _s=seed):
            clean = _amp * math.sin(2 * math.pi * now / _p)
            if _n == 0:
                return clean
            r = random.Random(f"{_s}:{d}:{round(now * 1e6)}")
            return clean + r.uniform(-_n, _n)

        return value
    if isinstance(spec, tuple) and spec and spec[0] == "square_noise":
        _, amp, period, noise, seed = spec

        def value(d, now, _amp=amp, _p=period, _n=noise, _s=seed):
            phase = (now / _p) % 1.0
            clean = _amp if phase < 0.5 else -_amp
            if _n == 0:
                return clean
            r = random.Random(f"{_s}:{d}:{round(now * 1e6)}")
            return clean + r.uniform(-_n, _n)

        return value
    return spec  # constant


def run(scenario: Scenario, code: Code, rep_seed=None) -> Trace:
    """Run a scenario to completion; deterministic in (scenario, seed)."""
    return Simulator(scenario, code, rep_seed).run()


# --- scenario files ----------------------------------------------------------

_ARENA_KEYS = {"width", "height", "comm_radius"}
_DEVICE_KEYS = {"count", "mobility", "speed", "placement"}
_SCHEDULE_KEYS = {"base_period", "jitter", "period_lo", "period_hi",
                  "duration", "seed", "horizon"}


def parse_scenario(text: str) -> Scenario:
    """Parse the sectioned key-value scenario format.

    Sections: [arena], [devices], [schedule], [sensors], [perturbations].
    Unknown sections or keys are rejected.
    """
    section = None
    fields: Dict[str, str] = {}
    sensors: Dict[str, object] = {}
    perts: List[Perturbation] = []
    positions: List[Tuple[float, float]] = []

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section not in ("arena", "devices", "schedule", "sensors",
                               "perturbations"):
                raise ScenarioError(f"line {lineno}: unknown section {section!r}")
            continue
        if section is None:
            raise ScenarioError(f"line {lineno}: key outside any section")
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if section == "arena":
            if key not in _ARENA_KEYS:
                raise ScenarioError(f"line {lineno}: unknown arena key {key!r}")
            fields[key] = value
        elif section == "devices":
            if key == "position":
                x, y = (float(v) for v in value.split())
                positions.append((x, y))
            elif key not in _DEVICE_KEYS:
                raise ScenarioError(f"line {lineno}: unknown devices key {key!r}")
            else:
                fields[key] = value
        elif section == "schedule":
            if key not in _SCHEDULE_KEYS:
                raise ScenarioError(f"line {lineno}: unknown schedule key {key!r}")
            fields[key] = value
        elif section == "sensors":
            sensors[key] = _parse_sensor_spec(value, lineno)
        elif section == "perturbations":
            if key != "at":
                raise ScenarioError(
                    f"line {lineno}: perturbations use 'at = <time> <kind> ...'")
            perts.append(_parse_perturbation(value, lineno))

    def fget(key, conv, default):
        if key not in fields:
            return default
        return conv(fields[key])

    sc = Scenario(
        device_count=fget("count", int, len(positions) or 1),
        width=fget("width", float, 200.0),
        height=fget("height", float, 20.0),
        comm_radius=fget("comm_radius", float, 30.0),
        base_period=fget("base_period", float, 1.0),
        jitter=fget("jitter", str, "fixed"),
        period_lo=fget("period_lo", float, 0.0),
        period_hi=fget("period_hi", float, 0.0),
        mobility=fget("mobility", str, "still"),
        speed=fget("speed", float, 0.0),
        duration=fget("duration", float, 10.0),
        seed=fget("seed", int, 0),
        horizon=fget("horizon", float, None),
        sensors=sensors,
        perturbations=perts,
        positions=positions or None,
    )
    placement = fields.get("placement", "uniform")
    if placement == "connected":
        sc.require_connected = True
    elif placement not in ("uniform", "explicit"):
        raise ScenarioError(f"unknown placement {placement!r}")
    return sc


def _parse_sensor_spec(value: str, lineno: int):
    parts = value.split()
    if not parts:
        raise ScenarioError(f"line {lineno}: empty sensor spec")
    kind = parts[0]
    if kind == "const":
        return _parse_scalar(parts[1])
    if kind == "indicator":
        # indicator <id,id,...> <on> <off>
        ids = frozenset(int(x) for x in parts[1].split(",") if x != "")
        on = _parse_scalar(parts[2])
        off = _parse_scalar(parts[3])
        return ("indicator", ids, on, off)
    if kind in ("sine_noise", "square_noise"):
        amp, period, noise, seed = (float(parts[1]), float(parts[2]),
                                    float(parts[3]), int(parts[4]))
        return (kind, amp, period, noise, seed)
    raise ScenarioError(f"line {lineno}: unknown sensor spec {kind!r}")


def _parse_scalar(tok: str):
    if tok == "true":
        return True
    if tok == "false":
        return False
    if tok == "infinity":
        return math.inf
    if tok == "-infinity":
        return -math.inf
    return float(tok)


def _parse_perturbation(value: str, lineno: int) -> Perturbation:
    parts = value.split()
    try:
        t = float(parts[0])
        kind = parts[1]
        if kind == "set_sensor":
            name = parts[2]
            dev = None if parts[3] == "all" else int(parts[3])
            return Perturbation(t, "set_sensor", dev,
                                (name, _parse_scalar(parts[4])))
        if kind == "teleport":
            return Perturbation(t, "teleport", int(parts[2]),
                                (float(parts[3]), float(parts[4])))
    except (IndexError, ValueError) as exc:
        raise ScenarioError(f"line {lineno}: bad perturbation: {exc}")
    raise ScenarioError(f"line {lineno}: unknown perturbation {parts[1]!r}")
