"""Case studies on synthetic geometry: crowd-size estimation and evacuation
alert, each over the eight {G,G'}x{C,C'}x{T,T'} variant combinations."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dfield
from typing import Dict, List, Optional, Sequence, Tuple

from .. import blocks
from ..runtime import compile_program
from ..simulate import Perturbation, Scenario, Simulator
from .metrics import GridSampler, MetricSeries, abs_error, csv_rows, snapshot_roots

VARIANT_GRID = tuple(f"{g}{c}{t}" for g in "Gg" for c in "Cc" for t in "Tt")
# uppercase = default block, lowercase = alternate (g = FLEX, c = multipath,
# t = spatial smoothing)


# --- crowd size ----------------------------------------------------------------

CLUSTER_DIST = 4.0

_crowd_codes: Dict[Tuple[str, float], object] = {}
_evac_codes: Dict[Tuple[str, float], object] = {}


@dataclass
class CrowdSetup:
    device_count: int = 48
    width: float = 120.0
    height: float = 60.0
    comm_radius: float = 25.0
    period: float = 2.0
    duration: float = 140.0
    walk_speed: float = 1.4
    acts: Tuple[Tuple[float, float], ...] = ((20.0, 30.0), (100.0, 30.0))
    degenerate: bool = False   # everyone placed exactly at act 1, still


def _crowd_main(variant: str, radius: float) -> str:
    g, c, t = variant[0], variant[1], variant[2]
    pot = "G_distanceTo(src())" if g == "G" else \
        f"G'_flex_distance(src(), {radius})"
    track = "T_track" if t == "T" else "T'_track_002"
    col = "C_sum" if c == "C" else "C'_sum"
    return f"{track}({col}({pot}, {track}(crowd())))"


def _crowd_truth(positions, members, act_ids) -> Dict[int, int]:
    """Ground truth: chain-connected crowd members assigned to the nearest
    reachable act (chains link devices within 2x the clustering distance)."""
    link = 2.0 * CLUSTER_DIST
    nodes = sorted(set(members) | set(act_ids))
    adj = {d: [] for d in nodes}
    for i, a in enumerate(nodes):
        xa, ya = positions[a]
        for b in nodes[i + 1:]:
            xb, yb = positions[b]
            if math.hypot(xa - xb, ya - yb) <= link:
                adj[a].append(b)
                adj[b].append(a)
    counts = {a: 0 for a in act_ids}
    for d in members:
        if d in act_ids:
            continue
        # reachable acts through the chain graph
        seen = {d}
        stack = [d]
        reach = []
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
                    if v in act_ids:
                        reach.append(v)
        if not reach:
            continue
        xd, yd = positions[d]
        best = min(reach, key=lambda a: (math.hypot(positions[a][0] - xd,
                                                    positions[a][1] - yd), a))
        counts[best] += 1
    return counts


def crowd_size_scenario(seeds: int = 3,
                        variants: Sequence[str] = VARIANT_GRID,
                        setup: Optional[CrowdSetup] = None,
                        base_seed: int = 300):
    """Run the crowd-size estimation study; returns (csv, summary).

    summary maps (seed, variant) -> MetricSeries of the per-act mean absolute
    count error."""
    st = setup or CrowdSetup()
    n = st.device_count
    act1, act2 = n - 1, n - 2     # anchors carry the highest ids
    act_ids = (act1, act2)
    series: Dict[Tuple[int, str], MetricSeries] = {}

    for s in range(seeds):
        seed = base_seed + s
        rng = random.Random(f"crowd:{seed}")
        if st.degenerate:
            positions = [st.acts[0]] * (n - 2) + [st.acts[1], st.acts[0]]
            goals = {d: 0 for d in range(n - 2)}
        else:
            positions = [(rng.uniform(0, st.width), rng.uniform(0, st.height))
                         for _ in range(n - 2)] + [st.acts[1], st.acts[0]]
            goals = {d: rng.randrange(len(st.acts)) for d in range(n - 2)}

        scenario = Scenario(
            device_count=n, width=st.width, height=st.height,
            comm_radius=st.comm_radius, base_period=st.period,
            duration=st.duration, seed=seed,
            sensors={"src": ("indicator", frozenset(act_ids), True, False)},
            positions=positions)

        def mobility(sim, d, now, _goals=goals):
            if st.degenerate or d in act_ids:
                return None
            gx, gy = st.acts[_goals[d]]
            x, y = sim.positions[d]
            dist = math.hypot(gx - x, gy - y)
            if dist <= 2.0:
                return None
            step = min(st.walk_speed * st.period, dist - 1.5)
            return (x + step * (gx - x) / dist, y + step * (gy - y) / dist)

        for variant in variants:
            code = _crowd_codes.setdefault(
                (variant, st.comm_radius),
                compile_program(blocks.instantiate(
                    _crowd_main(variant, st.comm_radius))))
            sim = Simulator(scenario, code, mobility_fn=mobility, record=False)

            def crowd_sensor(d, now, _sim=sim):
                if d in act_ids:
                    return 0.0
                x, y = _sim.positions[d]
                for j, (xj, yj) in _sim.positions.items():
                    if j != d and j not in act_ids and \
                            math.hypot(x - xj, y - yj) <= CLUSTER_DIST:
                        return 1.0
                return 0.0

            for d in range(n):
                sim.net.env.sensors[d]["crowd"] = crowd_sensor

            ms = MetricSeries("crowd_error")

            def on_sample(t, _sim=sim, _ms=ms):
                roots = snapshot_roots(_sim)
                members = [d for d in range(n)
                           if _sim.net.env.sensors[d]["crowd"](d, t) > 0.5]
                truth = _crowd_truth(_sim.positions, members, act_ids)
                errs = [abs_error(roots.get(a, 0.0), float(truth[a]))
                        for a in act_ids]
                _ms.add(t, sum(errs) / len(errs))

            GridSampler(sim, step=2.0).run(on_sample)
            series[(seed, variant)] = ms

    rows = []
    for (seed, variant), ms in sorted(series.items()):
        for t, v in ms.samples:
            rows.append((f"{t:.3f}", seed, variant, "crowd_error", v))
    return csv_rows(("time", "seed", "variant", "metric", "value"), rows), series


# --- evacuation alert ----------------------------------------------------------

@dataclass
class EvacSetup:
    device_count: int = 48
    size: float = 100.0
    zone_radius: float = 30.0
    comm_radius: float = 30.0
    period: float = 2.0
    duration: float = 90.0
    alert_time: float = 20.0
    walk_speed: float = 1.4


def _evac_main(variant: str, radius: float) -> str:
    g, c, t = variant[0], variant[1], variant[2]

    def dist(src_expr: str) -> str:
        if g == "G":
            return f"G_distanceTo({src_expr})"
        return f"G'_flex_distance({src_expr}, {radius})"

    pot = dist("coord()")
    any_fn = "C_any" if c == "C" else "C'_any"
    collected = f"{any_fn}({pot}, alert())"
    if t == "T":
        tracked = f"T_track({collected})"
    else:
        tracked = f"T'_track_002(mux({collected}, 1, 0)) > 0.5"
    alerted = f"G_broadcast(coord(), {tracked})"
    return (f"let alerted = {alerted} in "
            f"pair(alerted, {dist('mux(zone(), false, alerted)')})")


def evacuation_scenario(seeds: int = 3,
                        variants: Sequence[str] = VARIANT_GRID,
                        setup: Optional[EvacSetup] = None,
                        base_seed: int = 500):
    """Run the evacuation-alert study; returns (csv, summary with per-run
    error series in [0, 1])."""
    st = setup or EvacSetup()
    n = st.device_count
    coord = n - 1
    centre = (st.size / 2.0, st.size / 2.0)
    series: Dict[Tuple[int, str], MetricSeries] = {}

    for s in range(seeds):
        seed = base_seed + s
        rng = random.Random(f"evac:{seed}")
        positions = [(rng.uniform(0, st.size), rng.uniform(0, st.size))
                     for _ in range(n - 1)] + [centre]
        init_in_zone = [d for d in range(n)
                        if _in_disc(positions[d], centre, st.zone_radius)]
        n_zone = max(len(init_in_zone), 1)
        waypoints = [(centre[0] + (st.zone_radius + 6) * math.cos(a),
                      centre[1] + (st.zone_radius + 6) * math.sin(a))
                     for a in [k * math.pi / 4 for k in range(8)]]

        scenario = Scenario(
            device_count=n, width=st.size, height=st.size,
            comm_radius=st.comm_radius, base_period=st.period,
            duration=st.duration, seed=seed,
            sensors={"coord": ("indicator", frozenset({coord}), True, False),
                     "alert": False},
            perturbations=[Perturbation(st.alert_time, "set_sensor", coord,
                                        ("alert", True))],
            positions=positions)

        for variant in variants:
            code = _evac_codes.setdefault(
                (variant, st.comm_radius),
                compile_program(blocks.instantiate(
                    _evac_main(variant, st.comm_radius))))

            def mobility(sim, d, now):
                if d == coord:
                    return None
                pos = sim.positions[d]
                if not _in_disc(pos, centre, st.zone_radius):
                    return None
                entry = sim.net.status[d].get(d)
                if entry is None or not _alerted_of(entry[0][0]):
                    return None
                wp = min(waypoints,
                         key=lambda w: math.hypot(w[0] - pos[0], w[1] - pos[1]))
                dx, dy = wp[0] - pos[0], wp[1] - pos[1]
                dist = math.hypot(dx, dy)
                if dist < 1.0:
                    return None
                step = min(st.walk_speed * st.period, dist)
                return (pos[0] + step * dx / dist, pos[1] + step * dy / dist)

            sim = Simulator(scenario, code, mobility_fn=mobility, record=False)
            ms = MetricSeries("evac_error")

            def on_sample(t, _sim=sim, _ms=ms):
                _ms.add(t, _evac_error(_sim, centre, st.zone_radius, n_zone))

            GridSampler(sim, step=2.0).run(on_sample)
            series[(seed, variant)] = ms

    rows = []
    for (seed, variant), ms in sorted(series.items()):
        for t, v in ms.samples:
            rows.append((f"{t:.3f}", seed, variant, "evac_error", v))
    return csv_rows(("time", "seed", "variant", "metric", "value"), rows), series


def _in_disc(pos, centre, radius) -> bool:
    return math.hypot(pos[0] - centre[0], pos[1] - centre[1]) <= radius


def _alerted_of(root) -> bool:
    if isinstance(root, tuple) and root:
        return root[0] is True
    return False


def _evac_error(sim, centre, zone_radius, n_zone) -> float:
    """Mean normalised direction error per the case-study formula."""
    total = 0.0
    for d, env in sim.net.status.items():
        entry = env.get(d)
        if entry is None:
            continue
        root = entry[0][0]
        alerted = _alerted_of(root)
        pos = sim.positions[d]
        in_zone = _in_disc(pos, centre, zone_radius)
        if not in_zone and not alerted:
            continue
        if not (in_zone and alerted):   # alert/zone mismatch
            total += 1.0
            continue
        # in zone and alerted: compare suggested vs optimal direction
        suggestion = _suggested_direction(sim, d, pos)
        if suggestion is None:
            total += 1.0
            continue
        optimal = math.atan2(pos[1] - centre[1], pos[0] - centre[0])
        diff = abs(optimal - suggestion) % (2 * math.pi)
        diff = min(diff, 2 * math.pi - diff)
        total += (diff / math.pi) ** 2
    return total / n_zone


def _suggested_direction(sim, d, pos) -> Optional[float]:
    best = None
    best_val = math.inf
    for j in sorted(sim.net.env.topology[d]):
        entry = sim.net.status[j].get(j)
        if entry is None:
            continue
        root = entry[0][0]
        if not (isinstance(root, tuple) and len(root) == 2):
            continue
        val = root[1]
        if isinstance(val, (int, float)) and val < best_val:
            best_val = val
            best = j
    if best is None or math.isinf(best_val):
        return None
    bx, by = sim.positions[best]
    return math.atan2(by - pos[1], bx - pos[0])
