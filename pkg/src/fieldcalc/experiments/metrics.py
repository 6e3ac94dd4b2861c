"""Metric series over simulation runs: errors vs oracles, value stability,
RMSE against a driver signal.  Samples align to a fixed 1 s reporting grid;
aggregation is mean over devices (and over seeds at the CSV level)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield
from typing import Callable, Dict, List, Optional, Tuple

REPORT_STEP = 1.0
ERROR_CAP = 500.0  # one-sided infinity clamp so means stay finite


@dataclass
class MetricSeries:
    name: str
    samples: List[Tuple[float, float]] = dfield(default_factory=list)

    def add(self, t: float, v: float):
        self.samples.append((t, v))

    def values(self):
        return [v for _, v in self.samples]

    def mean(self) -> float:
        vs = self.values()
        return sum(vs) / len(vs) if vs else math.nan

    def tail_mean(self, frac: float = 0.1) -> float:
        vs = self.values()
        k = max(1, int(len(vs) * frac))
        tail = vs[-k:]
        return sum(tail) / len(tail)

    def recovery_time(self, after: float, tol_frac: float = 0.05,
                      eps: float = 1e-9) -> float:
        """First grid time >= `after` at which the series falls within
        tol_frac of its final (tail-mean) level; inf if it never does."""
        final = self.tail_mean()
        bound = abs(final) * (1.0 + tol_frac) + eps
        for t, v in self.samples:
            if t >= after and v <= bound:
                return t
        return math.inf


def abs_error(value, truth) -> float:
    """|value - truth| with infinities handled: agreeing infinities count as
    zero error, a one-sided infinity is clamped."""
    try:
        if value == truth:
            return 0.0
        if math.isinf(value) or math.isinf(truth):
            return ERROR_CAP
        e = abs(value - truth)
    except TypeError:
        return ERROR_CAP
    if math.isnan(e):
        return ERROR_CAP
    return min(e, ERROR_CAP)


class GridSampler:
    """Drives a Simulator and collects metrics at each grid boundary."""

    def __init__(self, sim, step: float = REPORT_STEP):
        self.sim = sim
        self.step = step
        self.next_t = step

    def run(self, on_sample: Callable[[float], None]):
        while True:
            t = self.sim.step()
            if t is None:
                break
            while t >= self.next_t:
                on_sample(self.next_t)
                self.next_t += self.step


def snapshot_roots(sim) -> Dict[int, object]:
    """Current per-device own roots (devices that have fired)."""
    out = {}
    for d, env in sim.net.status.items():
        entry = env.get(d)
        if entry is not None:
            out[d] = entry[0][0]
    return out


def metric_value_stability(value_log: Dict[int, List[float]]) -> float:
    """Mean |v_t - v_{t-1}| across devices for one reporting step: feed the
    last two recorded values per device."""
    diffs = []
    for vals in value_log.values():
        if len(vals) >= 2:
            diffs.append(abs_error(vals[-1], vals[-2]))
    return sum(diffs) / len(diffs) if diffs else 0.0


def csv_rows(header: Tuple[str, ...], rows) -> str:
    import io
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_cell(c) for c in row) + "\n")
    return out.getvalue()


def _cell(c) -> str:
    if isinstance(c, float):
        return f"{c:.9g}"
    return str(c)
