"""Path-weight oracle: the eventual value of a minimising rep.

The eventual field of a minimising rep is, per device, the minimum over all
network paths ending there of the path weight: seed with the head device's
local value, then fold the monotonic-progressive function along the edges.
Monotonicity justifies a priority-first (Dijkstra-style) computation; a
runtime guard trips when progressivity is violated.
"""

from __future__ import annotations

import heapq
import itertools
import math
from typing import Callable, Dict, FrozenSet, Optional

from ..errors import NonTermination
from ..runtime import lex_cmp


def path_weight_oracle(topology: Dict[int, FrozenSet[int]],
                       edge_inputs: Callable[[int, int], tuple],
                       fmp: Callable[..., object],
                       local_field: Dict[int, object]) -> Dict[int, object]:
    """Minimal path weight per device.

    ``fmp(value, *edge_inputs(v, u))`` is the weight of extending a path
    ending at ``u`` with the edge to ``v`` (edge inputs are the values of the
    extra fields at ``v`` projected to neighbour ``u``).  ``local_field``
    gives each device's own seed.  Values are compared lexicographically.
    """
    dist = dict(local_field)
    counter = itertools.count()
    heap = [(_Key(v), next(counter), d) for d, v in sorted(dist.items())]
    heapq.heapify(heap)
    settled = set()
    relaxations = 0
    limit = 4 * (len(topology) ** 2 + 16)
    while heap:
        key, _, u = heapq.heappop(heap)
        if u in settled or lex_cmp(key.value, dist[u]) > 0:
            continue
        settled.add(u)
        for v in sorted(topology.get(u, ())):
            if v in settled:
                continue
            cand = fmp(dist[u], *edge_inputs(v, u))
            if lex_cmp(cand, dist[u]) <= 0 and not _is_top(cand):
                raise NonTermination(
                    f"fmp is not progressive at {dist[u]!r} -> {cand!r}")
            if lex_cmp(cand, dist[v]) < 0:
                relaxations += 1
                if relaxations > limit:
                    raise NonTermination("relaxation budget exhausted")
                dist[v] = cand
                heapq.heappush(heap, (_Key(cand), next(counter), v))
    return dist


class _Key:
    """Heap key wrapping lexicographic comparison."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __lt__(self, other):
        return lex_cmp(self.value, other.value) < 0


def _is_top(v) -> bool:
    if isinstance(v, tuple):
        return bool(v) and _is_top(v[0])
    return v == math.inf


def dijkstra(topology: Dict[int, FrozenSet[int]],
             weight: Callable[[int, int], float],
             sources: Dict[int, float]) -> Dict[int, float]:
    """Plain shortest-path distances (test oracle for G/CRF/FLEX).

    ``sources`` maps every device to its seed (0.0 for sources, inf
    elsewhere); ``weight(u, v)`` is the symmetric edge length.
    """
    return path_weight_oracle(
        topology,
        lambda v, u: (weight(u, v),),
        lambda value, w: value + w,
        dict(sources),
    )


def hop_counts(topology: Dict[int, FrozenSet[int]],
               sources: Dict[int, float]) -> Dict[int, float]:
    return path_weight_oracle(
        topology, lambda v, u: (), lambda value: value + 1.0, dict(sources))
