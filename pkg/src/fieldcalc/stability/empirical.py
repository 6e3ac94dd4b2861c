"""Empirical self-stabilisation and eventual-equivalence checkers.

These implement the definitional quantifiers ("every fair sequence, from any
initial state, stabilises to the same state") as a finite approximation:
several randomised initial states crossed with several schedules, each run
until no firing changes any stored tree, then a cross-run agreement check on
the induced computational fields.
"""

from __future__ import annotations

import dataclasses
import math
import random
from dataclasses import dataclass, field as dfield
from typing import Dict, List, Optional

from ..ast import Program
from ..errors import FieldCalcError
from ..network import is_stable, snapshot_field
from ..runtime import Code, compile_program
from ..simulate import Scenario, Simulator

FLOAT_TOL = 1e-9


@dataclass
class StabilisationVerdict:
    stabilised: bool
    rounds_to_stable: int
    stable_field: Optional[Dict[int, object]]
    agreement_across_runs: bool
    runs: int = 0
    failures: List[str] = dfield(default_factory=list)

    @property
    def self_stabilising(self) -> bool:
        return self.stabilised and self.agreement_across_runs


def values_agree(a, b, tol: float = FLOAT_TOL) -> bool:
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(
            values_agree(x, y, tol) for x, y in zip(a, b))
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if a == b:
            return True
        if math.isnan(a) and math.isnan(b):
            return True
        return abs(a - b) <= tol
    return a == b


def fields_agree(fa: Dict[int, object], fb: Dict[int, object],
                 tol: float = FLOAT_TOL) -> bool:
    return set(fa) == set(fb) and all(values_agree(fa[d], fb[d], tol)
                                      for d in fa)


def _random_seeder(run_seed: int, scale: float):
    """Per-device first-firing hook: every rep site seeds with a random value
    shaped like its default (numbers perturbed, booleans flipped)."""

    def factory(device: int, round_index: int):
        if round_index != 1:
            return None
        rng = random.Random(f"init:{run_seed}:{device}")

        def seed(site: int, default):
            return _randomise(default, rng, scale)

        return seed

    return factory


def _randomise(v, rng: random.Random, scale: float):
    if v is True or v is False:
        return rng.random() < 0.5
    if isinstance(v, tuple):
        return tuple(_randomise(x, rng, scale) for x in v)
    if isinstance(v, (int, float)):
        return rng.uniform(0.0, scale)
    return v


def _run_until_stable(scenario: Scenario, code: Code, seed_factory,
                      max_rounds: int, settle: float):
    sim = Simulator(scenario, code, rep_seed_factory=seed_factory)
    freeze_at = max((p.time for p in scenario.perturbations), default=0.0)
    start_count = None
    while True:
        t = sim.step()
        if t is None:
            return None, sim  # ran out of scheduled time
        if t < freeze_at:
            continue
        if start_count is None:
            start_count = sim.fire_count
        if sim.fire_count - start_count > max_rounds:
            return False, sim
        if (t - max(sim.last_change, freeze_at) >= settle
                and all(r >= 2 for r in sim.rounds.values())):
            return True, sim


def empirical_selfstab(program: Program, scenario: Scenario,
                       n_inits: int = 5, n_schedules: int = 5,
                       max_rounds: int = 20000,
                       tol: float = FLOAT_TOL,
                       init_scale: float = 30.0,
                       code: Optional[Code] = None) -> StabilisationVerdict:
    """Randomised-initial-state / randomised-schedule stabilisation check.

    The scenario's environment must freeze after its last perturbation; runs
    differ in the device phases and orderings (schedule seed) and in the rep
    seeding (init seed).  ``stabilised`` demands every run reach a
    configuration unchanged by further firings within ``max_rounds`` firings;
    ``agreement_across_runs`` compares the stable fields (exact for discrete
    values, ``tol`` for floats)."""
    code = code or compile_program(program)
    settle = 2.5 * _max_period(scenario)
    freeze_at = max((p.time for p in scenario.perturbations), default=0.0)
    needed = (freeze_at + settle + 4.0 * _max_period(scenario)
              + (max_rounds / max(scenario.device_count, 1) + 4)
              * _max_period(scenario))
    verdict = StabilisationVerdict(True, 0, None, True)
    reference = None
    for j in range(n_schedules):
        for i in range(n_inits):
            sc = dataclasses.replace(
                scenario, seed=scenario.seed + 7919 * j,
                duration=max(scenario.duration, needed))
            factory = _random_seeder(i + 1000 * j, init_scale) if n_inits > 1 \
                else None
            try:
                ok, sim = _run_until_stable(sc, code, factory, max_rounds,
                                            settle)
            except FieldCalcError as exc:
                verdict.stabilised = False
                verdict.failures.append(f"run(init={i},sched={j}): {exc}")
                verdict.runs += 1
                continue
            verdict.runs += 1
            if ok is not True:
                verdict.stabilised = False
                verdict.failures.append(
                    f"run(init={i},sched={j}) did not stabilise "
                    f"within {max_rounds} firings")
                continue
            if not is_stable(sim.net, code) and not _quiet_under_firing(
                    sim, settle):
                verdict.stabilised = False
                verdict.failures.append(
                    f"run(init={i},sched={j}) quiesced but firings still "
                    f"change the configuration")
                continue
            fld = snapshot_field(sim.net)
            rounds = sim.fire_count
            verdict.rounds_to_stable = max(verdict.rounds_to_stable, rounds)
            if reference is None:
                reference = fld
                verdict.stable_field = fld
            elif not fields_agree(reference, fld, tol):
                verdict.agreement_across_runs = False
                diff = [d for d in reference
                        if not values_agree(reference[d], fld[d], tol)]
                verdict.failures.append(
                    f"run(init={i},sched={j}) disagrees at devices {diff[:5]}")
    return verdict


def _quiet_under_firing(sim: Simulator, settle: float) -> bool:
    """Absorbing-state check along the real schedule: keep firing for one
    more settle window and demand no stored tree changes.  Needed for
    programs whose trees carry time-derived sensors (nbrLag): an off-schedule
    probe would see different lags even in a steady periodic state."""
    before = sim.last_change
    horizon = sim.net.clock + settle
    while True:
        t = sim.step()
        if t is None or t > horizon:
            return sim.last_change == before
        if sim.last_change != before:
            return False


def _max_period(scenario: Scenario) -> float:
    if scenario.jitter == "uniform":
        return max(scenario.base_period, scenario.period_hi)
    return scenario.base_period


def eventual_equivalence(program_a: Program, program_b: Program,
                         scenario: Scenario,
                         n_inits: int = 2, n_schedules: int = 2,
                         max_rounds: int = 20000,
                         tol: float = FLOAT_TOL) -> dict:
    """Do two programs stabilise to the same field on identical frozen
    environments?  Returns a verdict dict with both stabilisation verdicts."""
    va = empirical_selfstab(program_a, scenario, n_inits, n_schedules,
                            max_rounds, tol)
    vb = empirical_selfstab(program_b, scenario, n_inits, n_schedules,
                            max_rounds, tol)
    equivalent = (va.self_stabilising and vb.self_stabilising
                  and va.stable_field is not None
                  and vb.stable_field is not None
                  and fields_agree(va.stable_field, vb.stable_field, tol))
    return {"equivalent": equivalent, "a": va, "b": vb}
