"""Command-line entry point.

Subcommands: parse, expand, kindcheck, check, eval, simulate, compare,
casestudy, oracle.  Exit codes: 0 success, 1 user error (syntax, kinds,
ill-formed scenario, rejected fragment), 2 internal error.  Diagnostics go to
stderr; data to stdout or --out."""

from __future__ import annotations

import argparse
import math
import sys

from . import __version__, blocks
from .errors import FieldCalcError
from .expand import expand_functional_params
from .kinds import kind_check
from .parser import parse
from .pretty import pp_program
from .runtime import (SensorSnapshot, compile_program, evaluate, parse_tree,
                      parse_value, render_tree)
from .simulate import Scenario, Simulator, parse_scenario
from .stability import check_fragment
from .stability.oracle import dijkstra
from .stability.properties import parse_registry_text


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_out(args, text: str):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_program(path: str, with_catalog: bool = False):
    src = _read(path)
    if with_catalog:
        src = blocks.library_source() + "\n" + src
    program = expand_functional_params(parse(src))
    kind_check(program)
    return program


def cmd_parse(args) -> int:
    program = parse(_read(args.file))
    _write_out(args, pp_program(program))
    return 0


def cmd_expand(args) -> int:
    program = expand_functional_params(parse(_read(args.file)))
    _write_out(args, pp_program(program))
    return 0


def cmd_kindcheck(args) -> int:
    program = _load_program(args.file, args.with_catalog)
    _write_out(args, "kinds ok\n")
    return 0


def cmd_check(args) -> int:
    program = _load_program(args.file, args.with_catalog)
    registry = list(blocks.catalog_registry()) if args.with_catalog else []
    if args.registry:
        registry += parse_registry_text(_read(args.registry))
    report = check_fragment(program, registry)
    _write_out(args, report.text())
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report.csv())
    return 0 if report.accepted else 1


def cmd_eval(args) -> int:
    program = _load_program(args.file, args.with_catalog)
    env = []
    extras = {}
    sns_num = 0.0
    interval = 1.0
    nbr_range = {}
    nbr_lag = {}
    if args.env:
        for raw in _read(args.env).splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("sensor "):
                _, name, value = line.split(None, 2)
                extras[name] = parse_value(value)
                continue
            did, tree_text = line.split(":", 1)
            env.append((int(did), parse_tree(tree_text)))
    for kv in args.sns or []:
        name, value = kv.split("=", 1)
        extras[name] = parse_value(value)
    if "snsNum" in extras:
        sns_num = extras.pop("snsNum")
    if "sns_interval" in extras:
        interval = extras.pop("sns_interval")
    sensors = SensorSnapshot(sns_num=sns_num, interval=interval,
                             nbr_range=nbr_range, nbr_lag=nbr_lag,
                             extras=extras)
    code = compile_program(program)
    tree = evaluate(args.device, env, sensors, code)
    _write_out(args, render_tree(tree) + "\n")
    return 0


def cmd_simulate(args) -> int:
    scenario = parse_scenario(_read(args.scenario))
    if args.seed is not None:
        scenario.seed = args.seed
    if args.horizon is not None:
        scenario.horizon = args.horizon
    program = _load_program(args.file, with_catalog=True)
    code = compile_program(program)
    sim = Simulator(scenario, code)
    trace = sim.run()
    _write_out(args, trace.to_csv())
    return 0


def cmd_compare(args) -> int:
    from .experiments.compare import run_block_comparison
    variants = args.variants.split(",")
    result = run_block_comparison(
        args.family, variants, args.mode, seeds=args.seeds,
        device_count=args.devices, duration=args.duration,
        base_seed=args.seed if args.seed is not None else 100)
    _write_out(args, result.csv())
    if args.manifest:
        with open(args.manifest, "w", encoding="utf-8") as fh:
            fh.write(result.manifest())
    return 0


def cmd_casestudy(args) -> int:
    from .experiments.casestudy import (crowd_size_scenario,
                                        evacuation_scenario)
    base = args.seed if args.seed is not None else 300
    if args.study == "crowd":
        csv, _ = crowd_size_scenario(seeds=args.seeds, base_seed=base)
    else:
        csv, _ = evacuation_scenario(seeds=args.seeds, base_seed=base)
    _write_out(args, csv)
    return 0


def cmd_oracle(args) -> int:
    scenario = parse_scenario(_read(args.scenario))
    if args.seed is not None:
        scenario.seed = args.seed
    program = blocks.instantiate("0")
    sim = Simulator(scenario, compile_program(program), record=False)
    topo = sim.net.env.topology
    pos = sim.positions

    def w(u, v):
        return math.hypot(pos[u][0] - pos[v][0], pos[u][1] - pos[v][1])

    seeds = {d: (0.0 if d == args.source else math.inf) for d in topo}
    if args.hops:
        from .stability.oracle import hop_counts
        dist = hop_counts(topo, seeds)
    else:
        dist = dijkstra(topo, w, seeds)
    lines = ["deviceId,value"]
    from .runtime import render_value
    for d in sorted(dist):
        lines.append(f"{d},{render_value(dist[d])}")
    _write_out(args, "\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fieldcalc",
        description="field-calculus toolchain: parse, check, evaluate, "
                    "simulate and compare resilient building blocks")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, out=True):
        if out:
            p.add_argument("--out", help="write output to a file")

    p = sub.add_parser("parse", help="parse a program and dump its AST")
    p.add_argument("file")
    common(p)
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("expand", help="eliminate functional parameters")
    p.add_argument("file")
    common(p)
    p.set_defaults(fn=cmd_expand)

    p = sub.add_parser("kindcheck", help="check local/field kinds")
    p.add_argument("file")
    p.add_argument("--with-catalog", action="store_true")
    common(p)
    p.set_defaults(fn=cmd_kindcheck)

    p = sub.add_parser("check", help="classify reps against the "
                                     "self-stabilising fragment")
    p.add_argument("file")
    p.add_argument("--registry", help="property annotation file")
    p.add_argument("--csv", help="write the machine-readable report here")
    p.add_argument("--with-catalog", action="store_true")
    common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("eval", help="evaluate one firing against a "
                                    "value-tree environment file")
    p.add_argument("file")
    p.add_argument("--device", type=int, required=True)
    p.add_argument("--env", help="environment file (device: tree lines)")
    p.add_argument("--sns", action="append", help="sensor value name=value")
    p.add_argument("--with-catalog", action="store_true")
    common(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("simulate", help="run a scenario, write a trace CSV")
    p.add_argument("scenario")
    p.add_argument("file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--horizon", type=float)
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare", help="paired block-variant comparison")
    p.add_argument("--family", choices=("G", "C", "T"), required=True)
    p.add_argument("--variants", required=True,
                   help="comma-separated, e.g. G,CRF,FLEX")
    p.add_argument("--mode", required=True,
                   choices=("small_spatial", "large_spatial",
                            "small_temporal", "large_temporal"))
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--devices", type=int, default=100)
    p.add_argument("--duration", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--manifest", help="write the reproducibility manifest")
    common(p)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("casestudy", help="run a case study")
    p.add_argument("--study", choices=("crowd", "evacuation"), required=True)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--seed", type=int)
    common(p)
    p.set_defaults(fn=cmd_casestudy)

    p = sub.add_parser("oracle", help="print shortest-path oracle distances "
                                      "for a scenario's frozen geometry")
    p.add_argument("scenario")
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--hops", action="store_true")
    common(p)
    p.set_defaults(fn=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except FieldCalcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - internal errors
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
