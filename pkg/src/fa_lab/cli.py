"""Command-line entry point.

Exit codes are a stable contract: 0 every requested predicate passed,
1 a numeric/predicate failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import experiments, verify
from .errors import FaLabError, UnknownScenario
from .experiments import CellSpec, ScenarioSpec


def _default_out() -> str:
    return os.environ.get("FA_LAB_OUT", "out")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="output directory (default $FA_LAB_OUT or ./out)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="max parallel cells")
    p.add_argument("--heavy", action="store_true",
                   help="enable proof-constant-scale configurations")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fa-lab",
                                     description="feedback-alignment dynamics lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_list = sub.add_parser("list", help="list registered scenarios")
    del p_list

    p_rep = sub.add_parser("reproduce", help="run a figure/theorem scenario")
    p_rep.add_argument("figure")
    _add_common(p_rep)

    p_ver = sub.add_parser("verify", help="run a theorem verification suite")
    p_ver.add_argument("suite", choices=verify.SUITES)
    _add_common(p_ver)

    p_run = sub.add_parser("run", help="ad-hoc run from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="K=V", help="override a config key (repeatable)")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="grid sweep over a scenario")
    p_sweep.add_argument("figure")
    p_sweep.add_argument("--set", dest="overrides", action="append", default=[],
                         metavar="K=V1,V2", help="grid values for one key (repeatable)")
    _add_common(p_sweep)

    return parser


def _parse_config(path: str) -> dict:
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, value = line.split("=", 1)
            elif ":" in line:
                key, value = line.split(":", 1)
            else:
                raise ValueError(f"cannot parse config line {raw!r}")
            cfg[key.strip()] = value.strip()
    return cfg


def _adhoc_spec(cfg: dict) -> ScenarioSpec:
    if "scenario" in cfg:
        base = experiments.scenario(cfg["scenario"])
    else:
        base = ScenarioSpec(name="adhoc", kind="dynamics", n=20, m=20, r=4,
                            spectrum="flat(4)", steps=200,
                            cells=(CellSpec("GD", "GD", 0.5),))
    fields = {}
    cell = base.cells[0] if base.cells else CellSpec("GD", "GD", 0.5)
    for key, value in cfg.items():
        if key == "scenario":
            continue
        if key in ("n", "m", "r", "steps", "record_stride", "trials"):
            fields[key] = int(value)
        elif key in ("std", "stop_residual", "eps"):
            fields[key] = float(value)
        elif key in ("spectrum", "init_z", "target", "feedback"):
            fields[key] = value
        elif key == "seed" or key == "seeds":
            fields["seeds"] = tuple(int(s) for s in str(value).split(",") if s.strip())
        elif key == "rule":
            cell = replace(cell, rule=value.upper(), label=value.upper())
        elif key == "eta":
            cell = replace(cell, eta=float(value))
        elif key == "eta_w":
            cell = replace(cell, eta_w=float(value))
        elif key == "w_init":
            cell = replace(cell, w_init=value)
        else:
            raise ValueError(f"unknown config key {key!r}")
    fields["cells"] = (cell,)
    fields.setdefault("name", "adhoc")
    return replace(base, **fields)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = args.out if getattr(args, "out", None) else _default_out()

    try:
        if args.command == "list":
            for name in experiments.scenario_names():
                spec = experiments.scenario(name)
                print(f"{name:12s} {spec.description}")
            return 0

        if args.command == "reproduce":
            spec = experiments.scenario(args.figure)
            seeds = (args.seed,) if args.seed is not None else None
            _rows, summary = experiments.run_scenario(
                spec, out_dir=out_dir, seed_override=seeds, jobs=args.jobs,
                heavy=args.heavy)
            for cell in summary["cells"]:
                status = "PASS" if cell["passed"] else "FAIL"
                print(f"{status} {spec.name}/{cell['rule']} seed={cell['seed']}: "
                      f"{cell['notes']}")
            print(f"{'PASS' if summary['passed'] else 'FAIL'} {spec.name}: "
                  f"{summary['notes']}")
            return 0 if summary["passed"] else 1

        if args.command == "verify":
            checks = verify.run_suite(args.suite, heavy=args.heavy)
            ok = True
            for name, passed, detail in checks:
                ok &= passed
                print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
            return 0 if ok else 1

        if args.command == "run":
            if not os.path.exists(args.config):
                print(f"config file not found: {args.config}", file=sys.stderr)
                return 2
            cfg = _parse_config(args.config)
            for item in args.overrides:
                if "=" not in item:
                    print(f"--set expects K=V, got {item!r}", file=sys.stderr)
                    return 2
                key, value = item.split("=", 1)
                cfg[key.strip()] = value.strip()
            try:
                spec = _adhoc_spec(cfg)
            except (ValueError, FaLabError) as exc:
                print(f"bad config: {exc}", file=sys.stderr)
                return 2
            if args.seed is not None:
                spec = replace(spec, seeds=(args.seed,))
            _rows, summary = experiments.run_scenario(spec, out_dir=out_dir,
                                                      jobs=args.jobs)
            summary["config"] = cfg
            experiments.write_json(
                os.path.join(out_dir, spec.name, "summary.json"), summary)
            for cell in summary["cells"]:
                status = "PASS" if cell["passed"] else "FAIL"
                print(f"{status} {spec.name}/{cell['rule']} seed={cell['seed']}: "
                      f"{cell['notes']}")
            return 0 if summary["passed"] else 1

        if args.command == "sweep":
            spec = experiments.scenario(args.figure)
            grid = {}
            for item in args.overrides:
                if "=" not in item:
                    print(f"--set expects K=V1,V2,..., got {item!r}", file=sys.stderr)
                    return 2
                key, values = item.split("=", 1)
                grid[key.strip()] = [v.strip() for v in values.split(",") if v.strip()]
            if "seeds" in grid:
                grid["seeds"] = [tuple(int(s) for s in grid["seeds"])]
            summaries = experiments.sweep(spec, grid)
            ok = True
            for summary in summaries:
                ok &= summary["passed"]
                print(f"{'PASS' if summary['passed'] else 'FAIL'} {spec.name} "
                      f"{summary.get('overrides', {})}: {summary['notes']}")
            experiments.write_json(os.path.join(out_dir, spec.name, "sweep.json"),
                                   summaries)
            return 0 if ok else 1
    except UnknownScenario as exc:
        print(f"unknown scenario: {exc}", file=sys.stderr)
        return 2
    except FaLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
