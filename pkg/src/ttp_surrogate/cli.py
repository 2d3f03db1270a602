"""Command-line driver: ``ttp-sm {gen,record,replay,experiment,solve}``.

Exit codes: 0 success, 1 usage error, 2 input error, 3 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__
from ._backend import BACKEND
from .bench import (CATEGORIES, category_of, format_points, format_report, generate_instance,
                    operating_points, replay)
from .controller import Controller, ControllerConfig, ControllerError, resolve_t_init
from .instance import InfeasibleError, ParseError, format_instance, load_instance
from .runlog import RunLogError, format_runlog, read_runlog
from .solver import SolverConfig, run_restarts
from .surrogate import FitError, SvrHyperparams

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _t_init(text: str) -> str:
    s = text.strip()
    try:
        float(s[:-1]) if s.endswith("%") else int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or a percentage, got {text!r}")
    return s


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed_list(text: str) -> list[int]:
    """``10`` means seeds 0..9; ``3,5,8`` lists them explicitly."""
    try:
        if "," in text:
            return [int(x) for x in text.split(",") if x.strip()]
        return list(range(int(text)))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a count or a seed list, got {text!r}")


def _add_controller_flags(p: argparse.ArgumentParser, beta_default=2.0):
    g = p.add_argument_group("surrogate controller")
    g.add_argument("--beta", type=float, default=beta_default, help="error tolerance multiplier")
    g.add_argument("--gamma", type=float, default=1.0, help="kernel width")
    g.add_argument("--lambda", dest="lam", type=float, default=0.20,
                   help="testing runs as a share of the training set")
    g.add_argument("--error-limit", type=float, default=0.02)
    g.add_argument("--t-init", type=_t_init, default="10%",
                   help="initial training size, absolute or share of restarts (default 10%%)")
    g.add_argument("--svr-c", type=float, default=SvrHyperparams.C)
    g.add_argument("--svr-eps", type=float, default=SvrHyperparams.epsilon)


def _controller_config(args, restarts: int, seed: int, beta: float | None = None):
    try:
        svr = SvrHyperparams(gamma=args.gamma, C=args.svr_c, epsilon=args.svr_eps)
        return ControllerConfig(t_init=resolve_t_init(args.t_init, restarts), lam=args.lam,
                                error_limit=args.error_limit,
                                beta=args.beta if beta is None else beta, svr=svr,
                                filter_rng_seed=seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


class _EventWriter:
    def __init__(self, path):
        self.fh = open(path, "w", encoding="utf-8") if path else None

    def __call__(self, rec: dict):
        self.fh.write(json.dumps(rec, sort_keys=True) + "\n")

    @property
    def sink(self):
        return self if self.fh else None

    def close(self):
        if self.fh:
            self.fh.close()


def _record(inst, restarts: int, seed: int, kp_budget):
    if restarts < 1:
        raise UsageError("--restarts must be >= 1")
    log = run_restarts(inst, restarts, SolverConfig(rng_seed=seed, kp_budget=kp_budget))
    log.config["category"] = category_of(inst)
    return log


# --- subcommands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.n < 3:
        raise UsageError("--n must be >= 3")
    if args.items_per_city is not None and args.items_per_city < 1:
        raise UsageError("--items-per-city must be >= 1")
    inst = generate_instance(args.n, args.category, args.seed, args.items_per_city)
    _write(args.out, format_instance(inst))
    return EXIT_OK


def cmd_record(args) -> int:
    inst = load_instance(args.instance)
    log = _record(inst, args.restarts, args.seed, args.kp_budget)
    _write(args.out, format_runlog(log, timings=args.timings))
    return EXIT_OK


def cmd_replay(args) -> int:
    log = read_runlog(args.runlog)
    cfg = _controller_config(args, len(log.records), log.seed)
    events = _EventWriter(args.events)
    try:
        report = replay(log, cfg, event_sink=events.sink)
    finally:
        events.close()
    _write(args.out, format_report([report], timings=args.timings))
    return EXIT_OK


def cmd_experiment(args) -> int:
    if not args.instance and not args.runlog:
        raise UsageError("experiment needs --instance or --runlog")
    logs = []
    for path in args.runlog or []:
        logs.append(read_runlog(path))
    for path in args.instance or []:
        inst = load_instance(path)
        for seed in args.seeds:
            logs.append(_record(inst, args.restarts, seed, args.kp_budget))
    reports = []
    for log in logs:
        for beta in args.betas:
            cfg = _controller_config(args, len(log.records), log.seed, beta)
            reports.append(replay(log, cfg))
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "report.csv"), format_report(reports, timings=args.timings))
    _write(os.path.join(args.out, "points_by_category.csv"),
           format_points(operating_points(reports, by="category")))
    _write(os.path.join(args.out, "points_by_instance.csv"),
           format_points(operating_points(reports, by="instance")))
    for p in operating_points(reports, by="category"):
        mark = "below" if p.below_diagonal else "not below"
        print(f"category {p.group or '?'} beta={p.beta:g}: filtered {p.filtered_pct:.1f}%, "
              f"missed best {p.missed_best:.2f}/{p.runs} ({mark} random {p.diagonal:.2f})")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    if args.restarts < 1:
        raise UsageError("--restarts must be >= 1")
    ctl = None
    events = _EventWriter(args.events)
    if not args.baseline:
        ctl = Controller(_controller_config(args, args.restarts, args.seed),
                         event_sink=events.sink)
    t0 = time.perf_counter()
    try:
        log = run_restarts(inst, args.restarts, SolverConfig(rng_seed=args.seed,
                                                             kp_budget=args.kp_budget), ctl)
    finally:
        events.close()
    total = time.perf_counter() - t0
    log.config["category"] = category_of(inst)
    if args.out:
        _write(args.out, format_runlog(log, timings=args.timings))
    skipped = sum(r.decision == "skipped" for r in log.records)
    print(f"instance: {inst.name}")
    print(f"best G: {log.best_g!r}")
    print(f"restarts: {len(log.records)} solved: {len(log.records) - skipped} "
          f"filtered: {skipped}")
    print(f"total seconds: {total:.3f}")
    print(f"solver seconds: {log.solver_seconds:.3f}")
    print(f"surrogate seconds: {log.surrogate_seconds:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ttp-sm", description="TTP restart solver with a surrogate restart filter")
    p.add_argument("--version", action="version",
                   version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic instance")
    g.add_argument("--n", type=int, required=True, help="number of cities")
    g.add_argument("--category", choices=sorted(CATEGORIES), required=True,
                   type=str.upper)
    g.add_argument("--items-per-city", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    def solver_flags(sp):
        sp.add_argument("--restarts", type=int, default=200)
        sp.add_argument("--kp-budget", type=int,
                        help="non-improving packing moves before a packing round ends")
        sp.add_argument("--timings", action="store_true",
                        help="write wall-clock columns (output is no longer reproducible)")

    r = sub.add_parser("record", help="run baseline restarts and write a run log")
    r.add_argument("--instance", required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    solver_flags(r)
    r.set_defaults(func=cmd_record)

    rp = sub.add_parser("replay", help="replay a run log through the surrogate filter")
    rp.add_argument("--runlog", required=True)
    rp.add_argument("--out")
    rp.add_argument("--events", help="write controller events as JSON lines")
    rp.add_argument("--timings", action="store_true")
    _add_controller_flags(rp)
    rp.set_defaults(func=cmd_replay)

    e = sub.add_parser("experiment", help="record (or load) runs and sweep beta")
    e.add_argument("--instance", action="append", help="instance file (repeatable)")
    e.add_argument("--runlog", action="append", help="recorded run log (repeatable)")
    e.add_argument("--seeds", type=_seed_list, default=list(range(10)))
    e.add_argument("--betas", type=_float_list, default=[0.0, 1.0, 2.0, 3.0])
    e.add_argument("--out", required=True, help="output directory")
    solver_flags(e)
    _add_controller_flags(e)
    e.set_defaults(func=cmd_experiment)

    s = sub.add_parser("solve", help="live run with the surrogate filter in the loop")
    s.add_argument("--instance", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--baseline", action="store_true", help="disable the surrogate filter")
    s.add_argument("--out", help="also write the run log here")
    s.add_argument("--events", help="write controller events as JSON lines")
    solver_flags(s)
    _add_controller_flags(s)
    s.set_defaults(func=cmd_solve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, RunLogError, InfeasibleError, OSError) as exc:
        print(f"ttp-sm: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ControllerError, FitError) as exc:
        print(f"ttp-sm: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
