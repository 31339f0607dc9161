"""Command-line front end: experiments, the boundary study, candidate dumps.

Subcommands
-----------
run             BO experiment grid (methods x seeds) -> trajectory CSV
boundary-study  wall-hit proportions over the (N, P, strategy, metric) grid
candidates      design + candidate cloud dump for plotting
problems        list built-in test problems

Every file-writing subcommand also writes a `<out>.meta.json` sidecar with
the full effective configuration, seeds, and package version (never
timestamps, so identical invocations produce identical files).  For `run`,
values may come from a flat `key = value` config file via --config; explicit
flags override file values.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .bench import NATIVE_DOMAINS, PROBLEM_NAMES, make_problem
from .driver import METHODS, ExperimentConfig, run_suite
from .metrics import Metric
from .sampling import lhs, sobol
from .vorcands import STRATEGIES, boundary_proportion, scheme_final


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_lines(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_sidecar(path: str, payload: dict) -> None:
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _bool_from_str(v: str) -> bool:
    low = v.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


#: Config-file keys for `run`, with parsers; every key mirrors a CLI flag.
_RUN_KEYS = {
    "problem": str,
    "dim": int,
    "budget": int,
    "method": str,
    "reps": int,
    "seed": int,
    "n_init": int,
    "candidates": int,
    "refit_until": int,
    "refit_every": int,
    "out": str,
    "jobs": int,
    "include_x": _bool_from_str,
    "timing": _bool_from_str,
}

_RUN_DEFAULTS = {
    "method": "vor",
    "reps": 1,
    "seed": 0,
    "n_init": None,
    "candidates": None,
    "refit_until": 200,
    "refit_every": 25,
    "jobs": 1,
    "include_x": True,
    "timing": True,
}


def _read_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
                key, _, val = line.partition("=")
                key = key.strip()
                if key not in _RUN_KEYS:
                    raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
                values[key] = _RUN_KEYS[key](val.strip())
    except OSError as exc:
        raise ValueError(f"cannot read config file {path}: {exc}") from exc
    return values


def _effective_run_settings(args: argparse.Namespace) -> dict:
    eff = dict(_RUN_DEFAULTS)
    if args.config:
        eff.update(_read_config_file(args.config))
    for key in _RUN_KEYS:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            eff[key] = flag_val
    if args.no_x:
        eff["include_x"] = False
    if args.no_timing:
        eff["timing"] = False
    for required in ("problem", "dim", "budget", "out"):
        if eff.get(required) is None:
            raise ValueError(f"missing required setting: {required}")
    return eff


def cmd_run(args: argparse.Namespace) -> int:
    eff = _effective_run_settings(args)
    seeds = tuple(range(eff["seed"], eff["seed"] + eff["reps"]))
    config = ExperimentConfig(
        problem=eff["problem"],
        dim=eff["dim"],
        budget=eff["budget"],
        methods=tuple(m.strip() for m in eff["method"].split(",") if m.strip()),
        seeds=seeds,
        n_init=eff["n_init"],
        n_candidates=eff["candidates"],
        refit_until=eff["refit_until"],
        refit_every=eff["refit_every"],
        out=eff["out"],
        include_x=eff["include_x"],
        timing=eff["timing"],
        jobs=eff["jobs"],
    )
    config.validate()
    _, failures = run_suite(config)

    meta = {
        "command": "run",
        "version": __version__,
        "settings": {k: eff[k] for k in sorted(eff)},
        "seeds": list(seeds),
        "failures": [{"method": m, "seed": s, "error": e} for m, s, e in failures],
    }
    if config.problem == "ackley":
        meta["shifts"] = {
            str(s): list(make_problem("ackley", config.dim, np.random.default_rng([s])).shift)
            for s in seeds
        }
    _write_sidecar(config.out, meta)
    if failures:
        for method, seed, error in failures:
            print(f"cell ({method}, seed {seed}) failed: {error}", file=sys.stderr)
        return 1
    return 0


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def cmd_boundary_study(args: argparse.Namespace) -> int:
    sizes = _int_list(args.sizes)
    dims = _int_list(args.dims)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}")
    metric_objs = {m: Metric.from_string(m) for m in metrics}

    lines = ["strategy,metric,N,P,rep,prop_boundary"]
    for rep in range(args.reps):
        for dim in dims:
            for n in sizes:
                # one design per (rep, P, N), shared by every strategy/metric
                design = np.random.default_rng([args.seed, rep, dim, n]).random((n, dim))
                for strat_id, strat in enumerate(strategies):
                    for name in metrics:
                        # identically keyed stream per strategy: the same
                        # origins/directions are walked under every metric
                        rng = np.random.default_rng([args.seed, rep, dim, n, strat_id])
                        prop = boundary_proportion(
                            design, args.count, strat, metric_objs[name], rng
                        )
                        lines.append(f"{strat},{name},{n},{dim},{rep},{_fmt(prop)}")
    _write_lines(args.out, lines)
    _write_sidecar(
        args.out,
        {
            "command": "boundary-study",
            "version": __version__,
            "settings": {
                "count": args.count,
                "dims": dims,
                "metrics": metrics,
                "reps": args.reps,
                "seed": args.seed,
                "sizes": sizes,
                "strategies": strategies,
            },
        },
    )
    return 0


def cmd_candidates(args: argparse.Namespace) -> int:
    if args.design is not None:
        try:
            design = np.loadtxt(args.design, delimiter=",", ndmin=2)
        except OSError as exc:
            print(f"cannot read design file {args.design}: {exc}", file=sys.stderr)
            return 1
        dim = design.shape[1]
    else:
        if args.dim is None:
            raise ValueError("either --design or --dim is required")
        dim = args.dim
        design = lhs(args.n, dim, np.random.default_rng([args.seed])).points

    if args.scheme == "vor":
        points = scheme_final(
            design,
            args.count,
            args.iteration,
            args.incumbent,
            np.random.default_rng([args.seed, args.iteration]),
        ).points
    elif args.scheme == "lhs":
        points = lhs(args.count, dim, np.random.default_rng([args.seed, args.iteration])).points
    else:
        points = sobol(args.count, dim, start_index=1 + args.iteration * args.count).points

    lines = ["tag," + ",".join(f"x{p}" for p in range(dim))]
    for row in design:
        lines.append("design," + ",".join(_fmt(v) for v in row))
    for row in points:
        lines.append(f"{args.scheme}," + ",".join(_fmt(v) for v in row))
    _write_lines(args.out, lines)
    _write_sidecar(
        args.out,
        {
            "command": "candidates",
            "version": __version__,
            "settings": {
                "count": args.count,
                "design_file": args.design,
                "dim": dim,
                "incumbent": args.incumbent,
                "iteration": args.iteration,
                "n": design.shape[0],
                "scheme": args.scheme,
                "seed": args.seed,
            },
        },
    )
    return 0


def cmd_problems(_: argparse.Namespace) -> int:
    print(f"{'name':<12} {'native domain':<22} {'dims':<8} known_best")
    for name in PROBLEM_NAMES:
        lo, hi = NATIVE_DOMAINS[name]
        dims = "2" if name == "sinesum2d" else "any"
        print(f"{name:<12} [{lo:g}, {hi:g}]^P{'':<6} {dims:<8} 0.0")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vorbo",
        description="Bayesian optimization with Voronoi-boundary candidates.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    run = sub.add_parser("run", help="run a (methods x seeds) experiment grid")
    run.add_argument("--config", help="flat key=value config file; flags override")
    run.add_argument("--problem", choices=PROBLEM_NAMES)
    run.add_argument("--dim", type=int)
    run.add_argument("--budget", type=int, help="total evaluations including the initial design")
    run.add_argument("--method", help=f"comma-separated subset of {', '.join(METHODS)}")
    run.add_argument("--reps", type=int, help="number of replicate seeds (default 1)")
    run.add_argument("--seed", type=int, help="base seed; replicates use seed..seed+reps-1")
    run.add_argument("--n-init", dest="n_init", type=int, help="initial design size (default 3P)")
    run.add_argument(
        "--candidates", type=int, help="candidate count C (default min(5000, 100P))"
    )
    run.add_argument("--refit-until", dest="refit_until", type=int)
    run.add_argument("--refit-every", dest="refit_every", type=int)
    run.add_argument("--jobs", type=int, help="parallel worker processes (default 1)")
    run.add_argument("--out", help="output CSV path")
    run.add_argument("--no-x", dest="no_x", action="store_true", help="omit x columns")
    run.add_argument(
        "--no-timing",
        dest="no_timing",
        action="store_true",
        help="zero the timing columns (byte-stable output)",
    )
    run.set_defaults(func=cmd_run)

    study = sub.add_parser("boundary-study", help="wall-hit proportion grid")
    study.add_argument("--reps", type=int, default=10)
    study.add_argument("--seed", type=int, default=0)
    study.add_argument("--count", type=int, default=1000, help="walks per cell")
    study.add_argument("--sizes", default="10,100,1000", help="design sizes N")
    study.add_argument("--dims", default="2,10,100", help="dimensions P")
    study.add_argument("--strategies", default="unif,rect,proj")
    study.add_argument("--metrics", default="l1,l2,linf")
    study.add_argument("--out", required=True)
    study.set_defaults(func=cmd_boundary_study)

    cand = sub.add_parser("candidates", help="dump design + candidate cloud")
    cand.add_argument("--dim", type=int)
    cand.add_argument("--n", type=int, default=10, help="generated design size")
    cand.add_argument("--design", help="CSV file of design rows (overrides --dim/--n)")
    cand.add_argument("--scheme", choices=("vor", "lhs", "sobol"), default="vor")
    cand.add_argument("--count", type=int, default=1000)
    cand.add_argument("--seed", type=int, default=0)
    cand.add_argument("--iteration", type=int, default=0, help="scheme parity for vor")
    cand.add_argument("--incumbent", type=int, default=0, help="incumbent index for vor")
    cand.add_argument("--out", required=True)
    cand.set_defaults(func=cmd_candidates)

    probs = sub.add_parser("problems", help="list built-in problems")
    probs.set_defaults(func=cmd_problems)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        parser.error(str(exc))  # exits 2 with usage
        return 2  # unreachable; keeps type checkers honest


if __name__ == "__main__":
    raise SystemExit(main())
