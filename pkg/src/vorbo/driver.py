"""Sequential Bayesian-optimization loop and replicated-experiment runner.

One *cell* is a (method, seed) pair.  Within a cell the loop is: fit or
rebuild the surrogate per the refit schedule, produce a proposal with the
method's acquisition machinery, evaluate the black box, append, repeat.
Everything consumed from randomness is keyed so that identical (config,
seed) reruns are bit-identical: the problem instance and initial design
depend on the seed alone (and are therefore shared across methods), and
each acquisition iteration draws from an independent substream keyed by
(seed, iteration).

The refit schedule counts acquisition iterations (0-based): a full
maximum-likelihood refit on each of the first `refit_until` iterations and
every `refit_every`-th iteration thereafter; in between, the factorization
is rebuilt with the previous lengthscales so new data still enters the
model.

Timing columns: `cand_ms` records candidate generation for the candidate
methods and the continuous inner search for `opt`; `fit_ms` the surrogate
fit or rebuild; `elapsed_ms` cumulative wall time since the cell started.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import acquisition, gp
from .bench import TestProblem, make_problem
from .sampling import lhs, sobol
from .vorcands import scheme_final

METHODS = ("vor", "lhs", "sobol", "opt")

#: Proposals closer than this (L-inf) to an existing row are perturbed.
_DUPLICATE_TOL = 1e-12
_PERTURB_HALFWIDTH = 1e-6


@dataclass
class ExperimentConfig:
    problem: str
    dim: int
    budget: int
    methods: tuple[str, ...] = ("vor",)
    seeds: tuple[int, ...] = (0,)
    n_init: int | None = None  # default 3P
    n_candidates: int | None = None  # default min(5000, 100P)
    refit_until: int = 200
    refit_every: int = 25
    out: str | None = None
    include_x: bool = True
    timing: bool = True
    jobs: int = 1

    def resolved_n_init(self) -> int:
        return self.n_init if self.n_init is not None else 3 * self.dim

    def resolved_n_candidates(self) -> int:
        return (
            self.n_candidates
            if self.n_candidates is not None
            else min(5000, 100 * self.dim)
        )

    def validate(self) -> None:
        if self.problem == "":
            raise ValueError("problem name is required")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; expected subset of {METHODS}")
        if not self.methods:
            raise ValueError("need at least one method")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.budget <= self.resolved_n_init():
            raise ValueError(
                f"budget ({self.budget}) must exceed the initial design size "
                f"({self.resolved_n_init()})"
            )
        if self.refit_until < 0 or self.refit_every < 1:
            raise ValueError("refit schedule parameters out of range")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")


@dataclass
class TrajectoryRecord:
    seed: int
    method: str
    problem: str
    dim: int
    iteration: int
    x: np.ndarray
    y: float
    y_best: float
    elapsed_ms: float
    cand_ms: float
    fit_ms: float


def _shared_start(
    config: ExperimentConfig, seed: int
) -> tuple[TestProblem, np.ndarray, np.ndarray]:
    """Problem instance and evaluated initial design, identical across methods."""
    rng = np.random.default_rng([seed])
    problem = make_problem(config.problem, config.dim, rng)
    design = lhs(config.resolved_n_init(), config.dim, rng).points
    y = np.asarray(problem.evaluate(design), dtype=float)
    return problem, design, y


def _propose(
    method: str,
    model: gp.GpModel,
    design: np.ndarray,
    y: np.ndarray,
    iteration: int,
    n_cand: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """One proposal; returns (point, seconds spent generating/searching)."""
    y_min = float(y.min())
    incumbent = int(np.argmin(y))
    if method == "opt":
        t0 = time.perf_counter()
        res = acquisition.multistart_opt(model, y_min, design[incumbent], rng)
        return res.point, time.perf_counter() - t0
    t0 = time.perf_counter()
    if method == "vor":
        cands = scheme_final(design, n_cand, iteration, incumbent, rng)
        points = cands.points
    elif method == "lhs":
        points = lhs(n_cand, design.shape[1], rng).points
    else:  # sobol: advance through the sequence so each iteration is fresh
        points = sobol(n_cand, design.shape[1], start_index=1 + iteration * n_cand).points
    gen_seconds = time.perf_counter() - t0
    return acquisition.argmax_discrete(model, points, y_min).point, gen_seconds


def run_bo(
    config: ExperimentConfig, seed: int, method: str | None = None
) -> list[TrajectoryRecord]:
    """Run one cell; one record per acquisition (budget - n_init in total)."""
    config.validate()
    method = method or config.methods[0]
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    problem, design, y = _shared_start(config, seed)
    n_cand = config.resolved_n_candidates()
    n_acq = config.budget - design.shape[0]

    hyper = gp.GpHyper(
        lengthscales=np.full(config.dim, 0.5), tau_sq=1.0, nugget=1e-8
    )
    model: gp.GpModel | None = None
    records: list[TrajectoryRecord] = []
    cell_t0 = time.perf_counter()

    for i in range(n_acq):
        rng = np.random.default_rng([seed, i])

        refit = i < config.refit_until or (i - config.refit_until) % config.refit_every == 0
        fit_t0 = time.perf_counter()
        try:
            if refit:
                model = gp.fit(design, y, hyper)
            else:
                model = gp.build(design, y, hyper.lengthscales)
            hyper = model.hyper
        except gp.SurrogateFitError:
            # keep the previous lengthscales; if even a plain rebuild fails,
            # fall back to the stale model and move on
            try:
                model = gp.build(design, y, hyper.lengthscales)
                hyper = model.hyper
            except gp.SurrogateFitError:
                if model is None:
                    raise
        fit_seconds = time.perf_counter() - fit_t0

        x_new, cand_seconds = _propose(method, model, design, y, i, n_cand, rng)

        if np.min(np.abs(design - x_new[None, :]).max(axis=1)) <= _DUPLICATE_TOL:
            x_new = np.clip(
                x_new + rng.uniform(-_PERTURB_HALFWIDTH, _PERTURB_HALFWIDTH, config.dim),
                0.0,
                1.0,
            )
        y_new = float(problem.evaluate(x_new))
        design = np.vstack([design, x_new])
        y = np.append(y, y_new)

        records.append(
            TrajectoryRecord(
                seed=seed,
                method=method,
                problem=config.problem,
                dim=config.dim,
                iteration=design.shape[0],
                x=x_new.copy(),
                y=y_new,
                y_best=float(y.min()),
                elapsed_ms=(time.perf_counter() - cell_t0) * 1e3,
                cand_ms=cand_seconds * 1e3,
                fit_ms=fit_seconds * 1e3,
            )
        )
    return records


def _run_cell(args: tuple[ExperimentConfig, str, int]):
    config, method, seed = args
    try:
        return method, seed, run_bo(config, seed, method), None
    except Exception as exc:  # noqa: BLE001 - cell isolation is the point
        return method, seed, [], f"{type(exc).__name__}: {exc}"


def _failure_record(config: ExperimentConfig, method: str, seed: int) -> TrajectoryRecord:
    nan = float("nan")
    return TrajectoryRecord(
        seed=seed,
        method=method,
        problem=config.problem,
        dim=config.dim,
        iteration=-1,
        x=np.full(config.dim, nan),
        y=nan,
        y_best=nan,
        elapsed_ms=nan,
        cand_ms=nan,
        fit_ms=nan,
    )


def run_suite(
    config: ExperimentConfig,
) -> tuple[list[TrajectoryRecord], list[tuple[str, int, str]]]:
    """Run every (method, seed) cell; write the CSV if config.out is set.

    Cells are independent; with config.jobs > 1 they run in worker
    processes.  Output is sorted by (method, seed, iteration) so scheduling
    order can never change the bytes written.  A failed cell contributes one
    sentinel row (iteration -1, NaN outputs) and is reported in the returned
    failure list; other cells proceed.
    """
    config.validate()
    cells = [(config, m, s) for m in config.methods for s in config.seeds]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_run_cell, cells))
    else:
        outcomes = [_run_cell(c) for c in cells]

    records: list[TrajectoryRecord] = []
    failures: list[tuple[str, int, str]] = []
    for method, seed, recs, error in outcomes:
        if error is None:
            records.extend(recs)
        else:
            failures.append((method, seed, error))
            records.append(_failure_record(config, method, seed))
    records.sort(key=lambda r: (r.method, r.seed, r.iteration))
    if config.out is not None:
        write_csv(records, config)
    return records, failures


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(records: list[TrajectoryRecord], config: ExperimentConfig) -> None:
    """Schema: seed,method,problem,dim,iteration[,x0..x{P-1}],y,y_best,elapsed_ms,cand_ms,fit_ms."""
    cols = ["seed", "method", "problem", "dim", "iteration"]
    if config.include_x:
        cols += [f"x{p}" for p in range(config.dim)]
    cols += ["y", "y_best", "elapsed_ms", "cand_ms", "fit_ms"]
    lines = [",".join(cols)]
    for r in records:
        row = [str(r.seed), r.method, r.problem, str(r.dim), str(r.iteration)]
        if config.include_x:
            row += [_fmt(v) for v in r.x]
        row += [_fmt(r.y), _fmt(r.y_best)]
        if config.timing:
            row += [_fmt(r.elapsed_ms), _fmt(r.cand_ms), _fmt(r.fit_ms)]
        else:
            row += ["0", "0", "0"]
        lines.append(",".join(row))
    with open(config.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
