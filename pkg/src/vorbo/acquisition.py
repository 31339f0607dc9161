"""Expected improvement and its maximizers (minimization convention).

EI(x) = E[max(y_min - Y(x), 0)] under the surrogate's predictive Gaussian:
with z = (y_min - mu)/sigma,

    EI = (y_min - mu) * Phi(z) + sigma * phi(z),

falling back to the deterministic improvement max(y_min - mu, 0) when sigma
is numerically zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm

from . import gp
from .sampling import lhs
from .vorcands import CandidateSet

#: Predictive sds at or below this are treated as exactly zero in EI.
SD_FLOOR = 1e-10

#: Step for the finite-difference fallback of the EI gradient.
_FD_STEP = 1e-6


@dataclass
class AcqResult:
    point: np.ndarray
    acq_value: float
    evaluations: int


def ei_values(means: np.ndarray, sds: np.ndarray, y_min: float) -> np.ndarray:
    """Closed-form EI from predictive moments (elementwise)."""
    means = np.asarray(means, dtype=float)
    sds = np.asarray(sds, dtype=float)
    imp = y_min - means
    out = np.maximum(imp, 0.0)
    live = sds > SD_FLOOR
    if live.any():
        z = imp[live] / sds[live]
        # clamp: the closed form can round to a tiny negative far below y_min
        out[live] = np.maximum(imp[live] * norm.cdf(z) + sds[live] * norm.pdf(z), 0.0)
    return out


def ei(model: gp.GpModel, queries: np.ndarray, y_min: float) -> np.ndarray:
    """Expected improvement below `y_min` at each query row."""
    mean, sd = gp.predict(model, np.atleast_2d(np.asarray(queries, dtype=float)))
    return ei_values(mean, sd, y_min)


def ei_grad(model: gp.GpModel, query: np.ndarray, y_min: float) -> np.ndarray:
    """Analytic EI gradient at one point, with a finite-difference fallback.

    dEI/dmu = -Phi(z) and dEI/dsigma = phi(z), chained through the predictive
    moment gradients.  Non-finite analytic output (extreme z, vanishing sd)
    triggers central differences on ei itself.
    """
    query = np.asarray(query, dtype=float).reshape(-1)
    mean, sd = gp.predict(model, query[None, :])
    dmean, dsd = gp.predict_grad(model, query)
    if sd[0] > SD_FLOOR:
        z = (y_min - mean[0]) / sd[0]
        grad = -norm.cdf(z) * dmean + norm.pdf(z) * dsd
    else:
        grad = -dmean if mean[0] < y_min else np.zeros_like(query)
    if np.isfinite(grad).all():
        return grad
    out = np.empty_like(query)
    for p in range(query.size):
        step = np.zeros_like(query)
        step[p] = _FD_STEP
        out[p] = (
            ei(model, (query + step)[None, :], y_min)[0]
            - ei(model, (query - step)[None, :], y_min)[0]
        ) / (2.0 * _FD_STEP)
    return out


def argmax_discrete(
    model: gp.GpModel, candidates: CandidateSet | np.ndarray, y_min: float
) -> AcqResult:
    """Best candidate by EI; ties resolve to the smallest index."""
    points = candidates.points if isinstance(candidates, CandidateSet) else np.asarray(candidates)
    if points.shape[0] < 1:
        raise ValueError("candidate set is empty")
    values = ei(model, points, y_min)
    best = int(np.argmax(values))
    return AcqResult(point=points[best].copy(), acq_value=float(values[best]), evaluations=points.shape[0])


def multistart_opt(
    model: gp.GpModel,
    y_min: float,
    incumbent: np.ndarray,
    rng: np.random.Generator,
    n_starts: int | None = None,
) -> AcqResult:
    """Continuous EI maximization: box-constrained quasi-Newton from many starts.

    Starts are `n_starts - 1` Latin hypercube points plus the incumbent
    (default n_starts = 2P + 1).  Each start runs a bounded local ascent with
    the analytic gradient (max 200 iterations, projected-gradient tolerance
    1e-8); the best terminal point across starts wins, falling back to the
    best start itself if no ascent improves on it.  `evaluations` counts EI
    evaluations, gradient calls included.
    """
    dim = model.design.shape[1]
    incumbent = np.asarray(incumbent, dtype=float).reshape(-1)
    if n_starts is None:
        n_starts = 2 * dim + 1
    if n_starts < 1:
        raise ValueError(f"n_starts must be >= 1, got {n_starts}")
    starts = [incumbent]
    if n_starts > 1:
        starts.extend(lhs(n_starts - 1, dim, rng).points)

    evals = 0

    def neg_ei_and_grad(x: np.ndarray) -> tuple[float, np.ndarray]:
        nonlocal evals
        evals += 1
        return -float(ei(model, x[None, :], y_min)[0]), -ei_grad(model, x, y_min)

    best_x: np.ndarray | None = None
    best_val = -np.inf
    for x0 in starts:
        x0 = np.clip(x0, 0.0, 1.0)
        f0 = float(ei(model, x0[None, :], y_min)[0])
        evals += 1
        if f0 > best_val:
            best_val, best_x = f0, x0.copy()
        res = minimize(
            neg_ei_and_grad,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=[(0.0, 1.0)] * dim,
            # ftol below machine epsilon: EI spans many orders of magnitude,
            # and the default (absolute for values < 1) would stop the ascent
            # long before the gradient tolerance gets a say
            options={"maxiter": 200, "gtol": 1e-8, "ftol": 1e-16},
        )
        if np.isfinite(res.fun) and -res.fun > best_val:
            best_val, best_x = float(-res.fun), np.clip(res.x, 0.0, 1.0)
    return AcqResult(point=best_x, acq_value=max(best_val, 0.0), evaluations=evals)
