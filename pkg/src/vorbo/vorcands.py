"""Candidate generation on the boundaries of implicit Voronoi cells.

Given a design X in [0, 1]^P, the Voronoi cell of a design point x_n is the
region whose nearest design point is x_n.  Points on the shared boundaries
of these cells are equidistant to two or more design points, which makes
them natural probe locations for sequential optimization: they are exactly
the locations the design is least sure about, away from every evaluated
point in every direction.

Rather than constructing the tessellation (hopeless beyond a few
dimensions), candidates are found by a bisection walk.  A walk starts at a
design point x_n, picks a direction u, and bisects on t in [0, 1] with the
predicate "the nearest design point of x_n + t*u is still x_n".  Cells are
star-shaped around their design point under the metrics used here, so the
predicate is monotone in t and after K rounds the walk brackets the cell
boundary within 2^-K.  Probes are evaluated where they land, outside the
unit cube included -- nearest-neighbour identity is well defined on all of
R^P -- so the walk tracks the true cell face even when that face lies beyond
a cube wall.  All walks in a batch share each round's nearest-neighbour
query, so a batch costs exactly K batched queries however many candidates
it produces.

Returned points are the bracket midpoints clamped to the cube.  A walk
whose full step never leaves its origin's cell is flagged `boundary_hit`:
the direction scalings used by the sampling wrappers make such a step leave
the cube itself, so a flagged candidate is pinned to a cube face by the
clamp.  The sampling wrappers then pull every candidate that touches a
face -- flagged or merely clamped -- halfway back toward its origin, which
keeps candidates off the (rarely optimal) faces of the cube without
discarding the direction searched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn_index
from .metrics import Metric, distance
from .sampling import lhs, sphere_direction

#: Bisection rounds per walk; brackets the boundary within 2^-30 ~ 1e-9.
BISECTION_ITERS = 30

#: Directions are scaled to sqrt(P) * (1 + _NORM_SLACK) so their norm lands
#: strictly past sqrt(P) rather than exactly on it.
_NORM_SLACK = 1e-9

#: Precandidates closer than this to their nearest design point give no
#: usable direction and are redirected uniformly at random.
_DEGENERATE_NORM = 1e-12

STRATEGIES = ("unif", "rect", "proj")


@dataclass
class WalkBatch:
    """A batch of walk specifications: where to start and which way to go."""

    origins: np.ndarray
    directions: np.ndarray
    bisection_iters: int = BISECTION_ITERS

    def validate(self, design: np.ndarray) -> None:
        n, dim = design.shape
        if self.origins.ndim != 1 or self.directions.ndim != 2:
            raise ValueError("origins must be 1-D and directions 2-D")
        if self.directions.shape != (self.origins.shape[0], dim):
            raise ValueError(
                f"directions shape {self.directions.shape} does not match "
                f"{self.origins.shape[0]} origins in dimension {dim}"
            )
        if self.bisection_iters < 1:
            raise ValueError(f"bisection_iters must be >= 1, got {self.bisection_iters}")
        if self.origins.min(initial=0) < 0 or self.origins.max(initial=0) >= n:
            raise ValueError("origin indices out of range")
        if not np.isfinite(self.directions).all():
            raise ValueError("directions must be finite")
        norms = np.sqrt((self.directions * self.directions).sum(axis=1))
        if not (norms > 0.0).all():
            raise ValueError("every direction must have positive norm")


@dataclass
class CandidateSet:
    """Walk results.

    `t_lower` and `directions` describe the final bisection bracket
    [t_lower, t_lower + bracket_width] of the underlying walk; `points` holds
    the clamped bracket midpoints, except that the sampling wrappers replace
    face-touching candidates by the point halfway back to their origin.
    `boundary_hit` marks walks whose full step never left the origin's cell
    (the bracket never closed), and is kept through the halfway pull as a
    diagnostic.
    """

    points: np.ndarray
    boundary_hit: np.ndarray
    origin: np.ndarray
    bracket_width: np.ndarray
    t_lower: np.ndarray
    directions: np.ndarray

    def __len__(self) -> int:
        return self.points.shape[0]


def _as_design(design: np.ndarray) -> np.ndarray:
    design = np.ascontiguousarray(design, dtype=float)
    if design.ndim != 2 or design.shape[0] < 1:
        raise ValueError(f"design must be a non-empty 2-D array, got shape {design.shape}")
    if design.min() < 0.0 or design.max() > 1.0:
        raise ValueError("design points must lie in the unit cube")
    return design


def vorwalk(design: np.ndarray, batch: WalkBatch, metric: Metric) -> CandidateSet:
    """Run a batch of bisection walks against `design` under `metric`.

    Each walk c starts at ``design[batch.origins[c]]`` and bisects along
    ``batch.directions[c]`` for ``batch.bisection_iters`` rounds, issuing one
    batched nearest-neighbour query per round for the whole batch.  A probe
    succeeds while its nearest design point is still the walk's origin;
    probes are taken where they land, outside the cube included.  The
    returned points are the final bracket midpoints, clamped to the cube.

    A candidate is flagged `boundary_hit` when every probe succeeded, i.e.
    the origin's cell never ended within the full step.  Directions scaled
    past the cube's own extent (as the sampling wrappers do) make such a
    step exit the cube, so flagged candidates sit pinned on a cube face.
    """
    design = _as_design(design)
    batch.validate(design)
    index = nn_index.build(design, metric)

    count = batch.origins.shape[0]
    anchors = design[batch.origins]
    t_lo = np.zeros(count)
    t_hi = np.ones(count)

    for _ in range(batch.bisection_iters):
        mid = 0.5 * (t_lo + t_hi)
        probes = anchors + mid[:, None] * batch.directions
        ok = nn_index.nearest_batch(index, probes) == batch.origins
        t_lo[ok] = mid[ok]
        t_hi[~ok] = mid[~ok]

    mid = 0.5 * (t_lo + t_hi)
    points = np.clip(anchors + mid[:, None] * batch.directions, 0.0, 1.0)
    return CandidateSet(
        points=points,
        boundary_hit=t_hi == 1.0,
        origin=batch.origins.copy(),
        bracket_width=np.full(count, 0.5**batch.bisection_iters),
        t_lower=t_lo,
        directions=batch.directions.copy(),
    )


def halfway_rule(cands: CandidateSet, design: np.ndarray) -> CandidateSet:
    """Pull every face-touching point to the midpoint between it and its origin.

    A candidate touches a face when its walk was flagged (the step never
    left the origin's cell) or when the clamp pinned any coordinate to 0 or
    1 because the cell boundary lay beyond the cube.  Either way the point
    is replaced by the midpoint of its origin and the face location, so no
    returned candidate keeps a coordinate on the cube faces (unless its
    origin is there).  Candidates clear of the faces are untouched; the
    `boundary_hit` flags are kept as diagnostics.  Operates in place and
    returns the same set.
    """
    design = _as_design(design)
    pinned = (cands.points == 0.0).any(axis=1) | (cands.points == 1.0).any(axis=1)
    hit = cands.boundary_hit | pinned
    if hit.any():
        cands.points[hit] = 0.5 * (design[cands.origin[hit]] + cands.points[hit])
    return cands


def _unif_directions(
    count: int, dim: int, metric: Metric, rng: np.random.Generator
) -> np.ndarray:
    """Isotropic directions scaled so the walk metric's norm is sqrt(dim)."""
    scale = np.sqrt(dim) * (1.0 + _NORM_SLACK)
    d = rng.standard_normal((count, dim))
    norms = distance(metric, d, 0.0)
    for i in np.flatnonzero(norms <= _DEGENERATE_NORM):
        d[i] = sphere_direction(dim, rng)
        norms[i] = distance(metric, d[i], 0.0)
    return d * (scale / norms)[:, None]


def _rect_directions(count: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    scale = np.sqrt(dim) * (1.0 + _NORM_SLACK)
    axes = rng.integers(0, 2 * dim, size=count)
    d = np.zeros((count, dim))
    d[np.arange(count), axes % dim] = np.where(axes < dim, scale, -scale)
    return d


def _sample_origins(
    n: int, count: int, incumbent: int | None, rng: np.random.Generator
) -> np.ndarray:
    """Origin indices; with an incumbent, min(2P-equivalent) handled by caller."""
    if incumbent is None:
        return rng.integers(0, n, size=count).astype(np.intp)
    if n == 1:
        return np.zeros(count, dtype=np.intp)
    others = np.delete(np.arange(n), incumbent)
    return others[rng.integers(0, n - 1, size=count)].astype(np.intp)


def direct_sample(
    design: np.ndarray,
    count: int,
    strategy: str,
    metric: Metric,
    incumbent: int,
    rng: np.random.Generator,
) -> CandidateSet:
    """Walk candidates with freshly drawn origins and directions.

    `strategy` is "unif" (isotropic directions, scaled to norm sqrt(P) under
    the walk metric) or "rect" (signed coordinate axes of length sqrt(P),
    the same under every metric).  The first min(2P, count) walks start from
    the incumbent design point; remaining origins are drawn uniformly (with
    replacement) from the other design points.  Origins are drawn before
    directions.  Face-touching candidates are pulled halfway back toward
    their origins.
    """
    design = _as_design(design)
    n, dim = design.shape
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not 0 <= incumbent < n:
        raise ValueError(f"incumbent {incumbent} out of range for {n} design points")
    if strategy not in ("unif", "rect"):
        raise ValueError(f"strategy must be 'unif' or 'rect', got {strategy!r}")

    n_inc = min(2 * dim, count)
    origins = np.concatenate(
        [
            np.full(n_inc, incumbent, dtype=np.intp),
            _sample_origins(n, count - n_inc, incumbent, rng),
        ]
    )
    directions = (
        _unif_directions(count, dim, metric, rng)
        if strategy == "unif"
        else _rect_directions(count, dim, rng)
    )
    cands = vorwalk(design, WalkBatch(origins=origins, directions=directions), metric)
    return halfway_rule(cands, design)


def _project_batch(
    design: np.ndarray,
    pre: np.ndarray,
    metric: Metric,
    rng: np.random.Generator,
) -> WalkBatch:
    """Aim one walk at each precandidate, from its nearest design point."""
    dim = design.shape[1]
    index = nn_index.build(design, metric)
    owner = nn_index.nearest_batch(index, pre)
    diff = pre - design[owner]
    norms = np.sqrt((diff * diff).sum(axis=1))
    for i in np.flatnonzero(norms <= _DEGENERATE_NORM):
        diff[i] = sphere_direction(dim, rng)
        norms[i] = 1.0
    scale = np.sqrt(dim) * (1.0 + _NORM_SLACK)
    return WalkBatch(origins=owner, directions=diff * (scale / norms)[:, None])


def project_sample(
    design: np.ndarray,
    precandidates: np.ndarray,
    metric: Metric,
    rng: np.random.Generator | None = None,
) -> CandidateSet:
    """Walk candidates aimed at space-filling precandidate locations.

    Each precandidate z is assigned to its nearest design point x_n, and a
    walk runs from x_n in the direction of z, scaled to Euclidean length
    sqrt(P) so the step spans the cube.  The walk lands on the cell boundary
    nearest to z's own cell location, so the candidates inherit the
    precandidates' spread without any origin bias.  Precandidates that
    coincide with their nearest design point carry no direction and are
    redirected uniformly at random (`rng`; a fixed fallback generator is
    used when omitted).  Face-touching candidates are pulled halfway back
    toward their origins.
    """
    design = _as_design(design)
    pre = np.asarray(precandidates, dtype=float)
    if pre.ndim != 2 or pre.shape[1] != design.shape[1]:
        raise ValueError(
            f"precandidates must have shape (C, {design.shape[1]}), got {pre.shape}"
        )
    if pre.shape[0] < 1:
        raise ValueError("need at least one precandidate")
    gen = rng if rng is not None else np.random.default_rng(0)
    batch = _project_batch(design, pre, metric, gen)
    cands = vorwalk(design, batch, metric)
    return halfway_rule(cands, design)


def scheme_final(
    design: np.ndarray,
    count: int,
    iteration: int,
    incumbent: int,
    rng: np.random.Generator,
) -> CandidateSet:
    """The candidate scheme used by the optimizer: alternate rect and proj.

    Even iterations (0-based) run incumbent-biased axis walks, odd iterations
    run projection walks from a fresh Latin hypercube, both under the
    Chebyshev metric -- axis walks exploit around the incumbent while the
    projection iterations restore global coverage.
    """
    if iteration < 0:
        raise ValueError(f"iteration must be >= 0, got {iteration}")
    if iteration % 2 == 0:
        return direct_sample(design, count, "rect", Metric.LINF, incumbent, rng)
    pre = lhs(count, np.asarray(design).shape[1], rng).points
    return project_sample(design, pre, Metric.LINF, rng=rng)


def boundary_proportion(
    design: np.ndarray,
    count: int,
    strategy: str,
    metric: Metric,
    rng: np.random.Generator,
) -> float:
    """Fraction of raw walks flagged as wall hits.

    Runs `count` walks with unbiased origins (uniform over all design points
    for "unif"/"rect"; precandidate assignment for "proj") and no halfway
    pull-back, and reports the mean of the `boundary_hit` flags: the
    fraction of walks whose step ran out before the origin's cell did.
    """
    design = _as_design(design)
    n, dim = design.shape
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")

    if strategy == "proj":
        batch = _project_batch(design, lhs(count, dim, rng).points, metric, rng)
    else:
        origins = _sample_origins(n, count, None, rng)
        directions = (
            _unif_directions(count, dim, metric, rng)
            if strategy == "unif"
            else _rect_directions(count, dim, rng)
        )
        batch = WalkBatch(origins=origins, directions=directions)

    cands = vorwalk(design, batch, metric)
    return float(cands.boundary_hit.mean())
