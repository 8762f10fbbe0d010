"""Projected gradient descent on the power sphere ||z||^2 = M.

Each iteration: evaluate the descent direction, project it onto the tangent
space of the sphere, pick a rotation angle by line search over [0, pi/2], and
rotate.  The rotation preserves the norm exactly (z and the projected
direction are orthogonal), and the iterate is renormalized once per iteration
to remove accumulated rounding drift.  The angle search always keeps theta = 0
as a candidate, so the objective never increases.

Multi-start: independent RNG streams are derived from (seed, restart_index),
so results do not depend on how restarts are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SemShapeError, ValidationError
from .formats import Constellation, ShapingReport, SimilarityMatrix
from .objective import (
    D_FLOOR,
    ObjectiveContext,
    StackedSignal,
    bound_from_points,
    descent_direction,
    min_active_dist_sq,
    pairwise_dist_sq,
    stack,
    unstack,
)

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0

# Initial points closer than this (squared, relative to 1/M per-point power)
# are resampled to stay clear of the gradient singularity.
INIT_SEPARATION = 0.01


@dataclass(frozen=True)
class LineSearchSettings:
    grid_points: int = 64
    tol_theta: float = 1e-6

    def __post_init__(self):
        if self.grid_points < 2:
            raise ValidationError(f"need at least 2 grid points, got {self.grid_points}")
        if not (self.tol_theta > 0):
            raise ValidationError(f"tol_theta must be positive, got {self.tol_theta}")


@dataclass(frozen=True)
class ShapingConfig:
    """Run parameters for one shaping job."""

    gamma: float
    epsilon: float = 1e-2
    max_iterations: int = 500
    restarts: int = 50
    seed: int = 0
    line_search: LineSearchSettings = field(default_factory=LineSearchSettings)
    seed_with_baseline: Constellation | None = None

    def __post_init__(self):
        if not (self.gamma > 0):
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        if not (0 < self.epsilon < 1):
            raise ValidationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.max_iterations < 1:
            raise ValidationError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.restarts < 1:
            raise ValidationError(f"restarts must be >= 1, got {self.restarts}")
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")


@dataclass(frozen=True)
class ShapingResult:
    constellation: Constellation
    report: ShapingReport
    all_final_objectives: tuple[float, ...]
    all_reports: tuple[ShapingReport, ...]

    def __post_init__(self):
        power = Constellation.average_power(self.constellation.points)
        if abs(power - 1.0) > 1e-9:
            raise ValidationError(
                f"shaped constellation power {power!r} is not 1 (constraint must be active)"
            )


def random_init(m: int, n: int, rng: np.random.Generator) -> StackedSignal:
    """Isotropic complex Gaussian draw scaled onto the sphere ||z||^2 = M.

    Resamples (up to 100 attempts) until every pairwise squared distance is
    at least ``INIT_SEPARATION / M``, which keeps the first gradient
    evaluation away from the coincident-pair singularity.
    """
    if m < 2 or n < 1:
        raise ValidationError(f"need M >= 2 and N >= 1, got M = {m}, N = {n}")
    threshold = INIT_SEPARATION / m
    for _ in range(100):
        parts = rng.standard_normal((m * n, 2))
        z = parts[:, 0] + 1j * parts[:, 1]
        z *= np.sqrt(m) / np.linalg.norm(z)
        pts = z.reshape(m, n)
        d2 = pairwise_dist_sq(pts)
        if d2[~np.eye(m, dtype=bool)].min() >= threshold:
            return StackedSignal(z, m, n)
    raise SemShapeError(
        f"could not draw an initialization with pairwise separation {threshold:.3g} "
        f"after 100 attempts (M = {m}, N = {n})"
    )


def project(g: np.ndarray, sig: StackedSignal) -> np.ndarray:
    """Remove the radial component: g - (z^H g / ||z||^2) z, tangent to the sphere."""
    z = sig.z
    norm_sq = float(np.sum(np.abs(z) ** 2))
    if norm_sq == 0.0:
        raise ValueError("cannot project against a zero vector")
    if g.shape != z.shape:
        raise ValueError(f"direction shape {g.shape} does not match signal shape {z.shape}")
    return g - (np.vdot(z, g) / norm_sq) * z


def rotate_update(sig: StackedSignal, g_perp: np.ndarray, theta: float) -> StackedSignal:
    """Great-circle step: cos(theta) z + sin(theta) sqrt(M) g_perp / ||g_perp||."""
    norm = float(np.linalg.norm(g_perp))
    if norm == 0.0:
        raise ValueError("cannot rotate along a zero direction")
    if not (0.0 <= theta <= np.pi / 2):
        raise ValueError(f"theta must lie in [0, pi/2], got {theta}")
    z_new = np.cos(theta) * sig.z + (np.sin(theta) * np.sqrt(sig.m) / norm) * g_perp
    return StackedSignal(z_new, sig.m, sig.n)


def _golden_refine(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Golden-section minimization on [lo, hi]; returns the best evaluated (theta, f)."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    best = (c, fc) if fc <= fd else (d, fd)
    while (b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
            trial = (c, fc)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
            trial = (d, fd)
        if trial[1] < best[1]:
            best = trial
    return best


def line_search(
    sig: StackedSignal,
    g_perp: np.ndarray,
    ctx: ObjectiveContext,
    settings: LineSearchSettings = LineSearchSettings(),
) -> float:
    """Pick theta in [0, pi/2] minimizing the objective along the great circle.

    Coarse grid first, then golden-section refinement around every coarse
    local minimum.  theta = 0 is always a candidate, so the returned angle
    never increases the objective.  Trial angles that drive an active pair
    below the distance floor would make the next gradient singular and are
    discarded (treated as +inf).
    """
    norm = float(np.linalg.norm(g_perp))
    if norm == 0.0:
        raise ValueError("cannot line-search along a zero direction")
    w = (np.sqrt(sig.m) / norm) * g_perp
    z = sig.z
    a = ctx.weights.entries

    def f(theta: float) -> float:
        pts = (np.cos(theta) * z + np.sin(theta) * w).reshape(sig.m, sig.n)
        if min_active_dist_sq(pts, a) < D_FLOOR:
            return np.inf
        return bound_from_points(pts, ctx)

    grid = np.linspace(0.0, np.pi / 2, settings.grid_points)
    values = np.array([f(t) for t in grid])

    candidates = [(float(grid[i]), float(values[i])) for i in range(len(grid))]
    last = len(grid) - 1
    for i in range(len(grid)):
        left = values[i - 1] if i > 0 else np.inf
        right = values[i + 1] if i < last else np.inf
        if values[i] <= left and values[i] <= right and np.isfinite(values[i]):
            lo = grid[max(i - 1, 0)]
            hi = grid[min(i + 1, last)]
            candidates.append(_golden_refine(f, float(lo), float(hi), settings.tol_theta))

    theta, _ = min(candidates, key=lambda c: (c[1], c[0]))
    return theta


IterationHook = Callable[[int, StackedSignal, np.ndarray, np.ndarray, float, float], None]


def shape_once(
    init: StackedSignal,
    config: ShapingConfig,
    ctx: ObjectiveContext,
    restart_index: int = 0,
    on_iteration: IterationHook | None = None,
) -> tuple[ShapingReport, StackedSignal]:
    """Run the descent loop from one initialization.

    Per iteration k: renormalize onto the sphere, record (k, objective,
    ||g_perp|| / ||g||), stop if the ratio is within epsilon (or the
    iteration cap is reached), otherwise line-search and rotate.  The trace's
    last entry always describes the returned iterate.
    """
    m, n = init.m, init.n
    if ctx.m != m:
        raise ValidationError(f"loss matrix has M = {ctx.m} but signal has M = {m}")
    power = init.power()
    if abs(power - m) > 1e-6 * m:
        raise ValidationError(f"initialization is off the sphere: ||z||^2 = {power!r}, M = {m}")

    z = init
    trace: list[tuple[int, float, float]] = []
    stop_reason = "iteration-cap"
    for k in range(1, config.max_iterations + 1):
        z = StackedSignal(z.z * (np.sqrt(m) / np.linalg.norm(z.z)), m, n)
        objective = bound_from_points(z.points(), ctx)
        g = descent_direction(z, ctx)
        g_norm = float(np.linalg.norm(g))
        if g_norm == 0.0:
            g_perp = np.zeros_like(g)
            ratio = 0.0
        else:
            g_perp = project(g, z)
            ratio = float(np.linalg.norm(g_perp)) / g_norm
        trace.append((k, objective, ratio))
        if on_iteration is not None:
            on_iteration(k, z, g, g_perp, objective, ratio)
        if ratio <= config.epsilon:
            stop_reason = "converged"
            break
        if k == config.max_iterations:
            break
        theta = line_search(z, g_perp, ctx, config.line_search)
        z = rotate_update(z, g_perp, theta)

    report = ShapingReport(
        trace=tuple(trace),
        stop_reason=stop_reason,
        restart_index=restart_index,
        seed=config.seed,
        final_objective=trace[-1][1],
    )
    return report, z


def shape(config: ShapingConfig, a: SimilarityMatrix, m: int, n: int) -> ShapingResult:
    """Multi-start shaping: best of ``restarts`` random initializations.

    Restart r draws its initialization from a stream keyed by (seed, r).  If
    ``seed_with_baseline`` is set, that constellation is run as one extra
    start with index ``restarts``.  The winner is the run with the smallest
    final objective, ties broken by lowest restart index.
    """
    if a.m != m:
        raise ValidationError(f"loss matrix has M = {a.m}, expected {m}")
    ctx = ObjectiveContext(a, config.gamma)

    runs: list[tuple[ShapingReport, StackedSignal]] = []
    for r in range(config.restarts):
        rng = np.random.default_rng(np.random.SeedSequence((config.seed, r)))
        init = random_init(m, n, rng)
        runs.append(shape_once(init, config, ctx, restart_index=r))

    baseline = config.seed_with_baseline
    if baseline is not None:
        if baseline.m != m or baseline.n != n:
            raise ValidationError(
                f"baseline start is {baseline.m} x {baseline.n}, expected {m} x {n}"
            )
        init = stack(baseline.points)
        runs.append(shape_once(init, config, ctx, restart_index=config.restarts))

    best_report, best_z = min(runs, key=lambda run: (run[0].final_objective, run[0].restart_index))
    return ShapingResult(
        constellation=unstack(best_z),
        report=best_report,
        all_final_objectives=tuple(r.final_objective for r, _ in runs),
        all_reports=tuple(r for r, _ in runs),
    )
