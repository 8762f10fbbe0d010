"""Semantic-loss union bound and its gradient in the stacked-signal domain.

The production paths work directly on the M x N point array in O(M^2 N).
The (MN) x (MN) pair-weight matrices are kept as a small-instance validation
oracle for the same quantities; both routes are tested against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import CoincidentPointsError, ValidationError
from .formats import Constellation, SimilarityMatrix

# Squared-distance floor below which the gradient's 1/sqrt(d^2) factor is
# treated as singular (only for pairs with nonzero loss weight).
D_FLOOR = 1e-10


def q_function(x):
    """Standard normal tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    q = 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    return float(q) if np.ndim(x) == 0 else q


def pairwise_error_prob(x_i: np.ndarray, x_j: np.ndarray, gamma: float) -> float:
    """Probability that ML detection prefers x_j over a transmitted x_i in AWGN."""
    x_i = np.asarray(x_i, dtype=complex)
    x_j = np.asarray(x_j, dtype=complex)
    if x_i.shape != x_j.shape:
        raise ValueError(f"vector shapes differ: {x_i.shape} vs {x_j.shape}")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    d2 = float(np.sum(np.abs(x_i - x_j) ** 2))
    return q_function(np.sqrt(gamma * d2 / 2.0))


@dataclass(frozen=True)
class ObjectiveContext:
    """Fixed problem data: loss weights and linear SNR."""

    weights: SimilarityMatrix
    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0):
            raise ValidationError(f"gamma must be positive, got {self.gamma}")

    @property
    def m(self) -> int:
        return self.weights.m


@dataclass(frozen=True)
class StackedSignal:
    """The length-MN vector z = [x_1^T, ..., x_M^T]^T."""

    z: np.ndarray
    m: int
    n: int

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex)
        if z.shape != (self.m * self.n,):
            raise ValueError(f"stacked vector has shape {z.shape}, expected ({self.m * self.n},)")
        object.__setattr__(self, "z", z)

    def points(self) -> np.ndarray:
        """Unstack to the (M, N) point array."""
        return self.z.reshape(self.m, self.n)

    def power(self) -> float:
        return float(np.sum(np.abs(self.z) ** 2))


def stack(points: np.ndarray) -> StackedSignal:
    points = np.asarray(points, dtype=complex)
    m, n = points.shape
    return StackedSignal(points.reshape(-1).copy(), m, n)


def unstack(sig: StackedSignal) -> Constellation:
    return Constellation(sig.points())


def pairwise_dist_sq(points: np.ndarray) -> np.ndarray:
    """M x M matrix of squared Euclidean distances between signal vectors."""
    diff = points[:, None, :] - points[None, :, :]
    return np.sum(diff.real**2 + diff.imag**2, axis=2)


def _check_dims(points: np.ndarray, ctx: ObjectiveContext) -> None:
    if points.shape[0] != ctx.m:
        raise ValueError(
            f"constellation has M = {points.shape[0]} but loss matrix has M = {ctx.m}"
        )


def bound_from_points(points: np.ndarray, ctx: ObjectiveContext) -> float:
    """Union bound evaluated straight from an (M, N) point array."""
    _check_dims(points, ctx)
    m = ctx.m
    d2 = pairwise_dist_sq(points)
    off = ~np.eye(m, dtype=bool)
    q = q_function(np.sqrt(ctx.gamma * d2[off] / 2.0))
    return float(np.sum(ctx.weights.entries[off] * q) / m)


def semantic_loss_bound(c: Constellation, ctx: ObjectiveContext) -> float:
    """Average-loss union bound: (1/M) sum_{i != j} A(i,j) Q(sqrt(gamma d_ij^2 / 2))."""
    return bound_from_points(c.points, ctx)


@dataclass(frozen=True)
class PairWeightMatrix:
    """Hermitian PSD matrix with z^H W z = ||x_i - x_j||^2 for all stackings z."""

    i: int
    j: int
    w: np.ndarray


def build_pair_weights(m: int, n: int) -> list[PairWeightMatrix]:
    """Materialize W_ij for every ordered pair i != j.

    W_ij is the Hadamard product of the Gram matrix of the block-selection
    operator with the rank-one difference of block indicators: identity blocks
    at (i,i) and (j,j), negated identity blocks at (i,j) and (j,i).
    """
    if m < 2 or n < 1:
        raise ValueError(f"need M >= 2 and N >= 1, got M = {m}, N = {n}")
    gram = np.tile(np.eye(n), (m, m))  # Gram matrix of [I_N, ..., I_N]
    weights = []
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            d = np.zeros(m * n)
            d[i * n:(i + 1) * n] = 1.0
            d[j * n:(j + 1) * n] = -1.0
            w = gram * np.outer(d, d)
            w.setflags(write=False)
            weights.append(PairWeightMatrix(i, j, w))
    return weights


def _check_weights(sig: StackedSignal, weights: list[PairWeightMatrix]) -> None:
    dim = sig.m * sig.n
    if len(weights) != sig.m * (sig.m - 1) or weights[0].w.shape != (dim, dim):
        raise ValueError(
            f"pair weights do not match M = {sig.m}, N = {sig.n}"
        )


def bound_from_stacked(
    sig: StackedSignal, ctx: ObjectiveContext, weights: list[PairWeightMatrix]
) -> float:
    """Union bound via the quadratic forms z^H W_ij z (validation route)."""
    _check_dims(sig.points(), ctx)
    _check_weights(sig, weights)
    a = ctx.weights.entries
    total = 0.0
    for pw in weights:
        d2 = float(np.real(sig.z.conj() @ (pw.w @ sig.z)))
        total += a[pw.i, pw.j] * q_function(np.sqrt(max(ctx.gamma * d2, 0.0) / 2.0))
    return total / sig.m


def _pair_coefficients(d2: np.ndarray, a: np.ndarray, gamma: float) -> np.ndarray:
    """Per-pair factor A(i,j) sqrt(gamma / (4 pi d^2)) exp(-gamma d^2 / 4).

    Pairs with zero loss weight contribute nothing regardless of distance;
    an active pair below the distance floor is a singularity.
    """
    m = d2.shape[0]
    active = (a > 0) & ~np.eye(m, dtype=bool)
    bad = active & (d2 < D_FLOOR)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise CoincidentPointsError(int(i), int(j), float(d2[i, j]))
    coef = np.zeros_like(d2)
    d2a = d2[active]
    coef[active] = a[active] * np.sqrt(gamma / (4.0 * np.pi * d2a)) * np.exp(-gamma * d2a / 4.0)
    return coef


def descent_direction(
    sig: StackedSignal,
    ctx: ObjectiveContext,
    weights: list[PairWeightMatrix] | None = None,
) -> np.ndarray:
    """Negative gradient of the union bound with re/im treated as real coordinates.

    With ``weights`` supplied the dense validation route -Omega(z) z is used;
    by default the same vector is assembled pairwise from the unstacked points
    in O(M^2 N).
    """
    points = sig.points()
    _check_dims(points, ctx)
    a = ctx.weights.entries
    gamma = ctx.gamma
    d2 = pairwise_dist_sq(points)
    coef = _pair_coefficients(d2, a, gamma)

    if weights is not None:
        _check_weights(sig, weights)
        omega = np.zeros((sig.m * sig.n, sig.m * sig.n))
        for pw in weights:
            omega -= coef[pw.i, pw.j] / sig.m * pw.w
        return -(omega @ sig.z)

    # Block i of sum_{ordered pairs} c_ij W_ij z collapses to
    # sum_j (c_ij + c_ji)(x_i - x_j); c is symmetric.
    diff = points[:, None, :] - points[None, :, :]
    g = (2.0 / sig.m) * np.sum(coef[:, :, None] * diff, axis=1)
    return g.reshape(-1)


def min_active_dist_sq(points: np.ndarray, a: np.ndarray) -> float:
    """Smallest squared distance over pairs that carry nonzero loss weight."""
    m = points.shape[0]
    active = (a > 0) & ~np.eye(m, dtype=bool)
    if not np.any(active):
        return np.inf
    return float(pairwise_dist_sq(points)[active].min())
