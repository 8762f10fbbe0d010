"""Shared test helpers: independent oracles and random instance builders.

The oracles deliberately avoid the library's vectorized code paths: the
objective oracle is a scalar double loop over ``math`` functions, the
gradient oracle is central finite differences of that objective, and the
Q-function oracle integrates the defining tail integral by quadrature.
"""

import math
from pathlib import Path

import numpy as np
import pytest

from semshape import ObjectiveContext, SimilarityMatrix, StackedSignal

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def quad_q(x: float) -> float:
    """Q(x) by numerical quadrature of the defining integral."""
    from scipy.integrate import quad

    val, _ = quad(lambda u: math.exp(-u * u / 2.0), x, np.inf)
    return val / math.sqrt(2.0 * math.pi)


def loop_bound(points: np.ndarray, a: np.ndarray, gamma: float) -> float:
    """Term-by-term union bound with scalar math only."""
    m = points.shape[0]
    total = 0.0
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            d2 = sum(abs(points[i, k] - points[j, k]) ** 2 for k in range(points.shape[1]))
            total += a[i, j] * 0.5 * math.erfc(math.sqrt(gamma * d2 / 2.0) / math.sqrt(2.0))
    return total / m


def fd_gradient(sig: StackedSignal, ctx: ObjectiveContext, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of the union bound, re/im as independent reals."""
    a = np.asarray(ctx.weights.entries)
    m, n = sig.m, sig.n

    def f(zv):
        return loop_bound(zv.reshape(m, n), a, ctx.gamma)

    g = np.zeros_like(sig.z)
    for k in range(sig.z.size):
        for comp in (1.0, 1j):
            zp = sig.z.copy()
            zm = sig.z.copy()
            zp[k] += h * comp
            zm[k] -= h * comp
            g[k] += comp * (f(zp) - f(zm)) / (2.0 * h)
    return g


def random_weights(m: int, rng: np.random.Generator) -> SimilarityMatrix:
    s = rng.uniform(0.05, 0.95, (m, m))
    a = (s + s.T) / 2.0
    np.fill_diagonal(a, 0.0)
    return SimilarityMatrix(a)


def random_sphere_signal(
    m: int, n: int, rng: np.random.Generator, min_dist_sq: float = 0.01
) -> StackedSignal:
    """Random point on the sphere ||z||^2 = M with all pairwise d^2 >= min_dist_sq."""
    while True:
        parts = rng.standard_normal((m * n, 2))
        z = parts[:, 0] + 1j * parts[:, 1]
        z *= math.sqrt(m) / np.linalg.norm(z)
        pts = z.reshape(m, n)
        diff = pts[:, None, :] - pts[None, :, :]
        d2 = np.sum(diff.real**2 + diff.imag**2, axis=2)
        if d2[~np.eye(m, dtype=bool)].min() >= min_dist_sq:
            return StackedSignal(z, m, n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
