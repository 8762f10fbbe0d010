"""Monte Carlo AWGN transmission with maximum-likelihood detection.

Noise convention (fixes the meaning of every SNR axis in this package): the
noise is circularly-symmetric complex Gaussian with variance 1/gamma per
complex dimension, i.e. real and imaginary parts each have variance
1/(2 gamma).  With unit average signal power this is the unique convention
under which the simulated pairwise ML error rate between two points at
distance d equals Q(sqrt(gamma d^2 / 2)).

Message draws are stratified (equal trials per message, averaged under the
uniform 1/M prior), which preserves the expectation of uniform sampling and
reduces variance.  Each message stratum consumes its own RNG stream keyed by
(seed, ..., message index), so estimates are independent of how strata are
scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .formats import Constellation, SimilarityMatrix
from .objective import ObjectiveContext, semantic_loss_bound

_CHUNK = 1 << 16  # fixed detection chunk; bounds memory without affecting results


@dataclass(frozen=True)
class ChannelConfig:
    gamma: float
    trials: int
    seed: int

    def __post_init__(self):
        if not (self.gamma > 0):
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")


@dataclass(frozen=True)
class SimEstimate:
    semantic_loss_mean: float
    semantic_loss_stderr: float
    message_error_rate: float
    trials_used: int
    per_pair_confusions: np.ndarray  # (M, M) counts, row = transmitted

    def __post_init__(self):
        if not (0.0 <= self.message_error_rate <= 1.0):
            raise ValidationError(
                f"message error rate {self.message_error_rate!r} outside [0, 1]"
            )
        counts = np.asarray(self.per_pair_confusions)
        counts.setflags(write=False)
        object.__setattr__(self, "per_pair_confusions", counts)


def db_to_linear(snr_db: float) -> float:
    return float(10.0 ** (snr_db / 10.0))


def transmit(x: np.ndarray, config: ChannelConfig, rng: np.random.Generator) -> np.ndarray:
    """y = x + n with n i.i.d. CSCG, variance 1/gamma per complex dimension.

    ``x`` may be a single vector or any batch shaped (..., N).
    """
    x = np.asarray(x, dtype=complex)
    sigma = np.sqrt(1.0 / (2.0 * config.gamma))
    parts = rng.standard_normal(x.shape + (2,))
    return x + sigma * (parts[..., 0] + 1j * parts[..., 1])


def ml_detect(y: np.ndarray, c: Constellation) -> np.ndarray | int:
    """Nearest constellation point by Euclidean distance; ties go to the lowest index."""
    y = np.asarray(y, dtype=complex)
    single = y.ndim == 1
    batch = y[None, :] if single else y
    if batch.shape[-1] != c.n:
        raise ValueError(f"received vector length {batch.shape[-1]}, constellation has N = {c.n}")
    diff = batch[:, None, :] - c.points[None, :, :]
    d2 = np.sum(diff.real**2 + diff.imag**2, axis=2)
    idx = np.argmin(d2, axis=1)
    return int(idx[0]) if single else idx


def estimate_semantic_loss(
    c: Constellation,
    a: SimilarityMatrix,
    config: ChannelConfig,
    stream_key: tuple[int, ...] = (0,),
) -> SimEstimate:
    """Stratified Monte Carlo estimate of the average semantic loss.

    For each message i, transmit it n_i times (trials split as evenly as
    possible), ML-detect, and accumulate A(i, detected).  The mean and the
    binomial-style standard error are averaged across strata under the
    uniform prior.  ``stream_key`` namespaces the RNG streams; the default
    matches the first point of a sweep, so a one-point sweep reproduces a
    direct call exactly.
    """
    if c.m != a.m:
        raise ValidationError(f"constellation has M = {c.m} but loss matrix has M = {a.m}")
    m = c.m
    if config.trials < m:
        raise ValidationError(
            f"stratified estimation needs at least one trial per message: "
            f"trials = {config.trials} < M = {m}"
        )

    base, extra = divmod(config.trials, m)
    confusions = np.zeros((m, m), dtype=np.int64)
    means = np.empty(m)
    variances = np.empty(m)
    error_rates = np.empty(m)
    counts = np.empty(m, dtype=np.int64)

    for i in range(m):
        n_i = base + (1 if i < extra else 0)
        counts[i] = n_i
        rng = np.random.default_rng(np.random.SeedSequence((config.seed, *stream_key, i)))
        loss_sum = 0.0
        loss_sq_sum = 0.0
        errors = 0
        done = 0
        row = a.entries[i]
        while done < n_i:
            k = min(_CHUNK, n_i - done)
            y = transmit(np.broadcast_to(c.points[i], (k, c.n)), config, rng)
            det = ml_detect(y, c)
            confusions[i] += np.bincount(det, minlength=m)
            losses = row[det]
            loss_sum += float(losses.sum())
            loss_sq_sum += float((losses**2).sum())
            errors += int(np.count_nonzero(det != i))
            done += k
        means[i] = loss_sum / n_i
        variances[i] = max(loss_sq_sum / n_i - means[i] ** 2, 0.0)
        error_rates[i] = errors / n_i

    return SimEstimate(
        semantic_loss_mean=float(means.mean()),
        semantic_loss_stderr=float(np.sqrt(np.sum(variances / counts)) / m),
        message_error_rate=float(error_rates.mean()),
        trials_used=int(counts.sum()),
        per_pair_confusions=confusions,
    )


@dataclass(frozen=True)
class SweepPoint:
    snr_db: float
    estimate: SimEstimate
    bound: float


def sweep(
    c: Constellation,
    a: SimilarityMatrix,
    gammas_db: list[float],
    trials: int,
    seed: int,
) -> list[SweepPoint]:
    """One empirical estimate plus the analytic bound per SNR point.

    Point j uses RNG streams keyed by (seed, j), so the sweep is deterministic
    regardless of evaluation order.
    """
    points = []
    for j, snr_db in enumerate(gammas_db):
        gamma = db_to_linear(snr_db)
        config = ChannelConfig(gamma=gamma, trials=trials, seed=seed)
        estimate = estimate_semantic_loss(c, a, config, stream_key=(j,))
        bound = semantic_loss_bound(c, ObjectiveContext(a, gamma))
        points.append(SweepPoint(snr_db=float(snr_db), estimate=estimate, bound=bound))
    return points
