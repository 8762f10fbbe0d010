"""Domain types and their JSON file formats.

All artifacts are plain JSON so they stay human-inspectable and easy to parse
from other languages:

* ``similarity.json``   -- ``{"schema": 1, "M": int, "messages": [str]?, "A": [[float]]}``
* ``constellation.json``-- ``{"schema": 1, "M": int, "N": int, "points": [[[re, im], ...], ...]}``
* ``report.json``       -- ``{"schema": 1, "trace": [[k, objective, grad_ratio], ...], ...metadata}``

Floats are written with ``repr`` (shortest round-tripping decimal), so a
save/load cycle reproduces bit-identical values.  Loading is strict: every
malformed file raises :class:`~semshape.errors.ValidationError`, never a bare
exception from deep inside a parser.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SCHEMA_VERSION = 1

# Loss weights within this distance of [0, 1] (or of symmetry) are repaired;
# larger violations indicate a corrupted file and are rejected.
SIMILARITY_TOL = 1e-6

# Relative slack on the average-power constraint (1/M) sum ||x_i||^2 <= 1.
POWER_TOL = 1e-9


def _read_json(path) -> dict:
    def _reject_constant(name):
        raise ValidationError(f"{path}: non-finite entry ({name}) is not allowed")

    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh, parse_constant=_reject_constant)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: top-level value must be a JSON object")
    return data


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, allow_nan=False)
        fh.write("\n")


def _require(data: dict, key: str, path) -> object:
    if key not in data:
        raise ValidationError(f"{path}: missing required field '{key}'")
    return data[key]


def _check_schema(data: dict, path) -> None:
    schema = _require(data, "schema", path)
    if schema != SCHEMA_VERSION:
        raise ValidationError(f"{path}: unsupported schema version {schema!r}")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MessageSet:
    """Ordered candidate messages; index positions are stable across a run."""

    messages: tuple[str, ...]
    id: str = ""

    def __post_init__(self):
        if len(self.messages) < 2:
            raise ValidationError("message set needs at least 2 messages")
        object.__setattr__(self, "messages", tuple(self.messages))

    @property
    def m(self) -> int:
        return len(self.messages)


@dataclass(frozen=True)
class SimilarityMatrix:
    """M x M semantic-loss weights: zero diagonal, symmetric, entries in [0, 1]."""

    entries: np.ndarray
    messages: MessageSet | None = None

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"loss matrix must be square, got shape {a.shape}")
        if a.shape[0] < 2:
            raise ValidationError("loss matrix needs dimension >= 2")
        if not np.all(np.isfinite(a)):
            raise ValidationError("loss matrix has a non-finite entry")
        if np.abs(np.diagonal(a)).max() > 0:
            raise ValidationError("loss matrix has a nonzero diagonal")
        if np.abs(a - a.T).max() > 0:
            raise ValidationError("loss matrix is not symmetric")
        if a.min() < 0 or a.max() > 1:
            raise ValidationError("loss matrix entries must lie in [0, 1]")
        if self.messages is not None and self.messages.m != a.shape[0]:
            raise ValidationError(
                f"message count {self.messages.m} does not match matrix dimension {a.shape[0]}"
            )
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def m(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Constellation:
    """M complex signal vectors of length N under unit average power."""

    points: np.ndarray  # shape (M, N), complex128

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        if pts.ndim != 2:
            raise ValidationError(f"constellation points must be 2-D (M, N), got {pts.ndim}-D")
        if pts.shape[0] < 2 or pts.shape[1] < 1:
            raise ValidationError(f"constellation needs M >= 2, N >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts.view(float))):
            raise ValidationError("constellation has a non-finite entry")
        if self.average_power(pts) > 1.0 + POWER_TOL:
            raise ValidationError(
                f"power constraint violated: average power {self.average_power(pts):.12g} > 1"
            )
        object.__setattr__(self, "points", _frozen(pts))

    @staticmethod
    def average_power(points: np.ndarray) -> float:
        return float(np.mean(np.sum(np.abs(points) ** 2, axis=1)))

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class ShapingReport:
    """Per-iteration record of one descent run.

    ``trace`` rows are ``(iteration, objective, grad_ratio)`` where
    ``grad_ratio`` is the tangential-to-full gradient norm ratio used as the
    stop criterion.  Objectives are non-increasing along the trace.
    """

    trace: tuple[tuple[int, float, float], ...]
    stop_reason: str  # "converged" | "iteration-cap"
    restart_index: int
    seed: int
    final_objective: float

    _STOP_REASONS = ("converged", "iteration-cap")

    def __post_init__(self):
        if self.stop_reason not in self._STOP_REASONS:
            raise ValidationError(f"unknown stop reason {self.stop_reason!r}")
        trace = tuple((int(k), float(o), float(r)) for k, o, r in self.trace)
        if not trace:
            raise ValidationError("report trace is empty")
        objs = [o for _, o, _ in trace]
        for prev, cur in zip(objs, objs[1:]):
            if cur > prev + 1e-12:
                raise ValidationError(
                    f"trace objective increased from {prev!r} to {cur!r}"
                )
        object.__setattr__(self, "trace", trace)

    @property
    def iterations(self) -> int:
        return len(self.trace)


def load_similarity(path) -> SimilarityMatrix:
    """Read and validate a ``similarity.json`` file.

    Asymmetry and out-of-range values up to ``SIMILARITY_TOL`` are repaired
    (symmetrized by averaging, clamped to [0, 1], diagonal forced to zero);
    anything larger is rejected as corrupt.
    """
    data = _read_json(path)
    _check_schema(data, path)
    m = _require(data, "M", path)
    raw = _require(data, "A", path)
    if not isinstance(m, int) or m < 2:
        raise ValidationError(f"{path}: M must be an integer >= 2, got {m!r}")
    try:
        a = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: field 'A' is not a numeric matrix") from exc
    if a.shape != (m, m):
        raise ValidationError(f"{path}: 'A' has shape {a.shape}, expected ({m}, {m})")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{path}: non-finite entry in 'A'")

    asym = np.abs(a - a.T).max()
    if asym > SIMILARITY_TOL:
        raise ValidationError(f"{path}: asymmetry {asym:.3g} exceeds tolerance {SIMILARITY_TOL}")
    a = (a + a.T) / 2.0

    diag = np.abs(np.diagonal(a)).max()
    if diag > SIMILARITY_TOL:
        raise ValidationError(f"{path}: nonzero diagonal (max |A(i,i)| = {diag:.3g})")
    np.fill_diagonal(a, 0.0)

    low, high = a.min(), a.max()
    if low < -SIMILARITY_TOL or high > 1.0 + SIMILARITY_TOL:
        raise ValidationError(
            f"{path}: entries outside [0, 1] beyond tolerance (min {low:.8g}, max {high:.8g})"
        )
    a = np.clip(a, 0.0, 1.0)

    messages = None
    if "messages" in data:
        msgs = data["messages"]
        if (not isinstance(msgs, list)) or any(not isinstance(s, str) for s in msgs):
            raise ValidationError(f"{path}: 'messages' must be a list of strings")
        if len(msgs) != m:
            raise ValidationError(f"{path}: {len(msgs)} messages for M = {m}")
        messages = MessageSet(tuple(msgs), id=str(data.get("id", "")))
    return SimilarityMatrix(a, messages=messages)


def save_similarity(matrix: SimilarityMatrix, path) -> None:
    payload = {
        "schema": SCHEMA_VERSION,
        "M": matrix.m,
        "A": [[float(v) for v in row] for row in matrix.entries],
    }
    if matrix.messages is not None:
        payload["messages"] = list(matrix.messages.messages)
        if matrix.messages.id:
            payload["id"] = matrix.messages.id
    _write_json(path, payload)


def load_constellation(path) -> Constellation:
    data = _read_json(path)
    _check_schema(data, path)
    m = _require(data, "M", path)
    n = _require(data, "N", path)
    raw = _require(data, "points", path)
    if not isinstance(m, int) or not isinstance(n, int):
        raise ValidationError(f"{path}: M and N must be integers")
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: field 'points' is not numeric") from exc
    if arr.shape != (m, n, 2):
        raise ValidationError(
            f"{path}: 'points' has shape {arr.shape}, expected ({m}, {n}, 2) as [re, im] pairs"
        )
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{path}: non-finite entry in 'points'")
    return Constellation(arr[..., 0] + 1j * arr[..., 1])


def save_constellation(c: Constellation, path) -> None:
    payload = {
        "schema": SCHEMA_VERSION,
        "M": c.m,
        "N": c.n,
        "points": [
            [[float(v.real), float(v.imag)] for v in row] for row in c.points
        ],
    }
    _write_json(path, payload)


def load_report(path) -> ShapingReport:
    data = _read_json(path)
    _check_schema(data, path)
    trace = _require(data, "trace", path)
    if not isinstance(trace, list) or any(len(row) != 3 for row in trace):
        raise ValidationError(f"{path}: 'trace' must be a list of [k, objective, grad_ratio]")
    try:
        return ShapingReport(
            trace=tuple((int(k), float(o), float(r)) for k, o, r in trace),
            stop_reason=str(_require(data, "stop_reason", path)),
            restart_index=int(_require(data, "restart_index", path)),
            seed=int(_require(data, "seed", path)),
            final_objective=float(_require(data, "final_objective", path)),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed report field ({exc})") from exc


def save_report(report: ShapingReport, path) -> None:
    _write_json(path, report_payload(report))


def report_payload(report: ShapingReport) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "trace": [[k, o, r] for k, o, r in report.trace],
        "stop_reason": report.stop_reason,
        "restart_index": report.restart_index,
        "seed": report.seed,
        "final_objective": report.final_objective,
    }
