"""Command-line entry point.

Subcommands: ``shape`` (optimize a constellation for a similarity matrix),
``evaluate`` (analytic bound of a saved constellation), ``sweep`` (Monte
Carlo vs bound across SNR), ``compare`` (shaped vs baseline with dB gains).

Every command is deterministic given its inputs and seed; numeric output
files never embed timestamps, so reruns are byte-identical.  Each output
directory receives a ``manifest.json`` recording the resolved configuration
and SHA-256 digests of the input files.

Exit codes: 0 success, 2 input/validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import BaselineSpec, build_baseline
from .channel import ChannelConfig, db_to_linear, estimate_semantic_loss, sweep
from .errors import SemShapeError, ValidationError
from .formats import (
    load_constellation,
    load_similarity,
    report_payload,
    save_constellation,
    save_report,
)
from .objective import ObjectiveContext, semantic_loss_bound
from .shaper import ShapingConfig, shape


def parse_snr_list(text: str) -> list[float]:
    """Parse '--snr-db' values: '4', '0,2,4', or the range form '0,2,...,14'."""
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    if not tokens:
        raise ValidationError("--snr-db: empty list")
    if "..." in tokens:
        pos = tokens.index("...")
        if pos != 2 or len(tokens) != 4 or "..." in tokens[3:]:
            raise ValidationError(
                "--snr-db: range form must be 'first,second,...,last'"
            )
        try:
            first, second, last = (float(tokens[i]) for i in (0, 1, 3))
        except ValueError as exc:
            raise ValidationError(f"--snr-db: not numeric ({exc})") from exc
        step = second - first
        if step <= 0 or last < first:
            raise ValidationError("--snr-db: range must be increasing")
        count = int(round((last - first) / step))
        values = [first + k * step for k in range(count + 1)]
        if abs(values[-1] - last) > 1e-9:
            raise ValidationError("--snr-db: step does not divide the range")
        return values
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise ValidationError(f"--snr-db: not numeric ({exc})") from exc


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, resolved: dict, inputs: dict[str, Path]) -> None:
    manifest = {
        "schema": 1,
        "command": command,
        "config": resolved,
        "inputs": {
            name: {"path": str(p), "sha256": _sha256(p)} for name, p in inputs.items()
        },
        "tool_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _ensure_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _shaping_config(args, gamma: float, baseline=None) -> ShapingConfig:
    return ShapingConfig(
        gamma=gamma,
        epsilon=args.epsilon,
        max_iterations=args.max_iters,
        restarts=args.restarts,
        seed=args.seed,
        seed_with_baseline=baseline,
    )


def cmd_shape(args) -> int:
    a = load_similarity(args.similarity)
    snrs = parse_snr_list(args.snr_db)
    if len(snrs) != 1:
        raise ValidationError("--snr-db: shape expects a single SNR value")
    gamma = db_to_linear(snrs[0])

    baseline = None
    if args.baseline is not None:
        baseline = build_baseline(BaselineSpec(args.baseline, a.m, args.n))
    config = _shaping_config(args, gamma, baseline)
    result = shape(config, a, a.m, args.n)

    out = _ensure_out(args)
    save_constellation(result.constellation, out / "constellation.json")
    save_report(result.report, out / "report.json")
    traces = {
        "schema": 1,
        "snr_db": snrs[0],
        "restarts": [report_payload(r) for r in result.all_reports],
    }
    with open(out / "traces.json", "w", encoding="utf-8") as fh:
        json.dump(traces, fh, indent=1)
        fh.write("\n")
    _write_manifest(
        out,
        "shape",
        {
            "n": args.n,
            "snr_db": snrs[0],
            "epsilon": args.epsilon,
            "restarts": args.restarts,
            "max_iters": args.max_iters,
            "seed": args.seed,
            "baseline": args.baseline,
        },
        {"similarity": Path(args.similarity)},
    )
    print(
        f"best of {len(result.all_reports)} starts: objective {result.report.final_objective!r} "
        f"({result.report.stop_reason} after {result.report.iterations} iterations)"
    )
    return 0


def cmd_evaluate(args) -> int:
    a = load_similarity(args.similarity)
    c = load_constellation(args.constellation)
    if c.m != a.m:
        raise ValidationError(
            f"--constellation has M = {c.m} but --similarity has M = {a.m}"
        )
    snrs = parse_snr_list(args.snr_db)
    rows = []
    for snr_db in snrs:
        bound = semantic_loss_bound(c, ObjectiveContext(a, db_to_linear(snr_db)))
        rows.append([float(snr_db), bound])
        print(f"{snr_db!r},{bound!r}")
    if args.out is not None:
        out = _ensure_out(args)
        _write_csv(out / "bounds.csv", ["snr_db", "bound"], rows)
        _write_manifest(
            out,
            "evaluate",
            {"snr_db": snrs},
            {"similarity": Path(args.similarity), "constellation": Path(args.constellation)},
        )
    return 0


def cmd_sweep(args) -> int:
    a = load_similarity(args.similarity)
    c = load_constellation(args.constellation)
    if c.m != a.m:
        raise ValidationError(
            f"--constellation has M = {c.m} but --similarity has M = {a.m}"
        )
    snrs = parse_snr_list(args.snr_db)
    points = sweep(c, a, snrs, args.trials, args.seed)

    out = _ensure_out(args)
    rows = [
        [
            p.snr_db,
            p.estimate.semantic_loss_mean,
            p.estimate.semantic_loss_stderr,
            p.bound,
            p.estimate.message_error_rate,
            p.estimate.trials_used,
        ]
        for p in points
    ]
    _write_csv(
        out / "sweep.csv",
        ["snr_db", "empirical_sl", "stderr", "bound", "message_error_rate", "trials"],
        rows,
    )
    _write_manifest(
        out,
        "sweep",
        {"snr_db": snrs, "trials": args.trials, "seed": args.seed},
        {"similarity": Path(args.similarity), "constellation": Path(args.constellation)},
    )
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return 0


def snr_at_loss(snrs_db: list[float], losses: list[float], target: float) -> float | None:
    """SNR where a non-increasing loss curve crosses ``target``.

    Linear interpolation of log10(loss) against dB; None when the target is
    not bracketed by the curve (or the curve hits exact zero first).
    """
    if target <= 0:
        raise ValidationError(f"target loss must be positive, got {target}")
    log_t = np.log10(target)
    for k in range(len(snrs_db) - 1):
        lo, hi = losses[k], losses[k + 1]
        if lo <= 0 or hi <= 0:
            break
        la, lb = np.log10(lo), np.log10(hi)
        if (la - log_t) * (lb - log_t) <= 0 and la != lb:
            frac = (la - log_t) / (la - lb)
            return float(snrs_db[k] + frac * (snrs_db[k + 1] - snrs_db[k]))
    return None


def cmd_compare(args) -> int:
    a = load_similarity(args.similarity)
    if args.baseline is None:
        raise ValidationError("--baseline is required for compare")
    spec = BaselineSpec(args.baseline, a.m, args.n)
    baseline = build_baseline(spec)
    snrs = parse_snr_list(args.snr_db)
    targets = [float(t) for t in args.target_loss.split(",") if t.strip()]

    rows = []
    shaped_bounds = []
    base_bounds = []
    for j, snr_db in enumerate(snrs):
        gamma = db_to_linear(snr_db)
        ctx = ObjectiveContext(a, gamma)
        result = shape(_shaping_config(args, gamma, baseline), a, a.m, args.n)
        shaped_bound = semantic_loss_bound(result.constellation, ctx)
        base_bound = semantic_loss_bound(baseline, ctx)
        cfg = ChannelConfig(gamma=gamma, trials=args.trials, seed=args.seed)
        base_est = estimate_semantic_loss(baseline, a, cfg, stream_key=(j, 0))
        shaped_est = estimate_semantic_loss(result.constellation, a, cfg, stream_key=(j, 1))
        rows.append(
            [
                float(snr_db),
                shaped_bound,
                base_bound,
                shaped_est.semantic_loss_mean,
                shaped_est.semantic_loss_stderr,
                base_est.semantic_loss_mean,
                base_est.semantic_loss_stderr,
                args.trials,
            ]
        )
        shaped_bounds.append(shaped_bound)
        base_bounds.append(base_bound)

    out = _ensure_out(args)
    _write_csv(
        out / "compare.csv",
        [
            "snr_db",
            "shaped_bound",
            "baseline_bound",
            "shaped_empirical",
            "shaped_stderr",
            "baseline_empirical",
            "baseline_stderr",
            "trials",
        ],
        rows,
    )
    gains = []
    for target in targets:
        s_shaped = snr_at_loss(snrs, shaped_bounds, target)
        s_base = snr_at_loss(snrs, base_bounds, target)
        gain = None if s_shaped is None or s_base is None else s_base - s_shaped
        gains.append(
            {
                "target_loss": target,
                "shaped_snr_db": s_shaped,
                "baseline_snr_db": s_base,
                "gain_db": gain,
            }
        )
        shown = "not bracketed by sweep range" if gain is None else f"{gain:.4f} dB"
        print(f"gain at loss {target:g}: {shown}")
    payload = {
        "schema": 1,
        "baseline": args.baseline,
        "M": a.m,
        "N": args.n,
        "similarity_sha256": _sha256(Path(args.similarity)),
        "gains": gains,
    }
    with open(out / "gains.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    _write_manifest(
        out,
        "compare",
        {
            "n": args.n,
            "snr_db": snrs,
            "baseline": args.baseline,
            "trials": args.trials,
            "seed": args.seed,
            "epsilon": args.epsilon,
            "restarts": args.restarts,
            "max_iters": args.max_iters,
            "target_loss": targets,
        },
        {"similarity": Path(args.similarity)},
    )
    return 0


def _add_shaping_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=1e-2, help="stop threshold on ||g_perp||/||g||")
    p.add_argument("--restarts", type=int, default=50, help="random initializations")
    p.add_argument("--max-iters", type=int, default=500, help="iteration cap per start")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semshape",
        description="Constellation shaping for message-level semantic communication.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shape", help="optimize a constellation for a similarity matrix")
    p.add_argument("--similarity", required=True, help="similarity.json input")
    p.add_argument("--n", type=int, required=True, help="channel uses per message")
    p.add_argument("--snr-db", default="10", help="design SNR in dB (single value)")
    _add_shaping_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--baseline", choices=["bpsk", "qpsk"], default=None,
                   help="also seed one start from this baseline")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("evaluate", help="analytic bound of a saved constellation")
    p.add_argument("--similarity", required=True)
    p.add_argument("--constellation", required=True)
    p.add_argument("--snr-db", default="10", help="dB values: '10', '0,2,4' or '0,2,...,14'")
    p.add_argument("--out", default=None, help="also write bounds.csv here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="Monte Carlo estimate vs bound across SNR")
    p.add_argument("--similarity", required=True)
    p.add_argument("--constellation", required=True)
    p.add_argument("--snr-db", default="0,2,...,14")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="shaped vs baseline constellation across SNR")
    p.add_argument("--similarity", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--baseline", choices=["bpsk", "qpsk"], required=True)
    p.add_argument("--snr-db", default="0,2,...,12")
    p.add_argument("--trials", type=int, default=100000)
    _add_shaping_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-loss", default="1e-2", help="loss levels for dB-gain readout")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SemShapeError, ValueError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
