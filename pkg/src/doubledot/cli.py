"""Command-line entry point: ``doubledot {sweep,figure,find-ep,fixed-points}``.

Exit codes: 0 success, 2 configuration error, 3 when the fraction of failed
sweep cells exceeds ``--max-failures``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from .branchpoints import (
    critical_coupling,
    critical_lengths,
    critical_u_double_coincidence,
    find_ep_numeric,
)
from .errors import ConfigError, DoubleDotError, SpecError, UnknownFigure
from .model import DoubleDotSpec
from .presets import FIGURES, preset_spec, reproduce_figure
from .spectral import resonance_states, solve_fixed_points
from .sweep import SweepConfig, export, fmt, run_sweep

log = logging.getLogger("doubledot")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURES = 3

ANALYTIC = {
    "critical_coupling": critical_coupling,
    "double_coincidence": critical_u_double_coincidence,
    "critical_lengths": critical_lengths,
}


def _read_json(path: str) -> dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _spec_from(data: Mapping[str, Any]) -> DoubleDotSpec:
    if "spec" in data:
        return DoubleDotSpec.from_dict(data["spec"])
    if "preset" in data:
        return preset_spec(str(data["preset"]))
    raise ConfigError("config needs a 'spec' or a 'preset'")


def _check_failures(failed: int, total: int, threshold: float) -> int:
    if total and failed / total > threshold:
        log.error("%d of %d cells failed (threshold %.3g)", failed, total, threshold)
        return EXIT_FAILURES
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = SweepConfig.load(args.config)
    if args.out:
        config = replace(config, output_dir=args.out)
    if args.workers:
        config = replace(config, workers=args.workers)
    result = run_sweep(config)
    files = export(result)
    for f in files:
        print(f)
    log.info("%d cells, %d failed", result.n_cells, result.failure_count)
    return _check_failures(result.failure_count, result.n_cells, args.max_failures)


def cmd_figure(args: argparse.Namespace) -> int:
    files = reproduce_figure(args.id, args.out, points=args.points, workers=args.workers or 1)
    manifest = json.loads(files[-1].read_text())
    failed = sum(p["failures"] for p in manifest["panels"])
    total = 0
    for p in manifest["panels"]:
        ax2 = p["config"]["axis2"]
        total += p["config"]["axis1"]["points"] * (ax2["points"] if ax2 else 1)
    for f in files:
        print(f)
    return _check_failures(failed, total, args.max_failures)


def _parse_pair(raw, spec: DoubleDotSpec):
    if raw is None:
        return None
    if raw == "outermost":
        return (0, spec.dim - 1)
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        pair = (int(raw[0]), int(raw[1]))
        if not all(0 <= p < spec.dim for p in pair) or pair[0] == pair[1]:
            raise ConfigError(f"pair {pair} does not name two of {spec.dim} states")
        return pair
    raise ConfigError("pair must be two labels or 'outermost'")


def cmd_find_ep(args: argparse.Namespace) -> int:
    data = _read_json(args.config)
    spec = _spec_from(data)
    points = []
    analytic = data.get("analytic")
    if analytic is not None:
        if analytic not in ANALYTIC:
            raise ConfigError(f"analytic must be one of {', '.join(ANALYTIC)}")
        found = ANALYTIC[analytic](spec)
        points.extend(found if isinstance(found, list) else [found])
    if "params" in data:
        params = data["params"]
        if not isinstance(params, Mapping):
            raise ConfigError("params must map parameter names to [min, max]")
        try:
            ranges = {k: (float(v[0]), float(v[1])) for k, v in params.items()}
            seed = {k: float(v) for k, v in data["seed"].items()} if data.get("seed") else None
        except (TypeError, ValueError, IndexError, KeyError) as exc:
            raise ConfigError(f"bad params or seed: {exc}") from exc
        points.append(find_ep_numeric(
            spec,
            ranges,
            energy=data.get("energy"),
            pair=_parse_pair(data.get("pair"), spec),
            seed=seed,
            grid=int(data.get("grid", 12)),
        ))
    if not points:
        raise ConfigError("find-ep config needs 'params' and/or 'analytic'")
    payload = [bp.to_dict() for bp in points]
    text = json.dumps(payload, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK if all(bp.converged for bp in points) else EXIT_FAILURES


def cmd_fixed_points(args: argparse.Namespace) -> int:
    data = _read_json(args.config)
    spec = _spec_from(data)
    kwargs = {"n_scan": int(data.get("n_scan", 400))}
    labels = data.get("labels")
    if labels is None:
        found = resonance_states(spec, **kwargs)
    else:
        found = {}
        for k in labels:
            if not 0 <= int(k) < spec.dim:
                raise ConfigError(f"label {k} out of range for {spec.dim} states")
            try:
                found[int(k)] = solve_fixed_points(spec, int(k), **kwargs)
            except DoubleDotError as exc:
                log.warning("label %s: %s", k, exc)
                found[int(k)] = []
    stream = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["label", "position", "width_paper", "width_decay", "residual"])
        for k in sorted(found):
            for st in found[k]:
                writer.writerow([k, fmt(st.position), fmt(st.width_paper), fmt(st.width_decay),
                                 fmt(st.residual)])
    finally:
        if stream is not sys.stdout:
            stream.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="doubledot", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a parameter sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--workers", type=int, default=0, help="process-pool size (default: config)")
    p.add_argument("--max-failures", type=float, default=0.0,
                   help="tolerated fraction of failed cells before exit code 3")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="write the data behind one figure")
    p.add_argument("id", help=f"one of {', '.join(FIGURES)}")
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, help="override points per axis")
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--max-failures", type=float, default=0.0)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("find-ep", help="locate an exceptional point")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="also write the JSON records here")
    p.set_defaults(func=cmd_find_ep)

    p = sub.add_parser("fixed-points", help="self-consistent resonance positions and widths")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="CSV file (default: stdout)")
    p.set_defaults(func=cmd_fixed_points)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SpecError, UnknownFigure) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except DoubleDotError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FAILURES


if __name__ == "__main__":
    sys.exit(main())
