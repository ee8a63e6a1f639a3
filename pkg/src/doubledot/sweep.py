"""Parameter sweeps over the double dot and their export to CSV/JSON.

A sweep walks one or two of ``v, w, u, L, E`` over linear grids and evaluates
the requested observables in every cell. Cell failures are recorded and the
cell is filled with NaN; only an invalid configuration is fatal.

Column contract for grid CSVs: ``<axis1>,<axis2>,<observable>`` (the axis2
column is omitted for 1-D sweeps). Every number is written with 12
significant digits so repeated runs diff cleanly.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__
from .branchpoints import BranchPoint, find_ep_numeric
from .errors import ConfigError, DoubleDotError, NoRootInBand
from .model import DoubleDotSpec, build_effective_hamiltonian, channel_from_energy, closed_spectrum
from .spectral import EigenSet, Trajectories, eigendecompose, solve_fixed_points, track_trajectories
from .transmission import transmission_resolvent

__all__ = [
    "OBSERVABLES",
    "Axis",
    "SweepConfig",
    "SweepResult",
    "run_sweep",
    "export",
    "load_trajectories",
    "fmt",
]

OBSERVABLES = ("transmission", "eigenvalues", "rigidity", "fixed_points", "branch_points")
AXIS_PARAMS = ("v", "w", "u", "L", "E")
E_LIMIT = 2.0 - 1e-6
FORMATS = ("csv", "json")


def fmt(x: float) -> str:
    """Fixed 12-significant-digit text for floats."""
    return format(float(x), ".12g")


def _round12(x: float) -> float:
    return float(fmt(x))


@dataclass(frozen=True)
class Axis:
    param: str
    min: float
    max: float
    points: int

    def __post_init__(self):
        if self.param not in AXIS_PARAMS:
            raise ConfigError(f"axis parameter must be one of {AXIS_PARAMS}, got {self.param!r}")
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ConfigError("axis bounds must be finite")
        if self.points < 1:
            raise ConfigError(f"axis {self.param} needs at least one point")
        if self.points >= 2 and not self.min < self.max:
            raise ConfigError(f"axis {self.param}: min must be below max")

    def values(self) -> np.ndarray:
        xs = np.linspace(self.min, self.max, self.points) if self.points > 1 else np.array([self.min])
        if self.param == "E":
            xs = np.clip(xs, -E_LIMIT, E_LIMIT)
        return xs

    def to_dict(self) -> dict[str, Any]:
        return {"param": self.param, "min": self.min, "max": self.max, "points": self.points}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Axis":
        try:
            return cls(str(data["param"]), float(data["min"]), float(data["max"]), int(data["points"]))
        except KeyError as exc:
            raise ConfigError(f"axis is missing {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad axis: {exc}") from exc


@dataclass(frozen=True)
class SweepConfig:
    """What to sweep, what to compute and where to write it.

    ``pair`` is only used by the ``branch_points`` observable (closed-state
    labels of the pair to search for, see :func:`find_ep_numeric`).
    """

    spec: DoubleDotSpec
    axis1: Axis
    axis2: Axis | None = None
    energy: float | None = None
    observables: tuple[str, ...] = ("transmission",)
    output_dir: str = "out"
    formats: tuple[str, ...] = FORMATS
    workers: int = 1
    name: str = "sweep"
    pair: tuple[int, int] | None = None
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        unknown = set(self.observables) - set(OBSERVABLES)
        if unknown:
            raise ConfigError(f"unknown observables: {', '.join(sorted(unknown))}")
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown output formats: {', '.join(sorted(bad))}")
        params = [self.axis1.param] + ([self.axis2.param] if self.axis2 else [])
        if len(set(params)) != len(params):
            raise ConfigError("the two axes must sweep different parameters")
        if "E" not in params and self.energy is None:
            raise ConfigError("energy is required unless E is swept")
        if "E" in params and self.energy is not None:
            raise ConfigError("energy must not be given when E is swept")
        if "fixed_points" in self.observables and "E" in params:
            raise ConfigError("fixed points solve for E; it cannot be an axis")
        if "branch_points" in self.observables and self.axis2 is None:
            raise ConfigError("branch-point search needs two axes")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.axis1.points, self.axis2.points if self.axis2 else 1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "spec": self.spec.to_dict(),
            "axis1": self.axis1.to_dict(),
            "axis2": self.axis2.to_dict() if self.axis2 else None,
            "energy": self.energy,
            "observables": list(self.observables),
            "output": {"dir": self.output_dir, "formats": list(self.formats)},
            "workers": self.workers,
            "pair": list(self.pair) if self.pair else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SweepConfig":
        from .presets import preset_spec

        if "spec" in data:
            if not isinstance(data["spec"], Mapping):
                raise ConfigError("spec must be an object")
            spec = DoubleDotSpec.from_dict(data["spec"])
        elif "preset" in data:
            spec = preset_spec(str(data["preset"]))
        else:
            raise ConfigError("config needs a 'spec' or a 'preset'")
        if "axis1" not in data:
            raise ConfigError("config needs axis1")
        out = data.get("output", {}) or {}
        pair = data.get("pair")
        try:
            return cls(
                spec=spec,
                axis1=Axis.from_dict(data["axis1"]),
                axis2=Axis.from_dict(data["axis2"]) if data.get("axis2") else None,
                energy=None if data.get("energy") is None else float(data["energy"]),
                observables=tuple(data.get("observables", ("transmission",))),
                output_dir=str(out.get("dir", "out")),
                formats=tuple(out.get("formats", FORMATS)),
                workers=int(data.get("workers", 1)),
                name=str(data.get("name", "sweep")),
                pair=tuple(int(p) for p in pair) if pair else None,
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "SweepConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, Mapping):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)


@dataclass
class SweepResult:
    """Grids are shaped ``(len(axis1), len(axis2))``; 1-D sweeps have one column."""

    config: SweepConfig
    axis1_values: np.ndarray
    axis2_values: np.ndarray | None
    grids: dict[str, np.ndarray]
    trajectories: list[Trajectories | None]
    fixed_points: dict[tuple[int, int], dict[int, list]]
    branch_points: list[BranchPoint]
    errors: list[dict[str, Any]]
    metadata: dict[str, Any]

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.config.shape))

    @property
    def failure_count(self) -> int:
        return len({(e["i"], e["j"]) for e in self.errors if e["i"] >= 0})

    @property
    def failure_fraction(self) -> float:
        return self.failure_count / self.n_cells


def _cell_params(config: SweepConfig, x1: float, x2: float | None) -> tuple[DoubleDotSpec, float]:
    values = {config.axis1.param: x1}
    if config.axis2 is not None:
        values[config.axis2.param] = x2
    E = values.pop("E", config.energy)
    return config.spec.with_params(**values), E


def _eval_row(config: SweepConfig, j: int, x2: float | None, xs1: np.ndarray):
    """All cells with axis2 index ``j``; independent of every other row."""
    obs = set(config.observables)
    n = len(xs1)
    T = np.full(n, np.nan)
    rig = np.full(n, np.nan)
    eig: list[EigenSet | None] = [None] * n
    fps: dict[int, dict[int, list]] = {}
    errors = []
    closed_cache: dict[tuple[float, float], Any] = {}
    for i, x1 in enumerate(xs1):
        try:
            spec, E = _cell_params(config, float(x1), x2)
            key = (spec.u, spec.length)
            closed = closed_cache.get(key)
            if closed is None:
                closed = closed_cache[key] = closed_spectrum(spec)
            if "transmission" in obs:
                T[i] = transmission_resolvent(spec, E, closed).probability
            if obs & {"eigenvalues", "rigidity"}:
                es = eigendecompose(build_effective_hamiltonian(spec, channel_from_energy(E), closed))
                eig[i] = es
                rig[i] = es.min_rigidity
            if "fixed_points" in obs:
                per_label = {}
                for k in range(spec.dim):
                    try:
                        per_label[k] = solve_fixed_points(spec, k)
                    except NoRootInBand:
                        per_label[k] = []
                fps[i] = per_label
        except DoubleDotError as exc:
            errors.append({"i": i, "j": j, "error": type(exc).__name__, "message": str(exc)})
    return j, T, rig, eig, fps, errors


def _track_row(xs1: np.ndarray, eig: Sequence[EigenSet | None], name: str) -> Trajectories | None:
    ok = [i for i, es in enumerate(eig) if es is not None]
    if not ok:
        return None
    tr = track_trajectories([eig[i] for i in ok], xs1[ok], param_name=name)
    if len(ok) == len(eig):
        return tr
    # failed cells stay in the trajectory as NaN so indices line up with the grid
    n, m = len(eig), tr.z.shape[1]
    z = np.full((n, m), np.nan + 1j * np.nan)
    rig = np.full((n, m), np.nan)
    amb = np.zeros(n, dtype=bool)
    idx = np.full((n, m), -1)
    z[ok], rig[ok], amb[ok], idx[ok] = tr.z, tr.rigidity, tr.ambiguous, tr.index
    return Trajectories(np.asarray(xs1, dtype=float), z, rig, amb, idx, name)


def run_sweep(config: SweepConfig) -> SweepResult:
    """Evaluate ``config.observables`` on the full grid.

    Rows along axis1 are independent units of work; with ``workers > 1``
    they run in a process pool and are reassembled by index, so the result
    does not depend on scheduling.
    """
    xs1 = config.axis1.values()
    xs2 = config.axis2.values() if config.axis2 else None
    rows = [(j, float(x)) for j, x in enumerate(xs2)] if xs2 is not None else [(0, None)]
    n1, n2 = config.shape
    if config.workers > 1 and len(rows) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_eval_row, config, j, x2, xs1) for j, x2 in rows]
            outputs = [f.result() for f in futures]
    else:
        outputs = [_eval_row(config, j, x2, xs1) for j, x2 in rows]
    outputs.sort(key=lambda row: row[0])

    obs = set(config.observables)
    grids: dict[str, np.ndarray] = {}
    if "transmission" in obs:
        grids["transmission"] = np.column_stack([row[1] for row in outputs])
    if "rigidity" in obs:
        grids["rigidity"] = np.column_stack([row[2] for row in outputs])
    trajectories: list[Trajectories | None] = []
    if "eigenvalues" in obs:
        trajectories = [_track_row(xs1, row[3], config.axis1.param) for row in outputs]
    fixed = {(i, row[0]): fp for row in outputs for i, fp in row[4].items()}
    errors = [e for row in outputs for e in row[5]]

    branch: list[BranchPoint] = []
    if "branch_points" in obs:
        ranges = {config.axis1.param: (float(xs1[0]), float(xs1[-1])),
                  config.axis2.param: (float(xs2[0]), float(xs2[-1]))}
        try:
            branch.append(find_ep_numeric(config.spec, ranges, energy=config.energy, pair=config.pair))
        except DoubleDotError as exc:
            errors.append({"i": -1, "j": -1, "error": type(exc).__name__, "message": str(exc)})

    metadata = {
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "spec": config.spec.to_dict(),
        "spec_hash": config.spec.spec_hash(),
        **dict(config.meta),
    }
    assert all(g.shape == (n1, n2) for g in grids.values())
    return SweepResult(config, xs1, xs2, grids, trajectories, fixed, branch, errors, metadata)


# -- export --------------------------------------------------------------------

def _write_grid_csv(path: Path, result: SweepResult, name: str) -> None:
    cfg = result.config
    grid = result.grids[name]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if cfg.axis2 is None:
            writer.writerow([cfg.axis1.param, name])
            for i, x1 in enumerate(result.axis1_values):
                writer.writerow([fmt(x1), fmt(grid[i, 0])])
        else:
            writer.writerow([cfg.axis1.param, cfg.axis2.param, name])
            for i, x1 in enumerate(result.axis1_values):
                for j, x2 in enumerate(result.axis2_values):
                    writer.writerow([fmt(x1), fmt(x2), fmt(grid[i, j])])


def _grid_json(result: SweepResult, name: str) -> dict[str, Any]:
    cfg = result.config
    return {
        "axis1": {"param": cfg.axis1.param, "values": [_round12(x) for x in result.axis1_values]},
        "axis2": None if cfg.axis2 is None else
        {"param": cfg.axis2.param, "values": [_round12(x) for x in result.axis2_values]},
        "observable": name,
        "values": [[_round12(x) if np.isfinite(x) else None for x in row] for row in result.grids[name]],
    }


def _trajectory_series(tr: Trajectories) -> list[dict[str, Any]]:
    out = []
    for k in range(tr.n_labels):
        records = []
        for i, p in enumerate(tr.params):
            z = tr.z[i, k]
            if not np.isfinite(z):
                continue
            records.append({
                "param": _round12(p),
                "re_z": _round12(z.real),
                "im_z": _round12(z.imag),
                "rigidity": _round12(tr.rigidity[i, k]),
                "flag": bool(tr.ambiguous[i]),
            })
        out.append({"label": k, "records": records})
    return out


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(payload, indent=1, allow_nan=False) + "\n")


def export(
    result: SweepResult,
    out_dir: str | Path | None = None,
    formats: Sequence[str] | None = None,
    prefix: str = "",
    manifest: bool = True,
) -> list[Path]:
    """Write data files and a manifest; returns the paths written.

    Data files contain no timestamps, so repeated runs are byte-identical.
    """
    cfg = result.config
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    formats = tuple(formats or cfg.formats)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for name in ("transmission", "rigidity"):
        if name not in result.grids:
            continue
        if "csv" in formats:
            p = out / f"{prefix}{name}.csv"
            _write_grid_csv(p, result, name)
            written.append(p)
        if "json" in formats:
            p = out / f"{prefix}{name}.json"
            _write_json(p, _grid_json(result, name))
            written.append(p)

    if "eigenvalues" in cfg.observables:
        rows = []
        for j, tr in enumerate(result.trajectories):
            if tr is None:
                continue
            x2 = None if result.axis2_values is None else _round12(result.axis2_values[j])
            rows.append((x2, tr))
        if "json" in formats:
            p = out / f"{prefix}trajectories.json"
            payload = {
                "axis1": cfg.axis1.param,
                "axis2": cfg.axis2.param if cfg.axis2 else None,
                "rows": [{"axis2": x2, "series": _trajectory_series(tr)} for x2, tr in rows],
            }
            _write_json(p, payload)
            written.append(p)
        if "csv" in formats:
            p = out / f"{prefix}eigenvalues.csv"
            with p.open("w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                head = [cfg.axis1.param] + ([cfg.axis2.param] if cfg.axis2 else [])
                writer.writerow(head + ["label", "re_z", "im_z", "rigidity", "flag"])
                for x2, tr in rows:
                    for i, x1 in enumerate(tr.params):
                        for k in range(tr.n_labels):
                            z = tr.z[i, k]
                            if not np.isfinite(z):
                                continue
                            lead = [fmt(x1)] + ([fmt(x2)] if cfg.axis2 else [])
                            writer.writerow(lead + [k, fmt(z.real), fmt(z.imag),
                                                    fmt(tr.rigidity[i, k]), int(tr.ambiguous[i])])
            written.append(p)

    if "fixed_points" in cfg.observables:
        records = []
        for (i, j), per_label in sorted(result.fixed_points.items()):
            for k, states in sorted(per_label.items()):
                for st in states:
                    records.append({
                        cfg.axis1.param: _round12(result.axis1_values[i]),
                        **({cfg.axis2.param: _round12(result.axis2_values[j])} if cfg.axis2 else {}),
                        "label": k,
                        "position": _round12(st.position),
                        "width_paper": _round12(st.width_paper),
                        "width_decay": _round12(st.width_decay),
                        "residual": _round12(st.residual),
                    })
        if "json" in formats:
            p = out / f"{prefix}fixed_points.json"
            _write_json(p, records)
            written.append(p)
        if "csv" in formats:
            p = out / f"{prefix}fixed_points.csv"
            with p.open("w", newline="") as fh:
                keys = [cfg.axis1.param] + ([cfg.axis2.param] if cfg.axis2 else []) + [
                    "label", "position", "width_paper", "width_decay", "residual"]
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(keys)
                for r in records:
                    writer.writerow([r[k] if k == "label" else fmt(r[k]) for k in keys])
            written.append(p)

    if "branch_points" in cfg.observables:
        p = out / f"{prefix}branch_points.json"
        _write_json(p, [bp.to_dict() for bp in result.branch_points])
        written.append(p)

    if manifest:
        p = out / f"{prefix}manifest.json"
        _write_json(p, build_manifest(result, written))
        written.append(p)
    return written


def build_manifest(result: SweepResult, files: Sequence[Path]) -> dict[str, Any]:
    return {
        **result.metadata,
        "config": result.config.to_dict(),
        "files": [Path(f).name for f in files],
        "cells": result.n_cells,
        "failures": result.failure_count,
        "errors": result.errors,
    }


def load_trajectories(path: str | Path) -> dict[str, Any]:
    """Read a ``trajectories.json`` written by :func:`export`."""
    return json.loads(Path(path).read_text())
