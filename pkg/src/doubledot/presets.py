"""Built-in sweeps reproducing the data behind figures 1-14.

Each figure is a list of panels (one sweep each). Caption parameters are
stored verbatim in ``caption_params`` and copied into the figure manifest;
axis ranges the captions leave open are chosen to cover the band or the
coupling range shown.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from . import __version__
from .errors import UnknownFigure
from .model import DoubleDotSpec
from .sweep import Axis, SweepConfig, export, run_sweep

__all__ = ["Panel", "Figure", "FIGURES", "preset_spec", "reproduce_figure"]

N_1D = 200
N_2D = 150
E_BAND = (-2.0, 2.0)
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Panel:
    name: str
    config: SweepConfig


@dataclass(frozen=True)
class Figure:
    id: str
    description: str
    caption_params: dict[str, Any]
    panels: tuple[Panel, ...]


def _one_level(eps1: float, a: float, b: float, L: float, u: float, v: float = 0.0, w=None):
    return DoubleDotSpec((eps1,), (eps1,), a, b, L, u, v, w)


def _two_level(a: float, b: float, L: float, v: float = 0.0):
    return DoubleDotSpec((0.5, 1.0), (0.5, 1.0), a, b, L, 0.25, v)


FIVE_LEVELS = (0.25, 1.0 / 3.0, 0.5, 0.75, 1.0)


def _five_level(v: float = 0.0):
    return DoubleDotSpec(FIVE_LEVELS, FIVE_LEVELS, 1.0, -0.125, 1.5, 0.2, v)


def _line(spec, param, lo, hi, *, energy=None, obs=("eigenvalues",), name):
    return Panel(name, SweepConfig(spec, Axis(param, lo, hi, N_1D), energy=energy,
                                   observables=obs, name=name))


def _map(spec, p1, r1, p2, r2, *, energy=None, obs=("transmission",), name):
    return Panel(name, SweepConfig(spec, Axis(p1, *r1, N_2D), Axis(p2, *r2, N_2D),
                                   energy=energy, observables=obs, name=name))


V_RANGE = (0.0, 1.4)
FIG1 = _one_level(1.0, 2.0, -0.2, 3.0, 0.25)
FIG3 = _one_level(0.0, 2.0, -0.2, 10.0, 0.25)
FIG8 = _one_level(1.0, 2.0, -0.2, 4.0, 0.15)
FIG5_ENERGIES = {"a": -SQRT2 - 0.1, "c": -SQRT2, "e": -SQRT2 + 0.1, "g": SQRT2}
FIG7_LENGTHS = {"a": 1.4645 - 0.1, "c": 1.4645, "e": 1.4645 + 0.1}
FIG8_PANELS = {"a": (0.1, 1.0), "c": (0.06, 0.92), "e": (0.1, 1.26)}

FIGURES: dict[str, Figure] = {
    "fig1": Figure(
        "fig1", "Eigenvalue trajectories versus v at the critical energy; z1 and z3 coalesce at v_c.",
        {"epsilon_1": 1.0, "wire": "2-L/5", "u": 0.25, "L": 3.0, "E": 0.9847, "v_c": 0.9013},
        (_line(FIG1, "v", *V_RANGE, energy=0.9847, name="a"),),
    ),
    "fig2": Figure(
        "fig2", "Transmission versus v and E; (b) uses the internal coupling u_c of the double coincidence.",
        {"epsilon_1": 1.0, "wire": "2-L/5", "L": 3.0, "u": [0.25, 0.1443], "v_c": 0.9013, "E_c": [0.9847, 1.4]},
        (
            _map(FIG1, "v", V_RANGE, "E", E_BAND, name="a"),
            _map(FIG1.with_params(u=0.1443), "v", V_RANGE, "E", E_BAND, name="b"),
        ),
    ),
    "fig3": Figure(
        "fig3", "Eigenvalue trajectories versus v at E = 0 with the wire resonant with the dot levels.",
        {"epsilon_1": 0.0, "wire": "2-L/5", "u": 0.25, "L": 10.0, "E": 0.0, "v_c": 0.8409},
        (_line(FIG3, "v", *V_RANGE, energy=0.0, name="a"),),
    ),
    "fig4": Figure(
        "fig4", "Transmission for the fig3 system: T(v, E) and T(E) at three couplings.",
        {"epsilon_1": 0.0, "wire": "2-L/5", "u": 0.25, "L": 10.0, "v": [0.2, 0.53, 0.83]},
        (
            _map(FIG3, "v", V_RANGE, "E", E_BAND, name="a"),
            *(
                _line(FIG3.with_params(v=v), "E", *E_BAND, obs=("transmission",), name=f"b_v{v:g}")
                for v in (0.2, 0.53, 0.83)
            ),
        ),
    ),
    "fig5": Figure(
        "fig5", "Eigenvalue trajectories versus L at v = 1 around the two critical lengths.",
        {"epsilon_1": 1.0, "wire": "2-L/5", "u": 0.25, "v": 1.0, "L_c": [1.4645, 8.5355],
         "E": ["-sqrt2-0.1", "-sqrt2", "-sqrt2+0.1", "sqrt2"]},
        tuple(
            _line(FIG1.with_params(v=1.0), "L", 0.0, 10.0, energy=E, name=k)
            for k, E in FIG5_ENERGIES.items()
        ),
    ),
    "fig6": Figure(
        "fig6", "Transmission at the critical length L_c = 8.5355: T(v, E) and T(E) at v = 0.85.",
        {"epsilon_1": 1.0, "wire": "2-L/5", "u": 0.25, "L": 8.5355, "v": 0.85},
        (
            _map(FIG1.with_params(L=8.5355), "v", V_RANGE, "E", E_BAND, name="a"),
            _line(FIG1.with_params(L=8.5355, v=0.85), "E", *E_BAND, obs=("transmission",), name="b"),
        ),
    ),
    "fig7": Figure(
        "fig7", "Eigenvalue trajectories versus E at v = 1 for L around L_c = 1.4645.",
        {"epsilon_1": 1.0, "wire": "2-L/5", "u": 0.25, "v": 1.0, "L": [1.3645, 1.4645, 1.5645]},
        tuple(
            _line(FIG1.with_params(v=1.0, L=L), "E", *E_BAND, name=k)
            for k, L in FIG7_LENGTHS.items()
        ),
    ),
    "fig8": Figure(
        "fig8", "Asymmetric leads: eigenvalues versus w at fixed v, and T(v, w) at the same energies.",
        {"epsilon_1": 1.0, "wire": "2-L/5", "u": 0.15, "L": 4.0,
         "v": [0.1, 0.06, 0.1], "E": [1.0, 0.92, 1.26]},
        tuple(
            p
            for k, (v, E) in FIG8_PANELS.items()
            for p in (
                _line(FIG8.with_params(v=v, w=0.0), "w", 0.0, 1.0, energy=E, name=k),
                _map(FIG8.with_params(w=0.0), "v", (0.0, 1.0), "w", (0.0, 1.0), energy=E,
                     name=chr(ord(k) + 1)),
            )
        ),
    ),
    "fig9": Figure(
        "fig9", "Two-level dots: T(L, E) at four couplings; the zero at E = 3/4 does not move.",
        {"epsilon": [0.5, 1.0], "wire": "3/2-L/7", "u": 0.25, "v": [0.25, 0.5, 0.75, 1.0], "E_0": 0.75},
        tuple(
            _map(_two_level(1.5, -1.0 / 7.0, 0.0, v), "L", (0.0, 10.0), "E", E_BAND, name=k)
            for k, v in zip("abcd", (0.25, 0.5, 0.75, 1.0))
        ),
    ),
    "fig10": Figure(
        "fig10", "Two-level dots: the five eigenvalues versus L at E = 0.25 for three couplings.",
        {"epsilon": [0.5, 1.0], "wire": "3/2-L/7", "u": 0.25, "E": 0.25, "v": [0.35, 0.8, 1.1]},
        tuple(
            _line(_two_level(1.5, -1.0 / 7.0, 0.0, v), "L", 0.0, 10.0, energy=0.25, name=k)
            for k, v in zip("ace", (0.35, 0.8, 1.1))
        ),
    ),
    "fig11": Figure(
        "fig11", "Two-level dots: T(v, E) for L = 2 and L = 5.",
        {"epsilon": [0.5, 1.0], "wire": "2-L/4", "u": 0.25, "L": [2.0, 5.0], "E_0": 0.75},
        tuple(
            _map(_two_level(2.0, -0.25, L), "v", V_RANGE, "E", E_BAND, name=k)
            for k, L in zip("ab", (2.0, 5.0))
        ),
    ),
    "fig12": Figure(
        "fig12", "Two-level dots: eigenvalues versus v at E = 0.75 for three lengths.",
        {"epsilon": [0.5, 1.0], "wire": "2-L/4", "u": 0.25, "E": 0.75, "L": [0.7, 2.0, 3.03]},
        tuple(
            _line(_two_level(2.0, -0.25, L), "v", 0.0, 1.5, energy=0.75, name=k)
            for k, L in zip("ace", (0.7, 2.0, 3.03))
        ),
    ),
    "fig13": Figure(
        "fig13", "Five-level dots: T(v, E) with four transmission zeros.",
        {"epsilon": list(FIVE_LEVELS), "wire": "1-L/8", "u": 0.2, "L": 1.5},
        (_map(_five_level(), "v", V_RANGE, "E", E_BAND, name="a"),),
    ),
    "fig14": Figure(
        "fig14", "Five-level dots: the eleven eigenvalues versus v at E = 0.",
        {"epsilon": list(FIVE_LEVELS), "wire": "1-L/8", "u": 0.2, "L": 1.5, "E": 0.0},
        (_line(_five_level(), "v", 0.0, 1.5, energy=0.0, name="a"),),
    ),
}


def get_figure(fig_id: str) -> Figure:
    try:
        return FIGURES[fig_id]
    except KeyError:
        raise UnknownFigure(f"unknown figure {fig_id!r}; known: {', '.join(FIGURES)}") from None


def preset_spec(fig_id: str) -> DoubleDotSpec:
    """Base spec of a figure (its first panel)."""
    return get_figure(fig_id).panels[0].config.spec


def _resized(cfg: SweepConfig, points: int | None, workers: int) -> SweepConfig:
    if points is None:
        return replace(cfg, workers=workers)
    ax1 = replace(cfg.axis1, points=points)
    ax2 = replace(cfg.axis2, points=points) if cfg.axis2 else None
    return replace(cfg, axis1=ax1, axis2=ax2, workers=workers)


def reproduce_figure(fig_id: str, out_dir: str | Path, *, points: int | None = None,
                     workers: int = 1) -> list[Path]:
    """Run every panel of a figure and write its data files plus ``manifest.json``.

    ``points`` overrides the per-axis resolution (useful for quick checks).
    """
    fig = get_figure(fig_id)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    panels = []
    for panel in fig.panels:
        cfg = _resized(panel.config, points, workers)
        result = run_sweep(cfg)
        files = export(result, out, prefix=f"{fig.id}_{panel.name}_", manifest=False)
        written.extend(files)
        panels.append({
            "panel": panel.name,
            "config": cfg.to_dict(),
            "files": [f.name for f in files],
            "failures": result.failure_count,
            "errors": result.errors,
        })
    manifest = {
        "figure": fig.id,
        "description": fig.description,
        "caption_params": fig.caption_params,
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "panels": panels,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1) + "\n")
    written.append(path)
    return written
