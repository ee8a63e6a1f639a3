"""Exceptional points of the open double dot.

Closed-form conditions cover one level per dot with symmetric leads; a
two-parameter Newton search covers everything else.

Near an exceptional point the eigenvalue gap grows like the square root of
the distance, so in double precision a gap below ~1e-8 cannot be resolved.
Residuals are therefore evaluated in extended precision (mpmath) at the
critical point, and the numeric search finishes with an extended-precision
Newton polish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import mpmath
import numpy as np

from .errors import AmbiguousPair, ConfigError, EnergyOutOfBand, NoSolution, NotApplicable, OutOfBand
from .model import (
    DoubleDotSpec,
    build_effective_hamiltonian,
    channel_from_energy,
    site_effective_hamiltonian,
)
from .spectral import eigendecompose, track_trajectories

__all__ = [
    "SEARCH_PARAMS",
    "DiscriminantF",
    "BranchPoint",
    "discriminant",
    "critical_coupling",
    "critical_u_double_coincidence",
    "critical_lengths",
    "find_ep_numeric",
    "pair_gap",
]

SEARCH_PARAMS = ("v", "w", "u", "L", "E")
_MP_DPS = 40
_E_EDGE = 1e-9


@dataclass(frozen=True)
class DiscriminantF:
    """``F = ((eps(L) - eps1 + v^2 e^{ik})/2)^2 + 2u^2``; ``z1 = z3`` iff ``F = 0``."""

    value: complex
    energy: float
    spec: DoubleDotSpec = field(repr=False)

    @property
    def regime(self) -> str:
        F = self.value
        if abs(F) < 1e-12:
            return "coalescence"
        if abs(F.imag) > 1e-12 * max(1.0, abs(F)):
            return "complex"
        return "repulsion" if F.real > 0 else "bifurcation"


@dataclass(frozen=True)
class BranchPoint:
    kind: str
    critical_params: dict[str, float]
    E_c: float
    coalesced_pair: tuple[int, int]
    residual: float
    fixed_point_coincides: bool
    converged: bool = True
    message: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "params": dict(self.critical_params),
            "E_c": self.E_c,
            "residual": self.residual,
            "pair": list(self.coalesced_pair),
            "fixed_point_coincides": self.fixed_point_coincides,
            "converged": self.converged,
            "message": self.message,
        }


def _require_three_state(spec: DoubleDotSpec) -> None:
    if not spec.three_state or spec.v != spec.right_coupling:
        raise NotApplicable("needs one level per dot and equal lead couplings")


def _discriminant_value(eps1: float, wire: float, u: float, v: float, phase: complex) -> complex:
    return (0.5 * (wire - eps1 + v * v * phase)) ** 2 + 2.0 * u * u


def discriminant(spec: DoubleDotSpec, E: float) -> DiscriminantF:
    _require_three_state(spec)
    ch = channel_from_energy(E)
    F = _discriminant_value(spec.left_levels[0], spec.wire_energy, spec.u, spec.v, ch.phase)
    return DiscriminantF(complex(F), float(E), spec)


# -- extended precision evaluation -------------------------------------------

def _mp_site_matrix(spec: DoubleDotSpec, values: Mapping[str, Any]):
    """Site-basis ``H_eff`` in mpmath; ``values`` must contain ``E``."""
    mp = mpmath.mp
    E = mp.mpf(values["E"])
    v = mp.mpf(values.get("v", spec.v))
    if "w" in values:
        w = mp.mpf(values["w"])
    elif spec.w is None:
        w = v
    else:
        w = mp.mpf(spec.w)
    u = mp.mpf(values.get("u", spec.u))
    if "L" in values:
        wire = mp.mpf(spec.wire_a) + mp.mpf(spec.wire_b) * mp.mpf(values["L"])
    else:
        # keep the float wire level so mp and double problems coincide exactly
        wire = mp.mpf(spec.wire_energy)
    half = E / 2
    phase = mp.mpc(-half, mp.sqrt((1 - half) * (1 + half)))
    c = spec.wire_index
    n = spec.dim
    H = mp.matrix(n, n)
    for i, e in enumerate(spec.left_levels):
        H[i, i] = mp.mpf(e) - v * v * phase
        H[i, c] = H[c, i] = u
    for i, e in enumerate(spec.right_levels):
        j = c + 1 + i
        H[j, j] = mp.mpf(e) - w * w * phase
        H[j, c] = H[c, j] = u
    H[c, c] = wire
    for i in range(c):
        for j in range(c):
            if i != j:
                H[i, j] = -v * v * phase
    for i in range(c + 1, n):
        for j in range(c + 1, n):
            if i != j:
                H[i, j] = -w * w * phase
    return H


def _mp_eigvals(spec: DoubleDotSpec, values: Mapping[str, Any]) -> list:
    H = _mp_site_matrix(spec, values)
    return list(mpmath.mp.eig(H, left=False, right=False))


def _nearest_pair(zs: Sequence, refs: Sequence[complex]) -> tuple[int, int]:
    zc = np.array([complex(z) for z in zs])
    i = int(np.argmin(np.abs(zc - refs[0])))
    d = np.abs(zc - refs[1])
    d[i] = np.inf
    j = int(np.argmin(d))
    return i, j


def pair_gap(spec: DoubleDotSpec, values: Mapping[str, Any], refs: Sequence[complex], dps: int = _MP_DPS) -> float:
    """``|z_k - z_l|`` in extended precision for the pair closest to ``refs``."""
    with mpmath.workdps(dps):
        zs = _mp_eigvals(spec, values)
        i, j = _nearest_pair(zs, refs)
        return float(abs(zs[i] - zs[j]))


# -- closed forms for the three-state model -----------------------------------

def _mp_three_state_pair(eps1, wire, u, v, E):
    # z_{1,3} from the closed form, in the current mp precision
    mp = mpmath.mp
    half = E / 2
    phase = mp.mpc(-half, mp.sqrt((1 - half) * (1 + half)))
    g = v * v * phase
    mean = (eps1 + wire - g) / 2
    root = mp.sqrt(((wire - eps1 + g) / 2) ** 2 + 2 * u * u)
    return mean - root, mean + root


def _analytic_point(spec, params_mp: dict, E_mp, wire_mp, u_mp, v_mp, pair=(0, 2)) -> BranchPoint:
    eps1 = mpmath.mpf(spec.left_levels[0])
    z1, z3 = _mp_three_state_pair(eps1, wire_mp, u_mp, v_mp, E_mp)
    values = dict(params_mp)
    values["E"] = E_mp
    # independent check: extended-precision eigensolve of the site-basis matrix
    zs = _mp_eigvals(spec, values)
    i, j = _nearest_pair(zs, (complex(z1), complex(z3)))
    residual = float(abs(zs[i] - zs[j]))
    coincide = abs(float(E_mp) - float((z1.real + z3.real) / 2)) < 1e-8
    return BranchPoint(
        kind="analytic",
        critical_params={k: float(x) for k, x in params_mp.items()},
        E_c=float(E_mp),
        coalesced_pair=pair,
        residual=residual,
        fixed_point_coincides=bool(coincide),
    )


def critical_coupling(spec: DoubleDotSpec) -> BranchPoint:
    """``v_c^4 = (eps(L) - eps1)^2 + 8u^2``, ``E_c = 2(eps(L) - eps1)/v_c^2``."""
    _require_three_state(spec)
    with mpmath.workdps(_MP_DPS):
        mp = mpmath.mp
        d = mp.mpf(spec.wire_energy) - mp.mpf(spec.left_levels[0])
        u = mp.mpf(spec.u)
        v_c = mp.root(d * d + 8 * u * u, 4)
        E_c = 2 * d / (v_c * v_c) if v_c != 0 else mp.mpf(0)
        if abs(E_c) >= 2:
            raise OutOfBand(f"critical energy {float(E_c)} is outside the band")
        wire = mp.mpf(spec.wire_energy)
        return _analytic_point(spec, {"v": v_c}, E_c, wire, u, v_c)


def critical_u_double_coincidence(spec: DoubleDotSpec) -> BranchPoint:
    """Internal coupling making the EP energy a fixed point: ``E_c = E_k = E_l = eps(L)``.

    ``u_c^2 = (eps(L) - eps1)^2 / 8 * (4/eps(L)^2 - 1)``.
    """
    _require_three_state(spec)
    wire_f = spec.wire_energy
    d_f = wire_f - spec.left_levels[0]
    if wire_f == 0.0 or wire_f > 2.0:
        raise NoSolution(f"needs 0 != eps(L) <= 2, got {wire_f}")
    if d_f == 0.0:
        raise NoSolution("eps(L) == eps1 gives no isolated branch point")
    if d_f * wire_f < 0:
        # E_c = 2 d / v_c^2 then has the opposite sign of eps(L)
        raise NoSolution("eps(L) - eps1 and eps(L) must have the same sign")
    with mpmath.workdps(_MP_DPS):
        mp = mpmath.mp
        wire = mp.mpf(wire_f)
        d = wire - mp.mpf(spec.left_levels[0])
        radicand = d * d / 8 * (4 / (wire * wire) - 1)
        if radicand < 0:
            raise NoSolution("negative radicand for u_c^2")
        u_c = mp.sqrt(radicand)
        v_c = mp.root(d * d + 8 * u_c * u_c, 4)
        E_c = 2 * d / (v_c * v_c)
        return _analytic_point(spec, {"u": u_c, "v": v_c}, E_c, wire, u_c, v_c)


def critical_lengths(spec: DoubleDotSpec) -> list[BranchPoint]:
    """Wire lengths where ``z1 = z3`` at fixed ``v`` and ``u``.

    ``eps(L_c) = eps1 +/- sqrt(v^4 - 8u^2)``, ``E_c = +/- 2 sqrt(v^4 - 8u^2) / v^2``,
    mapped back through ``L = (eps - a)/b``. Sorted by length.
    """
    _require_three_state(spec)
    if spec.wire_b == 0.0:
        raise NotApplicable("wire dispersion does not depend on L")
    if spec.v == 0.0:
        raise NoSolution("v = 0 has no branch point in L")
    with mpmath.workdps(_MP_DPS):
        mp = mpmath.mp
        v = mp.mpf(spec.v)
        u = mp.mpf(spec.u)
        eps1 = mp.mpf(spec.left_levels[0])
        radicand = v ** 4 - 8 * u * u
        if abs(radicand) <= 1e-14 * v ** 4:
            radicand = mp.mpf(0)  # double root; absorb input rounding
        if radicand < 0:
            raise NoSolution(f"v^4 < 8u^2 ({float(v ** 4)} < {float(8 * u * u)})")
        root = mp.sqrt(radicand)
        signs = (1,) if radicand == 0 else (1, -1)
        points = []
        for s in signs:
            wire = eps1 + s * root
            E_c = s * 2 * root / (v * v)
            if abs(E_c) >= 2:
                continue
            L_c = (wire - mp.mpf(spec.wire_a)) / mp.mpf(spec.wire_b)
            points.append(_analytic_point(spec, {"L": L_c}, E_c, wire, u, v))
    if not points:
        raise OutOfBand("both critical energies lie on the band edge")
    return sorted(points, key=lambda p: p.critical_params["L"])


# -- numeric two-parameter search ---------------------------------------------

class _Problem:
    """Eigenvalues of ``H_eff`` as a function of two named parameters."""

    def __init__(self, spec: DoubleDotSpec, names: Sequence[str], energy: float | None,
                 lo: np.ndarray | None = None, hi: np.ndarray | None = None):
        self.spec = spec
        self.names = tuple(names)
        self.energy = energy
        self.lo = lo
        self.hi = hi

    def values(self, x) -> dict[str, float]:
        vals = dict(zip(self.names, (float(t) for t in x)))
        if "E" not in vals:
            vals["E"] = self.energy
        return vals

    def spec_at(self, vals: Mapping[str, float]) -> DoubleDotSpec:
        return self.spec.with_params(**{k: v for k, v in vals.items() if k != "E"})

    def clip(self, x: np.ndarray) -> np.ndarray:
        """Project onto the search box and the physical domain."""
        x = np.array(x, dtype=float)
        if self.lo is not None:
            x = np.clip(x, self.lo, self.hi)
        for i, name in enumerate(self.names):
            if name == "E":
                x[i] = min(max(x[i], -2.0 + _E_EDGE), 2.0 - _E_EDGE)
            else:
                x[i] = max(x[i], 0.0)
        return x

    def matrix(self, x) -> np.ndarray:
        vals = self.values(x)
        return site_effective_hamiltonian(self.spec_at(vals), channel_from_energy(vals["E"]))

    def eigvals(self, x) -> np.ndarray:
        return np.linalg.eigvals(self.matrix(x))

    def labeled_pair(self, x, labels: tuple[int, int], steps: int = 25) -> tuple[complex, complex]:
        """Eigenvalues carrying closed-state labels, by switching the leads on from zero."""
        vals = self.values(x)
        spec = self.spec_at(vals)
        ch = channel_from_energy(vals["E"])
        v, w = spec.v, spec.right_coupling
        # the closed eigenbasis makes s = 0 diagonal, so labels start exact
        sweep = [
            eigendecompose(build_effective_hamiltonian(spec.with_params(v=s * v, w=s * w), ch))
            for s in np.linspace(0.0, 1.0, steps)
        ]
        tr = track_trajectories(sweep)
        if tr.ambiguous.any():
            raise AmbiguousPair(f"labels {labels} are not continuable to {vals}")
        return complex(tr.z[-1, labels[0]]), complex(tr.z[-1, labels[1]])


def _squared_gap(prob: _Problem, x, refs) -> tuple[complex, tuple]:
    """``(z_k - z_l)^2`` for the tracked pair, plus the updated pair reference.

    ``refs = (z_k, z_l, Q)`` where ``Q`` spans the pair's two eigenvectors.
    Selecting by projection onto that span is robust against a third
    eigenvalue passing close by, which defeats nearest-eigenvalue matching.
    """
    z, V = np.linalg.eig(prob.matrix(x))
    Q = refs[2] if len(refs) > 2 else None
    if Q is None:
        i, j = _nearest_pair(z, refs)
    else:
        weight = np.linalg.norm(Q.conj().T @ V, axis=0) / np.linalg.norm(V, axis=0)
        i, j = (int(k) for k in np.argsort(-weight)[:2])
    gap = z[i] - z[j]
    if Q is None or abs(gap) > 1e-6 * max(1.0, abs(z[i])):
        # near coalescence the two vectors are nearly parallel; keep the old span
        Q, _ = np.linalg.qr(V[:, [i, j]])
    return complex(gap * gap), (complex(z[i]), complex(z[j]), Q)


def _newton(prob: _Problem, x0, refs, max_step, max_iter: int = 60):
    """Damped Newton on ``(z_k - z_l)^2``, which is analytic at the EP."""
    x = prob.clip(x0)
    D, refs = _squared_gap(prob, x, refs)
    for _ in range(max_iter):
        J = np.empty((2, 2))
        for k in range(2):
            h = 1e-6 * max(1.0, abs(x[k]))
            e = np.zeros(2)
            e[k] = h
            xp, xm = prob.clip(x + e), prob.clip(x - e)
            Dp, _ = _squared_gap(prob, xp, refs)
            Dm, _ = _squared_gap(prob, xm, refs)
            der = (Dp - Dm) / (xp[k] - xm[k])
            J[:, k] = der.real, der.imag
        try:
            step = np.linalg.solve(J, [-D.real, -D.imag])
        except np.linalg.LinAlgError:
            return x, D, refs, False
        over = np.max(np.abs(step) / max_step)
        if over > 1.0:
            step = step / over
        lam = 1.0
        for _ in range(12):
            x_new = prob.clip(x + lam * step)
            D_new, refs_new = _squared_gap(prob, x_new, refs)
            if abs(D_new) < abs(D) or abs(D) < 1e-26:
                break
            lam *= 0.5
        else:
            return x, D, refs, False
        moved = np.abs(x_new - x).max()
        x, D, refs = x_new, D_new, refs_new
        if moved <= 1e-14 * max(1.0, np.abs(x).max()) or abs(D) < 1e-28:
            return x, D, refs, True
    return x, D, refs, abs(D) < 1e-20


def _mp_polish(prob: _Problem, x, refs, iters: int = 6):
    """Newton on the squared gap in extended precision; returns (x, gap)."""
    mp = mpmath.mp
    with mpmath.workdps(_MP_DPS):
        xm = [mp.mpf(float(t)) for t in x]

        def sq_gap(xs):
            vals = dict(zip(prob.names, xs))
            if "E" not in vals:
                vals["E"] = mp.mpf(prob.energy)
            zs = _mp_eigvals(prob.spec, vals)
            i, j = _nearest_pair(zs, refs)
            return (zs[i] - zs[j]) ** 2

        D = sq_gap(xm)
        for _ in range(iters):
            if abs(D) < mp.mpf(10) ** (-2 * _MP_DPS + 10):
                break
            J = mp.matrix(2, 2)
            for k in range(2):
                h = mp.mpf(10) ** (-_MP_DPS // 2) * max(1, abs(xm[k]))
                xp = list(xm)
                xn = list(xm)
                xp[k] += h
                xn[k] -= h
                der = (sq_gap(xp) - sq_gap(xn)) / (2 * h)
                J[0, k] = der.real
                J[1, k] = der.imag
            step = mp.lu_solve(J, mp.matrix([-D.real, -D.imag]))
            cand = [xm[0] + step[0], xm[1] + step[1]]
            D_new = sq_gap(cand)
            if abs(D_new) >= abs(D):
                break
            xm, D = cand, D_new
        return [float(t) for t in xm], float(mp.sqrt(abs(D)))


def _parse_params(params: Mapping[str, Sequence[float]], energy: float | None):
    names = list(params)
    if len(names) != 2:
        raise ConfigError("exactly two search parameters are required")
    for name in names:
        if name not in SEARCH_PARAMS:
            raise ConfigError(f"unknown search parameter {name!r}")
        lo, hi = params[name]
        if not lo < hi:
            raise ConfigError(f"empty range for {name}: {lo}..{hi}")
    if "E" not in names and energy is None:
        raise ConfigError("energy must be given when E is not a search parameter")
    return names


def find_ep_numeric(
    spec: DoubleDotSpec,
    params: Mapping[str, Sequence[float]],
    *,
    energy: float | None = None,
    pair: tuple[int, int] | None = None,
    seed: Mapping[str, float] | None = None,
    grid: int = 12,
    tol: float = 1e-10,
) -> BranchPoint:
    """Locate ``z_k = z_l`` in two real parameters.

    ``params`` maps two names from ``v, w, u, L, E`` to search ranges.
    ``pair`` holds closed-state labels (continued by switching the leads on
    from zero); without it the closest eigenvalue pairs at the seed are tried
    and the reported indices refer to the eigenvalues sorted by real part.
    Without ``seed`` the best point of a ``grid x grid`` scan seeds Newton.
    On failure the best candidate is returned with ``converged=False``.
    """
    names = _parse_params(params, energy)
    lo = np.array([params[n][0] for n in names], dtype=float)
    hi = np.array([params[n][1] for n in names], dtype=float)
    prob = _Problem(spec, names, energy, lo, hi)

    def candidate_pairs(x, count):
        # reference eigenvalues of the tracked pair, closest first
        if pair is not None:
            return [prob.labeled_pair(x, pair)]
        z = prob.eigvals(x)
        n = len(z)
        gaps = sorted((abs(z[i] - z[j]), i, j) for i in range(n) for j in range(i + 1, n))
        return [(complex(z[i]), complex(z[j])) for _, i, j in gaps[:count]]

    if seed is not None:
        x0 = prob.clip([seed[n] for n in names])
        starts = [(x0, refs) for refs in candidate_pairs(x0, 3)]
    else:
        axes = [np.linspace(a, b, grid) for a, b in zip(lo, hi)]
        scored = []
        for p in axes[0]:
            for q in axes[1]:
                x = prob.clip([p, q])
                try:
                    za, zb = candidate_pairs(x, 1)[0]
                except (EnergyOutOfBand, AmbiguousPair):
                    continue
                scored.append((abs(za - zb), tuple(x), (za, zb)))
        if not scored:
            raise ConfigError("no valid grid point inside the band")
        scored.sort(key=lambda item: item[0])
        starts = [(np.array(x), refs) for _, x, refs in scored[:4]]

    def inside(x):
        return bool(np.all(x >= lo - 1e-9 * np.abs(lo)) and np.all(x <= hi + 1e-9 * np.abs(hi)))

    best = None
    for x0, refs in starts:
        if abs(refs[0] - refs[1]) == 0.0:
            x, D = x0, 0j
        else:
            x, D, refs, _ = _newton(prob, x0, refs, 0.25 * (hi - lo))
        gap = math.sqrt(abs(D))
        message = ""
        if gap > 0.0 and gap < 1e-4:
            try:
                x_pol, gap_pol = _mp_polish(prob, x, refs)
                x_pol = np.asarray(x_pol)
                if np.abs(x_pol - x).max() < 1e-8 * max(1.0, np.abs(x).max()):
                    x, gap = x_pol, gap_pol
            except (ZeroDivisionError, mpmath.libmp.NoConvergence) as exc:
                message = f"extended-precision polish failed: {exc}"
        good = inside(x) and gap < tol
        if best is None or (good, -gap) > (best[2], -best[3]):
            best = (x, refs, good, gap, message)
        if good:
            break

    x, refs, converged, gap, message = best
    if not converged and not message:
        message = "no convergence; best candidate returned"
    vals = prob.values(x)
    z = eigendecompose(prob.matrix(x)).eigenvalues
    i, j = _nearest_pair(z, refs)
    mean = 0.5 * (z[i] + z[j])
    coincide = abs(vals["E"] - mean.real) < 1e-8 * max(1.0, abs(mean))
    return BranchPoint(
        kind="numeric",
        critical_params={n: float(vals[n]) for n in names},
        E_c=float(vals["E"]),
        coalesced_pair=tuple(pair) if pair is not None else (int(min(i, j)), int(max(i, j))),
        residual=float(gap),
        fixed_point_coincides=bool(coincide),
        converged=bool(converged),
        message=message,
    )
