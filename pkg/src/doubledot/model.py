"""Double-dot system, lead channel and the closed/open Hamiltonians.

The double dot is a left dot, a single-mode wire and a right dot. The wire
level depends on its length through an affine dispersion ``a + b*L`` and is
coupled with strength ``u`` to every level of both dots. Each dot couples to
a semi-infinite tight-binding lead (hopping 1, band ``E = -2 cos k``) with
strength ``v`` (left) or ``w`` (right); the lead touches every level of its
dot with equal amplitude.

Site ordering in all matrices: left levels, wire, right levels.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np

from .errors import EnergyOutOfBand, SpecError

__all__ = [
    "DoubleDotSpec",
    "Channel",
    "ClosedSpectrum",
    "EffectiveHamiltonian",
    "channel_from_energy",
    "build_closed_hamiltonian",
    "closed_spectrum",
    "coupling_vectors",
    "build_effective_hamiltonian",
    "site_effective_hamiltonian",
    "effective_matrix",
]

_PARAM_ALIASES = {"L": "length", "length": "length", "u": "u", "v": "v", "w": "w"}


@dataclass(frozen=True)
class DoubleDotSpec:
    """Closed double dot plus its lead couplings.

    ``w=None`` ties the right coupling to ``v`` (symmetric leads); sweeps
    over ``v`` then move both couplings together.
    """

    left_levels: tuple[float, ...]
    right_levels: tuple[float, ...]
    wire_a: float
    wire_b: float
    length: float
    u: float
    v: float
    w: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "left_levels", tuple(float(x) for x in self.left_levels))
        object.__setattr__(self, "right_levels", tuple(float(x) for x in self.right_levels))
        if not self.left_levels or not self.right_levels:
            raise SpecError("each dot needs at least one level")
        values = [*self.left_levels, *self.right_levels, self.wire_a, self.wire_b, self.length]
        if not all(math.isfinite(x) for x in values):
            raise SpecError("energies and wire dispersion must be finite")
        if self.length < 0:
            raise SpecError(f"length must be non-negative, got {self.length}")
        for name in ("u", "v", "w"):
            x = getattr(self, name)
            if x is None:
                continue
            if not math.isfinite(x) or x < 0:
                raise SpecError(f"{name} must be finite and non-negative, got {x}")

    @property
    def wire_energy(self) -> float:
        return self.wire_a + self.wire_b * self.length

    @property
    def right_coupling(self) -> float:
        return self.v if self.w is None else self.w

    @property
    def dim(self) -> int:
        return len(self.left_levels) + 1 + len(self.right_levels)

    @property
    def wire_index(self) -> int:
        return len(self.left_levels)

    @property
    def mirror_symmetric(self) -> bool:
        """Left and right dots carry identical spectra."""
        return self.left_levels == self.right_levels

    @property
    def symmetric_mode(self) -> bool:
        return self.mirror_symmetric and self.v == self.right_coupling

    @property
    def three_state(self) -> bool:
        return self.dim == 3

    def with_params(self, **params: float) -> "DoubleDotSpec":
        """Copy with some of ``v, w, u, L`` replaced."""
        changes = {}
        for key, value in params.items():
            if key not in _PARAM_ALIASES:
                raise SpecError(f"unknown spec parameter {key!r}")
            changes[_PARAM_ALIASES[key]] = float(value)
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "left_levels": list(self.left_levels),
            "right_levels": list(self.right_levels),
            "wire_a": self.wire_a,
            "wire_b": self.wire_b,
            "length": self.length,
            "u": self.u,
            "v": self.v,
            "w": self.w,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DoubleDotSpec":
        required = ("left_levels", "right_levels", "wire_a", "wire_b", "length", "u", "v")
        missing = [k for k in required if k not in data]
        if missing:
            raise SpecError(f"spec is missing keys: {', '.join(missing)}")
        unknown = set(data) - set(required) - {"w"}
        if unknown:
            raise SpecError(f"unknown spec keys: {', '.join(sorted(unknown))}")
        try:
            w = data.get("w")
            return cls(
                left_levels=tuple(data["left_levels"]),
                right_levels=tuple(data["right_levels"]),
                wire_a=float(data["wire_a"]),
                wire_b=float(data["wire_b"]),
                length=float(data["length"]),
                u=float(data["u"]),
                v=float(data["v"]),
                w=None if w is None else float(w),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(str(exc)) from exc

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class Channel:
    """Propagating lead mode at energy ``E``; ``phase`` is ``exp(ik)``."""

    energy: float
    k: float
    phase: complex

    @property
    def sin_k(self) -> float:
        return self.phase.imag


def channel_from_energy(E: float) -> Channel:
    """Outgoing-wave channel for ``-2 < E < 2``.

    ``Re(phase)`` is set to ``-E/2`` directly so that ``E = -2 cos k`` holds
    exactly in floating point.
    """
    E = float(E)
    if not (-2.0 < E < 2.0):
        raise EnergyOutOfBand(f"E={E} is outside the open band (-2, 2)")
    half = 0.5 * E
    sin_k = math.sqrt((1.0 - half) * (1.0 + half))
    return Channel(energy=E, k=math.acos(-half), phase=complex(-half, sin_k))


def build_closed_hamiltonian(spec: DoubleDotSpec) -> np.ndarray:
    n = spec.dim
    c = spec.wire_index
    H = np.zeros((n, n))
    H[np.arange(n), np.arange(n)] = [*spec.left_levels, spec.wire_energy, *spec.right_levels]
    H[c, :] = spec.u
    H[:, c] = spec.u
    H[c, c] = spec.wire_energy
    return H


@dataclass(frozen=True)
class ClosedSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    eta: float | None = None
    delta_eps: float | None = None

    @property
    def aux_3state(self) -> dict[str, float] | None:
        if self.eta is None:
            return None
        return {"eta": self.eta, "delta_eps": self.delta_eps}


def _fix_sign(vec: np.ndarray, anchor: int, tol: float = 1e-12) -> np.ndarray:
    # wire component positive when present, else first significant component
    if abs(vec[anchor]) > tol:
        pivot = anchor
    else:
        pivot = int(np.flatnonzero(np.abs(vec) > tol)[0])
    return -vec if vec[pivot] < 0 else vec


def closed_spectrum(spec: DoubleDotSpec) -> ClosedSpectrum:
    """Real eigenpairs of the closed double dot, ascending.

    Mirror-symmetric dots are diagonalized per parity sector, so even and
    odd states carry exactly equal (opposite) amplitudes on mirrored sites.
    """
    n = spec.dim
    c = spec.wire_index
    if spec.mirror_symmetric:
        m = len(spec.left_levels)
        levels = np.array(spec.left_levels)
        even = np.diag(np.append(levels, spec.wire_energy))
        even[m, :m] = even[:m, m] = math.sqrt(2.0) * spec.u
        e_vals, e_vecs = np.linalg.eigh(even)
        s = 1.0 / math.sqrt(2.0)
        vals, vecs = [], []
        for j in range(m + 1):
            col = np.zeros(n)
            col[:m] = s * e_vecs[:m, j]
            col[c] = e_vecs[m, j]
            col[c + 1:] = s * e_vecs[:m, j]
            vals.append(e_vals[j])
            vecs.append(col)
        # odd sector is diagonal: the wire does not see antisymmetric combinations
        for i in range(m):
            col = np.zeros(n)
            col[i] = s
            col[c + 1 + i] = -s
            vals.append(levels[i])
            vecs.append(col)
        order = np.argsort(vals, kind="stable")
        eigenvalues = np.asarray(vals)[order]
        eigenvectors = np.column_stack([vecs[i] for i in order])
    else:
        eigenvalues, eigenvectors = np.linalg.eigh(build_closed_hamiltonian(spec))
    eigenvectors = np.column_stack(
        [_fix_sign(eigenvectors[:, j], c) for j in range(n)]
    )
    eta = delta = None
    if spec.three_state:
        delta = 0.5 * (spec.left_levels[0] - spec.wire_energy)
        eta = math.sqrt(delta * delta + 2.0 * spec.u * spec.u)
    return ClosedSpectrum(eigenvalues, eigenvectors, eta, delta)


def _contacts(spec: DoubleDotSpec, closed: ClosedSpectrum) -> tuple[np.ndarray, np.ndarray]:
    c = spec.wire_index
    psi = closed.eigenvectors
    left = psi[:c, :].sum(axis=0)
    right = psi[c + 1:, :].sum(axis=0)
    return left, right


def coupling_vectors(
    spec: DoubleDotSpec, ch: Channel, closed: ClosedSpectrum | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Lead-to-eigenstate couplings ``V_m(E, L)`` and ``V_m(E, R)``.

    Uses the energy-normalized lead amplitude ``sqrt(sin k / 2 pi)`` at the
    contact site.
    """
    closed = closed or closed_spectrum(spec)
    left, right = _contacts(spec, closed)
    amp = math.sqrt(ch.sin_k / (2.0 * math.pi))
    return spec.v * amp * left, spec.right_coupling * amp * right


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """``H_eff(E)`` in the eigenbasis of the closed Hamiltonian."""

    matrix: np.ndarray
    channel: Channel
    spec_hash: str
    closed: ClosedSpectrum = field(repr=False)

    @property
    def energy(self) -> float:
        return self.channel.energy


def effective_matrix(
    spec: DoubleDotSpec, ch: Channel, closed: ClosedSpectrum | None = None
) -> np.ndarray:
    closed = closed or closed_spectrum(spec)
    left, right = _contacts(spec, closed)
    v2 = spec.v * spec.v
    w2 = spec.right_coupling ** 2
    coupling = v2 * np.outer(left, left) + w2 * np.outer(right, right)
    return np.diag(closed.eigenvalues).astype(complex) - ch.phase * coupling


def build_effective_hamiltonian(
    spec: DoubleDotSpec, ch: Channel, closed: ClosedSpectrum | None = None
) -> EffectiveHamiltonian:
    """Open-system Hamiltonian ``E_m delta_mn - (v^2 l_m l_n + w^2 r_m r_n) e^{ik}``.

    ``l_m``/``r_m`` are the contact amplitudes of closed state ``m`` on the
    left/right dot. ``closed`` may be passed in to skip re-diagonalizing
    ``H_B`` on energy sweeps.
    """
    closed = closed or closed_spectrum(spec)
    return EffectiveHamiltonian(
        matrix=effective_matrix(spec, ch, closed),
        channel=ch,
        spec_hash=spec.spec_hash(),
        closed=closed,
    )


def site_effective_hamiltonian(spec: DoubleDotSpec, ch: Channel) -> np.ndarray:
    """``H_eff`` in the site basis: ``H_B`` plus lead self-energies on the dot levels."""
    c = spec.wire_index
    n = spec.dim
    left = np.zeros(n)
    left[:c] = 1.0
    right = np.zeros(n)
    right[c + 1:] = 1.0
    coupling = spec.v ** 2 * np.outer(left, left) + spec.right_coupling ** 2 * np.outer(right, right)
    return build_closed_hamiltonian(spec).astype(complex) - ch.phase * coupling
